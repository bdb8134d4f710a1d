//! Numerical optimization used by the coding constructions: Blahut-Arimoto
//! for channel capacity and rate-distortion, and a small convex-mixing
//! feasibility solver with Caratheodory support bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SfrlError};
use crate::probspace::{DiscreteDistribution, Kernel};

/// Result of a rate-distortion solve: the optimizing test channel plus the
/// achieved operating point.
#[derive(Debug, Clone)]
pub struct RdSolution {
    pub kernel: Kernel,
    /// bits
    pub rate: f64,
    pub distortion: f64,
    pub iterations: usize,
    /// convergence bound on the rate
    pub gap: f64,
}

/// A convex combination of candidate points dominating a target coordinatewise.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixtureSolution {
    /// weights aligned with `support`, summing to 1
    pub weights: Vec<f64>,
    /// indices into the candidate list
    pub support: Vec<usize>,
    /// mixed coordinates, `achieved[j] <= target[j] + tol`
    pub achieved: Vec<f64>,
}

/// Channel capacity in bits via Blahut-Arimoto, certified by the standard
/// duality gap: at any iterate, log2(sum r_x 2^{D_x}) <= C <= max_x D_x.
pub fn blahut_arimoto_capacity(
    kernel: &Kernel,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, DiscreteDistribution)> {
    if tol <= 0.0 {
        return Err(SfrlError::Validation("tolerance must be positive".into()));
    }
    let nx = kernel.input_size();
    let ny = kernel.output_size();
    let mut r = vec![1.0 / nx as f64; nx];
    let mut gap = f64::INFINITY;
    let mut lower = 0.0;
    for iter in 0..max_iter {
        let mut q = vec![0.0; ny];
        for (x, row) in kernel.rows().iter().enumerate() {
            for (y, &p) in row.probs().iter().enumerate() {
                q[y] += r[x] * p;
            }
        }
        // per-input divergence D(p(.|x) || q) in bits
        let mut d = vec![0.0; nx];
        for (x, row) in kernel.rows().iter().enumerate() {
            let mut acc = 0.0;
            for (y, &p) in row.probs().iter().enumerate() {
                if p > 0.0 {
                    acc += p * (p / q[y]).log2();
                }
            }
            d[x] = acc;
        }
        let upper = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let weighted: f64 = r.iter().zip(&d).map(|(&rx, &dx)| rx * 2.0f64.powf(dx)).sum();
        lower = weighted.log2();
        gap = upper - lower;
        if gap <= tol {
            return Ok((lower.max(0.0), DiscreteDistribution::new(r)?));
        }
        for (rx, &dx) in r.iter_mut().zip(&d) {
            *rx *= 2.0f64.powf(dx - lower);
        }
        let sum: f64 = r.iter().sum();
        for rx in r.iter_mut() {
            *rx /= sum;
        }
        let _ = iter;
    }
    Err(SfrlError::Convergence {
        iterations: max_iter,
        gap: gap.max(lower - lower), // last observed gap
    })
}

/// One Blahut-Arimoto fixed-slope solve: returns (kernel, rate, distortion).
/// `allowed[x][y] = false` excludes a transition entirely.
fn ba_fixed_slope(
    source: &DiscreteDistribution,
    distortion: &[Vec<f64>],
    slope: f64,
    inner_iter: usize,
) -> (Vec<Vec<f64>>, f64, f64) {
    let nx = source.alphabet_size();
    let ny = distortion[0].len();
    let mut q = vec![1.0 / ny as f64; ny];
    let mut w = vec![vec![0.0; ny]; nx];
    for _ in 0..inner_iter {
        for x in 0..nx {
            let mut norm = 0.0;
            for y in 0..ny {
                let v = if distortion[x][y].is_finite() {
                    q[y] * 2.0f64.powf(-slope * distortion[x][y])
                } else {
                    0.0
                };
                w[x][y] = v;
                norm += v;
            }
            for y in 0..ny {
                w[x][y] /= norm;
            }
        }
        let mut next_q = vec![0.0; ny];
        for x in 0..nx {
            for y in 0..ny {
                next_q[y] += source.prob(x) * w[x][y];
            }
        }
        let delta: f64 = q.iter().zip(&next_q).map(|(a, b)| (a - b).abs()).sum();
        q = next_q;
        if delta < 1e-15 {
            break;
        }
    }
    let mut rate = 0.0;
    let mut dist = 0.0;
    for x in 0..nx {
        for y in 0..ny {
            let p = source.prob(x) * w[x][y];
            if p > 0.0 {
                rate += p * (w[x][y] / q[y]).log2();
                dist += p * distortion[x][y];
            }
        }
    }
    (w, rate.max(0.0), dist)
}

/// Rate-distortion function R(D) in bits via Blahut-Arimoto with slope
/// bisection; the returned kernel achieves distortion at most D + tol.
pub fn blahut_arimoto_rate_distortion(
    source: &DiscreteDistribution,
    distortion: &[Vec<f64>],
    target_d: f64,
    tol: f64,
    max_iter: usize,
) -> Result<RdSolution> {
    let nx = source.alphabet_size();
    if distortion.len() != nx || distortion.iter().any(|r| r.len() != distortion[0].len()) {
        return Err(SfrlError::Shape("distortion matrix shape mismatch".into()));
    }
    let ny = distortion[0].len();
    for row in distortion {
        for &d in row {
            if d.is_nan() || d < 0.0 {
                return Err(SfrlError::Validation(
                    "distortion entries must be in [0, +inf]".into(),
                ));
            }
        }
        if row.iter().all(|d| !d.is_finite()) {
            return Err(SfrlError::Infeasible(
                "a source symbol has no finite-distortion reproduction".into(),
            ));
        }
    }

    // minimum achievable distortion
    let d_min: f64 = (0..nx)
        .map(|x| {
            source.prob(x)
                * distortion[x]
                    .iter()
                    .cloned()
                    .fold(f64::INFINITY, f64::min)
        })
        .sum();
    if target_d < d_min - 1e-12 {
        return Err(SfrlError::Infeasible(format!(
            "distortion target {target_d} below minimum achievable {d_min}"
        )));
    }

    // zero-rate distortion: best constant reproduction
    let (best_y, d_zero) = (0..ny)
        .map(|y| {
            (
                y,
                (0..nx).map(|x| source.prob(x) * distortion[x][y]).sum::<f64>(),
            )
        })
        .fold((0, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
    if target_d >= d_zero {
        let rows = vec![DiscreteDistribution::point_mass(best_y, ny); nx];
        return Ok(RdSolution {
            kernel: Kernel::new(rows)?,
            rate: 0.0,
            distortion: d_zero,
            iterations: 0,
            gap: 0.0,
        });
    }

    if target_d <= d_min + 1e-9 {
        // restrict to minimum-distortion transitions and minimize rate there
        let restricted: Vec<Vec<f64>> = (0..nx)
            .map(|x| {
                let row_min = distortion[x].iter().cloned().fold(f64::INFINITY, f64::min);
                (0..ny)
                    .map(|y| if distortion[x][y] <= row_min { 0.0 } else { f64::INFINITY })
                    .collect()
            })
            .collect();
        let (w, rate, _) = ba_fixed_slope(source, &restricted, 1.0, max_iter);
        let dist: f64 = (0..nx)
            .map(|x| {
                (0..ny)
                    .map(|y| source.prob(x) * w[x][y] * distortion[x][y])
                    .sum::<f64>()
            })
            .sum();
        return Ok(RdSolution {
            kernel: Kernel::from_rows(&w)?,
            rate,
            distortion: dist,
            iterations: max_iter,
            gap: tol,
        });
    }

    // bisect the slope; distortion decreases as the slope grows
    let inner = max_iter.max(200);
    let mut s_hi = 1.0;
    let mut hi = ba_fixed_slope(source, distortion, s_hi, inner);
    let mut grow = 0;
    while hi.2 > target_d {
        s_hi *= 2.0;
        hi = ba_fixed_slope(source, distortion, s_hi, inner);
        grow += 1;
        if grow > 60 {
            return Err(SfrlError::Convergence {
                iterations: grow,
                gap: hi.2 - target_d,
            });
        }
    }
    let mut s_lo = 0.0;
    let mut best = hi;
    for _ in 0..200 {
        let s_mid = 0.5 * (s_lo + s_hi);
        let mid = ba_fixed_slope(source, distortion, s_mid, inner);
        if mid.2 <= target_d {
            s_hi = s_mid;
            best = mid;
        } else {
            s_lo = s_mid;
        }
        if (s_hi - s_lo) < 1e-12 || (best.2 - target_d).abs() < 1e-11 {
            break;
        }
    }
    let (w, rate, dist) = best;
    if dist > target_d + tol {
        return Err(SfrlError::Convergence {
            iterations: inner,
            gap: dist - target_d,
        });
    }
    Ok(RdSolution {
        kernel: Kernel::from_rows(&w)?,
        rate,
        distortion: dist,
        iterations: inner,
        gap: tol,
    })
}

// ---------------------------------------------------------------------------
// convex mixing
// ---------------------------------------------------------------------------

const SIMPLEX_EPS: f64 = 1e-9;

/// Phase-1 simplex for: find w >= 0, sum w = 1, P^T w <= rhs.
/// Returns weight vector over the points, or None if infeasible.
fn feasible_mixture(points: &[&[f64]], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = points.len();
    let m = rhs.len();
    let rows = m + 1;
    // columns: n weights, m slacks, `rows` artificials, rhs
    let cols = n + m + rows + 1;
    let mut t = vec![vec![0.0; cols]; rows + 1];
    // row 0: sum w = 1
    for i in 0..n {
        t[0][i] = 1.0;
    }
    t[0][cols - 1] = 1.0;
    // rows 1..=m: sum_i w_i p_i[j] + s_j = rhs[j]
    for j in 0..m {
        for i in 0..n {
            t[j + 1][i] = points[i][j];
        }
        t[j + 1][n + j] = 1.0;
        t[j + 1][cols - 1] = rhs[j];
    }
    // normalize signs so rhs >= 0, then add artificials
    for r in 0..rows {
        if t[r][cols - 1] < 0.0 {
            for c in 0..cols {
                t[r][c] = -t[r][c];
            }
        }
        t[r][n + m + r] = 1.0;
    }
    // objective: minimize sum of artificials (stored negated in the last row)
    let obj = rows;
    for r in 0..rows {
        for c in 0..cols {
            t[obj][c] += t[r][c];
        }
    }
    for c in n + m..n + m + rows {
        t[obj][c] = 0.0;
    }
    let mut basis: Vec<usize> = (n + m..n + m + rows).collect();

    // Bland's rule keeps this terminating on degenerate instances
    loop {
        let enter = (0..cols - 1).find(|&c| t[obj][c] > SIMPLEX_EPS);
        let enter = match enter {
            Some(c) => c,
            None => break,
        };
        let mut leave = None;
        let mut best_ratio = f64::INFINITY;
        for r in 0..rows {
            if t[r][enter] > SIMPLEX_EPS {
                let ratio = t[r][cols - 1] / t[r][enter];
                if ratio < best_ratio - SIMPLEX_EPS
                    || (ratio < best_ratio + SIMPLEX_EPS
                        && leave.map(|l: usize| basis[l] > basis[r]).unwrap_or(false))
                {
                    best_ratio = ratio;
                    leave = Some(r);
                }
            }
        }
        let leave = leave?;
        // pivot
        let piv = t[leave][enter];
        for c in 0..cols {
            t[leave][c] /= piv;
        }
        for r in 0..=rows {
            if r != leave {
                let f = t[r][enter];
                if f != 0.0 {
                    for c in 0..cols {
                        t[r][c] -= f * t[leave][c];
                    }
                }
            }
        }
        basis[leave] = enter;
    }

    let objective: f64 = t[obj][cols - 1];
    if objective.abs() > 1e-7 {
        return None;
    }
    let mut w = vec![0.0; n];
    for (r, &b) in basis.iter().enumerate() {
        if b < n {
            w[b] = t[r][cols - 1].max(0.0);
        }
    }
    let sum: f64 = w.iter().sum();
    if sum <= 0.0 {
        return None;
    }
    for wi in w.iter_mut() {
        *wi /= sum;
    }
    Some(w)
}

/// Find a convex combination of `points` whose every coordinate is at most
/// `target + tol`, with support at most dim + 1 (usually smaller after
/// greedy reduction).
pub fn caratheodory_mix(
    points: &[Vec<f64>],
    target: &[f64],
    tol: f64,
) -> Result<MixtureSolution> {
    if points.is_empty() {
        return Err(SfrlError::Validation("no candidate points".into()));
    }
    let m = target.len();
    for p in points {
        if p.len() != m {
            return Err(SfrlError::Shape("point dimension mismatch".into()));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(SfrlError::Validation("non-finite point coordinate".into()));
        }
    }
    let rhs: Vec<f64> = target.iter().map(|t| t + tol).collect();
    let refs: Vec<&[f64]> = points.iter().map(|p| p.as_slice()).collect();
    let w = feasible_mixture(&refs, &rhs).ok_or_else(|| {
        // report the coordinate that is hardest to satisfy
        let worst = (0..m)
            .max_by(|&a, &b| {
                let ra = points.iter().map(|p| p[a]).fold(f64::INFINITY, f64::min) - rhs[a];
                let rb = points.iter().map(|p| p[b]).fold(f64::INFINITY, f64::min) - rhs[b];
                ra.partial_cmp(&rb).unwrap()
            })
            .unwrap_or(0);
        SfrlError::Infeasible(format!(
            "no convex combination dominates the target; coordinate {worst} is binding"
        ))
    })?;

    let mut support: Vec<usize> = (0..points.len()).filter(|&i| w[i] > 1e-12).collect();
    let mut weights: Vec<f64> = support.iter().map(|&i| w[i]).collect();

    // greedy support reduction: drop points while the rest stay feasible
    loop {
        let mut reduced = false;
        if support.len() > 1 {
            for drop in 0..support.len() {
                let keep: Vec<usize> = support
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != drop)
                    .map(|(_, &i)| i)
                    .collect();
                let sub: Vec<&[f64]> = keep.iter().map(|&i| points[i].as_slice()).collect();
                if let Some(sw) = feasible_mixture(&sub, &rhs) {
                    let kept: Vec<usize> = (0..keep.len()).filter(|&j| sw[j] > 1e-12).collect();
                    support = kept.iter().map(|&j| keep[j]).collect();
                    weights = kept.iter().map(|&j| sw[j]).collect();
                    reduced = true;
                    break;
                }
            }
        }
        if !reduced {
            break;
        }
    }

    let sum: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= sum;
    }
    let achieved: Vec<f64> = (0..m)
        .map(|j| {
            support
                .iter()
                .zip(&weights)
                .map(|(&i, &w)| w * points[i][j])
                .sum()
        })
        .collect();
    debug_assert!(support.len() <= m + 1);
    for (j, (&a, &r)) in achieved.iter().zip(&rhs).enumerate() {
        if a > r + 1e-9 {
            return Err(SfrlError::Infeasible(format!(
                "solver returned an infeasible mixture at coordinate {j}"
            )));
        }
    }
    Ok(MixtureSolution {
        weights,
        support,
        achieved,
    })
}
