//! Channels with state known at the encoder: constructively orthogonalize
//! the auxiliary U from the state S by replacing the shared randomness with
//! the induced function table V (a finite, state-independent object), and
//! verify the information chain that reduces the problem to a point-to-point
//! channel.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Result, SfrlError};
use crate::pfr::PfrCodebook;
use crate::probspace::{DiscreteDistribution, JointDistribution, Kernel};

const INITIAL_POINTS: usize = 64;

/// A state-dependent channel instance: state law, auxiliary kernel, the
/// deterministic input map x(u, s), and the channel p(y | x, s).
pub struct GpSetup {
    pub p_s: DiscreteDistribution,
    pub p_u_given_s: Kernel,
    /// x_map[u][s] = channel input
    pub x_map: Vec<Vec<usize>>,
    /// rows indexed by x * |S| + s
    pub p_y_given_xs: Kernel,
    pub x_size: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct GpReport {
    pub i_uy: f64,
    pub i_us: f64,
    pub h_u_given_v: f64,
    pub h_u_given_v_se: f64,
    pub i_vy: f64,
    pub i_vy_se: f64,
    /// I(U;Y) - I(U;S) - log2(I(U;S)+1) - 4
    pub rate_floor: f64,
    pub chain_ok: bool,
    pub selection_bound_ok: bool,
    pub trials: usize,
    pub pass: bool,
}

impl GpSetup {
    pub fn new(
        p_s: DiscreteDistribution,
        p_u_given_s: Kernel,
        x_map: Vec<Vec<usize>>,
        p_y_given_xs: Kernel,
        x_size: usize,
    ) -> Result<Self> {
        let ns = p_s.alphabet_size();
        let nu = p_u_given_s.output_size();
        if p_u_given_s.input_size() != ns {
            return Err(SfrlError::Shape("p_u_given_s rows must index states".into()));
        }
        if x_map.len() != nu || x_map.iter().any(|row| row.len() != ns) {
            return Err(SfrlError::Shape("x_map must be |U| x |S|".into()));
        }
        if x_map.iter().flatten().any(|&x| x >= x_size) {
            return Err(SfrlError::Shape("x_map entry out of range".into()));
        }
        if p_y_given_xs.input_size() != x_size * ns {
            return Err(SfrlError::Shape(
                "p_y_given_xs must have |X| * |S| rows".into(),
            ));
        }
        Ok(Self {
            p_s,
            p_u_given_s,
            x_map,
            p_y_given_xs,
            x_size,
        })
    }

    fn channel_row(&self, x: usize, s: usize) -> &DiscreteDistribution {
        self.p_y_given_xs.row(x * self.p_s.alphabet_size() + s)
    }

    /// Marginal law of U.
    pub fn p_u(&self) -> Result<DiscreteDistribution> {
        self.p_u_given_s.output_marginal(&self.p_s)
    }

    /// Exact joint of (U, S).
    pub fn joint_us(&self) -> Result<JointDistribution> {
        // (axis 0 = U, axis 1 = S) for mutual information
        let ns = self.p_s.alphabet_size();
        let nu = self.p_u_given_s.output_size();
        let mut probs = vec![0.0f64; nu * ns];
        for s in 0..ns {
            for u in 0..nu {
                probs[u * ns + s] = self.p_s.prob(s) * self.p_u_given_s.row(s).prob(u);
            }
        }
        JointDistribution::new(probs, vec![nu, ns])
    }

    /// Exact joint of (U, Y) through x(u, s) and the channel.
    pub fn joint_uy(&self) -> Result<JointDistribution> {
        let ns = self.p_s.alphabet_size();
        let nu = self.p_u_given_s.output_size();
        let ny = self.p_y_given_xs.output_size();
        let mut probs = vec![0.0f64; nu * ny];
        for s in 0..ns {
            for u in 0..nu {
                let pus = self.p_s.prob(s) * self.p_u_given_s.row(s).prob(u);
                if pus == 0.0 {
                    continue;
                }
                let row = self.channel_row(self.x_map[u][s], s);
                for y in 0..ny {
                    probs[u * ny + y] += pus * row.prob(y);
                }
            }
        }
        JointDistribution::new(probs, vec![nu, ny])
    }
}

/// The achievable-rate floor I(U;Y) - I(U;S) - log2(I(U;S)+1) - 4;
/// negative values are reported as-is.
pub fn gp_rate_gap(setup: &GpSetup) -> Result<f64> {
    let i_uy = setup.joint_uy()?.mutual_information()?;
    let i_us = setup.joint_us()?.mutual_information()?;
    Ok(i_uy - i_us - (i_us + 1.0).log2() - 4.0)
}

/// Monte Carlo over codebooks: per trial the function table V = z |-> (s ->
/// u) is drawn, and H(U|V=v), p(Y|V=v) are computed exactly by enumeration
/// over states; aggregates estimate H(U|V) and I(V;Y).
pub fn gp_reduce(setup: &GpSetup, trials: usize, seed: u64) -> Result<GpReport> {
    if trials < 10_000 {
        return Err(SfrlError::Validation(format!(
            "trials = {trials} below minimum 10000"
        )));
    }
    let ns = setup.p_s.alphabet_size();
    let nu = setup.p_u_given_s.output_size();
    let ny = setup.p_y_given_xs.output_size();
    if (nu as f64).powi(ns as i32) > 1e6 {
        return Err(SfrlError::Size(format!(
            "function-table alphabet |U|^|S| = {nu}^{ns} exceeds 1e6"
        )));
    }
    let p_u = setup.p_u()?;
    let i_uy = setup.joint_uy()?.mutual_information()?;
    let i_us = setup.joint_us()?.mutual_information()?;

    // deduplicate tables only to confirm V is a finite object; the per-trial
    // statistics are exact functions of the table
    let mut table_ids: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut h_u_sum = 0.0;
    let mut h_u_sq = 0.0;
    let mut h_y_sum = 0.0;
    let mut h_y_sq = 0.0;
    let mut p_y_bar = vec![0.0f64; ny];
    for t in 0..trials as u64 {
        let mut cb = PfrCodebook::new_discrete(seed, t, p_u.clone(), INITIAL_POINTS);
        let mut table = Vec::with_capacity(ns);
        for s in 0..ns {
            table.push(cb.select(setup.p_u_given_s.row(s))?.y);
        }
        // H(U | V = this table): pushforward of p_S through the table
        let mut pu_given_v = vec![0.0f64; nu];
        let mut py_given_v = vec![0.0f64; ny];
        for s in 0..ns {
            let ps = setup.p_s.prob(s);
            if ps == 0.0 {
                continue;
            }
            let u = table[s];
            pu_given_v[u] += ps;
            let row = setup.channel_row(setup.x_map[u][s], s);
            for y in 0..ny {
                py_given_v[y] += ps * row.prob(y);
            }
        }
        let h = |p: &[f64]| -> f64 {
            p.iter()
                .filter(|&&q| q > 0.0)
                .map(|&q| -q * q.log2())
                .sum()
        };
        let hu = h(&pu_given_v);
        let hy = h(&py_given_v);
        h_u_sum += hu;
        h_u_sq += hu * hu;
        h_y_sum += hy;
        h_y_sq += hy * hy;
        for y in 0..ny {
            p_y_bar[y] += py_given_v[y];
        }
        let next_id = table_ids.len();
        table_ids.entry(table).or_insert(next_id);
    }
    let n = trials as f64;
    let mean_se = |sum: f64, sq: f64| {
        let mean = sum / n;
        let var = ((sq - sum * sum / n) / (n - 1.0)).max(0.0);
        (mean, (var / n).sqrt())
    };
    let (h_u_given_v, h_u_given_v_se) = mean_se(h_u_sum, h_u_sq);
    let (h_y_given_v, h_y_given_v_se) = mean_se(h_y_sum, h_y_sq);
    for y in 0..ny {
        p_y_bar[y] /= n;
    }
    let h_y: f64 = p_y_bar
        .iter()
        .filter(|&&q| q > 0.0)
        .map(|&q| -q * q.log2())
        .sum();
    let i_vy = h_y - h_y_given_v;
    let i_vy_se = h_y_given_v_se;

    let chain_ok = i_vy >= i_uy - h_u_given_v - 3.0 * (i_vy_se + h_u_given_v_se);
    let selection_bound = i_us + (i_us + 1.0).log2() + 4.0;
    let selection_bound_ok = h_u_given_v <= selection_bound + 3.0 * h_u_given_v_se;
    Ok(GpReport {
        i_uy,
        i_us,
        h_u_given_v,
        h_u_given_v_se,
        i_vy,
        i_vy_se,
        rate_floor: i_uy - i_us - (i_us + 1.0).log2() - 4.0,
        chain_ok,
        selection_bound_ok,
        trials,
        pass: chain_ok && selection_bound_ok,
    })
}
