//! Excess functional information: the exact lower bound from the
//! layered-representation integral, a Monte-Carlo upper estimate built from
//! the codebook construction itself, the modular tightness family, and the
//! maximum-entropy bound for positive-integer random variables.

use serde::Serialize;

use crate::error::{Result, SfrlError};
use crate::pfr::PfrCodebook;
use crate::probspace::{DiscreteDistribution, JointDistribution};

const INITIAL_POINTS: usize = 64;

/// Bounds report for one joint distribution.
#[derive(Debug, Clone, Serialize)]
pub struct EfiReport {
    /// exact lower bound on Psi(X -> Y)
    pub lower_bound: f64,
    /// codebook-based estimate of H(Y|Z) - I(X;Y), an upper bound on Psi
    pub upper_estimate: f64,
    pub upper_std_error: f64,
    pub i_xy: f64,
    /// log2(I+1) + 4
    pub sfrl_bound: f64,
    /// binary output alphabet, where lower and upper coincide
    pub equality_case: bool,
    pub pass: bool,
}

/// The tightness family: X uniform on [0 : 2^k), Y = (X + V) mod 2^k with a
/// dyadic-tailed noise V.
#[derive(Debug, Clone)]
pub struct LbExampleFamily {
    pub k: u32,
    pub gamma: f64,
    pub p_v: DiscreteDistribution,
    pub h_v: f64,
    pub h_v_closed: f64,
    pub i_xy: f64,
    pub i_xy_closed: f64,
    pub psi_lb: f64,
}

/// Exact evaluation of the lower bound
/// -sum_y int_0^1 Phi_y(t) log2 Phi_y(t) dt - I(X;Y), with
/// Phi_y(t) = P_X{p(y|X) >= t} piecewise constant between the sorted values
/// of p(y|x); the integral is a finite sum over segments.
pub fn psi_lower_bound(joint: &JointDistribution) -> Result<f64> {
    if joint.num_axes() != 2 {
        return Err(SfrlError::Shape("expected a bivariate joint".into()));
    }
    let p_x = joint.marginal(0)?;
    let nx = p_x.alphabet_size();
    let ny = joint.shape()[1];
    let mut integral_total = 0.0;
    for y in 0..ny {
        // (p(y|x), p_X(x)) pairs over the source support
        let mut vals: Vec<(f64, f64)> = (0..nx)
            .filter(|&x| p_x.prob(x) > 0.0)
            .map(|x| (joint.prob(&[x, y]) / p_x.prob(x), p_x.prob(x)))
            .collect();
        vals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        // tail mass S_i = P_X{p(y|X) >= v_i}; on (v_{i-1}, v_i] the
        // survival function equals S_i
        let mut tail: f64 = vals.iter().map(|v| v.1).sum();
        let mut prev_v = 0.0;
        let mut i = 0;
        while i < vals.len() {
            let v = vals[i].0;
            if v > prev_v && tail > 0.0 {
                integral_total += (v - prev_v) * tail * tail.log2();
            }
            // drop all points with this exact value from the tail
            let mut mass = 0.0;
            while i < vals.len() && vals[i].0 == v {
                mass += vals[i].1;
                i += 1;
            }
            tail -= mass;
            prev_v = v;
        }
    }
    Ok((-integral_total - joint.mutual_information()?).max(0.0))
}

fn source_and_rows(joint: &JointDistribution) -> Result<(DiscreteDistribution, Vec<DiscreteDistribution>, DiscreteDistribution)> {
    let p_x = joint.marginal(0)?;
    let p_y = joint.marginal(1)?;
    let nx = p_x.alphabet_size();
    let ny = p_y.alphabet_size();
    let mut rows = Vec::with_capacity(nx);
    for x in 0..nx {
        let px = p_x.prob(x);
        let row = if px > 0.0 {
            DiscreteDistribution::new((0..ny).map(|y| joint.prob(&[x, y]) / px).collect())?
        } else {
            p_y.clone()
        };
        rows.push(row);
    }
    Ok((p_x, rows, p_y))
}

/// Monte Carlo over codebooks z: exact H(g(X,z)) per realization by
/// enumeration over x, averaged to estimate H(Y|Z); returns
/// (estimate of H(Y|Z) - I, standard error).
pub fn psi_upper_estimate(joint: &JointDistribution, trials: usize, seed: u64) -> Result<(f64, f64)> {
    if joint.num_axes() != 2 {
        return Err(SfrlError::Shape("expected a bivariate joint".into()));
    }
    if trials < 2 {
        return Err(SfrlError::Validation("trials must be at least 2".into()));
    }
    let (p_x, rows, p_y) = source_and_rows(joint)?;
    let i_xy = joint.mutual_information()?;
    let nx = p_x.alphabet_size();
    let ny = p_y.alphabet_size();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for s in 0..trials as u64 {
        let mut cb = PfrCodebook::new_discrete(seed, s, p_y.clone(), INITIAL_POINTS);
        let mut push = vec![0.0f64; ny];
        for x in 0..nx {
            if p_x.prob(x) > 0.0 {
                push[cb.select(&rows[x])?.y] += p_x.prob(x);
            }
        }
        let h: f64 = push
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.log2())
            .sum();
        sum += h;
        sum_sq += h * h;
    }
    let n = trials as f64;
    let mean = sum / n;
    let var = ((sum_sq - sum * sum / n) / (n - 1.0)).max(0.0);
    Ok((mean - i_xy, (var / n).sqrt()))
}

/// Full bounds report for one joint.
pub fn efi_report(joint: &JointDistribution, trials: usize, seed: u64) -> Result<EfiReport> {
    let lower_bound = psi_lower_bound(joint)?;
    let (upper_estimate, upper_std_error) = psi_upper_estimate(joint, trials, seed)?;
    let i_xy = joint.mutual_information()?;
    let sfrl_bound = (i_xy + 1.0).log2() + 4.0;
    let equality_case = joint.shape()[1] == 2;
    let slack = 3.0 * upper_std_error;
    let mut pass = lower_bound <= upper_estimate + slack && upper_estimate <= sfrl_bound + slack;
    if equality_case {
        pass = pass && (upper_estimate - lower_bound).abs() <= slack;
    }
    Ok(EfiReport {
        lower_bound,
        upper_estimate,
        upper_std_error,
        i_xy,
        sfrl_bound,
        equality_case,
        pass,
    })
}

/// Maximum-entropy bound for a positive-integer random variable:
/// H(Theta) <= E[log2 Theta] + log2(E[log2 Theta] + 1) + 1.
pub fn entropy_bound(mean_log: f64) -> Result<f64> {
    if !mean_log.is_finite() || mean_log < 0.0 {
        return Err(SfrlError::Validation(format!(
            "mean_log = {mean_log} must be finite and nonnegative"
        )));
    }
    Ok(mean_log + (mean_log + 1.0).log2() + 1.0)
}

/// ceil(log2(v+1)) with the convention ceil(log2 1) = 0.
fn ceil_log2(v1: u64) -> u32 {
    let bits = 64 - v1.leading_zeros();
    if v1.is_power_of_two() {
        bits - 1
    } else {
        bits
    }
}

/// Build the tightness family at modulus 2^k; both the entropy of V and the
/// mutual information are computed directly and from the closed forms, which
/// must agree to 1e-9.
pub fn lb_example_build(k: u32) -> Result<LbExampleFamily> {
    if k > 20 {
        return Err(SfrlError::Size(format!("k = {k} exceeds the guard of 20")));
    }
    if k == 0 {
        // degenerate single-symbol noise
        let p_v = DiscreteDistribution::point_mass(0, 1);
        return Ok(LbExampleFamily {
            k,
            gamma: 1.0,
            p_v,
            h_v: 0.0,
            h_v_closed: 0.0,
            i_xy: 0.0,
            i_xy_closed: 0.0,
            psi_lb: 0.0,
        });
    }
    let size = 1u64 << k;
    // gamma = 2^(k-1) (k+2); weights 2^(k - ceil(log2(v+1))) sum to gamma
    // exactly in integers
    let gamma_int = (1u64 << (k - 1)) * (k as u64 + 2);
    let weights: Vec<u64> = (0..size).map(|v| 1u64 << (k - ceil_log2(v + 1))).collect();
    let total: u64 = weights.iter().sum();
    debug_assert_eq!(total, gamma_int);
    let gamma = gamma_int as f64;
    let p_v = DiscreteDistribution::new(weights.iter().map(|&w| w as f64 / gamma).collect())?;
    let h_v = p_v.entropy();
    let kf = f64::from(k);
    let h_v_closed = 0.5 * kf + (kf + 2.0).log2() - 1.5 + 1.0 / (kf + 2.0);
    let i_xy = kf - h_v;
    let i_xy_closed = kf - h_v_closed;
    if (h_v - h_v_closed).abs() > 1e-9 {
        return Err(SfrlError::Domain(format!(
            "closed-form H(V) disagrees with direct computation: {h_v} vs {h_v_closed}"
        )));
    }

    // By the cyclic structure the survival function Phi_y is the same for
    // every y, with p(y|x) ranging over the values of p_V under a uniform
    // X; the lower bound reduces to -2^k * integral - I.
    let mut vals: Vec<f64> = p_v.probs().to_vec();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = size as f64;
    let mut integral = 0.0;
    let mut tail = 1.0f64;
    let mut prev_v = 0.0;
    let mut i = 0;
    while i < vals.len() {
        let v = vals[i];
        if v > prev_v && tail > 0.0 {
            integral += (v - prev_v) * tail * tail.log2();
        }
        let mut count = 0u64;
        while i < vals.len() && vals[i] == v {
            count += 1;
            i += 1;
        }
        tail -= count as f64 / n;
        prev_v = v;
    }
    let psi_lb = (-(n * integral) - i_xy).max(0.0);
    Ok(LbExampleFamily {
        k,
        gamma,
        p_v,
        h_v,
        h_v_closed,
        i_xy,
        i_xy_closed,
        psi_lb,
    })
}

impl LbExampleFamily {
    /// Materialize the (X, Y) joint; guarded to modest k to keep the table
    /// at most a few million entries.
    pub fn joint(&self) -> Result<JointDistribution> {
        if self.k > 10 {
            return Err(SfrlError::Size(format!(
                "materializing the joint at k = {} would need {} entries",
                self.k,
                1u64 << (2 * self.k)
            )));
        }
        let size = 1usize << self.k;
        let mut probs = vec![0.0f64; size * size];
        for x in 0..size {
            for v in 0..size {
                let y = (x + v) % size;
                probs[x * size + y] = self.p_v.prob(v) / size as f64;
            }
        }
        JointDistribution::new(probs, vec![size, size])
    }
}
