//! Finite probability distributions, joints and conditional kernels,
//! plus information measures in bits (base-2 logarithms throughout).

use serde::{Deserialize, Serialize};

use crate::error::{Result, SfrlError};

/// Construction tolerance: vectors whose total mass deviates from 1 by more
/// than this are rejected; within it they are renormalized.
pub const NORM_TOL: f64 = 1e-12;

fn xlog2x(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        p * p.log2()
    }
}

/// Binary entropy h2(p) in bits.
pub fn binary_entropy(p: f64) -> f64 {
    -xlog2x(p) - xlog2x(1.0 - p)
}

/// A probability mass function over a finite alphabet `0..alphabet_size()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(SfrlError::Validation("empty probability vector".into()));
        }
        let mut sum = 0.0;
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(SfrlError::Validation(format!(
                    "entry {i} is {p}, expected a nonnegative real"
                )));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > NORM_TOL {
            return Err(SfrlError::Validation(format!(
                "total mass {sum} deviates from 1 by more than {NORM_TOL}"
            )));
        }
        let probs = probs.into_iter().map(|p| p / sum).collect();
        Ok(Self { probs })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn point_mass(symbol: usize, n: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[symbol] = 1.0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn alphabet_size(&self) -> usize {
        self.probs.len()
    }

    pub fn prob(&self, symbol: usize) -> f64 {
        self.probs[symbol]
    }

    /// Support symbols (positive mass).
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, _)| i)
    }

    /// Shannon entropy in bits, with 0 log 0 = 0.
    pub fn entropy(&self) -> f64 {
        -self.probs.iter().map(|&p| xlog2x(p)).sum::<f64>()
    }

    /// KL divergence D(self || q) in bits; +inf when the support of `self`
    /// escapes the support of `q`.
    pub fn kl_divergence(&self, q: &DiscreteDistribution) -> Result<f64> {
        if self.alphabet_size() != q.alphabet_size() {
            return Err(SfrlError::Shape(format!(
                "alphabet sizes {} and {} differ",
                self.alphabet_size(),
                q.alphabet_size()
            )));
        }
        let mut d = 0.0;
        for (&p, &q) in self.probs.iter().zip(q.probs.iter()) {
            if p == 0.0 {
                continue;
            }
            if q == 0.0 {
                return Ok(f64::INFINITY);
            }
            d += p * (p / q).log2();
        }
        Ok(d.max(0.0))
    }
}

/// A joint pmf over a product of finite alphabets, stored flat in row-major
/// order. Two axes for ordinary (X,Y) joints; more for multiterminal use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    probs: Vec<f64>,
    shape: Vec<usize>,
}

impl JointDistribution {
    pub fn new(probs: Vec<f64>, shape: Vec<usize>) -> Result<Self> {
        let expect: usize = shape.iter().product();
        if shape.is_empty() || expect == 0 {
            return Err(SfrlError::Shape("empty shape".into()));
        }
        if probs.len() != expect {
            return Err(SfrlError::Shape(format!(
                "{} entries for shape {:?} (expected {expect})",
                probs.len(),
                shape
            )));
        }
        let mut sum = 0.0;
        for &p in &probs {
            if !p.is_finite() || p < 0.0 {
                return Err(SfrlError::Validation(format!(
                    "entry {p} is not a nonnegative real"
                )));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > NORM_TOL {
            return Err(SfrlError::Validation(format!(
                "total mass {sum} deviates from 1 by more than {NORM_TOL}"
            )));
        }
        let probs = probs.into_iter().map(|p| p / sum).collect();
        Ok(Self { probs, shape })
    }

    pub fn from_matrix(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map(|r| r.len()).unwrap_or(0);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(SfrlError::Shape("ragged matrix".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(flat, vec![rows.len(), cols])
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn num_axes(&self) -> usize {
        self.shape.len()
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.shape.len()];
        for i in (0..self.shape.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.shape[i + 1];
        }
        strides
    }

    pub fn prob(&self, index: &[usize]) -> f64 {
        let strides = self.strides();
        let flat: usize = index.iter().zip(&strides).map(|(i, s)| i * s).sum();
        self.probs[flat]
    }

    /// Entropy of the full joint in bits.
    pub fn entropy(&self) -> f64 {
        -self.probs.iter().map(|&p| xlog2x(p)).sum::<f64>()
    }

    /// Marginal distribution on a single axis.
    pub fn marginal(&self, axis: usize) -> Result<DiscreteDistribution> {
        let kept = self.marginalize_keep(&[axis])?;
        DiscreteDistribution::new(kept.probs)
    }

    /// Marginal joint over a subset of axes (kept in the order given).
    pub fn marginalize_keep(&self, axes: &[usize]) -> Result<JointDistribution> {
        for &a in axes {
            if a >= self.shape.len() {
                return Err(SfrlError::Shape(format!(
                    "axis {a} out of range for shape {:?}",
                    self.shape
                )));
            }
        }
        let out_shape: Vec<usize> = axes.iter().map(|&a| self.shape[a]).collect();
        let out_len: usize = out_shape.iter().product();
        let mut out = vec![0.0; out_len];
        let strides = self.strides();
        let mut index = vec![0usize; self.shape.len()];
        for flat in 0..self.probs.len() {
            let mut rem = flat;
            for (i, &s) in strides.iter().enumerate() {
                index[i] = rem / s;
                rem %= s;
            }
            let mut out_flat = 0usize;
            for &a in axes {
                out_flat = out_flat * self.shape[a] + index[a];
            }
            out[out_flat] += self.probs[flat];
        }
        JointDistribution::new(out, out_shape)
    }

    /// Entropy of the marginal on a subset of axes.
    pub fn subset_entropy(&self, axes: &[usize]) -> Result<f64> {
        Ok(self.marginalize_keep(axes)?.entropy())
    }

    /// Mutual information I(axis 0; axis 1) of a two-axis joint, in bits.
    pub fn mutual_information(&self) -> Result<f64> {
        if self.shape.len() != 2 {
            return Err(SfrlError::Shape(format!(
                "mutual information needs a 2-axis joint, got {:?}",
                self.shape
            )));
        }
        let hx = self.marginal(0)?.entropy();
        let hy = self.marginal(1)?.entropy();
        Ok((hx + hy - self.entropy()).max(0.0))
    }

    /// H(other axes | given axis) = H(joint) - H(marginal on the given axis).
    pub fn conditional_entropy(&self, given_axis: usize) -> Result<f64> {
        if given_axis >= self.shape.len() {
            return Err(SfrlError::Shape(format!(
                "axis {given_axis} out of range for shape {:?}",
                self.shape
            )));
        }
        Ok((self.entropy() - self.marginal(given_axis)?.entropy()).max(0.0))
    }

    /// Conditional mutual information I(A; B | C) over axis subsets, in bits.
    /// C may be empty, giving plain mutual information between axis groups.
    pub fn conditional_mutual_information(
        &self,
        a: &[usize],
        b: &[usize],
        c: &[usize],
    ) -> Result<f64> {
        let ac: Vec<usize> = a.iter().chain(c).copied().collect();
        let bc: Vec<usize> = b.iter().chain(c).copied().collect();
        let abc: Vec<usize> = a.iter().chain(b).chain(c).copied().collect();
        let h_ac = self.subset_entropy(&ac)?;
        let h_bc = self.subset_entropy(&bc)?;
        let h_abc = self.subset_entropy(&abc)?;
        let h_c = if c.is_empty() {
            0.0
        } else {
            self.subset_entropy(c)?
        };
        Ok((h_ac + h_bc - h_abc - h_c).max(0.0))
    }

    /// Conditional distribution of `target` axis given fixed values on the
    /// `given` axes. Errors if the conditioning event has zero mass.
    pub fn conditional(
        &self,
        target: usize,
        given: &[(usize, usize)],
    ) -> Result<DiscreteDistribution> {
        let n = self.shape[target];
        let strides = self.strides();
        let mut out = vec![0.0; n];
        let mut index = vec![0usize; self.shape.len()];
        'outer: for flat in 0..self.probs.len() {
            let mut rem = flat;
            for (i, &s) in strides.iter().enumerate() {
                index[i] = rem / s;
                rem %= s;
            }
            for &(axis, value) in given {
                if index[axis] != value {
                    continue 'outer;
                }
            }
            out[index[target]] += self.probs[flat];
        }
        let total: f64 = out.iter().sum();
        if total <= 0.0 {
            return Err(SfrlError::Domain(
                "conditioning event has zero probability".into(),
            ));
        }
        DiscreteDistribution::new(out.into_iter().map(|p| p / total).collect())
    }
}

/// A conditional distribution P(Y|X): one row per input symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    rows: Vec<DiscreteDistribution>,
}

impl Kernel {
    pub fn new(rows: Vec<DiscreteDistribution>) -> Result<Self> {
        if rows.is_empty() {
            return Err(SfrlError::Shape("kernel with no rows".into()));
        }
        let out = rows[0].alphabet_size();
        if rows.iter().any(|r| r.alphabet_size() != out) {
            return Err(SfrlError::Shape("kernel rows of unequal size".into()));
        }
        Ok(Self { rows })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(
            rows.iter()
                .map(|r| DiscreteDistribution::new(r.clone()))
                .collect::<Result<_>>()?,
        )
    }

    /// Binary symmetric channel with crossover probability `p`.
    pub fn bsc(p: f64) -> Self {
        Self::from_rows(&[vec![1.0 - p, p], vec![p, 1.0 - p]]).unwrap()
    }

    /// Identity channel on `n` symbols.
    pub fn identity(n: usize) -> Self {
        Self::new((0..n).map(|i| DiscreteDistribution::point_mass(i, n)).collect()).unwrap()
    }

    pub fn row(&self, x: usize) -> &DiscreteDistribution {
        &self.rows[x]
    }

    pub fn rows(&self) -> &[DiscreteDistribution] {
        &self.rows
    }

    pub fn input_size(&self) -> usize {
        self.rows.len()
    }

    pub fn output_size(&self) -> usize {
        self.rows[0].alphabet_size()
    }

    /// Joint distribution of (X, Y) when X is drawn from `source`.
    pub fn joint(&self, source: &DiscreteDistribution) -> Result<JointDistribution> {
        if source.alphabet_size() != self.input_size() {
            return Err(SfrlError::Shape(format!(
                "source alphabet {} does not match kernel input {}",
                source.alphabet_size(),
                self.input_size()
            )));
        }
        let mut flat = Vec::with_capacity(self.input_size() * self.output_size());
        for (x, row) in self.rows.iter().enumerate() {
            for &p in row.probs() {
                flat.push(source.prob(x) * p);
            }
        }
        JointDistribution::new(flat, vec![self.input_size(), self.output_size()])
    }

    /// Output marginal under `source`.
    pub fn output_marginal(&self, source: &DiscreteDistribution) -> Result<DiscreteDistribution> {
        self.joint(source)?.marginal(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bern(p: f64) -> DiscreteDistribution {
        DiscreteDistribution::new(vec![1.0 - p, p]).unwrap()
    }

    #[test]
    fn entropy_uniform_and_point_mass() {
        assert_eq!(DiscreteDistribution::uniform(4).entropy(), 2.0);
        assert_eq!(DiscreteDistribution::point_mass(1, 3).entropy(), 0.0);
        let dyadic = DiscreteDistribution::new(vec![0.5, 0.25, 0.25]).unwrap();
        assert!((dyadic.entropy() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_mass() {
        assert!(DiscreteDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(DiscreteDistribution::new(vec![-0.1, 1.1]).is_err());
        assert!(DiscreteDistribution::new(vec![]).is_err());
    }

    #[test]
    fn kl_examples() {
        let p = bern(0.5);
        assert_eq!(p.kl_divergence(&p).unwrap(), 0.0);
        // D(Bern(0.5) || Bern(0.25)) = 0.5 log2 2 + 0.5 log2 (2/3)
        let expect = 0.5 * 2.0f64.log2() + 0.5 * (2.0 / 3.0f64).log2();
        assert!((bern(0.5).kl_divergence(&bern(0.25)).unwrap() - expect).abs() < 1e-12);
        assert!((expect - 0.2075).abs() < 1e-4);
        assert!(bern(1.0).kl_divergence(&bern(0.0)).unwrap().is_infinite());
        let three = DiscreteDistribution::uniform(3);
        assert!(matches!(
            p.kl_divergence(&three),
            Err(SfrlError::Shape(_))
        ));
    }

    #[test]
    fn mutual_information_examples() {
        let product = JointDistribution::from_matrix(&[
            vec![0.25, 0.25],
            vec![0.25, 0.25],
        ])
        .unwrap();
        assert!(product.mutual_information().unwrap().abs() < 1e-12);

        let j = JointDistribution::from_matrix(&[vec![0.4, 0.1], vec![0.1, 0.4]]).unwrap();
        let expect = 1.0 - binary_entropy(0.2);
        assert!((j.mutual_information().unwrap() - expect).abs() < 1e-12);
        assert!((expect - 0.27807).abs() < 1e-5);

        let eq = JointDistribution::from_matrix(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert!((eq.mutual_information().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mi_matches_average_kl() {
        let j = JointDistribution::from_matrix(&[vec![0.3, 0.1], vec![0.2, 0.4]]).unwrap();
        let px = j.marginal(0).unwrap();
        let py = j.marginal(1).unwrap();
        let mut avg = 0.0;
        for x in 0..2 {
            let row = j.conditional(1, &[(0, x)]).unwrap();
            avg += px.prob(x) * row.kl_divergence(&py).unwrap();
        }
        assert!((j.mutual_information().unwrap() - avg).abs() < 1e-10);
    }

    #[test]
    fn conditional_entropy_examples() {
        let eq = JointDistribution::from_matrix(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert!(eq.conditional_entropy(0).unwrap().abs() < 1e-12);
        let product = JointDistribution::from_matrix(&[
            vec![0.25, 0.25],
            vec![0.25, 0.25],
        ])
        .unwrap();
        assert!((product.conditional_entropy(0).unwrap() - 1.0).abs() < 1e-12);
        let j = JointDistribution::from_matrix(&[vec![0.4, 0.1], vec![0.1, 0.4]]).unwrap();
        assert!((j.conditional_entropy(0).unwrap() - binary_entropy(0.2)).abs() < 1e-12);
        assert!(j.conditional_entropy(7).is_err());
    }

    #[test]
    fn non_two_axis_mi_rejected() {
        let j = JointDistribution::new(vec![0.125; 8], vec![2, 2, 2]).unwrap();
        assert!(j.mutual_information().is_err());
        // but subset machinery works
        let mi = j.conditional_mutual_information(&[0], &[1], &[2]).unwrap();
        assert!(mi.abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn chain_rule_holds(raw in proptest::collection::vec(0.01f64..1.0, 4..=12)) {
            let sum: f64 = raw.iter().sum();
            let flat: Vec<f64> = raw.iter().map(|v| v / sum).collect();
            let rows = flat.len() / 2;
            let j = JointDistribution::new(flat[..rows * 2].to_vec(), vec![rows, 2]);
            prop_assume!(j.is_ok());
            let j = match j { Ok(j) => j, Err(_) => unreachable!() };
            let h_joint = j.entropy();
            let h_x = j.marginal(0).unwrap().entropy();
            let h_y_given_x = j.conditional_entropy(0).unwrap();
            prop_assert!((h_joint - (h_x + h_y_given_x)).abs() < 1e-10);
            prop_assert!(j.mutual_information().unwrap() >= 0.0);
        }

        #[test]
        fn gibbs_inequality(
            p_raw in proptest::collection::vec(0.01f64..1.0, 5),
            q_raw in proptest::collection::vec(0.01f64..1.0, 5),
        ) {
            let ps: f64 = p_raw.iter().sum();
            let qs: f64 = q_raw.iter().sum();
            let p = DiscreteDistribution::new(p_raw.iter().map(|v| v / ps).collect()).unwrap();
            let q = DiscreteDistribution::new(q_raw.iter().map(|v| v / qs).collect()).unwrap();
            let d = p.kl_divergence(&q).unwrap();
            prop_assert!(d >= 0.0);
            let close = p.probs().iter().zip(q.probs()).all(|(a, b)| (a - b).abs() < 1e-12);
            if d < 1e-13 {
                prop_assert!(close);
            }
        }

        #[test]
        fn mi_permutation_invariant(
            raw in proptest::collection::vec(0.01f64..1.0, 9),
        ) {
            let sum: f64 = raw.iter().sum();
            let flat: Vec<f64> = raw.iter().map(|v| v / sum).collect();
            let j = JointDistribution::new(flat.clone(), vec![3, 3]).unwrap();
            // swap two symbols on the Y axis
            let mut swapped = flat.clone();
            for x in 0..3 {
                swapped.swap(x * 3, x * 3 + 2);
            }
            let js = JointDistribution::new(swapped, vec![3, 3]).unwrap();
            prop_assert!((j.mutual_information().unwrap() - js.mutual_information().unwrap()).abs() < 1e-12);
        }
    }
}
