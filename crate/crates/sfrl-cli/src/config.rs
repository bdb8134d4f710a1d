//! JSON config schemas for every subcommand, plus the built-in example
//! instances used by the verification battery.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Deserialize;

use sfrl::gp::GpSetup;
use sfrl::multiterminal::{GwSetup, MdcSetup};
use sfrl::probspace::{DiscreteDistribution, JointDistribution, Kernel};
use sfrl::{Result, SfrlError};

use crate::record::digest_of;

/// Read and parse a JSON config, returning its content digest as well.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<(T, String)> {
    let bytes = std::fs::read(path)
        .map_err(|e| SfrlError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let parsed = serde_json::from_slice(&bytes)
        .map_err(|e| SfrlError::Validation(format!("malformed config {}: {e}", path.display())))?;
    Ok((parsed, digest_of(&bytes)))
}

/// A stochastic matrix: `{"rows": [[...], ...]}`.
#[derive(Deserialize)]
pub struct KernelConfig {
    pub rows: Vec<Vec<f64>>,
}

/// Rate-distortion problem: source pmf and distortion matrix d[x][y].
#[derive(Deserialize)]
pub struct RdConfig {
    pub source: Vec<f64>,
    pub distortion: Vec<Vec<f64>>,
}

/// Channel simulation scheme description.
#[derive(Deserialize)]
pub struct ChansimConfig {
    pub kernel: Vec<Vec<f64>>,
    /// "source-coupled" or "fixed-input"
    pub mode: String,
    pub source: Option<Vec<f64>>,
}

/// Lossy source coding problem and variant selection.
#[derive(Deserialize)]
pub struct LossyConfig {
    pub source: Vec<f64>,
    pub distortion: Vec<Vec<f64>>,
    pub target_d: f64,
    /// "soft" or "mixture"
    pub variant: String,
    pub candidates: Option<usize>,
}

/// Gray-Wyner problem: pair source, auxiliary and branch kernels,
/// per-branch distortion matrices.
#[derive(Deserialize)]
pub struct GwConfig {
    /// p(x1, x2) as an |X1| x |X2| matrix
    pub source: Vec<Vec<f64>>,
    /// rows indexed by x1 * |X2| + x2
    pub p_u: Vec<Vec<f64>>,
    /// rows indexed by x1 * |U| + u
    pub p_y1: Vec<Vec<f64>>,
    /// rows indexed by x2 * |U| + u
    pub p_y2: Vec<Vec<f64>>,
    pub d1: Vec<Vec<f64>>,
    pub d2: Vec<Vec<f64>>,
}

impl GwConfig {
    pub fn build(&self) -> Result<GwSetup> {
        Ok(GwSetup {
            source: JointDistribution::from_matrix(&self.source)?,
            p_u: Kernel::from_rows(&self.p_u)?,
            p_y1: Kernel::from_rows(&self.p_y1)?,
            p_y2: Kernel::from_rows(&self.p_y2)?,
            d1: self.d1.clone(),
            d2: self.d2.clone(),
        })
    }

    /// Doubly symmetric binary source with a correlated binary auxiliary.
    pub fn dsbs_example() -> Self {
        let p = 0.11;
        let branch = vec![
            vec![0.95, 0.05],
            vec![0.7, 0.3],
            vec![0.3, 0.7],
            vec![0.05, 0.95],
        ];
        GwConfig {
            source: vec![
                vec![0.5 * (1.0 - p), 0.5 * p],
                vec![0.5 * p, 0.5 * (1.0 - p)],
            ],
            p_u: vec![
                vec![0.9, 0.1],
                vec![0.5, 0.5],
                vec![0.5, 0.5],
                vec![0.1, 0.9],
            ],
            p_y1: branch.clone(),
            p_y2: branch,
            d1: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            d2: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        }
    }
}

/// Multiple-description problem in the nested-kernel factorization.
#[derive(Deserialize)]
pub struct MdcConfig {
    pub source: Vec<f64>,
    /// rows indexed by x
    pub p_u: Vec<Vec<f64>>,
    /// rows indexed by x * |U| + u
    pub p_y1: Vec<Vec<f64>>,
    /// rows indexed by (x * |Y1| + y1) * |U| + u
    pub p_y2: Vec<Vec<f64>>,
    /// rows indexed by ((x * |Y1| + y1) * |Y2| + y2) * |U| + u
    pub p_y0: Vec<Vec<f64>>,
    pub d0: Vec<Vec<f64>>,
    pub d1: Vec<Vec<f64>>,
    pub d2: Vec<Vec<f64>>,
}

impl MdcConfig {
    pub fn build(&self) -> Result<MdcSetup> {
        Ok(MdcSetup {
            source: DiscreteDistribution::new(self.source.clone())?,
            p_u: Kernel::from_rows(&self.p_u)?,
            p_y1: Kernel::from_rows(&self.p_y1)?,
            p_y2: Kernel::from_rows(&self.p_y2)?,
            p_y0: Kernel::from_rows(&self.p_y0)?,
            d0: self.d0.clone(),
            d1: self.d1.clone(),
            d2: self.d2.clone(),
        })
    }

    /// Successive refinement of a uniform 4-ary source: both side decoders
    /// get the coarse bit, the central decoder recovers the source.
    pub fn refinement_example() -> Self {
        let nx = 4;
        let point = |y: usize, n: usize| {
            let mut row = vec![0.0; n];
            row[y] = 1.0;
            row
        };
        MdcConfig {
            source: vec![0.25; nx],
            p_u: (0..nx).map(|_| point(0, 1)).collect(),
            p_y1: (0..nx).map(|x| point(x >> 1, 2)).collect(),
            p_y2: (0..nx * 2).map(|i| point(i % 2, 2)).collect(),
            p_y0: (0..nx * 4).map(|i| point(i / 4, nx)).collect(),
            d0: (0..nx)
                .map(|x| (0..nx).map(|y| f64::from(x != y)).collect())
                .collect(),
            d1: (0..nx)
                .map(|x| (0..2).map(|y| f64::from(x >> 1 != y)).collect())
                .collect(),
            d2: (0..nx)
                .map(|x| (0..2).map(|y| f64::from(x >> 1 != y)).collect())
                .collect(),
        }
    }
}

/// Channel-with-state setup: state pmf, auxiliary kernel, encoding function
/// table and the state-dependent channel.
#[derive(Deserialize)]
pub struct GpConfig {
    pub p_s: Vec<f64>,
    /// rows indexed by s
    pub p_u_given_s: Vec<Vec<f64>>,
    /// x_map[u][s]
    pub x_map: Vec<Vec<usize>>,
    /// rows indexed by x * |S| + s
    pub p_y_given_xs: Vec<Vec<f64>>,
    pub x_size: usize,
}

impl GpConfig {
    pub fn build(&self) -> Result<GpSetup> {
        GpSetup::new(
            DiscreteDistribution::new(self.p_s.clone())?,
            Kernel::from_rows(&self.p_u_given_s)?,
            self.x_map.clone(),
            Kernel::from_rows(&self.p_y_given_xs)?,
            self.x_size,
        )
    }

    /// Binary state, auxiliary correlated with the state, XOR precoding,
    /// clean observation channel.
    pub fn toy_example() -> Self {
        GpConfig {
            p_s: vec![0.5, 0.5],
            p_u_given_s: vec![vec![0.8, 0.2], vec![0.2, 0.8]],
            x_map: vec![vec![0, 1], vec![1, 0]],
            p_y_given_xs: vec![
                vec![0.9, 0.1],
                vec![0.9, 0.1],
                vec![0.1, 0.9],
                vec![0.1, 0.9],
            ],
            x_size: 2,
        }
    }
}
