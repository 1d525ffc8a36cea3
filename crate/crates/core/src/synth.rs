//! Synthetic covariance matrices with planted block structure.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, SpcaError};
use crate::linalg::SymMatrix;

/// Parameters for [`generate`].
#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub n: usize,
    /// Number of planted blocks.
    pub d: usize,
    pub block_size: usize,
    /// Scale of the dense `GᵀG` part inside each block; 0 gives diagonal blocks.
    pub coupling: f64,
    /// Off-block entries are drawn uniformly from `[−noise, noise]`.
    pub noise: f64,
    pub seed: u64,
    /// Randomly permute the coordinates after construction.
    pub shuffle: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            n: 12,
            d: 3,
            block_size: 4,
            coupling: 1.0,
            noise: 0.0,
            seed: 0,
            shuffle: false,
        }
    }
}

/// Positive semi-definite matrix made of `d` dense blocks plus bounded
/// off-block noise.
///
/// Block `i` is `diag(s) + coupling · GᵀG / block_size` with
/// `s ~ U[0.5, 1.5]` and Gaussian `G`. Off-block noise is symmetric with
/// magnitude at most `noise`; every diagonal entry is raised by
/// `(n − block_size) · noise`, which keeps the noise part diagonally
/// dominant and the whole matrix PSD. The output depends only on the config.
pub fn generate(cfg: &GenConfig) -> Result<SymMatrix> {
    if cfg.d == 0 || cfg.block_size == 0 || cfg.n != cfg.d * cfg.block_size {
        return Err(SpcaError::InvalidInput(format!(
            "n = {} must equal d * block_size = {} * {}",
            cfg.n, cfg.d, cfg.block_size
        )));
    }
    for (name, v) in [("coupling", cfg.coupling), ("noise", cfg.noise)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(SpcaError::InvalidInput(format!(
                "{name} must be finite and >= 0, got {v}"
            )));
        }
    }
    let n = cfg.n;
    let bs = cfg.block_size;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut data = vec![0.0; n * n];

    for b in 0..cfg.d {
        let g: Vec<f64> = (0..bs * bs).map(|_| rng.sample(StandardNormal)).collect();
        let off = b * bs;
        for i in 0..bs {
            for j in i..bs {
                let gtg: f64 = (0..bs).map(|r| g[r * bs + i] * g[r * bs + j]).sum();
                let mut v = cfg.coupling * gtg / bs as f64;
                if i == j {
                    v += rng.random_range(0.5..1.5);
                }
                data[(off + i) * n + off + j] = v;
                data[(off + j) * n + off + i] = v;
            }
        }
    }

    if cfg.noise > 0.0 {
        for i in 0..n {
            for j in (i + 1)..n {
                if i / bs != j / bs {
                    let v = cfg.noise * (2.0 * rng.random::<f64>() - 1.0);
                    data[i * n + j] = v;
                    data[j * n + i] = v;
                }
            }
        }
        let shift = (n - bs) as f64 * cfg.noise;
        for i in 0..n {
            data[i * n + i] += shift;
        }
    }

    let q = SymMatrix::from_row_major(n, data)?;
    if !cfg.shuffle {
        return Ok(q);
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    Ok(SymMatrix::from_upper_fn(n, |i, j| q.get(perm[i], perm[j])))
}

/// Dense random PSD matrix `GᵀG / n` with Gaussian `G`.
pub fn random_psd(n: usize, seed: u64) -> SymMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g: Vec<f64> = (0..n * n).map(|_| rng.sample(StandardNormal)).collect();
    SymMatrix::from_upper_fn(n, |i, j| {
        (0..n).map(|r| g[r * n + i] * g[r * n + j]).sum::<f64>() / n as f64
    })
}
