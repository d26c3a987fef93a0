use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{linear_combination, project};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::weyl::PerturbationEnvelope;

/// `n × n` matrix of operators, `blocks[j][k] = L_jk`.
pub type OperatorBlocks = Vec<Vec<CMat>>;

/// Relative tolerance of the sampler: pass iff `min ≥ −TOL · scale`.
pub const BLOCK_POSITIVITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockPositivity {
    pub min_value: f64,
    /// Largest interior-projected block Frobenius norm.
    pub scale: f64,
    pub trials: usize,
    pub pass: bool,
}

/// Draws `trials` complex unit vectors `u` and returns the smallest eigenvalue
/// of the interior projection of `Σ ū_j u_k L_jk`.
///
/// Trial `t` draws from a ChaCha8 stream `t` keyed by `seed`, so the result
/// does not depend on scheduling.
#[allow(clippy::needless_range_loop)]
pub fn block_positivity_sample(
    blocks: &OperatorBlocks,
    interior: &[usize],
    trials: usize,
    seed: u64,
) -> Result<BlockPositivity> {
    let n = blocks.len();
    if n == 0 || blocks.iter().any(|row| row.len() != n) {
        return Err(Error::ShapeMismatch("operator blocks must form a square array".into()));
    }
    let projected: Vec<Vec<CMat>> =
        blocks.iter().map(|row| row.iter().map(|b| project(b, interior)).collect()).collect();
    let scale = projected.iter().flatten().map(linalg::frob_norm_c).fold(0.0, f64::max);
    for j in 0..n {
        for k in 0..n {
            let off = linalg::frob_norm_c(&(&projected[j][k] - projected[k][j].adjoint()));
            if off > 1e-9 * scale.max(1.0) {
                return Err(Error::InvalidParameter(format!("blocks ({j},{k}) and ({k},{j}) are not adjoint")));
            }
        }
    }
    let dim = interior.len();
    let min_value = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let raw: Vec<C64> =
                (0..n).map(|_| C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))).collect();
            let norm = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let u: Vec<C64> = raw.iter().map(|z| z / norm).collect();
            let mut form = CMat::zeros(dim, dim);
            for j in 0..n {
                for k in 0..n {
                    form += &projected[j][k] * (u[j].conj() * u[k]);
                }
            }
            linalg::herm_min_eigenvalue(&linalg::hermitize(&form))
        })
        .reduce(|| f64::INFINITY, f64::min);
    Ok(BlockPositivity { min_value, scale, trials, pass: min_value >= -BLOCK_POSITIVITY_TOL * scale })
}

/// `L_jk = X_j X_k`.
pub fn xx_blocks(x: &[CMat]) -> OperatorBlocks {
    x.iter().map(|a| x.iter().map(|b| a * b).collect()).collect()
}

pub fn scale_blocks(blocks: &OperatorBlocks, factor: f64) -> OperatorBlocks {
    blocks.iter().map(|row| row.iter().map(|b| b * C64::new(factor, 0.0)).collect()).collect()
}

/// `μ₁ Σ_k Γ_k X Xᵀ Γ_kᵀ + μ₀ I − Z Zᵀ`.
pub fn envelope_gap_blocks(envelope: &PerturbationEnvelope, x: &[CMat], z: &[CMat]) -> OperatorBlocks {
    let n = x.len();
    let dim = x.first().map(|m| m.nrows()).unwrap_or(0);
    let mut out: OperatorBlocks = (0..n)
        .map(|j| {
            (0..n)
                .map(|k| {
                    let mut b = -(&z[j] * &z[k]);
                    if j == k {
                        b += CMat::identity(dim, dim) * C64::new(envelope.mu0(), 0.0);
                    }
                    b
                })
                .collect()
        })
        .collect();
    for gamma in envelope.gammas() {
        let gx: Vec<CMat> = (0..n).map(|a| linear_combination(&gamma.row(a).transpose(), x)).collect();
        for j in 0..n {
            for k in 0..n {
                out[j][k] += &gx[j] * &gx[k] * C64::new(envelope.mu1(), 0.0);
            }
        }
    }
    out
}
