use num_complex::Complex64 as C64;

use super::{closed_form_z, project, weyl_operator, FockSpace};
use crate::error::Result;
use crate::linalg::{self, CMat, RMat};
use crate::weyl::{to_spectrum, zz_spectrum, TrigPerturbation};

/// Interior-projected discrepancy between two families of operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityResidual {
    /// Largest Frobenius norm of a projected difference.
    pub absolute: f64,
    /// Largest Frobenius norm of a projected reference operator.
    pub scale: f64,
}

impl IdentityResidual {
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.absolute / self.scale
        } else {
            self.absolute
        }
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.absolute <= tol * self.scale || self.absolute <= f64::EPSILON
    }

    fn of(pairs: impl Iterator<Item = (CMat, CMat)>, interior: &[usize]) -> Self {
        let mut out = Self { absolute: 0.0, scale: 0.0 };
        for (got, reference) in pairs {
            let diff = project(&(&got - &reference), interior);
            out.absolute = out.absolute.max(linalg::frob_norm_c(&diff));
            out.scale = out.scale.max(linalg::frob_norm_c(&project(&reference, interior)));
        }
        out
    }
}

/// `Z_j = i(H₁X_j − X_jH₁)`.
pub fn commutator_z(h1: &CMat, x: &[CMat]) -> Vec<CMat> {
    let i = C64::new(0.0, 1.0);
    x.iter().map(|xj| (h1 * xj - xj * h1) * i).collect()
}

/// Commutator `Z` against its closed form on the interior subspace.
pub fn commutator_residual(
    p: &TrigPerturbation,
    theta: &RMat,
    x: &[CMat],
    h1: &CMat,
    interior: &[usize],
) -> Result<IdentityResidual> {
    let closed = closed_form_z(p, theta, x)?;
    let comm = commutator_z(h1, x);
    Ok(IdentityResidual::of(comm.into_iter().zip(closed), interior))
}

/// `ZZᵀ = 4Θ (Σ coeff · e^{i freqᵀX}) Θ` assembled from the merged spectrum.
#[allow(clippy::needless_range_loop)]
pub fn zz_from_spectrum(p: &TrigPerturbation, theta: &RMat, x: &[CMat]) -> Vec<Vec<CMat>> {
    let n = x.len();
    let dim = x.first().map(|m| m.nrows()).unwrap_or(0);
    let spectrum = zz_spectrum(&to_spectrum(p), theta);
    let mut inner = vec![vec![CMat::zeros(dim, dim); n]; n];
    for atom in spectrum.atoms() {
        let w = weyl_operator(&atom.freq, x);
        for a in 0..n {
            for b in 0..n {
                let c = atom.coeff[(a, b)];
                if c != C64::new(0.0, 0.0) {
                    inner[a][b] += &w * c;
                }
            }
        }
    }
    let mut out = vec![vec![CMat::zeros(dim, dim); n]; n];
    for j in 0..n {
        for k in 0..n {
            for a in 0..n {
                for b in 0..n {
                    let c = 4.0 * theta[(j, a)] * theta[(b, k)];
                    if c != 0.0 {
                        out[j][k] += &inner[a][b] * C64::new(c, 0.0);
                    }
                }
            }
        }
    }
    out
}

/// Spectrum-assembled `ZZᵀ` against products of the closed-form `Z`.
pub fn zz_product_residual(
    p: &TrigPerturbation,
    theta: &RMat,
    x: &[CMat],
    interior: &[usize],
) -> Result<IdentityResidual> {
    let z = closed_form_z(p, theta, x)?;
    let assembled = zz_from_spectrum(p, theta, x);
    let n = x.len();
    let pairs = (0..n).flat_map(|j| (0..n).map(move |k| (j, k)));
    let z = &z;
    let assembled = &assembled;
    Ok(IdentityResidual::of(pairs.map(|(j, k)| (assembled[j][k].clone(), &z[j] * &z[k])), interior))
}

/// Whether `g(K) − f(K) ⪰ −tol · I`.
pub fn function_order_check(f: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64, k: &CMat, tol: f64) -> bool {
    let gap = linalg::herm_function(k, |z| C64::new(g(z) - f(z), 0.0));
    linalg::herm_min_eigenvalue(&linalg::hermitize(&gap)) >= -tol
}

/// Largest `|⟨ψ|([X_j, X_k] − 2iΘ_jk)|ψ⟩|` over unit `ψ` supported on Fock
/// levels `≤ cutoff/2`, bounded by the Frobenius norm of the projection.
pub fn ccr_interior_residual(space: &FockSpace, x: &[CMat], theta: &RMat) -> f64 {
    let half = space.cutoff() / 2;
    let idx: Vec<usize> = (0..space.dim()).filter(|&i| space.levels(i).iter().all(|&l| l <= half)).collect();
    let dim = space.dim();
    let mut worst = 0.0_f64;
    for j in 0..x.len() {
        for k in 0..x.len() {
            let comm = &x[j] * &x[k] - &x[k] * &x[j];
            let target = CMat::identity(dim, dim) * C64::new(0.0, 2.0 * theta[(j, k)]);
            worst = worst.max(linalg::frob_norm_c(&project(&(comm - target), &idx)));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use nalgebra::DVector;

    use super::*;
    use crate::linalg::s2;
    use crate::oracle::{build_quadratures, operator_of_trig};
    use crate::weyl::TrigTerm;

    fn one_mode(cutoff: usize) -> (FockSpace, Vec<CMat>) {
        let space = FockSpace::new(1, cutoff).unwrap();
        let x = build_quadratures(&space, &s2()).unwrap();
        (space, x)
    }

    #[test]
    fn cosine_along_q_gives_two_sin_q() {
        let (space, x) = one_mode(40);
        let p = TrigPerturbation::new(vec![TrigTerm::cosine(DVector::from_vec(vec![1.0, 0.0]))]).unwrap();
        let h1 = operator_of_trig(&p, &x).unwrap();
        let z = commutator_z(&h1, &x);
        let interior = space.interior(0.6);
        let two_sin_q = linalg::herm_function(&x[0], |w| C64::new(2.0 * w.sin(), 0.0));
        assert!(linalg::frob_norm_c(&project(&z[0], &interior)) < 1e-6);
        let diff = project(&(&z[1] - &two_sin_q), &interior);
        assert!(linalg::frob_norm_c(&diff) <= 1e-6 * linalg::frob_norm_c(&project(&two_sin_q, &interior)));
    }

    #[test]
    fn scalar_hamiltonian_commutes() {
        let (_, x) = one_mode(10);
        let h = CMat::identity(10, 10) * C64::new(3.0, 0.0);
        assert!(commutator_z(&h, &x).iter().all(|z| linalg::frob_norm_c(z) == 0.0));
    }

    #[test]
    fn ccr_holds_on_interior() {
        let (space, x) = one_mode(20);
        assert!(ccr_interior_residual(&space, &x, &s2()) < 1e-8);
    }

    #[test]
    fn order_check() {
        let (_, x) = one_mode(30);
        let sq = |z: f64| z * z;
        let sin2 = |z: f64| z.sin().powi(2);
        assert!(function_order_check(sin2, sq, &x[0], 1e-10));
        assert!(!function_order_check(sq, sin2, &x[0], 1e-10));
        assert!(function_order_check(sq, sq, &x[0], 1e-10));
    }

    #[test]
    fn zz_product_single_cosine() {
        let (space, x) = one_mode(30);
        let p = TrigPerturbation::new(vec![TrigTerm::cosine(DVector::from_vec(vec![0.4, -0.3]))]).unwrap();
        let res = zz_product_residual(&p, &s2(), &x, &space.interior(0.6)).unwrap();
        assert!(res.relative() < 1e-6, "{res:?}");
    }
}
