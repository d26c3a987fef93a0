//! Nominal linear quantum stochastic system `dX = (AX + Z)dt + B dW` and its
//! steady-state second moments.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{self, RMat};

/// Numerical cutoffs for the checks in this module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative tolerance for the (anti)symmetry of Θ, R and J.
    pub symmetry: f64,
    /// Θ is rejected when `σ_min(Θ) < singular · σ_max(Θ)`.
    pub singular: f64,
    /// Relative tolerance of `AΘ + ΘAᵀ + BJBᵀ = 0`.
    pub realizability: f64,
    /// Eigenvalue slack for positive semi-definiteness of second moments.
    pub psd: f64,
    /// Agreement of `Im S` with Θ.
    pub theta_consistency: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { symmetry: 1e-12, singular: 1e-10, realizability: 1e-10, psd: 1e-9, theta_consistency: 1e-8 }
    }
}

/// The nominal system `(Θ, R, M, J)` with derived `B = 2ΘMᵀ` and
/// `A = 2ΘR − ½BJBᵀΘ⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumLinearSystem {
    theta: RMat,
    r: RMat,
    m: RMat,
    j: RMat,
    b: RMat,
    a: RMat,
    theta_condition: f64,
}

impl QuantumLinearSystem {
    /// Assembles a system from already-derived matrices without recomputing or
    /// checking `A` and `B`. Intended for importing externally identified
    /// models; [`nominal_steady_covariance`] still detects inconsistency.
    pub fn from_parts_unchecked(theta: RMat, r: RMat, m: RMat, j: RMat, b: RMat, a: RMat) -> Self {
        let theta_condition = linalg::condition_number(&theta);
        Self { theta, r, m, j, b, a, theta_condition }
    }

    pub fn n(&self) -> usize {
        self.theta.nrows()
    }

    pub fn m_dim(&self) -> usize {
        self.j.nrows()
    }

    pub fn theta(&self) -> &RMat {
        &self.theta
    }

    pub fn r(&self) -> &RMat {
        &self.r
    }

    pub fn coupling(&self) -> &RMat {
        &self.m
    }

    pub fn j(&self) -> &RMat {
        &self.j
    }

    pub fn b(&self) -> &RMat {
        &self.b
    }

    pub fn a(&self) -> &RMat {
        &self.a
    }

    pub fn theta_condition(&self) -> f64 {
        self.theta_condition
    }

    /// `BBᵀ`, the real part of the diffusion `BΩBᵀ`.
    pub fn bbt(&self) -> RMat {
        &self.b * self.b.transpose()
    }

    /// Frobenius norm of `AΘ + ΘAᵀ + BJBᵀ`.
    pub fn realizability_residual(&self) -> f64 {
        (&self.a * &self.theta + &self.theta * self.a.transpose() + &self.b * &self.j * self.b.transpose()).norm()
    }
}

/// Real and imaginary parts of `S = E(XXᵀ) = P + iΘ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondMomentMatrix {
    pub p: RMat,
    /// Solved imaginary part; equals Θ up to the consistency tolerance.
    pub theta: RMat,
}

impl SecondMomentMatrix {
    /// `P + iΘ` as a complex Hermitian matrix.
    pub fn as_complex(&self) -> linalg::CMat {
        self.p.zip_map(&self.theta, C64::new)
    }

    pub fn min_eigenvalue_p(&self) -> f64 {
        linalg::sym_min_eigenvalue(&self.p)
    }

    /// Smallest eigenvalue of the Hermitian matrix `P + iΘ`.
    pub fn min_eigenvalue_s(&self) -> f64 {
        linalg::herm_min_eigenvalue(&self.as_complex())
    }

    /// Heisenberg consistency: `P ⪰ 0` and `P + iΘ ⪰ 0` up to `tol`.
    pub fn is_physical(&self, tol: f64) -> bool {
        self.min_eigenvalue_p() >= -tol && self.min_eigenvalue_s() >= -tol
    }
}

fn check_antisymmetric(m: &RMat, name: &'static str, tol: f64) -> Result<()> {
    let residual = linalg::max_abs(&(m + m.transpose()));
    if residual > tol * (1.0 + linalg::max_abs(m)) {
        return Err(Error::SymmetryViolation { matrix: name, residual });
    }
    Ok(())
}

fn check_symmetric(m: &RMat, name: &'static str, tol: f64) -> Result<()> {
    let residual = linalg::max_abs(&(m - m.transpose()));
    if residual > tol * (1.0 + linalg::max_abs(m)) {
        return Err(Error::SymmetryViolation { matrix: name, residual });
    }
    Ok(())
}

pub fn build_system(theta: RMat, r: RMat, m: RMat, j: RMat) -> Result<QuantumLinearSystem> {
    build_system_with(theta, r, m, j, &Tolerances::default())
}

pub fn build_system_with(theta: RMat, r: RMat, m: RMat, j: RMat, tol: &Tolerances) -> Result<QuantumLinearSystem> {
    let n = theta.nrows();
    let m_dim = j.nrows();
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::ShapeMismatch(format!("n = {n} must be even and positive")));
    }
    if m_dim == 0 || !m_dim.is_multiple_of(2) {
        return Err(Error::ShapeMismatch(format!("m = {m_dim} must be even and positive")));
    }
    linalg::require_shape(&theta, n, n, "theta")?;
    linalg::require_shape(&r, n, n, "R")?;
    linalg::require_shape(&m, m_dim, n, "M")?;
    linalg::require_shape(&j, m_dim, m_dim, "J")?;
    for (mat, name) in [(&theta, "theta"), (&r, "R"), (&m, "M"), (&j, "J")] {
        if mat.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(format!("`{name}` has a non-finite entry")));
        }
    }

    check_antisymmetric(&theta, "theta", tol.symmetry)?;
    check_symmetric(&r, "R", tol.symmetry)?;
    check_antisymmetric(&j, "J", tol.symmetry)?;

    let theta_condition = linalg::condition_number(&theta);
    if !(theta_condition.is_finite() && theta_condition * tol.singular < 1.0) {
        return Err(Error::SingularTheta { condition: theta_condition });
    }
    let theta_inv = theta.clone().try_inverse().ok_or(Error::SingularTheta { condition: theta_condition })?;

    let b = &theta * m.transpose() * 2.0;
    let a = &theta * &r * 2.0 - &b * &j * b.transpose() * &theta_inv * 0.5;

    let sys = QuantumLinearSystem { theta, r, m, j, b, a, theta_condition };
    let scale = 1.0 + sys.a.norm() * sys.theta.norm();
    let residual = sys.realizability_residual();
    if residual > tol.realizability * scale {
        return Err(Error::NumericalFailure(format!(
            "realizability residual {residual:.3e} exceeds tolerance (theta condition {theta_condition:.3e})"
        )));
    }
    Ok(sys)
}

/// Largest real part over the eigenvalues of `a`.
pub fn spectral_abscissa(a: &RMat) -> Result<f64> {
    Ok(linalg::eigenvalues(a)?.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}

pub fn nominal_steady_covariance(sys: &QuantumLinearSystem) -> Result<SecondMomentMatrix> {
    nominal_steady_covariance_with(sys, &Tolerances::default())
}

/// Steady state of `Ṡ = AS + SAᵀ + BΩBᵀ`, `Ω = I + iJ`.
///
/// The real and imaginary parts are solved separately. The imaginary part is
/// required to reproduce Θ; a mismatch means the input system violates the
/// realizability identity.
pub fn nominal_steady_covariance_with(sys: &QuantumLinearSystem, tol: &Tolerances) -> Result<SecondMomentMatrix> {
    let abscissa = spectral_abscissa(&sys.a)?;
    if abscissa >= 0.0 {
        return Err(Error::NotHurwitz { abscissa });
    }
    let p = linalg::symmetrize(&linalg::lyapunov_solve(&sys.a, &sys.bbt())?);
    let bjb = &sys.b * &sys.j * sys.b.transpose();
    let imag = linalg::lyapunov_solve(&sys.a, &bjb)?;
    let imag = (&imag - imag.transpose()) * 0.5;

    let mismatch = linalg::max_abs(&(&imag - &sys.theta));
    if mismatch > tol.theta_consistency * (1.0 + linalg::max_abs(&sys.theta)) {
        return Err(Error::PhysicallyInconsistent(format!(
            "steady imaginary part differs from theta by {mismatch:.3e} \
             (theta condition {:.3e})",
            sys.theta_condition
        )));
    }
    Ok(SecondMomentMatrix { p, theta: imag })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::s2;

    fn eye(n: usize) -> RMat {
        RMat::identity(n, n)
    }

    #[test]
    fn damped_desk_system() {
        let sys = build_system(s2(), RMat::zeros(2, 2), eye(2), s2()).unwrap();
        assert!((sys.b() - s2() * 2.0).norm() < 1e-15);
        assert!((sys.a() + eye(2) * 2.0).norm() < 1e-14);
    }

    #[test]
    fn pure_rotation_without_coupling() {
        let sys = build_system(s2(), eye(2) * 0.5, RMat::zeros(2, 2), s2()).unwrap();
        assert_eq!(sys.b(), &RMat::zeros(2, 2));
        assert!((sys.a() - s2()).norm() < 1e-15);
        assert!(matches!(nominal_steady_covariance(&sys), Err(Error::NotHurwitz { .. })));
    }

    #[test]
    fn rejects_wrong_coupling_width() {
        let err = build_system(s2(), RMat::zeros(2, 2), RMat::zeros(2, 3), s2()).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch(_)));
    }

    #[test]
    fn rejects_symmetry_violations_by_name() {
        let bad_r = RMat::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        match build_system(s2(), bad_r, eye(2), s2()) {
            Err(Error::SymmetryViolation { matrix, .. }) => assert_eq!(matrix, "R"),
            other => panic!("unexpected {other:?}"),
        }
        match build_system(eye(2), RMat::zeros(2, 2), eye(2), s2()) {
            Err(Error::SymmetryViolation { matrix, .. }) => assert_eq!(matrix, "theta"),
            other => panic!("unexpected {other:?}"),
        }
        match build_system(s2(), RMat::zeros(2, 2), eye(2), eye(2)) {
            Err(Error::SymmetryViolation { matrix, .. }) => assert_eq!(matrix, "J"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_singular_theta() {
        let mut theta = linalg::canonical_symplectic(4);
        theta[(2, 3)] = 0.0;
        theta[(3, 2)] = 0.0;
        let err = build_system(theta, RMat::zeros(4, 4), RMat::zeros(2, 4), s2()).unwrap_err();
        assert!(matches!(err, Error::SingularTheta { .. }));
    }

    #[test]
    fn rejects_odd_dimension() {
        let err = build_system(RMat::zeros(3, 3), RMat::zeros(3, 3), RMat::zeros(2, 3), s2());
        assert!(matches!(err, Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn spectral_abscissa_examples() {
        assert!((spectral_abscissa(&(eye(2) * -2.0)).unwrap() + 2.0).abs() < 1e-14);
        assert!(spectral_abscissa(&s2()).unwrap().abs() < 1e-14);
        let tri = RMat::from_row_slice(2, 2, &[-1.0, 10.0, 0.0, -1.0]);
        assert!((spectral_abscissa(&tri).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn desk_steady_covariance_is_vacuum() {
        let sys = build_system(s2(), RMat::zeros(2, 2), eye(2), s2()).unwrap();
        let s = nominal_steady_covariance(&sys).unwrap();
        assert!((&s.p - eye(2)).norm() < 1e-12);
        assert!((&s.theta - s2()).norm() < 1e-12);
        assert!(s.is_physical(1e-9));
        // vacuum saturates the uncertainty relation
        assert!(s.min_eigenvalue_s().abs() < 1e-12);
    }

    #[test]
    fn zero_diffusion_with_hurwitz_drift_is_inconsistent() {
        let sys = QuantumLinearSystem::from_parts_unchecked(
            s2(),
            RMat::zeros(2, 2),
            RMat::zeros(2, 2),
            s2(),
            RMat::zeros(2, 2),
            -eye(2),
        );
        assert!(matches!(nominal_steady_covariance(&sys), Err(Error::PhysicallyInconsistent(_))));
    }
}
