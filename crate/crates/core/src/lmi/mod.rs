//! Feasibility of `AᵀΠ + ΠA + Σ_{k=0}^d Γ_kᵀΠΓ_k + γΠ ⪯ 0` and the resulting
//! mean-square bounds.
//!
//! The LMI is handled through its vectorized operator
//! `K = I⊗Aᵀ + Aᵀ⊗I + Σ Γ_kᵀ⊗Γ_kᵀ` (column stacking). `K` is a Lyapunov
//! operator plus a completely positive part, so it is resolvent positive: for
//! `γ` below `γ* = −max Re eig(K)` and `Q ≻ 0`, the solution of
//! `(K + γI) vec(Π) = −vec(Q)` is positive definite and satisfies the LMI
//! with slack `−Q`.

mod refine;
mod scan;

pub use refine::{refine_parameters, RefineOptions, Refined};
pub use scan::{scan_mu1, Objective, ScanResult, ScanRow};

use crate::error::{Error, Result};
use crate::linalg::{self, RMat};
use crate::system::QuantumLinearSystem;
use crate::weyl::PerturbationEnvelope;

/// Tolerance on `max eig(AᵀΠ + ΠA + ΣΓᵀΠΓ + γΠ + Q)` after the solve,
/// relative to `max(1, ‖Π‖)`.
pub const SOLVE_RESIDUAL_TOL: f64 = 1e-8;

/// `K` with `K vec(Π) = vec(AᵀΠ + ΠA + Σ_{k=0}^d Γ_kᵀΠΓ_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SylvesterOperatorMatrix {
    k: RMat,
    n: usize,
}

impl SylvesterOperatorMatrix {
    pub fn matrix(&self) -> &RMat {
        &self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Applies the operator to `Π` through the matrix.
    pub fn apply(&self, pi: &RMat) -> RMat {
        linalg::unvec(&(&self.k * linalg::vec_of(pi)), self.n)
    }
}

/// Direct evaluation of `AᵀΠ + ΠA + Σ_{k=0}^d Γ_kᵀΠΓ_k`.
pub fn apply_lmi_operator(a: &RMat, envelope: &PerturbationEnvelope, pi: &RMat) -> RMat {
    let mut out = a.transpose() * pi + pi * a;
    for g in envelope.all_gammas() {
        out += g.transpose() * pi * &g;
    }
    out
}

pub fn operator_matrix(a: &RMat, envelope: &PerturbationEnvelope) -> Result<SylvesterOperatorMatrix> {
    let n = a.nrows();
    linalg::require_shape(a, n, n, "A")?;
    if envelope.n() != n {
        return Err(Error::ShapeMismatch(format!("envelope of order {} against A of order {n}", envelope.n())));
    }
    let eye = RMat::identity(n, n);
    let at = a.transpose();
    let mut k = eye.kronecker(&at) + at.kronecker(&eye);
    for g in envelope.all_gammas() {
        let gt = g.transpose();
        k += gt.kronecker(&gt);
    }
    Ok(SylvesterOperatorMatrix { k, n })
}

/// `γ* = −max Re eig(K)`.
pub fn decay_margin(k: &SylvesterOperatorMatrix) -> Result<f64> {
    let eig = linalg::eigenvalues(&k.k)?;
    if eig.iter().any(|z| !z.re.is_finite()) {
        return Err(Error::NumericalFailure("non-finite eigenvalue of K".into()));
    }
    Ok(-eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}

/// Witness `(Π, γ)` for the LMI and the mean-square bound it implies.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityCertificate {
    pub pi: RMat,
    pub gamma: f64,
    pub mu1: f64,
    pub mu0: f64,
    /// `γ*` of the operator the certificate was solved against.
    pub decay_margin: f64,
    /// `limsup V ≤ (⟨Π, BBᵀ⟩ + (μ₀/μ₁) Tr Π) / γ`.
    pub ms_bound: f64,
    /// `⟨Π, BBᵀ⟩ + (μ₀/μ₁) Tr Π`, the constant of the dissipation inequality.
    pub supply: f64,
    pub lambda_min_pi: f64,
    /// Largest eigenvalue of `AᵀΠ + ΠA + ΣΓᵀΠΓ + γΠ`.
    pub lmi_max_eigenvalue: f64,
    /// Largest eigenvalue of `AᵀΠ + ΠA + ΣΓᵀΠΓ + γΠ + Q` (solve error).
    pub solve_residual: f64,
}

impl StabilityCertificate {
    /// `E(XᵀX)` upper limit implied by `ms_bound`.
    pub fn second_moment_bound(&self) -> f64 {
        self.ms_bound / self.lambda_min_pi
    }
}

fn check_spd(q: &RMat) -> Result<()> {
    let n = q.nrows();
    linalg::require_shape(q, n, n, "Q")?;
    if linalg::max_abs(&(q - q.transpose())) > 1e-12 * (1.0 + linalg::max_abs(q)) {
        return Err(Error::SymmetryViolation { matrix: "Q", residual: linalg::max_abs(&(q - q.transpose())) });
    }
    let min = linalg::sym_min_eigenvalue(q);
    if min <= 0.0 {
        return Err(Error::InvalidParameter(format!("Q must be positive definite (min eigenvalue {min:.3e})")));
    }
    Ok(())
}

/// Solves `(K + γI) vec(Π) = −vec(Q)` and checks the result.
///
/// `q = None` means `Q = I`.
pub fn solve_certificate(
    sys: &QuantumLinearSystem,
    envelope: &PerturbationEnvelope,
    gamma: f64,
    q: Option<&RMat>,
) -> Result<StabilityCertificate> {
    let n = sys.n();
    let identity = RMat::identity(n, n);
    let q = q.unwrap_or(&identity);
    check_spd(q)?;
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma = {gamma} must be positive")));
    }
    let k = operator_matrix(sys.a(), envelope)?;
    let margin = decay_margin(&k)?;
    if gamma >= margin {
        return Err(Error::Infeasible { gamma, decay_margin: margin });
    }

    let shifted = k.matrix() + RMat::identity(n * n, n * n) * gamma;
    let vec_pi = shifted
        .lu()
        .solve(&(-linalg::vec_of(q)))
        .ok_or_else(|| Error::NumericalFailure("singular shifted operator".into()))?;
    let pi = linalg::symmetrize(&linalg::unvec(&vec_pi, n));

    let lambda_min_pi = linalg::sym_min_eigenvalue(&pi);
    if lambda_min_pi <= 0.0 {
        return Err(Error::IndefinitePi { min_eigenvalue: lambda_min_pi });
    }

    let lhs = linalg::symmetrize(&(apply_lmi_operator(sys.a(), envelope, &pi) + &pi * gamma));
    let lmi_max_eigenvalue = linalg::sym_max_eigenvalue(&lhs);
    let solve_residual = linalg::sym_max_eigenvalue(&(&lhs + q));
    if solve_residual > SOLVE_RESIDUAL_TOL * pi.norm().max(1.0) {
        return Err(Error::NumericalFailure(format!("LMI solve residual {solve_residual:.3e} too large")));
    }

    let supply = linalg::frob(&pi, &sys.bbt()) + envelope.mu0() / envelope.mu1() * pi.trace();
    Ok(StabilityCertificate {
        gamma,
        mu1: envelope.mu1(),
        mu0: envelope.mu0(),
        decay_margin: margin,
        ms_bound: supply / gamma,
        supply,
        lambda_min_pi,
        lmi_max_eigenvalue,
        solve_residual,
        pi,
    })
}

/// [`solve_certificate`] at `γ = ½γ*`.
pub fn solve_certificate_default(
    sys: &QuantumLinearSystem,
    envelope: &PerturbationEnvelope,
    q: Option<&RMat>,
) -> Result<StabilityCertificate> {
    let margin = decay_margin(&operator_matrix(sys.a(), envelope)?)?;
    if margin <= 0.0 {
        return Err(Error::Infeasible { gamma: 0.0, decay_margin: margin });
    }
    solve_certificate(sys, envelope, 0.5 * margin, q)
}

/// `V(0)e^{−γt} + c(1 − e^{−γt})/γ` at each time, `c` the certificate supply.
pub fn gronwall_envelope(cert: &StabilityCertificate, v0: f64, times: &[f64]) -> Vec<f64> {
    times
        .iter()
        .map(|&t| {
            let decay = (-cert.gamma * t).exp();
            v0 * decay + cert.supply * (1.0 - decay) / cert.gamma
        })
        .collect()
}
