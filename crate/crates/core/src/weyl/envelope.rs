//! Envelopes `(μ₁, Γ₁…Γ_d, μ₀)` with `ZZᵀ ⪯ μ₁ Σ Γ_k XXᵀ Γ_kᵀ + μ₀ I`.

use super::{TrigPerturbation, TrigTerm};
use crate::error::{Error, Result};
use crate::linalg::{self, RMat};

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationEnvelope {
    mu1: f64,
    gammas: Vec<RMat>,
    mu0: f64,
}

impl PerturbationEnvelope {
    pub fn new(mu1: f64, gammas: Vec<RMat>, mu0: f64) -> Result<Self> {
        if !(mu1.is_finite() && mu1 > 0.0) {
            return Err(Error::NonPositiveMu1(mu1));
        }
        let Some(first) = gammas.first() else {
            return Err(Error::InvalidParameter("envelope needs at least one Gamma".into()));
        };
        let n = first.nrows();
        for (k, g) in gammas.iter().enumerate() {
            linalg::require_shape(g, n, n, &format!("Gamma_{}", k + 1))?;
        }
        if !mu0.is_finite() {
            return Err(Error::InvalidParameter(format!("mu0 = {mu0}")));
        }
        Ok(Self { mu1, gammas, mu0 })
    }

    /// Envelope of the zero perturbation: a single zero `Γ₁` and `μ₀ = 0`.
    pub fn zero(n: usize, mu1: f64) -> Result<Self> {
        Self::new(mu1, vec![RMat::zeros(n, n)], 0.0)
    }

    pub fn mu1(&self) -> f64 {
        self.mu1
    }

    pub fn mu0(&self) -> f64 {
        self.mu0
    }

    pub fn gammas(&self) -> &[RMat] {
        &self.gammas
    }

    pub fn d(&self) -> usize {
        self.gammas.len()
    }

    pub fn n(&self) -> usize {
        self.gammas[0].nrows()
    }

    /// `Γ₀ = √μ₁ I`.
    pub fn gamma0(&self) -> RMat {
        RMat::identity(self.n(), self.n()) * self.mu1.sqrt()
    }

    /// `Γ₀, Γ₁, …, Γ_d`.
    pub fn all_gammas(&self) -> Vec<RMat> {
        std::iter::once(self.gamma0()).chain(self.gammas.iter().cloned()).collect()
    }

    /// Copy with `Γ_k` replaced; used to build corrupted negative controls.
    pub fn with_gammas(&self, gammas: Vec<RMat>) -> Result<Self> {
        Self::new(self.mu1, gammas, self.mu0)
    }
}

/// Free parameters `ω_k` (one per trig term) and `ν_jk = ν_kj` (diagonal unused).
#[derive(Debug, Clone, PartialEq)]
pub struct FreeParameters {
    pub omegas: Vec<f64>,
    pub nus: RMat,
}

impl FreeParameters {
    pub fn new(omegas: Vec<f64>, nus: RMat) -> Result<Self> {
        if let Some(w) = omegas.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidParameter(format!("omega = {w} must be positive")));
        }
        let d = nus.nrows();
        linalg::require_shape(&nus, d, d, "nus")?;
        for j in 0..d {
            for k in 0..d {
                if j == k {
                    continue;
                }
                let v = nus[(j, k)];
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::InvalidParameter(format!("nu[{j}][{k}] = {v} must be positive")));
                }
                if (v - nus[(k, j)]).abs() > 1e-12 * v.abs().max(1.0) {
                    return Err(Error::InvalidParameter(format!("nus not symmetric at ({j}, {k})")));
                }
            }
        }
        Ok(Self { omegas, nus })
    }

    /// `ω_k = 1` for `terms` terms and `ν_jk = 1` for `parts` parts.
    pub fn defaults(terms: usize, parts: usize) -> Self {
        Self { omegas: vec![1.0; terms], nus: RMat::from_element(parts, parts, 1.0) }
    }
}

/// `σ_k = 1 + Σ_{j<k} ν_jk + Σ_{j>k} 1/ν_jk`.
pub fn sigma_coefficients(params: &FreeParameters, d: usize) -> Result<Vec<f64>> {
    if d == 0 {
        return Err(Error::InvalidParameter("sigma coefficients need d >= 1".into()));
    }
    if d > 1 && params.nus.nrows() < d {
        return Err(Error::MissingParameter(format!("nus is {0}x{0}, need {d}x{d}", params.nus.nrows())));
    }
    Ok((0..d)
        .map(|k| {
            let below: f64 = (0..k).map(|j| params.nus[(j, k)]).sum();
            let above: f64 = (k + 1..d).map(|j| 1.0 / params.nus[(j, k)]).sum();
            1.0 + below + above
        })
        .collect())
}

/// `Γ₁ = (2/√μ₁) Θλ₀λ₀ᵀ`, `μ₀ = 0` for `H₁ = cos(λ₀ᵀX)`.
pub fn envelope_single_cos(lambda0: &nalgebra::DVector<f64>, theta: &RMat, mu1: f64) -> Result<PerturbationEnvelope> {
    if !(mu1.is_finite() && mu1 > 0.0) {
        return Err(Error::NonPositiveMu1(mu1));
    }
    let n = theta.nrows();
    if lambda0.len() != n {
        return Err(Error::ShapeMismatch(format!("lambda0 has length {}, expected {n}", lambda0.len())));
    }
    if lambda0.iter().all(|&x| x == 0.0) {
        return Err(Error::InvalidTerm("lambda0 must be nonzero".into()));
    }
    let gamma = theta * lambda0 * lambda0.transpose() * (2.0 / mu1.sqrt());
    PerturbationEnvelope::new(mu1, vec![gamma], 0.0)
}

/// `(c_k, Φ_k, μ₀k)` with `Z_kZ_kᵀ ⪯ μ₁ Φ_k XXᵀ Φ_kᵀ + μ₀k I`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopePart {
    pub c: f64,
    pub phi: RMat,
    pub mu0: f64,
}

/// `(Φ_k, μ₀k)` for one term `r cos(λᵀX + φ)`.
///
/// For `φ = 0` the `ω → 0` limit is used: `Φ = 2r/√μ₁ Θλλᵀ`, `μ₀k = 0`.
pub fn trig_term_bound(term: &TrigTerm, theta: &RMat, mu1: f64, omega: f64) -> Result<(RMat, f64)> {
    if !(mu1.is_finite() && mu1 > 0.0) {
        return Err(Error::NonPositiveMu1(mu1));
    }
    let theta_lambda = theta * &term.lambda;
    let outer = &theta_lambda * term.lambda.transpose();
    if term.phi == 0.0 {
        return Ok((outer * (2.0 * term.r / mu1.sqrt()), 0.0));
    }
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::InvalidParameter(format!("omega = {omega} must be positive")));
    }
    let phi_k = outer * (2.0 * term.r * ((1.0 + omega) / mu1).sqrt());
    let mu0_k = 4.0 * term.r.powi(2) * term.phi.powi(2) * (1.0 + omega) / omega * theta_lambda.norm_squared();
    Ok((phi_k, mu0_k))
}

/// `Γ_k = √σ_k c_k Φ_k`, `μ₀ = Σ σ_k c_k² μ₀k` with a shared `μ₁`.
pub fn combine_envelopes(parts: &[EnvelopePart], mu1: f64, params: &FreeParameters) -> Result<PerturbationEnvelope> {
    if parts.is_empty() {
        return Err(Error::InvalidParameter("no envelope parts to combine".into()));
    }
    let sigmas = sigma_coefficients(params, parts.len())?;
    let gammas = parts.iter().zip(&sigmas).map(|(part, sigma)| &part.phi * (sigma.sqrt() * part.c)).collect();
    let mu0 = parts.iter().zip(&sigmas).map(|(part, sigma)| sigma * part.c * part.c * part.mu0).sum();
    PerturbationEnvelope::new(mu1, gammas, mu0)
}

/// Per-term bounds of a trigonometric polynomial, before combination.
pub fn trig_parts(p: &TrigPerturbation, theta: &RMat, mu1: f64, params: &FreeParameters) -> Result<Vec<EnvelopePart>> {
    p.terms()
        .iter()
        .enumerate()
        .map(|(k, term)| {
            let omega = match params.omegas.get(k) {
                Some(w) => *w,
                // unused by the zero-phase branch
                None if term.phi == 0.0 => 1.0,
                None => return Err(Error::MissingParameter(format!("omega for term {k}"))),
            };
            let (phi, mu0) = trig_term_bound(term, theta, mu1, omega)?;
            Ok(EnvelopePart { c: 1.0, phi, mu0 })
        })
        .collect()
}

/// Envelope of `Σ r_k cos(λ_kᵀX + φ_k)`; the zero perturbation yields
/// [`PerturbationEnvelope::zero`].
pub fn envelope_trig(
    p: &TrigPerturbation,
    theta: &RMat,
    mu1: f64,
    params: &FreeParameters,
) -> Result<PerturbationEnvelope> {
    if !(mu1.is_finite() && mu1 > 0.0) {
        return Err(Error::NonPositiveMu1(mu1));
    }
    if p.is_empty() {
        return PerturbationEnvelope::zero(theta.nrows(), mu1);
    }
    combine_envelopes(&trig_parts(p, theta, mu1, params)?, mu1, params)
}

/// Trigonometric envelope augmented with an optional extra part (an
/// approximation-error bound `(Γ, μ)` enters as `c = 1`, `Φ = Γ`, `μ₀k = μ`).
/// `params.nus` must cover `p.len() + 1` parts when `error` is present.
pub fn envelope_augmented(
    p: &TrigPerturbation,
    theta: &RMat,
    mu1: f64,
    params: &FreeParameters,
    error: Option<&EnvelopePart>,
) -> Result<PerturbationEnvelope> {
    let Some(error) = error else {
        return envelope_trig(p, theta, mu1, params);
    };
    if !(mu1.is_finite() && mu1 > 0.0) {
        return Err(Error::NonPositiveMu1(mu1));
    }
    let n = theta.nrows();
    linalg::require_shape(&error.phi, n, n, "error Gamma")?;
    let mut parts = trig_parts(p, theta, mu1, params)?;
    parts.push(error.clone());
    combine_envelopes(&parts, mu1, params)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI, SQRT_2};

    use nalgebra::DVector;

    use super::*;
    use crate::linalg::s2;

    fn e1() -> DVector<f64> {
        DVector::from_vec(vec![1.0, 0.0])
    }

    fn lower() -> RMat {
        RMat::from_row_slice(2, 2, &[0.0, 0.0, -1.0, 0.0])
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma_coefficients(&FreeParameters::defaults(1, 1), 1).unwrap(), vec![1.0]);
        assert_eq!(sigma_coefficients(&FreeParameters::defaults(2, 2), 2).unwrap(), vec![2.0, 2.0]);
        assert_eq!(sigma_coefficients(&FreeParameters::defaults(3, 3), 3).unwrap(), vec![3.0, 3.0, 3.0]);
    }

    #[test]
    fn sigma_missing_nus() {
        let err = sigma_coefficients(&FreeParameters::defaults(3, 2), 3).unwrap_err();
        assert!(matches!(err, Error::MissingParameter(_)));
    }

    #[test]
    fn single_cos_examples() {
        let env = envelope_single_cos(&e1(), &s2(), 4.0).unwrap();
        assert_eq!(env.d(), 1);
        assert_eq!(env.mu0(), 0.0);
        assert!((&env.gammas()[0] - lower()).norm() < 1e-15);
        assert!((env.gamma0() - RMat::identity(2, 2) * 2.0).norm() < 1e-15);

        let env = envelope_single_cos(&(e1() * FRAC_1_SQRT_2), &s2(), 1.0).unwrap();
        assert!((&env.gammas()[0] - lower()).norm() < 1e-15);

        assert!(matches!(envelope_single_cos(&e1(), &s2(), 0.0), Err(Error::NonPositiveMu1(_))));
        assert!(envelope_single_cos(&e1(), &s2(), -1.0).is_err());
        assert!(envelope_single_cos(&DVector::zeros(2), &s2(), 1.0).is_err());
    }

    #[test]
    fn trig_two_zero_phase_terms() {
        let e2 = DVector::from_vec(vec![0.0, 1.0]);
        let p = TrigPerturbation::new(vec![TrigTerm::cosine(e1()), TrigTerm::cosine(e2.clone())]).unwrap();
        let mu1 = 0.7;
        let env = envelope_trig(&p, &s2(), mu1, &FreeParameters::defaults(2, 2)).unwrap();
        for (gamma, lambda) in env.gammas().iter().zip([e1(), e2]) {
            let expected = s2() * &lambda * lambda.transpose() * (SQRT_2 * 2.0 / mu1.sqrt());
            assert!((gamma - expected).norm() < 1e-14);
        }
        assert_eq!(env.mu0(), 0.0);
    }

    #[test]
    fn trig_phase_example() {
        let p = TrigPerturbation::new(vec![TrigTerm::new(1.0, e1(), FRAC_PI_4)]).unwrap();
        let env = envelope_trig(&p, &s2(), 1.0, &FreeParameters::defaults(1, 1)).unwrap();
        let expected = s2() * e1() * e1().transpose() * (2.0 * SQRT_2);
        assert!((&env.gammas()[0] - expected).norm() < 1e-14);
        assert!((env.mu0() - PI * PI / 2.0).abs() < 1e-13);
    }

    #[test]
    fn trig_missing_omegas() {
        let p = TrigPerturbation::new(vec![TrigTerm::new(1.0, e1(), 1.0), TrigTerm::new(1.0, e1(), 2.0)]).unwrap();
        let params = FreeParameters::defaults(1, 2);
        assert!(matches!(envelope_trig(&p, &s2(), 1.0, &params), Err(Error::MissingParameter(_))));
        assert!(matches!(
            envelope_trig(&p, &s2(), 0.0, &FreeParameters::defaults(2, 2)),
            Err(Error::NonPositiveMu1(_))
        ));
    }

    #[test]
    fn combine_examples() {
        let phi = RMat::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let one = combine_envelopes(
            &[EnvelopePart { c: 1.0, phi: phi.clone(), mu0: 0.3 }],
            2.0,
            &FreeParameters::defaults(1, 1),
        )
        .unwrap();
        assert_eq!(one.gammas()[0], phi);
        assert_eq!(one.mu0(), 0.3);

        let parts =
            [EnvelopePart { c: 1.0, phi: phi.clone(), mu0: 0.3 }, EnvelopePart { c: 1.0, phi: lower(), mu0: 0.5 }];
        let two = combine_envelopes(&parts, 2.0, &FreeParameters::defaults(0, 2)).unwrap();
        assert!((&two.gammas()[0] - &phi * SQRT_2).norm() < 1e-14);
        assert!((&two.gammas()[1] - lower() * SQRT_2).norm() < 1e-14);
        assert!((two.mu0() - 1.6).abs() < 1e-14);
    }

    #[test]
    fn error_part_augments_trig_envelope() {
        let e2 = DVector::from_vec(vec![0.0, 1.0]);
        let p = TrigPerturbation::new(vec![TrigTerm::cosine(e1()), TrigTerm::new(0.5, e2, 1.0)]).unwrap();
        let params = FreeParameters::defaults(2, 3);
        let mut parts = trig_parts(&p, &s2(), 1.0, &params).unwrap();
        parts.push(EnvelopePart { c: 1.0, phi: RMat::identity(2, 2) * 0.1, mu0: 0.01 });
        let env = combine_envelopes(&parts, 1.0, &params).unwrap();
        assert_eq!(env.d(), 3);
        assert!((&env.gammas()[2] - RMat::identity(2, 2) * (0.1 * 3.0_f64.sqrt())).norm() < 1e-14);
    }

    #[test]
    fn free_parameter_validation() {
        assert!(FreeParameters::new(vec![0.0], RMat::from_element(1, 1, 1.0)).is_err());
        let asym = RMat::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0]);
        assert!(FreeParameters::new(vec![1.0, 1.0], asym).is_err());
        let neg = RMat::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0]);
        assert!(FreeParameters::new(vec![1.0, 1.0], neg).is_err());
    }

    #[test]
    fn empty_perturbation_gives_zero_envelope() {
        let env = envelope_trig(&TrigPerturbation::empty(), &s2(), 1.0, &FreeParameters::defaults(0, 0)).unwrap();
        assert_eq!(env.d(), 1);
        assert_eq!(env.gammas()[0], RMat::zeros(2, 2));
    }
}
