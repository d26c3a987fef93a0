//! Weyl-quantized trigonometric perturbations `H₁ = Σ r_k cos(λ_kᵀX + φ_k)`.
//!
//! A perturbation is carried both as its list of terms and, through
//! [`to_spectrum`], as the atomic Fourier measure `h` whose Weyl quantization
//! `∫ h(λ) e^{iλᵀX} dλ` reproduces it.

mod envelope;
mod spectrum;

pub use envelope::{
    combine_envelopes, envelope_augmented, envelope_single_cos, envelope_trig, sigma_coefficients, trig_parts,
    trig_term_bound, EnvelopePart, FreeParameters, PerturbationEnvelope,
};
pub use spectrum::{
    to_spectrum, zz_pairs, zz_spectrum, Atom, AtomicSpectrum, MatrixAtom, MatrixAtomicSpectrum, FREQUENCY_MERGE_TOL,
};

use std::f64::consts::TAU;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{self, RMat};

/// One term `r cos(λᵀX + φ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigTerm {
    pub r: f64,
    pub lambda: DVector<f64>,
    pub phi: f64,
}

impl TrigTerm {
    pub fn new(r: f64, lambda: DVector<f64>, phi: f64) -> Self {
        Self { r, lambda, phi }
    }

    pub fn cosine(lambda: DVector<f64>) -> Self {
        Self::new(1.0, lambda, 0.0)
    }

    /// Complex amplitude `a = r e^{iφ}`.
    pub fn amplitude(&self) -> num_complex::Complex64 {
        num_complex::Complex64::from_polar(self.r, self.phi)
    }
}

/// A finite trigonometric polynomial perturbation.
///
/// Zero-amplitude and zero-frequency terms are removed on construction: the
/// first vanish, the second are constants in `H₁` and commute with `X`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrigPerturbation {
    terms: Vec<TrigTerm>,
    stripped: usize,
}

impl TrigPerturbation {
    pub fn new(terms: Vec<TrigTerm>) -> Result<Self> {
        let dim = terms.first().map(|t| t.lambda.len());
        let mut kept = Vec::with_capacity(terms.len());
        let mut stripped = 0;
        for (k, term) in terms.into_iter().enumerate() {
            if Some(term.lambda.len()) != dim {
                return Err(Error::ShapeMismatch(format!(
                    "term {k} has frequency of length {}, expected {}",
                    term.lambda.len(),
                    dim.unwrap_or(0)
                )));
            }
            if !term.r.is_finite() || term.r < 0.0 {
                return Err(Error::InvalidTerm(format!("term {k}: amplitude {} must be >= 0", term.r)));
            }
            if !(term.phi.is_finite() && (0.0..TAU).contains(&term.phi)) {
                return Err(Error::InvalidTerm(format!("term {k}: phase {} outside [0, 2pi)", term.phi)));
            }
            if term.lambda.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidTerm(format!("term {k}: non-finite frequency")));
            }
            if term.r == 0.0 {
                log::warn!("stripping zero-amplitude term {k}");
                stripped += 1;
                continue;
            }
            if term.lambda.iter().all(|&x| x == 0.0) {
                log::warn!("stripping zero-frequency term {k}: constant Hamiltonian shift");
                stripped += 1;
                continue;
            }
            kept.push(term);
        }
        Ok(Self { terms: kept, stripped })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn terms(&self) -> &[TrigTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of terms removed by [`TrigPerturbation::new`].
    pub fn stripped(&self) -> usize {
        self.stripped
    }

    /// Union of two perturbations, terms of `self` first.
    pub fn union(&self, other: &Self) -> Result<Self> {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self::new(terms)
    }

    /// Multiplies every frequency by `factor`.
    pub fn scale_frequencies(&self, factor: f64) -> Self {
        let terms = self.terms.iter().map(|t| TrigTerm::new(t.r, &t.lambda * factor, t.phi)).collect();
        Self { terms, stripped: self.stripped }
    }
}

/// `Z_k = coeff · sin(λᵀX + φ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZAtom {
    pub coeff: DVector<f64>,
    pub lambda: DVector<f64>,
    pub phi: f64,
}

/// Decomposes `Z = i[H₁, X]` into `Z_k = −2 r_k Θλ_k sin(λ_kᵀX + φ_k)`.
pub fn z_atoms(p: &TrigPerturbation, theta: &RMat) -> Result<Vec<ZAtom>> {
    let n = theta.nrows();
    linalg::require_shape(theta, n, n, "theta")?;
    p.terms()
        .iter()
        .map(|t| {
            if t.lambda.len() != n {
                return Err(Error::ShapeMismatch(format!(
                    "frequency of length {} against theta of order {n}",
                    t.lambda.len()
                )));
            }
            Ok(ZAtom { coeff: theta * &t.lambda * (-2.0 * t.r), lambda: t.lambda.clone(), phi: t.phi })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::s2;

    fn e1() -> DVector<f64> {
        DVector::from_vec(vec![1.0, 0.0])
    }

    #[test]
    fn z_atom_of_single_cosine() {
        let p = TrigPerturbation::new(vec![TrigTerm::cosine(e1())]).unwrap();
        let z = z_atoms(&p, &s2()).unwrap();
        assert_eq!(z.len(), 1);
        assert_eq!(z[0].coeff, DVector::from_vec(vec![0.0, 2.0]));
        assert_eq!(z[0].lambda, e1());
        assert_eq!(z[0].phi, 0.0);
    }

    #[test]
    fn zero_amplitude_and_zero_frequency_are_stripped() {
        let p = TrigPerturbation::new(vec![TrigTerm::new(0.0, e1(), 0.0), TrigTerm::new(1.0, DVector::zeros(2), 1.0)])
            .unwrap();
        assert!(p.is_empty());
        assert_eq!(p.stripped(), 2);
        assert!(z_atoms(&p, &s2()).unwrap().is_empty());
    }

    #[test]
    fn two_terms_in_order() {
        let e2 = DVector::from_vec(vec![0.0, 1.0]);
        let p =
            TrigPerturbation::new(vec![TrigTerm::new(1.0, e1(), 0.0), TrigTerm::new(3.0, e2.clone(), 0.5)]).unwrap();
        let z = z_atoms(&p, &s2()).unwrap();
        assert_eq!(z.len(), 2);
        assert_eq!(z[1].lambda, e2);
        // −2·3·S₂e₂ = −6·(1, 0)
        assert_eq!(z[1].coeff, DVector::from_vec(vec![-6.0, 0.0]));
    }

    #[test]
    fn rejects_bad_terms() {
        assert!(TrigPerturbation::new(vec![TrigTerm::new(-1.0, e1(), 0.0)]).is_err());
        assert!(TrigPerturbation::new(vec![TrigTerm::new(1.0, e1(), TAU)]).is_err());
        assert!(TrigPerturbation::new(vec![TrigTerm::new(1.0, e1(), -0.1)]).is_err());
        let mixed = vec![TrigTerm::cosine(e1()), TrigTerm::cosine(DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]))];
        assert!(matches!(TrigPerturbation::new(mixed), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn z_atoms_rejects_dimension_mismatch() {
        let p = TrigPerturbation::new(vec![TrigTerm::cosine(e1())]).unwrap();
        assert!(z_atoms(&p, &linalg::canonical_symplectic(4)).is_err());
    }
}
