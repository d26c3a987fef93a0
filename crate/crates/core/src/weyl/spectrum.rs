use nalgebra::DVector;
use num_complex::Complex64 as C64;

use super::TrigPerturbation;
use crate::error::{Error, Result};
use crate::linalg::{CMat, RMat};

/// Absolute tolerance under which two frequencies are treated as equal.
pub const FREQUENCY_MERGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub coeff: C64,
    pub freq: DVector<f64>,
}

/// `h(λ) = Σ coeff · δ(λ − freq)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AtomicSpectrum {
    atoms: Vec<Atom>,
}

fn same_freq(a: &DVector<f64>, b: &DVector<f64>, tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b.iter()).all(|(x, y)| (x - y).abs() <= tol)
}

impl AtomicSpectrum {
    /// Builds a spectrum, checking `h(−λ) = conj h(λ)` so that the quantized
    /// operator is self-adjoint.
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        const TOL: f64 = 1e-12;
        let dim = atoms.first().map(|a| a.freq.len());
        for (k, atom) in atoms.iter().enumerate() {
            if Some(atom.freq.len()) != dim {
                return Err(Error::ShapeMismatch(format!("atom {k} has mismatched frequency length")));
            }
            let mirror = -&atom.freq;
            let partner: C64 = atoms.iter().filter(|b| same_freq(&b.freq, &mirror, TOL)).map(|b| b.coeff).sum();
            let own: C64 = atoms.iter().filter(|b| same_freq(&b.freq, &atom.freq, TOL)).map(|b| b.coeff).sum();
            if (partner - own.conj()).norm() > TOL * (1.0 + own.norm()) {
                return Err(Error::NonHermitianSpectrum(format!(
                    "atom {k} at {:?} has no conjugate partner",
                    atom.freq.as_slice()
                )));
            }
        }
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

/// Fourier measure of a trigonometric polynomial: each term contributes
/// `(½ r e^{iφ}, λ)` and `(½ r e^{−iφ}, −λ)`.
pub fn to_spectrum(p: &TrigPerturbation) -> AtomicSpectrum {
    let atoms = p
        .terms()
        .iter()
        .flat_map(|t| {
            let half = t.amplitude() * 0.5;
            [Atom { coeff: half, freq: t.lambda.clone() }, Atom { coeff: half.conj(), freq: -&t.lambda }]
        })
        .collect();
    // Hermitian by construction.
    AtomicSpectrum { atoms }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixAtom {
    pub coeff: CMat,
    pub freq: DVector<f64>,
}

/// Matrix-valued atomic measure `h̃(λ) = Σ coeff · δ(λ − freq)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatrixAtomicSpectrum {
    atoms: Vec<MatrixAtom>,
}

impl MatrixAtomicSpectrum {
    pub fn atoms(&self) -> &[MatrixAtom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Adds coefficients of atoms whose frequencies agree within `tol`,
    /// keeping first-occurrence order.
    pub fn merged(&self, tol: f64) -> Self {
        let mut out: Vec<MatrixAtom> = Vec::new();
        for atom in &self.atoms {
            match out.iter_mut().find(|m| same_freq(&m.freq, &atom.freq, tol)) {
                Some(existing) => existing.coeff += &atom.coeff,
                None => out.push(atom.clone()),
            }
        }
        Self { atoms: out }
    }
}

/// Pairwise products of atoms forming `h̃`, before merging.
///
/// With `λ − τ = f₁` and `τ = f₂` each pair `(c₁, f₁), (c₂, f₂)` gives
/// `c₁c₂ f₁f₂ᵀ e^{i f₂ᵀΘ(f₁+f₂)}` at `f₁ + f₂`, and `ZZᵀ = 4Θ (∫ h̃ e^{iλᵀX}) Θ`.
pub fn zz_pairs(h: &AtomicSpectrum, theta: &RMat) -> MatrixAtomicSpectrum {
    let mut atoms = Vec::with_capacity(h.len() * h.len());
    for a in h.atoms() {
        for b in h.atoms() {
            let sum = &a.freq + &b.freq;
            let phase = (b.freq.transpose() * theta * &sum)[(0, 0)];
            let scalar = a.coeff * b.coeff * C64::from_polar(1.0, phase);
            let outer = &a.freq * b.freq.transpose();
            atoms.push(MatrixAtom { coeff: outer.map(|x| scalar * x), freq: sum });
        }
    }
    MatrixAtomicSpectrum { atoms }
}

/// [`zz_pairs`] with coincident frequencies merged.
pub fn zz_spectrum(h: &AtomicSpectrum, theta: &RMat) -> MatrixAtomicSpectrum {
    zz_pairs(h, theta).merged(FREQUENCY_MERGE_TOL)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_2;

    use super::*;
    use crate::linalg::s2;
    use crate::weyl::TrigTerm;

    fn e1() -> DVector<f64> {
        DVector::from_vec(vec![1.0, 0.0])
    }

    #[test]
    fn single_cosine_spectrum() {
        let p = TrigPerturbation::new(vec![TrigTerm::cosine(e1())]).unwrap();
        let h = to_spectrum(&p);
        assert_eq!(h.len(), 2);
        assert_eq!(h.atoms()[0], Atom { coeff: C64::new(0.5, 0.0), freq: e1() });
        assert_eq!(h.atoms()[1].freq, -e1());
        assert!((h.atoms()[1].coeff - C64::new(0.5, 0.0)).norm() < 1e-16);
    }

    #[test]
    fn empty_perturbation_has_empty_spectrum() {
        assert!(to_spectrum(&TrigPerturbation::empty()).is_empty());
        assert!(zz_spectrum(&AtomicSpectrum::default(), &s2()).is_empty());
    }

    #[test]
    fn quarter_turn_phase() {
        let p = TrigPerturbation::new(vec![TrigTerm::new(2.0, e1(), FRAC_PI_2)]).unwrap();
        let h = to_spectrum(&p);
        assert!((h.atoms()[0].coeff - C64::new(0.0, 1.0)).norm() < 1e-15);
        assert!((h.atoms()[1].coeff - C64::new(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn hermitian_symmetry_is_enforced() {
        let lonely = vec![Atom { coeff: C64::new(1.0, 0.0), freq: e1() }];
        assert!(matches!(AtomicSpectrum::new(lonely), Err(Error::NonHermitianSpectrum(_))));
        let wrong_conj =
            vec![Atom { coeff: C64::new(0.0, 1.0), freq: e1() }, Atom { coeff: C64::new(0.0, 1.0), freq: -e1() }];
        assert!(AtomicSpectrum::new(wrong_conj).is_err());
        let p = TrigPerturbation::new(vec![TrigTerm::new(1.5, e1(), 1.0)]).unwrap();
        assert!(AtomicSpectrum::new(to_spectrum(&p).atoms().to_vec()).is_ok());
    }

    #[test]
    fn pair_count_and_merge() {
        let p = TrigPerturbation::new(vec![TrigTerm::cosine(e1())]).unwrap();
        let h = to_spectrum(&p);
        assert_eq!(zz_pairs(&h, &s2()).len(), 4);
        let merged = zz_spectrum(&h, &s2());
        // frequencies 2λ, 0, −2λ
        assert_eq!(merged.len(), 3);
        let zero = merged.atoms().iter().find(|a| a.freq.norm() == 0.0).unwrap();
        // two cross terms ¼·λ(−λ)ᵀ with unit phase
        assert!((zero.coeff[(0, 0)] - C64::new(-0.5, 0.0)).norm() < 1e-15);
    }
}
