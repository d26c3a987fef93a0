//! Brute-force verification in a truncated Fock space.
//!
//! Every operator is an explicit `D × D` complex matrix with `D = cutoff^modes`.
//! Truncation breaks the CCRs on the top Fock level, so identity checks are
//! made on the interior subspace spanned by the lowest levels of each mode.
//!
//! Only the canonical CCR matrix `diag(S₂, …, S₂)` is supported here. Quadratures
//! are `q = a + a†` and `p = −i(a − a†)`, so `[q, p] = 2i`, interleaved as
//! `(q₁, p₁, q₂, p₂)`.

mod checks;
mod lindblad;
mod positivity;

pub use checks::{
    ccr_interior_residual, commutator_residual, commutator_z, function_order_check, zz_from_spectrum,
    zz_product_residual, IdentityResidual,
};
pub use lindblad::{
    dissipation_residual, lindblad_evolve, write_trajectory_csv, EvolveOptions, InitialState, Trajectory,
    TrajectoryPoint,
};
pub use positivity::{
    block_positivity_sample, envelope_gap_blocks, scale_blocks, xx_blocks, BlockPositivity, OperatorBlocks,
};

use nalgebra::DVector;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, RMat};
use crate::weyl::{z_atoms, TrigPerturbation};

/// Default per-mode truncation.
pub const DEFAULT_CUTOFF: usize = 40;
/// Fraction of each mode's levels kept by the interior projector.
pub const DEFAULT_INTERIOR_FRACTION: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockSpace {
    modes: usize,
    cutoff: usize,
}

impl FockSpace {
    pub fn new(modes: usize, cutoff: usize) -> Result<Self> {
        if !(1..=2).contains(&modes) {
            return Err(Error::InvalidFockSpace(format!("{modes} modes; only 1 or 2 are supported")));
        }
        if cutoff < 8 {
            return Err(Error::InvalidFockSpace(format!("cutoff {cutoff} is below 8")));
        }
        Ok(Self { modes, cutoff })
    }

    /// Space for a system with `n` variables.
    pub fn for_system(n: usize, cutoff: usize) -> Result<Self> {
        Self::new(n / 2, cutoff)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.cutoff.pow(self.modes as u32)
    }

    /// Per-mode Fock levels of basis index `i` (mode 0 most significant).
    pub fn levels(&self, i: usize) -> Vec<usize> {
        let mut out = vec![0; self.modes];
        let mut rest = i;
        for slot in out.iter_mut().rev() {
            *slot = rest % self.cutoff;
            rest /= self.cutoff;
        }
        out
    }

    /// Basis indices whose every mode sits below `floor(fraction · cutoff)`.
    pub fn interior(&self, fraction: f64) -> Vec<usize> {
        let keep = ((fraction * self.cutoff as f64).floor() as usize).clamp(1, self.cutoff);
        (0..self.dim()).filter(|&i| self.levels(i).iter().all(|&l| l < keep)).collect()
    }

    /// Basis indices with some mode in its top `ceil(fraction · cutoff)` levels.
    pub fn top_levels(&self, fraction: f64) -> Vec<usize> {
        let width = ((fraction * self.cutoff as f64).ceil() as usize).clamp(1, self.cutoff);
        let from = self.cutoff - width;
        (0..self.dim()).filter(|&i| self.levels(i).iter().any(|&l| l >= from)).collect()
    }

    /// Embeds a single-mode operator acting on `mode`.
    pub fn embed(&self, op: &CMat, mode: usize) -> CMat {
        let eye = CMat::identity(self.cutoff, self.cutoff);
        let mut out = CMat::identity(1, 1);
        for k in 0..self.modes {
            out = if k == mode { out.kronecker(op) } else { out.kronecker(&eye) };
        }
        out
    }

    pub fn vacuum(&self) -> CMat {
        let mut rho = CMat::zeros(self.dim(), self.dim());
        rho[(0, 0)] = C64::new(1.0, 0.0);
        rho
    }
}

/// Truncated lowering operator on `levels` Fock states.
pub fn lowering_operator(levels: usize) -> CMat {
    let mut a = CMat::zeros(levels, levels);
    for k in 1..levels {
        a[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    a
}

/// `(q, p)` of one mode truncated to `levels` states.
pub fn mode_quadratures(levels: usize) -> (CMat, CMat) {
    let a = lowering_operator(levels);
    let ad = a.adjoint();
    let q = &a + &ad;
    let p = (&a - &ad) * C64::new(0.0, -1.0);
    (q, p)
}

pub fn is_canonical_theta(theta: &RMat) -> bool {
    let n = theta.nrows();
    n > 0
        && n.is_multiple_of(2)
        && theta.ncols() == n
        && linalg::max_abs(&(theta - linalg::canonical_symplectic(n))) <= 1e-12
}

/// Quadratures `(q₁, p₁, …)` of `space`; `theta` must be canonical of order
/// `2 · modes`.
pub fn build_quadratures(space: &FockSpace, theta: &RMat) -> Result<Vec<CMat>> {
    if !is_canonical_theta(theta) {
        return Err(Error::NonCanonicalTheta);
    }
    if theta.nrows() != 2 * space.modes() {
        return Err(Error::ShapeMismatch(format!("theta of order {} against {} modes", theta.nrows(), space.modes())));
    }
    let (q, p) = mode_quadratures(space.cutoff());
    Ok((0..space.modes()).flat_map(|m| [space.embed(&q, m), space.embed(&p, m)]).collect())
}

/// `Σ λ_j X_j`.
pub fn linear_combination(lambda: &DVector<f64>, x: &[CMat]) -> CMat {
    let dim = x[0].nrows();
    x.iter().zip(lambda.iter()).fold(CMat::zeros(dim, dim), |acc, (xj, l)| acc + xj * C64::new(*l, 0.0))
}

/// `e^{i fᵀX}`.
pub fn weyl_operator(freq: &DVector<f64>, x: &[CMat]) -> CMat {
    linalg::herm_function(&linear_combination(freq, x), |w| C64::from_polar(1.0, w))
}

/// `H₁ = Σ r_k cos(λ_kᵀX + φ_k)` through the eigendecomposition of each
/// `λ_kᵀX`.
pub fn operator_of_trig(p: &TrigPerturbation, x: &[CMat]) -> Result<CMat> {
    let dim = x.first().map(|m| m.nrows()).unwrap_or(0);
    let mut h = CMat::zeros(dim, dim);
    for (k, term) in p.terms().iter().enumerate() {
        if term.lambda.len() != x.len() {
            return Err(Error::ShapeMismatch(format!("term {k} frequency length {}", term.lambda.len())));
        }
        let kmat = linear_combination(&term.lambda, x);
        h += linalg::herm_function(&kmat, |w| C64::new(term.r * (w + term.phi).cos(), 0.0));
    }
    if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NumericalFailure("non-finite entry in H1".into()));
    }
    Ok(linalg::hermitize(&h))
}

/// Closed form `Z_j = Σ_k (−2 r_k Θλ_k)_j sin(λ_kᵀX + φ_k)`.
pub fn closed_form_z(p: &TrigPerturbation, theta: &RMat, x: &[CMat]) -> Result<Vec<CMat>> {
    let dim = x.first().map(|m| m.nrows()).unwrap_or(0);
    let mut z = vec![CMat::zeros(dim, dim); theta.nrows()];
    for atom in z_atoms(p, theta)? {
        let kmat = linear_combination(&atom.lambda, x);
        let s = linalg::herm_function(&kmat, |w| C64::new((w + atom.phi).sin(), 0.0));
        for (zj, cj) in z.iter_mut().zip(atom.coeff.iter()) {
            if *cj != 0.0 {
                *zj += &s * C64::new(*cj, 0.0);
            }
        }
    }
    Ok(z)
}

/// Principal submatrix on `idx`.
pub fn project(m: &CMat, idx: &[usize]) -> CMat {
    CMat::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

/// Matrix realizations of the perturbed open system.
#[derive(Debug, Clone)]
pub struct FockModel {
    pub space: FockSpace,
    pub theta: RMat,
    pub x: Vec<CMat>,
    /// `½ XᵀRX`.
    pub h0: CMat,
    pub h1: CMat,
    /// Complex jump operators `c_j = (M'X)_{2j−1} + i (M'X)_{2j}`, where `M'`
    /// is `M` in a field basis with canonical `J`.
    pub jumps: Vec<CMat>,
}

impl FockModel {
    pub fn build(sys: &crate::system::QuantumLinearSystem, p: &TrigPerturbation, space: FockSpace) -> Result<Self> {
        let x = build_quadratures(&space, sys.theta())?;
        let n = x.len();
        let dim = space.dim();
        let mut h0 = CMat::zeros(dim, dim);
        for a in 0..n {
            for b in 0..n {
                let r = sys.r()[(a, b)];
                if r != 0.0 {
                    h0 += &x[a] * &x[b] * C64::new(0.5 * r, 0.0);
                }
            }
        }
        let h0 = linalg::hermitize(&h0);
        let h1 = operator_of_trig(p, &x)?;
        let coupling = canonical_field_coupling(sys.coupling(), sys.j())?;
        let jumps = (0..coupling.nrows() / 2)
            .map(|j| {
                let re = linear_combination(&coupling.row(2 * j).transpose(), &x);
                let im = linear_combination(&coupling.row(2 * j + 1).transpose(), &x);
                re + im * C64::new(0.0, 1.0)
            })
            .collect();
        Ok(Self { space, theta: sys.theta().clone(), x, h0, h1, jumps })
    }

    pub fn hamiltonian(&self) -> CMat {
        &self.h0 + &self.h1
    }

    /// Largest anti-Hermitian residual over `X`, `H₀`, `H₁`.
    pub fn hermiticity_residual(&self) -> f64 {
        self.x.iter().chain([&self.h0, &self.h1]).map(linalg::herm_residual).fold(0.0, f64::max)
    }
}

/// Rewrites the coupling in a field basis where `J = diag(S₂, …)`.
///
/// For orthogonal antisymmetric `J` an orthogonal `T` with `J = Tᵀ J' T` exists
/// and `M' = TM` leaves both `MᵀJM` and `MᵀM` unchanged. Other `J` do not
/// correspond to a vacuum field of paired quadratures.
pub fn canonical_field_coupling(m: &RMat, j: &RMat) -> Result<RMat> {
    let dim = j.nrows();
    let canon = linalg::canonical_symplectic(dim);
    if linalg::max_abs(&(j - &canon)) <= 1e-12 {
        return Ok(m.clone());
    }
    if linalg::max_abs(&(j.transpose() * j - RMat::identity(dim, dim))) > 1e-10 {
        return Err(Error::UnsupportedFieldCoupling(
            "J must be orthogonal (pure vacuum field) for the Schrödinger-picture oracle".into(),
        ));
    }
    // Rows (a₁, b₁, a₂, b₂, …) with b_k = −J a_k span J-invariant planes.
    let mut rows: Vec<DVector<f64>> = Vec::with_capacity(dim);
    for e in 0..dim {
        if rows.len() == dim {
            break;
        }
        let mut a = DVector::from_fn(dim, |i, _| if i == e { 1.0 } else { 0.0 });
        for r in &rows {
            a -= r * r.dot(&a);
        }
        let norm = a.norm();
        if norm < 1e-8 {
            continue;
        }
        a /= norm;
        let b = -(j * &a);
        rows.push(a);
        rows.push(b);
    }
    let t = RMat::from_fn(dim, dim, |i, k| rows[i][k]);
    if linalg::max_abs(&(&t * j * t.transpose() - &canon)) > 1e-9 {
        return Err(Error::NumericalFailure("failed to bring J to canonical form".into()));
    }
    Ok(t * m)
}
