//! Small dense linear-algebra helpers shared across modules.
//!
//! Vectorization is column stacking throughout, so that
//! `vec(A X B) = (Bᵀ ⊗ A) vec(X)`. nalgebra stores matrices column-major,
//! which makes `vec` a plain copy of the backing slice.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type RMat = DMatrix<f64>;
pub type CMat = DMatrix<C64>;

/// The 2×2 symplectic block `[[0, 1], [-1, 0]]`.
pub fn s2() -> RMat {
    RMat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])
}

/// Block-diagonal `diag(S₂, …, S₂)` of order `n` (n even).
pub fn canonical_symplectic(n: usize) -> RMat {
    let mut out = RMat::zeros(n, n);
    for k in 0..n / 2 {
        out[(2 * k, 2 * k + 1)] = 1.0;
        out[(2 * k + 1, 2 * k)] = -1.0;
    }
    out
}

pub fn vec_of(m: &RMat) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn unvec(v: &DVector<f64>, n: usize) -> RMat {
    RMat::from_column_slice(n, n, v.as_slice())
}

pub fn symmetrize(m: &RMat) -> RMat {
    (m + m.transpose()) * 0.5
}

/// Frobenius inner product `Tr(Aᵀ B)`.
pub fn frob(a: &RMat, b: &RMat) -> f64 {
    a.dot(b)
}

pub fn max_abs(m: &RMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Spectral (largest singular value) norm.
pub fn op_norm(m: &RMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

pub fn require_shape(m: &RMat, rows: usize, cols: usize, name: &str) -> Result<()> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(Error::ShapeMismatch(format!("`{name}` is {}x{}, expected {rows}x{cols}", m.nrows(), m.ncols())));
    }
    Ok(())
}

/// All eigenvalues of a real square matrix.
pub fn eigenvalues(m: &RMat) -> Result<Vec<C64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::ShapeMismatch(format!("eigenvalues of a {}x{} matrix", m.nrows(), m.ncols())));
    }
    if m.is_empty() {
        return Ok(Vec::new());
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NumericalFailure("non-finite matrix entry".into()));
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::NumericalFailure("Schur decomposition did not converge".into()))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn sym_eigenvalues(m: &RMat) -> Vec<f64> {
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn sym_min_eigenvalue(m: &RMat) -> f64 {
    sym_eigenvalues(m).first().copied().unwrap_or(0.0)
}

pub fn sym_max_eigenvalue(m: &RMat) -> f64 {
    sym_eigenvalues(m).last().copied().unwrap_or(0.0)
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| C64::new(x, 0.0))
}

pub fn dagger(m: &CMat) -> CMat {
    m.adjoint()
}

/// Hermitian part `(M + M†)/2`.
pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

pub fn herm_residual(m: &CMat) -> f64 {
    (m - m.adjoint()).iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Eigenvalues of a complex Hermitian matrix, ascending.
pub fn herm_eigenvalues(m: &CMat) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(hermitize(m)).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn herm_min_eigenvalue(m: &CMat) -> f64 {
    herm_eigenvalues(m).first().copied().unwrap_or(0.0)
}

/// `f(K)` for a Hermitian `K` through its eigendecomposition.
pub fn herm_function(k: &CMat, f: impl Fn(f64) -> C64) -> CMat {
    let eig = SymmetricEigen::new(hermitize(k));
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        let fj = f(*lambda);
        for z in scaled.column_mut(j).iter_mut() {
            *z *= fj;
        }
    }
    scaled * v.adjoint()
}

pub fn frob_norm_c(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace_c(m: &CMat) -> C64 {
    m.diagonal().iter().sum()
}

/// Condition number in the 2-norm.
pub fn condition_number(m: &RMat) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let (lo, hi) = (sv.min(), sv.max());
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Solves `L(X) = -C` for the Lyapunov operator `L(X) = A X + X Aᵀ` through the
/// vectorized `n² × n²` system `(I ⊗ A + A ⊗ I) vec(X) = -vec(C)`.
pub fn lyapunov_solve(a: &RMat, c: &RMat) -> Result<RMat> {
    let n = a.nrows();
    let eye = RMat::identity(n, n);
    let op = eye.kronecker(a) + a.kronecker(&eye);
    let rhs = -vec_of(c);
    let x = op.lu().solve(&rhs).ok_or_else(|| Error::NumericalFailure("singular Lyapunov operator".into()))?;
    Ok(unvec(&x, n))
}
