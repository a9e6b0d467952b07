//! Dense complex linear-algebra kernels.
//!
//! Everything downstream is built on a handful of operations: Hermitian
//! pencil eigenproblems, a general (non-Hermitian) eigendecomposition via a
//! complex Schur form, the matrix exponential, operator norms relative to a
//! Gram matrix and the Lyapunov equation. Storage is dense `DMatrix<Complex64>`
//! and every routine reports the residual it achieved.

mod eig;
mod expm;
mod lyapunov;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

pub use eig::{
    general_eigs, hermitian_eigenvalues, hermitian_eigs, hermitian_pencil_eigs, schur, top_hermitian_eigenpair,
    EigenDecomposition, HermitianPencil, PencilEigen, SchurForm,
};
pub use expm::{matrix_exponential, PADE_ORDER, PADE_THETA};
pub use lyapunov::lyapunov_solve;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Absolute tolerance used for residual and definiteness decisions.
pub const ABS_TOL: f64 = 1e-10;
/// Relative tolerance used when comparing against a matrix scale.
pub const REL_TOL: f64 = 1e-8;
/// Relative deviation from conjugate symmetry accepted for "Hermitian" input.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Relative singular-value threshold for numerical rank decisions.
pub const RANK_TOL: f64 = 1e-12;
/// Minimum real part (relative to the spectral radius) for Lyapunov solves.
pub const SPECTRAL_MARGIN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("matrix is not Hermitian: relative deviation {deviation:.3e}")]
    NotHermitian { deviation: f64 },
    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },
    #[error("eigenvalue iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("matrix exponential cannot be represented (1-norm {norm:.3e})")]
    Scale { norm: f64 },
    #[error("spectrum too close to the imaginary axis (min real part {min_real:.3e})")]
    SpectralMargin { min_real: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is singular to working precision")]
    Singular,
    #[error("non-finite entries in input")]
    NonFinite,
}

pub type Result<T> = std::result::Result<T, KernelError>;

pub fn c64(re: f64, im: f64) -> C64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Real diagonal matrix as a complex matrix.
pub fn real_diag(values: &[f64]) -> CMatrix {
    let d = CVector::from_iterator(values.len(), values.iter().map(|&v| c64(v, 0.0)));
    CMatrix::from_diagonal(&d)
}

pub fn complex_diag(values: &[C64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_column_slice(values))
}

/// `(M + M*) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c64(0.5, 0.0)
}

/// `(M - M*) / 2`.
pub fn skew_part(m: &CMatrix) -> CMatrix {
    (m - m.adjoint()) * c64(0.5, 0.0)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// `max|M - M*| / max(1, max|M|)`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let scale = max_abs(m).max(1.0);
    max_abs(&(m - m.adjoint())) / scale
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    hermitian_deviation(m) <= tol
}

pub fn all_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let svd = m.clone().svd(false, false);
    svd.singular_values.iter().cloned().fold(0.0, f64::max)
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().cloned().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Numerical rank with threshold `RANK_TOL * sigma_max`.
pub fn numerical_rank(m: &CMatrix) -> usize {
    let s = singular_values(m);
    let Some(&top) = s.first() else { return 0 };
    if top == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > RANK_TOL * top).count()
}

/// Solve `a x = b` with partial-pivoting LU; refuses numerically singular `a`.
pub fn solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() || a.nrows() != b.nrows() {
        return Err(KernelError::Dimension(format!(
            "solve: {}x{} system with {} right-hand rows",
            a.nrows(),
            a.ncols(),
            b.nrows()
        )));
    }
    if a.nrows() == 0 {
        return Ok(b.clone());
    }
    let lu = a.clone().lu();
    let u = lu.u();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for i in 0..u.nrows() {
        let p = u[(i, i)].norm();
        lo = lo.min(p);
        hi = hi.max(p);
    }
    if hi == 0.0 || lo <= RANK_TOL * hi {
        return Err(KernelError::Singular);
    }
    lu.solve(b).ok_or(KernelError::Singular)
}

pub fn inverse(a: &CMatrix) -> Result<CMatrix> {
    solve(a, &identity(a.nrows()))
}

/// Orthonormal bases `(range_of_adjoint, kernel)` of a full-row-rank-or-not
/// matrix `j`, using the eigenvectors of `j* j`. The split point is the
/// numerical rank from the singular values of `j`.
pub fn row_space_and_kernel(j: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let n = j.ncols();
    let rank = numerical_rank(j);
    let gram = j.adjoint() * j;
    let eig = hermitian_eigs(&gram)?;
    // ascending eigenvalues: the first n - rank span the kernel
    let k = n - rank;
    let kernel = eig.vectors.columns(0, k).into_owned();
    let rows = eig.vectors.columns(k, rank).into_owned();
    Ok((rows, kernel))
}

/// Weighted operator norm `sup |T u|_G / |u|_G` for a positive definite Gram `G`.
pub fn weighted_operator_norm(op: &CMatrix, gram: &CMatrix) -> Result<f64> {
    if !op.is_square() || op.nrows() != gram.nrows() || !gram.is_square() {
        return Err(KernelError::Dimension(format!(
            "operator {}x{} against gram {}x{}",
            op.nrows(),
            op.ncols(),
            gram.nrows(),
            gram.ncols()
        )));
    }
    let l = cholesky_factor(gram)?;
    // |T u|_G = |L* T u|; substituting u = L^{-*} w gives M = L* T L^{-*}
    let inner = l.adjoint() * op;
    let transformed = l.solve_lower_triangular(&inner.adjoint()).ok_or(KernelError::Singular)?.adjoint();
    Ok(spectral_norm(&transformed))
}

/// Lower Cholesky factor of a Hermitian positive definite matrix.
pub fn cholesky_factor(gram: &CMatrix) -> Result<CMatrix> {
    if !gram.is_square() {
        return Err(KernelError::Dimension(format!("cholesky of {}x{}", gram.nrows(), gram.ncols())));
    }
    if !all_finite(gram) {
        return Err(KernelError::NonFinite);
    }
    let dev = hermitian_deviation(gram);
    if dev > HERMITIAN_TOL {
        return Err(KernelError::NotHermitian { deviation: dev });
    }
    let a = hermitian_part(gram);
    let n = a.nrows();
    let scale = (0..n).map(|i| a[(i, i)].re.abs()).fold(0.0, f64::max);
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d <= f64::EPSILON * scale || d.is_nan() {
            let min_eigenvalue = hermitian_eigs(&a).map(|e| e.values[0]).unwrap_or(f64::NAN);
            return Err(KernelError::NotPositiveDefinite { min_eigenvalue });
        }
        let djj = d.sqrt();
        l[(j, j)] = c64(djj, 0.0);
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Checks Hermitian positive definiteness with `min eig > ABS_TOL * max(1, max eig)`.
pub fn check_hpd(gram: &CMatrix) -> Result<()> {
    if !all_finite(gram) {
        return Err(KernelError::NonFinite);
    }
    let dev = hermitian_deviation(gram);
    if dev > HERMITIAN_TOL {
        return Err(KernelError::NotHermitian { deviation: dev });
    }
    let eig = hermitian_eigs(&hermitian_part(gram))?;
    let lo = eig.values.first().copied().unwrap_or(1.0);
    let hi = eig.values.last().copied().unwrap_or(1.0);
    if lo <= ABS_TOL * hi.abs().max(1.0) {
        return Err(KernelError::NotPositiveDefinite { min_eigenvalue: lo });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighted_norm_identity_and_diagonal() {
        let g = CMatrix::from_row_slice(2, 2, &[c64(2.0, 0.0), c64(0.5, 0.5), c64(0.5, -0.5), c64(3.0, 0.0)]);
        assert!((weighted_operator_norm(&identity(2), &g).unwrap() - 1.0).abs() < 1e-13);
        let t = real_diag(&[2.0, 3.0]);
        assert!((weighted_operator_norm(&t, &identity(2)).unwrap() - 3.0).abs() < 1e-13);
    }

    #[test]
    fn weighted_norm_rejects_indefinite_gram() {
        let g = real_diag(&[1.0, -1.0]);
        assert!(matches!(weighted_operator_norm(&identity(2), &g), Err(KernelError::NotPositiveDefinite { .. })));
    }

    #[test]
    fn kernel_split_of_trace_map() {
        let j = CMatrix::from_row_slice(
            2,
            4,
            &[
                c64(1.0, 0.0),
                c64(0.0, 0.0),
                c64(0.0, 0.0),
                c64(0.0, 0.0),
                c64(0.0, 0.0),
                c64(0.0, 0.0),
                c64(0.0, 0.0),
                c64(1.0, 0.0),
            ],
        );
        let (rows, ker) = row_space_and_kernel(&j).unwrap();
        assert_eq!(rows.ncols(), 2);
        assert_eq!(ker.ncols(), 2);
        assert!(max_abs(&(&j * &ker)) < 1e-14);
    }

    #[test]
    fn solve_refuses_singular() {
        let a = real_diag(&[1.0, 0.0]);
        assert_eq!(solve(&a, &identity(2)), Err(KernelError::Singular));
    }
}
