use std::cmp::Ordering;

use nalgebra::SymmetricEigen;

use super::{
    all_finite, c64, cholesky_factor, frobenius, hermitian_deviation, hermitian_part, CMatrix, CVector, KernelError,
    Result, C64, HERMITIAN_TOL,
};

/// Maximum QR sweeps per eigenvalue before giving up.
const QR_SWEEPS_PER_EIGENVALUE: usize = 60;

/// A Hermitian pair `(lhs, rhs)` with `rhs` positive definite.
#[derive(Debug, Clone)]
pub struct HermitianPencil {
    lhs: CMatrix,
    rhs: CMatrix,
}

impl HermitianPencil {
    pub fn new(lhs: CMatrix, rhs: CMatrix) -> Result<Self> {
        if !lhs.is_square() || !rhs.is_square() || lhs.nrows() != rhs.nrows() {
            return Err(KernelError::Dimension(format!(
                "pencil lhs {}x{} rhs {}x{}",
                lhs.nrows(),
                lhs.ncols(),
                rhs.nrows(),
                rhs.ncols()
            )));
        }
        if !all_finite(&lhs) || !all_finite(&rhs) {
            return Err(KernelError::NonFinite);
        }
        let dev = hermitian_deviation(&lhs);
        if dev > HERMITIAN_TOL {
            return Err(KernelError::NotHermitian { deviation: dev });
        }
        Ok(Self { lhs: hermitian_part(&lhs), rhs })
    }

    pub fn lhs(&self) -> &CMatrix {
        &self.lhs
    }

    pub fn rhs(&self) -> &CMatrix {
        &self.rhs
    }

    pub fn dim(&self) -> usize {
        self.lhs.nrows()
    }
}

/// Ascending eigenvalues of a Hermitian pencil with `rhs`-orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct PencilEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
    /// `max_i |L v_i - mu_i B v_i| / (|L| + |mu_i| |B|)` (Frobenius norms).
    pub residual: f64,
}

impl PencilEigen {
    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(f64::INFINITY)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(f64::NEG_INFINITY)
    }

    /// Number of eigenvalues `<= threshold`.
    pub fn count_at_or_below(&self, threshold: f64) -> usize {
        self.values.iter().filter(|&&v| v <= threshold).count()
    }
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix.
pub fn hermitian_eigs(m: &CMatrix) -> Result<PencilEigen> {
    let n = m.nrows();
    if n == 0 {
        return Ok(PencilEigen { values: vec![], vectors: CMatrix::zeros(0, 0), residual: 0.0 });
    }
    if !all_finite(m) {
        return Err(KernelError::NonFinite);
    }
    let sym = hermitian_part(m);
    let eig =
        SymmetricEigen::try_new(sym.clone(), f64::EPSILON, 0).ok_or(KernelError::NoConvergence { iterations: 0 })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    let scale = frobenius(&sym).max(f64::MIN_POSITIVE);
    let mut residual = 0.0_f64;
    for (k, &mu) in values.iter().enumerate() {
        let v = vectors.column(k);
        let r = &sym * v - v * c64(mu, 0.0);
        residual = residual.max(r.norm() / scale);
    }
    Ok(PencilEigen { values, vectors, residual })
}

/// Ascending eigenvalues of a Hermitian matrix, without eigenvectors.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    if !all_finite(m) {
        return Err(KernelError::NonFinite);
    }
    let mut values: Vec<f64> = hermitian_part(m).symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Offset of the inverse-iteration shift above the top eigenvalue, relative to `|M|_F`.
const INVERSE_ITERATION_OFFSET: f64 = 1e-10;
const INVERSE_ITERATIONS: usize = 3;
/// Relative residual accepted from inverse iteration before falling back.
const INVERSE_ITERATION_TOL: f64 = 1e-12;

/// Largest eigenvalue of a Hermitian matrix with a unit eigenvector, by
/// shifted inverse iteration; falls back to the full decomposition when the
/// iteration does not settle.
pub fn top_hermitian_eigenpair(m: &CMatrix) -> Result<(f64, CVector)> {
    let n = m.nrows();
    let top = *hermitian_eigenvalues(m)?
        .last()
        .ok_or_else(|| KernelError::Dimension("eigenpair of an empty matrix".into()))?;
    let sym = hermitian_part(m);
    let scale = frobenius(&sym).max(f64::MIN_POSITIVE);
    let shift = top + INVERSE_ITERATION_OFFSET * scale;
    let lu = (CMatrix::identity(n, n) * c64(shift, 0.0) - &sym).lu();
    let mut x = CVector::from_fn(n, |k, _| c64(1.0, (k as f64 + 1.0).sqrt()));
    x /= c64(x.norm(), 0.0);
    for _ in 0..INVERSE_ITERATIONS {
        match lu.solve(&x) {
            Some(y) if y.norm().is_finite() && y.norm() > 0.0 => x = &y / c64(y.norm(), 0.0),
            _ => break,
        }
    }
    let residual = (&sym * &x - &x * c64(top, 0.0)).norm() / scale;
    if residual <= INVERSE_ITERATION_TOL {
        return Ok((top, x));
    }
    let eig = hermitian_eigs(m)?;
    Ok((top, eig.vectors.column(n - 1).into_owned()))
}

/// Solves `lhs v = mu rhs v` through a Cholesky reduction of `rhs`.
pub fn hermitian_pencil_eigs(pencil: &HermitianPencil) -> Result<PencilEigen> {
    let n = pencil.dim();
    if n == 0 {
        return Ok(PencilEigen { values: vec![], vectors: CMatrix::zeros(0, 0), residual: 0.0 });
    }
    let l = cholesky_factor(&pencil.rhs)?;
    // C = L^{-1} lhs L^{-*}
    let left = l.solve_lower_triangular(&pencil.lhs).ok_or(KernelError::Singular)?;
    let c = l.solve_lower_triangular(&left.adjoint()).ok_or(KernelError::Singular)?.adjoint();
    let std = hermitian_eigs(&c)?;
    let vectors = l.adjoint().solve_upper_triangular(&std.vectors).ok_or(KernelError::Singular)?;
    let lhs_scale = frobenius(&pencil.lhs);
    let rhs_scale = frobenius(&pencil.rhs);
    let mut residual = 0.0_f64;
    for (k, &mu) in std.values.iter().enumerate() {
        let v = vectors.column(k);
        let r = &pencil.lhs * v - (&pencil.rhs * v) * c64(mu, 0.0);
        let scale = (lhs_scale + mu.abs() * rhs_scale).max(f64::MIN_POSITIVE);
        residual = residual.max(r.norm() / scale);
    }
    Ok(PencilEigen { values: std.values, vectors, residual })
}

/// Complex Schur form `M = Z T Z*` with `T` upper triangular.
#[derive(Debug, Clone)]
pub struct SchurForm {
    pub unitary: CMatrix,
    pub triangular: CMatrix,
    pub iterations: usize,
}

/// Eigenvalues sorted by real part (ties by imaginary part), unit eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<C64>,
    pub eigenvectors: CMatrix,
    /// `max_i |M v_i - l_i v_i| / |M|_F`.
    pub residual: f64,
}

impl EigenDecomposition {
    pub fn spectral_abscissa(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_real(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.re).fold(f64::INFINITY, f64::min)
    }
}

fn givens(a: C64, b: C64) -> (f64, C64) {
    // returns (c, s) with [c s; -conj(s) c] [a; b] = [r; 0]
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, c64(0.0, 0.0));
    }
    let an = a.norm();
    if an == 0.0 {
        return (0.0, b.conj() / bn);
    }
    let nrm = an.hypot(bn);
    let c = an / nrm;
    let s = (a / an) * b.conj() / nrm;
    (c, s)
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half_tr = (a + d) * 0.5;
    let disc = ((a - d) * 0.5).powu(2) + b * c;
    let root = disc.sqrt();
    let l1 = half_tr + root;
    let l2 = half_tr - root;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Complex Schur decomposition by Hessenberg reduction and shifted QR sweeps.
pub fn schur(m: &CMatrix) -> Result<SchurForm> {
    let n = m.nrows();
    if !m.is_square() {
        return Err(KernelError::Dimension(format!("schur of {}x{}", m.nrows(), m.ncols())));
    }
    if !all_finite(m) {
        return Err(KernelError::NonFinite);
    }
    if n == 0 {
        return Ok(SchurForm { unitary: CMatrix::zeros(0, 0), triangular: CMatrix::zeros(0, 0), iterations: 0 });
    }
    let (mut z, mut h) = m.clone().hessenberg().unpack();
    for j in 0..n {
        for i in (j + 2)..n {
            h[(i, j)] = c64(0.0, 0.0);
        }
    }
    let eps = f64::EPSILON;
    let hnorm = frobenius(&h).max(f64::MIN_POSITIVE);
    let max_iter = QR_SWEEPS_PER_EIGENVALUE * n.max(1);
    let mut total = 0usize;
    let mut since_deflation = 0usize;
    let mut hi = n - 1;
    let mut rot: Vec<(f64, C64)> = Vec::with_capacity(n);
    while hi > 0 {
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let mut diag = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            if diag == 0.0 {
                diag = hnorm;
            }
            if sub <= eps * diag {
                h[(lo, lo - 1)] = c64(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        if total >= max_iter {
            return Err(KernelError::NoConvergence { iterations: total });
        }
        total += 1;
        since_deflation += 1;
        let sigma = if since_deflation.is_multiple_of(11) {
            // exceptional shift to break cycles
            h[(hi, hi)] + c64(0.75 * h[(hi, hi - 1)].norm(), 0.25 * h[(hi, hi - 1)].norm())
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        for k in lo..=hi {
            h[(k, k)] -= sigma;
        }
        rot.clear();
        for k in lo..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            for col in k..n {
                let x = h[(k, col)];
                let y = h[(k + 1, col)];
                h[(k, col)] = x * c + s * y;
                h[(k + 1, col)] = -s.conj() * x + y * c;
            }
            h[(k + 1, k)] = c64(0.0, 0.0);
            rot.push((c, s));
        }
        for (idx, k) in (lo..hi).enumerate() {
            let (c, s) = rot[idx];
            let top = (k + 2).min(hi + 1);
            for row in 0..top {
                let x = h[(row, k)];
                let y = h[(row, k + 1)];
                h[(row, k)] = x * c + y * s.conj();
                h[(row, k + 1)] = -x * s + y * c;
            }
            for row in 0..n {
                let x = z[(row, k)];
                let y = z[(row, k + 1)];
                z[(row, k)] = x * c + y * s.conj();
                z[(row, k + 1)] = -x * s + y * c;
            }
        }
        for k in lo..=hi {
            h[(k, k)] += sigma;
        }
    }
    for j in 0..n {
        for i in (j + 1)..n {
            h[(i, j)] = c64(0.0, 0.0);
        }
    }
    Ok(SchurForm { unitary: z, triangular: h, iterations: total })
}

/// Sort order: real part ascending; values whose real parts agree within
/// `tol` (chained) are ordered by imaginary part ascending.
pub(crate) fn spectral_order(values: &[C64], tol: f64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].re.total_cmp(&values[b].re));
    let mut out = Vec::with_capacity(idx.len());
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end]].re - values[idx[end - 1]].re <= tol {
            end += 1;
        }
        let mut group = idx[start..end].to_vec();
        group.sort_by(|&a, &b| match values[a].im.total_cmp(&values[b].im) {
            Ordering::Equal => values[a].re.total_cmp(&values[b].re),
            o => o,
        });
        out.extend(group);
        start = end;
    }
    out
}

/// Eigenvalues and eigenvectors of a general complex matrix.
pub fn general_eigs(m: &CMatrix) -> Result<EigenDecomposition> {
    let n = m.nrows();
    let sf = schur(m)?;
    let t = &sf.triangular;
    let tnorm = frobenius(t).max(f64::MIN_POSITIVE);
    let small = f64::EPSILON * tnorm;
    let mut y = CMatrix::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        y[(k, k)] = c64(1.0, 0.0);
        for i in (0..k).rev() {
            let mut acc = t[(i, k)];
            for j in (i + 1)..k {
                acc += t[(i, j)] * y[(j, k)];
            }
            let mut denom = t[(i, i)] - lambda;
            if denom.norm() < small {
                denom = c64(small, 0.0);
            }
            y[(i, k)] = -acc / denom;
        }
    }
    let mut vectors = &sf.unitary * y;
    for k in 0..n {
        let nrm = vectors.column(k).norm();
        if nrm > 0.0 {
            vectors.column_mut(k).scale_mut(1.0 / nrm);
        }
    }
    let values: Vec<C64> = (0..n).map(|k| t[(k, k)]).collect();
    let scale = values.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let order = spectral_order(&values, 1e-10 * scale);
    let eigenvalues: Vec<C64> = order.iter().map(|&i| values[i]).collect();
    let mut eigenvectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &vectors.column(src));
    }
    let mnorm = frobenius(m).max(f64::MIN_POSITIVE);
    let mut residual = 0.0_f64;
    for (k, &lambda) in eigenvalues.iter().enumerate() {
        let v: CVector = eigenvectors.column(k).into_owned();
        let r = m * &v - &v * lambda;
        residual = residual.max(r.norm() / mnorm);
    }
    Ok(EigenDecomposition { eigenvalues, eigenvectors, residual })
}
