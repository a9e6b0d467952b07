//! `a* P + P a = q` by Bartels-Stewart on the complex Schur form of `a`.

use super::{
    check_hpd, frobenius, general_eigs, hermitian_part, schur, CMatrix, KernelError, Result, SPECTRAL_MARGIN_TOL,
};

pub fn lyapunov_solve(a: &CMatrix, q: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    if !a.is_square() || q.nrows() != n || q.ncols() != n {
        return Err(KernelError::Dimension(format!(
            "lyapunov: a {}x{}, q {}x{}",
            a.nrows(),
            a.ncols(),
            q.nrows(),
            q.ncols()
        )));
    }
    check_hpd(q)?;
    let spectrum = general_eigs(a)?;
    let radius = spectrum.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let min_real = spectrum.min_real();
    if min_real <= SPECTRAL_MARGIN_TOL * radius.max(1.0) {
        return Err(KernelError::SpectralMargin { min_real });
    }
    let sf = schur(a)?;
    let t = &sf.triangular;
    let u = &sf.unitary;
    let qt = u.adjoint() * q * u;
    // T* Y + Y T = Qt, T upper triangular: fill Y row by row
    let mut y = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = qt[(i, j)];
            for k in 0..i {
                acc -= t[(k, i)].conj() * y[(k, j)];
            }
            for k in 0..j {
                acc -= y[(i, k)] * t[(k, j)];
            }
            let denom = t[(i, i)].conj() + t[(j, j)];
            if denom.norm() == 0.0 {
                return Err(KernelError::SpectralMargin { min_real });
            }
            y[(i, j)] = acc / denom;
        }
    }
    let p = hermitian_part(&(u * y * u.adjoint()));
    let resid = frobenius(&(a.adjoint() * &p + &p * a - q));
    if resid > 1e-8 * frobenius(q).max(1.0) * (1.0 + frobenius(a) * frobenius(&p)) {
        return Err(KernelError::NoConvergence { iterations: sf.iterations });
    }
    check_hpd(&p)?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::super::{c64, identity, max_abs, real_diag};
    use super::*;

    #[test]
    fn scalar_and_diagonal_cases() {
        let p = lyapunov_solve(&identity(3), &identity(3)).unwrap();
        assert!(max_abs(&(p - identity(3) * c64(0.5, 0.0))) < 1e-15);
        let p = lyapunov_solve(&real_diag(&[1.0, 2.0]), &identity(2)).unwrap();
        assert!(max_abs(&(p - real_diag(&[0.5, 0.25]))) < 1e-15);
    }

    #[test]
    fn imaginary_axis_spectrum_is_refused() {
        let skew = CMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), c64(-1.0, 0.0), c64(0.0, 0.0)]);
        assert!(matches!(lyapunov_solve(&skew, &identity(2)), Err(KernelError::SpectralMargin { .. })));
    }
}
