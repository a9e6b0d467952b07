//! Dense kernels against independently computed references.

use essform::numkernel::{
    c64, cholesky_factor, general_eigs, hermitian_eigs, hermitian_pencil_eigs, identity, inverse, lyapunov_solve,
    matrix_exponential, max_abs, real_diag, row_space_and_kernel, top_hermitian_eigenpair, weighted_operator_norm,
    HermitianPencil,
};
use essform::sampling::{complex_normal_matrix, complex_normal_vector, random_hermitian, random_hpd, rng};
use essform::{CMatrix, C64};

/// Characteristic polynomial coefficients `c_0 = 1, ..., c_n` of `det(z I - M)`
/// by the Faddeev-LeVerrier recursion.
fn characteristic_polynomial(m: &CMatrix) -> Vec<C64> {
    let n = m.nrows();
    let mut coeffs = vec![c64(1.0, 0.0)];
    let mut mk = CMatrix::zeros(n, n);
    for k in 1..=n {
        mk = m * (&mk + identity(n) * coeffs[k - 1]);
        let c = -mk.trace() / c64(k as f64, 0.0);
        coeffs.push(c);
    }
    coeffs
}

/// Durand-Kerner simultaneous iteration on a monic polynomial.
fn polynomial_roots(coeffs: &[C64]) -> Vec<C64> {
    let n = coeffs.len() - 1;
    let eval = |z: C64| coeffs.iter().fold(c64(0.0, 0.0), |acc, &c| acc * z + c);
    let seed = c64(0.4, 0.9);
    let radius = 1.0 + coeffs.iter().skip(1).map(|c| c.norm()).fold(0.0, f64::max);
    let mut roots: Vec<C64> = (0..n).map(|k| seed.powu(k as u32) * radius).collect();
    for _ in 0..5000 {
        let mut shift = 0.0_f64;
        for i in 0..n {
            let denom = (0..n).filter(|&j| j != i).fold(c64(1.0, 0.0), |acc, j| acc * (roots[i] - roots[j]));
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            shift = shift.max(step.norm());
        }
        if shift < 1e-15 * radius {
            break;
        }
    }
    roots
}

/// Largest distance from an element of `a` to its greedily matched partner in `b`.
fn matching_distance(a: &[C64], b: &[C64]) -> f64 {
    let mut used = vec![false; b.len()];
    let mut worst = 0.0_f64;
    for x in a {
        let (idx, d) = b
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, y)| (i, (x - y).norm()))
            .fold((usize::MAX, f64::INFINITY), |acc, v| if v.1 < acc.1 { v } else { acc });
        used[idx] = true;
        worst = worst.max(d);
    }
    worst
}

#[test]
fn general_eigenvalues_match_characteristic_roots() {
    let mut r = rng(11);
    for n in 1..=6 {
        for _ in 0..5 {
            let m = complex_normal_matrix(&mut r, n, n);
            let eig = general_eigs(&m).unwrap();
            let roots = polynomial_roots(&characteristic_polynomial(&m));
            assert!(matching_distance(&eig.eigenvalues, &roots) < 1e-8, "n = {n}");
            assert!(eig.residual < 1e-12);
        }
    }
}

#[test]
fn general_eigenvalues_of_triangular_matrix_are_its_diagonal() {
    let diag = [c64(3.0, -1.0), c64(-2.0, 0.5), c64(0.0, 4.0), c64(1.0, 1.0)];
    let mut m = CMatrix::from_fn(4, 4, |i, j| if j > i { c64((i + 2 * j) as f64, 1.0) } else { c64(0.0, 0.0) });
    for (i, d) in diag.iter().enumerate() {
        m[(i, i)] = *d;
    }
    let eig = general_eigs(&m).unwrap();
    assert!(matching_distance(&eig.eigenvalues, &diag) < 1e-12);
}

#[test]
fn hermitian_eigenvalues_reproduce_trace_invariants_and_rayleigh_bounds() {
    let mut r = rng(12);
    for n in [1, 3, 7, 15] {
        let h = random_hermitian(&mut r, n);
        let eig = hermitian_eigs(&h).unwrap();
        let trace: f64 = (0..n).map(|i| h[(i, i)].re).sum();
        let frob2: f64 = h.iter().map(|z| z.norm_sqr()).sum();
        let sum: f64 = eig.values.iter().sum();
        let sum_sq: f64 = eig.values.iter().map(|v| v * v).sum();
        assert!((sum - trace).abs() < 1e-11 * frob2.sqrt().max(1.0));
        assert!((sum_sq - frob2).abs() < 1e-10 * frob2.max(1.0));
        for _ in 0..200 {
            let u = complex_normal_vector(&mut r, n);
            let q = (u.adjoint() * &h * &u)[(0, 0)].re / u.norm_squared();
            assert!(q >= eig.min() - 1e-12 && q <= eig.max() + 1e-12);
        }
    }
}

#[test]
fn pencil_eigenvalues_agree_with_the_reduced_standard_problem() {
    let mut r = rng(13);
    let n = 6;
    let a = random_hermitian(&mut r, n);
    let b = random_hpd(&mut r, n, 0.3);
    let eig = hermitian_pencil_eigs(&HermitianPencil::new(a.clone(), b.clone()).unwrap()).unwrap();
    // det(A - mu B) = 0 for every pencil eigenvalue
    let reduced = inverse(&b).unwrap() * &a;
    let roots = polynomial_roots(&characteristic_polynomial(&reduced));
    let values: Vec<C64> = eig.values.iter().map(|&v| c64(v, 0.0)).collect();
    assert!(matching_distance(&values, &roots) < 1e-8);
    let gram = eig.vectors.adjoint() * &b * &eig.vectors;
    assert!(max_abs(&(gram - identity(n))) < 1e-10);
}

#[test]
fn exponential_matches_eigenvector_synthesis() {
    let mut r = rng(14);
    for n in [2, 4, 8] {
        let v = complex_normal_matrix(&mut r, n, n) + identity(n) * c64(2.0, 0.0);
        let d: Vec<C64> = (0..n).map(|k| c64(-(k as f64) * 0.7, 0.3 * k as f64)).collect();
        let vinv = inverse(&v).unwrap();
        let m = &v * CMatrix::from_diagonal(&essform::CVector::from_vec(d.clone())) * &vinv;
        let expected =
            &v * CMatrix::from_diagonal(&essform::CVector::from_vec(d.iter().map(|z| z.exp()).collect())) * &vinv;
        let got = matrix_exponential(&m).unwrap();
        assert!(max_abs(&(got - &expected)) < 1e-10 * max_abs(&expected).max(1.0), "n = {n}");
    }
}

#[test]
fn exponential_matches_taylor_series_for_small_norm() {
    let mut r = rng(15);
    let m = complex_normal_matrix(&mut r, 5, 5) * c64(0.05, 0.0);
    let mut term = identity(5);
    let mut sum = identity(5);
    for k in 1..30 {
        term = &term * &m / c64(k as f64, 0.0);
        sum += &term;
    }
    assert!(max_abs(&(matrix_exponential(&m).unwrap() - sum)) < 1e-14);
}

#[test]
fn exponential_of_nilpotent_block_is_exact_polynomial() {
    let m = CMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(40.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)]);
    let e = matrix_exponential(&m).unwrap();
    assert!((e[(0, 1)] - c64(40.0, 0.0)).norm() < 1e-11);
    assert!((e[(0, 0)] - c64(1.0, 0.0)).norm() < 1e-13);
}

#[test]
fn lyapunov_matches_closed_form_for_diagonal_operators() {
    let a_diag = [c64(1.0, 2.0), c64(0.5, -1.0), c64(3.0, 0.0)];
    let a = CMatrix::from_diagonal(&essform::CVector::from_vec(a_diag.to_vec()));
    let mut r = rng(16);
    let q = random_hpd(&mut r, 3, 0.5);
    let p = lyapunov_solve(&a, &q).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let expected = q[(i, j)] / (a_diag[i].conj() + a_diag[j]);
            assert!((p[(i, j)] - expected).norm() < 1e-13);
        }
    }
}

#[test]
fn lyapunov_residual_is_small_for_random_stable_operators() {
    let mut r = rng(17);
    for _ in 0..10 {
        let n = 7;
        let x = complex_normal_matrix(&mut r, n, n);
        let margin = general_eigs(&x).unwrap().min_real();
        let a = x + identity(n) * c64(0.3 - margin, 0.0);
        let q = identity(n);
        let p = lyapunov_solve(&a, &q).unwrap();
        let residual = a.adjoint() * &p + &p * &a - &q;
        assert!(max_abs(&residual) < 1e-9 * max_abs(&p).max(1.0));
        assert!(hermitian_eigs(&essform::numkernel::hermitian_part(&p)).unwrap().min() > 0.0);
    }
}

#[test]
fn cholesky_reconstructs_the_gram() {
    let mut r = rng(18);
    let g = random_hpd(&mut r, 9, 0.1);
    let l = cholesky_factor(&g).unwrap();
    assert!(max_abs(&(&l * l.adjoint() - &g)) < 1e-13 * max_abs(&g));
    for i in 0..9 {
        for j in (i + 1)..9 {
            assert_eq!(l[(i, j)], c64(0.0, 0.0));
        }
    }
}

#[test]
fn weighted_norm_is_the_sup_of_sampled_ratios() {
    let mut r = rng(19);
    let t = complex_normal_matrix(&mut r, 4, 4);
    let g = random_hpd(&mut r, 4, 0.2);
    let nrm = weighted_operator_norm(&t, &g).unwrap();
    let mut best = 0.0_f64;
    for _ in 0..20000 {
        let u = complex_normal_vector(&mut r, 4);
        let tu = &t * &u;
        let ratio = ((tu.adjoint() * &g * &tu)[(0, 0)].re / (u.adjoint() * &g * &u)[(0, 0)].re).sqrt();
        assert!(ratio <= nrm * (1.0 + 1e-12));
        best = best.max(ratio);
    }
    assert!(best > 0.9 * nrm);
}

#[test]
fn row_space_and_kernel_are_complementary() {
    let mut r = rng(20);
    let j = complex_normal_matrix(&mut r, 3, 7);
    let (rows, kernel) = row_space_and_kernel(&j).unwrap();
    assert_eq!((rows.ncols(), kernel.ncols()), (3, 4));
    assert!(max_abs(&(&j * &kernel)) < 1e-12);
    let mut basis = CMatrix::zeros(7, 7);
    basis.columns_mut(0, 3).copy_from(&rows);
    basis.columns_mut(3, 4).copy_from(&kernel);
    assert!(max_abs(&(basis.adjoint() * &basis - identity(7))) < 1e-12);
}

#[test]
fn top_eigenpair_dominates_rayleigh_quotients() {
    let mut r = rng(17);
    for n in [1, 3, 8, 40] {
        let m = random_hermitian(&mut r, n);
        let (value, x) = top_hermitian_eigenpair(&m).unwrap();
        assert!((x.norm() - 1.0).abs() < 1e-12);
        assert!((&m * &x - &x * c64(value, 0.0)).norm() <= 1e-10 * max_abs(&m) * n as f64);
        for _ in 0..50 {
            let u = complex_normal_vector(&mut r, n);
            let q = (u.adjoint() * &m * &u)[(0, 0)].re / u.norm_squared();
            assert!(q <= value + 1e-12);
        }
    }
}

#[test]
fn top_eigenpair_of_a_repeated_eigenvalue_stays_in_its_eigenspace() {
    let m = real_diag(&[3.0, 1.0, 3.0, -2.0]);
    let (value, x) = top_hermitian_eigenpair(&m).unwrap();
    assert_eq!(value, 3.0);
    assert!(x[1].norm() < 1e-12 && x[3].norm() < 1e-12);
}
