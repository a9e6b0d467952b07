//! Seeded random vectors and matrices for sampled checks and test fixtures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::formmodel::{build_triple, FormTriple};
use crate::numkernel::{c64, CMatrix, CVector};

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut SampleRng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn complex_normal_vector(rng: &mut SampleRng, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| c64(normal(rng), normal(rng)))
}

pub fn complex_normal_matrix(rng: &mut SampleRng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| c64(normal(rng), normal(rng)))
}

/// Random Hermitian matrix `(X + X*)/2`.
pub fn random_hermitian(rng: &mut SampleRng, n: usize) -> CMatrix {
    let x = complex_normal_matrix(rng, n, n);
    (&x + x.adjoint()) * c64(0.5, 0.0)
}

/// Random Hermitian positive definite matrix `X X* / n + shift I`.
pub fn random_hpd(rng: &mut SampleRng, n: usize, shift: f64) -> CMatrix {
    let x = complex_normal_matrix(rng, n, n);
    let mut g = &x * x.adjoint() * c64(1.0 / n.max(1) as f64, 0.0);
    for i in 0..n {
        g[(i, i)] += c64(shift, 0.0);
    }
    g
}

/// Random vector normalised to `u* G u = 1`.
pub fn gram_unit_vector(rng: &mut SampleRng, gram: &CMatrix) -> CVector {
    let u = complex_normal_vector(rng, gram.nrows());
    let nrm = (u.adjoint() * gram * &u)[(0, 0)].re.sqrt();
    u / c64(nrm, 0.0)
}

/// Gaussian `m x n` embedding; full row rank almost surely when `m <= n`.
pub fn random_embedding(rng: &mut SampleRng, m: usize, n: usize) -> CMatrix {
    complex_normal_matrix(rng, m, n)
}

/// `B B* / rank + i s S` with Gaussian `B` (`n x rank`) and Hermitian `S`:
/// accretive, with a Hermitian part of rank at most `rank`.
pub fn random_accretive_form(rng: &mut SampleRng, n: usize, rank: usize, skew_scale: f64) -> CMatrix {
    let b = complex_normal_matrix(rng, n, rank);
    let h = &b * b.adjoint() * c64(1.0 / rank.max(1) as f64, 0.0);
    let s = random_hermitian(rng, n);
    h + s * c64(0.0, skew_scale)
}

/// Triple around `form` with random Grams (`V`-Gram shift `0.5`, `H`-Gram
/// shift `0.5`) and a Gaussian `m x n` embedding; `m == n` uses `j = I`
/// when `identity_j` is set.
pub fn random_triple(rng: &mut SampleRng, form: CMatrix, m: usize, identity_j: bool) -> crate::Result<FormTriple> {
    let n = form.nrows();
    let gram_v = random_hpd(rng, n, 0.5);
    let gram_h = random_hpd(rng, m, 0.5);
    let j = if identity_j && m == n { crate::numkernel::identity(n) } else { random_embedding(rng, m, n) };
    build_triple(gram_v, gram_h, j, form)
}
