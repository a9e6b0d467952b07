//! Structural invariants over random triples.

use essform::association::{associate, associate_direct, verify_graph};
use essform::coercivity::{compact_perturbation, essential_defect, real_part_spectrum, PerturbationVariant};
use essform::formmodel::{build_triple, classify, shift_form, FormTriple};
use essform::numkernel::{c64, general_eigs, hermitian_part, identity, max_abs, spectral_norm};
use essform::numrange::{range_boundary, Normalization};
use essform::sampling::{
    complex_normal_matrix, complex_normal_vector, random_accretive_form, random_hermitian, random_hpd, random_triple,
    rng, SampleRng,
};
use essform::semigroup::{contractive_renorming, sample};
use essform::{CMatrix, C64};
use proptest::prelude::*;

fn generic_triple(r: &mut SampleRng, n: usize, m: usize) -> FormTriple {
    let form = complex_normal_matrix(r, n, n);
    random_triple(r, form, m, false).unwrap()
}

fn config() -> ProptestConfig {
    ProptestConfig { cases: 48, ..ProptestConfig::default() }
}

/// Random invertible change of basis, well conditioned.
fn change_of_basis(r: &mut SampleRng, n: usize) -> CMatrix {
    identity(n) * c64(2.0, 0.0) + complex_normal_matrix(r, n, n) * c64(0.3, 0.0)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn associated_operator_satisfies_the_graph_relation(seed in any::<u64>(), n in 2usize..7, k in 0usize..3) {
        let mut r = rng(seed);
        let m = n.saturating_sub(k).max(1);
        let t = generic_triple(&mut r, n, m);
        let op = associate(&t).unwrap();
        prop_assert!(verify_graph(&op, 4).unwrap() <= 1e-9);
        let direct = associate_direct(&t).unwrap();
        let scale = max_abs(op.matrix()).max(1.0);
        prop_assert!(max_abs(&(op.matrix() - direct.matrix())) <= 1e-9 * scale);
    }

    #[test]
    fn shifted_form_shifts_the_operator_and_the_range(seed in any::<u64>(), n in 2usize..6, re in -3.0..3.0f64, im in -3.0..3.0f64) {
        let mut r = rng(seed);
        let t = generic_triple(&mut r, n, n);
        let lambda = c64(re, im);
        let shifted = shift_form(&t, lambda).triple().unwrap();
        let a = associate(&t).unwrap();
        let b = associate(&shifted).unwrap();
        let expected = a.matrix() - identity(n) * lambda;
        prop_assert!(max_abs(&(b.matrix() - &expected)) <= 1e-9 * max_abs(&expected).max(1.0));

        let w = range_boundary(&t, 64, Normalization::JSphere).unwrap();
        let ws = range_boundary(&shifted, 64, Normalization::JSphere).unwrap();
        for (p, q) in w.support_points.iter().zip(&ws.support_points) {
            let (p, q) = (p.unwrap(), q.unwrap());
            prop_assert!((q - p + lambda).norm() <= 1e-9 * (1.0 + p.norm()));
        }
    }

    #[test]
    fn sampled_form_values_lie_in_the_range(seed in any::<u64>(), n in 2usize..7) {
        let mut r = rng(seed);
        let t = generic_triple(&mut r, n, n);
        let w = range_boundary(&t, 256, Normalization::JSphere).unwrap();
        let scale = t.continuity().max(1.0);
        for _ in 0..200 {
            let u = complex_normal_vector(&mut r, n);
            let z = t.eval(&u, &u) / c64(t.h_norm_sqr(&u), 0.0);
            // the polygon through support points lies inside W; the supporting
            // half-planes contain it
            for (theta, h) in w.angles.iter().zip(&w.support_values) {
                let proj = z.re * theta.cos() + z.im * theta.sin();
                prop_assert!(proj <= h + 1e-9 * scale);
            }
        }
    }

    #[test]
    fn hermitian_forms_have_real_ranges(seed in any::<u64>(), n in 2usize..7) {
        let mut r = rng(seed);
        let form = random_hermitian(&mut r, n);
        let t = random_triple(&mut r, form, n, false).unwrap();
        let w = range_boundary(&t, 128, Normalization::JSphere).unwrap();
        for p in w.points() {
            prop_assert!(p.im.abs() <= 1e-10 * t.continuity().max(1.0));
        }
        let eig = general_eigs(associate(&t).unwrap().matrix()).unwrap();
        for l in eig.eigenvalues {
            prop_assert!(l.im.abs() <= 1e-8 * (1.0 + l.norm()));
        }
    }

    #[test]
    fn classification_is_invariant_under_change_of_basis(seed in any::<u64>(), n in 2usize..6) {
        let mut r = rng(seed);
        let form = random_accretive_form(&mut r, n, n, 0.4);
        let t = random_triple(&mut r, form, n, false).unwrap();
        let basis = change_of_basis(&mut r, n);
        let moved = build_triple(
            basis.adjoint() * t.gram_v() * &basis,
            t.gram_h().clone(),
            t.j_matrix() * &basis,
            basis.adjoint() * t.form() * &basis,
        ).unwrap();
        let (c0, c1) = (classify(&t).unwrap(), classify(&moved).unwrap());
        prop_assert_eq!(c0.symmetric, c1.symmetric);
        prop_assert_eq!(c0.accretive, c1.accretive);
        prop_assert!((c0.min_real_part - c1.min_real_part).abs() <= 1e-8 * t.continuity().max(1.0));
        let a0 = associate(&t).unwrap();
        let a1 = associate(&moved).unwrap();
        prop_assert!(max_abs(&(a0.matrix() - a1.matrix())) <= 1e-8 * max_abs(a0.matrix()).max(1.0));
    }

    #[test]
    fn defect_dimension_is_monotone_in_alpha(seed in any::<u64>(), n in 2usize..8) {
        let mut r = rng(seed);
        let t = generic_triple(&mut r, n, n);
        let eig = real_part_spectrum(&t).unwrap();
        let top = eig.max().abs().max(1.0);
        let mut last = 0;
        for k in 1..=20 {
            let alpha = top * k as f64 / 10.0;
            let d = essential_defect(&t, alpha).unwrap().defect_dim;
            prop_assert!(d >= last);
            prop_assert_eq!(d, eig.values.iter().filter(|&&v| v <= alpha + 1e-12).count());
            last = d;
        }
    }

    #[test]
    fn finite_rank_repair_restores_coercivity(seed in any::<u64>(), n in 3usize..8) {
        let mut r = rng(seed);
        let t = generic_triple(&mut r, n, n);
        let eig = real_part_spectrum(&t).unwrap();
        let alpha = 0.5 * eig.max().abs().max(0.1);
        for variant in [PerturbationVariant::Functional, PerturbationVariant::SquaredNorm] {
            let k = compact_perturbation(&t, alpha, variant).unwrap();
            prop_assert!(k.rank <= k.defect_dim.max(1) * 2);
            let repaired = t.perturbed(&k.k_matrix).unwrap();
            let floor = real_part_spectrum(&repaired).unwrap().min();
            prop_assert!(floor >= alpha - 1e-9 * t.continuity().max(1.0));
        }
    }

    #[test]
    fn semigroup_law_on_sector_samples(seed in any::<u64>(), n in 2usize..6, t1 in 0.0..2.0f64, t2 in 0.0..2.0f64, b1 in -0.7..0.7f64, b2 in -0.7..0.7f64) {
        let mut r = rng(seed);
        let form = random_accretive_form(&mut r, n, n, 0.3) + identity(n) * c64(0.5, 0.0);
        let t = random_triple(&mut r, form, n, false).unwrap();
        let op = associate(&t).unwrap();
        let z1 = C64::from_polar(t1, b1);
        let z2 = C64::from_polar(t2, b2);
        let lhs = sample(&op, z1).unwrap() * sample(&op, z2).unwrap();
        let rhs = sample(&op, z1 + z2).unwrap();
        prop_assert!(max_abs(&(lhs - &rhs)) <= 1e-9 * max_abs(&rhs).max(1.0));
    }

    #[test]
    fn renormed_pivot_reproduces_the_operator(seed in any::<u64>(), n in 2usize..6) {
        let mut r = rng(seed);
        let x = complex_normal_matrix(&mut r, n, n);
        let margin = general_eigs(&x).unwrap().min_real();
        let a = x + identity(n) * c64(0.2 - margin, 0.0);
        let t = build_triple(identity(n), identity(n), identity(n), a.clone()).unwrap();
        let op = associate(&t).unwrap();
        let ren = contractive_renorming(&op, 0.1, &[0.5, 1.0, 2.0], 100, seed).unwrap();
        prop_assert!(ren.contractive);
        let p = hermitian_part(&ren.gram);
        let gram_v = random_hpd(&mut r, n, 1.0);
        let rebuilt = build_triple(gram_v, p.clone(), identity(n), &p * &a).unwrap();
        let back = associate(&rebuilt).unwrap();
        prop_assert!(max_abs(&(back.matrix() - &a)) <= 1e-8 * max_abs(&a).max(1.0) * spectral_norm(&p).max(1.0));
    }
}
