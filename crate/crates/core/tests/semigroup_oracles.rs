//! Semigroup asymptotics against spectral and closed-form references.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4};

use essform::association::associate;
use essform::formmodel::{build_triple, classify};
use essform::gallery::{diagonal, Boundary, PotentialSpec, ProblemSpec};
use essform::numkernel::{c64, general_eigs, identity, real_diag, spectral_norm};
use essform::sampling::{random_accretive_form, random_triple, rng};
use essform::semigroup::{
    contractive_renorming, essential_growth, growth_report, linear_grid, perturbation_invariance_check, sample,
    sector_scan, spectral_split, SectorFrame,
};
use essform::{CMatrix, CVector, Error};

fn on_identity(form: CMatrix) -> essform::formmodel::FormTriple {
    let n = form.nrows();
    build_triple(identity(n), identity(n), identity(n), form).unwrap()
}

#[test]
fn diagonal_generator_splits_off_its_unstable_mode() {
    let op = associate(&on_identity(real_diag(&[-1.0, 2.0, 3.0]))).unwrap();
    let split = spectral_split(&op, 0.0).unwrap();
    assert_eq!(split.dim_x1, 1);
    let ess = essential_growth(&op, &split, &linear_grid(0.5, 5.0, 10)).unwrap();
    assert!((ess.omega_ess + 2.0).abs() < 1e-9);
    assert!((ess.omega_ess_spectral + 2.0).abs() < 1e-12);
    assert!(ess.asymptotically_compact && ess.agrees && ess.radius_matches);
}

#[test]
fn unitary_group_is_never_asymptotically_compact() {
    let op = associate(&diagonal(&[1.0, 2.0, 4.0, 8.0]).unwrap()).unwrap();
    for delta in [-1.0, -0.5] {
        let split = spectral_split(&op, delta).unwrap();
        assert_eq!(split.dim_x1, 0);
        let ess = essential_growth(&op, &split, &linear_grid(0.5, 5.0, 10)).unwrap();
        assert!(ess.omega_ess.abs() < 1e-9 && ess.omega_ess_spectral.abs() < 1e-12);
        assert!(!ess.asymptotically_compact);
    }
    let growth = growth_report(&op, &linear_grid(0.1, 10.0, 100)).unwrap();
    assert!(growth.norms.iter().all(|s| (s - 1.0).abs() < 1e-10));
}

#[test]
fn wide_well_essential_growth_tracks_the_mass_shift() {
    let delta = 1.0;
    let spec = ProblemSpec::Schrodinger1d {
        length: 40.0,
        n: 200,
        potential: PotentialSpec::Step { value: -5.0, from: 19.5, to: 20.5 },
        shift: delta,
        boundary: Boundary::Neumann,
    };
    let op = associate(&spec.build().unwrap().triple).unwrap();
    let split = spectral_split(&op, 0.0).unwrap();
    assert!(split.dim_x1 >= 1);
    let ess = essential_growth(&op, &split, &linear_grid(0.5, 5.0, 10)).unwrap();
    // spectral oracle: lowest eigenvalue right of the split
    let mut right: Vec<f64> =
        general_eigs(op.matrix()).unwrap().eigenvalues.iter().map(|z| z.re).filter(|&r| r > 0.0).collect();
    right.sort_by(f64::total_cmp);
    assert!((ess.omega_ess_spectral + right[0]).abs() < 1e-9);
    assert!((ess.omega_ess + delta).abs() <= 0.05 * delta, "omega_ess = {}", ess.omega_ess);
    assert!(ess.agrees);
}

#[test]
fn decay_certificate_holds_for_coercive_forms() {
    let mut r = rng(31);
    for _ in 0..5 {
        let form = random_accretive_form(&mut r, 5, 5, 0.5) + identity(5) * c64(0.5, 0.0);
        let t = random_triple(&mut r, form, 5, false).unwrap();
        let report = growth_report(&associate(&t).unwrap(), &linear_grid(0.1, 10.0, 100)).unwrap();
        let cert = report.decay_certificate.unwrap();
        assert!(cert.holds, "worst ratio {}", cert.worst_ratio);
        for (&t, &s) in report.t_grid.iter().zip(&report.norms) {
            assert!(s <= (-cert.epsilon * t).exp() * (1.0 + 1e-9));
        }
    }
}

#[test]
fn identity_renorms_to_half_identity() {
    let op = associate(&on_identity(identity(3))).unwrap();
    let ren = contractive_renorming(&op, 0.5, &linear_grid(0.1, 2.0, 20), 100, 0).unwrap();
    assert!(essform::numkernel::max_abs(&(ren.gram - identity(3) * c64(0.5, 0.0))) < 1e-14);
    assert!(ren.contractive);
}

#[test]
fn lyapunov_norm_tames_a_non_normal_transient() {
    let a = CMatrix::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(10.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)]);
    let op = associate(&on_identity(a.clone())).unwrap();
    // e^{-tA} = e^{-t} [[1, -10 t], [0, 1]]
    let s = sample(&op, c64(0.1, 0.0)).unwrap();
    let expected = CMatrix::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(-1.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)])
        * c64((-0.1f64).exp(), 0.0);
    assert!(essform::numkernel::max_abs(&(&s - expected)) < 1e-14);
    assert!(spectral_norm(&s) > 1.0);
    let ren = contractive_renorming(&op, 0.5, &linear_grid(0.1, 10.0, 100), 10_000, 0).unwrap();
    assert!(ren.max_euclidean_norm > 1.0);
    assert!(ren.contractive && ren.max_renormed_norm <= 1.0 + 1e-9);
    assert!((ren.sampled_ratio - 1.0).abs() < 1e-9);
}

#[test]
fn renorming_refuses_a_missing_margin() {
    let op = associate(&on_identity(real_diag(&[0.05, 1.0]))).unwrap();
    assert!(matches!(contractive_renorming(&op, 0.1, &[1.0], 10, 0), Err(Error::Kernel(_))));
}

#[test]
fn scalar_sector_rays_decay_like_cosine() {
    let op = associate(&on_identity(identity(1))).unwrap();
    let grid = linear_grid(0.5, 5.0, 10);
    let scan = sector_scan(&op, SectorFrame::new(0.0, FRAC_PI_3), -1.0, &grid, &[FRAC_PI_4]).unwrap();
    for row in &scan.rows {
        assert!((row.norm - (-row.t * FRAC_PI_4.cos()).exp()).abs() < 1e-12);
    }
    assert!(matches!(sector_scan(&op, SectorFrame::new(0.0, FRAC_PI_3), -1.0, &grid, &[1.2]), Err(Error::Input(_))));
}

#[test]
fn unitary_boundary_ray_and_decaying_interior_rays() {
    let op = associate(&diagonal(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap()).unwrap();
    let frame = SectorFrame::new(-FRAC_PI_2, FRAC_PI_2);
    let grid = linear_grid(0.5, 5.0, 10);
    let scan = sector_scan(&op, frame, 1.5, &grid, &[0.0, FRAC_PI_4, FRAC_PI_2]).unwrap();
    assert_eq!(scan.dim_x1, 1);
    for row in scan.rows.iter().filter(|r| r.beta == FRAC_PI_2) {
        assert!((row.norm - 1.0).abs() < 1e-10);
    }
    for ray in &scan.rays {
        assert_eq!(ray.interior, ray.beta < FRAC_PI_2);
        if ray.interior {
            assert_eq!(ray.decays, Some(true));
        } else {
            assert_eq!(ray.decays, None);
        }
    }
}

#[test]
fn boundary_rays_of_a_sectorial_form_are_contractive() {
    let mut r = rng(32);
    let form = random_accretive_form(&mut r, 4, 4, 0.3) + identity(4) * c64(0.2, 0.0);
    let t = random_triple(&mut r, form, 4, false).unwrap();
    let op = associate(&t).unwrap();
    let frame = SectorFrame::from_operator(&op).unwrap();
    let sector = classify(&t.rotated(frame.rotation).unwrap()).unwrap().sector.unwrap();
    assert_eq!(sector.shift, 0.0);
    let h = frame.half_angle;
    let scan = sector_scan(&op, frame, -1e3, &linear_grid(0.2, 4.0, 20), &[-h, 0.0, h]).unwrap();
    for ray in scan.rays.iter().filter(|r| !r.interior) {
        assert!(ray.sup_norm <= 1.0 + 1e-9, "beta {}: {}", ray.beta, ray.sup_norm);
    }
}

#[test]
fn zero_perturbation_changes_nothing() {
    let spec = ProblemSpec::Schrodinger1d {
        length: 3.0,
        n: 40,
        potential: PotentialSpec::Step { value: -50.0, from: 1.0, to: 2.0 },
        shift: 1.0,
        boundary: Boundary::Neumann,
    };
    let t = spec.build().unwrap().triple;
    let k = CMatrix::zeros(t.dim_v(), t.dim_v());
    let report = perturbation_invariance_check(&t, &k, 0.0, &linear_grid(0.5, 5.0, 10)).unwrap();
    assert_eq!(report.dim_x1_base, report.dim_x1_perturbed);
    assert_eq!(report.omega_ess_base, report.omega_ess_perturbed);
    assert!(report.unmatched_base.is_empty() && report.unmatched_perturbed.is_empty());
}

#[test]
fn rank_one_perturbation_moves_one_eigenvalue_across_the_split() {
    let values: Vec<f64> = (1..=12).map(|k| k as f64).collect();
    let t = on_identity(real_diag(&values));
    // lower the second eigenvalue from 2 to -0.5
    let mut e = CVector::zeros(12);
    e[1] = c64(1.0, 0.0);
    let k = &e * e.adjoint() * c64(-2.5, 0.0);
    let report = perturbation_invariance_check(&t, &k, 0.0, &linear_grid(0.5, 5.0, 10)).unwrap();
    assert_eq!(report.perturbation_rank, 1);
    assert_eq!(report.dim_x1_perturbed, report.dim_x1_base + 1);
    assert!((report.complement_abscissa_base.unwrap() - 1.0).abs() < 1e-12);
    assert!((report.complement_abscissa_perturbed.unwrap() - 1.0).abs() < 1e-12);
    assert!((report.omega_ess_base.unwrap() - report.omega_ess_perturbed.unwrap()).abs() < 1e-9);
    assert_eq!(report.unmatched_base, vec![[2.0, 0.0]]);
}

#[test]
fn spectral_split_refuses_a_tie() {
    let op = associate(&on_identity(real_diag(&[1.0, 2.0]))).unwrap();
    assert!(matches!(spectral_split(&op, 1.0), Err(Error::SplitTie { .. })));
}
