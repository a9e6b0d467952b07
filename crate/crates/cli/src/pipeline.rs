//! Runs the analyses requested by a configuration.

use std::f64::consts::TAU;

use essform::association::{associate, associate_with_split, verify_graph, AssociatedOperator};
use essform::coercivity::{constants, essential_defect, family_verdict, rotation_scan, RotationScan};
use essform::formmodel::{classify, FormTriple};
use essform::gallery::{length_family, refinement_family, GalleryProblem};
use essform::numkernel::{c64, general_eigs};
use essform::numrange::{range_boundary, resolvent_certificate, Normalization, NumericalRangeBoundary};
use essform::sampling::{gram_unit_vector, rng};
use essform::semigroup::{
    contractive_renorming, essential_growth, growth_report, perturbation_invariance_check, sector_scan, spectral_split,
    EssentialGrowth, SectorFrame, SemigroupAnalysis,
};
use essform::{CMatrix, C64};

use crate::config::{Analysis, AnalysisConfig, FamilyConfig};
use crate::error::CliError;
use crate::report::*;

/// Graph-relation samples on top of the basis vectors.
const GRAPH_SAMPLES: usize = 4;

struct Subject {
    triple: FormTriple,
    spec: Option<essform::gallery::ProblemSpec>,
    interior: Option<Vec<usize>>,
}

fn load_subject(config: &AnalysisConfig) -> Result<Subject, CliError> {
    if let Some(spec) = &config.problem {
        let GalleryProblem { triple, interior, .. } = spec.build()?;
        return Ok(Subject { triple, spec: Some(spec.clone()), interior });
    }
    let path = config.triple_file.as_ref().expect("validated: problem or triple file");
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read triple file {}: {e}", path.display())))?;
    let triple = FormTriple::from_json(&text).map_err(|e| match e {
        essform::Error::Serialization(msg) | essform::Error::Input(msg) => {
            CliError::Config(format!("{}: {msg}", path.display()))
        }
        other => CliError::Numerical(other),
    })?;
    Ok(Subject { triple, spec: None, interior: None })
}

fn associate_subject(subject: &Subject) -> essform::Result<AssociatedOperator> {
    match &subject.interior {
        Some(interior) => associate_with_split(&subject.triple, interior),
        None => associate(&subject.triple),
    }
}

fn rotation_summary(scan: &RotationScan) -> RotationSummary {
    RotationSummary {
        max_defect: scan.max_defect,
        best_angle: scan.best_angle,
        best_floor: scan.best_floor,
        dichotomy: scan.dichotomy.clone(),
    }
}

fn range_section(
    triple: &FormTriple,
    op: Option<&AssociatedOperator>,
    config: &AnalysisConfig,
    checks: &mut Vec<Check>,
) -> essform::Result<RangeSection> {
    let boundary = range_boundary(triple, config.grids.angles, Normalization::JSphere)?;
    let resolvent = match op {
        Some(op) if boundary.is_bounded() && config.grids.resolvent_samples > 0 => {
            let cert =
                resolvent_certificate(op, &boundary, &outside_samples(&boundary, config.grids.resolvent_samples))?;
            checks.push(Check::at_most(
                "spectral inclusion",
                cert.spectral_excess,
                essform::numrange::INCLUSION_TOL * triple.continuity().max(1.0),
            ));
            checks.push(Check::holds("resolvent bound", cert.checks.iter().all(|c| c.bound_satisfied)));
            Some(cert)
        }
        _ => None,
    };
    Ok(RangeSection {
        normalization: "j-sphere".into(),
        angles: boundary.angles.clone(),
        support_values: boundary.support_values.iter().map(|&h| h.is_finite().then_some(h)).collect(),
        support_points: boundary.support_points.iter().map(|p| p.map(|z| [z.re, z.im])).collect(),
        bounded: boundary.is_bounded(),
        resolvent,
    })
}

/// Points on a circle well outside a bounded range.
fn outside_samples(boundary: &NumericalRangeBoundary, count: usize) -> Vec<C64> {
    let points = boundary.points();
    let center = points.iter().sum::<C64>() / c64(points.len().max(1) as f64, 0.0);
    let radius = 2.0 * points.iter().map(|p| (p - center).norm()).fold(0.0, f64::max) + 1.0;
    (0..count).map(|k| center + C64::from_polar(radius, 0.1 + TAU * k as f64 / count as f64)).collect()
}

fn semigroup_section(
    op: &AssociatedOperator,
    config: &AnalysisConfig,
    checks: &mut Vec<Check>,
) -> essform::Result<SemigroupSection> {
    let t_grid = config.grids.t_grid();
    let growth = growth_report(op, &t_grid)?;
    let split = spectral_split(op, config.semigroup.delta)?;
    let essential = match split.complement_growth {
        Some(_) => Some(essential_growth(op, &split, &t_grid)?),
        None => None,
    };
    if let Some(cert) = &growth.decay_certificate {
        checks.push(Check::at_most("decay certificate", cert.worst_ratio, 1.0 + config.tolerances.norm));
    }
    checks.push(Check::at_most(
        "split idempotency",
        split.idempotency_residual,
        essform::semigroup::SPLIT_INVARIANT_TOL,
    ));
    checks.push(Check::at_most(
        "split commutation",
        split.commutator_residual,
        essform::semigroup::SPLIT_INVARIANT_TOL,
    ));
    if let Some(e) = &essential {
        checks.push(Check::at_most("omega_ess slope vs spectral", e.agreement, config.tolerances.omega_ess));
    }
    let summary = SemigroupAnalysis::assemble(&growth, &split, essential.as_ref());
    Ok(SemigroupSection { growth, split, essential, summary })
}

fn sector_frame(op: &AssociatedOperator, config: &AnalysisConfig) -> essform::Result<SectorFrame> {
    match (config.sector.rotation, config.sector.half_angle) {
        (Some(rotation), Some(half_angle)) => Ok(SectorFrame::new(rotation, half_angle)),
        (rotation, half_angle) => {
            let fitted = SectorFrame::from_operator(op)?;
            Ok(SectorFrame::new(rotation.unwrap_or(fitted.rotation), half_angle.unwrap_or(fitted.half_angle)))
        }
    }
}

fn renorm_section(
    op: &AssociatedOperator,
    config: &AnalysisConfig,
    checks: &mut Vec<Check>,
) -> essform::Result<RenormSection> {
    let epsilon = match config.semigroup.epsilon {
        Some(e) => e,
        None => {
            let min_real = general_eigs(op.matrix())?.min_real();
            if min_real > 0.0 {
                0.5 * min_real
            } else {
                // below any admissible margin, so the kernel reports the missing margin
                f64::MIN_POSITIVE
            }
        }
    };
    let renorming =
        contractive_renorming(op, epsilon, &config.grids.t_grid(), config.grids.renorm_samples, config.seed)?;
    checks.push(Check::at_most("renormed contractivity", renorming.max_renormed_norm, 1.0 + config.tolerances.norm));
    Ok(RenormSection { epsilon, renorming })
}

fn level_essential_growth(problem: &GalleryProblem, config: &AnalysisConfig) -> essform::Result<EssentialGrowth> {
    let op = match &problem.interior {
        Some(interior) => associate_with_split(&problem.triple, interior)?,
        None => associate(&problem.triple)?,
    };
    let split = spectral_split(&op, config.semigroup.delta)?;
    essential_growth(&op, &split, &config.grids.t_grid())
}

fn family_section(
    spec: &essform::gallery::ProblemSpec,
    family: &FamilyConfig,
    config: &AnalysisConfig,
    checks: &mut Vec<Check>,
) -> essform::Result<FamilySection> {
    let problems = match (&family.ns, &family.lengths) {
        (Some(ns), _) => refinement_family(spec, ns)?,
        (None, Some(lengths)) => length_family(spec, lengths, family.elements_per_unit)?,
        (None, None) => unreachable!("validated: ns or lengths"),
    };
    let triples: Vec<FormTriple> = problems.iter().map(|p| p.triple.clone()).collect();
    let verdict = family_verdict(&triples, family.alpha_floor)?;
    let max_defect = config.coercivity.max_defect;
    // levels are independent; results are collected in level order
    let per_level: Vec<essform::Result<FamilyLevel>> = std::thread::scope(|scope| {
        let handles: Vec<_> = problems
            .iter()
            .map(|problem| {
                scope.spawn(move || -> essform::Result<FamilyLevel> {
                    let rotation = if family.rotation_scan {
                        Some(rotation_summary(&rotation_scan(&problem.triple, max_defect)?))
                    } else {
                        None
                    };
                    let essential =
                        if family.essential_growth { Some(level_essential_growth(problem, config)?) } else { None };
                    Ok(FamilyLevel {
                        n: problem.spec.n(),
                        length: spec_length(&problem.spec),
                        dim_v: problem.triple.dim_v(),
                        rotation,
                        essential,
                    })
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("family worker panicked")).collect()
    });
    let levels = per_level.into_iter().collect::<essform::Result<Vec<_>>>()?;
    for (i, level) in levels.iter().enumerate() {
        if let Some(e) = &level.essential {
            checks.push(Check::at_most(
                &format!("level {i} omega_ess slope vs spectral"),
                e.agreement,
                config.tolerances.omega_ess,
            ));
        }
    }
    Ok(FamilySection { levels, verdict })
}

fn spec_length(spec: &essform::gallery::ProblemSpec) -> Option<f64> {
    use essform::gallery::ProblemSpec::*;
    match spec {
        Schrodinger1d { length, .. } | Dtn { length, .. } | Drift { length, .. } | Shiftform { length, .. } => {
            Some(*length)
        }
        Diagonal { .. } => None,
    }
}

/// `scale * sum_k G w_k w_k* G` with seeded `G`-unit vectors `w_k`.
fn random_perturbation(triple: &FormTriple, rank: usize, scale: f64, seed: u64) -> CMatrix {
    let g = triple.gram_v();
    let mut r = rng(seed);
    let mut k = CMatrix::zeros(triple.dim_v(), triple.dim_v());
    for _ in 0..rank {
        let gw = g * gram_unit_vector(&mut r, g);
        k += &gw * gw.adjoint() * c64(scale, 0.0);
    }
    k
}

pub fn analyze(config: &AnalysisConfig) -> Result<AnalysisReport, CliError> {
    let subject = load_subject(config)?;
    let triple = &subject.triple;
    let mut checks = Vec::new();

    let op = if config.analyses.iter().any(|a| a.needs_operator()) {
        let op = associate_subject(&subject)?;
        let residual = verify_graph(&op, GRAPH_SAMPLES)?;
        checks.push(Check::at_most("graph relation", residual, config.tolerances.graph));
        Some((op, residual))
    } else {
        None
    };
    let association =
        op.as_ref().map(|(op, residual)| AssociationSection { path: op.path(), graph_residual: *residual });
    let op = op.map(|(op, _)| op);

    let classify = if config.wants(Analysis::Classify) { Some(classify(triple)?) } else { None };

    let coercivity = if config.wants(Analysis::Coercivity) {
        let base = constants(triple)?;
        let alpha = config.coercivity.alpha.unwrap_or(1e-3 * triple.continuity().max(f64::MIN_POSITIVE));
        let defect = essential_defect(triple, alpha)?;
        let rotation = rotation_summary(&rotation_scan(triple, config.coercivity.max_defect)?);
        Some(CoercivitySection { alpha, constants: base, defect, rotation })
    } else {
        None
    };

    let range = if config.wants(Analysis::Range) {
        Some(range_section(triple, op.as_ref(), config, &mut checks)?)
    } else {
        None
    };

    let spectrum = match (&op, config.wants(Analysis::Spectrum)) {
        (Some(op), true) => {
            let eig = general_eigs(op.matrix()).map_err(essform::Error::from)?;
            Some(SpectrumSection {
                eigenvalues: eig.eigenvalues.iter().map(|z| [z.re, z.im]).collect(),
                residual: eig.residual,
            })
        }
        _ => None,
    };

    let semigroup = match (&op, config.wants(Analysis::Semigroup)) {
        (Some(op), true) => Some(semigroup_section(op, config, &mut checks)?),
        _ => None,
    };

    let sector = match (&op, config.wants(Analysis::Sector)) {
        (Some(op), true) => {
            let frame = sector_frame(op, config)?;
            let h = frame.half_angle;
            let betas = config.grids.beta.clone().unwrap_or_else(|| vec![-h, -0.5 * h, 0.0, 0.5 * h, h]);
            let delta = config.sector.delta.unwrap_or(config.semigroup.delta);
            Some(sector_scan(op, frame, delta, &config.grids.t_grid(), &betas)?)
        }
        _ => None,
    };

    let renorm = match (&op, config.wants(Analysis::Renorm)) {
        (Some(op), true) => Some(renorm_section(op, config, &mut checks)?),
        _ => None,
    };

    let family = match (&subject.spec, &config.family, config.wants(Analysis::Family)) {
        (Some(spec), Some(family), true) => Some(family_section(spec, family, config, &mut checks)?),
        _ => None,
    };

    let perturbation = match (&config.perturbation, config.wants(Analysis::PerturbationCheck)) {
        (Some(p), true) => {
            let k = random_perturbation(triple, p.rank, p.scale, config.seed);
            Some(perturbation_invariance_check(triple, &k, config.semigroup.delta, &config.grids.t_grid())?)
        }
        _ => None,
    };

    let passed = checks.iter().all(|c| c.passed);
    Ok(AnalysisReport {
        tool: "essform".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: config.seed,
        grids: config.grids.clone(),
        tolerances: config.tolerances.clone(),
        problem: ProblemSection {
            source: if subject.spec.is_some() { "gallery" } else { "triple-file" }.into(),
            spec: subject.spec.clone(),
            label: triple.label().to_string(),
            dim_v: triple.dim_v(),
            dim_h: triple.dim_h(),
            continuity: triple.continuity(),
            j_injective: triple.j().is_injective(),
        },
        association,
        classify,
        coercivity,
        range,
        spectrum,
        semigroup,
        sector,
        renorm,
        family,
        perturbation,
        checks,
        passed,
    })
}
