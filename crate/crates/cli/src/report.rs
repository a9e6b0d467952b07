//! Report document written by `run` and read back by `emit`.

use std::fmt::Write as _;

use essform::association::AssociationPath;
use essform::coercivity::{CoercivityReport, Dichotomy, FamilyVerdict};
use essform::formmodel::FormClassification;
use essform::gallery::ProblemSpec;
use essform::numrange::ResolventCertificate;
use essform::semigroup::{
    EssentialGrowth, GrowthReport, PerturbationInvariance, Renorming, SectorScan, SemigroupAnalysis, SpectralSplit,
};
use serde::Serialize;

use crate::config::{Grids, Tolerances};

#[derive(Debug, Clone, Serialize)]
pub struct ProblemSection {
    /// `gallery` or `triple-file`.
    pub source: String,
    pub spec: Option<ProblemSpec>,
    pub label: String,
    pub dim_v: usize,
    pub dim_h: usize,
    pub continuity: f64,
    pub j_injective: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AssociationSection {
    pub path: AssociationPath,
    pub graph_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RotationSummary {
    pub max_defect: usize,
    pub best_angle: Option<f64>,
    pub best_floor: f64,
    pub dichotomy: Option<Dichotomy>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoercivitySection {
    pub alpha: f64,
    pub constants: CoercivityReport,
    pub defect: CoercivityReport,
    pub rotation: RotationSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct RangeSection {
    pub normalization: String,
    pub angles: Vec<f64>,
    /// `None` where the support function is infinite.
    pub support_values: Vec<Option<f64>>,
    pub support_points: Vec<Option<[f64; 2]>>,
    pub bounded: bool,
    pub resolvent: Option<ResolventCertificate>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumSection {
    /// Eigenvalues of `A` as `[re, im]`, sorted by real part.
    pub eigenvalues: Vec<[f64; 2]>,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SemigroupSection {
    pub growth: GrowthReport,
    pub split: SpectralSplit,
    pub essential: Option<EssentialGrowth>,
    pub summary: SemigroupAnalysis,
}

#[derive(Debug, Clone, Serialize)]
pub struct RenormSection {
    pub epsilon: f64,
    pub renorming: Renorming,
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyLevel {
    pub n: Option<usize>,
    pub length: Option<f64>,
    pub dim_v: usize,
    pub rotation: Option<RotationSummary>,
    pub essential: Option<EssentialGrowth>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilySection {
    pub levels: Vec<FamilyLevel>,
    pub verdict: FamilyVerdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Check { name: name.to_string(), value, tolerance, passed: value <= tolerance }
    }

    pub fn holds(name: &str, passed: bool) -> Self {
        Check { name: name.to_string(), value: if passed { 1.0 } else { 0.0 }, tolerance: 1.0, passed }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub grids: Grids,
    pub tolerances: Tolerances,
    pub problem: ProblemSection,
    pub association: Option<AssociationSection>,
    pub classify: Option<FormClassification>,
    pub coercivity: Option<CoercivitySection>,
    pub range: Option<RangeSection>,
    pub spectrum: Option<SpectrumSection>,
    pub semigroup: Option<SemigroupSection>,
    pub sector: Option<SectorScan>,
    pub renorm: Option<RenormSection>,
    pub family: Option<FamilySection>,
    pub perturbation: Option<PerturbationInvariance>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl AnalysisReport {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    /// Plain-text digest of the report.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let p = &self.problem;
        let _ =
            writeln!(s, "problem: {} (dim V = {}, dim H = {}, |a| = {:.6e})", p.label, p.dim_v, p.dim_h, p.continuity);
        if let Some(a) = &self.association {
            let _ = writeln!(s, "association: {:?}, graph residual {:.3e}", a.path, a.graph_residual);
        }
        if let Some(c) = &self.classify {
            let sector = c
                .sector
                .map_or("none".to_string(), |x| format!("shift {:.6e}, half-angle {:.6}", x.shift, x.half_angle));
            let _ = writeln!(
                s,
                "classify: symmetric {}, accretive {}, kernel condition {}, min Re {:.6e}, sector {sector}",
                c.symmetric, c.accretive, c.kernel_condition, c.min_real_part
            );
        }
        if let Some(c) = &self.coercivity {
            let _ = writeln!(
                s,
                "coercivity: alpha+ {:.6e}, alpha_re {:.6e}, alpha_abs {:.6e}, defect {} at alpha {:.6e}, best rotation {:?}",
                c.constants.alpha_positive, c.constants.alpha_real, c.constants.alpha_abs, c.defect.defect_dim, c.alpha, c.rotation.best_angle
            );
        }
        if let Some(r) = &self.range {
            let _ = writeln!(s, "range: {} directions, bounded {}", r.angles.len(), r.bounded);
            if let Some(cert) = &r.resolvent {
                let ok = cert.checks.iter().all(|c| c.bound_satisfied);
                let _ = writeln!(
                    s,
                    "  spectral excess {:.3e}, resolvent bound {}",
                    cert.spectral_excess,
                    if ok { "holds" } else { "fails" }
                );
            }
        }
        if let Some(sp) = &self.spectrum {
            let _ = writeln!(s, "spectrum: {} eigenvalues, residual {:.3e}", sp.eigenvalues.len(), sp.residual);
        }
        if let Some(sg) = &self.semigroup {
            let _ = writeln!(
                s,
                "semigroup: omega {:.6e}, quasi-contraction w {:.6e}",
                sg.growth.omega, sg.growth.quasi_contraction_w
            );
            let _ = writeln!(s, "  split at delta {}: dim X1 = {}", sg.split.delta, sg.split.dim_x1);
            if let Some(e) = &sg.essential {
                let _ = writeln!(
                    s,
                    "  omega_ess {:.6e} (spectral {:.6e}), asymptotically compact {}",
                    e.omega_ess, e.omega_ess_spectral, e.asymptotically_compact
                );
            }
        }
        if let Some(sc) = &self.sector {
            let _ = writeln!(
                s,
                "sector: rotation {:.6}, half-angle {:.6}, {} rays",
                sc.frame.rotation,
                sc.frame.half_angle,
                sc.rays.len()
            );
            for ray in &sc.rays {
                let kind = if ray.interior { "interior" } else { "boundary" };
                let _ = writeln!(
                    s,
                    "  beta {:.6} ({kind}): sup |S| {:.6e}, decays {:?}",
                    ray.beta, ray.sup_norm, ray.decays
                );
            }
        }
        if let Some(r) = &self.renorm {
            let _ = writeln!(
                s,
                "renorm: epsilon {:.6e}, max |S|_P {:.6e}, max |S| {:.6e}, contractive {}",
                r.epsilon, r.renorming.max_renormed_norm, r.renorming.max_euclidean_norm, r.renorming.contractive
            );
        }
        if let Some(f) = &self.family {
            let _ = writeln!(
                s,
                "family: verdict {:?} at alpha {:.6e}",
                f.verdict.verdict,
                f.verdict.alphas.first().copied().unwrap_or(f64::NAN)
            );
            for (level, k) in f.levels.iter().zip(&f.verdict.defect_dims) {
                let _ = write!(s, "  n {:?}, L {:?}: k = {k}", level.n, level.length);
                if let Some(e) = &level.essential {
                    let _ = write!(s, ", omega_ess {:.6e}", e.omega_ess);
                }
                if let Some(r) = &level.rotation {
                    let _ = write!(s, ", best rotation {:?}", r.best_angle);
                }
                s.push('\n');
            }
        }
        if let Some(p) = &self.perturbation {
            let _ = writeln!(
                s,
                "perturbation: rank {}, dim X1 {} -> {}, omega_ess {:?} -> {:?}",
                p.perturbation_rank, p.dim_x1_base, p.dim_x1_perturbed, p.omega_ess_base, p.omega_ess_perturbed
            );
        }
        for c in &self.checks {
            let _ = writeln!(
                s,
                "check {}: {} ({:.3e} vs {:.3e})",
                c.name,
                if c.passed { "pass" } else { "FAIL" },
                c.value,
                c.tolerance
            );
        }
        let _ = writeln!(s, "result: {}", if self.passed { "pass" } else { "FAIL" });
        s
    }
}
