//! Analysis configuration: a TOML document naming the problem, the analyses
//! to run and their grids.

use std::path::{Path, PathBuf};

use essform::gallery::ProblemSpec;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    Classify,
    Coercivity,
    Family,
    Range,
    Spectrum,
    Semigroup,
    Sector,
    Renorm,
    PerturbationCheck,
}

impl Analysis {
    /// Whether the analysis works on the associated operator.
    pub fn needs_operator(self) -> bool {
        matches!(self, Analysis::Range | Analysis::Spectrum | Analysis::Semigroup | Analysis::Sector | Analysis::Renorm)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    /// Support directions of the numerical range.
    #[serde(default = "default_angles")]
    pub angles: usize,
    #[serde(default = "default_t_start")]
    pub t_start: f64,
    #[serde(default = "default_t_stop")]
    pub t_stop: f64,
    #[serde(default = "default_t_count")]
    pub t_count: usize,
    /// Ray angles for the sector scan; defaults to five rays across the sector.
    #[serde(default)]
    pub beta: Option<Vec<f64>>,
    /// Points outside the range at which the resolvent bound is checked.
    #[serde(default = "default_resolvent_samples")]
    pub resolvent_samples: usize,
    /// Random vectors for the renorming certificate.
    #[serde(default = "default_renorm_samples")]
    pub renorm_samples: usize,
}

impl Default for Grids {
    fn default() -> Self {
        Grids {
            angles: default_angles(),
            t_start: default_t_start(),
            t_stop: default_t_stop(),
            t_count: default_t_count(),
            beta: None,
            resolvent_samples: default_resolvent_samples(),
            renorm_samples: default_renorm_samples(),
        }
    }
}

impl Grids {
    pub fn t_grid(&self) -> Vec<f64> {
        essform::semigroup::linear_grid(self.t_start, self.t_stop, self.t_count)
    }
}

fn default_angles() -> usize {
    essform::numrange::DEFAULT_ANGLES
}
fn default_t_start() -> f64 {
    0.1
}
fn default_t_stop() -> f64 {
    10.0
}
fn default_t_count() -> usize {
    100
}
fn default_resolvent_samples() -> usize {
    10
}
fn default_renorm_samples() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Largest accepted residual of the defining relation of `A`.
    #[serde(default = "default_graph_tol")]
    pub graph: f64,
    /// Largest accepted gap between slope-fit and spectral `omega_ess`.
    #[serde(default = "default_omega_tol")]
    pub omega_ess: f64,
    /// Slack on semigroup norm bounds.
    #[serde(default = "default_norm_tol")]
    pub norm: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { graph: default_graph_tol(), omega_ess: default_omega_tol(), norm: default_norm_tol() }
    }
}

fn default_graph_tol() -> f64 {
    1e-9
}
fn default_omega_tol() -> f64 {
    essform::semigroup::OMEGA_ESS_AGREEMENT
}
fn default_norm_tol() -> f64 {
    essform::semigroup::NORM_SLACK
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoercivityConfig {
    /// Threshold for the defect count; `1e-3 * |a|` if absent.
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Directions the rotation scan may discard.
    #[serde(default)]
    pub max_defect: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    /// Mesh sizes of a refinement family.
    #[serde(default)]
    pub ns: Option<Vec<usize>>,
    /// Interval lengths of a growing-domain family.
    #[serde(default)]
    pub lengths: Option<Vec<f64>>,
    #[serde(default = "default_elements_per_unit")]
    pub elements_per_unit: usize,
    #[serde(default = "default_alpha_floor")]
    pub alpha_floor: f64,
    /// Run the rotation scan on every level.
    #[serde(default)]
    pub rotation_scan: bool,
    /// Split every level at `semigroup.delta` and report its essential growth.
    #[serde(default)]
    pub essential_growth: bool,
}

fn default_elements_per_unit() -> usize {
    50
}
fn default_alpha_floor() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemigroupConfig {
    /// Split threshold for the essential growth bound.
    #[serde(default)]
    pub delta: f64,
    /// Spectral margin for the renorming; half the smallest real part if absent.
    #[serde(default)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectorConfig {
    /// Frame rotation; taken from the rotation scan if absent.
    #[serde(default)]
    pub rotation: Option<f64>,
    /// Half-angle of the sector of rays; taken from the sector fit if absent.
    #[serde(default)]
    pub half_angle: Option<f64>,
    /// Split threshold for the complement norms; `semigroup.delta` if absent.
    #[serde(default)]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationConfig {
    /// Rank of the random Hermitian perturbation `scale * sum G w w* G`.
    #[serde(default = "default_rank")]
    pub rank: usize,
    #[serde(default = "default_scale")]
    pub scale: f64,
}

fn default_rank() -> usize {
    1
}
fn default_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default)]
    pub problem: Option<ProblemSpec>,
    /// JSON triple document, relative to the configuration file.
    #[serde(default)]
    pub triple_file: Option<PathBuf>,
    pub analyses: Vec<Analysis>,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Report directory, relative to the configuration file.
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub coercivity: CoercivityConfig,
    #[serde(default)]
    pub family: Option<FamilyConfig>,
    #[serde(default)]
    pub semigroup: SemigroupConfig,
    #[serde(default)]
    pub sector: SectorConfig,
    #[serde(default)]
    pub perturbation: Option<PerturbationConfig>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl AnalysisConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: AnalysisConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads the file and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(file) = &config.triple_file {
            if file.is_relative() {
                config.triple_file = Some(base.join(file));
            }
        }
        if config.output_dir.is_relative() {
            config.output_dir = base.join(&config.output_dir);
        }
        Ok(config)
    }

    pub fn wants(&self, analysis: Analysis) -> bool {
        self.analyses.contains(&analysis)
    }

    fn validate(&self) -> Result<(), CliError> {
        let schema = |msg: &str| Err(CliError::Config(msg.to_string()));
        match (&self.problem, &self.triple_file) {
            (None, None) => return schema("one of `problem` or `triple_file` is required"),
            (Some(_), Some(_)) => return schema("`problem` and `triple_file` are mutually exclusive"),
            _ => {}
        }
        if self.analyses.is_empty() {
            return schema("`analyses` must name at least one analysis");
        }
        let g = &self.grids;
        if g.angles < essform::numrange::MIN_ANGLES {
            return schema("`grids.angles` must be at least 8");
        }
        if !(g.t_start > 0.0 && g.t_stop > g.t_start && g.t_count >= essform::semigroup::MIN_T_POINTS) {
            return schema("`grids` needs 0 < t_start < t_stop and t_count >= 8");
        }
        if self.wants(Analysis::Family) {
            let Some(family) = &self.family else {
                return schema("analysis `family` requires a `[family]` section with `ns` or `lengths`");
            };
            match (&family.ns, &family.lengths) {
                (Some(ns), None) if ns.len() >= 2 => {}
                (None, Some(ls)) if ls.len() >= 2 => {}
                _ => return schema("`[family]` needs exactly one of `ns` or `lengths`, with at least two levels"),
            }
            if self.problem.is_none() {
                return schema("analysis `family` needs a gallery `problem`");
            }
        }
        if self.wants(Analysis::PerturbationCheck) && self.perturbation.is_none() {
            return schema("analysis `perturbation-check` requires a `[perturbation]` section");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = AnalysisConfig::parse(
            r#"
analyses = ["classify"]
[problem]
kind = "diagonal"
lambdas = [1.0, 2.0, 3.0]
"#,
        )
        .unwrap();
        assert_eq!(c.seed, 0);
        assert_eq!(c.grids.t_grid().len(), 100);
        assert_eq!(c.output_dir, PathBuf::from("out"));
    }

    #[test]
    fn missing_field_reports_its_name_and_line() {
        let err = AnalysisConfig::parse(
            r#"
analyses = ["classify"]
[problem]
kind = "shiftform"
length = 1.0
"#,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("`n`") && msg.contains("line"), "{msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn family_needs_levels() {
        let err = AnalysisConfig::parse(
            r#"
analyses = ["family"]
[problem]
kind = "shiftform"
length = 1.0
n = 10
"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("[family]"));
    }

    #[test]
    fn unknown_analysis_is_rejected() {
        assert!(AnalysisConfig::parse("analyses = [\"plot\"]\ntriple_file = \"t.json\"").is_err());
    }
}
