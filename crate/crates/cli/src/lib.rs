//! Batch front end: reads an analysis configuration, runs the requested
//! analyses and writes a JSON report, a text summary and plot tables.

pub mod config;
pub mod error;
pub mod pipeline;
pub mod report;
pub mod tables;

use std::path::{Path, PathBuf};

pub use config::AnalysisConfig;
pub use error::CliError;
pub use report::AnalysisReport;
pub use tables::Table;

pub const REPORT_FILE: &str = "report.json";
pub const SUMMARY_FILE: &str = "summary.txt";

/// Command-line overrides of configuration values.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Replaces the graph-relation tolerance.
    pub tol: Option<f64>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub report: AnalysisReport,
    pub output_dir: PathBuf,
    pub files: Vec<PathBuf>,
}

impl RunOutcome {
    /// `0` when every check passed, `1` otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.report.passed {
            0
        } else {
            1
        }
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

/// Writes through a temporary sibling and renames it into place.
fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let file_name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{file_name}.tmp-{}", std::process::id()));
    std::fs::write(&tmp, contents).map_err(io_error(&tmp))?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        io_error(path)(e)
    })
}

/// Runs the configuration; nothing is written unless every analysis completes.
pub fn run(config_path: &Path, overrides: &Overrides) -> Result<RunOutcome, CliError> {
    let mut config = AnalysisConfig::load(config_path)?;
    if let Some(out) = &overrides.out {
        config.output_dir = out.clone();
    }
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    if let Some(tol) = overrides.tol {
        if tol.is_nan() || tol <= 0.0 {
            return Err(CliError::Config(format!("--tol must be positive, got {tol}")));
        }
        config.tolerances.graph = tol;
    }
    let report = pipeline::analyze(&config)?;
    let json = report.to_json();
    let value: serde_json::Value = serde_json::from_str(&json).expect("report round-trips");
    let mut outputs = vec![(REPORT_FILE.to_string(), json), (SUMMARY_FILE.to_string(), report.summary())];
    for table in Table::ALL {
        if table.available(&value) {
            outputs.push((table.file_name(), table.render(&value)?));
        }
    }
    std::fs::create_dir_all(&config.output_dir).map_err(io_error(&config.output_dir))?;
    let mut files = Vec::with_capacity(outputs.len());
    for (name, contents) in outputs {
        let path = config.output_dir.join(name);
        write_atomic(&path, &contents)?;
        files.push(path);
    }
    Ok(RunOutcome { report, output_dir: config.output_dir, files })
}

/// Writes one table from a report; defaults to the report's directory.
pub fn emit(report_path: &Path, which: Table, out: Option<&Path>) -> Result<PathBuf, CliError> {
    let text = std::fs::read_to_string(report_path)
        .map_err(|e| CliError::Config(format!("cannot read report {}: {e}", report_path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{} is not a report: {e}", report_path.display())))?;
    let table = which.render(&value)?;
    let dir = match out {
        Some(dir) => dir.to_path_buf(),
        None => report_path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(".")),
    };
    std::fs::create_dir_all(&dir).map_err(io_error(&dir))?;
    let path = dir.join(which.file_name());
    write_atomic(&path, &table)?;
    Ok(path)
}
