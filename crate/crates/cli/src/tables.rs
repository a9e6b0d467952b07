//! Comma-separated plot tables extracted from a report document.

use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Table {
    /// `theta,support_value,re,im` of the numerical range boundary.
    Range,
    /// `t,beta,norm,complement_norm` of the sector scan.
    Decay,
    /// `n,k,alpha` per family level.
    Defect,
}

impl Table {
    pub const ALL: [Table; 3] = [Table::Range, Table::Decay, Table::Defect];

    pub fn name(self) -> &'static str {
        match self {
            Table::Range => "range",
            Table::Decay => "decay",
            Table::Defect => "defect",
        }
    }

    pub fn file_name(self) -> String {
        format!("{}.csv", self.name())
    }

    fn section(self) -> &'static str {
        match self {
            Table::Range => "range",
            Table::Decay => "sector",
            Table::Defect => "family",
        }
    }

    /// Whether the report carries the analysis this table is drawn from.
    pub fn available(self, report: &Value) -> bool {
        !report[self.section()].is_null()
    }

    pub fn render(self, report: &Value) -> Result<String, CliError> {
        let section = &report[self.section()];
        if section.is_null() {
            return Err(CliError::MissingAnalysis(format!("{} (needs the {} analysis)", self.name(), self.section())));
        }
        let malformed = || CliError::Config(format!("report section `{}` is malformed", self.section()));
        let mut out = String::new();
        match self {
            Table::Range => {
                out.push_str("theta,support_value,re,im\n");
                let angles = section["angles"].as_array().ok_or_else(malformed)?;
                let values = section["support_values"].as_array().ok_or_else(malformed)?;
                let points = section["support_points"].as_array().ok_or_else(malformed)?;
                for ((theta, h), p) in angles.iter().zip(values).zip(points) {
                    let theta = theta.as_f64().ok_or_else(malformed)?;
                    let h = h.as_f64().unwrap_or(f64::INFINITY);
                    let (re, im) = match p.as_array() {
                        Some(xy) => (xy[0].as_f64().ok_or_else(malformed)?, xy[1].as_f64().ok_or_else(malformed)?),
                        None => (f64::NAN, f64::NAN),
                    };
                    out.push_str(&format!("{theta},{h},{re},{im}\n"));
                }
            }
            Table::Decay => {
                out.push_str("t,beta,norm,complement_norm\n");
                for row in section["rows"].as_array().ok_or_else(malformed)? {
                    let field = |k: &str| row[k].as_f64().ok_or_else(malformed);
                    out.push_str(&format!(
                        "{},{},{},{}\n",
                        field("t")?,
                        field("beta")?,
                        field("norm")?,
                        field("complement_norm")?
                    ));
                }
            }
            Table::Defect => {
                out.push_str("n,k,alpha\n");
                let levels = section["levels"].as_array().ok_or_else(malformed)?;
                let verdict = &section["verdict"];
                let dims = verdict["defect_dims"].as_array().ok_or_else(malformed)?;
                let alphas = verdict["alphas"].as_array().ok_or_else(malformed)?;
                for ((level, k), alpha) in levels.iter().zip(dims).zip(alphas) {
                    let n = level["n"].as_u64().or_else(|| level["dim_v"].as_u64()).ok_or_else(malformed)?;
                    let k = k.as_u64().ok_or_else(malformed)?;
                    let alpha = alpha.as_f64().ok_or_else(malformed)?;
                    out.push_str(&format!("{n},{k},{alpha}\n"));
                }
            }
        }
        Ok(out)
    }
}
