//! Run reports and plot-data emission.
//!
//! Reports are deterministic: given the same config and seed the
//! serialized JSON is byte-identical, so wall-clock timing goes to
//! stderr rather than into the artifact.

use crate::error::Result;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::Path;

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// One computed quantity with the operation and parameters it came from.
#[derive(Debug, Clone, Serialize)]
pub struct Quantity {
    pub name: String,
    pub value: Value,
    pub source: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub experiment: String,
    pub toolkit_version: String,
    pub config_hash: String,
    pub quantities: Vec<Quantity>,
    pub criteria: Vec<CriterionResult>,
    pub skipped: Option<String>,
}

impl RunReport {
    pub fn new(experiment: &str, config: &impl Serialize) -> Self {
        Self {
            experiment: experiment.to_string(),
            toolkit_version: TOOLKIT_VERSION.to_string(),
            config_hash: config_hash(config),
            quantities: Vec::new(),
            criteria: Vec::new(),
            skipped: None,
        }
    }

    pub fn quantity(&mut self, name: &str, value: impl Serialize, source: &str) {
        self.quantities.push(Quantity {
            name: name.to_string(),
            value: serde_json::to_value(value).expect("serializable quantity"),
            source: source.to_string(),
        });
    }

    pub fn criterion(&mut self, name: &str, pass: bool, detail: String) {
        self.criteria.push(CriterionResult {
            name: name.to_string(),
            pass,
            detail,
        });
    }

    pub fn all_pass(&self) -> bool {
        self.criteria.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

pub fn config_hash(config: &impl Serialize) -> String {
    let bytes = serde_json::to_vec(config).expect("config serializes");
    let mut h = Sha256::new();
    h.update(&bytes);
    format!("{:x}", h.finalize())
}

/// Locale-independent 17-significant-digit float formatting.
pub fn fmt_g17(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{:.16e}", x)
    }
}

/// Delimited plot data: header line, then one row per record.
pub fn emit_plot_data(headers: &[&str], rows: &[Vec<f64>], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(crate::error::RdsError::Config("empty plot series".into()));
    }
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut out = std::fs::File::create(path)?;
    writeln!(out, "# {}", headers.join("\t"))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|x| fmt_g17(*x)).collect();
        writeln!(out, "{}", cells.join("\t"))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_round_trip_and_hash_stability() {
        let cfg = serde_json::json!({"horizon": 100, "seed": 7});
        let mut r = RunReport::new("demo", &cfg);
        r.quantity("lambda1", 0.788, "lyapunov_spectrum(horizon=100)");
        r.criterion("bound", true, "margin -0.01".into());
        let a = r.to_json();
        let r2 = {
            let mut r2 = RunReport::new("demo", &cfg);
            r2.quantity("lambda1", 0.788, "lyapunov_spectrum(horizon=100)");
            r2.criterion("bound", true, "margin -0.01".into());
            r2.to_json()
        };
        assert_eq!(a, r2);
        assert!(r.all_pass());
    }

    #[test]
    fn plot_data_format() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("series.dat");
        emit_plot_data(
            &["n", "value"],
            &[vec![0.0, 1.0 / 3.0], vec![1.0, f64::NEG_INFINITY]],
            &path,
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "# n\tvalue");
        let row = lines.next().unwrap();
        assert!(row.contains("3.3333333333333331e-1"));
        assert!(text.contains("-inf"));
    }

    #[test]
    fn empty_series_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(emit_plot_data(&["n"], &[], &dir.path().join("x.dat")).is_err());
    }
}
