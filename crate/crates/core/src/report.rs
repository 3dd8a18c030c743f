//! Machine-readable privacy/utility trade-off reports and their text table.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Chance-level EER in percent.
pub const EER_CHANCE_PERCENT: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub master_seed: u64,
    pub noise_seeds: Vec<u64>,
    pub config_sha256: String,
    pub corpus_id: String,
    pub tool_version: String,
}

/// Results of one privacy level, averaged over noise seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub name: String,
    /// `None` for the raw reference.
    pub sigma: Option<f64>,
    pub eer: Option<f64>,
    pub eer_threshold: Option<f64>,
    pub rank1_ir: Option<f64>,
    pub mse: Option<f64>,
    pub prediction_error: Option<f64>,
    #[serde(default)]
    pub baseline_prediction_error: Option<f64>,
    /// Per-seed EER and IR in percent, in the order of `noise_seeds`.
    #[serde(default)]
    pub eer_per_seed: Vec<f64>,
    #[serde(default)]
    pub rank1_ir_per_seed: Vec<f64>,
}

impl LevelRow {
    pub fn empty(name: impl Into<String>, sigma: Option<f64>) -> Self {
        Self {
            name: name.into(),
            sigma,
            eer: None,
            eer_threshold: None,
            rank1_ir: None,
            mse: None,
            prediction_error: None,
            baseline_prediction_error: None,
            eer_per_seed: Vec::new(),
            rank1_ir_per_seed: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffReport {
    pub schema_version: u32,
    pub provenance: Provenance,
    pub num_test_subjects: usize,
    /// Percent.
    pub eer_chance: f64,
    /// Percent: `100 / num_test_subjects`.
    pub ir_chance: f64,
    pub levels: Vec<LevelRow>,
}

impl TradeoffReport {
    pub fn new(provenance: Provenance, num_test_subjects: usize, levels: Vec<LevelRow>) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            provenance,
            num_test_subjects,
            eer_chance: EER_CHANCE_PERCENT,
            ir_chance: 100.0 / num_test_subjects.max(1) as f64,
            levels,
        }
    }

    /// Structural checks: schema version and percentage ranges.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != REPORT_SCHEMA_VERSION {
            return Err(Error::format(
                None,
                format!("report schema version {} is not {REPORT_SCHEMA_VERSION}", self.schema_version),
            ));
        }
        for row in &self.levels {
            for (what, v) in [("eer", row.eer), ("rank1_ir", row.rank1_ir)] {
                if let Some(v) = v {
                    if !(0.0..=100.0).contains(&v) {
                        return Err(Error::format(None, format!("{} {what} = {v} outside [0, 100]", row.name)));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("report is serializable");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let r: Self = serde_json::from_str(&text).map_err(|e| Error::format(Some(path), e.to_string()))?;
        r.validate().map_err(|e| Error::format(Some(path), e.to_string()))?;
        Ok(r)
    }
}

pub const TABLE_HEADERS: [&str; 5] = ["Privacy Level", "EER (%, ↓)", "IR (%, ↑)", "MSE", "Prediction Error"];

const MISSING: &str = "-";

/// Renders an aligned text table with one row per level of every report.
/// Returns the table and a warning per missing metric.
pub fn render_table(reports: &[TradeoffReport]) -> (String, Vec<String>) {
    let mut warnings = Vec::new();
    let mut rows: Vec<[String; 5]> = Vec::new();
    for r in reports {
        for l in &r.levels {
            let mut cell = |what: &str, v: Option<f64>, digits: usize| match v {
                Some(v) => format!("{v:.digits$}"),
                None => {
                    warnings.push(format!("{}: {what} missing", l.name));
                    MISSING.to_string()
                }
            };
            rows.push([
                l.name.clone(),
                cell("eer", l.eer, 1),
                cell("rank1_ir", l.rank1_ir, 1),
                cell("mse", l.mse, 2),
                cell("prediction_error", l.prediction_error, 2),
            ]);
        }
    }
    let width = |s: &str| s.chars().count();
    let mut widths: [usize; 5] = std::array::from_fn(|i| width(TABLE_HEADERS[i]));
    for row in &rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(width(c));
        }
    }
    let line = |cells: [&str; 5]| -> String {
        let mut s = String::new();
        for (i, c) in cells.iter().enumerate() {
            let pad = " ".repeat(widths[i] - width(c));
            if i == 0 {
                s.push_str(c);
                s.push_str(&pad);
            } else {
                s.push_str(" | ");
                s.push_str(&pad);
                s.push_str(c);
            }
        }
        s.trim_end().to_string()
    };
    let mut out = line(TABLE_HEADERS);
    out.push('\n');
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&rule.join("-|-"));
    out.push('\n');
    for row in &rows {
        out.push_str(&line(std::array::from_fn(|i| row[i].as_str())));
        out.push('\n');
    }
    (out, warnings)
}
