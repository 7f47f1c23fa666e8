use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::scenario::Target;
use crate::error::{Error, Result};

pub const TOOL: &str = "amalgam";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// One evaluated instance of an inequality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub function: String,
    /// Extra coordinates of the row, such as `kappa=1` or `step=2`.
    #[serde(skip_serializing_if = "String::is_empty")]
    pub param: String,
    pub lambda: Option<f64>,
    pub lhs: f64,
    pub rhs_core: f64,
    pub ratio: f64,
}

impl Row {
    pub fn new(function: &str, param: impl Into<String>, lambda: Option<f64>, lhs: f64, rhs_core: f64) -> Self {
        Self { function: function.to_string(), param: param.into(), lambda, lhs, rhs_core, ratio: ratio(lhs, rhs_core) }
    }
}

/// `lhs / rhs`, with `0/0 = 0`.
pub fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else if rhs == 0.0 {
        f64::INFINITY
    } else {
        lhs / rhs
    }
}

/// A side assertion with its own tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// `|value - expected| <= tolerance * max(1, |expected|)`.
    pub fn close(name: impl Into<String>, value: f64, expected: f64, tolerance: f64) -> Self {
        let passed = (value - expected).abs() <= tolerance * expected.abs().max(1.0);
        Self { name: name.into(), value, expected, tolerance, passed }
    }

    /// `value <= bound * (1 + tolerance)`.
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64, tolerance: f64) -> Self {
        let passed = value <= bound * (1.0 + tolerance) || value == bound;
        Self { name: name.into(), value, expected: bound, tolerance, passed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSizes {
    pub grid_scale: f64,
    pub samples: usize,
    pub lambda_points: usize,
    pub maximal_masses: usize,
    pub maximal_splits: usize,
    pub tail_points: usize,
    pub scale_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub tool: String,
    pub version: String,
    pub scenario: String,
    pub target: Target,
    pub seed: u64,
    pub grids: GridSizes,
    /// Exponents and hypothesis quantities derived before evaluation.
    pub derived: BTreeMap<String, f64>,
    pub rows: Vec<Row>,
    pub empirical_constant: f64,
    pub witness: Option<Row>,
    /// Constant with every grid doubled.
    pub refined_constant: f64,
    pub refinement_stability: f64,
    /// Constant for the family scaled by 2.
    pub homogeneity_constant: f64,
    pub homogeneity_deviation: f64,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub verdict: Verdict,
}

/// `|b - a| / a`, zero when both vanish.
pub fn relative_change(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else if a == 0.0 || !a.is_finite() || !b.is_finite() {
        f64::INFINITY
    } else {
        (b - a).abs() / a.abs()
    }
}

/// Largest ratio and the row attaining it (first on ties).
pub fn constant_of(rows: &[Row]) -> (f64, Option<Row>) {
    let mut best: Option<&Row> = None;
    for r in rows {
        let better = match best {
            None => true,
            Some(b) => r.ratio > b.ratio || (r.ratio.is_nan() && !b.ratio.is_nan()),
        };
        if better {
            best = Some(r);
        }
    }
    match best {
        Some(r) => (if r.ratio.is_nan() { f64::INFINITY } else { r.ratio }, Some(r.clone())),
        None => (0.0, None),
    }
}

impl VerificationReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::Internal(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    /// Flat table, one line per row, with the run metadata repeated.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Internal(e.to_string());
        w.write_record([
            "tool", "version", "scenario", "target", "seed", "grid_scale", "samples", "lambda_points", "function", "param",
            "lambda", "lhs", "rhs_core", "ratio",
        ])
        .map_err(csv_err)?;
        let g = &self.grids;
        for r in &self.rows {
            w.write_record([
                self.tool.clone(),
                self.version.clone(),
                self.scenario.clone(),
                self.target.to_string(),
                self.seed.to_string(),
                g.grid_scale.to_string(),
                g.samples.to_string(),
                g.lambda_points.to_string(),
                r.function.clone(),
                r.param.clone(),
                r.lambda.map_or(String::new(), |l| l.to_string()),
                r.lhs.to_string(),
                r.rhs_core.to_string(),
                r.ratio.to_string(),
            ])
            .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
    }

    /// Writes `report.json` and `report.csv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Config(format!("{}: {e}", dir.display())))?;
        for (name, body) in [("report.json", self.to_json()?), ("report.csv", self.to_csv()?)] {
            let path = dir.join(name);
            let mut file = std::fs::File::create(&path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            file.write_all(body.as_bytes()).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratios_and_constants() {
        assert_eq!(ratio(0.0, 0.0), 0.0);
        assert!(ratio(1.0, 0.0).is_infinite());
        let rows = vec![Row::new("f", "", Some(1.0), 1.0, 2.0), Row::new("g", "", Some(2.0), 3.0, 2.0)];
        let (c, w) = constant_of(&rows);
        assert_eq!(c, 1.5);
        assert_eq!(w.unwrap().function, "g");
        assert_eq!(constant_of(&[]).0, 0.0);
        assert_eq!(relative_change(0.0, 0.0), 0.0);
        assert!((relative_change(2.0, 2.2) - 0.1).abs() < 1e-12);
    }
}
