//! Deterministic experiment reports.
//!
//! Every experiment produces a [`Report`]: the experiment name, an echo of
//! the resolved configuration, a flat list of named [`Check`]s, and the
//! crate version. Reports are rendered as JSON or CSV and contain no
//! wall-clock times or other environment entropy, so rerunning an
//! experiment with the same configuration yields byte-identical output.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Output format for a rendered report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::InvalidConfig(format!(
                "unknown format {other:?}, expected json or csv"
            ))),
        }
    }
}

/// One verified statement. `anchor` names the mathematical statement the
/// check exercises, so a failure is traceable to a single claim. `observed`
/// is compared against `bound`; the comparison direction is baked into
/// `pass` when the check is built. `sigma` records the confidence radius
/// (in standard deviations) for statistical checks and is absent for exact
/// ones. `detail` carries human-readable context such as witness atoms.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub anchor: String,
    pub observed: f64,
    pub bound: f64,
    pub sigma: Option<f64>,
    pub pass: bool,
    pub detail: Option<String>,
}

impl Check {
    /// An exact check: `failures` violations were observed, zero allowed.
    pub fn exact(name: &str, anchor: &str, failures: u64) -> Self {
        Check {
            name: name.into(),
            anchor: anchor.into(),
            observed: failures as f64,
            bound: 0.0,
            sigma: None,
            pass: failures == 0,
            detail: None,
        }
    }

    /// An exact numeric identity: |observed - expected| <= tol.
    pub fn exact_value(name: &str, anchor: &str, observed: f64, expected: f64, tol: f64) -> Self {
        Check {
            name: name.into(),
            anchor: anchor.into(),
            observed,
            bound: expected,
            sigma: None,
            pass: (observed - expected).abs() <= tol,
            detail: Some(format!("tolerance {tol:e}")),
        }
    }

    /// A deterministic upper bound: observed <= bound, no sampling error.
    pub fn exact_upper(name: &str, anchor: &str, observed: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            anchor: anchor.into(),
            observed,
            bound,
            sigma: None,
            pass: observed <= bound,
            detail: None,
        }
    }

    /// A statistical upper bound: observed <= bound at the given sigma.
    pub fn stat_upper(name: &str, anchor: &str, observed: f64, bound: f64, sigma: f64) -> Self {
        Check {
            name: name.into(),
            anchor: anchor.into(),
            observed,
            bound,
            sigma: Some(sigma),
            pass: observed <= bound,
            detail: None,
        }
    }

    /// A statistical lower bound: observed >= bound at the given sigma.
    pub fn stat_lower(name: &str, anchor: &str, observed: f64, bound: f64, sigma: f64) -> Self {
        Check {
            name: name.into(),
            anchor: anchor.into(),
            observed,
            bound,
            sigma: Some(sigma),
            pass: observed >= bound,
            detail: None,
        }
    }

    /// A two-sided statistical check: |observed - center| <= radius.
    pub fn stat_two_sided(
        name: &str,
        anchor: &str,
        observed: f64,
        center: f64,
        radius: f64,
        sigma: f64,
    ) -> Self {
        Check {
            name: name.into(),
            anchor: anchor.into(),
            observed: (observed - center).abs(),
            bound: radius,
            sigma: Some(sigma),
            pass: (observed - center).abs() <= radius,
            detail: Some(format!("value {observed:.9}, center {center:.9}")),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

/// A full experiment report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub experiment: String,
    pub config: serde_json::Value,
    pub checks: Vec<Check>,
    pub version: String,
}

impl Report {
    pub fn new(experiment: &str, config: &impl Serialize, checks: Vec<Check>) -> Result<Self> {
        Ok(Report {
            experiment: experiment.into(),
            config: serde_json::to_value(config)
                .map_err(|e| Error::InvalidConfig(format!("config not serializable: {e}")))?,
            checks,
            version: env!("CARGO_PKG_VERSION").into(),
        })
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failed(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    /// Folds another report's checks into this one, prefixing their names
    /// with the source experiment. Used by the aggregate suite.
    pub fn absorb(&mut self, other: Report) {
        for mut check in other.checks {
            check.name = format!("{}/{}", other.experiment, check.name);
            self.checks.push(check);
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)
            .map_err(|e| Error::InvalidConfig(format!("report not serializable: {e}")))?;
        s.push('\n');
        Ok(s)
    }

    /// One row per check; the report header fields repeat on every row.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "experiment", "name", "anchor", "observed", "bound", "sigma", "pass", "detail",
            "version",
        ])
        .map_err(csv_err)?;
        for c in &self.checks {
            w.write_record([
                self.experiment.as_str(),
                c.name.as_str(),
                c.anchor.as_str(),
                &format_float(c.observed),
                &format_float(c.bound),
                &c.sigma.map(|s| format_float(s)).unwrap_or_default(),
                if c.pass { "true" } else { "false" },
                c.detail.as_deref().unwrap_or(""),
                self.version.as_str(),
            ])
            .map_err(csv_err)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::InvalidConfig(format!("csv flush failed: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::InvalidConfig(format!("csv not utf-8: {e}")))
    }

    pub fn render(&self, format: ReportFormat) -> Result<String> {
        match format {
            ReportFormat::Json => self.to_json(),
            ReportFormat::Csv => self.to_csv(),
        }
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidConfig(format!("csv write failed: {e}"))
}

/// Shortest round-trippable decimal; `ryu` via serde_json would do the same,
/// but CSV rows are built by hand.
fn format_float(v: f64) -> String {
    let mut buf = ryu_format(v);
    if buf.ends_with(".0") {
        buf.truncate(buf.len() - 2);
    }
    buf
}

fn ryu_format(v: f64) -> String {
    // serde_json renders f64 with ryu; reuse it for identical digits.
    serde_json::to_string(&v).unwrap_or_else(|_| v.to_string())
}
