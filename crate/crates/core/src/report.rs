//! Pass/fail assertions and experiment reports.

use serde::{Deserialize, Serialize};

/// One checked claim. `invariant` names the module property it instantiates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub invariant: String,
    pub passed: bool,
    /// Signed distance from the threshold when one exists (positive = slack).
    pub margin: Option<f64>,
    pub detail: String,
}

impl Assertion {
    pub fn new(
        name: impl Into<String>,
        invariant: impl Into<String>,
        passed: bool,
        detail: String,
    ) -> Self {
        Self {
            name: name.into(),
            invariant: invariant.into(),
            passed,
            margin: None,
            detail,
        }
    }

    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = Some(margin);
        self
    }

    /// `value <= bound`, margin `bound - value`.
    pub fn at_most(
        name: impl Into<String>,
        invariant: impl Into<String>,
        value: f64,
        bound: f64,
    ) -> Self {
        Self::new(
            name,
            invariant,
            value <= bound,
            format!("{value:.6e} <= {bound:.6e}"),
        )
        .with_margin(bound - value)
    }

    /// `value > bound`, margin `value - bound`.
    pub fn above(
        name: impl Into<String>,
        invariant: impl Into<String>,
        value: f64,
        bound: f64,
    ) -> Self {
        Self::new(
            name,
            invariant,
            value > bound,
            format!("{value:.6e} > {bound:.6e}"),
        )
        .with_margin(value - bound)
    }

    pub fn with_detail_suffix(mut self, suffix: impl AsRef<str>) -> Self {
        self.detail.push_str("; ");
        self.detail.push_str(suffix.as_ref());
        self
    }

    pub fn line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        match self.margin {
            Some(m) => format!(
                "[{status}] {} ({}) margin={m:.3e}: {}",
                self.name, self.invariant, self.detail
            ),
            None => format!("[{status}] {} ({}): {}", self.name, self.invariant, self.detail),
        }
    }
}

/// A CSV file written by an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    /// Path relative to the output directory.
    pub file: String,
    /// `column: meaning`, in file order.
    pub columns: Vec<String>,
}

impl Table {
    pub fn new(name: &str, file: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            file: file.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
        }
    }
}

/// Everything one experiment produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub experiment: String,
    pub config: crate::config::ExperimentConfig,
    pub tables: Vec<Table>,
    /// Scalar and structured results, keyed by name.
    pub values: std::collections::BTreeMap<String, serde_json::Value>,
    pub notes: Vec<String>,
    pub assertions: Vec<Assertion>,
    pub elapsed_seconds: f64,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Assertion> {
        self.assertions.iter().filter(|a| !a.passed)
    }

    pub fn file_name(&self) -> String {
        format!("{}_report.json", self.experiment)
    }

    pub fn write(&self, dir: &std::path::Path) -> crate::Result<std::path::PathBuf> {
        let path = dir.join(self.file_name());
        std::fs::write(&path, serde_json::to_string_pretty(self)?)?;
        Ok(path)
    }
}
