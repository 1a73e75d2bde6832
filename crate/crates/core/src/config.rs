//! Experiment configuration. Every field has an embedded default, so a
//! config file only needs the values it changes.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::eigensolve::{Grid, SolverConfig};
use crate::potential::PotentialSpec;
use crate::traces::{log_spaced, TestFunction};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Spectrum,
    GapSweep,
    HadamardCheck,
    Weber,
    PrueferCompare,
    Trace,
    #[default]
    Validate,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        Self::Spectrum,
        Self::GapSweep,
        Self::HadamardCheck,
        Self::Weber,
        Self::PrueferCompare,
        Self::Trace,
        Self::Validate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Spectrum => "spectrum",
            Self::GapSweep => "gap-sweep",
            Self::HadamardCheck => "hadamard-check",
            Self::Weber => "weber",
            Self::PrueferCompare => "pruefer-compare",
            Self::Trace => "trace",
            Self::Validate => "validate",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Self::ALL.iter().map(|k| k.name()).collect();
                Error::Config(format!("unknown experiment {s:?}, expected one of {names:?}"))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HadamardSettings {
    /// 1-based eigenvalue index.
    pub j: usize,
    pub eps_fd: f64,
    /// Step sizes for the convergence-order study, each half the previous.
    pub order_eps: Vec<f64>,
}

impl Default for HadamardSettings {
    fn default() -> Self {
        Self {
            j: 1,
            eps_fd: crate::hadamard::DEFAULT_EPS_FD,
            order_eps: vec![0.2, 0.1, 0.05],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeberSettings {
    pub x_left: f64,
    pub x_right: f64,
}

impl Default for WeberSettings {
    fn default() -> Self {
        Self {
            x_left: -8.0,
            x_right: 8.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShootingSettings {
    pub h_list: Vec<f64>,
    pub max_j: usize,
}

impl Default for ShootingSettings {
    fn default() -> Self {
        Self {
            h_list: vec![1.0, 0.5, 0.25],
            max_j: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceSettings {
    /// Values of h for the Weyl fit, inside [0.02, 0.5].
    pub h_grid: Vec<f64>,
    pub functions: Vec<TestFunction>,
}

impl Default for TraceSettings {
    fn default() -> Self {
        Self {
            h_grid: vec![0.1, 0.125, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5],
            functions: vec![
                TestFunction::Exponential { scale: 1.0 },
                TestFunction::Bump { lo: 0.5, hi: 6.0 },
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// V⁺; the partner V⁻ reflects β.
    pub potential: PotentialSpec,
    pub grid: SolverConfig,
    /// h for single-h experiments.
    pub h: f64,
    /// Sweep for the isospectral distance and the ground-state bound.
    pub h_list: Vec<f64>,
    /// Energy window E of the isospectral distance.
    pub e_window: f64,
    /// Energy window of the spectrum listing.
    pub spectrum_energy: f64,
    /// Powers N for the `D(h)/h^N` monotonicity check.
    pub powers: Vec<i32>,
    pub hadamard: HadamardSettings,
    pub weber: WeberSettings,
    pub shooting: ShootingSettings,
    pub trace: TraceSettings,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentKind::default(),
            potential: PotentialSpec::default(),
            grid: SolverConfig::default(),
            h: 1.0,
            h_list: log_spaced(0.25, 1.0, 12),
            e_window: 1.2,
            spectrum_energy: 20.0,
            powers: vec![2, 4, 6, 8],
            hadamard: HadamardSettings::default(),
            weber: WeberSettings::default(),
            shooting: ShootingSettings::default(),
            trace: TraceSettings::default(),
            output_dir: PathBuf::from("qisolab-out"),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

fn positive_list(name: &str, vs: &[f64]) -> Result<()> {
    if vs.is_empty() {
        return Err(Error::Config(format!("{name} is empty")));
    }
    vs.iter().try_for_each(|&v| positive(name, v))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// Checks every numeric field against the preconditions of the module
    /// that consumes it.
    pub fn validate(&self) -> Result<()> {
        self.potential
            .validate()
            .into_result()
            .map_err(|e| Error::Config(e.to_string()))?;

        let g = &self.grid;
        positive("grid.half_length", g.half_length)?;
        Grid::new(g.half_length, g.n).map_err(|e| Error::Config(e.to_string()))?;
        g.grids().map_err(|e| Error::Config(e.to_string()))?;
        if let Some(tol) = g.tol {
            if !(tol >= 0.0 && tol.is_finite()) {
                return Err(Error::Config(format!("grid.tol must be >= 0, got {tol}")));
            }
        }
        if g.max_eigenvalues == 0 {
            return Err(Error::Config("grid.max_eigenvalues must be at least 1".into()));
        }

        positive("h", self.h)?;
        positive_list("h_list", &self.h_list)?;
        positive("e_window", self.e_window)?;
        positive("spectrum_energy", self.spectrum_energy)?;
        if self.powers.is_empty() {
            return Err(Error::Config("powers is empty".into()));
        }

        let hd = &self.hadamard;
        if hd.j == 0 {
            return Err(Error::Config("hadamard.j is 1-based".into()));
        }
        positive("hadamard.eps_fd", hd.eps_fd)?;
        positive_list("hadamard.order_eps", &hd.order_eps)?;
        if hd.order_eps.len() < 2 || hd.order_eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config(
                "hadamard.order_eps needs at least two strictly decreasing values".into(),
            ));
        }

        let w = &self.weber;
        if !(w.x_left <= -8.0) || !(w.x_right > 3.0) || !w.x_right.is_finite() {
            return Err(Error::Config(format!(
                "weber range [{}, {}] must have x_left <= -8 and x_right > 3",
                w.x_left, w.x_right
            )));
        }
        // The invariance check re-solves from x_left - 2.
        let span = 0.5 * ((w.x_left - 2.0).powi(2) + w.x_right.powi(2));
        if span > 650.0 {
            return Err(Error::Config(format!(
                "weber range [{}, {}] overflows double precision",
                w.x_left, w.x_right
            )));
        }

        positive_list("shooting.h_list", &self.shooting.h_list)?;
        if self.shooting.max_j == 0 {
            return Err(Error::Config("shooting.max_j must be at least 1".into()));
        }

        let t = &self.trace;
        if t.h_grid.len() < 6 || t.h_grid.iter().any(|h| !(0.02..=0.5).contains(h)) {
            return Err(Error::Config(
                "trace.h_grid needs at least 6 values inside [0.02, 0.5]".into(),
            ));
        }
        if t.functions.is_empty() {
            return Err(Error::Config("trace.functions is empty".into()));
        }
        for f in &t.functions {
            f.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        assert_eq!(ExperimentConfig::from_json(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn partial_json_fills_defaults() {
        let c = ExperimentConfig::from_json(r#"{"experiment": "gap-sweep", "potential": {"t": 0.0}}"#)
            .unwrap();
        assert_eq!(c.experiment, ExperimentKind::GapSweep);
        assert_eq!(c.potential.t, 0.0);
        assert_eq!(c.potential.eps, 0.05);
        assert_eq!(c.h_list.len(), 12);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"hh": 1}"#).is_err());
    }

    #[test]
    fn bad_values_fail_before_running() {
        let mut c = ExperimentConfig::default();
        c.h = -1.0;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.potential.t = 1e6;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.trace.h_grid = vec![0.1, 0.2];
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.hadamard.order_eps = vec![0.1, 0.2];
        assert!(c.validate().is_err());
    }

    #[test]
    fn experiment_names_parse() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.name().parse::<ExperimentKind>().unwrap(), k);
        }
        assert!("nope".parse::<ExperimentKind>().is_err());
    }
}
