//! Run configuration, read from TOML.
//!
//! ```toml
//! [primitives]
//! sigma = 2.0
//! f = 0.15
//! f_n = 0.005
//! delta = 0.1
//! L = 1.0            # optional, defaults to 1
//!
//! [schedule]
//! kind = "power_bounded"   # constant | power_bounded | piecewise_linear | hyperbolic
//! f_b0 = 3.0
//! kappa = 2.0
//! alpha = 8.0
//!
//! [run]
//! mode = "sweep"           # solve | sweep | optimum | pigouvian | limits | validate
//! grid = "0.05:0.98:0.01"
//! seed = 1
//!
//! [tolerances]             # optional solver overrides
//! residual_tol = 1e-10
//! ```

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use gatekeep_core::{CostSchedule, Primitives, SolverOptions};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Solve,
    Sweep,
    Optimum,
    Pigouvian,
    Limits,
    Validate,
}

/// `lo:hi:step`, inclusive of `hi` up to rounding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        gatekeep_core::welfare::uniform_grid(self.lo, self.hi, self.step)
            .expect("validated when parsed")
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            lo: 0.05,
            hi: 0.98,
            step: 0.01,
        }
    }
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, step] = parts.as_slice() else {
            return Err(format!("grid `{s}` is not of the form lo:hi:step"));
        };
        let num = |x: &str| {
            x.trim()
                .parse::<f64>()
                .map_err(|e| format!("grid `{s}`: {e}"))
        };
        let g = Self {
            lo: num(lo)?,
            hi: num(hi)?,
            step: num(step)?,
        };
        if !(g.step > 0.0 && g.hi >= g.lo && g.lo.is_finite() && g.hi.is_finite()) {
            return Err(format!("grid `{s}` needs lo <= hi and step > 0"));
        }
        Ok(g)
    }
}

impl TryFrom<String> for GridSpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<GridSpec> for String {
    fn from(g: GridSpec) -> Self {
        g.to_string()
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.step)
    }
}

fn default_seed() -> u64 {
    1
}

fn default_samples() -> usize {
    10_000_000
}

fn default_s_points() -> usize {
    41
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub mode: Mode,
    /// Precision for `solve` and `pigouvian`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Monte Carlo draws per point in `validate`.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Transfer grid size in `pigouvian`.
    #[serde(default = "default_s_points")]
    pub s_points: usize,
    /// Activation cost frozen in the perfect-information limit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_b_bar: Option<f64>,
    /// Total entry cost in the zero-precision limit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_e0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svg: Option<PathBuf>,
}

impl RunSection {
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            rho: None,
            grid: GridSpec::default(),
            seed: default_seed(),
            samples: default_samples(),
            s_points: default_s_points(),
            f_b_bar: None,
            f_e0: None,
            out: None,
            svg: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub primitives: Primitives,
    pub schedule: CostSchedule,
    pub run: RunSection,
    #[serde(default)]
    pub tolerances: SolverOptions,
}

impl RunConfig {
    /// Baseline economy with the given mode.
    pub fn baseline(mode: Mode) -> Self {
        Self {
            primitives: Primitives::baseline(),
            schedule: CostSchedule::baseline(),
            run: RunSection::new(mode),
            tolerances: SolverOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let invalid = |e: gatekeep_core::Error| CliError::Validation(e.to_string());
        self.primitives.validate().map_err(invalid)?;
        self.schedule.validate().map_err(invalid)?;
        let run = &self.run;
        if let Some(rho) = run.rho {
            if !(rho > 0.0 && rho < 1.0) {
                return Err(CliError::Validation(format!(
                    "rho = {rho} must lie in (0, 1)"
                )));
            }
        }
        let g = run.grid;
        if !(g.lo > 0.0 && g.hi < 1.0) {
            return Err(CliError::Validation(format!(
                "grid {g} must lie inside (0, 1)"
            )));
        }
        if matches!(run.mode, Mode::Solve | Mode::Pigouvian) && run.rho.is_none() {
            return Err(CliError::Validation(format!(
                "mode {:?} needs run.rho",
                run.mode
            )));
        }
        if run.samples == 0 {
            return Err(CliError::Validation("samples must be positive".into()));
        }
        if run.s_points < 3 {
            return Err(CliError::Validation("s_points must be at least 3".into()));
        }
        for (name, v) in [("f_b_bar", run.f_b_bar), ("f_e0", run.f_e0)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(CliError::Validation(format!("{name} must be positive")));
                }
            }
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("abscissa_tol", t.abscissa_tol),
            ("ac_tol", t.ac_tol),
            ("residual_tol", t.residual_tol),
            ("stationarity_tol", t.stationarity_tol),
            ("stationarity_step", t.stationarity_step),
            ("bracket_limit", t.bracket_limit),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Validation(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    /// Canonical TOML rendering; `parse_config` reads it back unchanged.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    if text.trim().is_empty() {
        return Err(CliError::Parse {
            line: 1,
            column: 1,
            message: "empty configuration".into(),
        });
    }
    let config: RunConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| line_column(text, s.start));
        CliError::Parse {
            line,
            column,
            message: e.message().to_owned(),
        }
    })?;
    config.validate()?;
    Ok(config)
}
