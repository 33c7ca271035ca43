//! Experiment configuration files (TOML).
//!
//! ```toml
//! [problem]
//! name = "max_abs(10)"        # catalog entry, or an [problem.inline] table
//! x0 = [1.0, 0.5, ...]        # optional; `random_start = r` draws U[-r, r]ⁿ per seed
//!
//! [solver]
//! name = "ggd"
//! normalize = true            # solver parameters sit next to the name
//!
//! [schedule]
//! rho = { c = 1.0, exp = 1.0 }
//!
//! [stop]
//! max_iter = 200000
//! log_every = 100
//!
//! [run]
//! count = 20                  # or seeds = [1, 2, 3]
//! master = 7
//! validation = "strict"       # strict | warn | off
//! output = "runs"
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::core::trace::StopRule;
use crate::core::vector::Vector;
use crate::problems::DemandLaw;
use crate::schedules::Schedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationMode {
    /// Refuse to run a schedule that fails its condition set.
    #[default]
    Strict,
    /// Report failures and run anyway.
    Warn,
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Capacity {
    pub weights: Vector,
    pub total: f64,
}

/// Problems given in full inside the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InlineProblem {
    Newsvendor {
        alpha: Vec<f64>,
        beta: Vec<f64>,
        laws: Vec<DemandLaw>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        interchange: Option<Vec<Vector>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        capacity: Option<Capacity>,
    },
    Transport {
        cost: Vec<Vector>,
        capacity: Vector,
        laws: Vec<DemandLaw>,
        alpha: Vector,
        beta: Vector,
    },
    /// max_i (⟨a_i, x⟩ + b_i)
    MaxLinear { a: Vec<Vector>, b: Vector },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inline: Option<InlineProblem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSection {
    pub name: String,
    #[serde(flatten)]
    pub params: toml::Table,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master: Option<u64>,
    #[serde(default)]
    pub validation: ValidationMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// f level for the iterations-to-threshold column.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSection,
    pub solver: SolverSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Schedule>,
    #[serde(default)]
    pub stop: StopRule,
    #[serde(default)]
    pub run: RunSection,
}

impl ExperimentConfig {
    /// Explicit seeds, or `master + i` for i < count (count defaults to 1).
    pub fn seeds(&self) -> Vec<u64> {
        match &self.run.seeds {
            Some(s) => s.clone(),
            None => {
                let m = self.run.master.unwrap_or(0);
                (0..self.run.count.unwrap_or(1) as u64).map(|i| m + i).collect()
            }
        }
    }

    pub fn label(&self) -> String {
        self.run.label.clone().unwrap_or_else(|| self.solver.name.clone())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config types serialize to TOML")
    }
}

/// A parse failure located in the source text (1-based line and column).
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.col, self.message)
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    toml::from_str(text).map_err(|e| {
        let (line, col) = e.span().map_or((1, 1), |s| line_col(text, s.start));
        ConfigError {
            line,
            col,
            message: e.message().trim().to_string(),
        }
    })
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, super::CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| super::CliError::Io(format!("{}: {}", path.display(), e)))?;
    parse_config(&text).map_err(|e| super::CliError::Parse {
        path: path.display().to_string(),
        err: e,
    })
}
