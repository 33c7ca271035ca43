//! Summaries across seeds, trace files and comparison tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use statrs::statistics::{Data, Median, OrderStatistics};

use crate::core::trace::{fmt17, RunTrace};
use crate::core::vector::Vector;

/// Version of the trace CSV and summary layouts.
pub const SCHEMA_VERSION: u32 = 1;

/// Median and 10/90 % quantiles over the finite values of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub n: usize,
    pub median: f64,
    pub q10: f64,
    pub q90: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Stats {
        let v: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
        if v.is_empty() {
            return Stats {
                n: 0,
                median: f64::NAN,
                q10: f64::NAN,
                q90: f64::NAN,
                min: f64::NAN,
                max: f64::NAN,
            };
        }
        let n = v.len();
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut d = Data::new(v);
        Stats {
            n,
            median: d.median(),
            q10: d.quantile(0.1),
            q90: d.quantile(0.9),
            min,
            max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub seed: u64,
    pub trace_file: String,
    pub final_f: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_avg: Option<f64>,
    pub iterations: usize,
    pub oracle_calls: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations_to_threshold: Option<usize>,
    pub stop_reason: String,
    pub x_final: Vector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_avg: Option<Vector>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extras: BTreeMap<String, f64>,
}

impl RunRow {
    pub fn new(trace: &RunTrace, trace_file: String, f_avg: Option<f64>, threshold: Option<f64>) -> RunRow {
        RunRow {
            seed: trace.seed,
            trace_file,
            final_f: trace.final_f(),
            f_avg,
            iterations: trace.iterations,
            oracle_calls: trace.oracle_calls,
            iterations_to_threshold: threshold.and_then(|t| trace.iterations_to(t)),
            stop_reason: trace.stop_reason.as_str().to_string(),
            x_final: trace.x_final.clone(),
            x_avg: trace.x_avg.clone(),
            extras: trace.extras.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationSummary {
    pub condition_set: String,
    pub mode: String,
    pub passed: bool,
    pub failed: Vec<String>,
    pub report: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema: u32,
    pub label: String,
    pub problem: String,
    pub solver: String,
    pub runs_ok: usize,
    pub final_f: Stats,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_avg: Option<Stats>,
    pub iterations: Stats,
    pub oracle_calls: Stats,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    /// Over the runs that reached the threshold.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations_to_threshold: Option<Stats>,
    pub reached_threshold: usize,
    pub stop_reasons: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationSummary>,
    /// `seed: message` for runs that failed.
    #[serde(default)]
    pub errors: Vec<String>,
    #[serde(default)]
    pub runs: Vec<RunRow>,
}

impl Summary {
    pub fn new(
        label: String,
        problem: String,
        solver: String,
        threshold: Option<f64>,
        validation: Option<ValidationSummary>,
        runs: Vec<RunRow>,
        errors: Vec<String>,
    ) -> Summary {
        let col = |f: &dyn Fn(&RunRow) -> f64| Stats::of(&runs.iter().map(f).collect::<Vec<_>>());
        let f_avgs: Vec<f64> = runs.iter().filter_map(|r| r.f_avg).collect();
        let hits: Vec<f64> = runs
            .iter()
            .filter_map(|r| r.iterations_to_threshold.map(|k| k as f64))
            .collect();
        let mut stop_reasons = BTreeMap::new();
        for r in &runs {
            *stop_reasons.entry(r.stop_reason.clone()).or_insert(0) += 1;
        }
        Summary {
            schema: SCHEMA_VERSION,
            label,
            problem,
            solver,
            runs_ok: runs.len(),
            final_f: col(&|r| r.final_f),
            f_avg: (!f_avgs.is_empty()).then(|| Stats::of(&f_avgs)),
            iterations: col(&|r| r.iterations as f64),
            oracle_calls: col(&|r| r.oracle_calls as f64),
            threshold,
            iterations_to_threshold: threshold.map(|_| Stats::of(&hits)),
            reached_threshold: hits.len(),
            stop_reasons,
            validation,
            errors,
            runs,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("summary serializes to TOML")
    }

    pub fn from_toml(text: &str) -> Option<Summary> {
        toml::from_str(text).ok()
    }
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn trace_path(dir: &Path, label: &str, seed: u64) -> PathBuf {
    dir.join(format!("{}_seed{}.csv", label, seed))
}

pub fn envelope_path(dir: &Path, label: &str, seed: u64) -> PathBuf {
    dir.join(format!("{}_seed{}_envelope.csv", label, seed))
}

pub fn summary_path(dir: &Path, label: &str) -> PathBuf {
    dir.join(format!("{}_summary.toml", label))
}

/// Recomputes the median final f from the trace files a summary lists
/// (paths relative to `dir`). None when a file is missing or malformed.
pub fn cross_check(dir: &Path, summary: &Summary) -> Option<f64> {
    let mut finals = Vec::with_capacity(summary.runs.len());
    for r in &summary.runs {
        let text = std::fs::read_to_string(dir.join(&r.trace_file)).ok()?;
        let rows = RunTrace::rows_from_csv(&text)?;
        finals.push(rows.last().map_or(f64::NAN, |r| r.f));
    }
    Some(Stats::of(&finals).median)
}

fn cell(v: Option<f64>) -> String {
    match v {
        Some(v) if v.is_finite() => fmt17(v),
        _ => "NA".to_string(),
    }
}

/// One row of a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub label: String,
    pub solver: String,
    pub runs: usize,
    pub median_final_f: f64,
    pub median_iterations_to_threshold: Option<f64>,
    pub reached: usize,
    pub median_iterations: f64,
    pub median_oracle_calls: f64,
}

impl CompareRow {
    pub fn from_summary(s: &Summary) -> CompareRow {
        CompareRow {
            label: s.label.clone(),
            solver: s.solver.clone(),
            runs: s.runs_ok,
            median_final_f: s.final_f.median,
            median_iterations_to_threshold: s.iterations_to_threshold.map(|t| t.median).filter(|v| v.is_finite()),
            reached: s.reached_threshold,
            median_iterations: s.iterations.median,
            median_oracle_calls: s.oracle_calls.median,
        }
    }
}

pub const COMPARE_HEADER: [&str; 8] = [
    "label",
    "solver",
    "runs",
    "median_final_f",
    "median_iters_to_threshold",
    "reached",
    "median_iterations",
    "median_oracle_calls",
];

fn compare_cells(r: &CompareRow) -> [String; 8] {
    [
        r.label.clone(),
        r.solver.clone(),
        r.runs.to_string(),
        cell(Some(r.median_final_f)),
        cell(r.median_iterations_to_threshold),
        r.reached.to_string(),
        cell(Some(r.median_iterations)),
        cell(Some(r.median_oracle_calls)),
    ]
}

pub fn compare_csv(rows: &[CompareRow]) -> String {
    let mut s = COMPARE_HEADER.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&compare_cells(r).join(","));
        s.push('\n');
    }
    s
}

/// Space-aligned table with short numbers.
pub fn compare_table(problem: &str, threshold: Option<f64>, rows: &[CompareRow]) -> String {
    let short = |v: Option<f64>| match v {
        Some(v) if v.is_finite() => format!("{:.4e}", v),
        _ => "-".to_string(),
    };
    let body: Vec<[String; 8]> = rows
        .iter()
        .map(|r| {
            [
                r.label.clone(),
                r.solver.clone(),
                r.runs.to_string(),
                short(Some(r.median_final_f)),
                r.median_iterations_to_threshold.map_or("-".into(), |v| format!("{}", v)),
                r.reached.to_string(),
                format!("{}", r.median_iterations),
                format!("{}", r.median_oracle_calls),
            ]
        })
        .collect();
    let mut width: Vec<usize> = COMPARE_HEADER.iter().map(|h| h.len()).collect();
    for row in &body {
        for (w, c) in width.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        "problem: {}   threshold: {}",
        problem,
        threshold.map_or("-".to_string(), |t| format!("{}", t))
    );
    let line = |cells: Vec<&str>| {
        cells
            .iter()
            .zip(&width)
            .map(|(c, w)| format!("{:<w$}", c, w = *w))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    out.push_str(&line(COMPARE_HEADER.to_vec()));
    out.push('\n');
    for row in &body {
        out.push_str(&line(row.iter().map(|s| s.as_str()).collect()));
        out.push('\n');
    }
    out
}
