//! The `nonsmooth` experiment runner.
//!
//! Commands: `run <config>`, `compare <configs…>`, `catalog`,
//! `validate <config>`. Exit codes: 0 on success, 1 on usage or runtime
//! errors, 2 when a schedule fails validation in strict mode (and for
//! `validate` whenever a condition fails). Seeds run in parallel on at most
//! `NONSMOOTH_WORKERS` threads.

pub mod config;
pub mod report;
pub mod runner;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use thiserror::Error;

pub use config::{load_config, parse_config, ConfigError, ExperimentConfig, ValidationMode};
pub use report::{cross_check, CompareRow, Summary};
pub use runner::{prepare, Prepared, SOLVERS};

use crate::core::error::OptError;
use report::{envelope_path, summary_path, trace_path, write_atomic, RunRow, ValidationSummary};

/// Environment variable capping the number of worker threads.
pub const WORKERS_ENV: &str = "NONSMOOTH_WORKERS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{path}: {err}")]
    Parse { path: String, err: ConfigError },
    #[error("{0}")]
    Opt(#[from] OptError),
    #[error("schedule validation failed\n{0}")]
    Validation(String),
    #[error("mismatched problems: {0}")]
    MismatchedProblems(String),
    #[error("{failed} of {total} runs failed; first: {first}")]
    RunsFailed { failed: usize, total: usize, first: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "nonsmooth", version, about = "Run nonsmooth optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment over its seeds.
    Run {
        config: PathBuf,
        /// Output directory (overrides `[run] output`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run several experiments on the same problem and tabulate them.
    Compare {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the table as CSV here instead of printing it.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// f level for the iterations-to-threshold column.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// List benchmark problems and solver names.
    Catalog,
    /// Check a config's schedule against its solver's conditions.
    Validate { config: PathBuf },
}

fn workers() -> Option<usize> {
    std::env::var(WORKERS_ENV).ok()?.trim().parse().ok().filter(|n| *n > 0)
}

fn output_dir(cfg: &ExperimentConfig, out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf)
        .or_else(|| cfg.run.output.clone())
        .unwrap_or_else(|| PathBuf::from("runs"))
}

fn validation_summary(p: &Prepared) -> Option<ValidationSummary> {
    let mode = p.config.run.validation;
    if mode == ValidationMode::Off {
        return None;
    }
    let r = p.validation()?;
    Some(ValidationSummary {
        condition_set: r.set.name().to_string(),
        mode: format!("{:?}", mode).to_lowercase(),
        passed: r.passed(),
        failed: r.failures().iter().map(|c| c.condition.to_string()).collect(),
        report: r.render(),
    })
}

/// Runs every seed of `cfg`, writes the trace files and the summary into
/// the output directory and returns the summary.
pub fn run_config(cfg: &ExperimentConfig, out: Option<&Path>, err: &mut dyn Write) -> Result<Summary, CliError> {
    let prepared = prepare(cfg)?;
    let validation = validation_summary(&prepared);
    if let Some(v) = &validation {
        if !v.passed {
            if cfg.run.validation == ValidationMode::Strict {
                return Err(CliError::Validation(v.report.clone()));
            }
            let _ = writeln!(err, "warning: schedule validation failed\n{}", v.report);
        }
    }
    let dir = output_dir(cfg, out);
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {}", dir.display(), e)))?;
    let label = cfg.label();
    let threshold = cfg.run.threshold;
    let seeds = cfg.seeds();
    if seeds.is_empty() {
        return Err(CliError::Usage("no seeds to run".into()));
    }
    let one = |seed: u64| -> Result<RunRow, String> {
        let (trace, envelope) = prepared.run_seed(seed).map_err(|e| format!("seed {}: {}", seed, e))?;
        let path = trace_path(&dir, &label, seed);
        write_atomic(&path, &trace.to_csv()).map_err(|e| format!("{}: {}", path.display(), e))?;
        if let Some(env) = envelope {
            let p = envelope_path(&dir, &label, seed);
            write_atomic(&p, &env).map_err(|e| format!("{}: {}", p.display(), e))?;
        }
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        Ok(RunRow::new(&trace, name, prepared.f_avg(&trace), threshold))
    };
    let results: Vec<Result<RunRow, String>> = match workers() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Io(e.to_string()))?
            .install(|| seeds.par_iter().map(|s| one(*s)).collect()),
        None => seeds.par_iter().map(|s| one(*s)).collect(),
    };
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => errors.push(e),
        }
    }
    let summary = Summary::new(
        label.clone(),
        prepared.problem.name.clone(),
        cfg.solver.name.clone(),
        threshold,
        validation,
        rows,
        errors,
    );
    let path = summary_path(&dir, &label);
    write_atomic(&path, &summary.to_toml()).map_err(|e| CliError::Io(format!("{}: {}", path.display(), e)))?;
    if let Some(first) = summary.errors.first() {
        return Err(CliError::RunsFailed {
            failed: summary.errors.len(),
            total: seeds.len(),
            first: first.clone(),
        });
    }
    Ok(summary)
}

fn cmd_run(path: &Path, out: Option<&Path>, stdout: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load_config(path)?;
    let s = run_config(&cfg, out, err)?;
    let dir = output_dir(&cfg, out);
    let _ = writeln!(
        stdout,
        "{}: {} on {}, {} runs, median f = {}, q10 = {}, q90 = {}",
        s.label, s.solver, s.problem, s.runs_ok, s.final_f.median, s.final_f.q10, s.final_f.q90
    );
    let _ = writeln!(stdout, "summary: {}", summary_path(&dir, &s.label).display());
    Ok(())
}

fn cmd_compare(
    paths: &[PathBuf],
    out: Option<&Path>,
    csv: Option<&Path>,
    threshold: Option<f64>,
    stdout: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    if paths.is_empty() {
        return Err(CliError::Usage("compare needs at least one config".into()));
    }
    let mut cfgs = Vec::with_capacity(paths.len());
    for p in paths {
        cfgs.push(load_config(p)?);
    }
    let first = &cfgs[0].problem;
    if let Some((i, _)) = cfgs.iter().enumerate().find(|(_, c)| &c.problem != first) {
        return Err(CliError::MismatchedProblems(format!(
            "{} and {} describe different problems",
            paths[0].display(),
            paths[i].display()
        )));
    }
    let mut seen = std::collections::BTreeSet::new();
    let mut rows = Vec::new();
    let mut problem = String::new();
    for (i, cfg) in cfgs.iter_mut().enumerate() {
        if threshold.is_some() {
            cfg.run.threshold = threshold;
        }
        if !seen.insert(cfg.label()) {
            cfg.run.label = Some(format!("{}_{}", cfg.label(), i));
            seen.insert(cfg.label());
        }
        let s = run_config(cfg, out, err)?;
        problem = s.problem.clone();
        rows.push(CompareRow::from_summary(&s));
    }
    let shown = threshold.or(cfgs[0].run.threshold);
    let _ = write!(stdout, "{}", report::compare_table(&problem, shown, &rows));
    let text = report::compare_csv(&rows);
    match csv {
        Some(p) => write_atomic(p, &text).map_err(|e| CliError::Io(format!("{}: {}", p.display(), e)))?,
        None => {
            let _ = write!(stdout, "\n{}", text);
        }
    }
    Ok(())
}

fn cmd_catalog(stdout: &mut dyn Write) {
    let _ = writeln!(stdout, "problems:");
    for (name, desc) in crate::problems::catalog() {
        let _ = writeln!(stdout, "  {:<18} {}", name, desc);
    }
    let _ = writeln!(stdout, "solvers:");
    for s in SOLVERS {
        let _ = writeln!(stdout, "  {}", s);
    }
}

fn cmd_validate(path: &Path, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load_config(path)?;
    let p = prepare(&cfg)?;
    match p.validation() {
        None => {
            let _ = writeln!(stdout, "solver {} has no schedule conditions", cfg.solver.name);
            Ok(())
        }
        Some(r) => {
            let _ = write!(stdout, "{}", r.render());
            if r.passed() {
                Ok(())
            } else {
                Err(CliError::Validation(
                    r.failures().iter().map(|c| c.condition).collect::<Vec<_>>().join(", "),
                ))
            }
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn execute<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(stdout, "{}", text)
            } else {
                write!(stderr, "{}", text)
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Run { config, out } => cmd_run(config, out.as_deref(), stdout, stderr),
        Command::Compare {
            configs,
            out,
            csv,
            threshold,
        } => cmd_compare(configs, out.as_deref(), csv.as_deref(), *threshold, stdout, stderr),
        Command::Catalog => {
            cmd_catalog(stdout);
            Ok(())
        }
        Command::Validate { config } => cmd_validate(config, stdout),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e);
            e.exit_code()
        }
    }
}
