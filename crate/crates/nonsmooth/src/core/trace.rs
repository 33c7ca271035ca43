//! Run traces and the bookkeeping shared by all iterative solvers.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::vector::{norm, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIter,
    TargetValue,
    ResidualBelow,
    Stalled,
    Diverged,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::MaxIter => "max_iter",
            StopReason::TargetValue => "target_value",
            StopReason::ResidualBelow => "residual_below",
            StopReason::Stalled => "stalled",
            StopReason::Diverged => "diverged",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    pub f: f64,
    pub residual: f64,
    pub h_violation: f64,
    pub step: f64,
    pub wall_ns: u64,
}

pub const CSV_HEADER: &str = "k,f,residual,h_violation,step,wall_ns";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub seed: u64,
    pub config: String,
    pub rows: Vec<TraceRow>,
    pub x_final: Vector,
    /// Averaged iterate, for methods that produce one.
    pub x_avg: Option<Vector>,
    pub stop_reason: StopReason,
    pub iterations: usize,
    pub oracle_calls: u64,
    /// Solver-specific scalars (event counters, multipliers, gaps).
    pub extras: BTreeMap<String, f64>,
}

impl RunTrace {
    pub fn final_f(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.f)
    }

    /// First logged iteration with f ≤ threshold.
    pub fn iterations_to(&self, threshold: f64) -> Option<usize> {
        self.rows.iter().find(|r| r.f <= threshold).map(|r| r.k)
    }

    pub fn extra(&self, key: &str) -> Option<f64> {
        self.extras.get(key).copied()
    }

    /// CSV with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(64 * (self.rows.len() + 1));
        s.push_str(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.k,
                fmt17(r.f),
                fmt17(r.residual),
                fmt17(r.h_violation),
                fmt17(r.step),
                r.wall_ns
            );
        }
        s
    }

    /// Parse the CSV produced by [`RunTrace::to_csv`] back into rows.
    pub fn rows_from_csv(text: &str) -> Option<Vec<TraceRow>> {
        let mut lines = text.lines();
        if lines.next()? != CSV_HEADER {
            return None;
        }
        lines
            .filter(|l| !l.is_empty())
            .map(|l| {
                let p: Vec<&str> = l.split(',').collect();
                if p.len() != 6 {
                    return None;
                }
                Some(TraceRow {
                    k: p[0].parse().ok()?,
                    f: p[1].parse().ok()?,
                    residual: p[2].parse().ok()?,
                    h_violation: p[3].parse().ok()?,
                    step: p[4].parse().ok()?,
                    wall_ns: p[5].parse().ok()?,
                })
            })
            .collect()
    }
}

pub fn fmt17(v: f64) -> String {
    if v.is_finite() {
        format!("{:.16e}", v)
    } else {
        format!("{}", v)
    }
}

/// Stopping rules shared by the iterative solvers. The book's methods run
/// indefinitely; a run ends on whichever rule fires first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StopRule {
    pub max_iter: usize,
    pub target_f: Option<f64>,
    /// Stop when the sampled stationarity residual at radius `delta` is ≤ `eps`.
    pub residual: Option<ResidualStop>,
    /// Stop when the best f has not improved over this many iterations.
    pub stall_window: Option<usize>,
    /// Abort when |x| exceeds this bound.
    pub divergence_bound: f64,
    /// Log every n-th iteration (the last one is always logged).
    pub log_every: usize,
    /// Record wall-clock time in traces. Off by default so traces are
    /// byte-reproducible.
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualStop {
    pub delta: f64,
    pub eps: f64,
    pub samples: usize,
    pub every: usize,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            max_iter: 1000,
            target_f: None,
            residual: None,
            stall_window: None,
            divergence_bound: 1e6,
            log_every: 1,
            timing: false,
        }
    }
}

impl StopRule {
    pub fn iterations(max_iter: usize) -> Self {
        StopRule {
            max_iter,
            ..Default::default()
        }
    }

    pub fn logging_every(mut self, n: usize) -> Self {
        self.log_every = n.max(1);
        self
    }
}

/// Accumulates rows and evaluates the stopping rules.
pub struct Recorder {
    rule: StopRule,
    rows: Vec<TraceRow>,
    start: Instant,
    best_f: f64,
    best_k: usize,
    pub extras: BTreeMap<String, f64>,
}

impl Recorder {
    pub fn new(rule: &StopRule) -> Self {
        Recorder {
            rule: rule.clone(),
            rows: Vec::new(),
            start: Instant::now(),
            best_f: f64::INFINITY,
            best_k: 0,
            extras: BTreeMap::new(),
        }
    }

    pub fn rule(&self) -> &StopRule {
        &self.rule
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn max_iter(&self) -> usize {
        self.rule.max_iter
    }

    /// Whether iteration k will be logged; lets solvers skip evaluating f.
    pub fn wants(&self, k: usize) -> bool {
        k % self.rule.log_every.max(1) == 0 || k + 1 >= self.rule.max_iter
    }

    pub fn log(&mut self, k: usize, f: f64, residual: f64, h_violation: f64, step: f64) {
        let wall_ns = if self.rule.timing {
            self.start.elapsed().as_nanos() as u64
        } else {
            0
        };
        self.rows.push(TraceRow {
            k,
            f,
            residual,
            h_violation,
            step,
            wall_ns,
        });
    }

    /// Stopping test after iteration k produced `x` with objective `f`
    /// (NaN when not evaluated this iteration).
    pub fn check(&mut self, k: usize, x: &[f64], f: f64) -> Option<StopReason> {
        if !x.iter().all(|v| v.is_finite()) || norm(x) > self.rule.divergence_bound {
            return Some(StopReason::Diverged);
        }
        if f.is_finite() {
            if let Some(t) = self.rule.target_f {
                if f <= t {
                    return Some(StopReason::TargetValue);
                }
            }
            if f < self.best_f - 1e-12 * (1.0 + self.best_f.abs().min(1e12)) {
                self.best_f = f;
                self.best_k = k;
            }
        }
        if let Some(w) = self.rule.stall_window {
            if k >= self.best_k + w {
                return Some(StopReason::Stalled);
            }
        }
        None
    }

    pub fn bump(&mut self, key: &str, by: f64) {
        *self.extras.entry(key.to_string()).or_insert(0.0) += by;
    }

    pub fn set(&mut self, key: &str, v: f64) {
        self.extras.insert(key.to_string(), v);
    }

    pub fn finish(
        self,
        seed: u64,
        config: String,
        x_final: Vector,
        x_avg: Option<Vector>,
        stop_reason: StopReason,
        iterations: usize,
        oracle_calls: u64,
    ) -> RunTrace {
        RunTrace {
            seed,
            config,
            rows: self.rows,
            x_final,
            x_avg,
            stop_reason,
            iterations,
            oracle_calls,
            extras: self.extras,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_keeps_bits() {
        let mut r = Recorder::new(&StopRule::iterations(3));
        r.log(0, 0.1 + 0.2, 1.0 / 3.0, 0.0, 1e-300, );
        r.log(1, f64::NAN, 2.0, 0.0, 0.5);
        let t = r.finish(1, String::new(), vec![0.0], None, StopReason::MaxIter, 2, 0);
        let rows = RunTrace::rows_from_csv(&t.to_csv()).unwrap();
        assert_eq!(rows[0].f.to_bits(), (0.1f64 + 0.2).to_bits());
        assert_eq!(rows[0].residual.to_bits(), (1.0f64 / 3.0).to_bits());
        assert!(rows[1].f.is_nan());
    }

    #[test]
    fn stop_rules_fire() {
        let rule = StopRule {
            max_iter: 100,
            target_f: Some(0.5),
            stall_window: Some(3),
            ..Default::default()
        };
        let mut r = Recorder::new(&rule);
        assert_eq!(r.check(0, &[0.0], 1.0), None);
        assert_eq!(r.check(1, &[0.0], 0.4), Some(StopReason::TargetValue));
        let mut r = Recorder::new(&rule);
        r.check(0, &[0.0], 1.0);
        r.check(1, &[0.0], 1.0);
        r.check(2, &[0.0], 1.0);
        assert_eq!(r.check(3, &[0.0], 1.0), Some(StopReason::Stalled));
        assert_eq!(r.check(0, &[f64::NAN], 1.0), Some(StopReason::Diverged));
    }
}
