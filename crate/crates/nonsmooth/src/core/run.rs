//! The outer loop shared by the iterative solvers: advance, log, test the
//! stopping rules.

use super::error::Result;
use super::oracle::FunctionOracle;
use super::rng::stream;
use super::trace::{Recorder, StopReason, StopRule};
use super::vector::Vector;
use crate::calculus::stationarity_residual;

/// What one iteration reports for the trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    /// Norm of the direction used (or another solver-specific residual).
    pub residual: f64,
    /// Step length parameter of this iteration.
    pub step: f64,
}

pub struct Monitor<'a> {
    /// f(x) for the trace; NaN when unknown.
    pub objective: &'a dyn Fn(&[f64]) -> f64,
    /// Constraint violation for the trace.
    pub violation: &'a dyn Fn(&[f64]) -> f64,
    /// Oracle for the sampled residual stopping test.
    pub residual_oracle: Option<&'a dyn FunctionOracle>,
}

pub struct LoopEnd {
    pub recorder: Recorder,
    pub reason: StopReason,
    pub iterations: usize,
}

/// Runs `step(t, x, rec)` for t = 0, 1, … where each call turns x_t into
/// x_{t+1}. Row k of the trace describes x_k for k = 1..K.
pub fn run_iterations(
    rule: &StopRule,
    seed: u64,
    x: &mut Vector,
    mon: &Monitor<'_>,
    mut step: impl FnMut(usize, &mut Vector, &mut Recorder) -> Result<StepReport>,
) -> Result<LoopEnd> {
    let mut rec = Recorder::new(rule);
    // Residual samples use their own stream so they never perturb a run.
    let mut res_rng = stream(seed, u64::MAX);
    for k in 1..=rule.max_iter {
        let rep = step(k - 1, x, &mut rec)?;
        let mut residual = rep.residual;
        let mut reason = None;
        if let (Some(rs), Some(o)) = (&rule.residual, mon.residual_oracle) {
            if k % rs.every.max(1) == 0 {
                residual = stationarity_residual(o, x, rs.delta, rs.samples, &mut res_rng);
                if residual <= rs.eps {
                    reason = Some(StopReason::ResidualBelow);
                }
            }
        }
        let want = rec.wants(k);
        let f = if want || rule.target_f.is_some() || rule.stall_window.is_some() {
            (mon.objective)(x)
        } else {
            f64::NAN
        };
        let reason = reason.or_else(|| rec.check(k, x, f));
        if want || reason.is_some() {
            let h = (mon.violation)(x);
            rec.log(k, f, residual, h, rep.step);
        }
        if let Some(reason) = reason {
            return Ok(LoopEnd {
                recorder: rec,
                reason,
                iterations: k,
            });
        }
    }
    Ok(LoopEnd {
        recorder: rec,
        reason: StopReason::MaxIter,
        iterations: rule.max_iter,
    })
}


#[cfg(test)]
impl LoopEnd {
    fn recorder_rows(&self) -> Vec<usize> {
        self.recorder.rows().iter().map(|r| r.k).collect()
    }
}
