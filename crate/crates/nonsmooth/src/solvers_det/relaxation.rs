//! Relaxation algorithms A1–A3: at each point, collect pseudogradients at
//! trial points on a sphere of radius δ_i until a descent direction is found
//! or the hull of the collected gradients certifies approximate
//! stationarity, in which case (ε_i, δ_i) shrink.

use serde::{Deserialize, Serialize};

use crate::core::error::{check_dim, OptError, Result};
use crate::core::oracle::FunctionOracle;
use crate::core::trace::{Recorder, RunTrace, StopReason, StopRule};
use crate::core::vector::{dot, norm, normalized, unit, Vector};
use crate::schedules::{DirectionRule, DirectionState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Raw pseudogradients.
    A1,
    /// Normalized pseudogradients in the direction rule and descent tests.
    A2,
    /// Tests ⟨g, l⟩ < ‖l‖²/2 and f(y) > f(x) − δ‖l‖/4 (rules L2, L3).
    A3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationConfig {
    pub variant: Variant,
    pub rule: DirectionRule,
    pub eps: f64,
    pub delta: f64,
    /// Λ ≥ ε, the largest ε_i.
    pub eps_max: f64,
    /// Δ ≥ δ, the largest trial radius.
    pub delta_max: f64,
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
    /// Value-and-gradient evaluations allowed before giving up.
    pub budget: u64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_log_every")]
    pub log_every: usize,
}

fn default_max_iter() -> usize {
    1_000_000
}

fn default_log_every() -> usize {
    1
}

impl RelaxationConfig {
    pub fn new(variant: Variant, rule: DirectionRule, eps: f64, delta: f64) -> Self {
        RelaxationConfig {
            variant,
            rule,
            eps,
            delta,
            eps_max: 1.0_f64.max(eps),
            delta_max: 1.0_f64.max(delta),
            alpha: 0.5,
            beta: 0.5,
            theta: 0.5,
            budget: 100_000,
            max_iter: default_max_iter(),
            log_every: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v < 1.0;
        if !(unit(self.alpha) && unit(self.beta) && unit(self.theta)) {
            return Err(OptError::InvalidParameter("α, β, θ must lie in (0, 1)".into()));
        }
        if !(self.eps > 0.0 && self.delta > 0.0) {
            return Err(OptError::InvalidParameter("ε and δ must be positive".into()));
        }
        if self.eps_max < self.eps || self.delta_max < self.delta {
            return Err(OptError::InvalidParameter("need Λ ≥ ε and Δ ≥ δ".into()));
        }
        if self.variant == Variant::A3 && !matches!(self.rule, DirectionRule::L2 | DirectionRule::L3) {
            return Err(OptError::InvalidParameter("A3 works with rules L2 and L3".into()));
        }
        if !matches!(self.rule, DirectionRule::L1 | DirectionRule::L2 | DirectionRule::L3) {
            return Err(OptError::InvalidParameter("relaxation rules are L1, L2, L3".into()));
        }
        Ok(())
    }
}

/// Runs the relaxation algorithm. Row k of the trace is x_k after k descent
/// steps; the residual column is ‖l‖ of the accepted direction and the step
/// column the trial radius δ_i. Extras: `step8_events`, `shrinks`.
pub fn relaxation_solve(f: &dyn FunctionOracle, x0: &[f64], cfg: &RelaxationConfig) -> Result<RunTrace> {
    check_dim(f.dim(), x0.len())?;
    cfg.validate()?;
    let rule = StopRule::iterations(cfg.max_iter).logging_every(cfg.log_every);
    let mut rec = Recorder::new(&rule);
    let mut calls = 0u64;
    let mut x = x0.to_vec();
    let mut fx = f.value(&x);
    calls += 1;
    let mut step8 = 0u64;
    let mut shrinks = 0u64;
    let mut eps_i = cfg.eps_max;
    let mut delta_i = cfg.delta_max;
    let mut last_l: Option<Vector> = None;
    let mut dir = DirectionState::new(cfg.rule);
    let normalize = cfg.variant == Variant::A2;
    let mut k = 0usize;

    let finish = |rec: Recorder, x: Vector, reason, k, calls, step8, shrinks| {
        let mut rec = rec;
        rec.set("step8_events", step8 as f64);
        rec.set("shrinks", shrinks as f64);
        rec.finish(0, format!("{:?}", cfg), x, None, reason, k, calls)
    };

    loop {
        // Step 2: first trial point along an initial direction.
        dir.restart();
        let l0 = match &last_l {
            Some(l) if norm(l) > 0.0 => l.clone(),
            _ => {
                let g = f.gradient(&x);
                calls += 1;
                if norm(&g) > 0.0 {
                    g
                } else {
                    unit(x.len(), 0)
                }
            }
        };
        let y = trial(&x, &l0, delta_i);
        let mut g = f.value_grad(&y).1;
        calls += 1;
        let mut moved = false;
        loop {
            if calls > cfg.budget {
                return Err(OptError::BudgetExhausted(calls));
            }
            // Step 3.
            let gi = if normalize { normalized(&g) } else { g.clone() };
            let l = dir.update(&gi, 1.0);
            let ln = norm(&l);
            // Step 4.
            if ln <= cfg.eps && delta_i <= cfg.delta {
                if rec.wants(k) || k == 0 {
                    rec.log(k, fx, ln, 0.0, delta_i);
                }
                return Ok(finish(rec, x, StopReason::ResidualBelow, k, calls, step8, shrinks));
            }
            // Step 5.
            if ln <= eps_i {
                eps_i *= cfg.alpha;
                delta_i *= cfg.beta;
                shrinks += 1;
                last_l = Some(l);
                break;
            }
            // Step 6.
            let y = trial(&x, &l, delta_i);
            let (fy, gy) = f.value_grad(&y);
            g = gy;
            calls += 1;
            // Step 7.
            let keep_collecting = match cfg.variant {
                Variant::A1 => dot(&g, &l) < cfg.theta * eps_i * eps_i / 2.0,
                Variant::A2 => dot(&normalized(&g), &l) < cfg.theta * eps_i * eps_i / 2.0,
                Variant::A3 => dot(&g, &l) < ln * ln / 2.0,
            };
            if keep_collecting {
                continue;
            }
            // Step 8.
            let threshold = match cfg.variant {
                Variant::A1 => cfg.theta * delta_i * eps_i * eps_i / (4.0 * ln),
                Variant::A2 => cfg.theta * delta_i * eps_i * eps_i * norm(&g) / (4.0 * ln),
                Variant::A3 => delta_i * ln / 4.0,
            };
            if fy > fx - threshold {
                step8 += 1;
                delta_i *= cfg.beta;
                last_l = Some(l);
                break;
            }
            // Step 9.
            x = y;
            fx = fy;
            k += 1;
            if rec.wants(k) {
                rec.log(k, fx, ln, 0.0, delta_i);
            }
            last_l = Some(l);
            moved = true;
            break;
        }
        if moved {
            if k >= cfg.max_iter {
                return Ok(finish(rec, x, StopReason::MaxIter, k, calls, step8, shrinks));
            }
            // Step 1: restart one level above the last one, within [ε, Λ] × [δ, Δ].
            eps_i = (eps_i / cfg.alpha).clamp(cfg.eps, cfg.eps_max);
            delta_i = (delta_i / cfg.beta).clamp(cfg.delta, cfg.delta_max);
        }
    }
}

fn trial(x: &[f64], l: &[f64], delta: f64) -> Vector {
    let n = norm(l);
    x.iter().zip(l).map(|(a, b)| a - delta * b / n).collect()
}
