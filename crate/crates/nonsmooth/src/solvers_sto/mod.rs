//! Stochastic solvers: quasi-gradient methods with averaging and momentum,
//! Kiefer–Wolfowitz type finite differences, the two-player game method and
//! the constrained stochastic methods.
//!
//! Every gradient or estimate consumes exactly one fresh scenario θ from the
//! run's `noise` stream.

pub mod constrained;

pub use constrained::{
    averaged_direction_solve, sto_arrow_hurwicz_solve, sto_conditional_gradient_solve,
    sto_constrained_lipschitz_solve, sto_feasible_directions_solve, sto_reduced_gradient_solve,
    AveragedDirectionConfig,
};

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::core::error::{check_dim, OptError, Result};
use crate::core::oracle::{FunctionOracle, StochasticOracle};
use crate::core::rng::{RunRng, SimRng};
use crate::core::run::{run_iterations, Monitor, StepReport};
use crate::core::trace::{RunTrace, StopRule};
use crate::core::vector::{norm, normalized, Vector};
use crate::schedules::{Cesaro, Power, Schedule};
use crate::smoothing::{fd_estimate_with, EstimatorConfig};
use crate::solvers_det::{ConstraintMode, Constraints, ReturnToStart, Returner};
use crate::solvers_fd::{fd_core, mean_or_nan, project_opt, Estimator, FdConfig};

/// Normalizing coefficients H_r of the averaged policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Normalizer {
    /// H_0 = h0, H_r = ‖P^{r−1}‖ + ν.
    PrevDirection {
        #[serde(default = "default_nu")]
        nu: f64,
        #[serde(default = "one")]
        h0: f64,
    },
    /// H_r = bound + ν while h(x_r) < 0, ‖g_h(x_r)‖ + ν otherwise, with
    /// `bound` ≥ ‖E g_f‖ on the region of interest.
    Bound {
        bound: f64,
        #[serde(default = "default_nu")]
        nu: f64,
    },
}

impl Default for Normalizer {
    fn default() -> Self {
        Normalizer::PrevDirection {
            nu: default_nu(),
            h0: 1.0,
        }
    }
}

fn default_nu() -> f64 {
    1e-6
}

fn one() -> f64 {
    1.0
}

fn default_window_exp() -> f64 {
    0.3
}

fn default_recovery() -> usize {
    50
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SqgPolicy {
    /// x ← x − ρ_k g^k, g optionally normalized.
    #[default]
    Plain,
    /// P^k = mean of g^r/H_r over r ∈ [r_k, k], r_k = k − min(k, ⌈k^β⌉).
    Averaged {
        #[serde(default = "default_window_exp")]
        window_exp: f64,
        #[serde(default)]
        normalizer: Normalizer,
    },
    /// P^k = (1 − γ_k) P^{k−1} + γ_k g^k.
    HeavyBall { gamma: Power },
    /// y^{k+1} = x^k − ρ_k g^k, x^{k+1} = y^{k+1} + λ_k (y^{k+1} − y^k);
    /// λ = 0 every `recovery_every` iterations (0 disables).
    Gully {
        lambda: Power,
        #[serde(default = "default_recovery")]
        recovery_every: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqgConfig {
    pub schedule: Schedule,
    #[serde(default)]
    pub policy: SqgPolicy,
    /// Divide each sampled gradient by its norm (plain, heavy ball, gully).
    #[serde(default)]
    pub normalize: bool,
    /// Report x̂ with τ_k = ρ_k / Σ_{r≤k} ρ_r.
    #[serde(default)]
    pub iterate_avg: bool,
    #[serde(default)]
    pub constraint: ConstraintMode,
    #[serde(default)]
    pub stop: StopRule,
    #[serde(default)]
    pub return_to_start: Option<ReturnToStart>,
    #[serde(default)]
    pub seed: u64,
    /// Check that each averaged direction is a convex combination of the
    /// window gradients; worst deviations go to the trace extras.
    #[serde(default)]
    pub audit: bool,
}

impl SqgConfig {
    pub fn new(schedule: Schedule, max_iter: usize) -> Self {
        SqgConfig {
            schedule,
            policy: SqgPolicy::Plain,
            normalize: false,
            iterate_avg: false,
            constraint: ConstraintMode::None,
            stop: StopRule::iterations(max_iter),
            return_to_start: None,
            seed: 0,
            audit: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.policy {
            SqgPolicy::Plain => {}
            SqgPolicy::Averaged {
                window_exp,
                normalizer,
            } => {
                if !(*window_exp >= 0.0 && *window_exp < 1.0) {
                    return Err(OptError::InvalidParameter("window_exp must lie in [0, 1)".into()));
                }
                let (nu, h) = match *normalizer {
                    Normalizer::PrevDirection { nu, h0 } => (nu, h0),
                    Normalizer::Bound { bound, nu } => (nu, bound + nu),
                };
                if !(nu > 0.0) || !(h > 0.0) {
                    return Err(OptError::InvalidParameter(
                        "normalizer needs ν > 0 and a positive H_0".into(),
                    ));
                }
            }
            SqgPolicy::HeavyBall { gamma } => {
                let g0 = gamma.at(0);
                if !(g0 > 0.0 && g0 <= 1.0) || gamma.exp < 0.0 {
                    return Err(OptError::InvalidParameter("heavy-ball γ_k must lie in (0, 1]".into()));
                }
            }
            SqgPolicy::Gully {
                lambda,
                recovery_every,
            } => {
                if lambda.at(0) < 0.0 || (*recovery_every == 0 && lambda.at(0) >= 1.0) {
                    return Err(OptError::InvalidParameter(
                        "gully multipliers need 0 ≤ λ_k < 1 unless recovery points are set".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// ⌈k^β⌉ capped at k: the number of older gradients kept in the window.
pub fn window_len(k: usize, beta: f64) -> usize {
    if k == 0 {
        return 0;
    }
    ((k as f64).powf(beta).ceil() as usize).min(k)
}

enum State {
    Plain,
    Window {
        /// (g^r, H_r) for r in the window.
        items: VecDeque<(Vector, f64)>,
        prev_p: Option<Vector>,
    },
    Momentum {
        p: Option<Vector>,
    },
    Gully {
        prev_x: Vector,
        prev_rho_g: Option<Vector>,
    },
}

impl State {
    fn new(policy: &SqgPolicy, x0: &[f64]) -> Self {
        match policy {
            SqgPolicy::Plain => State::Plain,
            SqgPolicy::Averaged { .. } => State::Window {
                items: VecDeque::new(),
                prev_p: None,
            },
            SqgPolicy::HeavyBall { .. } => State::Momentum { p: None },
            SqgPolicy::Gully { .. } => State::Gully {
                prev_x: x0.to_vec(),
                prev_rho_g: None,
            },
        }
    }

    fn reset(&mut self, x0: &[f64]) {
        match self {
            State::Plain => {}
            State::Window { items, prev_p } => {
                items.clear();
                *prev_p = None;
            }
            State::Momentum { p } => *p = None,
            State::Gully { prev_x, prev_rho_g } => {
                *prev_x = x0.to_vec();
                *prev_rho_g = None;
            }
        }
    }
}

struct HullAudit {
    min_coeff: f64,
    sum_err: f64,
    recon_err: f64,
}

/// P = Σ λ g_r/H_r with equal λ; the coefficients λ/H_r, rescaled to sum to
/// one, must rebuild P/s from the raw gradients.
fn audit_window(items: &VecDeque<(Vector, f64)>, p: &[f64], audit: &mut HullAudit) {
    let lam = 1.0 / items.len() as f64;
    let coeffs: Vec<f64> = items.iter().map(|(_, h)| lam / h).collect();
    let s: f64 = coeffs.iter().sum();
    let mut recon = vec![0.0; p.len()];
    let mut csum = 0.0;
    for ((g, _), c) in items.iter().zip(&coeffs) {
        let w = c / s;
        audit.min_coeff = audit.min_coeff.min(w);
        csum += w;
        for (r, gi) in recon.iter_mut().zip(g) {
            *r += w * gi;
        }
    }
    audit.sum_err = audit.sum_err.max((csum - 1.0).abs());
    let err = recon
        .iter()
        .zip(p)
        .map(|(r, pi)| (r - pi / s).abs())
        .fold(0.0, f64::max);
    audit.recon_err = audit.recon_err.max(err);
}

/// Stochastic quasi-gradient method. g^k = g(x_k, θ_k) with the switch
/// g_h when h(x_k) ≥ 0 for a single constraint. The residual column is ‖g^k‖
/// (‖P^k‖ for the averaged policy); the objective column is the closed-form
/// mean when the oracle has one.
pub fn sqg_solve(
    f: &dyn StochasticOracle,
    constraints: &[&dyn FunctionOracle],
    x0: &[f64],
    cfg: &SqgConfig,
) -> Result<RunTrace> {
    check_dim(f.dim(), x0.len())?;
    cfg.validate()?;
    let cons = Constraints::new(&cfg.constraint, constraints, f.dim())?;
    let mut x = cons.start(x0)?;
    let start = x.clone();
    let mut ret = Returner::new(cfg.return_to_start, &x)?;
    let mut state = State::new(&cfg.policy, &x);
    let mut noise = RunRng::new(cfg.seed, 0).noise;
    let mut avg = Cesaro::new();
    if cfg.iterate_avg {
        avg.update(&x, cfg.schedule.rho(0));
    }
    let mut audit = HullAudit {
        min_coeff: f64::INFINITY,
        sum_err: 0.0,
        recon_err: 0.0,
    };
    let mut calls = 0u64;
    let objective = |x: &[f64]| mean_or_nan(f, x);
    let violation = |x: &[f64]| cons.violation(x);
    let mon = Monitor {
        objective: &objective,
        violation: &violation,
        residual_oracle: None,
    };
    let single_h = matches!(cfg.constraint, ConstraintMode::SingleH);
    let end = run_iterations(&cfg.stop, cfg.seed, &mut x, &mon, |t, x, _| {
        let mut on_h = false;
        let mut sample = |y: &[f64]| {
            calls += 1;
            let theta = f.sample_theta(&mut noise);
            f.gradient_at(y, &theta)
        };
        let mut g = cons.select_switch(x, &mut |y| sample(y));
        if single_h {
            on_h = constraints[0].value(x) >= 0.0;
        }
        let gn = norm(&g);
        let rho = ret.scale * cfg.schedule.rho(t);
        let report = match (&mut state, &cfg.policy) {
            (State::Plain, _) => {
                if cfg.normalize {
                    g = normalized(&g);
                }
                for (xi, gi) in x.iter_mut().zip(&g) {
                    *xi -= rho * gi;
                }
                StepReport {
                    residual: gn,
                    step: rho,
                }
            }
            (
                State::Window { items, prev_p },
                SqgPolicy::Averaged {
                    window_exp,
                    normalizer,
                },
            ) => {
                let h = match *normalizer {
                    Normalizer::PrevDirection { nu, h0 } => prev_p.as_ref().map_or(h0, |p| norm(p) + nu),
                    Normalizer::Bound { bound, nu } => {
                        if on_h {
                            gn + nu
                        } else {
                            bound + nu
                        }
                    }
                };
                let keep = window_len(t, *window_exp) + 1;
                items.push_back((g, h));
                while items.len() > keep {
                    items.pop_front();
                }
                let lam = 1.0 / items.len() as f64;
                let mut p = vec![0.0; x.len()];
                for (gr, hr) in items.iter() {
                    for (pi, v) in p.iter_mut().zip(gr) {
                        *pi += lam * v / hr;
                    }
                }
                if cfg.audit {
                    audit_window(items, &p, &mut audit);
                }
                for (xi, pi) in x.iter_mut().zip(&p) {
                    *xi -= rho * pi;
                }
                let pn = norm(&p);
                *prev_p = Some(p);
                StepReport {
                    residual: pn,
                    step: rho,
                }
            }
            (State::Momentum { p }, SqgPolicy::HeavyBall { gamma }) => {
                if cfg.normalize {
                    g = normalized(&g);
                }
                let next = match p.take() {
                    None => g,
                    Some(prev) => {
                        let gk = gamma.at(t);
                        prev.iter().zip(&g).map(|(a, b)| (1.0 - gk) * a + gk * b).collect()
                    }
                };
                for (xi, pi) in x.iter_mut().zip(&next) {
                    *xi -= rho * pi;
                }
                *p = Some(next);
                StepReport {
                    residual: gn,
                    step: rho,
                }
            }
            (
                State::Gully { prev_x, prev_rho_g },
                SqgPolicy::Gully {
                    lambda,
                    recovery_every,
                },
            ) => {
                if cfg.normalize {
                    g = normalized(&g);
                }
                let lam = if *recovery_every > 0 && t % recovery_every == 0 {
                    0.0
                } else {
                    lambda.at(t)
                };
                let rho_g: Vector = g.iter().map(|v| rho * v).collect();
                let before = x.clone();
                if lam == 0.0 {
                    for (xi, gi) in x.iter_mut().zip(&g) {
                        *xi -= rho * gi;
                    }
                } else {
                    for i in 0..x.len() {
                        let mut v = x[i] - (1.0 + lam) * rho_g[i] + lam * (before[i] - prev_x[i]);
                        if let Some(pg) = prev_rho_g {
                            v += lam * pg[i];
                        }
                        x[i] = v;
                    }
                }
                *prev_x = before;
                *prev_rho_g = Some(rho_g);
                StepReport {
                    residual: gn,
                    step: rho,
                }
            }
            _ => unreachable!("state built from the policy"),
        };
        if ret.check(x) {
            state.reset(&start);
        }
        if cfg.iterate_avg {
            avg.update(x, cfg.schedule.rho(t + 1));
        }
        Ok(report)
    })?;
    let mut rec = end.recorder;
    rec.set("returns", ret.returns as f64);
    if cfg.audit {
        rec.set("hull_min_coeff", audit.min_coeff);
        rec.set("hull_sum_err", audit.sum_err);
        rec.set("hull_recon_err", audit.recon_err);
    }
    let x_avg = cfg.iterate_avg.then(|| avg.value().cloned()).flatten();
    Ok(rec.finish(
        cfg.seed,
        format!("{:?}", cfg),
        x,
        x_avg,
        end.reason,
        end.iterations,
        calls,
    ))
}

/// Kiefer–Wolfowitz type method x_{k+1} = π_X(x_k − ρ_k ξ(x_k, α_k)); each
/// estimate uses one scenario for all its evaluations.
pub fn kw_solve(oracle: &dyn StochasticOracle, x0: &[f64], cfg: &FdConfig) -> Result<RunTrace> {
    fd_core(oracle, x0, cfg)
}

/// A two-player game whose second player answers with an exact best response.
pub trait Game: Send + Sync {
    fn dim(&self) -> usize;
    fn sample_theta(&self, rng: &mut SimRng) -> Vector;
    /// Loss f(x, y, θ) of the first player.
    fn value(&self, x: &[f64], y: &[f64], theta: &[f64]) -> f64;
    fn best_response(&self, x: &[f64], theta: &[f64]) -> Result<Vector>;
    /// Expected loss F(x) = E f(x, y(x, θ), θ) when known.
    fn mean_loss(&self, _x: &[f64]) -> Option<f64> {
        None
    }
}

type GameValue = dyn Fn(&[f64], &[f64], &[f64]) -> f64 + Send + Sync;
type GameResponse = dyn Fn(&[f64], &[f64]) -> Result<Vector> + Send + Sync;
type GameSampler = dyn Fn(&mut SimRng) -> Vector + Send + Sync;

/// Game assembled from closures.
#[derive(Clone)]
pub struct FnGame {
    dim: usize,
    value: Arc<GameValue>,
    response: Arc<GameResponse>,
    sample: Arc<GameSampler>,
    mean: Option<Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>>,
}

impl FnGame {
    pub fn new(
        dim: usize,
        value: impl Fn(&[f64], &[f64], &[f64]) -> f64 + Send + Sync + 'static,
        response: impl Fn(&[f64], &[f64]) -> Result<Vector> + Send + Sync + 'static,
        sample: impl Fn(&mut SimRng) -> Vector + Send + Sync + 'static,
    ) -> Self {
        FnGame {
            dim,
            value: Arc::new(value),
            response: Arc::new(response),
            sample: Arc::new(sample),
            mean: None,
        }
    }

    pub fn with_mean(mut self, mean: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.mean = Some(Arc::new(mean));
        self
    }
}

impl Game for FnGame {
    fn dim(&self) -> usize {
        self.dim
    }
    fn sample_theta(&self, rng: &mut SimRng) -> Vector {
        (self.sample)(rng)
    }
    fn value(&self, x: &[f64], y: &[f64], theta: &[f64]) -> f64 {
        (self.value)(x, y, theta)
    }
    fn best_response(&self, x: &[f64], theta: &[f64]) -> Result<Vector> {
        (self.response)(x, theta)
    }
    fn mean_loss(&self, x: &[f64]) -> Option<f64> {
        self.mean.as_ref().map(|m| m(x))
    }
}

/// x_{k+1} = π_X(x_k − ρ_k η_k), η_k the finite-difference estimate of
/// f(·, y(x_k, θ_k), θ_k) at x_k. Needs an `Fd` estimator and window 1.
pub fn game_solve(game: &dyn Game, x0: &[f64], cfg: &FdConfig) -> Result<RunTrace> {
    cfg.validate()?;
    check_dim(game.dim(), x0.len())?;
    if cfg.window != 1 {
        return Err(OptError::InvalidParameter("the game method uses window 1".into()));
    }
    let Estimator::Fd {
        mode,
        p,
        normalize_random,
    } = cfg.estimator
    else {
        return Err(OptError::InvalidParameter(
            "the game method needs a finite-difference estimator".into(),
        ));
    };
    if let Some(s) = &cfg.set {
        check_dim(game.dim(), s.dim())?;
    }
    let mut x = x0.to_vec();
    project_opt(&cfg.set, &mut x)?;
    let mut rng = RunRng::new(cfg.seed, 0);
    let cost = cfg.estimator.cost(x.len());
    let mut calls = 0u64;
    let objective = |x: &[f64]| game.mean_loss(x).unwrap_or(f64::NAN);
    let violation = |x: &[f64]| cfg.set.as_ref().map_or(0.0, |s| s.violation(x));
    let mon = Monitor {
        objective: &objective,
        violation: &violation,
        residual_oracle: None,
    };
    let end = run_iterations(&cfg.stop, cfg.seed, &mut x, &mon, |t, x, _| {
        let theta = game.sample_theta(&mut rng.noise);
        let y = game
            .best_response(x, &theta)
            .map_err(|e| OptError::BestResponse(e.to_string()))?;
        let ecfg = EstimatorConfig {
            mode,
            alpha: cfg.schedule.alpha(t),
            delta: Some(cfg.schedule.delta(t)),
            p,
            normalize_random,
        };
        let eta = fd_estimate_with(&mut |z| game.value(z, &y, &theta), x, &ecfg, &mut rng.est)?;
        calls += cost;
        let rho = cfg.schedule.rho(t);
        for (xi, v) in x.iter_mut().zip(&eta) {
            *xi -= rho * v;
        }
        project_opt(&cfg.set, x)?;
        Ok(StepReport {
            residual: norm(&eta),
            step: rho,
        })
    })?;
    Ok(end.recorder.finish(
        cfg.seed,
        format!("{:?}", cfg),
        x,
        None,
        end.reason,
        end.iterations,
        calls,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::oracle::{CountedStochastic, Degenerate, FnOracle, FnStochastic};
    use crate::core::sets::FeasibleSet;
    use crate::problems::{max_abs_oracle, ravine_oracle, unit_circle_constraint, DemandLaw, Newsvendor};
    use crate::solvers_det::{averaged_gradient_solve, ggd_solve, AveragedConfig, AveragingPolicy, GgdConfig};
    use crate::solvers_fd::median;
    use rand::Rng;

    fn newsvendor() -> Newsvendor {
        Newsvendor::simple(1.0, 1.0, DemandLaw::uniform(0.0, 1.0)).unwrap()
    }

    fn same_run(a: &RunTrace, b: &RunTrace) {
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.x_final, b.x_final);
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.oracle_calls, b.oracle_calls);
    }

    #[test]
    fn plain_policy_on_a_degenerate_oracle_is_ggd() {
        let f = max_abs_oracle(4);
        let x0 = [0.9, -0.4, 0.3, 0.7];
        let sched = Schedule::steps(Power::new(1.0, 1.0));
        let mut g = GgdConfig::new(sched.clone(), 3000);
        g.normalize = true;
        g.seed = 5;
        let mut s = SqgConfig::new(sched, 3000);
        s.normalize = true;
        s.seed = 5;
        same_run(
            &ggd_solve(&f, &[], &x0, &g).unwrap(),
            &sqg_solve(&Degenerate(&f), &[], &x0, &s).unwrap(),
        );
    }

    #[test]
    fn plain_policy_matches_ggd_with_a_strict_constraint() {
        // h never lands in the |h| ≤ τ band on this path, so both switches agree
        let f = FnOracle::linear(vec![1.0, 0.0], 0.0);
        let h = unit_circle_constraint(2);
        let x0 = [0.5, 0.5];
        let sched = Schedule::steps(Power::new(0.5, 0.6));
        let mut g = GgdConfig::new(sched.clone(), 500);
        g.constraint = ConstraintMode::SingleH;
        let mut s = SqgConfig::new(sched, 500);
        s.constraint = ConstraintMode::SingleH;
        let a = ggd_solve(&f, &[&h], &x0, &g).unwrap();
        let b = sqg_solve(&Degenerate(&f), &[&h], &x0, &s).unwrap();
        same_run(&a, &b);
    }

    #[test]
    fn heavy_ball_and_gully_match_their_deterministic_versions() {
        let f = ravine_oracle(10.0);
        let sched = Schedule::steps(Power::constant(0.05));
        let policies = [
            (
                AveragingPolicy::HeavyBall {
                    gamma: Power::constant(0.3),
                },
                SqgPolicy::HeavyBall {
                    gamma: Power::constant(0.3),
                },
            ),
            (
                AveragingPolicy::Gully {
                    lambda: Power::constant(0.5),
                    recovery_every: 20,
                },
                SqgPolicy::Gully {
                    lambda: Power::constant(0.5),
                    recovery_every: 20,
                },
            ),
        ];
        for (dp, sp) in policies {
            let d = AveragedConfig::new(sched.clone(), dp, 400);
            let mut s = SqgConfig::new(sched.clone(), 400);
            s.policy = sp;
            same_run(
                &averaged_gradient_solve(&f, &[], &[1.0, 1.0], &d).unwrap(),
                &sqg_solve(&Degenerate(&f), &[], &[1.0, 1.0], &s).unwrap(),
            );
        }
    }

    #[test]
    fn heavy_ball_with_unit_gamma_is_plain() {
        let nv = newsvendor();
        let sched = Schedule::steps(Power::new(0.5, 0.7));
        let mut a = SqgConfig::new(sched.clone(), 2000);
        a.seed = 3;
        let mut b = a.clone();
        b.policy = SqgPolicy::HeavyBall {
            gamma: Power::constant(1.0),
        };
        same_run(
            &sqg_solve(&nv, &[], &[0.0], &a).unwrap(),
            &sqg_solve(&nv, &[], &[0.0], &b).unwrap(),
        );
    }

    #[test]
    fn newsvendor_with_iterate_averaging() {
        let nv = newsvendor();
        let errs: Vec<f64> = (0..20)
            .map(|seed| {
                let mut c = SqgConfig::new(Schedule::steps(Power::new(1.0, 0.7)), 100_000);
                c.iterate_avg = true;
                c.seed = seed;
                let tr = sqg_solve(&nv, &[], &[0.0], &c).unwrap();
                (tr.x_avg.unwrap()[0] - 0.5).abs()
            })
            .collect();
        assert!(median(&errs) <= 0.02, "{}", median(&errs));
    }

    #[test]
    fn averaged_policy_is_a_convex_combination() {
        let nv = newsvendor();
        let mut c = SqgConfig::new(Schedule::steps(Power::new(1.0, 0.7)), 5000);
        c.policy = SqgPolicy::Averaged {
            window_exp: 0.3,
            normalizer: Normalizer::default(),
        };
        c.audit = true;
        c.seed = 11;
        let tr = sqg_solve(&nv, &[], &[0.0], &c).unwrap();
        assert!(tr.extra("hull_recon_err").unwrap() <= 1e-9);
        assert!(tr.extra("hull_sum_err").unwrap() <= 1e-9);
        assert!(tr.extra("hull_min_coeff").unwrap() >= 0.0);
    }

    #[test]
    fn averaged_policy_with_a_bound_normalizer_converges() {
        let nv = newsvendor();
        let mut c = SqgConfig::new(Schedule::steps(Power::new(1.0, 0.7)), 20_000);
        c.policy = SqgPolicy::Averaged {
            window_exp: 0.3,
            normalizer: Normalizer::Bound { bound: 1.0, nu: 1e-6 },
        };
        c.iterate_avg = true;
        c.seed = 11;
        let tr = sqg_solve(&nv, &[], &[0.0], &c).unwrap();
        assert!((tr.x_avg.unwrap()[0] - 0.5).abs() < 0.05);
    }

    #[test]
    fn window_lengths() {
        assert_eq!(window_len(0, 0.3), 0);
        assert_eq!(window_len(1, 0.3), 1);
        assert_eq!(window_len(2, 0.3), 2);
        assert_eq!(window_len(100_000, 0.3), 32);
    }

    #[test]
    fn runs_are_reproducible_and_draw_once_per_gradient() {
        let nv = CountedStochastic::new(newsvendor());
        let mut c = SqgConfig::new(Schedule::steps(Power::new(1.0, 0.7)), 1000);
        c.seed = 9;
        let a = sqg_solve(&nv, &[], &[0.0], &c).unwrap();
        assert_eq!(nv.draws(), a.oracle_calls);
        assert_eq!(nv.evaluations(), a.oracle_calls);
        let b = sqg_solve(&newsvendor(), &[], &[0.0], &c).unwrap();
        assert_eq!(a, b);
        c.seed = 10;
        assert_ne!(sqg_solve(&newsvendor(), &[], &[0.0], &c).unwrap().x_final, a.x_final);
    }

    #[test]
    fn bad_policies_are_rejected() {
        let mut c = SqgConfig::new(Schedule::steps(Power::new(1.0, 0.7)), 10);
        c.policy = SqgPolicy::HeavyBall {
            gamma: Power::constant(0.0),
        };
        assert!(c.validate().is_err());
        c.policy = SqgPolicy::Averaged {
            window_exp: 0.3,
            normalizer: Normalizer::PrevDirection { nu: 0.0, h0: 1.0 },
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn kw_on_a_linear_function_is_projected_gradient() {
        let f = FnOracle::linear(vec![1.0, -2.0], 0.0);
        let mut c = FdConfig::new(
            Schedule::steps(Power::new(0.1, 0.0)).with_alpha(Power::new(1.0, 1.0 / 3.0)),
            30,
        );
        c.set = Some(FeasibleSet::unit_box(2, 0.0, 1.0));
        let tr = kw_solve(&Degenerate(&f), &[0.5, 0.5], &c).unwrap();
        assert!((tr.x_final[0]).abs() < 1e-12 && (tr.x_final[1] - 1.0).abs() < 1e-12);
        let r = &tr.rows[0];
        assert!((r.residual - 5f64.sqrt()).abs() < 1e-12);
    }

    fn kw_median_err(n: usize) -> Vec<f64> {
        let laws = vec![DemandLaw::uniform(0.0, 1.0); n];
        let nv = Newsvendor::new(vec![1.0; n], vec![1.0; n], laws, None).unwrap();
        let mut per = vec![Vec::new(); n];
        for seed in 0..20 {
            let mut c = FdConfig::new(
                Schedule::steps(Power::new(1.0, 1.0)).with_alpha(Power::new(1.0, 1.0 / 3.0)),
                100_000,
            );
            c.seed = seed;
            let tr = kw_solve(&nv, &vec![0.0; n], &c).unwrap();
            for (i, v) in tr.x_final.iter().enumerate() {
                per[i].push((v - 0.5).abs());
            }
        }
        per.iter().map(|v| median(v)).collect()
    }

    #[test]
    fn kw_newsvendor_median() {
        for m in kw_median_err(1).into_iter().chain(kw_median_err(2)) {
            assert!(m <= 0.05, "{m}");
        }
    }

    #[test]
    fn kw_draws_one_scenario_per_estimate() {
        let nv = CountedStochastic::new(newsvendor());
        let mut c = FdConfig::new(
            Schedule::steps(Power::new(1.0, 1.0)).with_alpha(Power::new(1.0, 1.0 / 3.0)),
            500,
        );
        c.estimator = Estimator::forward();
        let tr = kw_solve(&nv, &[0.0], &c).unwrap();
        assert_eq!(nv.draws(), 500);
        assert_eq!(nv.evaluations(), tr.oracle_calls);
    }

    fn sign_game(sampler: impl Fn(&mut SimRng) -> Vector + Send + Sync + 'static) -> FnGame {
        FnGame::new(
            1,
            |x, y, th| (x[0] - th[0]) * y[0],
            |x, th| Ok(vec![if x[0] >= th[0] { 1.0 } else { -1.0 }]),
            sampler,
        )
    }

    fn game_cfg(seed: u64) -> FdConfig {
        let mut c = FdConfig::new(
            Schedule::steps(Power::new(1.0, 1.0)).with_alpha(Power::new(1.0, 1.0 / 3.0)),
            100_000,
        );
        c.set = Some(FeasibleSet::interval(-1.0, 1.0));
        c.seed = seed;
        c
    }

    #[test]
    fn sign_game_reaches_the_median() {
        let g = sign_game(|r| vec![r.gen::<f64>()]);
        let errs: Vec<f64> = (0..20)
            .map(|s| (game_solve(&g, &[-1.0], &game_cfg(s)).unwrap().x_final[0] - 0.5).abs())
            .collect();
        assert!(median(&errs) <= 0.05);
        let g = sign_game(|_| vec![0.3]);
        let tr = game_solve(&g, &[-1.0], &game_cfg(0)).unwrap();
        assert!((tr.x_final[0] - 0.3).abs() <= 0.05);
    }

    #[test]
    fn singleton_response_is_kw() {
        let g = FnGame::new(
            1,
            |x, y, th| (x[0] - th[0]).abs() + y[0] * x[0],
            |_, _| Ok(vec![0.25]),
            |r| vec![r.gen::<f64>()],
        )
        .with_mean(|x| x[0]);
        let o = FnStochastic::new(
            1,
            |r| vec![r.gen::<f64>()],
            |x, th| (x[0] - th[0]).abs() + 0.25 * x[0],
            |_, _| unreachable!(),
        )
        .with_mean(|x| x[0]);
        let mut c = game_cfg(4);
        c.stop = StopRule::iterations(2000);
        let a = game_solve(&g, &[0.0], &c).unwrap();
        let b = kw_solve(&o, &[0.0], &c).unwrap();
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.x_final, b.x_final);
    }

    #[test]
    fn failing_best_response_is_reported() {
        let g = FnGame::new(
            1,
            |_, _, _| 0.0,
            |_, _| Err(OptError::InvalidParameter("no answer".into())),
            |_| Vec::new(),
        );
        match game_solve(&g, &[0.0], &game_cfg(0)) {
            Err(OptError::BestResponse(m)) => assert!(m.contains("no answer")),
            other => panic!("{other:?}"),
        }
        let mut c = game_cfg(0);
        c.estimator = Estimator::Exact;
        assert!(game_solve(&sign_game(|_| vec![0.0]), &[0.0], &c).is_err());
    }
}
