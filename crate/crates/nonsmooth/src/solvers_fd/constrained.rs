//! Analytic-penalty descent and the Arrow–Hurwicz saddle-point method.

use serde::{Deserialize, Serialize};

use super::{mean_or_nan, shared_estimates, Estimator};
use crate::core::error::{check_dim, OptError, Result};
use crate::core::oracle::{Degenerate, FunctionOracle, StochasticOracle};
use crate::core::rng::RunRng;
use crate::core::run::{run_iterations, Monitor, StepReport};
use crate::core::sets::FeasibleSet;
use crate::core::trace::{RunTrace, StopRule};
use crate::core::vector::{dot, norm, Vector};
use crate::schedules::{Cesaro, Power, Schedule};
use crate::smoothing::Averager;

/// Closed-form solution of min ⟨z_f, d⟩ + ½‖d‖² subject to
/// ⟨z_h, d⟩ + h ≤ 0 (the constraint is present only when h ≥ 0).
/// Returns (u, d) with d = −z_f − u z_h. When h ≥ 0 and z_h = 0 the
/// multiplier is infinite; callers check ‖z_h‖ first.
pub fn analytic_direction(z_f: &[f64], z_h: &[f64], h: f64) -> (f64, Vector) {
    if h < 0.0 {
        return (0.0, z_f.iter().map(|v| -v).collect());
    }
    let u = ((h - dot(z_f, z_h)) / dot(z_h, z_h)).max(0.0);
    let d = z_f.iter().zip(z_h).map(|(a, b)| -a - u * b).collect();
    (u, d)
}

/// max(h⁺, ‖g_f + λ g_h‖, |λ h|) at the best λ ≥ 0 for the given gradients.
pub fn kkt_residual(g_f: &[f64], g_h: &[f64], h: f64) -> f64 {
    let gg = dot(g_h, g_h);
    let lambda = if gg > 0.0 { (-dot(g_f, g_h) / gg).max(0.0) } else { 0.0 };
    let r: Vector = g_f.iter().zip(g_h).map(|(a, b)| a + lambda * b).collect();
    norm(&r).max(h.max(0.0)).max((lambda * h).abs())
}

fn default_eps_div() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticPenaltyConfig {
    /// Uses ρ_k, α_k (and Δ_k) and the averaging weights a_k.
    pub schedule: Schedule,
    #[serde(default)]
    pub estimator: Estimator,
    /// Regularity floor for ‖z_h‖ while h(x_k) ≥ 0.
    #[serde(default = "default_eps_div")]
    pub eps_div: f64,
    #[serde(default)]
    pub stop: StopRule,
    #[serde(default)]
    pub seed: u64,
}

impl AnalyticPenaltyConfig {
    /// ρ = k⁻¹, a = k^{−2/3}, α = k^{−1/6}.
    pub fn new(max_iter: usize) -> Self {
        AnalyticPenaltyConfig {
            schedule: Schedule::steps(Power::new(1.0, 1.0))
                .with_alpha(Power::new(1.0, 1.0 / 6.0))
                .with_a(Power::new(1.0, 2.0 / 3.0)),
            estimator: Estimator::default(),
            eps_div: default_eps_div(),
            stop: StopRule::iterations(max_iter),
            seed: 0,
        }
    }
}

/// Shared by the deterministic method and its stochastic counterpart: z_f
/// averages estimates of f(·, θ_k), z_h estimates of the deterministic h.
/// Both averagers are updated first, then x ← x + ρ_k d_k.
pub(crate) fn analytic_core(
    f: &dyn StochasticOracle,
    h: &dyn FunctionOracle,
    x0: &[f64],
    cfg: &AnalyticPenaltyConfig,
) -> Result<RunTrace> {
    cfg.estimator.check(&cfg.schedule)?;
    check_dim(f.dim(), x0.len())?;
    check_dim(f.dim(), h.dim())?;
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut rng = RunRng::new(cfg.seed, 0);
    let mut zf = Averager::new(vec![0.0; n]);
    let mut zh = Averager::new(vec![0.0; n]);
    let hd = Degenerate(h);
    let cost = cfg.estimator.cost(n);
    let mut calls = 0u64;
    let objective = |x: &[f64]| mean_or_nan(f, x);
    let violation = |x: &[f64]| h.value(x).max(0.0);
    let mon = Monitor {
        objective: &objective,
        violation: &violation,
        residual_oracle: None,
    };
    let end = run_iterations(&cfg.stop, cfg.seed, &mut x, &mon, |t, x, rec| {
        let (alpha, delta, a) = (cfg.schedule.alpha(t), cfg.schedule.delta(t), cfg.schedule.a(t));
        let hf = cfg.estimator.sample(f, x, alpha, delta, &mut rng)?;
        let hh = cfg.estimator.apply(&hd, x, &[], alpha, delta, &mut rng.est)?;
        calls += 2 * cost + 1;
        zf.update(&hf, a);
        zh.update(&hh, a);
        let hx = h.value(x);
        if hx >= 0.0 && norm(&zh.z) <= cfg.eps_div {
            return Err(OptError::RegularityViolated(t));
        }
        let (u, d) = analytic_direction(&zf.z, &zh.z, hx);
        rec.set("u", u);
        let rho = cfg.schedule.rho(t);
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi += rho * di;
        }
        Ok(StepReport {
            residual: norm(&d),
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

/// x_{k+1} = x_k + ρ_k d_k with d_k from [`analytic_direction`] applied to
/// averaged FD estimates of f and h.
pub fn analytic_penalty_solve(
    f: &dyn FunctionOracle,
    h: &dyn FunctionOracle,
    x0: &[f64],
    cfg: &AnalyticPenaltyConfig,
) -> Result<RunTrace> {
    analytic_core(&Degenerate(f), h, x0, cfg)
}

fn default_u_max() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrowHurwiczConfig {
    pub schedule: Schedule,
    #[serde(default)]
    pub estimator: Estimator,
    /// X; must be bounded.
    pub set: FeasibleSet,
    /// U = [0, u_max]^m.
    #[serde(default = "default_u_max")]
    pub u_max: f64,
    #[serde(default)]
    pub stop: StopRule,
    #[serde(default)]
    pub seed: u64,
}

impl ArrowHurwiczConfig {
    /// ρ = k^{−0.6}, α = k^{−1/2}, so Σ ρ_k α_k < ∞.
    pub fn new(set: FeasibleSet, max_iter: usize) -> Self {
        ArrowHurwiczConfig {
            schedule: Schedule::steps(Power::new(1.0, 0.6)).with_alpha(Power::new(1.0, 0.5)),
            estimator: Estimator::default(),
            set,
            u_max: default_u_max(),
            stop: StopRule::iterations(max_iter),
            seed: 0,
        }
    }
}

/// Trace plus the Cesàro averages of the primal and dual iterates.
#[derive(Debug, Clone)]
pub struct SaddleResult {
    pub trace: RunTrace,
    pub x_hat: Vector,
    pub u_hat: Vector,
}

/// `fs[0]` is the objective, the rest are constraints f_i ≤ 0. One θ per
/// iteration (drawn through the objective) is shared by all components, as
/// is the estimator's sample point.
pub(crate) fn arrow_hurwicz_core(
    fs: &[&dyn StochasticOracle],
    x0: &[f64],
    cfg: &ArrowHurwiczConfig,
) -> Result<SaddleResult> {
    cfg.estimator.check(&cfg.schedule)?;
    if fs.is_empty() {
        return Err(OptError::Empty("objective"));
    }
    if !cfg.set.is_bounded() {
        return Err(OptError::UnboundedSet);
    }
    if !(cfg.u_max > 0.0) {
        return Err(OptError::InvalidParameter("u_max must be positive".into()));
    }
    let n = x0.len();
    check_dim(cfg.set.dim(), n)?;
    for f in fs {
        check_dim(n, f.dim())?;
    }
    let m = fs.len() - 1;
    let mut x = cfg.set.project(x0)?;
    let mut u = vec![0.0; m];
    let mut xc = Cesaro::new();
    let mut uc = Cesaro::new();
    let mut rng = RunRng::new(cfg.seed, 0);
    let cost = cfg.estimator.cost(n) * fs.len() as u64 + m as u64;
    let mut calls = 0u64;
    let objective = |x: &[f64]| mean_or_nan(fs[0], x);
    let violation = |x: &[f64]| {
        fs[1..]
            .iter()
            .map(|f| mean_or_nan(*f, x).max(0.0))
            .fold(0.0, f64::max)
    };
    let mon = Monitor {
        objective: &objective,
        violation: &violation,
        residual_oracle: None,
    };
    let end = run_iterations(&cfg.stop, cfg.seed, &mut x, &mon, |t, x, _| {
        let rho = cfg.schedule.rho(t);
        xc.update(x, rho);
        uc.update(&u, rho);
        let theta = fs[0].sample_theta(&mut rng.noise);
        let hs = shared_estimates(
            &cfg.estimator,
            fs,
            x,
            &theta,
            cfg.schedule.alpha(t),
            cfg.schedule.delta(t),
            &mut rng.est,
        )?;
        calls += cost;
        let mut dir = hs[0].clone();
        for (ui, hi) in u.iter().zip(&hs[1..]) {
            for (d, v) in dir.iter_mut().zip(hi) {
                *d += ui * v;
            }
        }
        for (i, f) in fs[1..].iter().enumerate() {
            let lu = f.value_at(x, &theta);
            u[i] = (u[i] + rho * lu).clamp(0.0, cfg.u_max);
        }
        let y: Vector = x.iter().zip(&dir).map(|(a, d)| a - rho * d).collect();
        *x = cfg.set.project(&y)?;
        Ok(StepReport {
            residual: norm(&dir),
            step: rho,
        })
    })?;
    let x_hat = xc.value().cloned().unwrap_or_else(|| x.clone());
    let u_hat = uc.value().cloned().unwrap_or_else(|| u.clone());
    let mut rec = end.recorder;
    for (i, v) in u_hat.iter().enumerate() {
        rec.set(&format!("u_hat_{i}"), *v);
    }
    let trace = rec.finish(
        cfg.seed,
        format!("{:?}", cfg),
        x,
        Some(x_hat.clone()),
        end.reason,
        end.iterations,
        calls,
    );
    Ok(SaddleResult { trace, x_hat, u_hat })
}

/// x ← π_X(x − ρ_k[H⁰ + Σ u_i Hⁱ]), u ← π_U(u + ρ_k (f_i(x_k))_i), with
/// Cesàro averages weighted by ρ_k.
pub fn arrow_hurwicz_solve(
    f0: &dyn FunctionOracle,
    fs: &[&dyn FunctionOracle],
    x0: &[f64],
    cfg: &ArrowHurwiczConfig,
) -> Result<SaddleResult> {
    let wrapped: Vec<Degenerate<&dyn FunctionOracle>> =
        std::iter::once(f0).chain(fs.iter().copied()).map(Degenerate).collect();
    let refs: Vec<&dyn StochasticOracle> = wrapped.iter().map(|d| d as &dyn StochasticOracle).collect();
    arrow_hurwicz_core(&refs, x0, cfg)
}
