//! Gradient-free solvers driven by smoothed finite-difference estimates:
//! the plain and window-averaged FD method, minimax, exact penalties, the
//! analytic-penalty and Arrow–Hurwicz methods, the linearization family and
//! the 1-D lower-envelope method.
//!
//! Most methods here are written once against [`StochasticOracle`]; the
//! deterministic entry points wrap their oracle in [`Degenerate`], which is
//! why the stochastic solvers reproduce them exactly on noise-free input.

pub mod constrained;
pub mod linearized;
pub mod piyavskii;

pub use constrained::{
    analytic_direction, analytic_penalty_solve, arrow_hurwicz_solve, AnalyticPenaltyConfig,
    ArrowHurwiczConfig, SaddleResult,
};
pub use linearized::{
    conditional_gradient_solve, feasible_directions_solve, reduced_gradient_direction,
    reduced_gradient_solve, CgConfig, FeasibleDirectionsConfig, ReducedDirection,
    ReducedGradientConfig,
};
pub use piyavskii::{piyavskii_solve, EnvelopeMode, PiyavskiiConfig, PiyavskiiResult};

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::core::error::{check_dim, OptError, Result};
use crate::core::oracle::{Degenerate, FunctionOracle, StochasticOracle};
use crate::core::rng::{RunRng, SimRng};
use crate::core::run::{run_iterations, Monitor, StepReport};
use crate::core::sets::FeasibleSet;
use crate::core::trace::{RunTrace, StopRule};
use crate::core::vector::{norm, Vector};
use crate::schedules::Schedule;
use crate::smoothing::{cube_point, fd_estimate_with, EstimatorConfig, EstimatorMode};

fn one_usize() -> usize {
    1
}

fn yes() -> bool {
    true
}

/// Where a solver's gradient information comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Estimator {
    /// Pseudogradient (or sample gradient) at x itself.
    Exact,
    /// Pseudogradient at a uniform point of the α_k-cube around x.
    Cube,
    /// Finite-difference estimate with the schedule's α_k and Δ_k.
    Fd {
        mode: EstimatorMode,
        #[serde(default = "one_usize")]
        p: usize,
        #[serde(default = "yes")]
        normalize_random: bool,
    },
}

impl Default for Estimator {
    fn default() -> Self {
        Estimator::central()
    }
}

impl Estimator {
    pub fn central() -> Self {
        Estimator::Fd {
            mode: EstimatorMode::Central,
            p: 1,
            normalize_random: true,
        }
    }

    pub fn forward() -> Self {
        Estimator::Fd {
            mode: EstimatorMode::Forward,
            p: 1,
            normalize_random: true,
        }
    }

    pub fn random_dirs(p: usize) -> Self {
        Estimator::Fd {
            mode: EstimatorMode::RandomDirs,
            p,
            normalize_random: true,
        }
    }

    /// Whether the schedule must supply α_k.
    pub fn needs_alpha(&self) -> bool {
        !matches!(self, Estimator::Exact)
    }

    /// Oracle evaluations charged to one estimate in dimension n.
    pub fn cost(&self, n: usize) -> u64 {
        match self {
            Estimator::Exact | Estimator::Cube => 1,
            Estimator::Fd { mode, p, .. } => {
                let mut c = EstimatorConfig::central(1.0);
                c.mode = *mode;
                c.p = *p;
                c.evaluations(n) as u64
            }
        }
    }

    /// One estimate at x for a fixed scenario θ; sample points come from `est`.
    pub fn apply(
        &self,
        oracle: &dyn StochasticOracle,
        x: &[f64],
        theta: &[f64],
        alpha: f64,
        delta: f64,
        est: &mut SimRng,
    ) -> Result<Vector> {
        match *self {
            Estimator::Exact => Ok(oracle.gradient_at(x, theta)),
            Estimator::Cube => Ok(oracle.gradient_at(&cube_point(x, alpha, est), theta)),
            Estimator::Fd {
                mode,
                p,
                normalize_random,
            } => {
                let cfg = EstimatorConfig {
                    mode,
                    alpha,
                    delta: Some(delta),
                    p,
                    normalize_random,
                };
                fd_estimate_with(&mut |y| oracle.value_at(y, theta), x, &cfg, est)
            }
        }
    }

    /// Draws θ from `noise`, then estimates with `est`.
    pub fn sample(
        &self,
        oracle: &dyn StochasticOracle,
        x: &[f64],
        alpha: f64,
        delta: f64,
        rng: &mut RunRng,
    ) -> Result<Vector> {
        let theta = oracle.sample_theta(&mut rng.noise);
        self.apply(oracle, x, &theta, alpha, delta, &mut rng.est)
    }

    pub(crate) fn check(&self, schedule: &Schedule) -> Result<()> {
        if self.needs_alpha() && schedule.alpha.is_none() {
            return Err(OptError::InvalidParameter(
                "this estimator needs an alpha schedule".into(),
            ));
        }
        if let Estimator::Fd { p: 0, .. } = self {
            return Err(OptError::InvalidParameter("p must be at least 1".into()));
        }
        Ok(())
    }
}

/// Estimates of several functions at one point sharing θ and the sample
/// point (common random numbers): each estimate starts from the same copy of
/// `est`, which then continues from the last one.
pub(crate) fn shared_estimates(
    est_kind: &Estimator,
    oracles: &[&dyn StochasticOracle],
    x: &[f64],
    theta: &[f64],
    alpha: f64,
    delta: f64,
    est: &mut SimRng,
) -> Result<Vec<Vector>> {
    let base = est.clone();
    let mut out = Vec::with_capacity(oracles.len());
    for o in oracles {
        let mut r = base.clone();
        out.push(est_kind.apply(*o, x, theta, alpha, delta, &mut r)?);
        *est = r;
    }
    Ok(out)
}

pub(crate) fn project_opt(set: &Option<FeasibleSet>, x: &mut Vector) -> Result<()> {
    if let Some(s) = set {
        *x = s.project(x)?;
    }
    Ok(())
}

pub(crate) fn mean_or_nan(o: &dyn StochasticOracle, x: &[f64]) -> f64 {
    o.mean_value(x).unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdConfig {
    pub schedule: Schedule,
    #[serde(default)]
    pub estimator: Estimator,
    /// Projection target; free space when absent.
    #[serde(default)]
    pub set: Option<FeasibleSet>,
    /// Number of most recent estimates summed into the direction.
    #[serde(default = "one_usize")]
    pub window: usize,
    #[serde(default)]
    pub stop: StopRule,
    #[serde(default)]
    pub seed: u64,
}

impl FdConfig {
    pub fn new(schedule: Schedule, max_iter: usize) -> Self {
        FdConfig {
            schedule,
            estimator: Estimator::default(),
            set: None,
            window: 1,
            stop: StopRule::iterations(max_iter),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.estimator.check(&self.schedule)?;
        if self.window == 0 {
            return Err(OptError::InvalidParameter("window must be at least 1".into()));
        }
        Ok(())
    }
}

/// Shared loop of [`fd_solve`] and the stochastic Kiefer–Wolfowitz method:
/// x ← π(x − ρ_k Σ_{last M} H).
pub(crate) fn fd_core(oracle: &dyn StochasticOracle, x0: &[f64], cfg: &FdConfig) -> Result<RunTrace> {
    cfg.validate()?;
    check_dim(oracle.dim(), x0.len())?;
    if let Some(s) = &cfg.set {
        check_dim(oracle.dim(), s.dim())?;
    }
    let mut x = x0.to_vec();
    project_opt(&cfg.set, &mut x)?;
    let mut rng = RunRng::new(cfg.seed, 0);
    let mut window: VecDeque<Vector> = VecDeque::with_capacity(cfg.window);
    let cost = cfg.estimator.cost(x.len());
    let mut calls = 0u64;
    let objective = |x: &[f64]| mean_or_nan(oracle, x);
    let violation = |x: &[f64]| cfg.set.as_ref().map_or(0.0, |s| s.violation(x));
    let mon = Monitor {
        objective: &objective,
        violation: &violation,
        residual_oracle: None,
    };
    let end = run_iterations(&cfg.stop, cfg.seed, &mut x, &mon, |t, x, _| {
        let h = cfg.estimator.sample(
            oracle,
            x,
            cfg.schedule.alpha(t),
            cfg.schedule.delta(t),
            &mut rng,
        )?;
        calls += cost;
        let hn = norm(&h);
        if window.len() == cfg.window {
            window.pop_front();
        }
        window.push_back(h);
        let rho = cfg.schedule.rho(t);
        for hv in &window {
            for (xi, v) in x.iter_mut().zip(hv) {
                *xi -= rho * v;
            }
        }
        project_opt(&cfg.set, x)?;
        Ok(StepReport {
            residual: hn,
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

/// x_{k+1} = π_X(x_k − ρ_k Σ_{t=r_k}^{k} H(x_t, α_t)) with k − r_k < M;
/// M = 1 is the plain finite-difference method.
pub fn fd_solve(f: &dyn FunctionOracle, x0: &[f64], cfg: &FdConfig) -> Result<RunTrace> {
    fd_core(&Degenerate(f), x0, cfg)
}

/// Projected FD steps on the function attaining max_i f_i(x_k), lowest index
/// on ties.
pub fn fd_minimax_solve(fs: &[&dyn FunctionOracle], x0: &[f64], cfg: &FdConfig) -> Result<RunTrace> {
    cfg.validate()?;
    if cfg.window != 1 {
        return Err(OptError::InvalidParameter("minimax uses window 1".into()));
    }
    if fs.is_empty() {
        return Err(OptError::Empty("minimax pieces"));
    }
    for f in fs {
        check_dim(x0.len(), f.dim())?;
    }
    let mut x = x0.to_vec();
    project_opt(&cfg.set, &mut x)?;
    let mut est = RunRng::new(cfg.seed, 0).est;
    let cost = cfg.estimator.cost(x.len());
    let mut calls = 0u64;
    let fmax = |x: &[f64]| fs.iter().map(|f| f.value(x)).fold(f64::NEG_INFINITY, f64::max);
    let violation = |x: &[f64]| cfg.set.as_ref().map_or(0.0, |s| s.violation(x));
    let mon = Monitor {
        objective: &fmax,
        violation: &violation,
        residual_oracle: None,
    };
    let end = run_iterations(&cfg.stop, cfg.seed, &mut x, &mon, |t, x, rec| {
        let mut j = 0;
        let mut best = f64::NEG_INFINITY;
        for (i, f) in fs.iter().enumerate() {
            let v = f.value(x);
            if v > best {
                best = v;
                j = i;
            }
        }
        calls += fs.len() as u64;
        let h = cfg.estimator.apply(
            &Degenerate(fs[j]),
            x,
            &[],
            cfg.schedule.alpha(t),
            cfg.schedule.delta(t),
            &mut est,
        )?;
        calls += cost;
        rec.set("active", j as f64);
        let rho = cfg.schedule.rho(t);
        for (xi, v) in x.iter_mut().zip(&h) {
            *xi -= rho * v;
        }
        project_opt(&cfg.set, x)?;
        Ok(StepReport {
            residual: norm(&h),
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

/// Φ(x) = f₀(x) + Σ r_i max(0, f_i(x)).
pub fn exact_penalty(f0: &dyn FunctionOracle, fs: &[&dyn FunctionOracle], r: &[f64], x: &[f64]) -> f64 {
    f0.value(x)
        + fs
            .iter()
            .zip(r)
            .map(|(f, ri)| ri * f.value(x).max(0.0))
            .sum::<f64>()
}

/// Grid argmin of Φ over [lo, hi] (1-D problems); lowest point on ties.
pub fn penalty_grid_argmin(
    f0: &dyn FunctionOracle,
    fs: &[&dyn FunctionOracle],
    r: &[f64],
    lo: f64,
    hi: f64,
    step: f64,
) -> Result<f64> {
    if !(step > 0.0) || !(hi >= lo) {
        return Err(OptError::InvalidParameter("grid needs step > 0 and lo <= hi".into()));
    }
    check_dim(1, f0.dim())?;
    let n = ((hi - lo) / step).round() as usize;
    let mut best = (f64::INFINITY, lo);
    for i in 0..=n {
        let x = (lo + i as f64 * step).min(hi);
        let v = exact_penalty(f0, fs, r, &[x]);
        if v < best.0 {
            best = (v, x);
        }
    }
    Ok(best.1)
}

/// FD method on the exact penalty: the direction is H⁰ + Σ r_i⁺ Hⁱ with
/// r_i⁺ = r_i exactly when f_i(x_k) > 0.
pub fn penalty_fd_solve(
    f0: &dyn FunctionOracle,
    fs: &[&dyn FunctionOracle],
    r: &[f64],
    x0: &[f64],
    cfg: &FdConfig,
) -> Result<RunTrace> {
    cfg.validate()?;
    if r.len() != fs.len() {
        return Err(OptError::DimensionMismatch {
            expected: fs.len(),
            got: r.len(),
        });
    }
    if let Some(bad) = r.iter().find(|v| !(**v > 0.0)) {
        return Err(OptError::InvalidParameter(format!("penalty weight {bad} is not positive")));
    }
    check_dim(f0.dim(), x0.len())?;
    for f in fs {
        check_dim(f0.dim(), f.dim())?;
    }
    let mut x = x0.to_vec();
    project_opt(&cfg.set, &mut x)?;
    let mut est = RunRng::new(cfg.seed, 0).est;
    let cost = cfg.estimator.cost(x.len());
    let mut calls = 0u64;
    let phi = |x: &[f64]| exact_penalty(f0, fs, r, x);
    let violation = |x: &[f64]| fs.iter().map(|f| f.value(x).max(0.0)).fold(0.0, f64::max);
    let mon = Monitor {
        objective: &phi,
        violation: &violation,
        residual_oracle: None,
    };
    let end = run_iterations(&cfg.stop, cfg.seed, &mut x, &mon, |t, x, rec| {
        let (alpha, delta) = (cfg.schedule.alpha(t), cfg.schedule.delta(t));
        let mut d = cfg.estimator.apply(&Degenerate(f0), x, &[], alpha, delta, &mut est)?;
        calls += cost;
        let mut active = 0;
        for (f, ri) in fs.iter().zip(r) {
            calls += 1;
            if f.value(x) > 0.0 {
                let h = cfg.estimator.apply(&Degenerate(*f), x, &[], alpha, delta, &mut est)?;
                calls += cost;
                for (di, hi) in d.iter_mut().zip(&h) {
                    *di += ri * hi;
                }
                active += 1;
            }
        }
        rec.bump("penalty_activations", active as f64);
        let rho = cfg.schedule.rho(t);
        for (xi, v) in x.iter_mut().zip(&d) {
            *xi -= rho * v;
        }
        project_opt(&cfg.set, x)?;
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

/// Median of a sample (mean of the middle pair for even sizes).
pub fn median(v: &[f64]) -> f64 {
    let mut s: Vec<f64> = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::oracle::FnOracle;
    use crate::problems::abs_sum_oracle;
    use crate::schedules::Power;

    fn fd_schedule() -> Schedule {
        Schedule::steps(Power::new(1.0, 1.0)).with_alpha(Power::new(1.0, 1.0 / 3.0))
    }

    #[test]
    fn linear_on_a_box_follows_projected_gradient() {
        let f = FnOracle::linear(vec![1.0, -2.0], 0.0);
        let mut cfg = FdConfig::new(fd_schedule(), 200);
        cfg.set = Some(FeasibleSet::unit_box(2, -1.0, 1.0));
        let tr = fd_solve(&f, &[0.2, 0.1], &cfg).unwrap();
        assert!((tr.x_final[0] + 1.0).abs() < 1e-12 && (tr.x_final[1] - 1.0).abs() < 1e-12);

        let mut exact = cfg.clone();
        exact.estimator = Estimator::Exact;
        let mut x = vec![0.2, 0.1];
        let set = cfg.set.clone().unwrap();
        for t in 0..5 {
            let rho = cfg.schedule.rho(t);
            x = set.project(&[x[0] - rho, x[1] + 2.0 * rho]).unwrap();
        }
        exact.stop = StopRule::iterations(5);
        let tr = fd_solve(&f, &[0.2, 0.1], &exact).unwrap();
        assert_eq!(tr.x_final, x);
    }

    #[test]
    fn abs_sum_median_below_target() {
        let f = abs_sum_oracle(5);
        let finals: Vec<f64> = (0..20)
            .map(|s| {
                let mut cfg = FdConfig::new(fd_schedule(), 100_000);
                cfg.seed = s;
                cfg.stop.log_every = 100_000;
                let x0 = vec![0.8, -0.5, 0.3, -0.9, 0.6];
                fd_solve(&f, &x0, &cfg).unwrap().final_f()
            })
            .collect();
        assert!(median(&finals) <= 0.05, "{}", median(&finals));
    }

    #[test]
    fn started_at_the_minimizer_stays_close() {
        let f = abs_sum_oracle(5);
        let norms: Vec<f64> = (0..20)
            .map(|s| {
                let mut cfg = FdConfig::new(fd_schedule(), 100_000);
                cfg.seed = 100 + s;
                cfg.stop.log_every = 100_000;
                norm(&fd_solve(&f, &[0.0; 5], &cfg).unwrap().x_final)
            })
            .collect();
        assert!(median(&norms) <= 0.05, "{}", median(&norms));
    }

    #[test]
    fn window_sums_recent_estimates() {
        let f = FnOracle::linear(vec![1.0], 0.0);
        let mut cfg = FdConfig::new(Schedule::steps(Power::constant(0.1)), 4);
        cfg.estimator = Estimator::Exact;
        cfg.window = 3;
        let tr = fd_solve(&f, &[0.0], &cfg).unwrap();
        // steps use 1, 2, 3, 3 summed estimates
        assert!((tr.x_final[0] + 0.9).abs() < 1e-12);
        cfg.window = 0;
        assert!(fd_solve(&f, &[0.0], &cfg).is_err());
    }

    #[test]
    fn random_directions_descend() {
        let f = abs_sum_oracle(3);
        let mut cfg = FdConfig::new(fd_schedule(), 50_000);
        cfg.estimator = Estimator::random_dirs(3);
        cfg.stop.log_every = 50_000;
        let tr = fd_solve(&f, &[1.0, -1.0, 0.5], &cfg).unwrap();
        assert!(tr.final_f() < 0.2, "{}", tr.final_f());
    }

    #[test]
    fn single_piece_minimax_is_projected_fd() {
        let f = abs_sum_oracle(2);
        let mut cfg = FdConfig::new(fd_schedule(), 500);
        cfg.set = Some(FeasibleSet::unit_box(2, -1.0, 1.0));
        cfg.seed = 4;
        let a = fd_minimax_solve(&[&f], &[0.5, -0.7], &cfg).unwrap();
        let b = fd_solve(&f, &[0.5, -0.7], &cfg).unwrap();
        assert_eq!(a.x_final, b.x_final);
        assert_eq!(a.rows, b.rows);
    }

    #[test]
    fn minimax_of_x_and_minus_x() {
        let up = FnOracle::new(1, |x| x[0], |_| vec![1.0]);
        let down = FnOracle::new(1, |x| -x[0], |_| vec![-1.0]);
        let finals: Vec<f64> = (0..20)
            .map(|s| {
                let mut cfg = FdConfig::new(fd_schedule(), 100_000);
                cfg.set = Some(FeasibleSet::interval(-1.0, 1.0));
                cfg.seed = s;
                cfg.stop.log_every = 100_000;
                fd_minimax_solve(&[&up, &down], &[0.9], &cfg).unwrap().x_final[0].abs()
            })
            .collect();
        assert!(median(&finals) <= 0.05);
    }

    #[test]
    fn minimax_on_the_simplex() {
        let a = FnOracle::linear(vec![1.0, 0.0], 0.0);
        let b = FnOracle::linear(vec![0.0, 1.0], 0.0);
        let mut cfg = FdConfig::new(fd_schedule(), 20_000);
        cfg.set = Some(FeasibleSet::Simplex { dim: 2 });
        let tr = fd_minimax_solve(&[&a, &b], &[1.0, 0.0], &cfg).unwrap();
        assert!(tr.final_f() <= 0.55, "{}", tr.final_f());
    }

    #[test]
    fn penalty_reduces_to_fd_when_constraints_are_slack() {
        let f = abs_sum_oracle(2);
        let slack = FnOracle::new(2, |_| -1.0, |_| vec![0.0; 2]);
        let mut cfg = FdConfig::new(fd_schedule(), 300);
        cfg.seed = 9;
        let a = penalty_fd_solve(&f, &[&slack], &[3.0], &[0.4, 0.2], &cfg).unwrap();
        let b = fd_solve(&f, &[0.4, 0.2], &cfg).unwrap();
        assert_eq!(a.x_final, b.x_final);
        assert_eq!(a.extra("penalty_activations"), Some(0.0));
    }

    fn lower_bound_problem() -> (FnOracle, FnOracle) {
        (
            FnOracle::new(1, |x| x[0], |_| vec![1.0]),
            FnOracle::new(1, |x| -x[0], |_| vec![-1.0]),
        )
    }

    #[test]
    fn penalty_run_reaches_zero() {
        let (f0, f1) = lower_bound_problem();
        let finals: Vec<f64> = (0..20)
            .map(|s| {
                let mut cfg = FdConfig::new(fd_schedule(), 100_000);
                cfg.set = Some(FeasibleSet::interval(-2.0, 2.0));
                cfg.seed = s;
                cfg.stop.log_every = 100_000;
                penalty_fd_solve(&f0, &[&f1], &[2.0], &[1.5], &cfg).unwrap().x_final[0]
            })
            .collect();
        let m = median(&finals);
        assert!((-0.05..=0.05).contains(&m), "{m}");
    }

    #[test]
    fn penalty_weight_threshold_is_one() {
        let (f0, f1) = lower_bound_problem();
        for (lambda, feasible) in [(0.5, false), (2.0, true), (4.0, true)] {
            let x = penalty_grid_argmin(&f0, &[&f1], &[lambda], -2.0, 2.0, 1e-3).unwrap();
            assert_eq!(x >= -1e-12, feasible, "lambda {lambda}: {x}");
        }
        assert!(penalty_fd_solve(&f0, &[&f1], &[0.0], &[0.0], &FdConfig::new(fd_schedule(), 1)).is_err());
    }

    #[test]
    fn estimator_costs() {
        assert_eq!(Estimator::central().cost(4), 8);
        assert_eq!(Estimator::forward().cost(4), 5);
        assert_eq!(Estimator::random_dirs(2).cost(4), 3);
        assert_eq!(Estimator::Exact.cost(4), 1);
        let cfg = FdConfig::new(Schedule::steps(Power::new(1.0, 1.0)), 1);
        assert!(cfg.validate().is_err());
    }
}
