//! Constrained stochastic methods driven by an averaged direction: projected
//! and free averaged descent, conditional gradient, reduced gradient,
//! feasible directions, the analytic penalty method and Arrow–Hurwicz.
//!
//! The linearization methods share their loops with the deterministic
//! versions in [`crate::solvers_fd`]; here they take a stochastic oracle.

use serde::{Deserialize, Serialize};

use crate::core::error::{check_dim, Result};
use crate::core::oracle::{FunctionOracle, StochasticOracle};
use crate::core::rng::RunRng;
use crate::core::run::{run_iterations, Monitor, StepReport};
use crate::core::sets::FeasibleSet;
use crate::core::trace::{RunTrace, StopRule};
use crate::core::vector::{norm, Vector};
use crate::schedules::{Power, Schedule};
use crate::smoothing::Averager;
use crate::solvers_fd::constrained::{analytic_core, arrow_hurwicz_core};
use crate::solvers_fd::linearized::{cg_core, fdir_core, rg_core};
use crate::solvers_fd::{
    mean_or_nan, project_opt, AnalyticPenaltyConfig, ArrowHurwiczConfig, CgConfig, Estimator,
    FeasibleDirectionsConfig, ReducedGradientConfig, SaddleResult,
};

/// Variants by estimator and set: `Exact` with a set is the smooth projected
/// method, `Fd` with a set the finite-difference one, `Cube` or `Fd` without a
/// set the free method for Lipschitz F.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedDirectionConfig {
    pub schedule: Schedule,
    #[serde(default)]
    pub estimator: Estimator,
    #[serde(default)]
    pub set: Option<FeasibleSet>,
    #[serde(default)]
    pub stop: StopRule,
    #[serde(default)]
    pub seed: u64,
}

impl AveragedDirectionConfig {
    /// ρ = k⁻¹, a = k^{−2/3}, α = k^{−1/6}.
    pub fn new(estimator: Estimator, set: Option<FeasibleSet>, max_iter: usize) -> Self {
        AveragedDirectionConfig {
            schedule: Schedule::steps(Power::new(1.0, 1.0))
                .with_alpha(Power::new(1.0, 1.0 / 6.0))
                .with_a(Power::new(1.0, 2.0 / 3.0)),
            estimator,
            set,
            stop: StopRule::iterations(max_iter),
            seed: 0,
        }
    }
}

/// v ← v + a_k(ξ_k − v); x ← π(x − ρ_k v). The residual column is ‖v‖.
pub fn averaged_direction_solve(
    f: &dyn StochasticOracle,
    x0: &[f64],
    cfg: &AveragedDirectionConfig,
) -> Result<RunTrace> {
    cfg.estimator.check(&cfg.schedule)?;
    check_dim(f.dim(), x0.len())?;
    if let Some(s) = &cfg.set {
        check_dim(f.dim(), s.dim())?;
    }
    let mut x = x0.to_vec();
    project_opt(&cfg.set, &mut x)?;
    let mut rng = RunRng::new(cfg.seed, 0);
    let mut v = Averager::new(vec![0.0; x.len()]);
    let cost = cfg.estimator.cost(x.len());
    let mut calls = 0u64;
    let objective = |x: &[f64]| mean_or_nan(f, x);
    let violation = |x: &[f64]| cfg.set.as_ref().map_or(0.0, |s| s.violation(x));
    let mon = Monitor {
        objective: &objective,
        violation: &violation,
        residual_oracle: None,
    };
    let end = run_iterations(&cfg.stop, cfg.seed, &mut x, &mon, |t, x, _| {
        let xi = cfg.estimator.sample(f, x, cfg.schedule.alpha(t), cfg.schedule.delta(t), &mut rng)?;
        calls += cost;
        let dir: Vector = v.update(&xi, cfg.schedule.a(t)).clone();
        let rho = cfg.schedule.rho(t);
        for (xv, d) in x.iter_mut().zip(&dir) {
            *xv -= rho * d;
        }
        project_opt(&cfg.set, x)?;
        Ok(StepReport {
            residual: norm(&dir),
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

/// Conditional gradient on F = E f(·, θ). `Exact` gives the smooth variant;
/// `Cube` or `Fd` the Lipschitz one.
pub fn sto_conditional_gradient_solve(
    f: &dyn StochasticOracle,
    x0: &[f64],
    cfg: &CgConfig,
) -> Result<RunTrace> {
    cg_core(f, x0, cfg)
}

/// Reduced gradient on {Ax = b, x ≥ 0} with an averaged stochastic gradient.
pub fn sto_reduced_gradient_solve(
    f: &dyn StochasticOracle,
    a: &[Vector],
    b: &[f64],
    x0: &[f64],
    cfg: &ReducedGradientConfig,
) -> Result<RunTrace> {
    rg_core(f, a, b, x0, cfg)
}

/// Feasible directions for smooth deterministic constraints f_i(x) ≤ 0 and a
/// stochastic objective.
pub fn sto_feasible_directions_solve(
    f: &dyn StochasticOracle,
    cons: &[&dyn FunctionOracle],
    x0: &[f64],
    cfg: &FeasibleDirectionsConfig,
) -> Result<RunTrace> {
    fdir_core(f, cons, x0, cfg)
}

/// min E f(x, θ) s.t. h(x) ≤ 0 with the analytic multiplier; h is
/// deterministic.
pub fn sto_constrained_lipschitz_solve(
    f: &dyn StochasticOracle,
    h: &dyn FunctionOracle,
    x0: &[f64],
    cfg: &AnalyticPenaltyConfig,
) -> Result<RunTrace> {
    analytic_core(f, h, x0, cfg)
}

/// Stochastic Arrow–Hurwicz for min E f_0 s.t. E f_i ≤ 0 over X; all
/// components see the same scenario at each iteration.
pub fn sto_arrow_hurwicz_solve(
    f0: &dyn StochasticOracle,
    fs: &[&dyn StochasticOracle],
    x0: &[f64],
    cfg: &ArrowHurwiczConfig,
) -> Result<SaddleResult> {
    let all: Vec<&dyn StochasticOracle> = std::iter::once(f0).chain(fs.iter().copied()).collect();
    arrow_hurwicz_core(&all, x0, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::oracle::{CountedStochastic, Degenerate, FnOracle, FnStochastic};
    use crate::core::trace::StopReason;
    use crate::problems::{make_newsvendor, DemandLaw, Newsvendor, Transport, WithSlack};
    use crate::solvers_fd::{
        arrow_hurwicz_solve, conditional_gradient_solve, feasible_directions_solve, median,
        reduced_gradient_solve,
    };
    use rand::Rng;

    fn newsvendor() -> Newsvendor {
        Newsvendor::simple(1.0, 1.0, DemandLaw::uniform(0.0, 1.0)).unwrap()
    }

    fn median_over_seeds(run: impl Fn(u64) -> f64) -> f64 {
        let v: Vec<f64> = (0..20).map(run).collect();
        median(&v)
    }

    /// (x − θ)², θ ~ U[0,1]; E = (x − ½)² + 1/12.
    fn squared_loss() -> FnStochastic {
        FnStochastic::new(
            1,
            |r| vec![r.gen::<f64>()],
            |x, t| (x[0] - t[0]) * (x[0] - t[0]),
            |x, t| vec![2.0 * (x[0] - t[0])],
        )
        .with_mean(|x| (x[0] - 0.5) * (x[0] - 0.5) + 1.0 / 12.0)
    }

    #[test]
    fn constant_gradient_gives_projected_gradient_path() {
        let f = FnOracle::linear(vec![1.0, -1.0], 0.0);
        let mut c = AveragedDirectionConfig::new(Estimator::Exact, Some(FeasibleSet::unit_box(2, 0.0, 1.0)), 50);
        c.schedule = Schedule::steps(Power::constant(0.01)).with_a(Power::new(1.0, 0.5));
        let tr = averaged_direction_solve(&Degenerate(&f), &[0.5, 0.5], &c).unwrap();
        // v stays at c after the first update (a₀ = 1)
        for r in &tr.rows {
            assert!((r.residual - 2f64.sqrt()).abs() < 1e-15);
        }
        assert!((tr.x_final[0] - 0.0).abs() < 1e-12 && (tr.x_final[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn averaged_direction_newsvendor_all_variants() {
        let nv = newsvendor();
        let variants = [
            (Estimator::Exact, Some(FeasibleSet::interval(0.0, 1.0))),
            (Estimator::central(), Some(FeasibleSet::interval(0.0, 1.0))),
            (Estimator::Cube, None),
            (Estimator::central(), None),
        ];
        for (est, set) in variants {
            let m = median_over_seeds(|seed| {
                let mut c = AveragedDirectionConfig::new(est, set.clone(), 100_000);
                c.seed = seed;
                let tr = averaged_direction_solve(&nv, &[0.0], &c).unwrap();
                assert_ne!(tr.stop_reason, StopReason::Diverged);
                (tr.x_final[0] - 0.5).abs()
            });
            assert!(m <= 0.05, "{est:?} {m}");
        }
    }

    #[test]
    fn conditional_gradient_zero_noise_equivalence() {
        let f = FnOracle::new(2, |x| (x[0] - 0.2).abs() + (x[1] - 0.7).powi(2), |x| {
            vec![if x[0] >= 0.2 { 1.0 } else { -1.0 }, 2.0 * (x[1] - 0.7)]
        });
        let mut c = CgConfig::new(FeasibleSet::Simplex { dim: 2 }, 2000);
        c.seed = 4;
        let a = conditional_gradient_solve(&f, &[0.5, 0.5], &c).unwrap();
        let b = sto_conditional_gradient_solve(&Degenerate(&f), &[0.5, 0.5], &c).unwrap();
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.x_final, b.x_final);
    }

    #[test]
    fn conditional_gradient_newsvendor() {
        let nv = newsvendor();
        for est in [Estimator::Exact, Estimator::central()] {
            let m = median_over_seeds(|seed| {
                let mut c = CgConfig::new(FeasibleSet::interval(0.0, 1.0), 100_000);
                c.estimator = est;
                c.seed = seed;
                let tr = sto_conditional_gradient_solve(&nv, &[0.0], &c).unwrap();
                (tr.x_final[0] - 0.5).abs()
            });
            assert!(m <= 0.05, "{est:?} {m}");
        }
    }

    #[test]
    fn conditional_gradient_two_products() {
        let spec = make_newsvendor(
            Newsvendor::new(
                vec![1.0, 1.0],
                vec![1.0, 1.0],
                vec![DemandLaw::uniform(0.0, 1.0), DemandLaw::uniform(0.0, 2.0)],
                None,
            )
            .unwrap(),
            Some((vec![1.0, 1.0], 3.0)),
        )
        .unwrap();
        let f = spec.stochastic().unwrap();
        let mut errs = [Vec::new(), Vec::new()];
        for seed in 0..20 {
            let mut c = CgConfig::new(spec.set.clone(), 100_000);
            c.estimator = Estimator::Exact;
            c.seed = seed;
            let tr = sto_conditional_gradient_solve(&f, &[0.0, 0.0], &c).unwrap();
            assert!(spec.set.contains(&tr.x_final, 1e-9));
            errs[0].push((tr.x_final[0] - 0.5).abs());
            errs[1].push((tr.x_final[1] - 1.0).abs());
        }
        assert!(median(&errs[0]) <= 0.05 && median(&errs[1]) <= 0.05);
    }

    #[test]
    fn reduced_gradient_zero_noise_equivalence() {
        let f = FnOracle::new(3, |x| x[0] + 2.0 * x[1] + 3.0 * x[2], |_| vec![1.0, 2.0, 3.0]);
        let a = vec![vec![1.0, 1.0, 1.0]];
        let c = ReducedGradientConfig::new(200);
        let x0 = [0.5, 0.3, 0.2];
        let d = reduced_gradient_solve(&f, &a, &[1.0], &x0, &c).unwrap();
        let s = sto_reduced_gradient_solve(&Degenerate(&f), &a, &[1.0], &x0, &c).unwrap();
        assert_eq!(d.rows, s.rows);
        assert_eq!(d.x_final, s.x_final);
    }

    #[test]
    fn one_by_one_transport_is_a_newsvendor() {
        let t = Transport::new(
            vec![vec![0.0]],
            vec![2.0],
            vec![DemandLaw::uniform(0.0, 1.0)],
            vec![1.0],
            vec![1.0],
        )
        .unwrap();
        let (a, b) = t.equality_form();
        let f = WithSlack { inner: t, extra: 1 };
        let m = median_over_seeds(|seed| {
            let mut c = ReducedGradientConfig::new(100_000);
            c.seed = seed;
            let tr = sto_reduced_gradient_solve(&f, &a, &b, &[1.0, 1.0], &c).unwrap();
            assert!((tr.x_final[0] + tr.x_final[1] - 2.0).abs() <= 1e-10);
            assert!(tr.x_final.iter().all(|v| *v >= -1e-12));
            (tr.x_final[0] - 0.5).abs()
        });
        assert!(m <= 0.05, "{m}");
    }

    #[test]
    fn feasible_directions_zero_noise_equivalence() {
        let f = FnOracle::new(2, |x| x[0] + x[1], |_| vec![1.0, 1.0]);
        let h = FnOracle::new(2, |x| x[0] * x[0] + x[1] * x[1] - 1.0, |x| vec![2.0 * x[0], 2.0 * x[1]]);
        let c = FeasibleDirectionsConfig::new(500);
        let d = feasible_directions_solve(&f, &[&h], &[0.0, 0.0], &c).unwrap();
        let s = sto_feasible_directions_solve(&Degenerate(&f), &[&h], &[0.0, 0.0], &c).unwrap();
        assert_eq!(d.rows, s.rows);
        assert_eq!(d.x_final, s.x_final);
    }

    #[test]
    fn feasible_directions_projected_mean() {
        let f = squared_loss();
        let h = FnOracle::new(1, |x| 0.7 - x[0], |_| vec![-1.0]);
        let m = median_over_seeds(|seed| {
            let mut c = FeasibleDirectionsConfig::new(20_000);
            c.seed = seed;
            let tr = sto_feasible_directions_solve(&f, &[&h], &[1.0], &c).unwrap();
            assert!(tr.rows.iter().all(|r| r.h_violation <= 1e-9));
            (tr.x_final[0] - 0.7).abs()
        });
        assert!(m <= 0.05, "{m}");
    }

    #[test]
    fn analytic_penalty_with_noise() {
        let nv = newsvendor();
        for (cap, target) in [(0.8, 0.5), (0.3, 0.3)] {
            let h = FnOracle::linear(vec![1.0], -cap);
            let m = median_over_seeds(|seed| {
                let mut c = AnalyticPenaltyConfig::new(100_000);
                c.seed = seed;
                let tr = sto_constrained_lipschitz_solve(&nv, &h, &[0.0], &c).unwrap();
                (tr.x_final[0] - target).abs()
            });
            assert!(m <= 0.05, "cap {cap}: {m}");
        }
    }

    #[test]
    fn arrow_hurwicz_zero_noise_equivalence() {
        let f0 = FnOracle::linear(vec![1.0], 0.0);
        let f1 = FnOracle::new(1, |x| x[0] * x[0] - 1.0, |x| vec![2.0 * x[0]]);
        let mut c = ArrowHurwiczConfig::new(FeasibleSet::interval(-2.0, 2.0), 3000);
        c.seed = 2;
        let d = arrow_hurwicz_solve(&f0, &[&f1], &[0.0], &c).unwrap();
        let s = sto_arrow_hurwicz_solve(&Degenerate(&f0), &[&Degenerate(&f1)], &[0.0], &c).unwrap();
        assert_eq!(d.trace.rows, s.trace.rows);
        assert_eq!((d.x_hat, d.u_hat), (s.x_hat, s.u_hat));
    }

    #[test]
    fn arrow_hurwicz_with_a_mean_constraint() {
        let f0 = squared_loss();
        // E(θ − x) ≤ 0
        let f1 = FnStochastic::new(1, |r| vec![r.gen::<f64>()], |x, t| t[0] - x[0], |_, _| vec![-1.0]);
        let m = median_over_seeds(|seed| {
            let mut c = ArrowHurwiczConfig::new(FeasibleSet::interval(0.0, 1.0), 100_000);
            c.seed = seed;
            let r = sto_arrow_hurwicz_solve(&f0, &[&f1], &[0.0], &c).unwrap();
            (r.x_hat[0] - 0.5).abs()
        });
        assert!(m <= 0.05, "{m}");
    }

    #[test]
    fn arrow_hurwicz_inactive_mean_constraint() {
        let f0 = squared_loss();
        // E(x − 0.9 + (θ − ½)) ≤ 0 is slack at x = ½
        let f1 = FnStochastic::new(1, |r| vec![r.gen::<f64>()], |x, t| x[0] - 0.9 + t[0] - 0.5, |_, _| vec![1.0]);
        let m = median_over_seeds(|seed| {
            let mut c = ArrowHurwiczConfig::new(FeasibleSet::interval(0.0, 1.0), 100_000);
            c.seed = seed;
            sto_arrow_hurwicz_solve(&f0, &[&f1], &[0.0], &c).unwrap().u_hat[0]
        });
        assert!(m <= 0.1, "{m}");
    }

    #[test]
    fn one_scenario_per_estimate() {
        let nv = CountedStochastic::new(newsvendor());
        let mut c = AveragedDirectionConfig::new(Estimator::central(), None, 300);
        c.seed = 1;
        let tr = averaged_direction_solve(&nv, &[0.0], &c).unwrap();
        assert_eq!(nv.draws(), 300);
        assert_eq!(nv.evaluations(), tr.oracle_calls);
        let nv = CountedStochastic::new(newsvendor());
        let c = CgConfig::new(FeasibleSet::interval(0.0, 1.0), 300);
        sto_conditional_gradient_solve(&nv, &[0.0], &c).unwrap();
        assert_eq!(nv.draws(), 300);
    }

    #[test]
    fn stochastic_runs_are_reproducible() {
        let nv = newsvendor();
        let mut c = AveragedDirectionConfig::new(Estimator::central(), Some(FeasibleSet::interval(0.0, 1.0)), 1000);
        c.seed = 8;
        let a = averaged_direction_solve(&nv, &[0.0], &c).unwrap();
        let b = averaged_direction_solve(&nv, &[0.0], &c).unwrap();
        assert_eq!(a, b);
        let h = FnOracle::linear(vec![1.0], -0.8);
        let ac = AnalyticPenaltyConfig::new(1000);
        assert_eq!(
            sto_constrained_lipschitz_solve(&nv, &h, &[0.0], &ac).unwrap(),
            sto_constrained_lipschitz_solve(&nv, &h, &[0.0], &ac).unwrap()
        );
    }
}
