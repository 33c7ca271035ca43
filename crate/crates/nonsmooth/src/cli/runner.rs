//! Wiring a config to a problem and a solver, and running one seed.

use std::sync::Arc;

use rand::Rng;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use super::config::{ExperimentConfig, InlineProblem};
use crate::core::error::{OptError, Result};
use crate::core::oracle::{Degenerate, FunctionOracle, StochasticOracle};
use crate::core::rng::stream;
use crate::core::trace::RunTrace;
use crate::core::vector::Vector;
use crate::problems::{self, make_benchmark, Newsvendor, ProblemSpec, Transport};
use crate::schedules::{ConditionSet, Schedule, ValidationReport};
use crate::solvers_det::{
    averaged_gradient_solve, ggd_solve, relaxation_solve, AveragedConfig, AveragingPolicy, ConstraintMode,
    GgdConfig, RelaxationConfig, ReturnToStart,
};
use crate::solvers_fd::linearized::{CgConfig, FeasibleDirectionsConfig, ReducedGradientConfig};
use crate::solvers_fd::piyavskii::{piyavskii_solve, PiyavskiiConfig};
use crate::solvers_fd::{penalty_fd_solve, AnalyticPenaltyConfig, ArrowHurwiczConfig, Estimator, FdConfig};
use crate::solvers_sto::{
    averaged_direction_solve, kw_solve, sqg_solve, sto_arrow_hurwicz_solve, sto_conditional_gradient_solve,
    sto_constrained_lipschitz_solve, sto_feasible_directions_solve, sto_reduced_gradient_solve,
    AveragedDirectionConfig, SqgConfig, SqgPolicy,
};

/// Names accepted in `[solver] name`.
pub const SOLVERS: [&str; 15] = [
    "ggd",
    "averaged_gradient",
    "relaxation",
    "fd",
    "kw",
    "penalty_fd",
    "analytic_penalty",
    "arrow_hurwicz",
    "conditional_gradient",
    "reduced_gradient",
    "feasible_directions",
    "piyavskii",
    "sqg",
    "averaged_direction",
    "constrained_lipschitz",
];

fn exact() -> Estimator {
    Estimator::Exact
}

fn yes() -> bool {
    true
}

fn one() -> usize {
    1
}

fn sixty() -> usize {
    60
}

fn ten() -> f64 {
    10.0
}

fn eps_div() -> f64 {
    1e-8
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct GgdParams {
    #[serde(default)]
    normalize: bool,
    #[serde(default)]
    constraint: ConstraintMode,
    #[serde(default)]
    return_to_start: Option<ReturnToStart>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct AveragedParams {
    policy: AveragingPolicy,
    #[serde(default)]
    normalize: bool,
    #[serde(default)]
    constraint: ConstraintMode,
    #[serde(default)]
    return_to_start: Option<ReturnToStart>,
    #[serde(default)]
    audit: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FdParams {
    #[serde(default)]
    estimator: Estimator,
    #[serde(default = "one")]
    window: usize,
    /// Project onto the problem's set.
    #[serde(default = "yes")]
    project: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct PenaltyParams {
    #[serde(default)]
    estimator: Estimator,
    r: Vec<f64>,
    #[serde(default = "yes")]
    project: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnalyticParams {
    #[serde(default)]
    estimator: Estimator,
    #[serde(default = "eps_div")]
    eps_div: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct AhParams {
    #[serde(default)]
    estimator: Estimator,
    #[serde(default = "ten")]
    u_max: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct EstimatorParams {
    #[serde(default)]
    estimator: Estimator,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RgParams {
    #[serde(default = "exact")]
    estimator: Estimator,
    a: Vec<Vector>,
    b: Vector,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FdirParams {
    #[serde(default = "exact")]
    estimator: Estimator,
    #[serde(default = "sixty")]
    bisection: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SqgParams {
    #[serde(default)]
    policy: SqgPolicy,
    #[serde(default)]
    normalize: bool,
    #[serde(default)]
    iterate_avg: bool,
    #[serde(default)]
    constraint: ConstraintMode,
    #[serde(default)]
    return_to_start: Option<ReturnToStart>,
    #[serde(default)]
    audit: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct AdParams {
    #[serde(default)]
    estimator: Estimator,
    #[serde(default = "yes")]
    project: bool,
}

/// A solver with its parameters and schedule resolved.
#[derive(Debug, Clone)]
pub enum Solver {
    Ggd(GgdConfig),
    Averaged(AveragedConfig),
    Relaxation(RelaxationConfig),
    Fd(FdConfig),
    Kw(FdConfig),
    PenaltyFd(FdConfig, Vec<f64>),
    Analytic(AnalyticPenaltyConfig),
    ArrowHurwicz(ArrowHurwiczConfig),
    ConditionalGradient(CgConfig),
    ReducedGradient(ReducedGradientConfig, Vec<Vector>, Vector),
    FeasibleDirections(FeasibleDirectionsConfig),
    Piyavskii(PiyavskiiConfig),
    Sqg(SqgConfig),
    AveragedDirection(AveragedDirectionConfig),
}

impl Solver {
    pub fn schedule(&self) -> Option<&Schedule> {
        match self {
            Solver::Ggd(c) => Some(&c.schedule),
            Solver::Averaged(c) => Some(&c.schedule),
            Solver::Fd(c) | Solver::Kw(c) | Solver::PenaltyFd(c, _) => Some(&c.schedule),
            Solver::Analytic(c) => Some(&c.schedule),
            Solver::ArrowHurwicz(c) => Some(&c.schedule),
            Solver::ConditionalGradient(c) => Some(&c.schedule),
            Solver::ReducedGradient(c, ..) => Some(&c.schedule),
            Solver::FeasibleDirections(c) => Some(&c.schedule),
            Solver::Sqg(c) => Some(&c.schedule),
            Solver::AveragedDirection(c) => Some(&c.schedule),
            Solver::Relaxation(_) | Solver::Piyavskii(_) => None,
        }
    }

    /// The condition set the schedule is checked against.
    pub fn condition_set(&self, stochastic: bool) -> Option<ConditionSet> {
        Some(match self {
            Solver::Ggd(_) | Solver::Averaged(_) => ConditionSet::Ggd,
            Solver::Fd(c) if c.window > 1 => ConditionSet::FdAveraged,
            Solver::Fd(_) => ConditionSet::Fd,
            Solver::Kw(_) => ConditionSet::KieferWolfowitz,
            Solver::PenaltyFd(..) => ConditionSet::PenaltyFd,
            Solver::Analytic(_) => ConditionSet::AnalyticPenalty,
            Solver::ArrowHurwicz(_) if stochastic => ConditionSet::StoArrowHurwicz,
            Solver::ArrowHurwicz(_) => ConditionSet::ArrowHurwicz,
            Solver::ConditionalGradient(c) if c.estimator == Estimator::Exact => ConditionSet::ConditionalGradient,
            Solver::ConditionalGradient(_) => ConditionSet::ConditionalGradientLipschitz,
            Solver::ReducedGradient(..) | Solver::FeasibleDirections(_) => ConditionSet::AveragedDirection,
            Solver::AveragedDirection(c) if c.estimator == Estimator::Exact => ConditionSet::AveragedDirection,
            Solver::AveragedDirection(_) => ConditionSet::AveragedDirectionFd,
            Solver::Sqg(_) => ConditionSet::Sqg,
            Solver::Relaxation(_) | Solver::Piyavskii(_) => return None,
        })
    }
}

/// A config with its problem and solver built.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: ExperimentConfig,
    pub problem: ProblemSpec,
    pub solver: Solver,
}

impl Prepared {
    pub fn validation(&self) -> Option<ValidationReport> {
        let set = self.solver.condition_set(self.problem.is_stochastic())?;
        Some(self.solver.schedule()?.validate(set))
    }
}

fn params<T: DeserializeOwned>(solver: &str, table: &toml::Table) -> Result<T> {
    toml::Value::Table(table.clone())
        .try_into()
        .map_err(|e: toml::de::Error| OptError::InvalidParameter(format!("solver {}: {}", solver, e.message().trim())))
}

pub fn build_problem(cfg: &ExperimentConfig) -> Result<ProblemSpec> {
    let p = &cfg.problem;
    let mut spec = match (&p.name, &p.inline) {
        (Some(name), None) => make_benchmark(name)?,
        (None, Some(inline)) => build_inline(inline)?,
        _ => {
            return Err(OptError::InvalidParameter(
                "[problem] needs exactly one of name or inline".into(),
            ))
        }
    };
    if let Some(x0) = &p.x0 {
        if x0.len() != spec.dim {
            return Err(OptError::DimensionMismatch {
                expected: spec.dim,
                got: x0.len(),
            });
        }
        spec.x0 = x0.clone();
    }
    if let Some(r) = p.random_start {
        if !(r > 0.0) {
            return Err(OptError::InvalidParameter("random_start must be positive".into()));
        }
    }
    Ok(spec)
}

fn build_inline(p: &InlineProblem) -> Result<ProblemSpec> {
    match p {
        InlineProblem::Newsvendor {
            alpha,
            beta,
            laws,
            interchange,
            capacity,
        } => {
            let nv = Newsvendor::new(alpha.clone(), beta.clone(), laws.clone(), interchange.clone())?;
            problems::make_newsvendor(nv, capacity.as_ref().map(|c| (c.weights.clone(), c.total)))
        }
        InlineProblem::Transport {
            cost,
            capacity,
            laws,
            alpha,
            beta,
        } => problems::make_transport(Transport::new(
            cost.clone(),
            capacity.clone(),
            laws.clone(),
            alpha.clone(),
            beta.clone(),
        )?),
        InlineProblem::MaxLinear { a, b } => {
            if a.is_empty() || a.len() != b.len() {
                return Err(OptError::InvalidParameter("max_linear needs one b_i per row a_i".into()));
            }
            let n = a[0].len();
            if a.iter().any(|r| r.len() != n) {
                return Err(OptError::InvalidParameter("max_linear rows differ in length".into()));
            }
            let oracle = problems::max_linear_oracle(a.clone(), b.clone());
            Ok(ProblemSpec {
                name: "max_linear".into(),
                dim: n,
                objective: problems::Objective::Deterministic(Arc::new(oracle)),
                constraints: Vec::new(),
                set: crate::core::sets::FeasibleSet::Whole { dim: n },
                x0: vec![0.0; n],
                known: None,
                brute_force: None,
                lipschitz: None,
            })
        }
    }
}

fn needs_schedule(cfg: &ExperimentConfig) -> Result<Schedule> {
    cfg.schedule.clone().ok_or_else(|| {
        OptError::InvalidParameter(format!("solver {} needs a [schedule] section", cfg.solver.name))
    })
}

fn set_opt(p: &ProblemSpec, project: bool) -> Option<crate::core::sets::FeasibleSet> {
    (project && !matches!(p.set, crate::core::sets::FeasibleSet::Whole { .. })).then(|| p.set.clone())
}

pub fn build_solver(cfg: &ExperimentConfig, problem: &ProblemSpec) -> Result<Solver> {
    let name = cfg.solver.name.as_str();
    let t = &cfg.solver.params;
    let stop = cfg.stop.clone();
    let sched_or = |default: Schedule| cfg.schedule.clone().unwrap_or(default);
    let solver = match name {
        "ggd" => {
            let p: GgdParams = params(name, t)?;
            Solver::Ggd(GgdConfig {
                schedule: needs_schedule(cfg)?,
                normalize: p.normalize,
                constraint: p.constraint,
                stop,
                return_to_start: p.return_to_start,
                seed: 0,
            })
        }
        "averaged_gradient" => {
            let p: AveragedParams = params(name, t)?;
            Solver::Averaged(AveragedConfig {
                schedule: needs_schedule(cfg)?,
                policy: p.policy,
                normalize: p.normalize,
                constraint: p.constraint,
                stop,
                return_to_start: p.return_to_start,
                seed: 0,
                audit: p.audit,
            })
        }
        "relaxation" => {
            let mut c: RelaxationConfig = params(name, t)?;
            if !t.contains_key("log_every") {
                c.log_every = stop.log_every;
            }
            Solver::Relaxation(c)
        }
        "fd" | "kw" => {
            let p: FdParams = params(name, t)?;
            let c = FdConfig {
                schedule: needs_schedule(cfg)?,
                estimator: p.estimator,
                set: set_opt(problem, p.project),
                window: p.window,
                stop,
                seed: 0,
            };
            if name == "fd" {
                Solver::Fd(c)
            } else {
                Solver::Kw(c)
            }
        }
        "penalty_fd" => {
            let p: PenaltyParams = params(name, t)?;
            Solver::PenaltyFd(
                FdConfig {
                    schedule: needs_schedule(cfg)?,
                    estimator: p.estimator,
                    set: set_opt(problem, p.project),
                    window: 1,
                    stop,
                    seed: 0,
                },
                p.r,
            )
        }
        "analytic_penalty" | "constrained_lipschitz" => {
            let p: AnalyticParams = params(name, t)?;
            let d = AnalyticPenaltyConfig::new(stop.max_iter);
            Solver::Analytic(AnalyticPenaltyConfig {
                schedule: sched_or(d.schedule),
                estimator: p.estimator,
                eps_div: p.eps_div,
                stop,
                seed: 0,
            })
        }
        "arrow_hurwicz" => {
            let p: AhParams = params(name, t)?;
            let d = ArrowHurwiczConfig::new(problem.set.clone(), stop.max_iter);
            Solver::ArrowHurwicz(ArrowHurwiczConfig {
                schedule: sched_or(d.schedule),
                estimator: p.estimator,
                set: problem.set.clone(),
                u_max: p.u_max,
                stop,
                seed: 0,
            })
        }
        "conditional_gradient" => {
            let p: EstimatorParams = params(name, t)?;
            let d = CgConfig::new(problem.set.clone(), stop.max_iter);
            Solver::ConditionalGradient(CgConfig {
                schedule: sched_or(d.schedule),
                estimator: p.estimator,
                set: problem.set.clone(),
                stop,
                seed: 0,
            })
        }
        "reduced_gradient" => {
            let p: RgParams = params(name, t)?;
            let d = ReducedGradientConfig::new(stop.max_iter);
            Solver::ReducedGradient(
                ReducedGradientConfig {
                    schedule: sched_or(d.schedule),
                    estimator: p.estimator,
                    stop,
                    seed: 0,
                },
                p.a,
                p.b,
            )
        }
        "feasible_directions" => {
            let p: FdirParams = params(name, t)?;
            let d = FeasibleDirectionsConfig::new(stop.max_iter);
            Solver::FeasibleDirections(FeasibleDirectionsConfig {
                schedule: sched_or(d.schedule),
                estimator: p.estimator,
                set: set_opt(problem, true),
                bisection: p.bisection,
                stop,
                seed: 0,
            })
        }
        "piyavskii" => Solver::Piyavskii(params(name, t)?),
        "sqg" => {
            let p: SqgParams = params(name, t)?;
            Solver::Sqg(SqgConfig {
                schedule: needs_schedule(cfg)?,
                policy: p.policy,
                normalize: p.normalize,
                iterate_avg: p.iterate_avg,
                constraint: p.constraint,
                stop,
                return_to_start: p.return_to_start,
                seed: 0,
                audit: p.audit,
            })
        }
        "averaged_direction" => {
            let p: AdParams = params(name, t)?;
            let set = set_opt(problem, p.project);
            let d = AveragedDirectionConfig::new(p.estimator, set.clone(), stop.max_iter);
            Solver::AveragedDirection(AveragedDirectionConfig {
                schedule: sched_or(d.schedule),
                estimator: p.estimator,
                set,
                stop,
                seed: 0,
            })
        }
        _ => {
            return Err(OptError::Unknown {
                kind: "solver",
                name: name.to_string(),
            })
        }
    };
    Ok(solver)
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    let problem = build_problem(cfg)?;
    let solver = build_solver(cfg, &problem)?;
    Ok(Prepared {
        config: cfg.clone(),
        problem,
        solver,
    })
}

/// Stream index reserved for random starting points, above any run's streams.
const START_STREAM: u64 = 1 << 40;

impl Prepared {
    pub fn start(&self, seed: u64) -> Vector {
        match self.config.problem.random_start {
            Some(r) => {
                let mut rng = stream(seed, START_STREAM);
                (0..self.problem.dim).map(|_| rng.gen_range(-r..=r)).collect()
            }
            None => self.problem.x0.clone(),
        }
    }

    fn det(&self) -> Result<Arc<dyn FunctionOracle>> {
        self.problem.deterministic().ok_or_else(|| {
            OptError::InvalidParameter(format!(
                "solver {} needs a deterministic objective; {} is stochastic",
                self.config.solver.name, self.problem.name
            ))
        })
    }

    fn sto(&self) -> Arc<dyn StochasticOracle> {
        match self.problem.stochastic() {
            Some(s) => s,
            None => Arc::new(Degenerate(self.det().expect("objective is deterministic"))),
        }
    }

    fn first_constraint(&self) -> Result<&dyn FunctionOracle> {
        self.problem.constraints.first().map(|c| c.as_ref()).ok_or_else(|| {
            OptError::InvalidParameter(format!(
                "solver {} needs a constraint; {} has none",
                self.config.solver.name, self.problem.name
            ))
        })
    }

    /// One run. Piyavskii also returns its envelope as CSV.
    pub fn run_seed(&self, seed: u64) -> Result<(RunTrace, Option<String>)> {
        let x0 = self.start(seed);
        let cons: Vec<&dyn FunctionOracle> = self.problem.constraints.iter().map(|c| c.as_ref()).collect();
        let trace = match &self.solver {
            Solver::Ggd(c) => ggd_solve(self.det()?.as_ref(), &cons, &x0, &with_seed(c, seed, |c, s| c.seed = s))?,
            Solver::Averaged(c) => {
                averaged_gradient_solve(self.det()?.as_ref(), &cons, &x0, &with_seed(c, seed, |c, s| c.seed = s))?
            }
            Solver::Relaxation(c) => relaxation_solve(self.det()?.as_ref(), &x0, c)?,
            Solver::Fd(c) | Solver::Kw(c) => kw_solve(self.sto().as_ref(), &x0, &with_seed(c, seed, |c, s| c.seed = s))?,
            Solver::PenaltyFd(c, r) => {
                penalty_fd_solve(self.det()?.as_ref(), &cons, r, &x0, &with_seed(c, seed, |c, s| c.seed = s))?
            }
            Solver::Analytic(c) => sto_constrained_lipschitz_solve(
                self.sto().as_ref(),
                self.first_constraint()?,
                &x0,
                &with_seed(c, seed, |c, s| c.seed = s),
            )?,
            Solver::ArrowHurwicz(c) => {
                let wrapped: Vec<Degenerate<&dyn FunctionOracle>> = cons.iter().copied().map(Degenerate).collect();
                let fs: Vec<&dyn StochasticOracle> = wrapped.iter().map(|d| d as &dyn StochasticOracle).collect();
                let res =
                    sto_arrow_hurwicz_solve(self.sto().as_ref(), &fs, &x0, &with_seed(c, seed, |c, s| c.seed = s))?;
                let mut t = res.trace;
                t.x_avg = Some(res.x_hat);
                for (i, u) in res.u_hat.iter().enumerate() {
                    t.extras.insert(format!("u_hat_{}", i), *u);
                }
                t
            }
            Solver::ConditionalGradient(c) => {
                sto_conditional_gradient_solve(self.sto().as_ref(), &x0, &with_seed(c, seed, |c, s| c.seed = s))?
            }
            Solver::ReducedGradient(c, a, b) => {
                sto_reduced_gradient_solve(self.sto().as_ref(), a, b, &x0, &with_seed(c, seed, |c, s| c.seed = s))?
            }
            Solver::FeasibleDirections(c) => {
                sto_feasible_directions_solve(self.sto().as_ref(), &cons, &x0, &with_seed(c, seed, |c, s| c.seed = s))?
            }
            Solver::Piyavskii(c) => {
                let f = self.det()?;
                let res = piyavskii_solve(f.as_ref(), cons.first().copied(), c)?;
                let env = res.envelope.to_csv(c.lo, c.hi, 1000);
                let mut t = res.trace;
                t.extras.insert("gap".into(), res.gap);
                t.extras.insert("lower_bound".into(), res.lower_bound);
                return Ok((t, Some(env)));
            }
            Solver::Sqg(c) => sqg_solve(self.sto().as_ref(), &cons, &x0, &with_seed(c, seed, |c, s| c.seed = s))?,
            Solver::AveragedDirection(c) => {
                averaged_direction_solve(self.sto().as_ref(), &x0, &with_seed(c, seed, |c, s| c.seed = s))?
            }
        };
        Ok((trace, None))
    }

    /// f at the averaged iterate, when there is one and f is known there.
    pub fn f_avg(&self, trace: &RunTrace) -> Option<f64> {
        trace.x_avg.as_ref().and_then(|x| self.problem.objective.value(x))
    }
}

fn with_seed<C: Clone>(c: &C, seed: u64, set: impl Fn(&mut C, u64)) -> C {
    let mut c = c.clone();
    set(&mut c, seed);
    c
}
