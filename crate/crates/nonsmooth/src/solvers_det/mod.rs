//! Deterministic pseudogradient solvers: generalized gradient descent with
//! constraint handling, the relaxation algorithms and the averaged-gradient
//! family (averaging procedures, heavy ball, gully step).

pub mod averaged;
pub mod relaxation;

pub use averaged::{averaged_gradient_solve, AveragedConfig, AveragingPolicy, StepRule};
pub use relaxation::{relaxation_solve, RelaxationConfig, Variant};

use serde::{Deserialize, Serialize};

use crate::core::error::{OptError, Result};
use crate::core::linalg::{equality_projector, project_affine, Projector};
use crate::core::oracle::FunctionOracle;
use crate::core::run::{run_iterations, Monitor, StepReport};
use crate::core::trace::{RunTrace, StopRule};
use crate::core::vector::{dist, norm, normalized, Vector};
use crate::schedules::Schedule;

/// How constraints enter the pseudogradient selection.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ConstraintMode {
    #[default]
    None,
    /// One constraint h(x) ≤ 0 (the first of the list).
    SingleH,
    /// Ordered constraints f_j(x) ≤ c_j, satisfied in order of importance
    /// before the objective is minimized.
    Leading { levels: Vec<f64> },
    /// N x = b, handled by projecting gradients onto the null space of N.
    EqualityProjected { n: Vec<Vector>, b: Vector },
}

/// Return to x₀ with scaled-down steps whenever |x − x₀| exceeds `level`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnToStart {
    pub level: f64,
    pub shrink: f64,
    #[serde(default = "default_max_returns")]
    pub max_returns: usize,
}

fn default_max_returns() -> usize {
    50
}

impl ReturnToStart {
    pub fn validate(&self) -> Result<()> {
        if !(self.shrink > 0.0 && self.shrink < 1.0) || !(self.level > 0.0) {
            return Err(OptError::InvalidParameter(
                "return_to_start needs level > 0 and shrink in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

/// Tracks returns to the starting point.
#[derive(Debug, Clone)]
pub(crate) struct Returner {
    cfg: Option<ReturnToStart>,
    x0: Vector,
    pub scale: f64,
    pub returns: usize,
}

impl Returner {
    pub fn new(cfg: Option<ReturnToStart>, x0: &[f64]) -> Result<Self> {
        if let Some(c) = &cfg {
            c.validate()?;
        }
        Ok(Returner {
            cfg,
            x0: x0.to_vec(),
            scale: 1.0,
            returns: 0,
        })
    }

    /// Resets `x` to x₀ if it left the region; true when that happened.
    pub fn check(&mut self, x: &mut Vector) -> bool {
        let Some(c) = self.cfg else { return false };
        if self.returns < c.max_returns && dist(x, &self.x0) > c.level {
            x.clone_from(&self.x0);
            self.scale *= c.shrink;
            self.returns += 1;
            return true;
        }
        false
    }
}

/// Active-boundary tolerance for the h(x) = 0 branch.
pub fn tau_eq(h: f64) -> f64 {
    1e-9 * (1.0 + h.abs())
}

/// i(x) = min{j | f_j(x) > c_j}; `fs.len()` when every level is met.
pub fn leading_index(fs: &[&dyn FunctionOracle], levels: &[f64], x: &[f64]) -> usize {
    fs.iter()
        .zip(levels)
        .position(|(f, c)| f.value(x) > *c)
        .unwrap_or(fs.len())
}

/// Constraint handling resolved against concrete oracles.
pub(crate) struct Constraints<'a> {
    mode: &'a ConstraintMode,
    cons: &'a [&'a dyn FunctionOracle],
    projector: Option<Projector>,
}

impl<'a> Constraints<'a> {
    pub fn new(mode: &'a ConstraintMode, cons: &'a [&'a dyn FunctionOracle], dim: usize) -> Result<Self> {
        let projector = match mode {
            ConstraintMode::None => None,
            ConstraintMode::SingleH => {
                if cons.is_empty() {
                    return Err(OptError::Empty("constraint h"));
                }
                None
            }
            ConstraintMode::Leading { levels } => {
                if levels.len() != cons.len() {
                    return Err(OptError::DimensionMismatch {
                        expected: cons.len(),
                        got: levels.len(),
                    });
                }
                None
            }
            ConstraintMode::EqualityProjected { n, b } => {
                if n.len() != b.len() {
                    return Err(OptError::DimensionMismatch {
                        expected: n.len(),
                        got: b.len(),
                    });
                }
                Some(equality_projector(n, dim)?)
            }
        };
        for c in cons {
            crate::core::error::check_dim(dim, c.dim())?;
        }
        Ok(Constraints {
            mode,
            cons,
            projector,
        })
    }

    /// Starting point adjusted to the mode (projected onto N x = b).
    pub fn start(&self, x0: &[f64]) -> Result<Vector> {
        match self.mode {
            ConstraintMode::EqualityProjected { n, b } => project_affine(n, b, x0),
            _ => Ok(x0.to_vec()),
        }
    }

    /// Deterministic selection from G(x): h > τ → g_h, |h| ≤ τ → ½g_f + ½g_h,
    /// otherwise g_f. Calls `gf` only when the objective is needed.
    pub fn select(&self, x: &[f64], gf: &mut dyn FnMut(&[f64]) -> Vector) -> Vector {
        match self.mode {
            ConstraintMode::None => gf(x),
            ConstraintMode::SingleH => {
                let (h, gh) = self.cons[0].value_grad(x);
                let tau = tau_eq(h);
                if h > tau {
                    gh
                } else if h >= -tau {
                    let g = gf(x);
                    g.iter().zip(&gh).map(|(a, b)| 0.5 * a + 0.5 * b).collect()
                } else {
                    gf(x)
                }
            }
            ConstraintMode::Leading { levels } => {
                let i = leading_index(self.cons, levels, x);
                if i < self.cons.len() {
                    self.cons[i].gradient(x)
                } else {
                    gf(x)
                }
            }
            ConstraintMode::EqualityProjected { .. } => {
                let p = self.projector.as_ref().expect("built for this mode");
                p.apply(&gf(x))
            }
        }
    }

    /// Stochastic-method switch: g_h whenever h(x) ≥ 0.
    pub fn select_switch(&self, x: &[f64], gf: &mut dyn FnMut(&[f64]) -> Vector) -> Vector {
        match self.mode {
            ConstraintMode::SingleH => {
                let (h, gh) = self.cons[0].value_grad(x);
                if h >= 0.0 {
                    gh
                } else {
                    gf(x)
                }
            }
            _ => self.select(x, gf),
        }
    }

    pub fn violation(&self, x: &[f64]) -> f64 {
        match self.mode {
            ConstraintMode::None => 0.0,
            ConstraintMode::SingleH => self.cons[0].value(x).max(0.0),
            ConstraintMode::Leading { levels } => self
                .cons
                .iter()
                .zip(levels)
                .map(|(f, c)| (f.value(x) - c).max(0.0))
                .fold(0.0, f64::max),
            ConstraintMode::EqualityProjected { n, b } => n
                .iter()
                .zip(b)
                .map(|(r, bi)| (crate::core::vector::dot(r, x) - bi).abs())
                .fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GgdConfig {
    pub schedule: Schedule,
    #[serde(default)]
    pub normalize: bool,
    #[serde(default)]
    pub constraint: ConstraintMode,
    #[serde(default)]
    pub stop: StopRule,
    #[serde(default)]
    pub return_to_start: Option<ReturnToStart>,
    #[serde(default)]
    pub seed: u64,
}

impl GgdConfig {
    pub fn new(schedule: Schedule, max_iter: usize) -> Self {
        GgdConfig {
            schedule,
            normalize: false,
            constraint: ConstraintMode::None,
            stop: StopRule::iterations(max_iter),
            return_to_start: None,
            seed: 0,
        }
    }
}

/// x_{k+1} = x_k − ρ_k g_k with g_k selected from G(x_k) per the constraint
/// mode, optionally normalized.
pub fn ggd_solve(
    f: &dyn FunctionOracle,
    constraints: &[&dyn FunctionOracle],
    x0: &[f64],
    cfg: &GgdConfig,
) -> Result<RunTrace> {
    crate::core::error::check_dim(f.dim(), x0.len())?;
    let cons = Constraints::new(&cfg.constraint, constraints, f.dim())?;
    let mut x = cons.start(x0)?;
    let mut ret = Returner::new(cfg.return_to_start, &x)?;
    let mut calls = 0u64;
    let objective = |x: &[f64]| f.value(x);
    let violation = |x: &[f64]| cons.violation(x);
    let mon = Monitor {
        objective: &objective,
        violation: &violation,
        residual_oracle: match cfg.constraint {
            ConstraintMode::None => Some(f),
            _ => None,
        },
    };
    let end = run_iterations(&cfg.stop, cfg.seed, &mut x, &mon, |t, x, _| {
        let mut g = cons.select(x, &mut |y| {
            calls += 1;
            f.gradient(y)
        });
        let gn = norm(&g);
        if cfg.normalize {
            g = normalized(&g);
        }
        let rho = ret.scale * cfg.schedule.rho(t);
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= rho * gi;
        }
        ret.check(x);
        Ok(StepReport {
            residual: gn,
            step: rho,
        })
    })?;
    let mut rec = end.recorder;
    rec.set("returns", ret.returns as f64);
    Ok(rec.finish(
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
    use crate::core::oracle::FnOracle;
    use crate::core::rng::stream;
    use crate::problems::{max_abs_oracle, unit_circle_constraint};
    use crate::schedules::Power;
    use rand::Rng;

    fn half_sq(n: usize) -> FnOracle {
        FnOracle::new(n, |x| 0.5 * x.iter().map(|v| v * v).sum::<f64>(), |x| x.to_vec())
    }

    #[test]
    fn zero_gradient_keeps_the_iterate() {
        let f = half_sq(3);
        let cfg = GgdConfig::new(Schedule::steps(Power::new(1.0, 1.0)), 50);
        let tr = ggd_solve(&f, &[], &[0.0; 3], &cfg).unwrap();
        assert_eq!(tr.x_final, vec![0.0; 3]);
        assert_eq!(tr.rows.len(), 50);
    }

    #[test]
    fn normalized_steps_have_length_rho() {
        let f = max_abs_oracle(4);
        let mut cfg = GgdConfig::new(Schedule::steps(Power::new(0.3, 0.5)), 200);
        cfg.normalize = true;
        let mut x = vec![0.7, -0.2, 0.1, 0.9];
        for t in 0..200 {
            let mut one = cfg.clone();
            one.stop = StopRule::iterations(1);
            one.schedule.rho.k0 = 1.0 + t as f64;
            let tr = ggd_solve(&f, &[], &x, &one).unwrap();
            let step = dist(&tr.x_final, &x);
            assert!((step - one.schedule.rho(0)).abs() <= 1e-12);
            x = tr.x_final;
        }
    }

    #[test]
    fn max_abs_desk_run() {
        let f = max_abs_oracle(10);
        let mut cfg = GgdConfig::new(Schedule::steps(Power::new(1.0, 1.0)), 200_000);
        cfg.normalize = true;
        cfg.stop.log_every = 10_000;
        let x0: Vector = (0..10).map(|i| if i % 2 == 0 { 0.9 } else { -0.6 }).collect();
        let tr = ggd_solve(&f, &[], &x0, &cfg).unwrap();
        assert!(tr.final_f() <= 1e-2, "{}", tr.final_f());
    }

    #[test]
    fn leading_mode_reaches_the_circle() {
        let h = unit_circle_constraint(2);
        let f = FnOracle::linear(vec![1.0, 0.0], 0.0);
        let mut cfg = GgdConfig::new(Schedule::steps(Power::new(0.5, 0.7)), 50_000);
        cfg.normalize = true;
        cfg.constraint = ConstraintMode::Leading { levels: vec![0.0] };
        cfg.stop.log_every = 1000;
        let tr = ggd_solve(&f, &[&h], &[0.3, 0.8], &cfg).unwrap();
        let x = &tr.x_final;
        assert!((x[0] + 1.0).abs() <= 0.05, "{:?}", x);
        assert!((norm(x) - 1.0).abs() <= 0.05);
    }

    #[test]
    fn single_h_mode_reaches_the_circle() {
        let h = unit_circle_constraint(2);
        let f = FnOracle::linear(vec![1.0, 0.0], 0.0);
        let mut cfg = GgdConfig::new(Schedule::steps(Power::new(0.5, 0.7)), 50_000);
        cfg.normalize = true;
        cfg.constraint = ConstraintMode::SingleH;
        let tr = ggd_solve(&f, &[&h], &[0.3, 0.8], &cfg).unwrap();
        assert!((tr.x_final[0] + 1.0).abs() <= 0.05);
        assert!(tr.rows.last().unwrap().h_violation <= 0.05);
    }

    #[test]
    fn boundary_selection_is_the_midpoint() {
        let h = FnOracle::linear(vec![1.0, 0.0], -1.0);
        let f = FnOracle::linear(vec![0.0, 2.0], 0.0);
        let hs: [&dyn FunctionOracle; 1] = [&h];
        let mode = ConstraintMode::SingleH;
        let c = Constraints::new(&mode, &hs, 2).unwrap();
        assert_eq!(c.select(&[1.0, 5.0], &mut |y| f.gradient(y)), vec![0.5, 1.0]);
        assert_eq!(c.select(&[2.0, 5.0], &mut |y| f.gradient(y)), vec![1.0, 0.0]);
        assert_eq!(c.select(&[0.0, 5.0], &mut |y| f.gradient(y)), vec![0.0, 2.0]);
        assert_eq!(c.select_switch(&[1.0, 5.0], &mut |y| f.gradient(y)), vec![1.0, 0.0]);
    }

    #[test]
    fn equality_mode_stays_on_the_manifold() {
        let f = FnOracle::new(3, |x| (x[0] - 3.0).abs() + x[1].abs() + x[2].abs(), |x| {
            vec![
                if x[0] >= 3.0 { 1.0 } else { -1.0 },
                if x[1] >= 0.0 { 1.0 } else { -1.0 },
                if x[2] >= 0.0 { 1.0 } else { -1.0 },
            ]
        });
        let mut cfg = GgdConfig::new(Schedule::steps(Power::new(0.5, 0.75)), 5000);
        cfg.constraint = ConstraintMode::EqualityProjected {
            n: vec![vec![1.0, 1.0, 1.0]],
            b: vec![1.0],
        };
        let tr = ggd_solve(&f, &[], &[0.0, 0.0, 0.0], &cfg).unwrap();
        assert!(tr.rows.iter().all(|r| r.h_violation <= 1e-10));
        assert!((tr.x_final.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn leading_index_is_upper_semicontinuous() {
        let c1 = unit_circle_constraint(2);
        let c2 = FnOracle::linear(vec![1.0, -1.0], 0.0);
        let fs: [&dyn FunctionOracle; 2] = [&c1, &c2];
        let levels = [0.0, 0.2];
        let mut rng = stream(5, 0);
        for _ in 0..5000 {
            let x: Vector = (0..2).map(|_| 3.0 * rng.gen::<f64>() - 1.5).collect();
            let i = leading_index(&fs, &levels, &x);
            for _ in 0..4 {
                let y: Vector = x.iter().map(|v| v + 1e-12 * (2.0 * rng.gen::<f64>() - 1.0)).collect();
                assert!(leading_index(&fs, &levels, &y) <= i);
            }
        }
    }

    #[test]
    fn return_to_start_is_finite() {
        // Large constant steps overshoot; returns shrink them until the run
        // stays within the region.
        let f = max_abs_oracle(3);
        let mut cfg = GgdConfig::new(Schedule::steps(Power::constant(4.0)), 2000);
        cfg.return_to_start = Some(ReturnToStart {
            level: 2.0,
            shrink: 0.5,
            max_returns: 30,
        });
        let tr = ggd_solve(&f, &[], &[1.0, 1.0, 1.0], &cfg).unwrap();
        let r = tr.extra("returns").unwrap();
        assert!(r >= 1.0 && r < 30.0, "{}", r);
    }

    #[test]
    fn trace_replays_exactly() {
        let f = max_abs_oracle(3);
        let cfg = GgdConfig::new(Schedule::steps(Power::new(1.0, 0.6)), 300);
        let a = ggd_solve(&f, &[], &[1.0, 0.5, -0.2], &cfg).unwrap();
        let b = ggd_solve(&f, &[], &[1.0, 0.5, -0.2], &cfg).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
    }
}
