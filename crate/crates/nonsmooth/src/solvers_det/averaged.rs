//! Averaged-gradient methods: moves along an average P^k of recent
//! pseudogradients (window averages, heavy ball, gully step).

use serde::{Deserialize, Serialize};

use super::{ConstraintMode, Constraints, ReturnToStart, Returner};
use crate::core::error::{check_dim, OptError, Result};
use crate::core::oracle::FunctionOracle;
use crate::core::run::{run_iterations, Monitor, StepReport};
use crate::core::trace::{RunTrace, StopRule};
use crate::core::vector::{norm, normalized, Vector};
use crate::schedules::{AdaptiveRule, AdaptiveStep, DirectionRule, DirectionState, Power, Schedule};

/// ν_k = 1/(‖P^k‖ + NU_EPS)
pub const NU_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepRule {
    /// ρ_k from the schedule; the averaging window restarts once its ρ-mass
    /// exceeds `window_mass`.
    Schedule {
        #[serde(default = "default_window_mass")]
        window_mass: f64,
    },
    R2 { m0: f64, theta0: f64 },
    R4 {
        m0: f64,
        theta0: f64,
        #[serde(default = "default_memory")]
        memory: usize,
    },
}

fn default_window_mass() -> f64 {
    1.0
}

fn default_memory() -> usize {
    1000
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AveragingPolicy {
    /// P^k from a direction rule over the restart window (P1 = L3, P2, P3).
    Averaged { rule: DirectionRule, step: StepRule },
    /// P^k = (1 − γ_k) P^{k−1} + γ_k g^k
    HeavyBall { gamma: Power },
    /// Gully step with multipliers λ_k; λ = 0 every `recovery_every`
    /// iterations (0 disables recovery points).
    Gully {
        lambda: Power,
        #[serde(default = "default_recovery")]
        recovery_every: usize,
    },
}

fn default_recovery() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedConfig {
    pub schedule: Schedule,
    pub policy: AveragingPolicy,
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
    /// Check after every step that P^k is a convex combination of the window
    /// gradients; the worst deviations land in the trace extras.
    #[serde(default)]
    pub audit: bool,
}

impl AveragedConfig {
    pub fn new(schedule: Schedule, policy: AveragingPolicy, max_iter: usize) -> Self {
        AveragedConfig {
            schedule,
            policy,
            normalize: false,
            constraint: ConstraintMode::None,
            stop: StopRule::iterations(max_iter),
            return_to_start: None,
            seed: 0,
            audit: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let AveragingPolicy::Gully {
            lambda,
            recovery_every,
        } = &self.policy
        {
            let lmax = lambda.at(0).max(lambda.cap.unwrap_or(f64::INFINITY).min(lambda.at(0)));
            if lambda.at(0) < 0.0 || (recovery_every == &0 && lmax >= 1.0) {
                return Err(OptError::InvalidParameter(
                    "gully multipliers need 0 ≤ λ_k < 1 unless recovery points are set".into(),
                ));
            }
        }
        if let AveragingPolicy::HeavyBall { gamma } = &self.policy {
            let g0 = gamma.at(0);
            if !(g0 > 0.0 && g0 <= 1.0) {
                return Err(OptError::InvalidParameter("heavy-ball γ_k must lie in (0, 1]".into()));
            }
        }
        Ok(())
    }
}

enum State {
    Window {
        dir: DirectionState,
        adaptive: Option<AdaptiveStep>,
        mass: f64,
        window_mass: f64,
        ws: usize,
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
    fn new(policy: &AveragingPolicy, x0: &[f64]) -> Self {
        match *policy {
            AveragingPolicy::Averaged { rule, step } => {
                let (adaptive, window_mass) = match step {
                    StepRule::Schedule { window_mass } => (None, window_mass),
                    StepRule::R2 { m0, theta0 } => (Some(AdaptiveStep::new(AdaptiveRule::R2, m0, theta0)), 0.0),
                    StepRule::R4 { m0, theta0, memory } => (
                        Some(AdaptiveStep::new(AdaptiveRule::R4, m0, theta0).with_cap(memory)),
                        0.0,
                    ),
                };
                State::Window {
                    dir: DirectionState::new(rule),
                    adaptive,
                    mass: 0.0,
                    window_mass,
                    ws: 0,
                }
            }
            AveragingPolicy::HeavyBall { .. } => State::Momentum { p: None },
            AveragingPolicy::Gully { .. } => State::Gully {
                prev_x: x0.to_vec(),
                prev_rho_g: None,
            },
        }
    }

    fn reset(&mut self, x0: &[f64]) {
        match self {
            State::Window { dir, mass, .. } => {
                dir.restart();
                *mass = 0.0;
            }
            State::Momentum { p } => *p = None,
            State::Gully { prev_x, prev_rho_g } => {
                prev_x.clone_from(&x0.to_vec());
                *prev_rho_g = None;
            }
        }
    }
}

#[derive(Default)]
struct HullAudit {
    min_coeff: f64,
    sum_err: f64,
    recon_err: f64,
}

/// Runs the averaged-gradient family. The residual column holds ‖P^k‖ for
/// window averages and ‖g^k‖ for heavy ball and gully.
pub fn averaged_gradient_solve(
    f: &dyn FunctionOracle,
    constraints: &[&dyn FunctionOracle],
    x0: &[f64],
    cfg: &AveragedConfig,
) -> Result<RunTrace> {
    check_dim(f.dim(), x0.len())?;
    cfg.validate()?;
    let cons = Constraints::new(&cfg.constraint, constraints, f.dim())?;
    let mut x = cons.start(x0)?;
    let start = x.clone();
    let mut ret = Returner::new(cfg.return_to_start, &x)?;
    let mut state = State::new(&cfg.policy, &x);
    let mut calls = 0u64;
    let mut audit = HullAudit {
        min_coeff: f64::INFINITY,
        ..Default::default()
    };
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
        let report = match (&mut state, &cfg.policy) {
            (
                State::Window {
                    dir,
                    adaptive,
                    mass,
                    window_mass,
                    ws,
                },
                _,
            ) => {
                let (rho, restart) = match adaptive {
                    Some(a) => {
                        let rho = a.step(x, &g);
                        let moved = a.window_start != *ws;
                        *ws = a.window_start;
                        (rho, moved)
                    }
                    None => {
                        let rho = cfg.schedule.rho(t);
                        *mass += rho;
                        (rho, *mass > *window_mass)
                    }
                };
                let p = dir.update(&g, rho);
                if cfg.audit {
                    check_hull(dir, &p, &mut audit);
                }
                let pn = norm(&p);
                let s = ret.scale * rho / (pn + NU_EPS);
                for (xi, pi) in x.iter_mut().zip(&p) {
                    *xi -= s * pi;
                }
                if restart {
                    // r_{k+1} = k: the next window starts from the current gradient.
                    dir.restart();
                    dir.update(&g, rho);
                    *mass = rho;
                }
                StepReport {
                    residual: pn,
                    step: ret.scale * rho,
                }
            }
            (State::Momentum { p }, AveragingPolicy::HeavyBall { gamma }) => {
                let rho = ret.scale * cfg.schedule.rho(t);
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
            (State::Gully { prev_x, prev_rho_g }, AveragingPolicy::Gully { lambda, recovery_every }) => {
                let rho = ret.scale * cfg.schedule.rho(t);
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
        Ok(report)
    })?;
    let mut rec = end.recorder;
    rec.set("returns", ret.returns as f64);
    if cfg.audit {
        rec.set("hull_min_coeff", audit.min_coeff);
        rec.set("hull_sum_err", audit.sum_err);
        rec.set("hull_recon_err", audit.recon_err);
    }
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

fn check_hull(dir: &DirectionState, p: &[f64], audit: &mut HullAudit) {
    let (pts, coeffs) = dir.hull();
    let mut recon = vec![0.0; p.len()];
    for (pt, c) in pts.iter().zip(coeffs) {
        for (r, v) in recon.iter_mut().zip(pt) {
            *r += c * v;
        }
    }
    let err = recon.iter().zip(p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let sum: f64 = coeffs.iter().sum();
    audit.min_coeff = coeffs.iter().copied().fold(audit.min_coeff, f64::min);
    audit.sum_err = audit.sum_err.max((sum - 1.0).abs());
    audit.recon_err = audit.recon_err.max(err);
}

#[cfg(test)]
mod tests {
    use super::super::{ggd_solve, GgdConfig};
    use super::*;
    use crate::problems::{abs_sum_oracle, max_abs_oracle, ravine_oracle};

    fn ggd_cfg(sched: Schedule, normalize: bool, n: usize) -> GgdConfig {
        let mut c = GgdConfig::new(sched, n);
        c.normalize = normalize;
        c
    }

    #[test]
    fn unit_momentum_is_plain_descent() {
        let f = max_abs_oracle(4);
        let x0 = [0.9, -0.3, 0.4, 0.1];
        for normalize in [false, true] {
            let sched = Schedule::steps(Power::new(0.5, 0.7));
            let g = ggd_solve(&f, &[], &x0, &ggd_cfg(sched.clone(), normalize, 500)).unwrap();
            let mut cfg = AveragedConfig::new(
                sched,
                AveragingPolicy::HeavyBall {
                    gamma: Power::constant(1.0),
                },
                500,
            );
            cfg.normalize = normalize;
            let h = averaged_gradient_solve(&f, &[], &x0, &cfg).unwrap();
            assert_eq!(g.rows, h.rows);
            assert_eq!(g.x_final, h.x_final);
        }
    }

    #[test]
    fn zero_gully_multiplier_is_plain_descent() {
        let f = abs_sum_oracle(3);
        let x0 = [0.9, -0.3, 0.4];
        let sched = Schedule::steps(Power::new(1.0, 0.8));
        let g = ggd_solve(&f, &[], &x0, &ggd_cfg(sched.clone(), false, 400)).unwrap();
        let cfg = AveragedConfig::new(
            sched,
            AveragingPolicy::Gully {
                lambda: Power::constant(0.0),
                recovery_every: 0,
            },
            400,
        );
        let h = averaged_gradient_solve(&f, &[], &x0, &cfg).unwrap();
        assert_eq!(g.rows, h.rows);
        assert_eq!(g.x_final, h.x_final);
    }

    #[test]
    fn ravine_heavy_ball() {
        let f = ravine_oracle(100.0);
        // Stability limit of the constant-step recursion: ρ < 2(2 − γ)/(γ L).
        let gamma = 0.1;
        let rho_star = 2.0 * (2.0 - gamma) / (gamma * 100.0);
        let mut cfg = AveragedConfig::new(
            Schedule::steps(Power::constant(0.9 * rho_star)),
            AveragingPolicy::HeavyBall {
                gamma: Power::constant(gamma),
            },
            5000,
        );
        cfg.stop.target_f = Some(1e-6);
        let tr = averaged_gradient_solve(&f, &[], &[1.0, 1.0], &cfg).unwrap();
        assert!(tr.final_f() <= 1e-6, "{}", tr.final_f());
        assert!(tr.iterations <= 5000);
    }

    #[test]
    fn gully_recovers_on_abs_sum() {
        let f = abs_sum_oracle(3);
        let cfg = AveragedConfig::new(
            Schedule::steps(Power::new(1.0, 1.0)),
            AveragingPolicy::Gully {
                lambda: Power::constant(0.5),
                recovery_every: 10,
            },
            20_000,
        );
        let tr = averaged_gradient_solve(&f, &[], &[0.9, -0.3, 0.4], &cfg).unwrap();
        assert!(tr.final_f() <= 0.05, "{}", tr.final_f());
    }

    #[test]
    fn window_averages_stay_in_the_hull() {
        let f = max_abs_oracle(5);
        let x0 = [0.9, -0.7, 0.4, 0.1, -0.2];
        let policies = [
            (DirectionRule::L3, StepRule::Schedule { window_mass: 1.0 }),
            (DirectionRule::P2, StepRule::Schedule { window_mass: 1.0 }),
            (DirectionRule::P3, StepRule::Schedule { window_mass: 0.5 }),
            (DirectionRule::P3, StepRule::R2 { m0: 0.1, theta0: 0.5 }),
            (
                DirectionRule::P2,
                StepRule::R4 {
                    m0: 0.1,
                    theta0: 0.5,
                    memory: 200,
                },
            ),
        ];
        for (rule, step) in policies {
            let mut cfg = AveragedConfig::new(
                Schedule::steps(Power::new(0.5, 0.8)),
                AveragingPolicy::Averaged { rule, step },
                2000,
            );
            cfg.audit = true;
            let tr = averaged_gradient_solve(&f, &[], &x0, &cfg).unwrap();
            assert!(tr.extra("hull_min_coeff").unwrap() >= -1e-12, "{:?}", rule);
            assert!(tr.extra("hull_sum_err").unwrap() <= 1e-9, "{:?}", rule);
            assert!(tr.extra("hull_recon_err").unwrap() <= 1e-9, "{:?}", rule);
            assert!(tr.final_f() < f.value(&x0), "{:?} {:?}", rule, step);
        }
    }

    #[test]
    fn averaged_p3_converges_on_max_abs() {
        let f = max_abs_oracle(5);
        let cfg = AveragedConfig::new(
            Schedule::steps(Power::new(1.0, 1.0)),
            AveragingPolicy::Averaged {
                rule: DirectionRule::P3,
                step: StepRule::Schedule { window_mass: 0.5 },
            },
            50_000,
        );
        let tr = averaged_gradient_solve(&f, &[], &[0.9, -0.7, 0.4, 0.1, -0.2], &cfg).unwrap();
        assert!(tr.final_f() <= 0.02, "{}", tr.final_f());
    }

    #[test]
    fn gully_without_recovery_needs_small_multipliers() {
        let cfg = AveragedConfig::new(
            Schedule::steps(Power::new(1.0, 1.0)),
            AveragingPolicy::Gully {
                lambda: Power::constant(1.0),
                recovery_every: 0,
            },
            10,
        );
        assert!(cfg.validate().is_err());
    }
}
