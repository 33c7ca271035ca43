//! Methods built on linear subproblems with an averaged direction z_k:
//! conditional gradient, reduced gradient on {Ax = b, x ≥ 0}, and feasible
//! directions for smooth inequality constraints.

use serde::{Deserialize, Serialize};

use super::{mean_or_nan, Estimator};
use crate::core::error::{check_dim, OptError, Result};
use crate::core::linalg::solve;
use crate::core::lp::lp_solve;
use crate::core::oracle::{Degenerate, FunctionOracle, StochasticOracle};
use crate::core::rng::RunRng;
use crate::core::run::{run_iterations, Monitor, StepReport};
use crate::core::sets::{FeasibleSet, StepLimit};
use crate::core::trace::{RunTrace, StopRule};
use crate::core::vector::{dot, norm, norm_inf, Vector};
use crate::schedules::{Power, Schedule};
use crate::smoothing::Averager;

/// ρ = k⁻¹, a = k^{−2/3}, α = k^{−1/6}.
fn averaged_schedule() -> Schedule {
    Schedule::steps(Power::new(1.0, 1.0))
        .with_alpha(Power::new(1.0, 1.0 / 6.0))
        .with_a(Power::new(1.0, 2.0 / 3.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CgConfig {
    pub schedule: Schedule,
    #[serde(default)]
    pub estimator: Estimator,
    /// Bounded X with a linear-minimization oracle.
    pub set: FeasibleSet,
    #[serde(default)]
    pub stop: StopRule,
    #[serde(default)]
    pub seed: u64,
}

impl CgConfig {
    pub fn new(set: FeasibleSet, max_iter: usize) -> Self {
        CgConfig {
            schedule: averaged_schedule(),
            estimator: Estimator::default(),
            set,
            stop: StopRule::iterations(max_iter),
            seed: 0,
        }
    }
}

/// z ← z + a_k(ξ_k − z); x̄ = argmin_X ⟨z, x⟩; x ← x + ρ_k (x̄ − x) with
/// ρ_k clipped to [0, 1]. The residual column is the gap ⟨z, x − x̄⟩.
pub(crate) fn cg_core(f: &dyn StochasticOracle, x0: &[f64], cfg: &CgConfig) -> Result<RunTrace> {
    cfg.estimator.check(&cfg.schedule)?;
    if !cfg.set.is_bounded() {
        return Err(OptError::UnboundedSet);
    }
    check_dim(f.dim(), x0.len())?;
    check_dim(cfg.set.dim(), x0.len())?;
    let mut x = cfg.set.project(x0)?;
    let mut rng = RunRng::new(cfg.seed, 0);
    let mut z = Averager::new(vec![0.0; x.len()]);
    let cost = cfg.estimator.cost(x.len());
    let mut calls = 0u64;
    let objective = |x: &[f64]| mean_or_nan(f, x);
    let violation = |x: &[f64]| cfg.set.violation(x);
    let mon = Monitor {
        objective: &objective,
        violation: &violation,
        residual_oracle: None,
    };
    let end = run_iterations(&cfg.stop, cfg.seed, &mut x, &mon, |t, x, _| {
        let xi = cfg.estimator.sample(
            f,
            x,
            cfg.schedule.alpha(t),
            cfg.schedule.delta(t),
            &mut rng,
        )?;
        calls += cost;
        z.update(&xi, cfg.schedule.a(t));
        let target = cfg.set.linmin(&z.z)?;
        let gap: f64 = z.z.iter().zip(x.iter()).zip(&target).map(|((zi, a), b)| zi * (a - b)).sum();
        let rho = cfg.schedule.rho(t).clamp(0.0, 1.0);
        for (xi, ti) in x.iter_mut().zip(&target) {
            *xi += rho * (ti - *xi);
        }
        Ok(StepReport {
            residual: gap,
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

/// Conditional gradient with averaged finite-difference directions.
pub fn conditional_gradient_solve(f: &dyn FunctionOracle, x0: &[f64], cfg: &CgConfig) -> Result<RunTrace> {
    cg_core(&Degenerate(f), x0, cfg)
}

/// One reduced-gradient step's data at a feasible x.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedDirection {
    /// Basic indices, sorted ascending.
    pub basis: Vec<usize>,
    /// Nonbasic indices, sorted ascending.
    pub nonbasic: Vec<usize>,
    /// r_N in the order of `nonbasic`.
    pub r: Vector,
    pub d: Vector,
    /// Largest λ with x + λ d ≥ 0 and the coordinate that blocks it.
    pub lambda: StepLimit,
    pub blocking: Option<usize>,
}

/// Basis = the m largest components of x (lowest index on ties);
/// r_N = z_N − Nᵀw with Bᵀw = z_B; d_j = −r_j when r_j ≤ 0 and −x_j r_j
/// otherwise; d_B = −B⁻¹N d_N.
pub fn reduced_gradient_direction(a: &[Vector], z: &[f64], x: &[f64]) -> Result<ReducedDirection> {
    let m = a.len();
    let n = x.len();
    check_dim(n, z.len())?;
    for row in a {
        check_dim(n, row.len())?;
    }
    if m == 0 || m > n {
        return Err(OptError::InvalidParameter(format!("need 1 <= m <= n, got m = {m}, n = {n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| x[j].total_cmp(&x[i]).then(i.cmp(&j)));
    let mut basis = order[..m].to_vec();
    basis.sort_unstable();
    let nonbasic: Vec<usize> = (0..n).filter(|j| !basis.contains(j)).collect();

    // Bᵀ w = z_B: row i of Bᵀ is column basis[i] of A.
    let bt: Vec<Vector> = basis.iter().map(|&j| a.iter().map(|row| row[j]).collect()).collect();
    let zb: Vector = basis.iter().map(|&j| z[j]).collect();
    let w = solve(&bt, &zb).ok_or_else(|| OptError::SingularBasis(basis.clone()))?;
    let r: Vector = nonbasic
        .iter()
        .map(|&j| z[j] - a.iter().zip(&w).map(|(row, wi)| row[j] * wi).sum::<f64>())
        .collect();

    let mut d = vec![0.0; n];
    for (&j, &rj) in nonbasic.iter().zip(&r) {
        d[j] = if rj <= 0.0 { -rj } else { -x[j] * rj };
    }
    // B d_B = −N d_N
    let b_rows: Vec<Vector> = a.iter().map(|row| basis.iter().map(|&j| row[j]).collect()).collect();
    let rhs: Vector = a
        .iter()
        .map(|row| -nonbasic.iter().map(|&j| row[j] * d[j]).sum::<f64>())
        .collect();
    let db = solve(&b_rows, &rhs).ok_or_else(|| OptError::SingularBasis(basis.clone()))?;
    for (&j, v) in basis.iter().zip(db) {
        d[j] = v;
    }

    let mut lambda = StepLimit::Infinite;
    let mut blocking = None;
    for j in 0..n {
        if d[j] < 0.0 {
            let l = -x[j] / d[j];
            let better = match lambda {
                StepLimit::Infinite => true,
                StepLimit::Finite(cur) => l < cur,
            };
            if better {
                lambda = StepLimit::Finite(l);
                blocking = Some(j);
            }
        }
    }
    Ok(ReducedDirection {
        basis,
        nonbasic,
        r,
        d,
        lambda,
        blocking,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedGradientConfig {
    pub schedule: Schedule,
    #[serde(default = "exact")]
    pub estimator: Estimator,
    #[serde(default)]
    pub stop: StopRule,
    #[serde(default)]
    pub seed: u64,
}

fn exact() -> Estimator {
    Estimator::Exact
}

impl ReducedGradientConfig {
    pub fn new(max_iter: usize) -> Self {
        ReducedGradientConfig {
            schedule: averaged_schedule(),
            estimator: Estimator::Exact,
            stop: StopRule::iterations(max_iter),
            seed: 0,
        }
    }
}

fn equality_residual(a: &[Vector], b: &[f64], x: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(row, bi)| (dot(row, x) - bi).abs())
        .fold(0.0, f64::max)
}

/// Reduced-gradient iteration on {Ax = b, x ≥ 0} with an averaged gradient:
/// x ← x + σ_k d_k, σ_k = min(ρ_k, λ_k). Basic variables are re-solved from
/// the equations after each step so Ax = b holds to rounding.
pub(crate) fn rg_core(
    f: &dyn StochasticOracle,
    a: &[Vector],
    b: &[f64],
    x0: &[f64],
    cfg: &ReducedGradientConfig,
) -> Result<RunTrace> {
    cfg.estimator.check(&cfg.schedule)?;
    check_dim(f.dim(), x0.len())?;
    check_dim(a.len(), b.len())?;
    let tol = 1e-9 * (1.0 + norm_inf(b));
    let viol = equality_residual(a, b, x0).max(x0.iter().map(|v| -v).fold(0.0, f64::max));
    if viol > tol {
        return Err(OptError::InfeasiblePoint(viol));
    }
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut rng = RunRng::new(cfg.seed, 0);
    let mut z = Averager::new(vec![0.0; n]);
    let cost = cfg.estimator.cost(n);
    let mut calls = 0u64;
    let objective = |x: &[f64]| mean_or_nan(f, x);
    let violation = |x: &[f64]| {
        equality_residual(a, b, x).max(x.iter().map(|v| (-v).max(0.0)).fold(0.0, f64::max))
    };
    let mon = Monitor {
        objective: &objective,
        violation: &violation,
        residual_oracle: None,
    };
    let end = run_iterations(&cfg.stop, cfg.seed, &mut x, &mon, |t, x, rec| {
        let xi = cfg.estimator.sample(
            f,
            x,
            cfg.schedule.alpha(t),
            cfg.schedule.delta(t),
            &mut rng,
        )?;
        calls += cost;
        z.update(&xi, cfg.schedule.a(t));
        let rd = reduced_gradient_direction(a, &z.z, x)?;
        let rho = cfg.schedule.rho(t);
        let sigma = rd.lambda.min_with(rho);
        for (xj, dj) in x.iter_mut().zip(&rd.d) {
            *xj += sigma * dj;
        }
        let blocked = match (rd.lambda, rd.blocking) {
            (StepLimit::Finite(l), Some(j)) if l <= rho => {
                x[j] = 0.0;
                rec.bump("blocked_steps", 1.0);
                Some(j)
            }
            _ => None,
        };
        // x_B = B⁻¹(b − N x_N)
        let b_rows: Vec<Vector> = a.iter().map(|row| rd.basis.iter().map(|&j| row[j]).collect()).collect();
        let rhs: Vector = a
            .iter()
            .zip(b)
            .map(|(row, bi)| bi - rd.nonbasic.iter().map(|&j| row[j] * x[j]).sum::<f64>())
            .collect();
        let xb = solve(&b_rows, &rhs).ok_or_else(|| OptError::SingularBasis(rd.basis.clone()))?;
        for (&j, v) in rd.basis.iter().zip(xb) {
            x[j] = if Some(j) == blocked { 0.0 } else { v };
        }
        Ok(StepReport {
            residual: norm(&rd.d),
            step: sigma,
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

/// Reduced-gradient method for min f(x) over {Ax = b, x ≥ 0}.
pub fn reduced_gradient_solve(
    f: &dyn FunctionOracle,
    a: &[Vector],
    b: &[f64],
    x0: &[f64],
    cfg: &ReducedGradientConfig,
) -> Result<RunTrace> {
    rg_core(&Degenerate(f), a, b, x0, cfg)
}

fn default_bisection() -> usize {
    60
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibleDirectionsConfig {
    pub schedule: Schedule,
    #[serde(default = "exact")]
    pub estimator: Estimator,
    /// Optional linear part of the feasible region (box or polytope).
    #[serde(default)]
    pub set: Option<FeasibleSet>,
    /// Bisection steps for the longest feasible step along d_k.
    #[serde(default = "default_bisection")]
    pub bisection: usize,
    #[serde(default)]
    pub stop: StopRule,
    #[serde(default)]
    pub seed: u64,
}

impl FeasibleDirectionsConfig {
    pub fn new(max_iter: usize) -> Self {
        FeasibleDirectionsConfig {
            schedule: averaged_schedule(),
            estimator: Estimator::Exact,
            set: None,
            bisection: default_bisection(),
            stop: StopRule::iterations(max_iter),
            seed: 0,
        }
    }
}

/// Rows (a_i, b_i) with a_i·x ≤ b_i describing a box or polytope.
fn linear_rows(set: &Option<FeasibleSet>, n: usize) -> Result<(Vec<Vector>, Vector)> {
    match set {
        None | Some(FeasibleSet::Whole { .. }) => Ok((vec![], vec![])),
        Some(FeasibleSet::Box { lo, hi }) => {
            check_dim(n, lo.len())?;
            let mut a = Vec::new();
            let mut b = Vec::new();
            for j in 0..n {
                if hi[j].is_finite() {
                    let mut r = vec![0.0; n];
                    r[j] = 1.0;
                    a.push(r);
                    b.push(hi[j]);
                }
                if lo[j].is_finite() {
                    let mut r = vec![0.0; n];
                    r[j] = -1.0;
                    a.push(r);
                    b.push(-lo[j]);
                }
            }
            Ok((a, b))
        }
        Some(FeasibleSet::Polytope { a, b }) => Ok((a.clone(), b.clone())),
        Some(_) => Err(OptError::InvalidParameter(
            "feasible directions accepts only box or polytope sets".into(),
        )),
    }
}

/// Direction-finding LP over (d, y): min y subject to ⟨z, d⟩ ≤ y,
/// f_i + ⟨∇f_i, d⟩ ≤ y, and the same for linear rows, d ∈ [−1, 1]ⁿ.
pub fn direction_lp(z: &[f64], active: &[(f64, Vector)]) -> Result<(Vector, f64)> {
    let n = z.len();
    let mut rows = Vec::with_capacity(active.len() + 1);
    let mut rhs = Vec::with_capacity(active.len() + 1);
    let mut r0 = z.to_vec();
    r0.push(-1.0);
    rows.push(r0);
    rhs.push(0.0);
    for (fi, gi) in active {
        let mut r = gi.clone();
        r.push(-1.0);
        rows.push(r);
        rhs.push(-fi);
    }
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut bounds = vec![(-1.0, 1.0); n];
    bounds.push((f64::NEG_INFINITY, f64::INFINITY));
    let sol = lp_solve(&rows, &rhs, &c, &bounds)?;
    let y = sol[n];
    Ok((sol[..n].to_vec(), y))
}

/// x ← x + γ_k d_k, γ_k = min(ρ'_k, ρ_k), where ρ'_k is the longest feasible
/// step along d_k (closed form for the linear part, bisection for the rest).
pub(crate) fn fdir_core(
    f: &dyn StochasticOracle,
    cons: &[&dyn FunctionOracle],
    x0: &[f64],
    cfg: &FeasibleDirectionsConfig,
) -> Result<RunTrace> {
    cfg.estimator.check(&cfg.schedule)?;
    let n = x0.len();
    check_dim(f.dim(), n)?;
    for c in cons {
        check_dim(n, c.dim())?;
    }
    let (la, lb) = linear_rows(&cfg.set, n)?;
    let feasible = |x: &[f64]| {
        cons.iter().all(|c| c.value(x) <= 0.0)
            && la.iter().zip(&lb).all(|(r, bi)| dot(r, x) <= *bi + 1e-12 * (1.0 + bi.abs()))
    };
    if !feasible(x0) {
        let v = cons.iter().map(|c| c.value(x0)).fold(0.0, f64::max);
        return Err(OptError::InfeasiblePoint(v));
    }
    let mut x = x0.to_vec();
    let mut rng = RunRng::new(cfg.seed, 0);
    let mut z = Averager::new(vec![0.0; n]);
    let cost = cfg.estimator.cost(n);
    let mut calls = 0u64;
    let objective = |x: &[f64]| mean_or_nan(f, x);
    let violation = |x: &[f64]| {
        let nl = cons.iter().map(|c| c.value(x).max(0.0)).fold(0.0, f64::max);
        la.iter().zip(&lb).map(|(r, bi)| (dot(r, x) - bi).max(0.0)).fold(nl, f64::max)
    };
    let mon = Monitor {
        objective: &objective,
        violation: &violation,
        residual_oracle: None,
    };
    let end = run_iterations(&cfg.stop, cfg.seed, &mut x, &mon, |t, x, rec| {
        let xi = cfg.estimator.sample(
            f,
            x,
            cfg.schedule.alpha(t),
            cfg.schedule.delta(t),
            &mut rng,
        )?;
        calls += cost;
        z.update(&xi, cfg.schedule.a(t));
        let mut rows: Vec<(f64, Vector)> = cons.iter().map(|c| c.value_grad(x)).collect();
        calls += cons.len() as u64;
        for (r, bi) in la.iter().zip(&lb) {
            rows.push((dot(r, x) - bi, r.clone()));
        }
        let (d, y) = direction_lp(&z.z, &rows)?;
        if y >= -1e-12 {
            return Ok(StepReport {
                residual: 0.0,
                step: 0.0,
            });
        }
        let rho = cfg.schedule.rho(t);
        let mut lim = rho;
        for (r, bi) in la.iter().zip(&lb) {
            let rd = dot(r, &d);
            if rd > 0.0 {
                lim = lim.min(((bi - dot(r, x)) / rd).max(0.0));
            }
        }
        let trial = |s: f64| -> Vector { x.iter().zip(&d).map(|(a, b)| a + s * b).collect() };
        let ok = |s: f64| cons.iter().all(|c| c.value(&trial(s)) <= 0.0);
        let gamma = if ok(lim) {
            lim
        } else {
            rec.bump("bisections", 1.0);
            let (mut lo, mut hi) = (0.0, lim);
            for _ in 0..cfg.bisection {
                let mid = 0.5 * (lo + hi);
                if ok(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi += gamma * di;
        }
        Ok(StepReport {
            residual: -y,
            step: gamma,
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

/// Feasible-directions method for min f subject to smooth f_i(x) ≤ 0 and an
/// optional box or polytope.
pub fn feasible_directions_solve(
    f: &dyn FunctionOracle,
    cons: &[&dyn FunctionOracle],
    x0: &[f64],
    cfg: &FeasibleDirectionsConfig,
) -> Result<RunTrace> {
    fdir_core(&Degenerate(f), cons, x0, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::oracle::FnOracle;
    use proptest::prelude::*;

    #[test]
    fn worked_basis_example_is_exact() {
        let rd = reduced_gradient_direction(&[vec![1.0, 1.0, 1.0]], &[1.0, 2.0, 3.0], &[0.5, 0.3, 0.2]).unwrap();
        assert_eq!(rd.basis, vec![0]);
        assert_eq!(rd.r, vec![1.0, 2.0]);
        assert_eq!(rd.d, vec![0.7, -0.3, -0.4]);
        assert_eq!(rd.lambda, StepLimit::Finite(0.5));
        assert_eq!(rd.blocking, Some(2));
    }

    #[test]
    fn kkt_point_gives_zero_direction() {
        // r_N = (1, 2) ≥ 0 and x_N = 0
        let rd = reduced_gradient_direction(&[vec![1.0, 1.0, 1.0]], &[1.0, 2.0, 3.0], &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(rd.d, vec![0.0; 3]);
        assert_eq!(rd.lambda, StepLimit::Infinite);
    }

    #[test]
    fn singular_basis_is_reported() {
        let a = vec![vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 1.0]];
        match reduced_gradient_direction(&a, &[1.0, 1.0, 1.0], &[0.5, 0.4, 0.1]) {
            Err(OptError::SingularBasis(b)) => assert_eq!(b, vec![0, 1]),
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #[test]
        fn direction_stays_in_the_null_space(
            cols in prop::collection::vec(0.5f64..2.0, 10),
            xs in prop::collection::vec(0.05f64..1.0, 5),
            z in prop::collection::vec(-2.0f64..2.0, 5),
        ) {
            let a = vec![cols[..5].to_vec(), vec![1.0, -1.0, 0.5, 0.0, 1.0]];
            if let Ok(rd) = reduced_gradient_direction(&a, &z, &xs) {
                for row in &a {
                    prop_assert!(dot(row, &rd.d).abs() <= 1e-9);
                }
                if let StepLimit::Finite(l) = rd.lambda {
                    for (xj, dj) in xs.iter().zip(&rd.d) {
                        prop_assert!(xj + l * dj >= -1e-12);
                    }
                }
                // d is a descent direction for the linear model
                prop_assert!(dot(&z, &rd.d) <= 1e-9);
            }
        }
    }

    #[test]
    fn reduced_gradient_run_keeps_feasibility() {
        let c = vec![0.3, -0.2, 0.5, 0.1];
        let f = FnOracle::new(
            4,
            move |x| x.iter().zip(&c).map(|(v, ci)| (v - ci).powi(2)).sum(),
            |x| x.iter().zip([0.3, -0.2, 0.5, 0.1]).map(|(v, ci)| 2.0 * (v - ci)).collect(),
        );
        let a = vec![vec![1.0, 1.0, 1.0, 1.0], vec![1.0, -1.0, 2.0, 0.0]];
        let b = vec![1.0, 0.8];
        let x0 = vec![0.2, 0.2, 0.4, 0.2];
        let mut cfg = ReducedGradientConfig::new(10_000);
        cfg.stop.log_every = 1;
        let tr = reduced_gradient_solve(&f, &a, &b, &x0, &cfg).unwrap();
        for r in &tr.rows {
            assert!(r.h_violation <= 1e-10, "{:?}", r);
        }
        assert!(tr.x_final.iter().all(|v| *v >= -1e-12));
        assert!(tr.final_f() < f.value(&x0));
    }

    #[test]
    fn infeasible_start_is_rejected() {
        let f = FnOracle::linear(vec![1.0, 1.0], 0.0);
        let cfg = ReducedGradientConfig::new(5);
        assert!(reduced_gradient_solve(&f, &[vec![1.0, 1.0]], &[1.0], &[0.7, 0.7], &cfg).is_err());
    }

    #[test]
    fn conditional_gradient_moves_toward_a_fixed_target() {
        let f = FnOracle::linear(vec![1.0, -1.0], 0.0);
        let mut cfg = CgConfig::new(FeasibleSet::unit_box(2, 0.0, 1.0), 50);
        cfg.estimator = Estimator::Exact;
        cfg.schedule = Schedule::steps(Power::constant(0.5));
        let tr = conditional_gradient_solve(&f, &[0.5, 0.5], &cfg).unwrap();
        let err = (tr.x_final[0].abs()).max((tr.x_final[1] - 1.0).abs());
        assert!(err <= 0.5f64.powi(50), "{err}");
    }

    #[test]
    fn conditional_gradient_on_a_smooth_problem() {
        let f = FnOracle::new(
            2,
            |x| (x[0] - 0.3).powi(2) + (x[1] - 0.6).powi(2),
            |x| vec![2.0 * (x[0] - 0.3), 2.0 * (x[1] - 0.6)],
        );
        let mut cfg = CgConfig::new(FeasibleSet::Simplex { dim: 2 }, 20_000);
        cfg.stop.log_every = 1000;
        let tr = conditional_gradient_solve(&f, &[1.0, 0.0], &cfg).unwrap();
        assert!((tr.x_final[0] - 0.35).abs() < 0.02 && (tr.x_final[1] - 0.65).abs() < 0.02, "{:?}", tr.x_final);
        assert!(tr.rows.iter().all(|r| r.h_violation <= 1e-12));
        let unbounded = CgConfig::new(FeasibleSet::Whole { dim: 2 }, 5);
        assert!(matches!(conditional_gradient_solve(&f, &[0.0, 0.0], &unbounded), Err(OptError::UnboundedSet)));
    }

    #[test]
    fn interior_lp_steps_along_minus_z() {
        let (d, y) = direction_lp(&[2.0, -1.0], &[(-5.0, vec![1.0, 0.0])]).unwrap();
        assert_eq!(d, vec![-1.0, 1.0]);
        assert!((y + 3.0).abs() < 1e-12);
    }

    #[test]
    fn feasible_directions_stop_at_the_bound() {
        let f = FnOracle::new(1, |x| (x[0] - 0.5).powi(2), |x| vec![2.0 * (x[0] - 0.5)]);
        let g = FnOracle::new(1, |x| 0.7 - x[0], |_| vec![-1.0]);
        let mut cfg = FeasibleDirectionsConfig::new(5000);
        cfg.stop.log_every = 100;
        let tr = feasible_directions_solve(&f, &[&g], &[1.5], &cfg).unwrap();
        assert!((tr.x_final[0] - 0.7).abs() < 0.02, "{:?}", tr.x_final);
        assert!(tr.rows.iter().all(|r| r.h_violation <= 1e-9));

        // a KKT point of the same problem stays put
        let mut still = cfg.clone();
        still.stop = StopRule::iterations(50);
        let tr = feasible_directions_solve(&f, &[&g], &[0.7], &still).unwrap();
        assert_eq!(tr.x_final, vec![0.7]);
    }

    #[test]
    fn feasible_directions_with_a_curved_constraint() {
        let f = FnOracle::linear(vec![1.0, 1.0], 0.0);
        let g = FnOracle::new(2, |x| x[0] * x[0] + x[1] * x[1] - 1.0, |x| vec![2.0 * x[0], 2.0 * x[1]]);
        let mut cfg = FeasibleDirectionsConfig::new(20_000);
        cfg.stop.log_every = 100;
        let tr = feasible_directions_solve(&f, &[&g], &[0.0, 0.0], &cfg).unwrap();
        let s = -(0.5f64).sqrt();
        assert!((tr.x_final[0] - s).abs() < 0.05 && (tr.x_final[1] - s).abs() < 0.05, "{:?}", tr.x_final);
        assert!(tr.rows.iter().all(|r| r.h_violation <= 1e-9));
    }
}
