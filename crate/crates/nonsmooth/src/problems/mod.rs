//! Test problems with oracles, feasible sets and, where available, known
//! solutions together with the procedure that regenerates them.

pub mod crop;
pub mod demand;
pub mod newsvendor;
pub mod transport;

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::calculus::stationarity_residual;
use crate::core::error::{OptError, Result};
use crate::core::lp::lp_solve;
use crate::core::oracle::{FnOracle, FunctionOracle, StochasticOracle};
use crate::core::rng::{stream, SimRng};
use crate::core::sets::FeasibleSet;
use crate::core::vector::{axpy, dot, norm, Vector};

pub use crop::Crop;
pub use demand::DemandLaw;
pub use newsvendor::Newsvendor;
pub use transport::{Transport, WithSlack};

#[derive(Clone)]
pub enum Objective {
    Deterministic(Arc<dyn FunctionOracle>),
    Stochastic(Arc<dyn StochasticOracle>),
}

impl Objective {
    pub fn dim(&self) -> usize {
        match self {
            Objective::Deterministic(f) => f.dim(),
            Objective::Stochastic(f) => f.dim(),
        }
    }

    /// f(x), or the closed-form mean F(x) for stochastic objectives.
    pub fn value(&self, x: &[f64]) -> Option<f64> {
        match self {
            Objective::Deterministic(f) => Some(f.value(x)),
            Objective::Stochastic(f) => f.mean_value(x),
        }
    }
}

/// Where a known solution comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Hand-derived closed form.
    ClosedForm,
    /// Quantile of the demand law.
    Quantile,
    /// Epigraph linear program.
    LinearProgram,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::ClosedForm => "closed_form",
            Provenance::Quantile => "quantile",
            Provenance::LinearProgram => "linear_program",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnownSolution {
    pub x: Vector,
    pub f: f64,
    /// Multipliers of the inequality constraints, if any.
    pub multipliers: Vec<f64>,
    pub provenance: Provenance,
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub dim: usize,
    pub objective: Objective,
    /// Inequality constraints f_i(x) ≤ 0.
    pub constraints: Vec<Arc<dyn FunctionOracle>>,
    pub set: FeasibleSet,
    pub x0: Vector,
    pub known: Option<KnownSolution>,
    /// How to recompute the solution by brute force.
    pub brute_force: Option<&'static str>,
    pub lipschitz: Option<f64>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("constraints", &self.constraints.len())
            .field("set", &self.set)
            .field("known", &self.known)
            .finish()
    }
}

impl ProblemSpec {
    pub fn deterministic(&self) -> Option<Arc<dyn FunctionOracle>> {
        match &self.objective {
            Objective::Deterministic(f) => Some(f.clone()),
            Objective::Stochastic(_) => None,
        }
    }

    pub fn stochastic(&self) -> Option<Arc<dyn StochasticOracle>> {
        match &self.objective {
            Objective::Stochastic(f) => Some(f.clone()),
            Objective::Deterministic(_) => None,
        }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(self.objective, Objective::Stochastic(_))
    }

    /// Largest constraint value max(0, f_i(x)) together with set violation.
    pub fn violation(&self, x: &[f64]) -> f64 {
        self.constraints
            .iter()
            .map(|c| c.value(x).max(0.0))
            .fold(self.set.violation(x), f64::max)
    }

    /// Config snippet that rebuilds this problem.
    pub fn to_config(&self) -> String {
        let x0: Vec<String> = self.x0.iter().map(|v| format!("{:?}", v)).collect();
        format!("[problem]\nname = \"{}\"\nx0 = [{}]\n", self.name, x0.join(", "))
    }
}

/// Names accepted by [`make_benchmark`], with a one-line description.
pub fn catalog() -> Vec<(&'static str, &'static str)> {
    vec![
        ("abs_sum(n)", "Σ|x_i|, minimum 0 at the origin"),
        ("max_abs(n)", "max_i |x_i|, minimum 0 at the origin"),
        ("max_linear(m,n)", "max of m seeded affine pieces in E_n, solved by LP"),
        ("ravine(k)", "½(x₁² + k x₂²), ill-conditioned quadratic"),
        ("circle_linear", "min x₁ s.t. |x|² − 1 ≤ 0, solution (−1, 0)"),
        ("newsvendor", "E max{x−θ, θ−x}, θ ~ U[0,1], solution 0.5"),
        ("newsvendor(a,b)", "E max{a(x−θ), b(θ−x)}, θ ~ U[0,1], solution b/(a+b)"),
        ("newsvendor2", "two separable products, U[0,1] and U[0,2] demand"),
        ("transport(m,n)", "m warehouses, n markets, unit costs 0.1·(i+j), U[0,1] demand"),
        ("crop", "three crops on four plots, 20% yield spread"),
    ]
}

fn parse_call(name: &str) -> Result<(String, Vec<f64>)> {
    let name = name.trim();
    let unknown = || OptError::Unknown {
        kind: "problem",
        name: name.to_string(),
    };
    match name.find('(') {
        None => Ok((name.to_string(), Vec::new())),
        Some(i) => {
            let inner = name[i + 1..].strip_suffix(')').ok_or_else(unknown)?;
            let args = inner
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|_| unknown()))
                .collect::<Result<Vec<f64>>>()?;
            Ok((name[..i].trim().to_string(), args))
        }
    }
}

fn size_arg(args: &[f64], i: usize, name: &str) -> Result<usize> {
    let v = args.get(i).copied().ok_or_else(|| OptError::Unknown {
        kind: "problem",
        name: name.to_string(),
    })?;
    if v < 1.0 || v.fract() != 0.0 {
        return Err(OptError::InvalidParameter(format!(
            "{}: size arguments must be positive integers",
            name
        )));
    }
    Ok(v as usize)
}

pub fn make_benchmark(name: &str) -> Result<ProblemSpec> {
    let (base, args) = parse_call(name)?;
    let unknown = || OptError::Unknown {
        kind: "problem",
        name: name.to_string(),
    };
    let expect = |k: usize| if args.len() == k { Ok(()) } else { Err(unknown()) };
    match base.as_str() {
        "abs_sum" => {
            expect(1)?;
            Ok(abs_sum(size_arg(&args, 0, name)?))
        }
        "max_abs" => {
            expect(1)?;
            Ok(max_abs(size_arg(&args, 0, name)?))
        }
        "max_linear" => {
            expect(2)?;
            max_linear(size_arg(&args, 0, name)?, size_arg(&args, 1, name)?)
        }
        "ravine" => {
            expect(1)?;
            if !(args[0] > 0.0) {
                return Err(OptError::InvalidParameter("ravine needs k > 0".into()));
            }
            Ok(ravine(args[0]))
        }
        "circle_linear" => {
            expect(0)?;
            Ok(circle_linear())
        }
        "newsvendor" => match args.len() {
            0 => make_newsvendor(Newsvendor::simple(1.0, 1.0, DemandLaw::uniform(0.0, 1.0))?, None),
            2 => make_newsvendor(
                Newsvendor::simple(args[0], args[1], DemandLaw::uniform(0.0, 1.0))?,
                None,
            ),
            _ => Err(unknown()),
        },
        "newsvendor2" => {
            expect(0)?;
            make_newsvendor(
                Newsvendor::new(
                    vec![1.0, 1.0],
                    vec![1.0, 1.0],
                    vec![DemandLaw::uniform(0.0, 1.0), DemandLaw::uniform(0.0, 2.0)],
                    None,
                )?,
                Some((vec![1.0, 1.0], 10.0)),
            )
        }
        "transport" => {
            expect(2)?;
            let (m, n) = (size_arg(&args, 0, name)?, size_arg(&args, 1, name)?);
            let cost = (0..m)
                .map(|i| (0..n).map(|j| 0.1 * (i + j) as f64).collect())
                .collect();
            make_transport(Transport::new(
                cost,
                vec![n as f64; m],
                vec![DemandLaw::uniform(0.0, 1.0); n],
                vec![1.0; n],
                vec![1.0; n],
            )?)
        }
        "crop" => {
            expect(0)?;
            make_crop(Crop::new(
                vec![
                    vec![3.0, 2.0, 1.0, 2.5],
                    vec![1.0, 2.5, 2.0, 1.5],
                    vec![2.0, 1.0, 3.0, 1.0],
                ],
                0.2,
                vec![0.5, 0.3, 0.2],
                vec![1.0, 1.0, 2.0, 1.5],
            )?)
        }
        _ => Err(unknown()),
    }
}

fn sign_plus(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

fn det_spec(name: String, f: FnOracle, set: FeasibleSet, x0: Vector) -> ProblemSpec {
    let dim = f.dim();
    let lipschitz = f.lipschitz();
    ProblemSpec {
        name,
        dim,
        objective: Objective::Deterministic(Arc::new(f)),
        constraints: Vec::new(),
        set,
        x0,
        known: None,
        brute_force: None,
        lipschitz,
    }
}

/// Σ|x_i|; the selection at x_i = 0 is +1.
pub fn abs_sum_oracle(n: usize) -> FnOracle {
    FnOracle::new(
        n,
        |x| x.iter().map(|v| v.abs()).sum(),
        |x| x.iter().map(|v| sign_plus(*v)).collect(),
    )
    .with_lipschitz((n as f64).sqrt())
}

pub fn abs_sum(n: usize) -> ProblemSpec {
    let mut p = det_spec(
        format!("abs_sum({})", n),
        abs_sum_oracle(n),
        FeasibleSet::Whole { dim: n },
        vec![1.0; n],
    );
    p.known = Some(KnownSolution {
        x: vec![0.0; n],
        f: 0.0,
        multipliers: Vec::new(),
        provenance: Provenance::ClosedForm,
    });
    p
}

/// max over the children x₁, −x₁, x₂, −x₂, …; the first child attaining the
/// maximum supplies the gradient.
pub fn max_abs_oracle(n: usize) -> FnOracle {
    FnOracle::new(
        n,
        |x| x.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        move |x| {
            let mut best = 0;
            let mut best_v = f64::NEG_INFINITY;
            for c in 0..2 * n {
                let v = if c % 2 == 0 { x[c / 2] } else { -x[c / 2] };
                if v > best_v {
                    best_v = v;
                    best = c;
                }
            }
            let mut g = vec![0.0; n];
            g[best / 2] = if best % 2 == 0 { 1.0 } else { -1.0 };
            g
        },
    )
    .with_lipschitz(1.0)
}

pub fn max_abs(n: usize) -> ProblemSpec {
    let mut p = det_spec(
        format!("max_abs({})", n),
        max_abs_oracle(n),
        FeasibleSet::Whole { dim: n },
        vec![1.0; n],
    );
    p.known = Some(KnownSolution {
        x: vec![0.0; n],
        f: 0.0,
        multipliers: Vec::new(),
        provenance: Provenance::ClosedForm,
    });
    p
}

/// Pieces of `max_linear(m, n)`: m − 1 seeded random slopes plus one that
/// makes the slopes sum to zero, so the maximum is bounded below.
pub fn max_linear_pieces(m: usize, n: usize) -> (Vec<Vector>, Vector) {
    let mut rng: SimRng = stream(0x6d61_786c, (m * 1000 + n) as u64);
    let mut a: Vec<Vector> = (0..m.saturating_sub(1))
        .map(|_| (0..n).map(|_| 2.0 * rng.gen::<f64>() - 1.0).collect())
        .collect();
    let mut last = vec![0.0; n];
    for r in &a {
        axpy(&mut last, -1.0, r);
    }
    a.push(last);
    let b = (0..m).map(|_| 2.0 * rng.gen::<f64>() - 1.0).collect();
    (a, b)
}

pub fn max_linear_oracle(a: Vec<Vector>, b: Vector) -> FnOracle {
    let n = a[0].len();
    let l = a.iter().map(|r| norm(r)).fold(0.0, f64::max);
    let (a2, b2) = (a.clone(), b.clone());
    FnOracle::new(
        n,
        move |x| {
            a.iter()
                .zip(&b)
                .map(|(r, bi)| dot(r, x) + bi)
                .fold(f64::NEG_INFINITY, f64::max)
        },
        move |x| {
            let mut best = 0;
            let mut best_v = f64::NEG_INFINITY;
            for (i, (r, bi)) in a2.iter().zip(&b2).enumerate() {
                let v = dot(r, x) + bi;
                if v > best_v {
                    best_v = v;
                    best = i;
                }
            }
            a2[best].clone()
        },
    )
    .with_lipschitz(l)
}

/// Epigraph LP: min t s.t. ⟨a_i, x⟩ + b_i ≤ t.
pub fn solve_max_linear(a: &[Vector], b: &[f64]) -> Result<(Vector, f64)> {
    let n = a[0].len();
    let rows: Vec<Vector> = a
        .iter()
        .map(|r| {
            let mut row = r.clone();
            row.push(-1.0);
            row
        })
        .collect();
    let rhs: Vector = b.iter().map(|v| -v).collect();
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut bounds = vec![(-1e3, 1e3); n];
    bounds.push((f64::NEG_INFINITY, f64::INFINITY));
    let sol = lp_solve(&rows, &rhs, &c, &bounds)?;
    Ok((sol[..n].to_vec(), sol[n]))
}

pub fn max_linear(m: usize, n: usize) -> Result<ProblemSpec> {
    if m < 2 {
        return Err(OptError::InvalidParameter("max_linear needs m ≥ 2".into()));
    }
    let (a, b) = max_linear_pieces(m, n);
    let (x, _) = solve_max_linear(&a, &b)?;
    let f = max_linear_oracle(a, b);
    let fx = f.value(&x);
    let mut p = det_spec(
        format!("max_linear({},{})", m, n),
        f,
        FeasibleSet::Whole { dim: n },
        vec![1.0; n],
    );
    p.known = Some(KnownSolution {
        x,
        f: fx,
        multipliers: Vec::new(),
        provenance: Provenance::LinearProgram,
    });
    p.brute_force = Some("epigraph LP min t s.t. a_i·x + b_i ≤ t");
    Ok(p)
}

pub fn ravine_oracle(kappa: f64) -> FnOracle {
    FnOracle::new(
        2,
        move |x| 0.5 * (x[0] * x[0] + kappa * x[1] * x[1]),
        move |x| vec![x[0], kappa * x[1]],
    )
}

pub fn ravine(kappa: f64) -> ProblemSpec {
    let mut p = det_spec(
        format!("ravine({})", kappa),
        ravine_oracle(kappa),
        FeasibleSet::Whole { dim: 2 },
        vec![1.0, 1.0],
    );
    p.known = Some(KnownSolution {
        x: vec![0.0, 0.0],
        f: 0.0,
        multipliers: Vec::new(),
        provenance: Provenance::ClosedForm,
    });
    p
}

/// h(x) = |x|² − 1
pub fn unit_circle_constraint(n: usize) -> FnOracle {
    FnOracle::new(
        n,
        |x| dot(x, x) - 1.0,
        |x| x.iter().map(|v| 2.0 * v).collect(),
    )
}

pub fn circle_linear() -> ProblemSpec {
    let mut p = det_spec(
        "circle_linear".to_string(),
        FnOracle::linear(vec![1.0, 0.0], 0.0),
        FeasibleSet::Whole { dim: 2 },
        vec![0.5, 0.5],
    );
    p.constraints = vec![Arc::new(unit_circle_constraint(2))];
    p.known = Some(KnownSolution {
        x: vec![-1.0, 0.0],
        f: -1.0,
        multipliers: vec![0.5],
        provenance: Provenance::ClosedForm,
    });
    p
}

/// Optional capacity is `(weights a_j, total)`: Σ a_j x_j ≤ total.
pub fn make_newsvendor(nv: Newsvendor, capacity: Option<(Vector, f64)>) -> Result<ProblemSpec> {
    let n = nv.dim();
    let set = match &capacity {
        None => FeasibleSet::nonnegative(n),
        Some((w, total)) => {
            if w.len() != n {
                return Err(OptError::DimensionMismatch {
                    expected: n,
                    got: w.len(),
                });
            }
            let mut a = vec![w.clone()];
            let mut b = vec![*total];
            for j in 0..n {
                let mut r = vec![0.0; n];
                r[j] = -1.0;
                a.push(r);
                b.push(0.0);
            }
            FeasibleSet::Polytope { a, b }
        }
    };
    let identity = nv.interchange.iter().enumerate().all(|(j, row)| {
        row.iter()
            .enumerate()
            .all(|(s, v)| *v == if s == j { 1.0 } else { 0.0 })
    });
    // Separable case: each product at its own critical quantile, valid when
    // the capacity does not bind.
    let known = if identity {
        let x: Vector = (0..n).map(|s| nv.critical_quantile(s)).collect();
        let slack = match &capacity {
            None => true,
            Some((w, total)) => dot(w, &x) < *total,
        };
        if slack {
            let f = nv.mean_value(&x).expect("closed-form mean");
            Some(KnownSolution {
                x,
                f,
                multipliers: Vec::new(),
                provenance: Provenance::Quantile,
            })
        } else {
            None
        }
    } else {
        None
    };
    let name = if n == 1 {
        format!("newsvendor({},{})", nv.alpha[0], nv.beta[0])
    } else {
        format!("newsvendor[{}]", n)
    };
    let l = nv
        .interchange
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(s, v)| v.abs() * nv.alpha[s].max(nv.beta[s]))
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
        * (n as f64).sqrt();
    Ok(ProblemSpec {
        name,
        dim: n,
        objective: Objective::Stochastic(Arc::new(nv)),
        constraints: Vec::new(),
        set,
        x0: vec![0.0; n],
        known,
        brute_force: Some("grid over the closed-form mean"),
        lipschitz: Some(l),
    })
}

pub fn make_transport(t: Transport) -> Result<ProblemSpec> {
    let (m, n) = (t.warehouses(), t.markets());
    let zero_cost = t.cost.iter().flatten().all(|c| *c == 0.0);
    let known = if m == 1 && n == 1 && zero_cost {
        let q = t.laws[0].quantile(t.beta[0] / (t.alpha[0] + t.beta[0]));
        (q <= t.capacity[0]).then(|| KnownSolution {
            x: vec![q],
            f: t.mean_value(&[q]).expect("closed-form mean"),
            multipliers: Vec::new(),
            provenance: Provenance::Quantile,
        })
    } else {
        None
    };
    Ok(ProblemSpec {
        name: format!("transport({},{})", m, n),
        dim: m * n,
        set: t.feasible_set(),
        objective: Objective::Stochastic(Arc::new(t)),
        constraints: Vec::new(),
        x0: vec![0.0; m * n],
        known,
        brute_force: Some("grid over the closed-form mean"),
        lipschitz: None,
    })
}

pub fn make_crop(c: Crop) -> Result<ProblemSpec> {
    let dim = c.dim();
    Ok(ProblemSpec {
        name: "crop".to_string(),
        dim,
        set: c.feasible_set(),
        objective: Objective::Stochastic(Arc::new(c)),
        constraints: Vec::new(),
        x0: vec![0.0; dim],
        known: None,
        brute_force: None,
        lipschitz: None,
    })
}

/// Outcome of checking a known solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Audit {
    pub feasible: bool,
    pub value_gap: f64,
    /// Sampled stationarity residual (deterministic) or sample-mean gradient
    /// norm (stochastic).
    pub residual: f64,
    /// Acceptance bound for `residual`.
    pub bound: f64,
}

impl Audit {
    pub fn passed(&self) -> bool {
        self.feasible && self.value_gap <= 1e-9 && self.residual <= self.bound
    }
}

/// Local-optimality audit of the problem's known solution. Deterministic
/// problems use the sampled residual of the Lagrangian at δ = 1e−3;
/// stochastic ones compare the sample-mean gradient (N = 10⁵) with three
/// standard errors.
pub fn audit_known_solution(p: &ProblemSpec, seed: u64) -> Option<Audit> {
    let ks = p.known.as_ref()?;
    let feasible = p.violation(&ks.x) <= 1e-9;
    let value_gap = p.objective.value(&ks.x).map_or(f64::INFINITY, |v| (v - ks.f).abs());
    let mut rng = stream(seed, 0);
    match &p.objective {
        Objective::Deterministic(f) => {
            let cons = p.constraints.clone();
            let u = ks.multipliers.clone();
            let f = f.clone();
            let lag = FnOracle::new(
                p.dim,
                {
                    let (f, cons, u) = (f.clone(), cons.clone(), u.clone());
                    move |x| {
                        f.value(x)
                            + cons.iter().zip(&u).map(|(c, ui)| ui * c.value(x)).sum::<f64>()
                    }
                },
                move |x| {
                    let mut g = f.gradient(x);
                    for (c, ui) in cons.iter().zip(&u) {
                        axpy(&mut g, *ui, &c.gradient(x));
                    }
                    g
                },
            );
            let residual = stationarity_residual(&lag, &ks.x, 1e-3, 256, &mut rng);
            Some(Audit {
                feasible,
                value_gap,
                residual,
                bound: 1e-3,
            })
        }
        Objective::Stochastic(s) => {
            let n = 100_000;
            let mut sum = vec![0.0; p.dim];
            let mut sq = vec![0.0; p.dim];
            for _ in 0..n {
                let g = s.sample_gradient(&ks.x, &mut rng);
                for j in 0..p.dim {
                    sum[j] += g[j];
                    sq[j] += g[j] * g[j];
                }
            }
            let mean: Vector = sum.iter().map(|v| v / n as f64).collect();
            let se: Vector = (0..p.dim)
                .map(|j| ((sq[j] / n as f64 - mean[j] * mean[j]).max(0.0) / n as f64).sqrt())
                .collect();
            Some(Audit {
                feasible,
                value_gap,
                residual: norm(&mean),
                bound: 3.0 * norm(&se),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_examples() {
        let p = make_benchmark("abs_sum(3)").unwrap();
        let f = p.deterministic().unwrap();
        assert_eq!(f.value(&[1.0, -2.0, 0.5]), 3.5);
        assert_eq!(f.gradient(&[1.0, -2.0, 0.5]), vec![1.0, -1.0, 1.0]);
        assert_eq!(f.gradient(&[1.0, -2.0, 0.0]), vec![1.0, -1.0, 1.0]);
        let m = make_benchmark("max_abs(2)").unwrap();
        let ks = m.known.as_ref().unwrap();
        assert_eq!((ks.x.clone(), ks.f), (vec![0.0, 0.0], 0.0));
        let r = make_benchmark("ravine(100)").unwrap();
        assert_eq!(r.deterministic().unwrap().gradient(&[1.0, 1.0]), vec![1.0, 100.0]);
    }

    #[test]
    fn unknown_and_malformed_names() {
        for bad in ["nope", "abs_sum", "abs_sum(0)", "abs_sum(1.5)", "ravine(1", "max_linear(3)"] {
            assert!(make_benchmark(bad).is_err(), "{}", bad);
        }
        match make_benchmark("nope") {
            Err(e) => assert_eq!(e.to_string(), "unknown problem: nope"),
            Ok(_) => panic!(),
        }
    }

    #[test]
    fn every_catalog_entry_builds() {
        for name in [
            "abs_sum(4)",
            "max_abs(3)",
            "max_linear(6,3)",
            "ravine(10)",
            "circle_linear",
            "newsvendor",
            "newsvendor(1,3)",
            "newsvendor2",
            "transport(2,3)",
            "transport(1,1)",
            "crop",
        ] {
            let p = make_benchmark(name).unwrap();
            assert_eq!(p.objective.dim(), p.dim, "{}", name);
            assert_eq!(p.x0.len(), p.dim);
            assert!(p.set.contains(&p.x0, 1e-12), "{}", name);
        }
    }

    #[test]
    fn known_solutions_pass_the_audit() {
        for name in [
            "abs_sum(3)",
            "max_abs(4)",
            "max_linear(6,3)",
            "ravine(100)",
            "circle_linear",
            "newsvendor",
            "newsvendor(1,3)",
            "newsvendor2",
            "transport(1,1)",
        ] {
            let p = make_benchmark(name).unwrap();
            let a = audit_known_solution(&p, 3).unwrap();
            assert!(a.passed(), "{}: {:?}", name, a);
        }
    }

    #[test]
    fn known_solutions_regenerate() {
        // Quantile solutions against a grid over the closed-form mean.
        for name in ["newsvendor", "newsvendor(1,3)", "transport(1,1)"] {
            let p = make_benchmark(name).unwrap();
            let ks = p.known.clone().unwrap();
            let grid = (0..=20_000).map(|i| i as f64 * 1e-4);
            let best = grid
                .map(|x| (x, p.objective.value(&[x]).unwrap()))
                .fold((0.0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
            assert!((best.0 - ks.x[0]).abs() <= 1e-4, "{}", name);
            assert!((best.1 - ks.f).abs() <= 1e-8, "{}", name);
        }
        // LP value against the oracle at random points.
        let p = make_benchmark("max_linear(6,3)").unwrap();
        let ks = p.known.clone().unwrap();
        let f = p.deterministic().unwrap();
        let mut rng = stream(9, 0);
        for _ in 0..2000 {
            let x: Vector = (0..3).map(|_| 4.0 * rng.gen::<f64>() - 2.0).collect();
            assert!(f.value(&x) >= ks.f - 1e-9);
        }
    }

    #[test]
    fn transport_reduces_to_newsvendor() {
        let t = make_benchmark("transport(1,1)").unwrap();
        let n = make_benchmark("newsvendor").unwrap();
        assert_eq!(t.known.as_ref().unwrap().x, n.known.as_ref().unwrap().x);
        for x in [0.1, 0.5, 0.9] {
            assert_eq!(t.objective.value(&[x]), n.objective.value(&[x]));
        }
    }

    #[test]
    fn config_snippet_names_the_problem() {
        let s = make_benchmark("ravine(100)").unwrap().to_config();
        assert!(s.contains("name = \"ravine(100)\""));
        assert!(s.contains("x0 = [1.0, 1.0]"));
    }
}
