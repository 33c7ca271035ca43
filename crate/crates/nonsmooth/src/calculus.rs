//! Pseudogradient calculus: selections for max/min/abs/affine/composition
//! nodes, and a sampled stationarity residual.
//!
//! A selection is one element of the pseudogradient set. Ties between active
//! children are broken by the lowest index.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::core::error::{check_dim, OptError, Result};
use crate::core::oracle::FunctionOracle;
use crate::core::rng::SimRng;
use crate::core::vector::{axpy, norm, Vector};
use crate::schedules::min_norm_point;

/// Value, selected pseudogradient and active index of max_i f_i(x).
pub fn pg_select_max(children: &[&dyn FunctionOracle], x: &[f64]) -> Result<(f64, Vector, usize)> {
    select(children, x, |v, best| v > best)
}

/// Value, selected pseudogradient and active index of min_i f_i(x).
pub fn pg_select_min(children: &[&dyn FunctionOracle], x: &[f64]) -> Result<(f64, Vector, usize)> {
    select(children, x, |v, best| v < best)
}

fn select(
    children: &[&dyn FunctionOracle],
    x: &[f64],
    better: impl Fn(f64, f64) -> bool,
) -> Result<(f64, Vector, usize)> {
    let first = children.first().ok_or(OptError::Empty("children"))?;
    let mut best = first.value(x);
    let mut idx = 0;
    for (i, c) in children.iter().enumerate().skip(1) {
        check_dim(first.dim(), c.dim())?;
        let v = c.value(x);
        if better(v, best) {
            best = v;
            idx = i;
        }
    }
    Ok((best, children[idx].gradient(x), idx))
}

/// Value and selection of outer(z(x)) with z_i = inner_i(x):
/// g = Σ_i g⁰_i ∇inner_i(x).
pub fn pg_compose(
    outer: &dyn FunctionOracle,
    inner: &[&dyn FunctionOracle],
    x: &[f64],
) -> Result<(f64, Vector)> {
    check_dim(outer.dim(), inner.len())?;
    let z: Vector = inner.iter().map(|f| f.value(x)).collect();
    let (v, g0) = outer.value_grad(&z);
    let mut g = vec![0.0; x.len()];
    for (gi, f) in g0.iter().zip(inner) {
        if *gi != 0.0 {
            axpy(&mut g, *gi, &f.gradient(x));
        }
    }
    Ok((v, g))
}

/// Expression tree whose evaluation is itself an oracle.
#[derive(Clone)]
pub enum PgExpr {
    Leaf(Arc<dyn FunctionOracle>),
    Max(Vec<PgExpr>),
    Min(Vec<PgExpr>),
    Abs(Box<PgExpr>),
    /// c + Σ w_i child_i
    Affine {
        weights: Vec<f64>,
        constant: f64,
        children: Vec<PgExpr>,
    },
    Compose {
        outer: Arc<dyn FunctionOracle>,
        inner: Vec<PgExpr>,
    },
}

impl PgExpr {
    pub fn leaf(f: impl FunctionOracle + 'static) -> Self {
        PgExpr::Leaf(Arc::new(f))
    }

    /// Check that the tree is non-empty and dimensionally consistent.
    pub fn check(&self) -> Result<usize> {
        match self {
            PgExpr::Leaf(f) => Ok(f.dim()),
            PgExpr::Max(c) | PgExpr::Min(c) => {
                let first = c.first().ok_or(OptError::Empty("children"))?.check()?;
                for ch in &c[1..] {
                    check_dim(first, ch.check()?)?;
                }
                Ok(first)
            }
            PgExpr::Abs(c) => c.check(),
            PgExpr::Affine {
                weights, children, ..
            } => {
                check_dim(weights.len(), children.len())?;
                let first = children
                    .first()
                    .ok_or(OptError::Empty("children"))?
                    .check()?;
                for ch in &children[1..] {
                    check_dim(first, ch.check()?)?;
                }
                Ok(first)
            }
            PgExpr::Compose { outer, inner } => {
                check_dim(outer.dim(), inner.len())?;
                let first = inner.first().ok_or(OptError::Empty("inner"))?.check()?;
                for ch in &inner[1..] {
                    check_dim(first, ch.check()?)?;
                }
                Ok(first)
            }
        }
    }

    fn eval(&self, x: &[f64]) -> (f64, Vector) {
        match self {
            PgExpr::Leaf(f) => f.value_grad(x),
            PgExpr::Max(c) | PgExpr::Min(c) => {
                let is_max = matches!(self, PgExpr::Max(_));
                let mut best = c[0].eval(x);
                for ch in &c[1..] {
                    let cand = ch.eval(x);
                    let better = if is_max {
                        cand.0 > best.0
                    } else {
                        cand.0 < best.0
                    };
                    if better {
                        best = cand;
                    }
                }
                best
            }
            PgExpr::Abs(c) => {
                // |f| = max(f, −f); at f = 0 the first child (f itself) wins.
                let (v, g) = c.eval(x);
                if v < 0.0 {
                    (-v, g.iter().map(|t| -t).collect())
                } else {
                    (v, g)
                }
            }
            PgExpr::Affine {
                weights,
                constant,
                children,
            } => {
                let mut v = *constant;
                let mut g = vec![0.0; x.len()];
                for (w, ch) in weights.iter().zip(children) {
                    let (cv, cg) = ch.eval(x);
                    v += w * cv;
                    axpy(&mut g, *w, &cg);
                }
                (v, g)
            }
            PgExpr::Compose { outer, inner } => {
                let parts: Vec<(f64, Vector)> = inner.iter().map(|c| c.eval(x)).collect();
                let z: Vector = parts.iter().map(|p| p.0).collect();
                let (v, g0) = outer.value_grad(&z);
                let mut g = vec![0.0; x.len()];
                for (gi, p) in g0.iter().zip(&parts) {
                    axpy(&mut g, *gi, &p.1);
                }
                (v, g)
            }
        }
    }
}

impl FunctionOracle for PgExpr {
    fn dim(&self) -> usize {
        match self {
            PgExpr::Leaf(f) => f.dim(),
            PgExpr::Max(c) | PgExpr::Min(c) => c[0].dim(),
            PgExpr::Abs(c) => c.dim(),
            PgExpr::Affine { children, .. } => children[0].dim(),
            PgExpr::Compose { inner, .. } => inner[0].dim(),
        }
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x).0
    }
    fn gradient(&self, x: &[f64]) -> Vector {
        self.eval(x).1
    }
    fn value_grad(&self, x: &[f64]) -> (f64, Vector) {
        self.eval(x)
    }
}

/// Uniform point in the Euclidean ball of radius `r` around `x`.
pub fn uniform_in_ball(x: &[f64], r: f64, rng: &mut SimRng) -> Vector {
    let n = x.len();
    let mut d: Vector = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let nd = norm(&d);
    let rad = r * rng.gen::<f64>().powf(1.0 / n as f64);
    for v in d.iter_mut() {
        *v *= if nd > 0.0 { rad / nd } else { 0.0 };
    }
    x.iter().zip(&d).map(|(a, b)| a + b).collect()
}

/// Upper estimate of the δ-stationarity residual: norm of the min-norm point
/// of the hull of pseudogradients sampled uniformly in the δ-ball around x.
pub fn stationarity_residual(
    oracle: &dyn FunctionOracle,
    x: &[f64],
    delta: f64,
    n_samples: usize,
    rng: &mut SimRng,
) -> f64 {
    let grads: Vec<Vector> = (0..n_samples.max(1))
        .map(|_| oracle.gradient(&uniform_in_ball(x, delta, rng)))
        .collect();
    norm(&min_norm_point(&grads, 1e-10))
}
