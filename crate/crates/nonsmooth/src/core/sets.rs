//! Feasible sets: membership, Euclidean projection, linear minimization and
//! the largest feasible step along a ray.

use serde::{Deserialize, Serialize};

use super::error::{check_dim, OptError, Result};
use super::linalg::project_affine;
use super::lp::lp_solve;
use super::vector::{dot, norm, sub, Vector};

const FEAS_TOL: f64 = 1e-9;

/// Largest step along a ray. Infinity is a variant, not a float value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepLimit {
    Finite(f64),
    Infinite,
}

impl StepLimit {
    pub fn min_with(self, rho: f64) -> f64 {
        match self {
            StepLimit::Finite(l) => l.min(rho),
            StepLimit::Infinite => rho,
        }
    }
    pub fn is_finite(&self) -> bool {
        matches!(self, StepLimit::Finite(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeasibleSet {
    Whole { dim: usize },
    /// `lo ≤ x ≤ hi`; bounds may be infinite.
    Box { lo: Vector, hi: Vector },
    Ball { center: Vector, radius: f64 },
    /// `{x ≥ 0, Σx = 1}`
    Simplex { dim: usize },
    /// `{x | A x ≤ b}`
    Polytope { a: Vec<Vector>, b: Vector },
    /// `{x | N x = b}`
    Affine { n: Vec<Vector>, b: Vector },
}

impl FeasibleSet {
    pub fn unit_box(dim: usize, lo: f64, hi: f64) -> Self {
        FeasibleSet::Box {
            lo: vec![lo; dim],
            hi: vec![hi; dim],
        }
    }

    pub fn nonnegative(dim: usize) -> Self {
        FeasibleSet::Box {
            lo: vec![0.0; dim],
            hi: vec![f64::INFINITY; dim],
        }
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        FeasibleSet::Box {
            lo: vec![lo],
            hi: vec![hi],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            FeasibleSet::Whole { dim } | FeasibleSet::Simplex { dim } => *dim,
            FeasibleSet::Box { lo, .. } => lo.len(),
            FeasibleSet::Ball { center, .. } => center.len(),
            FeasibleSet::Polytope { a, .. } => a.first().map_or(0, |r| r.len()),
            FeasibleSet::Affine { n, b } => n.first().map_or(b.len(), |r| r.len()),
        }
    }

    /// Largest constraint violation at `x` (0 when feasible).
    pub fn violation(&self, x: &[f64]) -> f64 {
        match self {
            FeasibleSet::Whole { .. } => 0.0,
            FeasibleSet::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (l, h))| (l - v).max(v - h).max(0.0))
                .fold(0.0, f64::max),
            FeasibleSet::Ball { center, radius } => (norm(&sub(x, center)) - radius).max(0.0),
            FeasibleSet::Simplex { .. } => {
                let neg = x.iter().fold(0.0f64, |m, v| m.max(-v));
                neg.max((x.iter().sum::<f64>() - 1.0).abs())
            }
            FeasibleSet::Polytope { a, b } => a
                .iter()
                .zip(b)
                .map(|(r, bi)| (dot(r, x) - bi).max(0.0))
                .fold(0.0, f64::max),
            FeasibleSet::Affine { n, b } => n
                .iter()
                .zip(b)
                .map(|(r, bi)| (dot(r, x) - bi).abs())
                .fold(0.0, f64::max),
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.violation(x) <= tol
    }

    /// Euclidean projection.
    pub fn project(&self, y: &[f64]) -> Result<Vector> {
        check_dim(self.dim(), y.len())?;
        match self {
            FeasibleSet::Whole { .. } => Ok(y.to_vec()),
            FeasibleSet::Box { lo, hi } => Ok(y
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (l, h))| v.max(*l).min(*h))
                .collect()),
            FeasibleSet::Ball { center, radius } => {
                let d = sub(y, center);
                let r = norm(&d);
                if r <= *radius {
                    Ok(y.to_vec())
                } else {
                    Ok(center
                        .iter()
                        .zip(&d)
                        .map(|(c, di)| c + di * radius / r)
                        .collect())
                }
            }
            FeasibleSet::Simplex { .. } => Ok(project_simplex(y)),
            FeasibleSet::Polytope { a, b } => project_polytope(a, b, y),
            FeasibleSet::Affine { n, b } => project_affine(n, b, y),
        }
    }

    /// A minimizer of ⟨c, x⟩ over the set.
    pub fn linmin(&self, c: &[f64]) -> Result<Vector> {
        check_dim(self.dim(), c.len())?;
        match self {
            FeasibleSet::Whole { dim } => {
                if c.iter().all(|v| *v == 0.0) {
                    Ok(vec![0.0; *dim])
                } else {
                    Err(OptError::UnboundedSet)
                }
            }
            FeasibleSet::Box { lo, hi } => {
                let mut x = Vec::with_capacity(c.len());
                for (ci, (l, h)) in c.iter().zip(lo.iter().zip(hi)) {
                    let v = if *ci > 0.0 {
                        *l
                    } else if *ci < 0.0 {
                        *h
                    } else if l.is_finite() {
                        *l
                    } else if h.is_finite() {
                        *h
                    } else {
                        0.0
                    };
                    if !v.is_finite() {
                        return Err(OptError::UnboundedSet);
                    }
                    x.push(v);
                }
                Ok(x)
            }
            FeasibleSet::Ball { center, radius } => {
                let nc = norm(c);
                if nc == 0.0 {
                    return Ok(center.clone());
                }
                Ok(center
                    .iter()
                    .zip(c)
                    .map(|(z, ci)| z - radius * ci / nc)
                    .collect())
            }
            FeasibleSet::Simplex { dim } => {
                let mut best = 0;
                for i in 1..*dim {
                    if c[i] < c[best] {
                        best = i;
                    }
                }
                let mut x = vec![0.0; *dim];
                x[best] = 1.0;
                Ok(x)
            }
            FeasibleSet::Polytope { a, b } => {
                let bounds = vec![(f64::NEG_INFINITY, f64::INFINITY); c.len()];
                match lp_solve(a, b, c, &bounds) {
                    Err(OptError::LpUnbounded) => Err(OptError::UnboundedSet),
                    other => other,
                }
            }
            FeasibleSet::Affine { n, b } => {
                // Bounded only if c is orthogonal to the manifold.
                let p = super::linalg::equality_projector(n, c.len())?;
                let pc = p.apply(c);
                if norm(&pc) > 1e-12 * (1.0 + norm(c)) {
                    return Err(OptError::UnboundedSet);
                }
                project_affine(n, b, &vec![0.0; c.len()])
            }
        }
    }

    /// sup{λ ≥ 0 | x + λ d ∈ set}.
    pub fn max_feasible_step(&self, x: &[f64], d: &[f64]) -> Result<StepLimit> {
        check_dim(self.dim(), x.len())?;
        check_dim(self.dim(), d.len())?;
        let viol = self.violation(x);
        if viol > FEAS_TOL * (1.0 + norm(x)) {
            return Err(OptError::InfeasiblePoint(viol));
        }
        if d.iter().all(|v| *v == 0.0) {
            return Ok(StepLimit::Infinite);
        }
        let mut lam = f64::INFINITY;
        match self {
            FeasibleSet::Whole { .. } => {}
            FeasibleSet::Box { lo, hi } => {
                for i in 0..x.len() {
                    if d[i] > 0.0 && hi[i].is_finite() {
                        lam = lam.min(((hi[i] - x[i]) / d[i]).max(0.0));
                    } else if d[i] < 0.0 && lo[i].is_finite() {
                        lam = lam.min(((lo[i] - x[i]) / d[i]).max(0.0));
                    }
                }
            }
            FeasibleSet::Ball { center, radius } => {
                let z = sub(x, center);
                let a = dot(d, d);
                let bq = dot(&z, d);
                let cq = dot(&z, &z) - radius * radius;
                let disc = (bq * bq - a * cq).max(0.0);
                lam = ((-bq + disc.sqrt()) / a).max(0.0);
            }
            FeasibleSet::Simplex { .. } => {
                let s: f64 = d.iter().sum();
                if s.abs() > 1e-12 * (1.0 + norm(d)) {
                    return Ok(StepLimit::Finite(0.0));
                }
                for i in 0..x.len() {
                    if d[i] < 0.0 {
                        lam = lam.min((-x[i] / d[i]).max(0.0));
                    }
                }
            }
            FeasibleSet::Polytope { a, b } => {
                for (r, bi) in a.iter().zip(b) {
                    let rd = dot(r, d);
                    if rd > 0.0 {
                        lam = lam.min(((bi - dot(r, x)) / rd).max(0.0));
                    }
                }
            }
            FeasibleSet::Affine { n, .. } => {
                let moves = n
                    .iter()
                    .any(|r| dot(r, d).abs() > 1e-12 * (1.0 + norm(r) * norm(d)));
                if moves {
                    return Ok(StepLimit::Finite(0.0));
                }
            }
        }
        Ok(if lam.is_finite() {
            StepLimit::Finite(lam)
        } else {
            StepLimit::Infinite
        })
    }

    pub fn is_bounded(&self) -> bool {
        match self {
            FeasibleSet::Whole { .. } | FeasibleSet::Affine { .. } => false,
            FeasibleSet::Box { lo, hi } => lo.iter().chain(hi).all(|v| v.is_finite()),
            FeasibleSet::Ball { .. } | FeasibleSet::Simplex { .. } => true,
            FeasibleSet::Polytope { .. } => true,
        }
    }
}

/// Sort-and-threshold projection onto the unit simplex.
pub fn project_simplex(y: &[f64]) -> Vector {
    let mut u = y.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (j, uj) in u.iter().enumerate() {
        cum += uj;
        let t = (cum - 1.0) / (j as f64 + 1.0);
        if uj - t > 0.0 {
            tau = t;
        }
    }
    y.iter().map(|v| (v - tau).max(0.0)).collect()
}

/// Dykstra's alternating projections over the half-spaces of `A x ≤ b`.
fn project_polytope(a: &[Vector], b: &[f64], y: &[f64]) -> Result<Vector> {
    if a.is_empty() {
        return Ok(y.to_vec());
    }
    let already = a.iter().zip(b).all(|(r, bi)| dot(r, y) <= *bi);
    if already {
        return Ok(y.to_vec());
    }
    // Nonempty check through a zero-objective LP.
    let n = y.len();
    lp_solve(
        a,
        b,
        &vec![0.0; n],
        &vec![(f64::NEG_INFINITY, f64::INFINITY); n],
    )?;
    let m = a.len();
    let mut x = y.to_vec();
    let mut incr = vec![vec![0.0; n]; m];
    for _ in 0..100_000 {
        let prev = x.clone();
        for i in 0..m {
            let z: Vector = x.iter().zip(&incr[i]).map(|(a, b)| a + b).collect();
            let r = &a[i];
            let rr = dot(r, r);
            let ex = dot(r, &z) - b[i];
            let p: Vector = if ex > 0.0 && rr > 0.0 {
                z.iter().zip(r).map(|(zi, ri)| zi - ex / rr * ri).collect()
            } else {
                z.clone()
            };
            incr[i] = z.iter().zip(&p).map(|(zi, pi)| zi - pi).collect();
            x = p;
        }
        let moved = super::vector::dist(&x, &prev);
        if moved <= 1e-14 * (1.0 + norm(&x)) {
            break;
        }
    }
    Ok(x)
}
