//! Small dense linear algebra on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use super::error::{OptError, Result};
use super::vector::Vector;

const RANK_TOL: f64 = 1e-10;

pub(crate) fn to_matrix(rows: &[Vector], ncols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}

/// Solve the square system `m x = rhs`; `None` when singular.
pub fn solve(m: &[Vector], rhs: &[f64]) -> Option<Vector> {
    let n = rhs.len();
    if m.len() != n {
        return None;
    }
    let mat = to_matrix(m, n);
    let sol = mat.lu().solve(&DVector::from_column_slice(rhs))?;
    if sol.iter().all(|v| v.is_finite()) {
        Some(sol.iter().copied().collect())
    } else {
        None
    }
}

/// Orthogonal projector onto the null space `{x | N x = 0}`.
#[derive(Debug, Clone)]
pub struct Projector {
    p: DMatrix<f64>,
}

impl Projector {
    pub fn identity(n: usize) -> Self {
        Projector {
            p: DMatrix::identity(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.p.nrows()
    }

    pub fn apply(&self, g: &[f64]) -> Vector {
        let v = &self.p * DVector::from_column_slice(g);
        v.iter().copied().collect()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }
}

/// `P = I − Nᵀ (N Nᵀ)⁻¹ N`. `n_rows` may be empty, in which case `P = I`.
/// Rows must be linearly independent (relative singular value above 1e-10).
pub fn equality_projector(n_rows: &[Vector], dim: usize) -> Result<Projector> {
    if n_rows.is_empty() {
        return Ok(Projector::identity(dim));
    }
    for r in n_rows {
        super::error::check_dim(dim, r.len())?;
    }
    if n_rows.len() > dim {
        return Err(OptError::RankDeficient);
    }
    let n = to_matrix(n_rows, dim);
    let sv = n.clone().svd(false, false).singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if smax == 0.0 || smin <= RANK_TOL * smax.max(1.0) {
        return Err(OptError::RankDeficient);
    }
    let gram = &n * n.transpose();
    let inv = gram.try_inverse().ok_or(OptError::RankDeficient)?;
    let p = DMatrix::identity(dim, dim) - n.transpose() * inv * &n;
    Ok(Projector { p })
}

/// Nearest point of `{x | N x = b}`.
pub fn project_affine(n_rows: &[Vector], b: &[f64], y: &[f64]) -> Result<Vector> {
    if n_rows.is_empty() {
        return Ok(y.to_vec());
    }
    let dim = y.len();
    let n = to_matrix(n_rows, dim);
    let resid = &n * DVector::from_column_slice(y) - DVector::from_column_slice(b);
    let gram = &n * n.transpose();
    let lam = gram.lu().solve(&resid).ok_or(OptError::RankDeficient)?;
    let x = DVector::from_column_slice(y) - n.transpose() * lam;
    Ok(x.iter().copied().collect())
}
