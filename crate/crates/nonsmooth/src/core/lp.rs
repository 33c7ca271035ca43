//! Dense two-phase tableau simplex with Bland's rule.
//!
//! Solves `min ⟨c, x⟩  s.t.  A x ≤ b,  lo ≤ x ≤ hi`. Bounds may be infinite.
//! Intended for the small subproblems of the solvers (a few hundred columns).

use super::error::{OptError, Result};
use super::vector::Vector;

const TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 100_000;

#[derive(Debug, Clone, Copy)]
enum ColMap {
    /// x = lo + y
    Shift(usize, f64),
    /// x = hi - y
    Flip(usize, f64),
    /// x = y_p - y_q
    Split(usize, usize),
}

/// Optimal basic solution of the LP, or `LpInfeasible` / `LpUnbounded`.
pub fn lp_solve(a: &[Vector], b: &[f64], c: &[f64], bounds: &[(f64, f64)]) -> Result<Vector> {
    let n = c.len();
    if a.len() != b.len() {
        return Err(OptError::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if bounds.len() != n {
        return Err(OptError::DimensionMismatch {
            expected: n,
            got: bounds.len(),
        });
    }
    for row in a {
        super::error::check_dim(n, row.len())?;
    }

    // Map every variable onto nonnegative columns.
    let mut maps = Vec::with_capacity(n);
    let mut ny = 0;
    let mut extra_rows: Vec<(usize, f64)> = Vec::new();
    for &(lo, hi) in bounds {
        if lo > hi {
            return Err(OptError::LpInfeasible);
        }
        if lo.is_finite() {
            maps.push(ColMap::Shift(ny, lo));
            if hi.is_finite() {
                extra_rows.push((ny, hi - lo));
            }
            ny += 1;
        } else if hi.is_finite() {
            maps.push(ColMap::Flip(ny, hi));
            ny += 1;
        } else {
            maps.push(ColMap::Split(ny, ny + 1));
            ny += 2;
        }
    }

    // Rows over y: a' y <= b'.
    let mut rows: Vec<(Vector, f64)> = Vec::with_capacity(a.len() + extra_rows.len());
    for (ai, &bi) in a.iter().zip(b) {
        let mut r = vec![0.0; ny];
        let mut rhs = bi;
        for (j, m) in maps.iter().enumerate() {
            let v = ai[j];
            match *m {
                ColMap::Shift(p, lo) => {
                    r[p] += v;
                    rhs -= v * lo;
                }
                ColMap::Flip(p, hi) => {
                    r[p] -= v;
                    rhs -= v * hi;
                }
                ColMap::Split(p, q) => {
                    r[p] += v;
                    r[q] -= v;
                }
            }
        }
        rows.push((r, rhs));
    }
    for (p, ub) in extra_rows {
        let mut r = vec![0.0; ny];
        r[p] = 1.0;
        rows.push((r, ub));
    }
    let mut cy = vec![0.0; ny];
    for (j, m) in maps.iter().enumerate() {
        match *m {
            ColMap::Shift(p, _) => cy[p] += c[j],
            ColMap::Flip(p, _) => cy[p] -= c[j],
            ColMap::Split(p, q) => {
                cy[p] += c[j];
                cy[q] -= c[j];
            }
        }
    }

    let y = solve_standard(&rows, &cy, ny)?;

    let x = maps
        .iter()
        .map(|m| match *m {
            ColMap::Shift(p, lo) => lo + y[p],
            ColMap::Flip(p, hi) => hi - y[p],
            ColMap::Split(p, q) => y[p] - y[q],
        })
        .collect();
    Ok(x)
}

struct Tableau {
    /// m rows of `ncols` coefficients followed by the right-hand side.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, col: usize) {
        let piv = self.t[r][col];
        for v in self.t[r].iter_mut() {
            *v /= piv;
        }
        let prow = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[col];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(&prow) {
                    *v -= f * p;
                }
                row[col] = 0.0;
            }
        }
        self.basis[r] = col;
    }

    fn rhs(&self, i: usize) -> f64 {
        self.t[i][self.ncols]
    }

    /// Bland's rule: lowest-index entering column with negative reduced cost,
    /// lowest basis index among ratio ties.
    fn optimize(&mut self, cost: &[f64], allowed: &[bool]) -> Result<()> {
        let m = self.t.len();
        for _ in 0..MAX_PIVOTS {
            let mut entering = None;
            for j in 0..self.ncols {
                if !allowed[j] || self.basis.contains(&j) {
                    continue;
                }
                let mut rc = cost[j];
                for i in 0..m {
                    rc -= cost[self.basis[i]] * self.t[i][j];
                }
                if rc < -TOL {
                    entering = Some(j);
                    break;
                }
            }
            let Some(col) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let aij = self.t[i][col];
                if aij > TOL {
                    let ratio = self.rhs(i) / aij;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - TOL
                                || (ratio <= lr + TOL && self.basis[i] < self.basis[li])
                            {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Err(OptError::LpUnbounded);
            };
            self.pivot(r, col);
        }
        Err(OptError::InvalidParameter(
            "simplex pivot limit reached".to_string(),
        ))
    }
}

/// min ⟨c, y⟩ s.t. rows y ≤ rhs, y ≥ 0.
fn solve_standard(rows: &[(Vector, f64)], c: &[f64], ny: usize) -> Result<Vector> {
    let m = rows.len();
    if m == 0 {
        // Only y >= 0: optimum at 0 unless some cost is negative.
        if c.iter().any(|&v| v < -TOL) {
            return Err(OptError::LpUnbounded);
        }
        return Ok(vec![0.0; ny]);
    }
    // Columns: y (ny), slacks (m), artificials (one per negative-rhs row).
    let negative: Vec<usize> = (0..m).filter(|&i| rows[i].1 < 0.0).collect();
    let nart = negative.len();
    let ncols = ny + m + nart;
    let mut t = vec![vec![0.0; ncols + 1]; m];
    let mut basis = vec![0; m];
    let mut art = 0;
    for (i, (r, rhs)) in rows.iter().enumerate() {
        let sign = if *rhs < 0.0 { -1.0 } else { 1.0 };
        for j in 0..ny {
            t[i][j] = sign * r[j];
        }
        t[i][ny + i] = sign;
        t[i][ncols] = sign * rhs;
        if sign < 0.0 {
            t[i][ny + m + art] = 1.0;
            basis[i] = ny + m + art;
            art += 1;
        } else {
            basis[i] = ny + i;
        }
    }
    let mut tab = Tableau { t, basis, ncols };

    if nart > 0 {
        let mut cost1 = vec![0.0; ncols];
        for v in cost1.iter_mut().skip(ny + m) {
            *v = 1.0;
        }
        let allowed = vec![true; ncols];
        tab.optimize(&cost1, &allowed)?;
        let infeas: f64 = (0..m)
            .filter(|&i| tab.basis[i] >= ny + m)
            .map(|i| tab.rhs(i))
            .sum();
        let scale = 1.0 + rows.iter().map(|r| r.1.abs()).fold(0.0, f64::max);
        if infeas > 1e-7 * scale {
            return Err(OptError::LpInfeasible);
        }
        // Drive remaining artificials out of the basis or drop their rows.
        let mut i = 0;
        while i < tab.t.len() {
            if tab.basis[i] >= ny + m {
                let col = (0..ny + m).find(|&j| tab.t[i][j].abs() > TOL);
                match col {
                    Some(j) => {
                        tab.pivot(i, j);
                        i += 1;
                    }
                    None => {
                        tab.t.remove(i);
                        tab.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
    }

    let mut cost2 = vec![0.0; ncols];
    cost2[..ny].copy_from_slice(c);
    let mut allowed = vec![true; ncols];
    for a in allowed.iter_mut().skip(ny + m) {
        *a = false;
    }
    tab.optimize(&cost2, &allowed)?;

    let mut y = vec![0.0; ny];
    for (i, &bv) in tab.basis.iter().enumerate() {
        if bv < ny {
            y[bv] = tab.rhs(i).max(0.0);
        }
    }
    Ok(y)
}
