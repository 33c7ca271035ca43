//! Transport with random demand: ship x_ij from warehouse i to market j at
//! cost c_ij, then pay the newsvendor loss of each market on Σ_i x_ij.

use crate::core::error::{OptError, Result};
use crate::core::oracle::StochasticOracle;
use crate::core::rng::SimRng;
use crate::core::sets::FeasibleSet;
use crate::core::vector::Vector;

use super::demand::DemandLaw;

#[derive(Debug, Clone)]
pub struct Transport {
    pub cost: Vec<Vector>,
    pub capacity: Vector,
    pub alpha: Vector,
    pub beta: Vector,
    pub laws: Vec<DemandLaw>,
}

impl Transport {
    pub fn new(
        cost: Vec<Vector>,
        capacity: Vector,
        laws: Vec<DemandLaw>,
        alpha: Vector,
        beta: Vector,
    ) -> Result<Self> {
        let m = cost.len();
        let n = laws.len();
        if m == 0 || n == 0 || cost.iter().any(|r| r.len() != n) || capacity.len() != m {
            return Err(OptError::InvalidParameter(
                "transport needs an m×n cost matrix, m capacities and n laws".into(),
            ));
        }
        if alpha.len() != n || beta.len() != n {
            return Err(OptError::InvalidParameter("one α and β per market".into()));
        }
        if cost.iter().flatten().any(|c| *c < 0.0) || capacity.iter().any(|a| *a < 0.0) {
            return Err(OptError::InvalidParameter(
                "costs and capacities must be nonnegative".into(),
            ));
        }
        for law in &laws {
            law.validate()?;
        }
        Ok(Transport {
            cost,
            capacity,
            alpha,
            beta,
            laws,
        })
    }

    pub fn warehouses(&self) -> usize {
        self.cost.len()
    }

    pub fn markets(&self) -> usize {
        self.laws.len()
    }

    /// {x ≥ 0, Σ_j x_ij ≤ a_i}
    pub fn feasible_set(&self) -> FeasibleSet {
        let (m, n) = (self.warehouses(), self.markets());
        let mut a = Vec::new();
        let mut b = Vec::new();
        for i in 0..m {
            let mut row = vec![0.0; m * n];
            row[i * n..(i + 1) * n].fill(1.0);
            a.push(row);
            b.push(self.capacity[i]);
        }
        for k in 0..m * n {
            let mut row = vec![0.0; m * n];
            row[k] = -1.0;
            a.push(row);
            b.push(0.0);
        }
        FeasibleSet::Polytope { a, b }
    }

    /// Equality form with one slack per warehouse: `A (x, s) = a`, `(x, s) ≥ 0`.
    pub fn equality_form(&self) -> (Vec<Vector>, Vector) {
        let (m, n) = (self.warehouses(), self.markets());
        let rows = (0..m)
            .map(|i| {
                let mut row = vec![0.0; m * n + m];
                row[i * n..(i + 1) * n].fill(1.0);
                row[m * n + i] = 1.0;
                row
            })
            .collect();
        (rows, self.capacity.clone())
    }

    fn delivered(&self, x: &[f64]) -> Vector {
        let n = self.markets();
        let mut y = vec![0.0; n];
        for i in 0..self.warehouses() {
            for (j, yj) in y.iter_mut().enumerate() {
                *yj += x[i * n + j];
            }
        }
        y
    }

    fn shipping(&self, x: &[f64]) -> f64 {
        self.cost.iter().flatten().zip(x).map(|(c, v)| c * v).sum()
    }
}

impl StochasticOracle for Transport {
    fn dim(&self) -> usize {
        self.warehouses() * self.markets()
    }

    fn sample_theta(&self, rng: &mut SimRng) -> Vector {
        self.laws.iter().map(|l| l.sample(rng)).collect()
    }

    fn value_at(&self, x: &[f64], theta: &[f64]) -> f64 {
        let y = self.delivered(x);
        self.shipping(x)
            + (0..self.markets())
                .map(|j| (self.alpha[j] * (y[j] - theta[j])).max(self.beta[j] * (theta[j] - y[j])))
                .sum::<f64>()
    }

    fn gradient_at(&self, x: &[f64], theta: &[f64]) -> Vector {
        let y = self.delivered(x);
        let n = self.markets();
        let slope: Vec<f64> = (0..n)
            .map(|j| {
                if self.alpha[j] * (y[j] - theta[j]) >= self.beta[j] * (theta[j] - y[j]) {
                    self.alpha[j]
                } else {
                    -self.beta[j]
                }
            })
            .collect();
        self.cost
            .iter()
            .flat_map(|row| row.iter().zip(&slope).map(|(c, s)| c + s))
            .collect()
    }

    fn mean_value(&self, x: &[f64]) -> Option<f64> {
        let y = self.delivered(x);
        Some(
            self.shipping(x)
                + (0..self.markets())
                    .map(|j| self.laws[j].expected_loss(y[j], self.alpha[j], self.beta[j]))
                    .sum::<f64>(),
        )
    }
}

/// Appends `extra` zero-cost coordinates to an oracle (slack variables).
#[derive(Debug, Clone)]
pub struct WithSlack<S> {
    pub inner: S,
    pub extra: usize,
}

impl<S: StochasticOracle> StochasticOracle for WithSlack<S> {
    fn dim(&self) -> usize {
        self.inner.dim() + self.extra
    }
    fn sample_theta(&self, rng: &mut SimRng) -> Vector {
        self.inner.sample_theta(rng)
    }
    fn value_at(&self, x: &[f64], theta: &[f64]) -> f64 {
        self.inner.value_at(&x[..self.inner.dim()], theta)
    }
    fn gradient_at(&self, x: &[f64], theta: &[f64]) -> Vector {
        let mut g = self.inner.gradient_at(&x[..self.inner.dim()], theta);
        g.resize(self.dim(), 0.0);
        g
    }
    fn mean_value(&self, x: &[f64]) -> Option<f64> {
        self.inner.mean_value(&x[..self.inner.dim()])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two() -> Transport {
        Transport::new(
            vec![vec![0.1, 0.2], vec![0.3, 0.1]],
            vec![1.0, 1.0],
            vec![DemandLaw::uniform(0.0, 1.0), DemandLaw::uniform(0.0, 2.0)],
            vec![1.0, 1.0],
            vec![2.0, 2.0],
        )
        .unwrap()
    }

    #[test]
    fn matching_demand_leaves_only_shipping() {
        let t = two_by_two();
        let x = [0.2, 0.5, 0.1, 0.4];
        assert!((t.value_at(&x, &[0.3, 0.9]) - t.shipping(&x)).abs() < 1e-15);
    }

    #[test]
    fn degenerate_zero_demand_optimum_is_zero() {
        let t = Transport::new(
            vec![vec![1.0, 2.0]],
            vec![3.0],
            vec![DemandLaw::Degenerate { value: 0.0 }; 2],
            vec![1.0, 1.0],
            vec![1.0, 1.0],
        )
        .unwrap();
        assert_eq!(t.mean_value(&[0.0, 0.0]), Some(0.0));
        assert!(t.mean_value(&[0.1, 0.0]).unwrap() > 0.0);
    }

    #[test]
    fn sizes_are_checked_and_slack_form_is_consistent() {
        assert!(Transport::new(vec![vec![1.0]], vec![1.0, 2.0], vec![DemandLaw::uniform(0.0, 1.0)], vec![1.0], vec![1.0]).is_err());
        let t = two_by_two();
        let (a, b) = t.equality_form();
        assert_eq!(a.len(), 2);
        assert_eq!(a[0], vec![1.0, 1.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(b, vec![1.0, 1.0]);
        assert!(t.feasible_set().contains(&[0.5, 0.5, 0.0, 1.0], 1e-12));
        assert!(!t.feasible_set().contains(&[0.7, 0.5, 0.0, 1.0], 1e-12));
    }
}
