//! Multi-product newsvendor: products j are stocked, market s sees supply
//! y_s = Σ_j λ_js x_j and random demand θ_s, and pays α_s per unit of
//! surplus or β_s per unit of shortage.

use crate::core::error::{OptError, Result};
use crate::core::oracle::StochasticOracle;
use crate::core::rng::SimRng;
use crate::core::vector::Vector;

use super::demand::DemandLaw;

#[derive(Debug, Clone)]
pub struct Newsvendor {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub laws: Vec<DemandLaw>,
    /// `interchange[j][s]` = λ_js.
    pub interchange: Vec<Vector>,
}

impl Newsvendor {
    pub fn new(
        alpha: Vec<f64>,
        beta: Vec<f64>,
        laws: Vec<DemandLaw>,
        interchange: Option<Vec<Vector>>,
    ) -> Result<Self> {
        let s = laws.len();
        if s == 0 || alpha.len() != s || beta.len() != s {
            return Err(OptError::InvalidParameter(
                "newsvendor needs one (α, β, law) per market".into(),
            ));
        }
        if alpha.iter().chain(&beta).any(|v| !(*v > 0.0)) {
            return Err(OptError::InvalidParameter("α and β must be positive".into()));
        }
        for law in &laws {
            law.validate()?;
        }
        let interchange = interchange.unwrap_or_else(|| {
            (0..s)
                .map(|j| (0..s).map(|t| if t == j { 1.0 } else { 0.0 }).collect())
                .collect()
        });
        if interchange.is_empty() || interchange.iter().any(|r| r.len() != s) {
            return Err(OptError::InvalidParameter(
                "interchange must be products × markets".into(),
            ));
        }
        Ok(Newsvendor {
            alpha,
            beta,
            laws,
            interchange,
        })
    }

    /// Single product, single market.
    pub fn simple(alpha: f64, beta: f64, law: DemandLaw) -> Result<Self> {
        Self::new(vec![alpha], vec![beta], vec![law], None)
    }

    pub fn markets(&self) -> usize {
        self.laws.len()
    }

    fn supply(&self, x: &[f64]) -> Vector {
        let mut y = vec![0.0; self.markets()];
        for (xj, row) in x.iter().zip(&self.interchange) {
            for (ys, l) in y.iter_mut().zip(row) {
                *ys += l * xj;
            }
        }
        y
    }

    /// Optimal stock of market s alone: the β/(α+β) quantile of its demand.
    pub fn critical_quantile(&self, s: usize) -> f64 {
        self.laws[s].quantile(self.beta[s] / (self.alpha[s] + self.beta[s]))
    }
}

impl StochasticOracle for Newsvendor {
    fn dim(&self) -> usize {
        self.interchange.len()
    }

    fn sample_theta(&self, rng: &mut SimRng) -> Vector {
        self.laws.iter().map(|l| l.sample(rng)).collect()
    }

    fn value_at(&self, x: &[f64], theta: &[f64]) -> f64 {
        self.supply(x)
            .iter()
            .enumerate()
            .map(|(s, y)| (self.alpha[s] * (y - theta[s])).max(self.beta[s] * (theta[s] - y)))
            .sum()
    }

    /// Each market contributes α_s λ_·s on the surplus side (ties included)
    /// and −β_s λ_·s on the shortage side.
    fn gradient_at(&self, x: &[f64], theta: &[f64]) -> Vector {
        let y = self.supply(x);
        let slope: Vec<f64> = (0..self.markets())
            .map(|s| {
                if self.alpha[s] * (y[s] - theta[s]) >= self.beta[s] * (theta[s] - y[s]) {
                    self.alpha[s]
                } else {
                    -self.beta[s]
                }
            })
            .collect();
        self.interchange
            .iter()
            .map(|row| row.iter().zip(&slope).map(|(l, c)| l * c).sum())
            .collect()
    }

    fn mean_value(&self, x: &[f64]) -> Option<f64> {
        Some(
            self.supply(x)
                .iter()
                .enumerate()
                .map(|(s, y)| self.laws[s].expected_loss(*y, self.alpha[s], self.beta[s]))
                .sum(),
        )
    }
}
