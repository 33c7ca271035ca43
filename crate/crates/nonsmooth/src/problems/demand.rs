//! Demand laws, all sampled by inverse CDF.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::core::error::{OptError, Result};
use crate::core::rng::SimRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum DemandLaw {
    Uniform { lo: f64, hi: f64 },
    Discrete { values: Vec<f64>, probs: Vec<f64> },
    TruncNormal { mu: f64, sigma: f64, lo: f64, hi: f64 },
    Degenerate { value: f64 },
}

impl DemandLaw {
    pub fn uniform(lo: f64, hi: f64) -> Self {
        DemandLaw::Uniform { lo, hi }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(OptError::InvalidParameter(format!("invalid law: {}", m)));
        match self {
            DemandLaw::Uniform { lo, hi } => {
                if !(lo < hi) {
                    return bad("uniform needs lo < hi");
                }
            }
            DemandLaw::Discrete { values, probs } => {
                if values.is_empty() || values.len() != probs.len() {
                    return bad("discrete needs matching nonempty values and probs");
                }
                if probs.iter().any(|p| *p < 0.0) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9
                {
                    return bad("discrete probabilities must be nonnegative and sum to 1");
                }
                if values.windows(2).any(|w| w[0] >= w[1]) {
                    return bad("discrete values must be strictly increasing");
                }
            }
            DemandLaw::TruncNormal { sigma, lo, hi, .. } => {
                if !(*sigma > 0.0) || !(lo < hi) {
                    return bad("truncated normal needs sigma > 0 and lo < hi");
                }
            }
            DemandLaw::Degenerate { value } => {
                if !value.is_finite() {
                    return bad("degenerate value must be finite");
                }
            }
        }
        Ok(())
    }

    fn std_normal() -> Normal {
        Normal::new(0.0, 1.0).expect("standard normal")
    }

    /// Inverse CDF at q ∈ [0, 1].
    pub fn quantile(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        match self {
            DemandLaw::Uniform { lo, hi } => lo + q * (hi - lo),
            DemandLaw::Discrete { values, probs } => {
                let mut acc = 0.0;
                for (v, p) in values.iter().zip(probs) {
                    acc += p;
                    if acc >= q - 1e-15 {
                        return *v;
                    }
                }
                *values.last().expect("validated nonempty")
            }
            DemandLaw::TruncNormal { mu, sigma, lo, hi } => {
                let n = Self::std_normal();
                let a = n.cdf((lo - mu) / sigma);
                let b = n.cdf((hi - mu) / sigma);
                let z = n.inverse_cdf(a + q * (b - a));
                (mu + sigma * z).clamp(*lo, *hi)
            }
            DemandLaw::Degenerate { value } => *value,
        }
    }

    pub fn cdf(&self, y: f64) -> f64 {
        match self {
            DemandLaw::Uniform { lo, hi } => ((y - lo) / (hi - lo)).clamp(0.0, 1.0),
            DemandLaw::Discrete { values, probs } => values
                .iter()
                .zip(probs)
                .filter(|(v, _)| **v <= y)
                .map(|(_, p)| p)
                .sum(),
            DemandLaw::TruncNormal { mu, sigma, lo, hi } => {
                if y <= *lo {
                    return 0.0;
                }
                if y >= *hi {
                    return 1.0;
                }
                let n = Self::std_normal();
                let a = n.cdf((lo - mu) / sigma);
                let b = n.cdf((hi - mu) / sigma);
                (n.cdf((y - mu) / sigma) - a) / (b - a)
            }
            DemandLaw::Degenerate { value } => {
                if y >= *value {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// One draw. Degenerate laws do not touch the stream.
    pub fn sample(&self, rng: &mut SimRng) -> f64 {
        match self {
            DemandLaw::Degenerate { value } => *value,
            _ => self.quantile(rng.gen::<f64>()),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            DemandLaw::Uniform { lo, hi } => 0.5 * (lo + hi),
            DemandLaw::Discrete { values, probs } => {
                values.iter().zip(probs).map(|(v, p)| v * p).sum()
            }
            DemandLaw::TruncNormal { .. } => self.integrate(|t| t),
            DemandLaw::Degenerate { value } => *value,
        }
    }

    /// E max{α(y − θ), β(θ − y)}.
    pub fn expected_loss(&self, y: f64, alpha: f64, beta: f64) -> f64 {
        let loss = |t: f64| (alpha * (y - t)).max(beta * (t - y));
        match self {
            DemandLaw::Uniform { lo, hi } => {
                let w = hi - lo;
                if y <= *lo {
                    beta * (self.mean() - y)
                } else if y >= *hi {
                    alpha * (y - self.mean())
                } else {
                    (alpha * (y - lo).powi(2) + beta * (hi - y).powi(2)) / (2.0 * w)
                }
            }
            DemandLaw::Discrete { values, probs } => {
                values.iter().zip(probs).map(|(v, p)| p * loss(*v)).sum()
            }
            DemandLaw::TruncNormal { .. } => self.integrate(loss),
            DemandLaw::Degenerate { value } => loss(*value),
        }
    }

    /// E g(θ) by midpoint quadrature in the quantile variable.
    fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        let m = 20_000;
        (0..m)
            .map(|i| g(self.quantile((i as f64 + 0.5) / m as f64)))
            .sum::<f64>()
            / m as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::rng::stream;

    #[test]
    fn quantiles_and_cdfs_agree() {
        let laws = [
            DemandLaw::uniform(0.0, 1.0),
            DemandLaw::Discrete {
                values: vec![1.0, 2.0, 5.0],
                probs: vec![0.2, 0.5, 0.3],
            },
            DemandLaw::TruncNormal {
                mu: 1.0,
                sigma: 0.5,
                lo: 0.0,
                hi: 2.5,
            },
        ];
        for law in &laws {
            law.validate().unwrap();
            for q in [0.1, 0.25, 0.5, 0.75, 0.9] {
                let y = law.quantile(q);
                assert!(law.cdf(y) >= q - 1e-9);
            }
        }
        assert!(DemandLaw::uniform(1.0, 0.0).validate().is_err());
    }

    #[test]
    fn uniform_loss_closed_form_matches_monte_carlo() {
        let law = DemandLaw::uniform(0.0, 1.0);
        let mut rng = stream(1, 0);
        let n = 200_000;
        for y in [-0.5, 0.2, 0.5, 0.9, 1.5] {
            let mc: f64 = (0..n)
                .map(|_| {
                    let t = law.sample(&mut rng);
                    (1.0 * (y - t)).max(3.0 * (t - y))
                })
                .sum::<f64>()
                / n as f64;
            assert!((mc - law.expected_loss(y, 1.0, 3.0)).abs() < 0.01);
        }
    }
}
