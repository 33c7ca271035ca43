//! Sowing-plot allocation: x_ij hectares of plot j go to crop i. Crop i must
//! come in proportion γ_i, so the guaranteed output is
//! min_i (1/γ_i) Σ_j a_ij(θ) x_ij, which we maximize in expectation.
//! Yields are a_ij(θ) = ā_ij (1 + σ θ_ij) with θ_ij uniform on [−1, 1].
//!
//! Minimization form: f(x, θ) = max_i −(1/γ_i) Σ_j a_ij(θ) x_ij. The
//! proportions only need to be positive; they are not renormalized.

use rand::Rng;

use crate::core::error::{OptError, Result};
use crate::core::oracle::StochasticOracle;
use crate::core::rng::SimRng;
use crate::core::sets::FeasibleSet;
use crate::core::vector::Vector;

#[derive(Debug, Clone)]
pub struct Crop {
    /// Mean yields ā_ij, crops × plots.
    pub yields: Vec<Vector>,
    pub spread: f64,
    pub gamma: Vector,
    pub areas: Vector,
}

impl Crop {
    pub fn new(yields: Vec<Vector>, spread: f64, gamma: Vector, areas: Vector) -> Result<Self> {
        let c = yields.len();
        let p = areas.len();
        if c == 0 || p == 0 || yields.iter().any(|r| r.len() != p) || gamma.len() != c {
            return Err(OptError::InvalidParameter(
                "crop model needs crops × plots yields and one γ per crop".into(),
            ));
        }
        if gamma.iter().any(|g| !(*g > 0.0)) {
            return Err(OptError::InvalidParameter("proportions γ must be positive".into()));
        }
        if !(0.0..1.0).contains(&spread) || areas.iter().any(|a| *a < 0.0) {
            return Err(OptError::InvalidParameter(
                "spread must lie in [0, 1) and areas be nonnegative".into(),
            ));
        }
        Ok(Crop {
            yields,
            spread,
            gamma,
            areas,
        })
    }

    pub fn crops(&self) -> usize {
        self.yields.len()
    }

    pub fn plots(&self) -> usize {
        self.areas.len()
    }

    /// {x ≥ 0, Σ_i x_ij ≤ S_j}
    pub fn feasible_set(&self) -> FeasibleSet {
        let (c, p) = (self.crops(), self.plots());
        let mut a = Vec::new();
        let mut b = Vec::new();
        for j in 0..p {
            let mut row = vec![0.0; c * p];
            for i in 0..c {
                row[i * p + j] = 1.0;
            }
            a.push(row);
            b.push(self.areas[j]);
        }
        for k in 0..c * p {
            let mut row = vec![0.0; c * p];
            row[k] = -1.0;
            a.push(row);
            b.push(0.0);
        }
        FeasibleSet::Polytope { a, b }
    }

    /// The linear subproblem separates by plot: each plot goes entirely to
    /// its cheapest crop if that cost is negative, and stays idle otherwise.
    pub fn linmin(&self, c: &[f64]) -> Vector {
        let (nc, np) = (self.crops(), self.plots());
        let mut x = vec![0.0; nc * np];
        for j in 0..np {
            let mut best = 0;
            for i in 1..nc {
                if c[i * np + j] < c[best * np + j] {
                    best = i;
                }
            }
            if c[best * np + j] < 0.0 {
                x[best * np + j] = self.areas[j];
            }
        }
        x
    }

    fn crop_outputs(&self, x: &[f64], theta: &[f64]) -> Vector {
        let p = self.plots();
        (0..self.crops())
            .map(|i| {
                (0..p)
                    .map(|j| {
                        let k = i * p + j;
                        self.yields[i][j] * (1.0 + self.spread * theta[k]) * x[k]
                    })
                    .sum::<f64>()
                    / self.gamma[i]
            })
            .collect()
    }
}

impl StochasticOracle for Crop {
    fn dim(&self) -> usize {
        self.crops() * self.plots()
    }

    fn sample_theta(&self, rng: &mut SimRng) -> Vector {
        (0..self.dim()).map(|_| 2.0 * rng.gen::<f64>() - 1.0).collect()
    }

    fn value_at(&self, x: &[f64], theta: &[f64]) -> f64 {
        -self
            .crop_outputs(x, theta)
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    /// Selection from the binding crop, lowest index on ties.
    fn gradient_at(&self, x: &[f64], theta: &[f64]) -> Vector {
        let out = self.crop_outputs(x, theta);
        let mut i = 0;
        for (t, v) in out.iter().enumerate() {
            if *v < out[i] {
                i = t;
            }
        }
        let p = self.plots();
        let mut g = vec![0.0; self.dim()];
        for j in 0..p {
            let k = i * p + j;
            g[k] = -self.yields[i][j] * (1.0 + self.spread * theta[k]) / self.gamma[i];
        }
        g
    }

    /// Exact when σ = 0.
    fn mean_value(&self, x: &[f64]) -> Option<f64> {
        if self.spread == 0.0 {
            Some(self.value_at(x, &vec![0.0; self.dim()]))
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::rng::stream;
    use crate::core::vector::dot;

    fn model() -> Crop {
        Crop::new(
            vec![vec![3.0, 1.0, 2.0], vec![1.0, 2.0, 2.5]],
            0.2,
            vec![0.6, 0.4],
            vec![1.0, 2.0, 0.5],
        )
        .unwrap()
    }

    #[test]
    fn separable_linmin_matches_lp() {
        let m = model();
        let set = m.feasible_set();
        let mut rng = stream(4, 0);
        for _ in 0..200 {
            let c: Vector = (0..m.dim()).map(|_| 2.0 * rng.gen::<f64>() - 1.0).collect();
            let sep = m.linmin(&c);
            let lp = set.linmin(&c).unwrap();
            assert!(set.contains(&sep, 1e-12));
            assert!((dot(&c, &sep) - dot(&c, &lp)).abs() < 1e-9);
        }
    }

    #[test]
    fn gradient_matches_binding_crop() {
        let m = model();
        let x = [0.5, 0.0, 0.0, 0.5, 2.0, 0.5];
        let th = vec![0.0; 6];
        // outputs: crop 0 = 1.5/0.6 = 2.5; crop 1 = (0.5+4+1.25)/0.4 = 14.375
        assert!((m.value_at(&x, &th) + 2.5).abs() < 1e-12);
        let g = m.gradient_at(&x, &th);
        assert!((g[0] + 5.0).abs() < 1e-12 && g[3] == 0.0);
    }

    #[test]
    fn proportions_must_be_positive() {
        assert!(Crop::new(vec![vec![1.0]], 0.0, vec![0.0], vec![1.0]).is_err());
    }
}
