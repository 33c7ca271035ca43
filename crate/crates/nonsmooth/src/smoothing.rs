//! Smoothed values, randomized finite-difference gradient estimators and the
//! streaming averaging operation.
//!
//! The smoothed function is the mean of f over the cube [x − α, x + α]ⁿ.
//! Estimators draw their sample points from the `est` stream; stochastic
//! oracles draw one scenario per estimate from the `noise` stream.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::core::error::{OptError, Result};
use crate::core::oracle::{FunctionOracle, StochasticOracle};
use crate::core::rng::{RunRng, SimRng};
use crate::core::vector::Vector;
use crate::schedules::Power;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorMode {
    /// Coordinate quotients across the cube at a random point.
    Central,
    /// Forward quotients with shift Δ at a random point of the cube.
    Forward,
    /// Forward quotients along p random directions with entries in [−1, 1].
    RandomDirs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub mode: EstimatorMode,
    pub alpha: f64,
    /// Shift for forward/random modes; α² when absent.
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default = "one_dir")]
    pub p: usize,
    /// Multiply random-direction estimates by 3/p so they target ∇f(x, α)
    /// (each quotient carries the factor E μ² = 1/3).
    #[serde(default = "yes")]
    pub normalize_random: bool,
}

fn one_dir() -> usize {
    1
}

fn yes() -> bool {
    true
}

impl EstimatorConfig {
    pub fn central(alpha: f64) -> Self {
        EstimatorConfig {
            mode: EstimatorMode::Central,
            alpha,
            delta: None,
            p: 1,
            normalize_random: true,
        }
    }

    pub fn forward(alpha: f64, delta: f64) -> Self {
        EstimatorConfig {
            mode: EstimatorMode::Forward,
            delta: Some(delta),
            ..Self::central(alpha)
        }
    }

    pub fn random_dirs(alpha: f64, delta: f64, p: usize) -> Self {
        EstimatorConfig {
            mode: EstimatorMode::RandomDirs,
            delta: Some(delta),
            p,
            ..Self::central(alpha)
        }
    }

    /// Same mode and options with the k-th α and Δ of a schedule.
    pub fn at(&self, alpha: f64, delta: f64) -> Self {
        EstimatorConfig {
            alpha,
            delta: Some(delta),
            ..*self
        }
    }

    pub fn shift(&self) -> f64 {
        self.delta.unwrap_or(self.alpha * self.alpha)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(OptError::InvalidParameter(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if self.mode != EstimatorMode::Central && !(self.shift() > 0.0) {
            return Err(OptError::InvalidParameter(format!(
                "delta must be positive, got {}",
                self.shift()
            )));
        }
        if self.p == 0 {
            return Err(OptError::InvalidParameter("p must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of function evaluations per estimate in dimension n.
    pub fn evaluations(&self, n: usize) -> usize {
        match self.mode {
            EstimatorMode::Central => 2 * n,
            EstimatorMode::Forward => n + 1,
            EstimatorMode::RandomDirs => self.p + 1,
        }
    }
}

/// Uniform point of the cube [x − α, x + α]ⁿ.
pub fn cube_point(x: &[f64], alpha: f64, rng: &mut SimRng) -> Vector {
    x.iter()
        .map(|&xi| xi + alpha * (2.0 * rng.gen::<f64>() - 1.0))
        .collect()
}

/// Estimator kernel over an arbitrary function `f`. Returns `NonFinite` if
/// any evaluation is not finite.
pub fn fd_estimate_with(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x: &[f64],
    cfg: &EstimatorConfig,
    rng: &mut SimRng,
) -> Result<Vector> {
    cfg.validate()?;
    let n = x.len();
    let mut eval = |y: &[f64]| -> Result<f64> {
        let v = f(y);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(OptError::NonFinite)
        }
    };
    let alpha = cfg.alpha;
    let mut h = vec![0.0; n];
    match cfg.mode {
        EstimatorMode::Central => {
            let mut y = cube_point(x, alpha, rng);
            for i in 0..n {
                let keep = y[i];
                y[i] = x[i] + alpha;
                let up = eval(&y)?;
                y[i] = x[i] - alpha;
                let down = eval(&y)?;
                y[i] = keep;
                h[i] = (up - down) / (2.0 * alpha);
            }
        }
        EstimatorMode::Forward => {
            let delta = cfg.shift();
            let mut y = cube_point(x, alpha, rng);
            let base = eval(&y)?;
            for i in 0..n {
                let keep = y[i];
                y[i] += delta;
                h[i] = (eval(&y)? - base) / delta;
                y[i] = keep;
            }
        }
        EstimatorMode::RandomDirs => {
            let delta = cfg.shift();
            let y = cube_point(x, alpha, rng);
            let base = eval(&y)?;
            let mut z = vec![0.0; n];
            for _ in 0..cfg.p {
                let mu: Vector = (0..n).map(|_| 2.0 * rng.gen::<f64>() - 1.0).collect();
                for j in 0..n {
                    z[j] = y[j] + delta * mu[j];
                }
                let q = (eval(&z)? - base) / delta;
                for j in 0..n {
                    h[j] += q * mu[j];
                }
            }
            if cfg.normalize_random {
                let s = 3.0 / cfg.p as f64;
                for v in h.iter_mut() {
                    *v *= s;
                }
            }
        }
    }
    Ok(h)
}

/// Finite-difference estimate of ∇f(x, α) for a deterministic oracle.
pub fn fd_estimate(
    oracle: &dyn FunctionOracle,
    x: &[f64],
    cfg: &EstimatorConfig,
    rng: &mut SimRng,
) -> Result<Vector> {
    fd_estimate_with(&mut |y| oracle.value(y), x, cfg, rng)
}

/// Finite-difference estimate for a stochastic oracle: one scenario θ is drawn
/// and reused for every evaluation of this estimate.
pub fn fd_estimate_stochastic(
    oracle: &dyn StochasticOracle,
    x: &[f64],
    cfg: &EstimatorConfig,
    rng: &mut RunRng,
) -> Result<Vector> {
    let theta = oracle.sample_theta(&mut rng.noise);
    fd_estimate_with(&mut |y| oracle.value_at(y, &theta), x, cfg, &mut rng.est)
}

/// Monte Carlo estimate of the smoothed value f(x, α) and its standard error.
pub fn smoothed_value(
    oracle: &dyn FunctionOracle,
    x: &[f64],
    alpha: f64,
    n_samples: usize,
    rng: &mut SimRng,
) -> (f64, f64) {
    let n = n_samples.max(2);
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..n {
        let v = oracle.value(&cube_point(x, alpha, rng));
        let d = v - mean;
        mean += d / (i + 1) as f64;
        m2 += d * (v - mean);
    }
    let var = m2 / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// z ← z + a (sample − z), for vectors or scalars (length-1 vectors).
#[derive(Debug, Clone, PartialEq)]
pub struct Averager {
    pub z: Vector,
    pub k: usize,
    rule: Option<Power>,
}

impl Averager {
    pub fn new(z0: Vector) -> Self {
        Averager {
            z: z0,
            k: 0,
            rule: None,
        }
    }

    pub fn scalar(z0: f64) -> Self {
        Self::new(vec![z0])
    }

    /// Averager that takes a_k from a schedule.
    pub fn with_rule(z0: Vector, rule: Power) -> Self {
        Averager {
            z: z0,
            k: 0,
            rule: Some(rule),
        }
    }

    pub fn update(&mut self, sample: &[f64], a: f64) -> &Vector {
        debug_assert!(a > 0.0 && a <= 1.0);
        for (z, s) in self.z.iter_mut().zip(sample) {
            *z += a * (s - *z);
        }
        self.k += 1;
        &self.z
    }

    /// Update with the rule's a_k (capped at 1).
    pub fn step(&mut self, sample: &[f64]) -> &Vector {
        let a = self.rule.map_or(1.0 / (self.k + 1) as f64, |p| p.at(self.k).min(1.0));
        self.update(sample, a)
    }

    pub fn update_scalar(&mut self, sample: f64, a: f64) -> f64 {
        self.update(&[sample], a)[0]
    }

    pub fn value(&self) -> f64 {
        self.z[0]
    }
}

/// Free-function form of [`Averager::update`].
pub fn averager_update(mut avg: Averager, sample: &[f64], a: f64) -> Averager {
    avg.update(sample, a);
    avg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::oracle::FnOracle;
    use crate::core::rng::stream;

    fn abs1() -> FnOracle {
        FnOracle::new(1, |x| x[0].abs(), |x| vec![if x[0] >= 0.0 { 1.0 } else { -1.0 }])
    }

    #[test]
    fn linear_is_exact_in_every_mode() {
        let f = FnOracle::linear(vec![1.5, -2.0, 0.25], 3.0);
        let mut rng = stream(1, 0);
        for cfg in [
            EstimatorConfig::central(0.7),
            EstimatorConfig::forward(0.7, 0.5),
        ] {
            let h = fd_estimate(&f, &[0.1, 0.2, 0.3], &cfg, &mut rng).unwrap();
            for (a, b) in h.iter().zip(&[1.5, -2.0, 0.25]) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn central_symmetric_at_kink_has_zero_mean() {
        let f = abs1();
        let mut rng = stream(2, 0);
        let cfg = EstimatorConfig::central(1.0);
        let n = 100_000;
        let mut s = 0.0;
        for _ in 0..n {
            s += fd_estimate(&f, &[0.0], &cfg, &mut rng).unwrap()[0];
        }
        // in 1-D the quotient at x = 0 is exactly 0
        assert_eq!(s / n as f64, 0.0);
    }

    #[test]
    fn central_two_dims_unbiased() {
        // f = |x1| + |x1 + x2|: the second term makes the quotient random.
        let f = FnOracle::new(
            2,
            |x| x[0].abs() + (x[0] + x[1]).abs(),
            |_| vec![0.0, 0.0],
        );
        let x = [0.2, 0.1];
        let alpha = 0.5;
        let cfg = EstimatorConfig::central(alpha);
        let mut rng = stream(3, 0);
        let n = 100_000;
        let mut sum = [0.0; 2];
        let mut sq = [0.0; 2];
        for _ in 0..n {
            let h = fd_estimate(&f, &x, &cfg, &mut rng).unwrap();
            for j in 0..2 {
                sum[j] += h[j];
                sq[j] += h[j] * h[j];
            }
        }
        // Analytic smoothed gradient by fine quadrature.
        let m = 2000;
        let mut g = [0.0; 2];
        for i in 0..m {
            for j in 0..m {
                let y0 = x[0] - alpha + (i as f64 + 0.5) * 2.0 * alpha / m as f64;
                let y1 = x[1] - alpha + (j as f64 + 0.5) * 2.0 * alpha / m as f64;
                let s = if y0 + y1 >= 0.0 { 1.0 } else { -1.0 };
                g[0] += (if y0 >= 0.0 { 1.0 } else { -1.0 }) + s;
                g[1] += s;
            }
        }
        for j in 0..2 {
            let mean = sum[j] / n as f64;
            let sd = (sq[j] / n as f64 - mean * mean).sqrt();
            let want = g[j] / (m * m) as f64;
            assert!((mean - want).abs() <= 4.0 * sd / (n as f64).sqrt() + 1e-3, "{} {}", mean, want);
        }
    }

    #[test]
    fn forward_bias_within_bound() {
        // f = Σ|x_i|, n = 3, L = 1.
        let f = FnOracle::new(3, |x| x.iter().map(|v| v.abs()).sum(), |_| vec![0.0; 3]);
        let x = [0.3, -0.1, 0.6];
        let alpha = 0.5;
        let delta = 0.1;
        let cfg = EstimatorConfig::forward(alpha, delta);
        let mut rng = stream(4, 0);
        let n = 100_000;
        let mut mean = [0.0; 3];
        for _ in 0..n {
            let h = fd_estimate(&f, &x, &cfg, &mut rng).unwrap();
            for j in 0..3 {
                mean[j] += h[j] / n as f64;
            }
        }
        // ∇ of the smoothed |t| is t/α inside the cube, sign(t) outside.
        let grad: Vec<f64> = x.iter().map(|&t| if t.abs() < alpha { t / alpha } else { t.signum() }).collect();
        let bias = mean
            .iter()
            .zip(&grad)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let bound = (3f64).sqrt() * delta / alpha;
        assert!(bias <= bound, "{} > {}", bias, bound);
    }

    #[test]
    fn random_dirs_unnormalized_mean() {
        let c = vec![1.0, -0.5];
        let f = FnOracle::linear(c.clone(), 0.0);
        let mut cfg = EstimatorConfig::random_dirs(0.3, 0.05, 4);
        cfg.normalize_random = false;
        let mut rng = stream(5, 0);
        let n = 100_000;
        let mut mean = [0.0; 2];
        for _ in 0..n {
            let h = fd_estimate(&f, &[0.0, 0.0], &cfg, &mut rng).unwrap();
            mean[0] += h[0] / n as f64;
            mean[1] += h[1] / n as f64;
        }
        let s = 4.0 / 3.0;
        assert!((mean[0] - s * c[0]).abs() < 0.03, "{:?}", mean);
        assert!((mean[1] - s * c[1]).abs() < 0.03, "{:?}", mean);
        cfg.normalize_random = true;
        let mut m0 = 0.0;
        for _ in 0..n {
            m0 += fd_estimate(&f, &[0.0, 0.0], &cfg, &mut rng).unwrap()[0] / n as f64;
        }
        assert!((m0 - c[0]).abs() < 0.03, "{}", m0);
    }

    #[test]
    fn non_finite_is_reported() {
        let f = FnOracle::new(1, |_| f64::NAN, |_| vec![0.0]);
        let mut rng = stream(6, 0);
        let r = fd_estimate(&f, &[0.0], &EstimatorConfig::central(1.0), &mut rng);
        assert_eq!(r, Err(OptError::NonFinite));
        assert!(EstimatorConfig::central(0.0).validate().is_err());
    }

    #[test]
    fn smoothed_abs_values() {
        let f = abs1();
        let mut rng = stream(7, 0);
        let (v, se) = smoothed_value(&f, &[0.0], 1.0, 100_000, &mut rng);
        assert!((v - 0.5).abs() <= 4.0 * se);
        let (v, se) = smoothed_value(&f, &[2.0], 1.0, 100_000, &mut rng);
        assert!((v - 2.0).abs() <= 4.0 * se);
        let lin = FnOracle::linear(vec![1.0, 2.0], 0.0);
        let (v, se) = smoothed_value(&lin, &[0.5, 0.5], 0.2, 10_000, &mut rng);
        assert!((v - 1.5).abs() <= 4.0 * se);
    }

    #[test]
    fn averager_examples() {
        let mut a = Averager::scalar(0.0);
        for (k, s) in [1.0, 2.0, 3.0].iter().enumerate() {
            a.update_scalar(*s, 1.0 / (k + 1) as f64);
        }
        assert_eq!(a.value(), 2.0);
        let mut b = Averager::new(vec![0.5, 1.5]);
        b.update(&[0.5, 1.5], 0.3);
        assert_eq!(b.z, vec![0.5, 1.5]);
        b.update(&[4.0, -1.0], 1.0);
        assert_eq!(b.z, vec![4.0, -1.0]);
    }

    #[test]
    fn averager_is_running_mean() {
        let mut rng = stream(8, 0);
        let mut a = Averager::scalar(0.0);
        let mut sum = 0.0;
        for k in 0..10_000 {
            let s: f64 = rng.gen_range(-5.0..5.0);
            sum += s;
            a.step(&[s]);
            let mean = sum / (k + 1) as f64;
            assert!((a.value() - mean).abs() <= 1e-12 * (1.0 + mean.abs()) * 10.0);
        }
    }
}
