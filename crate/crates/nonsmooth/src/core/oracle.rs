//! Oracle contracts.
//!
//! A [`FunctionOracle`] returns the value and one pseudogradient selection at a
//! point. A [`StochasticOracle`] does the same for `f(x, θ)`, where θ is drawn
//! from a seeded stream; the draw is separated from the evaluation so that an
//! estimator can reuse one θ for several evaluations.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use super::rng::SimRng;
use super::vector::Vector;

pub trait FunctionOracle: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    /// One element of the pseudogradient set at `x`.
    fn gradient(&self, x: &[f64]) -> Vector;
    fn value_grad(&self, x: &[f64]) -> (f64, Vector) {
        (self.value(x), self.gradient(x))
    }
    /// Lipschitz bound on the region of interest, when known.
    fn lipschitz(&self) -> Option<f64> {
        None
    }
}

pub trait StochasticOracle: Send + Sync {
    fn dim(&self) -> usize;
    /// Draw one scenario.
    fn sample_theta(&self, rng: &mut SimRng) -> Vector;
    fn value_at(&self, x: &[f64], theta: &[f64]) -> f64;
    fn gradient_at(&self, x: &[f64], theta: &[f64]) -> Vector;
    fn sample_value(&self, x: &[f64], rng: &mut SimRng) -> f64 {
        let t = self.sample_theta(rng);
        self.value_at(x, &t)
    }
    fn sample_gradient(&self, x: &[f64], rng: &mut SimRng) -> Vector {
        let t = self.sample_theta(rng);
        self.gradient_at(x, &t)
    }
    /// F(x) = E f(x, θ) when a closed form is available.
    fn mean_value(&self, _x: &[f64]) -> Option<f64> {
        None
    }
}

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64]) -> Vector + Send + Sync;

/// Oracle assembled from closures.
#[derive(Clone)]
pub struct FnOracle {
    dim: usize,
    f: Arc<ValueFn>,
    g: Arc<GradFn>,
    lipschitz: Option<f64>,
}

impl FnOracle {
    pub fn new(
        dim: usize,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        g: impl Fn(&[f64]) -> Vector + Send + Sync + 'static,
    ) -> Self {
        FnOracle {
            dim,
            f: Arc::new(f),
            g: Arc::new(g),
            lipschitz: None,
        }
    }

    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lipschitz = Some(l);
        self
    }

    /// x ↦ ⟨c, x⟩ + c0
    pub fn linear(c: Vector, c0: f64) -> Self {
        let l = super::vector::norm(&c);
        let c2 = c.clone();
        FnOracle::new(
            c.len(),
            move |x| super::vector::dot(&c, x) + c0,
            move |_| c2.clone(),
        )
        .with_lipschitz(l)
    }

    pub fn constant(dim: usize, v: f64) -> Self {
        FnOracle::new(dim, move |_| v, move |_| vec![0.0; dim]).with_lipschitz(0.0)
    }
}

impl std::fmt::Debug for FnOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FnOracle(dim={})", self.dim)
    }
}

impl FunctionOracle for FnOracle {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
    fn gradient(&self, x: &[f64]) -> Vector {
        (self.g)(x)
    }
    fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }
}

impl<T: FunctionOracle + ?Sized> FunctionOracle for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &[f64]) -> Vector {
        (**self).gradient(x)
    }
    fn value_grad(&self, x: &[f64]) -> (f64, Vector) {
        (**self).value_grad(x)
    }
    fn lipschitz(&self) -> Option<f64> {
        (**self).lipschitz()
    }
}

impl<T: FunctionOracle + ?Sized> FunctionOracle for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &[f64]) -> Vector {
        (**self).gradient(x)
    }
    fn value_grad(&self, x: &[f64]) -> (f64, Vector) {
        (**self).value_grad(x)
    }
    fn lipschitz(&self) -> Option<f64> {
        (**self).lipschitz()
    }
}

impl<T: StochasticOracle + ?Sized> StochasticOracle for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn sample_theta(&self, rng: &mut SimRng) -> Vector {
        (**self).sample_theta(rng)
    }
    fn value_at(&self, x: &[f64], theta: &[f64]) -> f64 {
        (**self).value_at(x, theta)
    }
    fn gradient_at(&self, x: &[f64], theta: &[f64]) -> Vector {
        (**self).gradient_at(x, theta)
    }
    fn mean_value(&self, x: &[f64]) -> Option<f64> {
        (**self).mean_value(x)
    }
}

impl<T: StochasticOracle + ?Sized> StochasticOracle for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn sample_theta(&self, rng: &mut SimRng) -> Vector {
        (**self).sample_theta(rng)
    }
    fn value_at(&self, x: &[f64], theta: &[f64]) -> f64 {
        (**self).value_at(x, theta)
    }
    fn gradient_at(&self, x: &[f64], theta: &[f64]) -> Vector {
        (**self).gradient_at(x, theta)
    }
    fn mean_value(&self, x: &[f64]) -> Option<f64> {
        (**self).mean_value(x)
    }
}

type SampleFn = dyn Fn(&mut SimRng) -> Vector + Send + Sync;
type ValueAtFn = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;
type GradAtFn = dyn Fn(&[f64], &[f64]) -> Vector + Send + Sync;

/// Stochastic oracle assembled from closures.
#[derive(Clone)]
pub struct FnStochastic {
    dim: usize,
    sample: Arc<SampleFn>,
    f: Arc<ValueAtFn>,
    g: Arc<GradAtFn>,
    mean: Option<Arc<ValueFn>>,
}

impl FnStochastic {
    pub fn new(
        dim: usize,
        sample: impl Fn(&mut SimRng) -> Vector + Send + Sync + 'static,
        f: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
        g: impl Fn(&[f64], &[f64]) -> Vector + Send + Sync + 'static,
    ) -> Self {
        FnStochastic {
            dim,
            sample: Arc::new(sample),
            f: Arc::new(f),
            g: Arc::new(g),
            mean: None,
        }
    }

    pub fn with_mean(mut self, mean: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.mean = Some(Arc::new(mean));
        self
    }
}

impl std::fmt::Debug for FnStochastic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FnStochastic(dim={})", self.dim)
    }
}

impl StochasticOracle for FnStochastic {
    fn dim(&self) -> usize {
        self.dim
    }
    fn sample_theta(&self, rng: &mut SimRng) -> Vector {
        (self.sample)(rng)
    }
    fn value_at(&self, x: &[f64], theta: &[f64]) -> f64 {
        (self.f)(x, theta)
    }
    fn gradient_at(&self, x: &[f64], theta: &[f64]) -> Vector {
        (self.g)(x, theta)
    }
    fn mean_value(&self, x: &[f64]) -> Option<f64> {
        self.mean.as_ref().map(|m| m(x))
    }
}

/// A deterministic function seen as a stochastic oracle with no randomness.
/// `sample_theta` returns an empty scenario and never touches the stream.
pub struct Degenerate<F>(pub F);

impl<F: FunctionOracle> StochasticOracle for Degenerate<F> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn sample_theta(&self, _rng: &mut SimRng) -> Vector {
        Vec::new()
    }
    fn value_at(&self, x: &[f64], _theta: &[f64]) -> f64 {
        self.0.value(x)
    }
    fn gradient_at(&self, x: &[f64], _theta: &[f64]) -> Vector {
        self.0.gradient(x)
    }
    fn mean_value(&self, x: &[f64]) -> Option<f64> {
        Some(self.0.value(x))
    }
}

/// The mean function of a stochastic oracle, when it has one, as a
/// deterministic oracle. Gradients fall back to the scenario-free selection
/// `gradient_at(x, [])`, which is only meaningful for degenerate oracles.
pub struct MeanOf<S>(pub S);

impl<S: StochasticOracle> FunctionOracle for MeanOf<S> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.0.mean_value(x).unwrap_or(f64::NAN)
    }
    fn gradient(&self, x: &[f64]) -> Vector {
        self.0.gradient_at(x, &[])
    }
}

/// Counts value and gradient evaluations.
pub struct Counted<F> {
    inner: F,
    values: AtomicU64,
    grads: AtomicU64,
}

impl<F> Counted<F> {
    pub fn new(inner: F) -> Self {
        Counted {
            inner,
            values: AtomicU64::new(0),
            grads: AtomicU64::new(0),
        }
    }
    pub fn value_calls(&self) -> u64 {
        self.values.load(Ordering::Relaxed)
    }
    pub fn gradient_calls(&self) -> u64 {
        self.grads.load(Ordering::Relaxed)
    }
    pub fn calls(&self) -> u64 {
        self.value_calls() + self.gradient_calls()
    }
    pub fn inner(&self) -> &F {
        &self.inner
    }
}

impl<F: FunctionOracle> FunctionOracle for Counted<F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.values.fetch_add(1, Ordering::Relaxed);
        self.inner.value(x)
    }
    fn gradient(&self, x: &[f64]) -> Vector {
        self.grads.fetch_add(1, Ordering::Relaxed);
        self.inner.gradient(x)
    }
    fn value_grad(&self, x: &[f64]) -> (f64, Vector) {
        self.values.fetch_add(1, Ordering::Relaxed);
        self.grads.fetch_add(1, Ordering::Relaxed);
        self.inner.value_grad(x)
    }
    fn lipschitz(&self) -> Option<f64> {
        self.inner.lipschitz()
    }
}

/// Counts scenario draws and evaluations of a stochastic oracle.
pub struct CountedStochastic<S> {
    inner: S,
    draws: AtomicU64,
    evals: AtomicU64,
}

impl<S> CountedStochastic<S> {
    pub fn new(inner: S) -> Self {
        CountedStochastic {
            inner,
            draws: AtomicU64::new(0),
            evals: AtomicU64::new(0),
        }
    }
    pub fn draws(&self) -> u64 {
        self.draws.load(Ordering::Relaxed)
    }
    pub fn evaluations(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }
}

impl<S: StochasticOracle> StochasticOracle for CountedStochastic<S> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn sample_theta(&self, rng: &mut SimRng) -> Vector {
        self.draws.fetch_add(1, Ordering::Relaxed);
        self.inner.sample_theta(rng)
    }
    fn value_at(&self, x: &[f64], theta: &[f64]) -> f64 {
        self.evals.fetch_add(1, Ordering::Relaxed);
        self.inner.value_at(x, theta)
    }
    fn gradient_at(&self, x: &[f64], theta: &[f64]) -> Vector {
        self.evals.fetch_add(1, Ordering::Relaxed);
        self.inner.gradient_at(x, theta)
    }
    fn mean_value(&self, x: &[f64]) -> Option<f64> {
        self.inner.mean_value(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::rng::stream;
    use rand::Rng;

    #[test]
    fn degenerate_oracle_leaves_stream_untouched() {
        let o = Degenerate(FnOracle::linear(vec![1.0, 2.0], 0.0));
        let mut a = stream(1, 0);
        let mut b = stream(1, 0);
        let v = o.sample_value(&[1.0, 1.0], &mut a);
        assert_eq!(v, 3.0);
        assert_eq!(a.gen::<u64>(), b.gen::<u64>());
    }

    #[test]
    fn counters_count() {
        let o = Counted::new(FnOracle::linear(vec![1.0], 0.0));
        o.value(&[1.0]);
        o.value_grad(&[1.0]);
        assert_eq!(o.value_calls(), 2);
        assert_eq!(o.gradient_calls(), 1);
    }
}
