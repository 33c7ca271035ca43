//! Iterate averaging and the implied weights of momentum recursions.

use crate::core::vector::Vector;

/// x̂_k = Σ ρ_s x_s / Σ ρ_s, maintained incrementally.
#[derive(Debug, Clone, Default)]
pub struct Cesaro {
    total: f64,
    xhat: Option<Vector>,
}

impl Cesaro {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn update(&mut self, x: &[f64], rho: f64) -> &Vector {
        self.total += rho;
        let tau = rho / self.total;
        match &mut self.xhat {
            Some(xh) => {
                for (a, b) in xh.iter_mut().zip(x) {
                    *a += tau * (b - *a);
                }
            }
            None => self.xhat = Some(x.to_vec()),
        }
        self.xhat.as_ref().expect("set above")
    }

    pub fn value(&self) -> Option<&Vector> {
        self.xhat.as_ref()
    }

    pub fn weight(&self) -> f64 {
        self.total
    }
}

/// Weights μ_r of g^r in P^k for P⁰ = g⁰, P^k = (1−γ_k) P^{k−1} + γ_k g^k.
/// `gammas[k]` is γ_k for k ≥ 1; `gammas[0]` is ignored (g⁰ enters with
/// weight 1).
pub fn heavy_ball_weights(gammas: &[f64]) -> Vec<f64> {
    let k = gammas.len();
    let mut w = vec![0.0; k];
    let mut tail = 1.0;
    for r in (0..k).rev() {
        let g = if r == 0 { 1.0 } else { gammas[r] };
        w[r] = g * tail;
        tail *= 1.0 - g;
    }
    w
}
