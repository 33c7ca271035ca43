//! Adaptive step rules. The step is ρ_k = M_{t_k} u_k; the level t_k moves up
//! when the rule's trigger fires, which also moves the anchor s_k to k.
//!
//! R2 fires when the hull of the gradients since the anchor comes within θ_t
//! of the origin. R4 fires when the trajectory since the anchor has made
//! little net progress relative to the steps taken:
//! R_k = min_t |x_k − x_t| / Σ_{r=t}^{k−1} ρ_r < θ_t.

use serde::{Deserialize, Serialize};

use super::minnorm::min_norm_point;
use crate::core::vector::{dist, norm, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdaptiveRule {
    R2,
    R4,
}

#[derive(Debug, Clone)]
pub struct AdaptiveStep {
    pub rule: AdaptiveRule,
    m0: f64,
    theta0: f64,
    decay: f64,
    /// Level index t_k.
    pub level: usize,
    /// Anchor index s_k.
    pub anchor: usize,
    /// Start r_k of the averaging window.
    pub window_start: usize,
    window_rho: f64,
    k: usize,
    cap: usize,
    grads: Vec<Vector>,
    /// (x_t, ρ_t) for t in the stored trajectory.
    points: Vec<(Vector, f64)>,
    last_u: f64,
}

impl AdaptiveStep {
    /// Geometric levels M_t = M₀ 2^{−t}, θ_t = θ₀ 2^{−t}.
    pub fn new(rule: AdaptiveRule, m0: f64, theta0: f64) -> Self {
        AdaptiveStep {
            rule,
            m0,
            theta0,
            decay: 0.5,
            level: 0,
            anchor: 0,
            window_start: 0,
            window_rho: 0.0,
            k: 0,
            cap: 1000,
            grads: Vec::new(),
            points: Vec::new(),
            last_u: 1.0,
        }
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap.max(2);
        self
    }

    pub fn m(&self, t: usize) -> f64 {
        self.m0 * self.decay.powi(t as i32)
    }

    pub fn theta(&self, t: usize) -> f64 {
        self.theta0 * self.decay.powi(t as i32)
    }

    /// u_k = (k − r_k + 1)^{1/2}
    pub fn u(&self) -> f64 {
        self.last_u
    }

    /// Feed iteration k's point and gradient; returns ρ_k and advances the
    /// level for iteration k+1 if the trigger fires.
    pub fn step(&mut self, x: &[f64], g: &[f64]) -> f64 {
        let k = self.k;
        let u = ((k - self.window_start + 1) as f64).sqrt();
        self.last_u = u;
        let rho = self.m(self.level) * u;

        let fired = match self.rule {
            AdaptiveRule::R2 => {
                self.grads.push(g.to_vec());
                if self.grads.len() > self.cap {
                    self.grads.remove(0);
                }
                norm(&min_norm_point(&self.grads, 1e-10)) < self.theta(self.level)
            }
            AdaptiveRule::R4 => {
                let mut ratio = f64::INFINITY;
                let mut acc = 0.0;
                for (xt, rt) in self.points.iter().rev() {
                    acc += rt;
                    if acc > 0.0 {
                        ratio = ratio.min(dist(x, xt) / acc);
                    }
                }
                self.points.push((x.to_vec(), rho));
                while self.points.len() > self.cap {
                    self.points.remove(0);
                }
                ratio < self.theta(self.level)
            }
        };
        if fired {
            self.level += 1;
            self.anchor = k;
            self.grads.clear();
            self.points.clear();
            if self.rule == AdaptiveRule::R2 {
                self.grads.push(g.to_vec());
            } else {
                self.points.push((x.to_vec(), rho));
            }
        }
        // Averaging window restart: r_{k+1} = k once Σ_{r_k}^k ρ_r exceeds M_t.
        self.window_rho += rho;
        if self.window_rho > self.m(self.level) {
            self.window_start = k;
            self.window_rho = 0.0;
        }
        self.k += 1;
        rho
    }
}
