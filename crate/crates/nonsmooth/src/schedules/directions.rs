//! Direction rules: running weighted means, min-norm segment and hull updates.
//!
//! Every rule keeps the gradients seen since the last restart together with
//! the convex coefficients of the current direction over them, so callers can
//! audit that the output stays in the hull of its inputs.

use serde::{Deserialize, Serialize};

use super::minnorm::min_norm_weights;
use crate::core::vector::{dot, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DirectionRule {
    /// Weighted running mean Σρ_r g^r / Σρ_r.
    L1,
    /// Min-norm point of the segment [l_prev, g].
    L2,
    /// Min-norm point of all gradients since restart.
    L3,
    /// Min-norm point of the previous direction and the last `window` gradients.
    L4 { window: usize },
    /// (1−α) P + α g with the norm-minimizing α.
    P2,
    /// Arithmetic mean.
    P3,
}

/// Norm-minimizing α ∈ [0, 1] for (1−α) l + α g.
pub fn segment_alpha(l: &[f64], g: &[f64]) -> f64 {
    let diff: Vector = l.iter().zip(g).map(|(a, b)| a - b).collect();
    let dd = dot(&diff, &diff);
    if dd == 0.0 {
        return 1.0;
    }
    (dot(l, &diff) / dd).clamp(0.0, 1.0)
}

#[derive(Debug, Clone)]
pub struct DirectionState {
    pub rule: DirectionRule,
    points: Vec<Vector>,
    coeffs: Vec<f64>,
    weight_sum: f64,
    l: Option<Vector>,
}

impl DirectionState {
    pub fn new(rule: DirectionRule) -> Self {
        DirectionState {
            rule,
            points: Vec::new(),
            coeffs: Vec::new(),
            weight_sum: 0.0,
            l: None,
        }
    }

    pub fn restart(&mut self) {
        self.points.clear();
        self.coeffs.clear();
        self.weight_sum = 0.0;
        self.l = None;
    }

    pub fn direction(&self) -> Option<&Vector> {
        self.l.as_ref()
    }

    /// Gradients since restart and the convex coefficients of the current
    /// direction over them.
    pub fn hull(&self) -> (&[Vector], &[f64]) {
        (&self.points, &self.coeffs)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Add a gradient (with weight ρ for L1; ignored otherwise) and return the
    /// new direction.
    pub fn update(&mut self, g: &[f64], weight: f64) -> Vector {
        self.points.push(g.to_vec());
        let first = self.l.is_none();
        match self.rule {
            DirectionRule::L1 | DirectionRule::P3 => {
                let w = if matches!(self.rule, DirectionRule::P3) {
                    1.0
                } else {
                    weight
                };
                let total = self.weight_sum + w;
                let t = if total > 0.0 { w / total } else { 1.0 };
                self.weight_sum = total;
                self.blend(g, t);
            }
            DirectionRule::L2 | DirectionRule::P2 => {
                let t = match &self.l {
                    Some(l) => segment_alpha(l, g),
                    None => 1.0,
                };
                self.blend(g, t);
            }
            DirectionRule::L3 => {
                let (l, w) = min_norm_weights(&self.points, 1e-10);
                self.coeffs = w;
                self.l = Some(l);
            }
            DirectionRule::L4 { window } => {
                let n = self.points.len();
                let lo = n.saturating_sub(window.max(1));
                let mut cand: Vec<Vector> = Vec::new();
                if let (false, Some(l)) = (first, &self.l) {
                    cand.push(l.clone());
                }
                cand.extend(self.points[lo..].iter().cloned());
                let (l, w) = min_norm_weights(&cand, 1e-10);
                let mut coeffs = vec![0.0; n];
                let mut off = 0;
                if !first {
                    for (c, p) in coeffs.iter_mut().zip(&self.coeffs) {
                        *c += w[0] * p;
                    }
                    off = 1;
                }
                for (i, wi) in w[off..].iter().enumerate() {
                    coeffs[lo + i] += wi;
                }
                self.coeffs = coeffs;
                self.l = Some(l);
            }
        }
        self.l.clone().unwrap_or_default()
    }

    /// l ← (1−t) l + t g, tracking coefficients.
    fn blend(&mut self, g: &[f64], t: f64) {
        let l = match self.l.take() {
            Some(l) => l.iter().zip(g).map(|(a, b)| (1.0 - t) * a + t * b).collect(),
            None => g.to_vec(),
        };
        let first = self.coeffs.is_empty();
        for c in self.coeffs.iter_mut() {
            *c *= 1.0 - t;
        }
        self.coeffs.push(if first { 1.0 } else { t });
        self.l = Some(l);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::vector::dist;
    use proptest::prelude::*;

    #[test]
    fn l1_equal_weights_mean() {
        let mut s = DirectionState::new(DirectionRule::L1);
        s.update(&[1.0, 0.0], 1.0);
        let l = s.update(&[0.0, 1.0], 1.0);
        assert_eq!(l, vec![0.5, 0.5]);
    }

    #[test]
    fn l2_segment_through_origin() {
        let mut s = DirectionState::new(DirectionRule::L2);
        s.update(&[1.0, 0.0], 1.0);
        let l = s.update(&[-1.0, 0.0], 1.0);
        assert_eq!(l, vec![0.0, 0.0]);
    }

    #[test]
    fn p2_optimal_alpha() {
        assert_eq!(segment_alpha(&[1.0, 0.0], &[0.0, 1.0]), 0.5);
        let mut s = DirectionState::new(DirectionRule::P2);
        s.update(&[1.0, 0.0], 1.0);
        assert_eq!(s.update(&[0.0, 1.0], 1.0), vec![0.5, 0.5]);
    }

    fn rules() -> Vec<DirectionRule> {
        vec![
            DirectionRule::L1,
            DirectionRule::L2,
            DirectionRule::L3,
            DirectionRule::L4 { window: 2 },
            DirectionRule::P2,
            DirectionRule::P3,
        ]
    }

    proptest! {
        #[test]
        fn output_is_a_convex_combination(
            grads in proptest::collection::vec(proptest::collection::vec(-2.0f64..2.0, 3), 1..12),
            weights in proptest::collection::vec(0.1f64..2.0, 12),
        ) {
            for rule in rules() {
                let mut s = DirectionState::new(rule);
                for (g, w) in grads.iter().zip(&weights) {
                    let l = s.update(g, *w);
                    let (pts, c) = s.hull();
                    prop_assert!(c.iter().all(|&v| v >= -1e-12));
                    prop_assert!((c.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
                    let mut rec = vec![0.0; 3];
                    for (p, ci) in pts.iter().zip(c) {
                        for j in 0..3 { rec[j] += ci * p[j]; }
                    }
                    prop_assert!(dist(&rec, &l) <= 1e-9);
                }
            }
        }
    }
}
