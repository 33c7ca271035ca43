//! Minimum-norm point of the convex hull of finitely many vectors
//! (Wolfe's active-set method).

use nalgebra::{DMatrix, DVector};

use crate::core::vector::{dot, Vector};

/// Affine minimizer over the points in `set`: weights v with Σv = 1 that
/// minimize |Σ v_i p_i|. Solved from the bordered Gram system, with an SVD
/// fallback when the points are affinely dependent.
fn affine_minimizer(points: &[Vector], set: &[usize]) -> Vec<f64> {
    let s = set.len();
    let mut m = DMatrix::zeros(s + 1, s + 1);
    for i in 0..s {
        for j in 0..s {
            m[(i, j)] = dot(&points[set[i]], &points[set[j]]);
        }
        m[(i, s)] = 1.0;
        m[(s, i)] = 1.0;
    }
    let mut rhs = DVector::zeros(s + 1);
    rhs[s] = 1.0;
    let sol = match m.clone().lu().solve(&rhs) {
        Some(v) if v.iter().all(|x| x.is_finite()) => v,
        _ => m
            .svd(true, true)
            .solve(&rhs, 1e-14)
            .unwrap_or_else(|_| DVector::from_element(s + 1, 1.0 / s as f64)),
    };
    sol.iter().take(s).copied().collect()
}

fn combine(points: &[Vector], set: &[usize], w: &[f64]) -> Vector {
    let n = points[set[0]].len();
    let mut x = vec![0.0; n];
    for (&i, &wi) in set.iter().zip(w) {
        for (xj, pj) in x.iter_mut().zip(&points[i]) {
            *xj += wi * pj;
        }
    }
    x
}

/// Minimum-norm point and its convex weights (one per input point).
///
/// Panics if `points` is empty.
pub fn min_norm_weights(points: &[Vector], tol: f64) -> (Vector, Vec<f64>) {
    assert!(!points.is_empty(), "min_norm_point needs at least one point");
    let scale = points.iter().map(|p| dot(p, p)).fold(0.0, f64::max);
    let start = (0..points.len())
        .min_by(|&a, &b| {
            dot(&points[a], &points[a])
                .partial_cmp(&dot(&points[b], &points[b]))
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .unwrap_or(0);
    let mut set = vec![start];
    let mut w = vec![1.0];
    let mut x = points[start].clone();
    let cap = 10 * points.len() + 10;
    let wtol = 1e-14;

    for _ in 0..cap {
        if scale == 0.0 {
            break;
        }
        let xx = dot(&x, &x);
        let (j, xp) = (0..points.len())
            .map(|j| (j, dot(&x, &points[j])))
            .fold((0, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best });
        if xx - xp <= tol * scale || set.contains(&j) {
            break;
        }
        set.push(j);
        w.push(0.0);
        // Minor cycles: move toward the affine minimizer while it leaves the hull.
        for _ in 0..cap {
            let v = affine_minimizer(points, &set);
            if v.iter().all(|&vi| vi > wtol) {
                w = v;
                break;
            }
            let mut theta = 1.0f64;
            for (wi, vi) in w.iter().zip(&v) {
                if *vi <= wtol {
                    let den = wi - vi;
                    theta = if den > 0.0 { theta.min(wi / den) } else { 0.0 };
                }
            }
            for (wi, vi) in w.iter_mut().zip(&v) {
                *wi += theta * (vi - *wi);
            }
            // Drop at least the blocking point.
            let min_idx = (0..w.len())
                .min_by(|&a, &b| w[a].partial_cmp(&w[b]).unwrap_or(std::cmp::Ordering::Equal))
                .unwrap_or(0);
            let mut keep_set = Vec::with_capacity(set.len());
            let mut keep_w = Vec::with_capacity(set.len());
            for (i, (&si, &wi)) in set.iter().zip(&w).enumerate() {
                if wi > wtol && i != min_idx {
                    keep_set.push(si);
                    keep_w.push(wi);
                }
            }
            if keep_set.is_empty() {
                keep_set.push(set[min_idx]);
                keep_w.push(1.0);
            }
            let total: f64 = keep_w.iter().sum();
            set = keep_set;
            w = keep_w.iter().map(|v| v / total).collect();
        }
        x = combine(points, &set, &w);
    }

    let mut weights = vec![0.0; points.len()];
    for (&i, &wi) in set.iter().zip(&w) {
        weights[i] += wi;
    }
    (x, weights)
}

/// Minimum-norm element of `co{points}`.
pub fn min_norm_point(points: &[Vector], tol: f64) -> Vector {
    min_norm_weights(points, tol).0
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::core::vector::norm;
    use proptest::prelude::*;

    /// Exact QP by enumerating faces: for every subset, the affine minimizer
    /// with nonnegative weights is a candidate; the best candidate wins.
    pub(crate) fn brute_force(points: &[Vector]) -> Vector {
        let n = points.len();
        let mut best: Option<Vector> = None;
        for mask in 1u32..(1 << n) {
            let set: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            let s = set.len();
            let mut m = DMatrix::zeros(s + 1, s + 1);
            for i in 0..s {
                for j in 0..s {
                    m[(i, j)] = dot(&points[set[i]], &points[set[j]]);
                }
                m[(i, s)] = 1.0;
                m[(s, i)] = 1.0;
            }
            if m.determinant().abs() < 1e-12 {
                continue;
            }
            let mut rhs = DVector::zeros(s + 1);
            rhs[s] = 1.0;
            let Some(v) = m.lu().solve(&rhs) else { continue };
            if v.iter().take(s).any(|&vi| vi < -1e-12) {
                continue;
            }
            let w: Vec<f64> = v.iter().take(s).copied().collect();
            let x = combine(points, &set, &w);
            if best.as_ref().map_or(true, |b| norm(&x) < norm(b)) {
                best = Some(x);
            }
        }
        best.expect("singletons are always candidates")
    }

    #[test]
    fn symmetric_pair_and_singleton() {
        let p = min_norm_point(&[vec![1.0, 0.0], vec![-1.0, 0.0]], 1e-10);
        assert!(norm(&p) < 1e-15);
        assert_eq!(min_norm_point(&[vec![1.0, 0.0]], 1e-10), vec![1.0, 0.0]);
    }

    #[test]
    fn segment_interior() {
        let p = min_norm_point(&[vec![1.0, 1.0], vec![1.0, -1.0]], 1e-10);
        assert!((p[0] - 1.0).abs() < 1e-14 && p[1].abs() < 1e-14);
    }

    fn point_sets() -> impl Strategy<Value = Vec<Vector>> {
        proptest::collection::vec(proptest::collection::vec(-3.0f64..3.0, 3), 1..=6)
    }

    proptest! {
        #[test]
        fn matches_face_enumeration(points in point_sets()) {
            let (x, w) = min_norm_weights(&points, 1e-10);
            let b = brute_force(&points);
            prop_assert!((norm(&x) - norm(&b)).abs() <= 1e-8);
            prop_assert!(w.iter().all(|&v| v >= -1e-12));
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            let mean: Vector = (0..3)
                .map(|j| points.iter().map(|p| p[j]).sum::<f64>() / points.len() as f64)
                .collect();
            prop_assert!(norm(&x) <= norm(&mean) + 1e-9);
            for p in &points {
                prop_assert!(norm(&x) <= norm(p) + 1e-9);
            }
        }
    }
}
