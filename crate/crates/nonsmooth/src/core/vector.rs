//! Dense vectors are plain `Vec<f64>`; these helpers keep the solver code short.

pub type Vector = Vec<f64>;

pub fn zeros(n: usize) -> Vector {
    vec![0.0; n]
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn sub(a: &[f64], b: &[f64]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vector {
    a.iter().map(|x| x * s).collect()
}

/// y += s * x
pub fn axpy(y: &mut [f64], s: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|v| v.is_finite())
}

/// g / |g|, and the zero vector when g = 0.
pub fn normalized(g: &[f64]) -> Vector {
    let n = norm(g);
    if n > 0.0 {
        scale(g, 1.0 / n)
    } else {
        zeros(g.len())
    }
}

pub fn unit(n: usize, i: usize) -> Vector {
    let mut e = zeros(n);
    e[i] = 1.0;
    e
}
