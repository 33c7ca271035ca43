//! One-dimensional global minimization by lower envelopes.
//!
//! Each evaluated point y contributes a minorant φ(y, ·): the cone
//! f(y) − L|x − y| for Lipschitz f, or the concave parabola
//! f(y) + f′(y)(x − y) − (L/2)(x − y)² when f′ is L-Lipschitz. The next point
//! is an exact minimizer of the upper envelope φ_k, found by enumerating its
//! breakpoints. f_best − min φ_k bounds the error of the best point.

use serde::{Deserialize, Serialize};

use crate::core::error::{check_dim, OptError, Result};
use crate::core::oracle::FunctionOracle;
use crate::core::trace::{RunTrace, StopReason, StopRule};
use crate::core::trace::Recorder;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeMode {
    Cone,
    Paraboloid,
}

fn default_budget() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiyavskiiConfig {
    pub lo: f64,
    pub hi: f64,
    /// Lipschitz constant of f (cone) or of f′ (paraboloid). Must not be
    /// below the true constant, or the certificate is void.
    pub l: f64,
    pub mode: EnvelopeMode,
    /// Lipschitz constant of the constraint h, when one is given.
    #[serde(default)]
    pub constraint_l: Option<f64>,
    pub eps_gap: f64,
    /// Maximum number of evaluations of f.
    #[serde(default = "default_budget")]
    pub budget: usize,
}

impl PiyavskiiConfig {
    pub fn new(lo: f64, hi: f64, l: f64, mode: EnvelopeMode, eps_gap: f64) -> Self {
        PiyavskiiConfig {
            lo,
            hi,
            l,
            mode,
            constraint_l: None,
            eps_gap,
            budget: default_budget(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi) {
            return Err(OptError::InvalidParameter("need a finite interval lo <= hi".into()));
        }
        if !(self.l > 0.0) || !(self.eps_gap > 0.0) || self.budget == 0 {
            return Err(OptError::InvalidParameter(
                "need l > 0, eps_gap > 0 and a positive budget".into(),
            ));
        }
        if let Some(lh) = self.constraint_l {
            if !(lh > 0.0) {
                return Err(OptError::InvalidParameter("constraint_l must be positive".into()));
            }
        }
        Ok(())
    }
}

/// The minorants collected so far.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub mode: EnvelopeMode,
    pub l: f64,
    /// (y, f(y), f′(y)) in evaluation order.
    pub points: Vec<(f64, f64, f64)>,
}

impl Envelope {
    fn piece(&self, (y, fy, gy): (f64, f64, f64), x: f64) -> f64 {
        match self.mode {
            EnvelopeMode::Cone => fy - self.l * (x - y).abs(),
            EnvelopeMode::Paraboloid => fy + gy * (x - y) - 0.5 * self.l * (x - y) * (x - y),
        }
    }

    /// φ_k(x).
    pub fn value(&self, x: f64) -> f64 {
        self.points
            .iter()
            .map(|p| self.piece(*p, x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Envelope built from the first `k` points only.
    pub fn prefix(&self, k: usize) -> Envelope {
        Envelope {
            mode: self.mode,
            l: self.l,
            points: self.points[..k.min(self.points.len())].to_vec(),
        }
    }

    /// Points where φ_k can attain its minimum over a subinterval of
    /// [lo, hi], excluding the subinterval ends.
    fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out: Vec<f64> = self.points.iter().map(|p| p.0).collect();
        match self.mode {
            EnvelopeMode::Cone => {
                // Between consecutive sample points φ = max(A − Lx, B + Lx)
                // with A the best right branch and B the best left branch.
                let mut s: Vec<(f64, f64)> = self.points.iter().map(|p| (p.0, p.1)).collect();
                s.sort_by(|a, b| a.0.total_cmp(&b.0));
                let n = s.len();
                let l = self.l;
                let mut suffix = vec![f64::NEG_INFINITY; n + 1];
                for i in (0..n).rev() {
                    suffix[i] = suffix[i + 1].max(s[i].1 - l * s[i].0);
                }
                let mut a = f64::NEG_INFINITY;
                for i in 0..n.saturating_sub(1) {
                    a = a.max(s[i].1 + l * s[i].0);
                    let b = suffix[i + 1];
                    let x = ((a - b) / (2.0 * l)).clamp(s[i].0, s[i + 1].0);
                    out.push(x);
                }
            }
            EnvelopeMode::Paraboloid => {
                // φ = max_i ℓ_i(x) − (L/2)x² with affine ℓ_i; the minimum over
                // a piece of the line envelope sits at a piece end.
                let l = self.l;
                let mut lines: Vec<(f64, f64)> = self
                    .points
                    .iter()
                    .map(|&(y, fy, gy)| (gy + l * y, fy - gy * y - 0.5 * l * y * y))
                    .collect();
                out.extend(upper_envelope_breaks(&mut lines));
            }
        }
        out.retain(|x| *x > lo && *x < hi);
        out
    }

    /// (x, φ_k(x)) at `n` evenly spaced points and every breakpoint, sorted.
    pub fn polyline(&self, lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
        let mut xs = self.breakpoints(lo, hi);
        let n = n.max(2);
        for i in 0..n {
            xs.push(lo + (hi - lo) * i as f64 / (n - 1) as f64);
        }
        xs.sort_by(|a, b| a.total_cmp(b));
        xs.dedup();
        xs.into_iter().map(|x| (x, self.value(x))).collect()
    }

    /// CSV with header `x,phi`.
    pub fn to_csv(&self, lo: f64, hi: f64, n: usize) -> String {
        let mut s = String::from("x,phi\n");
        for (x, v) in self.polyline(lo, hi, n) {
            s.push_str(&format!("{},{}\n", crate::core::trace::fmt17(x), crate::core::trace::fmt17(v)));
        }
        s
    }
}

/// Breakpoints of max_i (m_i x + c_i) over the real line.
fn upper_envelope_breaks(lines: &mut Vec<(f64, f64)>) -> Vec<f64> {
    lines.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    // equal slopes: keep the highest intercept (the last after sorting)
    let mut uniq: Vec<(f64, f64)> = Vec::with_capacity(lines.len());
    for &ln in lines.iter() {
        if let Some(last) = uniq.last_mut() {
            if last.0 == ln.0 {
                *last = ln;
                continue;
            }
        }
        uniq.push(ln);
    }
    let cross = |p: (f64, f64), q: (f64, f64)| (p.1 - q.1) / (q.0 - p.0);
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(uniq.len());
    for ln in uniq {
        while hull.len() >= 2 {
            let n = hull.len();
            if cross(hull[n - 2], ln) <= cross(hull[n - 2], hull[n - 1]) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(ln);
    }
    hull.windows(2).map(|w| cross(w[0], w[1])).collect()
}

/// Closed intervals of [lo, hi] left after removing the open intervals.
fn feasible_intervals(lo: f64, hi: f64, mut banned: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    banned.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = Vec::new();
    let mut start = lo;
    for (a, b) in banned {
        if b <= start {
            continue;
        }
        if a >= hi {
            break;
        }
        if a >= start {
            out.push((start, a));
        }
        start = start.max(b);
        if start > hi {
            return out;
        }
    }
    if start <= hi {
        out.push((start, hi));
    }
    out
}

#[derive(Debug, Clone)]
pub struct PiyavskiiResult {
    pub x_best: f64,
    pub f_best: f64,
    /// f_best − min φ_k at termination; bounds f(x_best) − min f.
    pub gap: f64,
    pub lower_bound: f64,
    pub evaluations: usize,
    pub envelope: Envelope,
    /// One row per evaluation: f = f(x_k), residual = certificate after the
    /// evaluation, h_violation = h(x_k)⁺, step = f(x_k) − φ_{k−1}(x_k).
    pub trace: RunTrace,
}

/// Lower-envelope method on [lo, hi] starting from lo. With a constraint h
/// (Lipschitz constant `constraint_l`), points are restricted to where every
/// cone h(x_i) − L_h|x − x_i| of an infeasible sample is ≤ 0.
pub fn piyavskii_solve(
    f: &dyn FunctionOracle,
    h: Option<&dyn FunctionOracle>,
    cfg: &PiyavskiiConfig,
) -> Result<PiyavskiiResult> {
    cfg.validate()?;
    check_dim(1, f.dim())?;
    let lh = match h {
        Some(h) => {
            check_dim(1, h.dim())?;
            Some(cfg.constraint_l.ok_or_else(|| {
                OptError::InvalidParameter("a constraint needs constraint_l".into())
            })?)
        }
        None => None,
    };
    let mut env = Envelope {
        mode: cfg.mode,
        l: cfg.l,
        points: Vec::with_capacity(cfg.budget),
    };
    let mut banned: Vec<(f64, f64)> = Vec::new();
    let mut best: Option<(f64, f64)> = None;
    let mut rec = Recorder::new(&StopRule::iterations(cfg.budget));
    let mut x = cfg.lo;
    let mut lower = f64::NEG_INFINITY;
    let mut gap = f64::INFINITY;
    let mut reason = StopReason::MaxIter;
    for k in 0..cfg.budget {
        let (fx, gx) = match cfg.mode {
            EnvelopeMode::Cone => (f.value(&[x]), 0.0),
            EnvelopeMode::Paraboloid => {
                let (v, g) = f.value_grad(&[x]);
                (v, g[0])
            }
        };
        if !fx.is_finite() {
            return Err(OptError::NonFinite);
        }
        let eps_k = fx - env.value(x);
        env.points.push((x, fx, gx));
        let hx = h.map_or(0.0, |h| h.value(&[x]));
        if hx > 0.0 {
            banned.push((x - hx / lh.unwrap_or(1.0), x + hx / lh.unwrap_or(1.0)));
        } else if best.map_or(true, |(_, fb)| fx < fb) {
            best = Some((x, fx));
        }

        // next point: exact minimizer of φ_k over the admissible region
        let regions = feasible_intervals(cfg.lo, cfg.hi, banned.clone());
        if regions.is_empty() {
            return Err(OptError::ReportedInfeasible(k));
        }
        let mut cands: Vec<f64> = regions.iter().flat_map(|r| [r.0, r.1]).collect();
        for c in env.breakpoints(cfg.lo, cfg.hi) {
            if regions.iter().any(|r| c >= r.0 && c <= r.1) {
                cands.push(c);
            }
        }
        let mut arg = (f64::INFINITY, cfg.lo);
        for c in cands {
            let v = env.value(c);
            if v < arg.0 || (v == arg.0 && c < arg.1) {
                arg = (v, c);
            }
        }
        lower = arg.0;
        gap = best.map_or(f64::INFINITY, |(_, fb)| fb - lower);
        rec.log(k + 1, fx, gap, hx.max(0.0), eps_k);
        if gap <= cfg.eps_gap {
            reason = StopReason::ResidualBelow;
            break;
        }
        x = arg.1;
    }
    let evaluations = env.points.len();
    let (x_best, f_best) = best.unwrap_or((f64::NAN, f64::NAN));
    rec.set("lower_bound", lower);
    let trace = rec.finish(
        0,
        format!("{:?}", cfg),
        vec![x_best],
        None,
        reason,
        evaluations,
        evaluations as u64,
    );
    Ok(PiyavskiiResult {
        x_best,
        f_best,
        gap,
        lower_bound: lower,
        evaluations,
        envelope: env,
        trace,
    })
}
