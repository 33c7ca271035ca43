//! Step, smoothing, shift and averaging sequences, their convergence-condition
//! checks, and the direction/step rules used by the averaged methods.

pub mod adaptive;
pub mod averaging;
pub mod directions;
pub mod minnorm;

pub use adaptive::{AdaptiveRule, AdaptiveStep};
pub use averaging::{heavy_ball_weights, Cesaro};
pub use directions::{DirectionRule, DirectionState};
pub use minnorm::{min_norm_point, min_norm_weights};

use serde::{Deserialize, Serialize};

use crate::core::error::{OptError, Result};

fn one() -> f64 {
    1.0
}

/// `c · (k + k0)^(−exp)`, optionally capped from above.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Power {
    pub c: f64,
    pub exp: f64,
    #[serde(default = "one")]
    pub k0: f64,
    #[serde(default)]
    pub cap: Option<f64>,
}

impl Power {
    pub fn new(c: f64, exp: f64) -> Self {
        Power {
            c,
            exp,
            k0: 1.0,
            cap: None,
        }
    }

    pub fn constant(c: f64) -> Self {
        Power::new(c, 0.0)
    }

    pub fn with_k0(mut self, k0: f64) -> Self {
        self.k0 = k0;
        self
    }

    pub fn with_cap(mut self, cap: f64) -> Self {
        self.cap = Some(cap);
        self
    }

    pub fn at(&self, k: usize) -> f64 {
        let v = self.c * (k as f64 + self.k0).powf(-self.exp);
        match self.cap {
            Some(cap) => v.min(cap),
            None => v,
        }
    }

    fn squared(&self) -> Power {
        Power {
            c: self.c * self.c,
            exp: 2.0 * self.exp,
            k0: self.k0,
            cap: self.cap.map(|c| c * c),
        }
    }
}

/// Joint schedule. Missing Δ defaults to α²; missing `a` means the method
/// does not average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub rho: Power,
    #[serde(default)]
    pub alpha: Option<Power>,
    #[serde(default)]
    pub delta: Option<Power>,
    #[serde(default)]
    pub a: Option<Power>,
}

impl Schedule {
    pub fn steps(rho: Power) -> Self {
        Schedule {
            rho,
            alpha: None,
            delta: None,
            a: None,
        }
    }

    pub fn with_alpha(mut self, alpha: Power) -> Self {
        self.alpha = Some(alpha);
        self
    }

    pub fn with_delta(mut self, delta: Power) -> Self {
        self.delta = Some(delta);
        self
    }

    pub fn with_a(mut self, a: Power) -> Self {
        self.a = Some(a);
        self
    }

    pub fn rho(&self, k: usize) -> f64 {
        self.rho.at(k)
    }

    pub fn alpha(&self, k: usize) -> f64 {
        self.alpha.map_or(0.0, |p| p.at(k))
    }

    pub fn delta(&self, k: usize) -> f64 {
        self.delta_power().map_or(0.0, |p| p.at(k))
    }

    pub fn a(&self, k: usize) -> f64 {
        self.a.map_or(1.0, |p| p.at(k)).min(1.0)
    }

    fn delta_power(&self) -> Option<Power> {
        self.delta.or_else(|| self.alpha.map(|a| a.squared()))
    }

    pub fn validate(&self, set: ConditionSet) -> ValidationReport {
        validate_schedule(self, set)
    }
}

/// Convergence-condition families of the methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionSet {
    /// Generalized gradient descent.
    Ggd,
    /// Finite-difference method with smoothing.
    Fd,
    /// Minimax finite-difference method.
    Minimax,
    /// Finite differences with averaged directions.
    FdAveraged,
    /// Penalty finite-difference method.
    PenaltyFd,
    /// Averaged-direction penalty method with analytic multiplier.
    AnalyticPenalty,
    /// Deterministic Arrow–Hurwicz with finite differences.
    ArrowHurwicz,
    /// Kiefer–Wolfowitz type stochastic finite differences.
    KieferWolfowitz,
    /// Tracking of a moving mean by the averaging operation.
    Averaging,
    /// Averaged stochastic gradients with projection.
    AveragedDirection,
    /// Averaged finite-difference directions (projected or free).
    AveragedDirectionFd,
    /// Stochastic conditional gradient, smooth case.
    ConditionalGradient,
    /// Stochastic conditional gradient, Lipschitz case.
    ConditionalGradientLipschitz,
    /// Stochastic Arrow–Hurwicz.
    StoArrowHurwicz,
    /// Stochastic quasi-gradient methods (plain, averaged, heavy ball, gully).
    Sqg,
}

impl ConditionSet {
    pub const ALL: [ConditionSet; 15] = [
        ConditionSet::Ggd,
        ConditionSet::Fd,
        ConditionSet::Minimax,
        ConditionSet::FdAveraged,
        ConditionSet::PenaltyFd,
        ConditionSet::AnalyticPenalty,
        ConditionSet::ArrowHurwicz,
        ConditionSet::KieferWolfowitz,
        ConditionSet::Averaging,
        ConditionSet::AveragedDirection,
        ConditionSet::AveragedDirectionFd,
        ConditionSet::ConditionalGradient,
        ConditionSet::ConditionalGradientLipschitz,
        ConditionSet::StoArrowHurwicz,
        ConditionSet::Sqg,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ConditionSet::Ggd => "ggd",
            ConditionSet::Fd => "fd",
            ConditionSet::Minimax => "minimax",
            ConditionSet::FdAveraged => "fd_averaged",
            ConditionSet::PenaltyFd => "penalty_fd",
            ConditionSet::AnalyticPenalty => "analytic_penalty",
            ConditionSet::ArrowHurwicz => "arrow_hurwicz",
            ConditionSet::KieferWolfowitz => "kiefer_wolfowitz",
            ConditionSet::Averaging => "averaging",
            ConditionSet::AveragedDirection => "averaged_direction",
            ConditionSet::AveragedDirectionFd => "averaged_direction_fd",
            ConditionSet::ConditionalGradient => "conditional_gradient",
            ConditionSet::ConditionalGradientLipschitz => "conditional_gradient_lipschitz",
            ConditionSet::StoArrowHurwicz => "sto_arrow_hurwicz",
            ConditionSet::Sqg => "sqg",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        ConditionSet::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| OptError::Unknown {
                kind: "condition set",
                name: s.to_string(),
            })
    }

    fn conditions(&self) -> &'static [Condition] {
        use Condition::*;
        match self {
            ConditionSet::Ggd => &[SumRhoInf, RhoToZero],
            ConditionSet::Fd | ConditionSet::KieferWolfowitz => &[
                SumRhoInf,
                SumRho2Fin,
                RhoOverAlpha,
                DeltaOverAlpha,
                AlphaDiffOverRho,
                AlphaToZero,
            ],
            ConditionSet::Minimax => &[SumRhoInf, SumRho2Fin, DeltaOverAlpha, AlphaToZero],
            ConditionSet::Sqg => &[SumRhoInf, SumRho2Fin],
            ConditionSet::FdAveraged => &[
                SumRhoInf,
                SumRho2Fin,
                RhoOverAlpha,
                DeltaOverAlpha,
                AlphaDiffOverRho,
                AlphaToZero,
                AlphaRatioToOne,
                RhoRatioBounded,
            ],
            ConditionSet::PenaltyFd => &[SumRhoInf, SumRho2Fin, DeltaOverRhoInf, AlphaToZero],
            ConditionSet::AnalyticPenalty => &[
                SumRhoInf,
                SumRhoOverAlpha2Fin,
                RhoOverAlphaA,
                SumA2Fin,
                AlphaDiffOverRho,
                AlphaToZero,
                DeltaOverAlpha,
            ],
            ConditionSet::ArrowHurwicz | ConditionSet::StoArrowHurwicz => &[
                SumRhoInf,
                SumRho2Fin,
                DeltaOverAlpha,
                AlphaToZero,
                SumRhoAlphaFin,
            ],
            ConditionSet::Averaging => &[SumAInf, SumA2Fin, RhoOverA],
            ConditionSet::AveragedDirection | ConditionSet::ConditionalGradient => {
                &[SumRhoInf, SumA2Fin, RhoOverA]
            }
            ConditionSet::AveragedDirectionFd => &[
                SumRhoInf,
                SumAInf,
                SumA2Fin,
                RhoOverA,
                SumRhoOverAlpha2Fin,
                RhoOverAlphaA,
                AlphaToZero,
                DeltaOverAlpha,
                AlphaDiffOverAlphaA,
            ],
            ConditionSet::ConditionalGradientLipschitz => &[
                SumRhoInf,
                SumA2Fin,
                SumRhoOverAlpha2Fin,
                AlphaToZero,
                DeltaOverAlpha,
                RhoOverAlphaA,
                AlphaDiffOverAlphaA,
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Condition {
    SumRhoInf,
    SumRho2Fin,
    RhoToZero,
    RhoOverAlpha,
    DeltaOverAlpha,
    DeltaOverRhoInf,
    AlphaDiffOverRho,
    AlphaToZero,
    AlphaRatioToOne,
    RhoRatioBounded,
    RhoOverAlphaA,
    SumRhoOverAlpha2Fin,
    SumRhoAlphaFin,
    SumAInf,
    SumA2Fin,
    RhoOverA,
    AlphaDiffOverAlphaA,
}

impl Condition {
    fn label(&self) -> &'static str {
        use Condition::*;
        match self {
            SumRhoInf => "Σρ=∞",
            SumRho2Fin => "Σρ²<∞",
            RhoToZero => "ρ→0",
            RhoOverAlpha => "ρ/α→0",
            DeltaOverAlpha => "Δ/α→0",
            DeltaOverRhoInf => "Δ/ρ→∞",
            AlphaDiffOverRho => "|α_k−α_{k+1}|/ρ_k→0",
            AlphaToZero => "α→0",
            AlphaRatioToOne => "α_{k−1}/α_k→1",
            RhoRatioBounded => "limsup ρ_k/ρ_{k+1}<∞",
            RhoOverAlphaA => "ρ/(αa)→0",
            SumRhoOverAlpha2Fin => "Σ(ρ/α)²<∞",
            SumRhoAlphaFin => "Σρα<∞",
            SumAInf => "Σa=∞",
            SumA2Fin => "Σa²<∞",
            RhoOverA => "ρ/a→0",
            AlphaDiffOverAlphaA => "|α_k−α_{k+1}|/(α_k a_k)→0",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionCheck {
    pub condition: &'static str,
    pub pass: bool,
    /// The exponent inequality that was tested, with the numbers plugged in.
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub set: ConditionSet,
    pub checks: Vec<ConditionCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&ConditionCheck> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    pub fn render(&self) -> String {
        let mut s = format!("conditions for {}:\n", self.set.name());
        for c in &self.checks {
            s.push_str(&format!(
                "  {} {:<28} {}\n",
                if c.pass { "pass" } else { "FAIL" },
                c.condition,
                c.detail
            ));
        }
        s
    }
}

const EPS: f64 = 1e-12;

/// Symbolic check of a power-law schedule against a condition family. Each
/// condition reduces to an inequality on the decay exponents.
pub fn validate_schedule(s: &Schedule, set: ConditionSet) -> ValidationReport {
    let r = s.rho.exp;
    let al = s.alpha.map(|p| p.exp);
    let de = s.delta_power().map(|p| p.exp);
    let a = s.a.map(|p| p.exp);
    let mut checks = Vec::new();
    for cond in set.conditions() {
        use Condition::*;
        let need = |name: &str, v: Option<f64>| -> std::result::Result<f64, String> {
            v.ok_or_else(|| format!("{} schedule missing", name))
        };
        let res: std::result::Result<(bool, String), String> = (|| {
            Ok(match cond {
                SumRhoInf => (r <= 1.0 + EPS, format!("β_ρ={} ≤ 1", r)),
                SumRho2Fin => (2.0 * r > 1.0 + EPS, format!("2β_ρ={} > 1", 2.0 * r)),
                RhoToZero => (r > EPS, format!("β_ρ={} > 0", r)),
                RhoOverAlpha => {
                    let m = need("α", al)?;
                    (r > m + EPS, format!("β_ρ={} > μ={}", r, m))
                }
                DeltaOverAlpha => {
                    let m = need("α", al)?;
                    let d = need("Δ", de)?;
                    (d > m + EPS, format!("d={} > μ={}", d, m))
                }
                DeltaOverRhoInf => {
                    let d = need("Δ", de)?;
                    (d < r - EPS, format!("d={} < β_ρ={}", d, r))
                }
                AlphaDiffOverRho => {
                    let m = need("α", al)?;
                    if m.abs() <= EPS {
                        (true, "α constant".to_string())
                    } else {
                        (m + 1.0 > r + EPS, format!("μ+1={} > β_ρ={}", m + 1.0, r))
                    }
                }
                AlphaToZero => {
                    let m = need("α", al)?;
                    (m > EPS, format!("μ={} > 0", m))
                }
                AlphaRatioToOne => {
                    need("α", al)?;
                    (true, "holds for every power law".to_string())
                }
                RhoRatioBounded => (true, "holds for every power law".to_string()),
                RhoOverAlphaA => {
                    let m = need("α", al)?;
                    let t = need("a", a)?;
                    (r > m + t + EPS, format!("β_ρ={} > μ+t={}", r, m + t))
                }
                SumRhoOverAlpha2Fin => {
                    let m = need("α", al)?;
                    (
                        2.0 * (r - m) > 1.0 + EPS,
                        format!("2(β_ρ−μ)={} > 1", 2.0 * (r - m)),
                    )
                }
                SumRhoAlphaFin => {
                    let m = need("α", al)?;
                    (r + m > 1.0 + EPS, format!("β_ρ+μ={} > 1", r + m))
                }
                SumAInf => {
                    let t = need("a", a)?;
                    (t <= 1.0 + EPS, format!("t={} ≤ 1", t))
                }
                SumA2Fin => {
                    let t = need("a", a)?;
                    (2.0 * t > 1.0 + EPS, format!("2t={} > 1", 2.0 * t))
                }
                RhoOverA => {
                    let t = need("a", a)?;
                    (r > t + EPS, format!("β_ρ={} > t={}", r, t))
                }
                AlphaDiffOverAlphaA => {
                    let m = need("α", al)?;
                    let t = need("a", a)?;
                    if m.abs() <= EPS {
                        (true, "α constant".to_string())
                    } else {
                        (t < 1.0 - EPS, format!("t={} < 1", t))
                    }
                }
            })
        })();
        let (pass, detail) = match res {
            Ok(v) => v,
            Err(msg) => (false, msg),
        };
        checks.push(ConditionCheck {
            condition: cond.label(),
            pass,
            detail,
        });
    }
    ValidationReport { set, checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fd_reference_schedule_passes() {
        let s = Schedule::steps(Power::new(1.0, 1.0)).with_alpha(Power::new(1.0, 1.0 / 3.0));
        let rep = validate_schedule(&s, ConditionSet::Fd);
        assert!(rep.passed(), "{}", rep.render());
        assert!((s.delta(7) - s.alpha(7).powi(2)).abs() < 1e-15);
    }

    #[test]
    fn slow_steps_fail_square_summability() {
        let s = Schedule::steps(Power::new(1.0, 0.5)).with_alpha(Power::new(1.0, 0.25));
        let rep = validate_schedule(&s, ConditionSet::Fd);
        let f = rep.failures();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].condition, "Σρ²<∞");
    }

    #[test]
    fn averaging_ratio_passes() {
        let s = Schedule::steps(Power::new(1.0, 1.0)).with_a(Power::new(1.0, 2.0 / 3.0));
        assert!(validate_schedule(&s, ConditionSet::AveragedDirection).passed());
    }

    #[test]
    fn missing_schedule_is_a_failure_and_names_parse() {
        let s = Schedule::steps(Power::new(1.0, 1.0));
        assert!(!validate_schedule(&s, ConditionSet::Fd).passed());
        for c in ConditionSet::ALL {
            assert_eq!(ConditionSet::parse(c.name()).unwrap(), c);
        }
        assert!(ConditionSet::parse("nope").is_err());
    }

    #[test]
    fn arrow_hurwicz_needs_summable_products() {
        let ok = Schedule::steps(Power::new(1.0, 1.0)).with_alpha(Power::new(1.0, 0.5));
        assert!(validate_schedule(&ok, ConditionSet::ArrowHurwicz).passed());
        let bad = Schedule::steps(Power::new(1.0, 0.6)).with_alpha(Power::new(1.0, 0.3));
        let rep = validate_schedule(&bad, ConditionSet::ArrowHurwicz);
        assert_eq!(rep.failures()[0].condition, "Σρα<∞");
    }

    #[test]
    fn power_caps_and_offsets() {
        let p = Power::new(2.0, 1.0).with_k0(0.5).with_cap(1.0);
        assert_eq!(p.at(0), 1.0);
        assert!((p.at(3) - 2.0 / 3.5).abs() < 1e-15);
    }
}
