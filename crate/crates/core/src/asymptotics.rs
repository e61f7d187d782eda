//! Entire functions bracketing `F_{ẇ̄}` for the Schatten-Lorentz and
//! exponential families, and closed-form growth predictions for `F` and `H`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::series::{ln_sum_certified, SeriesControl};
use crate::weights::{ln_factorial, WeightSpec};

/// Series budget for the bracketing functions. Their arguments grow like
/// `r²`, so they need far more terms than `F` itself.
pub const PHI_CONTROL: SeriesControl = SeriesControl {
    max_terms: 20_000_000,
    reltol: 1e-14,
};

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {v}")))
    }
}

fn check_argument(r: f64) -> Result<()> {
    if r >= 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("argument must be finite and >= 0, got {r}")))
    }
}

/// `ln Σ_k r^k / (k!)^{1/p}`.
pub fn ln_phi_l_upper(p: f64, r: f64, ctl: &SeriesControl) -> Result<f64> {
    check_positive("p", p)?;
    ln_phi_l(p, 0.0, r, ctl)
}

/// `ln Σ_k e^{-b√k} r^k / (k!)^{1/p}`.
pub fn ln_phi_l_lower(p: f64, b: f64, r: f64, ctl: &SeriesControl) -> Result<f64> {
    check_positive("p", p)?;
    check_positive("b", b)?;
    ln_phi_l(p, b, r, ctl)
}

fn ln_phi_l(p: f64, b: f64, r: f64, ctl: &SeriesControl) -> Result<f64> {
    check_argument(r)?;
    if r == 0.0 {
        return Ok(0.0);
    }
    let lr = r.ln();
    // e^{-b(√(k+1)-√k)} ≤ 1, so the upper-series ratio bounds both
    Ok(ln_sum_certified(
        |k| -b * (k as f64).sqrt() + k as f64 * lr - ln_factorial(k) / p,
        |k| lr - ((k + 1) as f64).ln() / p,
        ctl,
        r,
    )?
    .ln_value)
}

pub fn phi_l_upper(p: f64, r: f64) -> Result<f64> {
    Ok(ln_phi_l_upper(p, r, &PHI_CONTROL)?.exp())
}

pub fn phi_l_lower(p: f64, b: f64, r: f64) -> Result<f64> {
    Ok(ln_phi_l_lower(p, b, r, &PHI_CONTROL)?.exp())
}

/// `ln Σ_k e^{-a k^{α+1}} r^k`.
pub fn ln_phi_e_upper(a: f64, alpha: f64, r: f64, ctl: &SeriesControl) -> Result<f64> {
    check_positive("a", a)?;
    check_positive("alpha", alpha)?;
    ln_phi_e(a, alpha, 0.0, r, ctl)
}

/// `ln Σ_k e^{-a k^{α+1} - b k^{α+1/2}} r^k`.
pub fn ln_phi_e_lower(a: f64, alpha: f64, b: f64, r: f64, ctl: &SeriesControl) -> Result<f64> {
    check_positive("a", a)?;
    check_positive("alpha", alpha)?;
    check_positive("b", b)?;
    ln_phi_e(a, alpha, b, r, ctl)
}

fn ln_phi_e(a: f64, alpha: f64, b: f64, r: f64, ctl: &SeriesControl) -> Result<f64> {
    check_argument(r)?;
    if r == 0.0 {
        return Ok(0.0);
    }
    let lr = r.ln();
    Ok(ln_sum_certified(
        |k| {
            let kf = k as f64;
            -a * kf.powf(alpha + 1.0) - b * kf.powf(alpha + 0.5) + kf * lr
        },
        |k| {
            let kf = k as f64;
            lr - a * ((kf + 1.0).powf(alpha + 1.0) - kf.powf(alpha + 1.0))
        },
        ctl,
        r,
    )?
    .ln_value)
}

pub fn phi_e_upper(a: f64, alpha: f64, r: f64) -> Result<f64> {
    Ok(ln_phi_e_upper(a, alpha, r, &PHI_CONTROL)?.exp())
}

pub fn phi_e_lower(a: f64, alpha: f64, b: f64, r: f64) -> Result<f64> {
    Ok(ln_phi_e_lower(a, alpha, b, r, &PHI_CONTROL)?.exp())
}

/// Closed-form weight family with the constant `C` used for `F`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum AsymptoticModel {
    SchattenLorentz { p: f64, dostanic_c: f64 },
    Exponential { a: f64, alpha: f64, dostanic_c: f64 },
}

impl AsymptoticModel {
    pub fn schatten_lorentz(p: f64, dostanic_c: f64) -> Result<Self> {
        check_positive("p", p)?;
        check_positive("C", dostanic_c)?;
        Ok(Self::SchattenLorentz { p, dostanic_c })
    }

    pub fn exponential(a: f64, alpha: f64, dostanic_c: f64) -> Result<Self> {
        check_positive("a", a)?;
        check_positive("alpha", alpha)?;
        check_positive("C", dostanic_c)?;
        Ok(Self::Exponential { a, alpha, dostanic_c })
    }

    /// The model for a closed-form weight; `None` for explicit lists or
    /// derived chains.
    pub fn for_weight(w: &WeightSpec, dostanic_c: f64) -> Option<Self> {
        if !w.chain().is_empty() {
            return None;
        }
        match *w.kind() {
            crate::weights::WeightKind::SchattenLorentz { p } => Self::schatten_lorentz(p, dostanic_c).ok(),
            crate::weights::WeightKind::Exponential { a, alpha } => Self::exponential(a, alpha, dostanic_c).ok(),
            crate::weights::WeightKind::Explicit { .. } => None,
        }
    }

    pub fn dostanic_c(&self) -> f64 {
        match *self {
            Self::SchattenLorentz { dostanic_c, .. } | Self::Exponential { dostanic_c, .. } => dostanic_c,
        }
    }

    /// Leading-order growth of `ln F_{ẇ̄}(r)` as `r → ∞`.
    pub fn predict_ln_f(&self, r: f64) -> f64 {
        match *self {
            Self::SchattenLorentz { p, dostanic_c } => {
                4.0 * std::f64::consts::E * dostanic_c.powf(p) / p * r.powf(p)
            }
            Self::Exponential { a, alpha, .. } => {
                4.0 * ((alpha + 1.0) / a).powf(1.0 / alpha) * (alpha / (alpha + 1.0))
                    * r.ln().powf(1.0 + 1.0 / alpha)
            }
        }
    }

    /// Leading-order behaviour of `H_w(r)` as `r ↓ 0`.
    pub fn predict_h_small(&self, r: f64) -> f64 {
        self.predict_h_small_ln(r.ln())
    }

    /// [`Self::predict_h_small`] taking `ln r`, for arguments below `f64` range.
    pub fn predict_h_small_ln(&self, ln_r: f64) -> f64 {
        let l = ln_r.abs();
        match *self {
            Self::SchattenLorentz { p, dostanic_c } => {
                dostanic_c * (4.0 * std::f64::consts::E / p).powf(1.0 / p) * l.powf(-1.0 / p)
            }
            Self::Exponential { a, alpha, .. } => {
                let q = alpha / (alpha + 1.0);
                (-(4f64.powf(-q))
                    * (a / (alpha + 1.0)).powf(1.0 / (alpha + 1.0))
                    * ((alpha + 1.0) / alpha).powf(q)
                    * l.powf(q))
                .exp()
            }
        }
    }

    /// `ln` of the lower and upper bracketing functions for `F_{ẇ̄}(r)`.
    ///
    /// Schatten-Lorentz: `(1+r) Φ^{L,l}_{p/2,12/p}(x) ≤ F ≤ (1+r) Φ^{L,u}_{p/2}(x)`
    /// with `x = (2e)^{2/p} (Cr)²`, for all `r > 0`.
    ///
    /// Exponential (for `r ≥ 1`): `(1 + r w_1) Φ^{E,l}_{a',α,2c}((Cr)²) ≤ F ≤
    /// (1+r) Φ^{E,u}_{a'}((Cr)²)` with `a' = 2^{1-α} a / (α+1)²` and `c` the
    /// fitted product constant. The left factor uses `w_1 = e^{-a}` since
    /// `F`'s own linear factor is `1 + r w_1 < 1 + r`.
    pub fn ln_f_bracket(&self, r: f64, c_product: Option<f64>) -> Result<(f64, f64)> {
        check_positive("r", r)?;
        match *self {
            Self::SchattenLorentz { p, dostanic_c } => {
                let x = (2.0 * std::f64::consts::E).powf(2.0 / p) * (dostanic_c * r).powi(2);
                let lin = r.ln_1p();
                Ok((
                    lin + ln_phi_l_lower(p / 2.0, 12.0 / p, x, &PHI_CONTROL)?,
                    lin + ln_phi_l_upper(p / 2.0, x, &PHI_CONTROL)?,
                ))
            }
            Self::Exponential { a, alpha, dostanic_c } => {
                let c = c_product.ok_or_else(|| {
                    Error::InvalidArgument("exponential bracket needs the fitted product constant".into())
                })?;
                let a_prime = 2f64.powf(1.0 - alpha) * a / (alpha + 1.0).powi(2);
                let x = (dostanic_c * r).powi(2);
                let lower = if c > 0.0 {
                    ln_phi_e_lower(a_prime, alpha, 2.0 * c, x, &PHI_CONTROL)?
                } else {
                    ln_phi_e_upper(a_prime, alpha, x, &PHI_CONTROL)?
                };
                Ok((
                    (r * (-a).exp()).ln_1p() + lower,
                    r.ln_1p() + ln_phi_e_upper(a_prime, alpha, x, &PHI_CONTROL)?,
                ))
            }
        }
    }
}

/// Inverse-asymptote shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InverseShape {
    /// `f(r) ~ a r^b` gives `f⁻¹(r) ~ (r/a)^{1/b}`.
    PowerLaw,
    /// `ln f(r) ~ a r^b` gives `f⁻¹(r) ~ (ln r / a)^{1/b}`.
    ExpPower,
    /// `ln f(r) ~ a (ln r)^b` gives `ln f⁻¹(r) ~ (ln r / a)^{1/b}`; the
    /// returned value is `exp` of that.
    LogPower,
}

pub fn asym_inverse(shape: InverseShape, a: f64, b: f64, r: f64) -> Result<f64> {
    check_positive("a", a)?;
    check_positive("b", b)?;
    Ok(match shape {
        InverseShape::PowerLaw => (r / a).powf(1.0 / b),
        InverseShape::ExpPower => (r.ln() / a).powf(1.0 / b),
        InverseShape::LogPower => (r.ln() / a).powf(1.0 / b).exp(),
    })
}

/// `(ln √(2πk) (k/e)^k, ln √(e²k) (k/e)^k)`, the Stirling bracket for `ln k!`.
pub fn stirling_bracket(k: usize) -> (f64, f64) {
    let kf = k as f64;
    let core = kf * (kf.ln() - 1.0);
    (
        0.5 * (2.0 * std::f64::consts::PI * kf).ln() + core,
        0.5 * (2.0 + kf.ln()) + core,
    )
}

/// Which Schatten-Lorentz weight inequality failed, and where.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SandwichFailure {
    /// 1: `w̄`, 2: `ẇ̄`, 3: prefix product of `ẇ̄`.
    pub inequality: u8,
    pub lower_side: bool,
    pub k: usize,
}

/// Checks, for `w_k = k^{-1/p}` and `k ≤ k_max`:
///
/// 1. `e^{-1/(p√k)} e^{1/p} k^{-1/p} ≤ w̄_k ≤ e^{1/p} k^{-1/p}`
/// 2. `e^{-3/(p√k)} (2e)^{1/p} k^{-1/p} ≤ ẇ̄_k ≤ (2e)^{1/p} k^{-1/p}`
/// 3. `e^{-6√k/p} (2e)^{k/p} (k!)^{-1/p} ≤ ∏_{n≤k} ẇ̄_n ≤ (2e)^{k/p} (k!)^{-1/p}`
///
/// in log domain with absolute slack `1e-12 (1 + |rhs|)`.
pub fn schatten_lorentz_weight_failures(p: f64, k_max: usize) -> Result<Vec<SandwichFailure>> {
    let w = WeightSpec::schatten_lorentz(p)?;
    let bar = w.bar().ln_values(k_max);
    let dot_bar = w.dot_bar().ln_values(k_max);
    let ln2e = (2.0 * std::f64::consts::E).ln();
    let mut out = Vec::new();
    let mut prefix = 0.0;
    let mut check = |ineq: u8, k: usize, lo: f64, v: f64, hi: f64| {
        let slack = |x: f64| 1e-12 * (1.0 + x.abs());
        if v < lo - slack(lo) {
            out.push(SandwichFailure { inequality: ineq, lower_side: true, k });
        }
        if v > hi + slack(hi) {
            out.push(SandwichFailure { inequality: ineq, lower_side: false, k });
        }
    };
    for k in 1..=k_max {
        let kf = k as f64;
        let sk = kf.sqrt();
        let e1 = 1.0 / p - kf.ln() / p;
        check(1, k, e1 - 1.0 / (p * sk), bar[k - 1], e1);
        let e2 = ln2e / p - kf.ln() / p;
        check(2, k, e2 - 3.0 / (p * sk), dot_bar[k - 1], e2);
        prefix += dot_bar[k - 1];
        let e3 = kf * ln2e / p - ln_factorial(k) / p;
        check(3, k, e3 - 6.0 * sk / p, prefix, e3);
    }
    Ok(out)
}
