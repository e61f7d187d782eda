//! The resolvent-bound generating function `F_w`, its companions `F̃(r) = r F(r)`
//! and `H_w(r) = 1 / F̃⁻¹(1/r)`, the departure from normality, and the
//! resolvent estimate built from them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    gauge_from_values, raw_singular_values, schur_decompose, singular_values, OperatorMatrix,
    SchurOrdering, SchurParts, C64,
};
use crate::series::{ln_sum_certified, SeriesControl};
use crate::weights::WeightSpec;

/// Default value of the quasi-nilpotent power constant `C`.
pub const DEFAULT_DOSTANIC_C: f64 = 2.0;

/// Budgets at or below `NORMAL_THRESHOLD · (1 + ‖A‖)` are treated as zero.
pub const NORMAL_THRESHOLD: f64 = 1e-14;

/// Relative accuracy targeted by the `F̃` inversion.
const INVERSE_RELTOL: f64 = 1e-15;

/// Evaluator for `F_w(r) = (1 + r w_1)(1 + Σ_{k≥1} (w_1⋯w_k)² (Cr)^{2k})` on a
/// fixed sequence `w`.
///
/// [`BoundFunction::for_weight`] builds it on `ẇ̄` for a user weight, which is
/// the form the resolvent and distance bounds need; [`BoundFunction::new`]
/// takes the sequence as given.
#[derive(Debug, Clone)]
pub struct BoundFunction {
    weight: WeightSpec,
    dostanic_c: f64,
    control: SeriesControl,
    ln_w: Vec<f64>,
    ln_prefix: Vec<f64>,
}

impl BoundFunction {
    pub fn new(weight: WeightSpec, dostanic_c: f64, control: SeriesControl) -> Result<Self> {
        if !(dostanic_c.is_finite() && dostanic_c >= std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidArgument(format!(
                "constant C must be finite and at least pi/2, got {dostanic_c}"
            )));
        }
        if control.max_terms == 0 || !(control.reltol > 0.0 && control.reltol < 1.0) {
            return Err(Error::InvalidArgument(
                "series control needs max_terms > 0 and 0 < reltol < 1".into(),
            ));
        }
        // one weight past the last summable term feeds the ratio test
        let mut len = control.max_terms + 1;
        if let Some(support) = weight.support_len() {
            len = len.min(support + 1);
        }
        let ln_w = weight.ln_values(len);
        let mut acc = 0.0;
        let ln_prefix = ln_w
            .iter()
            .map(|&l| {
                acc += l;
                acc
            })
            .collect();
        Ok(Self {
            weight,
            dostanic_c,
            control,
            ln_w,
            ln_prefix,
        })
    }

    /// `F_{ẇ̄}` for the user weight `w`.
    pub fn for_weight(w: &WeightSpec, dostanic_c: f64, control: SeriesControl) -> Result<Self> {
        Self::new(w.dot_bar(), dostanic_c, control)
    }

    pub fn with_defaults(w: &WeightSpec) -> Result<Self> {
        Self::for_weight(w, DEFAULT_DOSTANIC_C, SeriesControl::default())
    }

    /// The sequence `F` is built on.
    pub fn weight(&self) -> &WeightSpec {
        &self.weight
    }

    pub fn dostanic_c(&self) -> f64 {
        self.dostanic_c
    }

    pub fn control(&self) -> &SeriesControl {
        &self.control
    }

    /// `ln w_k`, 1-based; `-inf` past the stored range (zero extension).
    fn ln_w(&self, k: usize) -> f64 {
        self.ln_w.get(k - 1).copied().unwrap_or(f64::NEG_INFINITY)
    }

    fn ln_prefix(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.ln_prefix.get(k - 1).copied().unwrap_or(f64::NEG_INFINITY)
        }
    }

    /// `ln F(r)`.
    pub fn ln_f(&self, r: f64) -> Result<f64> {
        if r.is_nan() || r < 0.0 || r.is_infinite() {
            return Err(Error::InvalidArgument(format!("F needs a finite r >= 0, got {r}")));
        }
        if r == 0.0 {
            return Ok(0.0);
        }
        let w1 = self.ln_w(1).exp();
        let linear = (r * w1).ln_1p();
        let ln_cr = (self.dostanic_c * r).ln();
        let series = ln_sum_certified(
            |k| 2.0 * (self.ln_prefix(k) + k as f64 * ln_cr),
            |k| 2.0 * (self.ln_w(k + 1) + ln_cr),
            &self.control,
            r,
        )?;
        Ok(linear + series.ln_value)
    }

    /// `F(r)`; overflows to `+inf` only when `ln F(r)` exceeds ~709.
    pub fn f(&self, r: f64) -> Result<f64> {
        Ok(self.ln_f(r)?.exp())
    }

    /// `F̃(r) = r F(r)`.
    pub fn f_tilde(&self, r: f64) -> Result<f64> {
        Ok(r * self.f(r)?)
    }

    fn ln_f_tilde(&self, r: f64) -> Result<f64> {
        Ok(r.ln() + self.ln_f(r)?)
    }

    /// The unique `r > 0` with `r F(r) = y`.
    ///
    /// For `y ≤ 1` the bracket is `[y / F(y), y]`. Above 1 the upper end is
    /// found by doubling from 1 and the lower end by halving, so `F` is never
    /// evaluated far beyond the root (where its series may not be summable
    /// within the term budget). The bracket is then bisected in `ln r`.
    pub fn f_tilde_inverse(&self, y: f64) -> Result<f64> {
        if y.is_nan() || y <= 0.0 || y.is_infinite() {
            return Err(Error::InvalidArgument(format!("F~ inverse needs finite y > 0, got {y}")));
        }
        let ln_y = y.ln();
        let (mut lo, mut hi) = if y <= 1.0 {
            (ln_y - self.ln_f(y)?, ln_y)
        } else {
            let mut hi = 0.0_f64;
            while self.ln_f_tilde(hi.exp())? < ln_y {
                hi += std::f64::consts::LN_2;
            }
            (hi - std::f64::consts::LN_2, hi)
        };
        while self.ln_f_tilde(lo.exp())? >= ln_y {
            hi = lo;
            lo -= std::f64::consts::LN_2;
        }
        for _ in 0..200 {
            if hi - lo <= INVERSE_RELTOL {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.ln_f_tilde(mid.exp())? < ln_y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((0.5 * (lo + hi)).exp())
    }

    /// `H(r) = 1 / F̃⁻¹(1/r)`.
    pub fn h(&self, r: f64) -> Result<f64> {
        if r.is_nan() || r <= 0.0 || r.is_infinite() {
            return Err(Error::InvalidArgument(format!("H needs finite r > 0, got {r}")));
        }
        Ok(1.0 / self.f_tilde_inverse(1.0 / r)?)
    }

    /// `K · H(δ / K)`, extended by 0 at `δ = 0` and by `δ` at `K = 0`
    /// (the normal-operator limit).
    pub fn scaled_h(&self, k: f64, delta: f64) -> Result<f64> {
        if delta == 0.0 {
            return Ok(0.0);
        }
        if k == 0.0 {
            return Ok(delta);
        }
        Ok(k * self.h(delta / k)?)
    }
}

/// `|z|⁻¹ F_w(|z|⁻¹ g)`: the resolvent bound for a quasi-nilpotent operator
/// with `w`-gauge `g`, using the sequence held by `bf` directly.
pub fn quasinilpotent_resolvent_bound(bf: &BoundFunction, gauge: f64, z: C64) -> Result<f64> {
    let m = z.norm();
    if m == 0.0 {
        return Err(Error::ZeroPoint);
    }
    if gauge.is_nan() || gauge < 0.0 {
        return Err(Error::InvalidArgument(format!("gauge must be nonnegative, got {gauge}")));
    }
    Ok(bf.f(gauge / m)? / m)
}

/// How the departure budget is obtained.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetStrategy {
    /// Only the a-priori bound `2 |A|_w`.
    TwoGauge,
    /// One Schur form with the diagonal in nonincreasing modulus order.
    ModulusDescending,
    /// All diagonal orderings for `n ≤ 8`, modulus order above.
    SearchSmall,
    /// A caller-chosen ordering (ranks in modulus order).
    Explicit(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetSource {
    SchurSearch,
    TwoGauge,
}

/// An upper bound for the departure from normality `ν_w(A)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonNormalityBudget {
    pub nu_upper: f64,
    pub source: BudgetSource,
    /// `|A|_w`.
    pub gauge: f64,
    /// `|N|_{ẇ̄}` of the Schur form tried, if any.
    pub schur_gauge: Option<f64>,
    /// `‖A‖`, kept to scale the normal-case threshold.
    pub operator_norm: f64,
}

impl NonNormalityBudget {
    /// True when the budget is indistinguishable from zero.
    pub fn is_normal(&self) -> bool {
        self.nu_upper <= NORMAL_THRESHOLD * (1.0 + self.operator_norm)
    }

    /// The same budget raised to `nu` (any larger value is still valid).
    pub fn raised_to(&self, nu: f64) -> Self {
        Self {
            nu_upper: self.nu_upper.max(nu),
            ..self.clone()
        }
    }
}

/// `min(|N|_{ẇ̄}, 2 |A|_w)` over the Schur forms the strategy tries.
pub fn departure_budget(a: &OperatorMatrix, w: &WeightSpec, strategy: &BudgetStrategy) -> Result<NonNormalityBudget> {
    let parts = match strategy {
        BudgetStrategy::TwoGauge => {
            a.require_square()?;
            None
        }
        BudgetStrategy::ModulusDescending => Some(schur_decompose(a, &SchurOrdering::ModulusDescending)?),
        BudgetStrategy::SearchSmall => Some(schur_decompose(a, &SchurOrdering::SearchSmall(w.clone()))?),
        BudgetStrategy::Explicit(p) => Some(schur_decompose(a, &SchurOrdering::ExplicitPermutation(p.clone()))?),
    };
    budget_from_parts(a, w, parts.as_ref())
}

/// Budget for a given Schur decomposition (or none, for the two-gauge bound).
pub fn budget_from_parts(a: &OperatorMatrix, w: &WeightSpec, parts: Option<&SchurParts>) -> Result<NonNormalityBudget> {
    let s = singular_values(a)?;
    let gauge = crate::linalg::gauge_of(&s, w);
    if gauge.is_infinite() {
        return Err(Error::GaugeInfinite);
    }
    let two = 2.0 * gauge;
    let schur_gauge = parts.map(|p| p.nilpotent_gauge(w)).transpose()?;
    let (nu_upper, source) = match schur_gauge {
        Some(g) if g <= two => (g, BudgetSource::SchurSearch),
        _ => (two, BudgetSource::TwoGauge),
    };
    Ok(NonNormalityBudget {
        nu_upper,
        source,
        gauge,
        schur_gauge,
        operator_norm: s.largest(),
    })
}

/// `d⁻¹ F_{ẇ̄}(ν / d)` with `d = d(z, σ(A))`.
///
/// `bf` must be built with [`BoundFunction::for_weight`] on the same `w` the
/// budget was computed for. Points within `1e-14 · (1 + ρ)` of the spectrum
/// (`ρ` the spectral radius) are rejected.
pub fn resolvent_bound(bf: &BoundFunction, spectrum: &[C64], z: C64, budget: &NonNormalityBudget) -> Result<f64> {
    if spectrum.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    let d = crate::linalg::distance_to_set(z, spectrum);
    let radius = spectrum.iter().map(|l| l.norm()).fold(0.0, f64::max);
    if d <= NORMAL_THRESHOLD * (1.0 + radius) {
        return Err(Error::OnSpectrum { distance: d });
    }
    if budget.is_normal() {
        return Ok(1.0 / d);
    }
    Ok(bf.f(budget.nu_upper / d)? / d)
}

/// One violated instance of `‖N^{2k}‖ ≤ C^{2k} (s_1⋯s_k)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerViolation {
    pub k: usize,
    pub lhs: f64,
    pub rhs: f64,
}

/// Checks the quasi-nilpotent power estimate `‖N^{2k}‖ ≤ C^{2k}(s_1⋯s_k)²` for
/// `k = 1..=k_max` and reports every violation. `N` is assumed nilpotent, so
/// powers with `2k ≥ n` vanish and are skipped. Comparison is in log domain
/// with relative slack `1e-9`.
pub fn power_estimate_violations(n: &OperatorMatrix, c: f64, k_max: usize) -> Result<Vec<PowerViolation>> {
    let dim = n.require_square()?;
    let s = raw_singular_values(n.as_matrix())?;
    let m = n.as_matrix();
    let square = m * m;
    let mut power = square.clone();
    let mut ln_prod = 0.0;
    let mut out = Vec::new();
    for k in 1..=k_max.min((dim - 1) / 2) {
        if k > 1 {
            power = &power * &square;
        }
        ln_prod += s[k - 1].ln();
        let lhs = raw_singular_values(&power)?[0];
        let ln_rhs = 2.0 * (k as f64 * c.ln() + ln_prod);
        if lhs > 0.0 && lhs.ln() > ln_rhs + 1e-9 {
            out.push(PowerViolation { k, lhs, rhs: ln_rhs.exp() });
        }
    }
    Ok(out)
}

/// `|N|_{ẇ̄}` for an arbitrary matrix `N` (used to score hand-built decompositions).
pub fn dot_bar_gauge(n: &OperatorMatrix, w: &WeightSpec) -> Result<f64> {
    let s = raw_singular_values(n.as_matrix())?;
    Ok(gauge_from_values(&s, &w.dot_bar().ln_values(s.len())))
}
