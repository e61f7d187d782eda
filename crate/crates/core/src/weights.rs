//! Weight sequences: nonincreasing, nonnegative sequences describing how fast
//! the singular values of an operator decay.
//!
//! A [`WeightSpec`] is a base family plus a chain of derived-sequence
//! transforms. `Bar` replaces `w` by its successive geometric means
//! `(w_1 ⋯ w_k)^{1/k}`, `Dot` repeats every entry twice. The bound machinery
//! works with the `bar`-then-`dot` sequence of the user's weight, available
//! as [`WeightSpec::dot_bar`].
//!
//! Everything is evaluated in the log domain: exponential weights reach
//! `e^{-a k^α}` and products of them underflow long before the sums do. A
//! zero weight is represented by `f64::NEG_INFINITY`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Default probe length used by finite-prefix checks on weights.
pub const DEFAULT_PROBE: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum WeightKind {
    /// `w_k = k^{-1/p}`.
    SchattenLorentz { p: f64 },
    /// `w_k = exp(-a k^alpha)`.
    Exponential { a: f64, alpha: f64 },
    /// Finite list, extended by zeros.
    Explicit { values: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    Bar,
    Dot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    kind: WeightKind,
    chain: Vec<Transform>,
}

impl WeightSpec {
    pub fn schatten_lorentz(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::InvalidWeight(format!("p must be positive, got {p}")));
        }
        Ok(Self::from_kind(WeightKind::SchattenLorentz { p }))
    }

    pub fn exponential(a: f64, alpha: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0 && alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidWeight(format!(
                "a and alpha must be positive, got a={a}, alpha={alpha}"
            )));
        }
        Ok(Self::from_kind(WeightKind::Exponential { a, alpha }))
    }

    pub fn explicit(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidWeight("explicit weight list is empty".into()));
        }
        for (i, &v) in values.iter().enumerate() {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidWeight(format!(
                    "entry {} is not a finite nonnegative number: {v}",
                    i + 1
                )));
            }
            if i > 0 && v > values[i - 1] {
                return Err(Error::InvalidWeight(format!(
                    "entries must be nonincreasing, but w_{} = {} > w_{} = {}",
                    i + 1,
                    v,
                    i,
                    values[i - 1]
                )));
            }
        }
        Ok(Self::from_kind(WeightKind::Explicit { values }))
    }

    fn from_kind(kind: WeightKind) -> Self {
        Self {
            kind,
            chain: Vec::new(),
        }
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    pub fn chain(&self) -> &[Transform] {
        &self.chain
    }

    /// The same base family with an empty transform chain.
    pub fn base(&self) -> Self {
        Self::from_kind(self.kind.clone())
    }

    /// Successive geometric means.
    pub fn bar(&self) -> Self {
        self.with(Transform::Bar)
    }

    /// Every entry repeated twice.
    pub fn dot(&self) -> Self {
        self.with(Transform::Dot)
    }

    /// `bar` followed by `dot`: the sequence the resolvent bounds are built on.
    pub fn dot_bar(&self) -> Self {
        self.bar().dot()
    }

    fn with(&self, t: Transform) -> Self {
        let mut chain = self.chain.clone();
        chain.push(t);
        Self {
            kind: self.kind.clone(),
            chain,
        }
    }

    /// True when the sequence is a finite list extended by zeros.
    pub fn is_zero_extended(&self) -> bool {
        matches!(self.kind, WeightKind::Explicit { .. })
    }

    /// Number of leading nonzero entries, if finite.
    pub fn support_len(&self) -> Option<usize> {
        let WeightKind::Explicit { values } = &self.kind else {
            return None;
        };
        let mut len = values.iter().take_while(|&&v| v > 0.0).count();
        for t in &self.chain {
            if *t == Transform::Dot {
                len *= 2;
            }
        }
        Some(len)
    }

    /// `w_k` for `k ≥ 1`. Returns 0 for `k = 0` rather than panicking.
    pub fn eval(&self, k: usize) -> f64 {
        self.ln_eval(k).exp()
    }

    /// `ln w_k`, `-inf` where the weight vanishes.
    pub fn ln_eval(&self, k: usize) -> f64 {
        if k == 0 {
            return f64::NEG_INFINITY;
        }
        ln_eval_chain(&self.kind, &self.chain, k)
    }

    /// `ln w_1, …, ln w_n` in one pass.
    pub fn ln_values(&self, n: usize) -> Vec<f64> {
        ln_values_chain(&self.kind, &self.chain, n)
    }

    pub fn values(&self, n: usize) -> Vec<f64> {
        self.ln_values(n).into_iter().map(f64::exp).collect()
    }

    /// `ln(w_1 ⋯ w_k)`, `-inf` if any factor vanishes.
    pub fn ln_prefix_product(&self, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        if self.chain.is_empty() {
            match self.kind {
                WeightKind::SchattenLorentz { p } => return -ln_factorial(k) / p,
                WeightKind::Exponential { a, alpha } => {
                    return -a * (1..=k).map(|n| (n as f64).powf(alpha)).sum::<f64>()
                }
                WeightKind::Explicit { .. } => {}
            }
        }
        self.ln_values(k).iter().sum()
    }
}

pub(crate) fn ln_factorial(k: usize) -> f64 {
    if k < 2 {
        0.0
    } else {
        ln_gamma(k as f64 + 1.0)
    }
}

fn ln_base(kind: &WeightKind, k: usize) -> f64 {
    match kind {
        WeightKind::SchattenLorentz { p } => -(k as f64).ln() / p,
        WeightKind::Exponential { a, alpha } => -a * (k as f64).powf(*alpha),
        WeightKind::Explicit { values } => match values.get(k - 1) {
            Some(&v) => v.ln(),
            None => f64::NEG_INFINITY,
        },
    }
}

fn ln_eval_chain(kind: &WeightKind, chain: &[Transform], k: usize) -> f64 {
    match chain.split_last() {
        None => ln_base(kind, k),
        Some((Transform::Dot, rest)) => ln_eval_chain(kind, rest, k.div_ceil(2)),
        Some((Transform::Bar, rest)) => {
            if let (true, WeightKind::SchattenLorentz { p }) = (rest.is_empty(), kind) {
                return -ln_factorial(k) / (p * k as f64);
            }
            ln_values_chain(kind, rest, k).iter().sum::<f64>() / k as f64
        }
    }
}

fn ln_values_chain(kind: &WeightKind, chain: &[Transform], n: usize) -> Vec<f64> {
    match chain.split_last() {
        None => (1..=n).map(|k| ln_base(kind, k)).collect(),
        Some((Transform::Dot, rest)) => {
            let inner = ln_values_chain(kind, rest, n.div_ceil(2));
            (1..=n).map(|k| inner[k.div_ceil(2) - 1]).collect()
        }
        Some((Transform::Bar, rest)) => {
            if let (true, WeightKind::SchattenLorentz { p }) = (rest.is_empty(), kind) {
                return (1..=n)
                    .map(|k| -ln_factorial(k) / (p * k as f64))
                    .collect();
            }
            let inner = ln_values_chain(kind, rest, n);
            let mut acc = 0.0;
            inner
                .iter()
                .enumerate()
                .map(|(i, &lw)| {
                    acc += lw;
                    acc / (i + 1) as f64
                })
                .collect()
        }
    }
}

impl fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            WeightKind::SchattenLorentz { p } => write!(f, "sl:p={p}")?,
            WeightKind::Exponential { a, alpha } => write!(f, "exp:a={a},alpha={alpha}")?,
            WeightKind::Explicit { values } => {
                f.write_str("explicit:")?;
                for (i, v) in values.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{v}")?;
                }
            }
        }
        for t in &self.chain {
            f.write_str(match t {
                Transform::Bar => ".bar",
                Transform::Dot => ".dot",
            })?;
        }
        Ok(())
    }
}

impl FromStr for WeightSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut rest = s.trim();
        let mut chain = Vec::new();
        loop {
            if let Some(r) = rest.strip_suffix(".bar") {
                chain.push(Transform::Bar);
                rest = r;
            } else if let Some(r) = rest.strip_suffix(".dot") {
                chain.push(Transform::Dot);
                rest = r;
            } else {
                break;
            }
        }
        chain.reverse();

        let (family, params) = rest
            .split_once(':')
            .ok_or_else(|| Error::InvalidWeight(format!("missing ':' in {s:?}")))?;
        let mut spec = match family.trim() {
            "sl" => {
                let kv = parse_params(params, &["p"])?;
                Self::schatten_lorentz(kv[0])?
            }
            "exp" => {
                let kv = parse_params(params, &["a", "alpha"])?;
                Self::exponential(kv[0], kv[1])?
            }
            "explicit" => {
                let values = params
                    .split(',')
                    .map(|v| parse_number(v.trim()))
                    .collect::<Result<Vec<_>>>()?;
                Self::explicit(values)?
            }
            other => {
                return Err(Error::InvalidWeight(format!(
                    "unknown weight family {other:?} (expected sl, exp or explicit)"
                )))
            }
        };
        spec.chain = chain;
        Ok(spec)
    }
}

fn parse_number(v: &str) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|_| Error::InvalidWeight(format!("not a number: {v:?}")))
}

fn parse_params(params: &str, names: &[&str]) -> Result<Vec<f64>> {
    let mut out = vec![None; names.len()];
    for item in params.split(',') {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| Error::InvalidWeight(format!("expected key=value, got {item:?}")))?;
        let idx = names
            .iter()
            .position(|n| *n == key.trim())
            .ok_or_else(|| Error::InvalidWeight(format!("unexpected parameter {key:?}")))?;
        out[idx] = Some(parse_number(value.trim())?);
    }
    out.into_iter()
        .zip(names)
        .map(|(v, n)| v.ok_or_else(|| Error::InvalidWeight(format!("missing parameter {n}"))))
        .collect()
}

/// Result of probing `v ⪯ w` over a finite prefix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domination {
    /// `v_k ≤ constant · w_k` for all probed `k`; the ratio peaked at `attained_at`.
    Holds { constant: f64, attained_at: usize },
    /// `w_k = 0 < v_k`.
    ZeroDenominator { index: usize },
    /// The running ratio `v_k / w_k` passed the cap at `index`.
    ExceedsCap { index: usize, ratio: f64 },
}

impl Domination {
    pub fn holds(&self) -> bool {
        matches!(self, Domination::Holds { .. })
    }
}

/// Least `M` with `v_k ≤ M w_k` for `k ≤ probe`, or the first index where
/// no such `M` below `cap` exists.
pub fn preceq(v: &WeightSpec, w: &WeightSpec, probe: usize, cap: f64) -> Domination {
    let lv = v.ln_values(probe);
    let lw = w.ln_values(probe);
    let mut best = 0.0_f64;
    let mut at = 1;
    for (i, (&a, &b)) in lv.iter().zip(&lw).enumerate() {
        if a == f64::NEG_INFINITY {
            continue;
        }
        if b == f64::NEG_INFINITY {
            return Domination::ZeroDenominator { index: i + 1 };
        }
        let ratio = (a - b).exp();
        if ratio > cap {
            return Domination::ExceedsCap {
                index: i + 1,
                ratio,
            };
        }
        if ratio > best {
            best = ratio;
            at = i + 1;
        }
    }
    Domination::Holds {
        constant: best,
        attained_at: at,
    }
}

/// Numerically fitted constants for the lower bounds on `w̄`, `ẇ̄` and
/// `∏ ẇ̄` of an exponential weight, each the smallest value making its
/// inequality hold for `k ≤ probe`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentialConstants {
    pub c_bar: f64,
    pub c_dot_bar: f64,
    pub c_product: f64,
    pub probe: usize,
}

pub fn fit_exponential_constants(a: f64, alpha: f64, probe: usize) -> Result<ExponentialConstants> {
    let w = WeightSpec::exponential(a, alpha)?;
    let bar = w.bar().ln_values(probe);
    let dot_bar = w.dot_bar().ln_values(probe);
    let half = 2f64.powf(-alpha) * a / (alpha + 1.0);
    let mut c_bar = 0.0_f64;
    let mut c_dot_bar = 0.0_f64;
    let mut c_product = 0.0_f64;
    let mut prod = 0.0;
    for k in 1..=probe {
        let kf = k as f64;
        c_bar = c_bar.max((-a / (alpha + 1.0) * kf.powf(alpha) - bar[k - 1]) / kf.powf(alpha - 0.5));
        c_dot_bar = c_dot_bar.max((-half * kf.powf(alpha) - dot_bar[k - 1]) / kf.powf(alpha - 0.5));
        prod += dot_bar[k - 1];
        c_product = c_product
            .max((-half / (alpha + 1.0) * kf.powf(alpha + 1.0) - prod) / kf.powf(alpha + 0.5));
    }
    Ok(ExponentialConstants {
        c_bar,
        c_dot_bar,
        c_product,
        probe,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn eval_closed_forms() {
        let sl = WeightSpec::schatten_lorentz(1.0).unwrap();
        assert_relative_eq!(sl.eval(3), 1.0 / 3.0, max_relative = 1e-15);
        let ex = WeightSpec::exponential(1.0, 1.0).unwrap();
        assert_relative_eq!(ex.eval(2), (-2.0f64).exp(), max_relative = 1e-15);
        let list = WeightSpec::explicit(vec![1.0, 0.5, 0.25]).unwrap();
        assert_eq!(list.eval(5), 0.0);
        assert_eq!(list.eval(3), 0.25);
    }

    #[test]
    fn bar_of_schatten_lorentz() {
        let sl = WeightSpec::schatten_lorentz(1.0).unwrap();
        assert_relative_eq!(sl.bar().eval(3), (1.0f64 / 6.0).powf(1.0 / 3.0), max_relative = 1e-13);
        // closed form and generic cumulative path agree
        let via_list = WeightSpec::explicit((1..=50).map(|k| 1.0 / k as f64).collect()).unwrap();
        for k in 1..=50 {
            assert_relative_eq!(sl.bar().eval(k), via_list.bar().eval(k), max_relative = 1e-12);
        }
    }

    #[test]
    fn bar_at_one_is_first_entry() {
        for w in [
            WeightSpec::schatten_lorentz(0.7).unwrap(),
            WeightSpec::exponential(0.3, 2.0).unwrap(),
            WeightSpec::explicit(vec![0.9, 0.1]).unwrap(),
        ] {
            assert_relative_eq!(w.bar().eval(1), w.eval(1), max_relative = 1e-15);
        }
    }

    #[test]
    fn dot_doubles_entries() {
        let w = WeightSpec::explicit(vec![1.0, 0.5, 1.0 / 3.0]).unwrap();
        let got = w.dot().values(8);
        let want = [1.0, 1.0, 0.5, 0.5, 1.0 / 3.0, 1.0 / 3.0, 0.0, 0.0];
        for (g, e) in got.iter().zip(want) {
            assert_relative_eq!(*g, e, max_relative = 1e-15);
        }
        assert_eq!(w.dot().support_len(), Some(6));
    }

    #[test]
    fn dot_bar_schatten_lorentz_sandwich() {
        let w = WeightSpec::schatten_lorentz(1.0).unwrap().dot_bar();
        for (i, lv) in w.ln_values(2000).into_iter().enumerate() {
            let k = (i + 1) as f64;
            let upper = (2.0 * std::f64::consts::E / k).ln();
            assert!(lv <= upper + 1e-12);
            assert!(lv >= upper - 3.0 / k.sqrt() - 1e-12);
        }
    }

    #[test]
    fn prefix_products() {
        let ex = WeightSpec::exponential(2.0, 1.0).unwrap();
        assert_relative_eq!(ex.ln_prefix_product(4), -20.0, max_relative = 1e-15);
        let sl = WeightSpec::schatten_lorentz(1.0).unwrap();
        assert_relative_eq!(sl.ln_prefix_product(1), 0.0);
        assert_relative_eq!(sl.ln_prefix_product(5), -(120f64.ln()), max_relative = 1e-13);
        let list = WeightSpec::explicit(vec![1.0, 0.0]).unwrap();
        assert_eq!(list.ln_prefix_product(2), f64::NEG_INFINITY);
    }

    #[test]
    fn dot_bar_product_bounded_by_factorial_form() {
        // ∏ ẇ̄_n ≤ (2e)^k / k! for p = 1
        let w = WeightSpec::schatten_lorentz(1.0).unwrap().dot_bar();
        for k in [1usize, 2, 5, 40, 300] {
            let bound = k as f64 * (2.0 * std::f64::consts::E).ln() - ln_factorial(k);
            assert!(w.ln_prefix_product(k) <= bound + 1e-9);
        }
    }

    #[test]
    fn domination_probe() {
        let w = WeightSpec::schatten_lorentz(1.0).unwrap();
        assert_eq!(
            preceq(&w, &w, 100, 1e6),
            Domination::Holds {
                constant: 1.0,
                attained_at: 1
            }
        );
        assert!(preceq(&w, &w.bar(), 1000, 1e6).holds());
        // k^{-1/2} / k^{-1} = √k crosses 50 just after k = 2500
        let sl2 = WeightSpec::schatten_lorentz(2.0).unwrap();
        match preceq(&sl2, &w, DEFAULT_PROBE, 50.0) {
            Domination::ExceedsCap { index, .. } => assert_eq!(index, 2501),
            other => panic!("unexpected {other:?}"),
        }
        // without a binding cap the supremum sits at the probe edge
        match preceq(&sl2, &w, 400, 1e6) {
            Domination::Holds {
                constant,
                attained_at,
            } => {
                assert_eq!(attained_at, 400);
                assert_relative_eq!(constant, 20.0, max_relative = 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
        let list = WeightSpec::explicit(vec![1.0]).unwrap();
        assert_eq!(
            preceq(&w, &list, 10, 1e6),
            Domination::ZeroDenominator { index: 2 }
        );
    }

    #[test]
    fn exponential_bar_sandwich_with_fitted_constant() {
        let (a, alpha) = (1.0, 1.0);
        let c = fit_exponential_constants(a, alpha, DEFAULT_PROBE).unwrap();
        assert!(c.c_bar > 0.0 && c.c_dot_bar > 0.0 && c.c_product > 0.0);
        let bar = WeightSpec::exponential(a, alpha).unwrap().bar();
        for (i, lv) in bar.ln_values(DEFAULT_PROBE).into_iter().enumerate() {
            let k = (i + 1) as f64;
            let upper = -a / (alpha + 1.0) * k.powf(alpha);
            assert!(lv <= upper + 1e-9 * upper.abs());
            assert!(lv >= upper - c.c_bar * k.powf(alpha - 0.5) - 1e-9 * upper.abs());
        }
    }

    #[test]
    fn text_syntax() {
        let w: WeightSpec = "explicit:1,0.5,0.25.bar.dot".parse().unwrap();
        assert_eq!(w.chain(), &[Transform::Bar, Transform::Dot]);
        assert_eq!(w.to_string(), "explicit:1,0.5,0.25.bar.dot");
        let w: WeightSpec = "exp:alpha=1,a=0.5".parse().unwrap();
        assert_eq!(w.to_string(), "exp:a=0.5,alpha=1");
        let w: WeightSpec = "sl:p=1.5.dot".parse().unwrap();
        assert_eq!(w, WeightSpec::schatten_lorentz(1.5).unwrap().dot());
        for bad in ["sl:p=-1", "sl:q=1", "foo:p=1", "explicit:1,2", "explicit:", "exp:a=1", "sl"] {
            assert!(bad.parse::<WeightSpec>().is_err(), "{bad} should be rejected");
        }
    }

    fn arb_spec() -> impl Strategy<Value = WeightSpec> {
        let base = prop_oneof![
            (0.2f64..4.0).prop_map(|p| WeightSpec::schatten_lorentz(p).unwrap()),
            (0.1f64..3.0, 0.2f64..2.5).prop_map(|(a, al)| WeightSpec::exponential(a, al).unwrap()),
            prop::collection::vec(0.0f64..1.0, 1..12).prop_map(|mut v| {
                v.sort_by(|a, b| b.partial_cmp(a).unwrap());
                WeightSpec::explicit(v).unwrap()
            }),
        ];
        (base, prop::collection::vec(prop::bool::ANY, 0..4)).prop_map(|(mut w, chain)| {
            for bar in chain {
                w = if bar { w.bar() } else { w.dot() };
            }
            w
        })
    }

    proptest! {
        #[test]
        fn monotone_and_consistent(w in arb_spec()) {
            let lv = w.ln_values(300);
            for k in 1..300 {
                if lv[k - 1] == f64::NEG_INFINITY {
                    prop_assert_eq!(lv[k], f64::NEG_INFINITY);
                } else {
                    prop_assert!(lv[k] <= lv[k - 1] + 1e-12 * lv[k - 1].abs());
                }
            }
            for k in [1usize, 2, 7, 150, 300] {
                let single = w.ln_eval(k);
                if single.is_finite() {
                    prop_assert!((single - lv[k - 1]).abs() <= 1e-10 * (1.0 + single.abs()));
                } else {
                    prop_assert_eq!(lv[k - 1], f64::NEG_INFINITY);
                }
            }
        }

        #[test]
        fn dot_repeats(w in arb_spec(), k in 1usize..200) {
            let d = w.dot();
            prop_assert_eq!(d.eval(2 * k - 1), w.eval(k));
            prop_assert_eq!(d.eval(2 * k), w.eval(k));
        }

        #[test]
        fn bar_dominates(w in arb_spec(), k in 1usize..200) {
            prop_assert!(w.bar().eval(k) >= w.eval(k) * (1.0 - 1e-12));
        }

        #[test]
        fn display_round_trips(w in arb_spec()) {
            let back: WeightSpec = w.to_string().parse().unwrap();
            prop_assert_eq!(back, w);
        }
    }
}
