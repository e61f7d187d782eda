//! Bauer-Fike type radii, certified spectral variation and spectral distance
//! bounds, finite-section truncation, and randomized trial ensembles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::bounds::{departure_budget, BoundFunction, BudgetStrategy, NonNormalityBudget};
use crate::ensemble;
use crate::error::{Error, Result};
use crate::linalg::{
    c64, eigenvalues, hausdorff, operator_norm, spectral_variation, OperatorMatrix, Tolerances, C64,
};
use crate::weights::WeightSpec;

/// `K · h(δ / K)` with `h(r) = 1 / g̃⁻¹(1/r)` and `h(0) = 0`, for any strictly
/// increasing surjection `g̃` supplied through its inverse.
pub fn bauer_fike_radius(g_inverse: impl Fn(f64) -> Result<f64>, k: f64, delta: f64) -> Result<f64> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidArgument(format!("K must be positive and finite, got {k}")));
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument(format!("delta must be finite and >= 0, got {delta}")));
    }
    if delta == 0.0 {
        return Ok(0.0);
    }
    Ok(k / g_inverse(k / delta)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Variation,
    Hausdorff,
    NormalExact,
}

/// A certified upper bound on a spectral distance.
///
/// Serializes with a fixed field order so reports can be compared byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceCertificate {
    pub bound_kind: BoundKind,
    pub value: f64,
    pub budget_used: f64,
    pub perturbation_norm: f64,
    pub weight: String,
    pub dostanic_c: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observed: Option<f64>,
    pub inputs_digest: String,
}

impl DistanceCertificate {
    /// Whether `observed ≤ value + tol`; vacuously true without an observation.
    pub fn holds(&self, tol: f64) -> bool {
        self.observed.is_none_or(|o| o <= self.value + tol)
    }
}

fn pair_digest(a: &OperatorMatrix, b: &OperatorMatrix) -> String {
    let mut h = Sha256::new();
    h.update(a.digest().as_bytes());
    h.update(b.digest().as_bytes());
    h.finalize().iter().map(|x| format!("{x:02x}")).collect()
}

fn check_pair(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<()> {
    let n = a.require_square()?;
    let m = b.require_square()?;
    if n != m {
        return Err(Error::DimensionMismatch(format!("{n}x{n} vs {m}x{m}")));
    }
    Ok(())
}

/// Inputs shared by the certificate builders.
#[derive(Debug, Clone)]
pub struct CertificateSettings<'a> {
    pub weight: &'a WeightSpec,
    /// Must be `BoundFunction::for_weight(weight, ..)`.
    pub bound: &'a BoundFunction,
    pub strategy: BudgetStrategy,
    /// Attach the eigensolver measurement of the bounded distance.
    pub observe: bool,
}

/// Bound on `sup_{μ ∈ σ(B)} d(μ, σ(A))`: `ν H(‖A−B‖/ν)` with `ν` the departure
/// budget of `A`, or `‖A−B‖` when `A` is normal.
pub fn spectral_variation_bound(a: &OperatorMatrix, b: &OperatorMatrix, s: &CertificateSettings) -> Result<DistanceCertificate> {
    check_pair(a, b)?;
    let budget = departure_budget(a, s.weight, &s.strategy)?;
    variation_from_budget(a, b, &budget, s)
}

/// [`spectral_variation_bound`] with a precomputed budget for `A`.
pub fn variation_from_budget(
    a: &OperatorMatrix,
    b: &OperatorMatrix,
    budget: &NonNormalityBudget,
    s: &CertificateSettings,
) -> Result<DistanceCertificate> {
    check_pair(a, b)?;
    let delta = operator_norm(&a.sub(b)?)?;
    let (kind, value, used) = if budget.is_normal() {
        (BoundKind::NormalExact, delta, 0.0)
    } else {
        (BoundKind::Variation, s.bound.scaled_h(budget.nu_upper, delta)?, budget.nu_upper)
    };
    let observed = if s.observe {
        Some(spectral_variation(eigenvalues(b)?.values(), eigenvalues(a)?.values())?)
    } else {
        None
    };
    Ok(DistanceCertificate {
        bound_kind: kind,
        value,
        budget_used: used,
        perturbation_norm: delta,
        weight: s.weight.to_string(),
        dostanic_c: s.bound.dostanic_c(),
        observed,
        inputs_digest: pair_digest(a, b),
    })
}

/// Bound on the Hausdorff distance of the spectra: `m H(‖A−B‖/m)` with `m` the
/// larger of the two budgets, or `‖A−B‖` when both are normal.
pub fn spectral_distance_bound(a: &OperatorMatrix, b: &OperatorMatrix, s: &CertificateSettings) -> Result<DistanceCertificate> {
    check_pair(a, b)?;
    let ba = departure_budget(a, s.weight, &s.strategy)?;
    let bb = departure_budget(b, s.weight, &s.strategy)?;
    distance_from_budgets(a, b, &ba, &bb, s)
}

/// [`spectral_distance_bound`] with precomputed budgets.
pub fn distance_from_budgets(
    a: &OperatorMatrix,
    b: &OperatorMatrix,
    ba: &NonNormalityBudget,
    bb: &NonNormalityBudget,
    s: &CertificateSettings,
) -> Result<DistanceCertificate> {
    check_pair(a, b)?;
    let delta = operator_norm(&a.sub(b)?)?;
    // digest and budget are taken in a canonical order so the certificate is symmetric
    let (first, second) = if a.digest() <= b.digest() { (a, b) } else { (b, a) };
    let (kind, value, used) = if ba.is_normal() && bb.is_normal() {
        (BoundKind::NormalExact, delta, 0.0)
    } else {
        let m = ba.nu_upper.max(bb.nu_upper);
        (BoundKind::Hausdorff, s.bound.scaled_h(m, delta)?, m)
    };
    let observed = if s.observe {
        Some(hausdorff(eigenvalues(a)?.values(), eigenvalues(b)?.values())?)
    } else {
        None
    };
    Ok(DistanceCertificate {
        bound_kind: kind,
        value,
        budget_used: used,
        perturbation_norm: delta,
        weight: s.weight.to_string(),
        dostanic_c: s.bound.dostanic_c(),
        observed,
        inputs_digest: pair_digest(first, second),
    })
}

/// Spectral enclosure obtained from the leading `k × k` section.
#[derive(Debug, Clone, Serialize)]
pub struct TruncationCertificate {
    pub k: usize,
    pub n: usize,
    /// Eigenvalues of the `k × k` section.
    #[serde(serialize_with = "crate::report::serialize_complex_list")]
    pub section_spectrum: Vec<C64>,
    /// Disk centers: the section spectrum plus the origin when `k < n`.
    #[serde(serialize_with = "crate::report::serialize_complex_list")]
    pub centers: Vec<C64>,
    pub radius: f64,
    pub certificate: DistanceCertificate,
}

/// Compares `A` with `P_k A P_k` (the leading section embedded at full size).
/// Every eigenvalue of `A` lies within `radius` of `centers` and conversely.
pub fn truncation_certify(a: &OperatorMatrix, k: usize, s: &CertificateSettings) -> Result<TruncationCertificate> {
    let n = a.require_square()?;
    if k == 0 || k > n {
        return Err(Error::BadTruncationSize { k, n });
    }
    let m = a.as_matrix();
    let embedded = crate::linalg::CMatrix::from_fn(n, n, |i, j| if i < k && j < k { m[(i, j)] } else { c64(0.0, 0.0) });
    let embedded = OperatorMatrix::from_matrix(embedded)?;
    let section = OperatorMatrix::from_matrix(m.view((0, 0), (k, k)).into_owned())?;
    let section_spectrum = eigenvalues(&section)?.into_values();
    let mut centers = section_spectrum.clone();
    if k < n {
        centers.push(c64(0.0, 0.0));
    }
    let mut certificate = spectral_distance_bound(a, &embedded, &CertificateSettings { observe: false, ..s.clone() })?;
    if s.observe {
        certificate.observed = Some(hausdorff(eigenvalues(a)?.values(), &centers)?);
    }
    Ok(TruncationCertificate {
        k,
        n,
        section_spectrum,
        centers,
        radius: certificate.value,
        certificate,
    })
}

/// Configuration of a randomized domination experiment.
#[derive(Debug, Clone, Serialize)]
pub struct TrialConfig {
    #[serde(serialize_with = "crate::report::serialize_display")]
    pub weight: WeightSpec,
    pub trials: usize,
    pub n_min: usize,
    pub n_max: usize,
    /// Perturbation norms are log-uniform on this interval.
    pub perturbation: (f64, f64),
    pub strategy: BudgetStrategy,
    pub seed: u64,
}

impl TrialConfig {
    pub fn new(weight: WeightSpec, seed: u64) -> Self {
        Self {
            weight,
            trials: 500,
            n_min: 2,
            n_max: 12,
            perturbation: (1e-4, 1e-1),
            strategy: BudgetStrategy::ModulusDescending,
            seed,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub index: usize,
    pub n: usize,
    pub perturbation_norm: f64,
    pub certificate: f64,
    pub observed: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialSummary {
    pub config: TrialConfig,
    pub dostanic_c: f64,
    pub violations: usize,
    /// Largest `observed / certificate`.
    pub worst_ratio: f64,
    pub records: Vec<TrialRecord>,
}

/// Runs `config.trials` independent trials in parallel. Trial `i` draws from
/// its own ChaCha8 stream `i` under `config.seed`, so results do not depend on
/// scheduling. Each trial perturbs an in-class matrix `A` (alternately a
/// rescaled Ginibre matrix and one with singular values `w_k θ_k`) by a random
/// direction and compares the Hausdorff distance of the spectra with the
/// certificate, allowing `1e-10 (1 + ‖A‖)` for eigensolver error.
pub fn run_trials(config: &TrialConfig, bound: &BoundFunction) -> Result<TrialSummary> {
    if config.n_min == 0 || config.n_min > config.n_max || config.trials == 0 {
        return Err(Error::InvalidArgument("trials need 1 <= n_min <= n_max and trials >= 1".into()));
    }
    let (lo, hi) = config.perturbation;
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(Error::InvalidArgument(format!("bad perturbation range ({lo}, {hi})")));
    }
    let settings = CertificateSettings {
        weight: &config.weight,
        bound,
        strategy: config.strategy.clone(),
        observe: true,
    };
    let records = (0..config.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(i as u64);
            let n = rng.random_range(config.n_min..=config.n_max);
            let a = if i % 2 == 0 {
                ensemble::ginibre_in_class(&mut rng, n, &config.weight)?
            } else {
                ensemble::decaying_in_class(&mut rng, n, &config.weight)?
            };
            let t = (lo.ln() + (hi.ln() - lo.ln()) * rng.random::<f64>()).exp();
            let b = a.add(&ensemble::unit_direction(&mut rng, n).scaled(c64(t, 0.0)))?;
            let cert = spectral_distance_bound(&a, &b, &settings)?;
            let observed = cert.observed.unwrap_or(0.0);
            let tol = Tolerances::default().absolute(operator_norm(&a)?);
            Ok(TrialRecord {
                index: i,
                n,
                perturbation_norm: cert.perturbation_norm,
                certificate: cert.value,
                observed,
                violated: !cert.holds(tol),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let violations = records.iter().filter(|r| r.violated).count();
    let worst_ratio = records
        .iter()
        .filter(|r| r.certificate > 0.0)
        .map(|r| r.observed / r.certificate)
        .fold(0.0, f64::max);
    Ok(TrialSummary {
        config: config.clone(),
        dostanic_c: bound.dostanic_c(),
        violations,
        worst_ratio,
        records,
    })
}

/// Certificate values along `B_t = A + tE` for each `t` in `ts`.
pub fn certificate_path(a: &OperatorMatrix, e: &OperatorMatrix, ts: &[f64], s: &CertificateSettings) -> Result<Vec<f64>> {
    let budget_a = departure_budget(a, s.weight, &s.strategy)?;
    let quiet = CertificateSettings { observe: false, ..s.clone() };
    ts.iter()
        .map(|&t| {
            let b = a.add(&e.scaled(c64(t, 0.0)))?;
            let budget_b = departure_budget(&b, s.weight, &s.strategy)?;
            Ok(distance_from_budgets(a, &b, &budget_a, &budget_b, &quiet)?.value)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::resolvent_norm;
    use approx::assert_relative_eq;

    fn settings<'a>(w: &'a WeightSpec, bf: &'a BoundFunction) -> CertificateSettings<'a> {
        CertificateSettings {
            weight: w,
            bound: bf,
            strategy: BudgetStrategy::SearchSmall,
            observe: true,
        }
    }

    #[test]
    fn radius_basics() {
        let id = |y: f64| Ok(y);
        for delta in [0.0, 1e-3, 0.5, 7.0] {
            assert_relative_eq!(bauer_fike_radius(id, 2.5, delta).unwrap(), delta, max_relative = 1e-15);
        }
        let bf = BoundFunction::with_defaults(&WeightSpec::schatten_lorentz(1.0).unwrap()).unwrap();
        let mut prev = 0.0;
        for i in 0..30 {
            let delta = 1e-6 * 1.7f64.powi(i);
            let r = bauer_fike_radius(|y| bf.f_tilde_inverse(y), 0.3, delta).unwrap();
            assert!(r >= prev);
            assert_relative_eq!(r, bf.scaled_h(0.3, delta).unwrap(), max_relative = 1e-14);
            prev = r;
        }
        assert!(bauer_fike_radius(id, 0.0, 1.0).is_err());
    }

    #[test]
    fn identical_and_normal_inputs() {
        let w = WeightSpec::schatten_lorentz(1.0).unwrap();
        let bf = BoundFunction::with_defaults(&w).unwrap();
        let s = settings(&w, &bf);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = ensemble::ginibre(&mut rng, 5);
        let c = spectral_variation_bound(&a, &a, &s).unwrap();
        assert_eq!(c.value, 0.0);
        assert!(c.observed.unwrap() < 1e-12);

        let normal = ensemble::random_normal(&mut rng, 5);
        let b = ensemble::ginibre(&mut rng, 5);
        let c = spectral_variation_bound(&normal, &b, &s).unwrap();
        assert_eq!(c.bound_kind, BoundKind::NormalExact);
        assert_eq!(c.value, operator_norm(&normal.sub(&b).unwrap()).unwrap());
        assert!(c.holds(1e-10));
    }

    #[test]
    fn diagonal_pair_is_sharp() {
        let w = WeightSpec::schatten_lorentz(1.0).unwrap();
        let bf = BoundFunction::with_defaults(&w).unwrap();
        let a = OperatorMatrix::diagonal(&[c64(1.0, 0.0), c64(2.0, 0.0), c64(3.0, 0.0)]).unwrap();
        let b = OperatorMatrix::diagonal(&[c64(1.1, 0.0), c64(2.0, 0.0), c64(3.0, 0.0)]).unwrap();
        let c = spectral_distance_bound(&a, &b, &settings(&w, &bf)).unwrap();
        assert_eq!(c.bound_kind, BoundKind::NormalExact);
        assert_relative_eq!(c.value, 0.1, max_relative = 1e-12);
        assert_relative_eq!(c.observed.unwrap(), 0.1, max_relative = 1e-12);
    }

    #[test]
    fn distance_certificate_is_symmetric() {
        let w = WeightSpec::schatten_lorentz(1.0).unwrap();
        let bf = BoundFunction::with_defaults(&w).unwrap();
        let s = settings(&w, &bf);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..5 {
            let a = ensemble::ginibre_in_class(&mut rng, 5, &w).unwrap();
            let b = ensemble::ginibre_in_class(&mut rng, 5, &w).unwrap();
            let ab = serde_json::to_string(&spectral_distance_bound(&a, &b, &s).unwrap()).unwrap();
            let ba = serde_json::to_string(&spectral_distance_bound(&b, &a, &s).unwrap()).unwrap();
            assert_eq!(ab, ba);
        }
    }

    #[test]
    fn perturbation_lemma_on_sampled_points() {
        // for z ∈ σ(B) \ σ(A): 1/‖B − A‖ ≤ ‖(zI − A)⁻¹‖
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..30 {
            let a = ensemble::ginibre(&mut rng, 6);
            let e = ensemble::unit_direction(&mut rng, 6).scaled(c64(0.05, 0.0));
            let b = a.add(&e).unwrap();
            let delta = operator_norm(&e).unwrap();
            let ea = eigenvalues(&a).unwrap();
            for &z in eigenvalues(&b).unwrap().values() {
                if ea.distance(z) > 1e-8 {
                    assert!(1.0 / delta <= resolvent_norm(&a, z).unwrap() * (1.0 + 1e-8));
                }
            }
        }
    }

    #[test]
    fn truncation_cases() {
        let w = WeightSpec::schatten_lorentz(1.0).unwrap();
        let bf = BoundFunction::with_defaults(&w).unwrap();
        let s = settings(&w, &bf);
        let n = 8usize;
        let d: Vec<C64> = (0..n).map(|i| c64(0.5f64.powi(i as i32), 0.0)).collect();
        let a = OperatorMatrix::diagonal(&d).unwrap();
        let full = truncation_certify(&a, n, &s).unwrap();
        assert_eq!(full.radius, 0.0);
        let t = truncation_certify(&a, n - 2, &s).unwrap();
        assert!(t.certificate.holds(1e-12));
        assert_relative_eq!(t.certificate.observed.unwrap(), 0.5f64.powi(n as i32 - 2), max_relative = 1e-12);
        assert!(matches!(truncation_certify(&a, 0, &s), Err(Error::BadTruncationSize { .. })));
        assert!(matches!(truncation_certify(&a, n + 1, &s), Err(Error::BadTruncationSize { .. })));
    }

    #[test]
    fn larger_budget_never_shrinks_certificate() {
        let w = WeightSpec::schatten_lorentz(1.0).unwrap();
        let bf = BoundFunction::with_defaults(&w).unwrap();
        let s = settings(&w, &bf);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = ensemble::ginibre_in_class(&mut rng, 5, &w).unwrap();
        let b = a.add(&ensemble::unit_direction(&mut rng, 5).scaled(c64(1e-2, 0.0))).unwrap();
        let budget = departure_budget(&a, &w, &BudgetStrategy::SearchSmall).unwrap();
        let mut prev = 0.0;
        for f in [1.0, 1.5, 3.0, 10.0] {
            let v = variation_from_budget(&a, &b, &budget.raised_to(budget.nu_upper * f), &s).unwrap().value;
            assert!(v >= prev * (1.0 - 1e-12));
            prev = v;
        }
    }

    #[test]
    fn small_trial_run_is_clean_and_reproducible() {
        let w = WeightSpec::schatten_lorentz(1.0).unwrap();
        let bf = BoundFunction::with_defaults(&w).unwrap();
        let mut cfg = TrialConfig::new(w, 77);
        cfg.trials = 24;
        cfg.n_max = 6;
        let s1 = run_trials(&cfg, &bf).unwrap();
        let s2 = run_trials(&cfg, &bf).unwrap();
        assert_eq!(s1.violations, 0);
        assert_eq!(serde_json::to_string(&s1).unwrap(), serde_json::to_string(&s2).unwrap());
    }
}
