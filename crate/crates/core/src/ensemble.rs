//! Seeded random matrix generators for trial suites.
//!
//! Every generator takes the caller's RNG so a single 64-bit seed reproduces a
//! whole run.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::{Error, Result};
use crate::linalg::{c64, singular_values, w_gauge, CMatrix, OperatorMatrix, C64};
use crate::weights::WeightSpec;

/// Standard complex Gaussian: real and imaginary parts `N(0, 1/2)`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    c64(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// Complex Ginibre matrix scaled by `1/√n`, so the spectrum fills the unit disk.
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, n: usize) -> OperatorMatrix {
    let g = gaussian_matrix(rng, n, n) / c64((n as f64).sqrt(), 0.0);
    OperatorMatrix::from_matrix(g).expect("gaussian entries are finite")
}

/// Haar-distributed unitary via QR of a Gaussian matrix with the phases of
/// `diag(R)` folded back into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let qr = gaussian_matrix(rng, n, n).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c64(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// `U diag(λ) U*` with Haar `U`.
pub fn normal_with_spectrum<R: Rng + ?Sized>(rng: &mut R, spectrum: &[C64]) -> OperatorMatrix {
    let u = haar_unitary(rng, spectrum.len());
    let d = CMatrix::from_diagonal(&DVector::from_column_slice(spectrum));
    OperatorMatrix::from_matrix(&u * d * u.adjoint()).expect("finite")
}

/// Normal matrix with i.i.d. complex Gaussian eigenvalues.
pub fn random_normal<R: Rng + ?Sized>(rng: &mut R, n: usize) -> OperatorMatrix {
    let spectrum: Vec<C64> = (0..n).map(|_| complex_normal(rng)).collect();
    normal_with_spectrum(rng, &spectrum)
}

/// Hermitian matrix `(G + G*)/2`.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> OperatorMatrix {
    let g = gaussian_matrix(rng, n, n);
    let h = (&g + g.adjoint()) * c64(0.5, 0.0);
    OperatorMatrix::from_matrix(h).expect("finite")
}

/// Strictly upper triangular Gaussian matrix (nilpotent).
pub fn random_strictly_upper<R: Rng + ?Sized>(rng: &mut R, n: usize) -> OperatorMatrix {
    let m = CMatrix::from_fn(n, n, |i, j| if j > i { complex_normal(rng) } else { c64(0.0, 0.0) });
    OperatorMatrix::from_matrix(m).expect("finite")
}

/// `U diag(s) V*` with independent Haar `U`, `V`.
pub fn with_singular_values<R: Rng + ?Sized>(rng: &mut R, s: &[f64]) -> OperatorMatrix {
    let n = s.len();
    let u = haar_unitary(rng, n);
    let v = haar_unitary(rng, n);
    let sig = CMatrix::from_diagonal(&DVector::from_iterator(n, s.iter().map(|&x| c64(x, 0.0))));
    OperatorMatrix::from_matrix(u * sig * v.adjoint()).expect("finite")
}

/// Rescales `a` so its `w`-gauge equals `target`. Matrices with gauge zero are
/// returned unchanged.
pub fn scale_to_gauge(a: &OperatorMatrix, w: &WeightSpec, target: f64) -> Result<OperatorMatrix> {
    let g = w_gauge(a, w)?;
    if g.is_infinite() {
        return Err(Error::GaugeInfinite);
    }
    if g == 0.0 {
        return Ok(a.clone());
    }
    Ok(a.scaled(c64(target / g, 0.0)))
}

/// Ginibre matrix rescaled into the unit ball of `E_w`: `s_k ≤ w_k` for all
/// `k`, with equality at some `k`.
pub fn ginibre_in_class<R: Rng + ?Sized>(rng: &mut R, n: usize, w: &WeightSpec) -> Result<OperatorMatrix> {
    scale_to_gauge(&ginibre(rng, n), w, 1.0)
}

/// Matrix whose singular values are `w_k θ_k` with `θ_k ~ U(0, 1]`, sorted;
/// the Haar frames make it generically non-normal.
pub fn decaying_in_class<R: Rng + ?Sized>(rng: &mut R, n: usize, w: &WeightSpec) -> Result<OperatorMatrix> {
    let u = Uniform::new_inclusive(0.0_f64, 1.0).expect("valid range");
    let mut s: Vec<f64> = w.values(n).iter().map(|&wk| wk * (1.0 - u.sample(rng)).max(1e-3)).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    // normalize so the gauge is exactly 1 rather than at most 1
    scale_to_gauge(&with_singular_values(rng, &s), w, 1.0)
}

/// Gaussian perturbation direction normalized to operator norm one.
pub fn unit_direction<R: Rng + ?Sized>(rng: &mut R, n: usize) -> OperatorMatrix {
    let e = ginibre(rng, n);
    let s = singular_values(&e).expect("svd").largest();
    e.scaled(c64(1.0 / s, 0.0))
}
