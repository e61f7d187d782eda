//! Dense complex matrices and the spectral primitives the bounds consume.

mod io;
mod schur;

pub use io::{read_csv, read_matrix, read_matrix_market, write_csv, write_matrix_market};
pub use schur::{schur_decompose, SchurForm, SchurOrdering, SchurParts, Tolerances};

use nalgebra::{DMatrix, SVD};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::weights::WeightSpec;

pub type C64 = nalgebra::Complex<f64>;
pub type CMatrix = DMatrix<C64>;

const SVD_MAX_ITER: usize = 100_000;

pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// A dense complex matrix standing in for a (truncated) compact operator.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    data: CMatrix,
    label: String,
}

impl OperatorMatrix {
    /// Builds a matrix from row-major entries.
    pub fn new(rows: usize, cols: usize, row_major: &[C64]) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "matrix must be nonempty, got {rows}x{cols}"
            )));
        }
        if row_major.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                row_major.len()
            )));
        }
        Self::from_matrix(DMatrix::from_row_slice(rows, cols, row_major))
    }

    pub fn from_matrix(data: CMatrix) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::DimensionMismatch("matrix must be nonempty".into()));
        }
        for j in 0..data.ncols() {
            for i in 0..data.nrows() {
                let z = data[(i, j)];
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(Self {
            data,
            label: String::new(),
        })
    }

    /// Real matrix from rows; handy for literals.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        let entries: Vec<C64> = rows.iter().flat_map(|r| r.iter().map(|&x| c64(x, 0.0))).collect();
        Self::new(n, m, &entries)
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            data: CMatrix::zeros(n, n),
            label: String::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            data: CMatrix::identity(n, n),
            label: String::new(),
        }
    }

    pub fn diagonal(values: &[C64]) -> Result<Self> {
        Self::from_matrix(CMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(values)))
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[(i, j)]
    }

    pub fn row_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.data[(i, j)]);
            }
        }
        out
    }

    pub fn require_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows())
        } else {
            Err(Error::NonSquare {
                rows: self.rows(),
                cols: self.cols(),
            })
        }
    }

    pub fn scaled(&self, alpha: C64) -> Self {
        Self {
            data: self.data.map(|z| z * alpha),
            label: self.label.clone(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Self {
            data: &self.data - &other.data,
            label: String::new(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Self {
            data: &self.data + &other.data,
            label: String::new(),
        })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols() != other.rows() {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows(),
                self.cols(),
                other.rows(),
                other.cols()
            )));
        }
        Ok(Self {
            data: &self.data * &other.data,
            label: String::new(),
        })
    }

    pub fn adjoint(&self) -> Self {
        Self {
            data: self.data.adjoint(),
            label: self.label.clone(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.norm()
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.rows() != other.rows() || self.cols() != other.cols() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows(),
                self.cols(),
                other.rows(),
                other.cols()
            )));
        }
        Ok(())
    }

    /// SHA-256 over the shape and the little-endian bit patterns of the entries.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.rows() as u64).to_le_bytes());
        h.update((self.cols() as u64).to_le_bytes());
        for z in self.row_major() {
            h.update(z.re.to_bits().to_le_bytes());
            h.update(z.im.to_bits().to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Singular values `s_1 ≥ s_2 ≥ … ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularData {
    values: Vec<f64>,
}

impl SingularData {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `s_k` (1-based), zero past the end.
    pub fn s(&self, k: usize) -> f64 {
        if k == 0 {
            return f64::INFINITY;
        }
        self.values.get(k - 1).copied().unwrap_or(0.0)
    }

    pub fn largest(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn smallest(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

/// Eigenvalues sorted by nonincreasing modulus, repeated by algebraic multiplicity.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenData {
    values: Vec<C64>,
}

impl EigenData {
    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    /// Distance from `z` to the spectrum.
    pub fn distance(&self, z: C64) -> f64 {
        distance_to_set(z, &self.values)
    }
}

pub(crate) fn raw_singular_values(m: &CMatrix) -> Result<Vec<f64>> {
    let svd = SVD::try_new(m.clone(), false, false, f64::EPSILON, SVD_MAX_ITER)
        .ok_or(Error::NoConvergence("singular value decomposition"))?;
    let mut values: Vec<f64> = svd.singular_values.iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

pub fn singular_values(a: &OperatorMatrix) -> Result<SingularData> {
    Ok(SingularData {
        values: raw_singular_values(a.as_matrix())?,
    })
}

/// Sorts by nonincreasing modulus; moduli that agree to ~12 digits count as
/// ties and are ordered by descending real part, then descending imaginary part.
pub(crate) fn sort_spectrum(values: &mut Vec<C64>) {
    let order = schur::spectrum_order(values);
    *values = order.iter().map(|&i| values[i]).collect();
}

pub fn eigenvalues(a: &OperatorMatrix) -> Result<EigenData> {
    a.require_square()?;
    let form = SchurForm::new(a)?;
    let mut values = form.diagonal();
    sort_spectrum(&mut values);
    Ok(EigenData { values })
}

pub fn schatten_norm(a: &OperatorMatrix, p: f64) -> Result<f64> {
    if p.is_nan() || p <= 0.0 {
        return Err(Error::InvalidArgument(format!("Schatten exponent must be positive, got {p}")));
    }
    let s = singular_values(a)?;
    if p.is_infinite() {
        return Ok(s.largest());
    }
    Ok(s.values.iter().map(|v| v.powf(p)).sum::<f64>().powf(1.0 / p))
}

pub fn operator_norm(a: &OperatorMatrix) -> Result<f64> {
    Ok(singular_values(a)?.largest())
}

/// `max_k s_k / w_k`, with `0/0 := 0` and `+inf` when some `s_k > 0 = w_k`.
pub fn gauge_of(s: &SingularData, w: &WeightSpec) -> f64 {
    gauge_from_values(&s.values, &w.ln_values(s.values.len()))
}

pub(crate) fn gauge_from_values(s: &[f64], ln_w: &[f64]) -> f64 {
    let mut g = 0.0_f64;
    for (&sk, &lw) in s.iter().zip(ln_w) {
        if sk == 0.0 {
            continue;
        }
        if lw == f64::NEG_INFINITY {
            return f64::INFINITY;
        }
        g = g.max((sk.ln() - lw).exp());
    }
    g
}

pub fn w_gauge(a: &OperatorMatrix, w: &WeightSpec) -> Result<f64> {
    Ok(gauge_of(&singular_values(a)?, w))
}

pub fn distance_to_set(z: C64, set: &[C64]) -> f64 {
    set.iter().map(|&l| (z - l).norm()).fold(f64::INFINITY, f64::min)
}

/// Directed distance `sup_{a ∈ from} d(a, to)`.
pub fn spectral_variation(from: &[C64], to: &[C64]) -> Result<f64> {
    if from.is_empty() || to.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    Ok(from.iter().map(|&a| distance_to_set(a, to)).fold(0.0, f64::max))
}

pub fn hausdorff(s1: &[C64], s2: &[C64]) -> Result<f64> {
    Ok(spectral_variation(s1, s2)?.max(spectral_variation(s2, s1)?))
}

/// Greedy bipartite matching of two multisets; returns the largest matched
/// distance, or `None` when the sizes differ.
pub fn multiset_match_distance(a: &[C64], b: &[C64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let mut used = vec![false; b.len()];
    let mut worst = 0.0_f64;
    for &x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, &y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))?;
        used[j] = true;
        worst = worst.max(d);
    }
    Some(worst)
}

/// `‖(zI − A)^{-1}‖ = 1 / s_min(zI − A)`, `+inf` on the spectrum.
pub fn resolvent_norm(a: &OperatorMatrix, z: C64) -> Result<f64> {
    let smin = smallest_singular_value_shifted(a.as_matrix(), z)?;
    Ok(if smin == 0.0 { f64::INFINITY } else { 1.0 / smin })
}

pub(crate) fn smallest_singular_value_shifted(a: &CMatrix, z: C64) -> Result<f64> {
    let n = a.nrows();
    let mut m = -a.clone();
    for i in 0..n {
        m[(i, i)] += z;
    }
    Ok(raw_singular_values(&m)?.last().copied().unwrap_or(0.0))
}
