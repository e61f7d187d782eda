//! Unitary triangularization `A = Q T Q*`, reordering of the diagonal of `T`
//! by adjacent Givens swaps, and the normal + nilpotent split it induces.
//!
//! Schur decompositions are not unique. Different eigenvalue orderings on
//! the diagonal of `T` give different nilpotent parts with different
//! singular values, which is why [`SchurOrdering::SearchSmall`] exists.

use nalgebra::Schur;
use serde::Serialize;

use super::{gauge_from_values, raw_singular_values, CMatrix, OperatorMatrix, C64};
use crate::error::{Error, Result};
use crate::weights::WeightSpec;

/// Largest size for which every eigenvalue ordering is tried.
pub const SEARCH_MAX_N: usize = 8;

/// Relative tolerances for the reconstruction, normality and nilpotency checks,
/// scaled as `relative · (1 + ‖A‖)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub relative: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { relative: 1e-10 }
    }
}

impl Tolerances {
    pub fn absolute(&self, norm: f64) -> f64 {
        self.relative * (1.0 + norm)
    }
}

/// `A = Q T Q*` with `Q` unitary and `T` upper triangular.
#[derive(Debug, Clone)]
pub struct SchurForm {
    q: CMatrix,
    t: CMatrix,
}

impl SchurForm {
    pub fn new(a: &OperatorMatrix) -> Result<Self> {
        let n = a.require_square()?;
        let schur = Schur::try_new(a.as_matrix().clone(), f64::EPSILON, 1000 * n.max(10))
            .ok_or(Error::NoConvergence("Schur decomposition"))?;
        let (q, mut t) = schur.unpack();
        for j in 0..n {
            for i in j + 1..n {
                t[(i, j)] = C64::new(0.0, 0.0);
            }
        }
        Ok(Self { q, t })
    }

    pub fn q(&self) -> &CMatrix {
        &self.q
    }

    pub fn t(&self) -> &CMatrix {
        &self.t
    }

    pub fn diagonal(&self) -> Vec<C64> {
        self.t.diagonal().iter().copied().collect()
    }

    /// Exchanges the diagonal entries at `k` and `k + 1`.
    pub fn swap(&mut self, k: usize) {
        let (c, s) = swap_rotation(&self.t, k);
        rotate_t(&mut self.t, k, c, s);
        let rows = self.q.nrows();
        rotate_columns(&mut self.q, k, rows, c, s);
    }

    /// Moves entries so that `labels` becomes `target`; `labels[i]` names the
    /// eigenvalue currently at diagonal position `i`.
    fn reorder(&mut self, labels: &mut [usize], target: &[usize]) {
        for (j, want) in target.iter().enumerate() {
            let i = j + labels[j..].iter().position(|l| l == want).expect("target is a permutation");
            for s in (j..i).rev() {
                self.swap(s);
                labels.swap(s, s + 1);
            }
        }
    }
}

/// `(c, s)` with `[c s; -s̄ c] [f; g] = [r; 0]`.
fn givens(f: C64, g: C64) -> (f64, C64) {
    let zero = C64::new(0.0, 0.0);
    if g == zero {
        return (1.0, zero);
    }
    if f == zero {
        return (0.0, g.conj() / g.norm());
    }
    let fa = f.norm();
    let norm = fa.hypot(g.norm());
    (fa / norm, (f / fa) * g.conj() / norm)
}

fn swap_rotation(t: &CMatrix, k: usize) -> (f64, C64) {
    givens(t[(k, k + 1)], t[(k + 1, k + 1)] - t[(k, k)])
}

fn rotate_t(t: &mut CMatrix, k: usize, c: f64, s: C64) {
    let n = t.nrows();
    let (t11, t22) = (t[(k, k)], t[(k + 1, k + 1)]);
    for j in k..n {
        let x = t[(k, j)];
        let y = t[(k + 1, j)];
        t[(k, j)] = x * c + s * y;
        t[(k + 1, j)] = y * c - s.conj() * x;
    }
    rotate_columns(t, k, k + 2, c, s);
    t[(k, k)] = t22;
    t[(k + 1, k + 1)] = t11;
    t[(k + 1, k)] = C64::new(0.0, 0.0);
}

/// Right-multiplies columns `k, k+1` (rows `0..rows`) by the adjoint rotation.
fn rotate_columns(m: &mut CMatrix, k: usize, rows: usize, c: f64, s: C64) {
    for i in 0..rows {
        let x = m[(i, k)];
        let y = m[(i, k + 1)];
        m[(i, k)] = x * c + s.conj() * y;
        m[(i, k + 1)] = y * c - s * x;
    }
}

/// Indices of `values` in nonincreasing-modulus order (see `sort_spectrum`).
pub(crate) fn spectrum_order(values: &[C64]) -> Vec<usize> {
    let scale = values.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let key = |z: &C64| (z.norm() / scale * 1e12).round() as i64;
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        let (x, y) = (&values[a], &values[b]);
        key(y).cmp(&key(x)).then(y.re.total_cmp(&x.re)).then(y.im.total_cmp(&x.im))
    });
    idx
}

#[derive(Debug, Clone, PartialEq)]
pub enum SchurOrdering {
    /// Diagonal in nonincreasing modulus order.
    ModulusDescending,
    /// `perm[j]` is the rank (in nonincreasing modulus order) of the eigenvalue
    /// placed at diagonal position `j`.
    ExplicitPermutation(Vec<usize>),
    /// Tries every ordering for `n ≤ 8` and keeps the one whose nilpotent part
    /// has the smallest `ẇ̄`-gauge for the given `w`; falls back to
    /// `ModulusDescending` above that size.
    SearchSmall(WeightSpec),
}

/// `A = D + N` with `D = U diag(T) U*` normal and `N = U triu₁(T) U*` nilpotent.
#[derive(Debug, Clone)]
pub struct SchurParts {
    pub basis: CMatrix,
    pub normal_part: CMatrix,
    pub nilpotent_part: CMatrix,
    pub triangular: CMatrix,
    /// Diagonal of `T`, i.e. the eigenvalues in the order used.
    pub ordering: Vec<C64>,
}

impl SchurParts {
    fn from_form(form: &SchurForm) -> Self {
        let n = form.t.nrows();
        let diag = CMatrix::from_diagonal(&form.t.diagonal());
        let strict = strict_upper(&form.t);
        let qa = form.q.adjoint();
        Self {
            normal_part: &form.q * diag * &qa,
            nilpotent_part: &form.q * strict * &qa,
            basis: form.q.clone(),
            triangular: form.t.clone(),
            ordering: (0..n).map(|i| form.t[(i, i)]).collect(),
        }
    }

    /// `‖D + N − A‖_F`.
    pub fn reconstruction_error(&self, a: &OperatorMatrix) -> f64 {
        (&self.normal_part + &self.nilpotent_part - a.as_matrix()).norm()
    }

    /// `‖D*D − DD*‖_F`.
    pub fn normality_error(&self) -> f64 {
        let d = &self.normal_part;
        let da = d.adjoint();
        (&da * d - d * &da).norm()
    }

    /// `‖N^n‖_F`.
    pub fn nilpotency_residual(&self) -> f64 {
        let n = self.nilpotent_part.nrows();
        let mut p = self.nilpotent_part.clone();
        for _ in 1..n {
            p = &p * &self.nilpotent_part;
        }
        p.norm()
    }

    /// Singular values of `N`, read off the strictly upper part of `T`.
    pub fn nilpotent_singular_values(&self) -> Result<Vec<f64>> {
        raw_singular_values(&strict_upper(&self.triangular))
    }

    /// `|N|_{ẇ̄}` for the user weight `w`.
    pub fn nilpotent_gauge(&self, w: &WeightSpec) -> Result<f64> {
        let s = self.nilpotent_singular_values()?;
        Ok(gauge_from_values(&s, &w.dot_bar().ln_values(s.len())))
    }

    pub fn normal_operator(&self) -> OperatorMatrix {
        OperatorMatrix::from_matrix(self.normal_part.clone()).expect("finite")
    }

    pub fn nilpotent_operator(&self) -> OperatorMatrix {
        OperatorMatrix::from_matrix(self.nilpotent_part.clone()).expect("finite")
    }
}

fn strict_upper(t: &CMatrix) -> CMatrix {
    let n = t.nrows();
    CMatrix::from_fn(n, n, |i, j| if j > i { t[(i, j)] } else { C64::new(0.0, 0.0) })
}

fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::OrderingLengthMismatch {
            expected: n,
            got: perm.len(),
        });
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidArgument(format!("{perm:?} is not a permutation of 0..{n}")));
        }
    }
    Ok(())
}

pub fn schur_decompose(a: &OperatorMatrix, ordering: &SchurOrdering) -> Result<SchurParts> {
    let n = a.require_square()?;
    let mut form = SchurForm::new(a)?;
    let order = spectrum_order(&form.diagonal());
    let mut labels = vec![0; n];
    for (rank, &pos) in order.iter().enumerate() {
        labels[pos] = rank;
    }
    let descending: Vec<usize> = (0..n).collect();
    match ordering {
        SchurOrdering::ModulusDescending => form.reorder(&mut labels, &descending),
        SchurOrdering::ExplicitPermutation(perm) => {
            check_permutation(perm, n)?;
            form.reorder(&mut labels, perm);
        }
        SchurOrdering::SearchSmall(w) => {
            form.reorder(&mut labels, &descending);
            if n <= SEARCH_MAX_N {
                let best = search_orderings(&form, &w.dot_bar().ln_values(n))?;
                form.reorder(&mut labels, &best);
            }
        }
    }
    Ok(SchurParts::from_form(&form))
}

/// Walks all `n!` orderings with adjacent transpositions (Steinhaus-Johnson-Trotter)
/// on a scratch copy of `T`, returning the label sequence with the smallest
/// nilpotent gauge. The starting order wins ties.
fn search_orderings(form: &SchurForm, ln_w: &[f64]) -> Result<Vec<usize>> {
    let n = form.t.nrows();
    let mut t = form.t.clone();
    let mut labels: Vec<usize> = (0..n).collect();
    let gauge = |t: &CMatrix| -> Result<f64> {
        Ok(gauge_from_values(&raw_singular_values(&strict_upper(t))?, ln_w))
    };
    let mut best = (gauge(&t)?, labels.clone());

    // items[i] is the SJT element at position i; dir[e] is -1 (left) or +1 (right)
    let mut items: Vec<usize> = (0..n).collect();
    let mut dir = vec![-1i64; n];
    loop {
        let mut mobile: Option<(usize, usize)> = None;
        for (pos, &e) in items.iter().enumerate() {
            let next = pos as i64 + dir[e];
            if next < 0 || next >= n as i64 || items[next as usize] > e {
                continue;
            }
            if mobile.is_none_or(|(_, m)| e > m) {
                mobile = Some((pos, e));
            }
        }
        let Some((pos, e)) = mobile else { break };
        let k = if dir[e] < 0 { pos - 1 } else { pos };
        items.swap(k, k + 1);
        labels.swap(k, k + 1);
        let (c, s) = swap_rotation(&t, k);
        rotate_t(&mut t, k, c, s);
        for (other, d) in dir.iter_mut().enumerate() {
            if other > e {
                *d = -*d;
            }
        }
        let g = gauge(&t)?;
        if g < best.0 {
            best = (g, labels.clone());
        }
    }
    Ok(best.1)
}
