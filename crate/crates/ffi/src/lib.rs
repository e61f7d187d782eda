//! C interface to `specbound`.
//!
//! Matrices and weights are opaque heap handles created by `sb_*_new` /
//! `sb_*_parse` and released with the matching `sb_*_free`. Every fallible
//! call returns an [`SbStatus`] and writes results through out-pointers; on
//! failure a message is available from [`sb_last_error`] until the next call
//! on the same thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use specbound::bounds::{departure_budget, resolvent_bound, BoundFunction, BudgetStrategy};
use specbound::linalg::{c64, eigenvalues, read_matrix, w_gauge, OperatorMatrix, C64};
use specbound::perturbation::{spectral_distance_bound, spectral_variation_bound, CertificateSettings};
use specbound::series::SeriesControl;
use specbound::weights::WeightSpec;
use specbound::{Error, ErrorClass};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbStatus {
    Ok = 0,
    /// Malformed input: file contents, weight string, argument ranges.
    Parse = 2,
    /// Input outside the domain of the operation (non-square, on spectrum, ...).
    MathDomain = 3,
    /// A series or decomposition failed to converge.
    Convergence = 4,
    /// A required pointer argument was null or a string was not UTF-8.
    InvalidPointer = 5,
    /// Internal panic; the handle arguments should be considered poisoned.
    Panic = 6,
}

/// How the departure budget is computed.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbStrategy {
    TwoGauge = 0,
    ModulusDescending = 1,
    SearchSmall = 2,
}

impl SbStrategy {
    fn to_core(self) -> BudgetStrategy {
        match self {
            SbStrategy::TwoGauge => BudgetStrategy::TwoGauge,
            SbStrategy::ModulusDescending => BudgetStrategy::ModulusDescending,
            SbStrategy::SearchSmall => BudgetStrategy::SearchSmall,
        }
    }
}

/// Opaque square or rectangular complex matrix.
pub struct SbMatrix(OperatorMatrix);

/// Opaque weight sequence together with its bound function.
pub struct SbWeight {
    weight: WeightSpec,
    bound: BoundFunction,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

enum Failure {
    Core(Error),
    Pointer(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SbStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SbStatus::Ok,
        Ok(Err(Failure::Pointer(what))) => {
            set_error(what);
            SbStatus::InvalidPointer
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(&e.to_string());
            match e.class() {
                ErrorClass::Parse => SbStatus::Parse,
                ErrorClass::MathDomain => SbStatus::MathDomain,
                ErrorClass::Convergence => SbStatus::Convergence,
            }
        }
        Err(_) => {
            set_error("internal panic");
            SbStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Pointer(what))
}

unsafe fn write<T>(p: *mut T, v: T, what: &'static str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(Failure::Pointer(what));
    }
    p.write(v);
    Ok(())
}

unsafe fn as_str<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Pointer(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure::Pointer("string is not valid UTF-8"))
}

/// Message for the most recent failure on this thread, or an empty string.
/// The pointer stays valid until the next `sb_*` call on the same thread.
#[no_mangle]
pub extern "C" fn sb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a `rows × cols` matrix from row-major real and imaginary parts.
/// `im` may be null for a real matrix.
///
/// # Safety
/// `re` (and `im` if non-null) must point to `rows * cols` doubles; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_matrix_new(rows: usize, cols: usize, re: *const f64, im: *const f64, out: *mut *mut SbMatrix) -> SbStatus {
    guard(|| {
        if re.is_null() {
            return Err(Failure::Pointer("re is null"));
        }
        let len = rows.checked_mul(cols).ok_or(Error::InvalidArgument("matrix too large".into()))?;
        let re = std::slice::from_raw_parts(re, len);
        let entries: Vec<C64> = if im.is_null() {
            re.iter().map(|&x| c64(x, 0.0)).collect()
        } else {
            let im = std::slice::from_raw_parts(im, len);
            re.iter().zip(im).map(|(&x, &y)| c64(x, y)).collect()
        };
        let m = OperatorMatrix::new(rows, cols, &entries)?;
        write(out, Box::into_raw(Box::new(SbMatrix(m))), "out is null")
    })
}

/// Reads a Matrix Market or CSV file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_matrix_read(path: *const c_char, out: *mut *mut SbMatrix) -> SbStatus {
    guard(|| {
        let m = read_matrix(Path::new(as_str(path, "path is null")?))?;
        write(out, Box::into_raw(Box::new(SbMatrix(m))), "out is null")
    })
}

/// # Safety
/// `m` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sb_matrix_free(m: *mut SbMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// # Safety
/// `m` must be a live handle; `rows` and `cols` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_matrix_dims(m: *const SbMatrix, rows: *mut usize, cols: *mut usize) -> SbStatus {
    guard(|| {
        let m = &as_ref(m, "matrix is null")?.0;
        write(rows, m.rows(), "rows is null")?;
        write(cols, m.cols(), "cols is null")
    })
}

/// Parses a weight string (`sl:p=1`, `exp:a=1,alpha=1`, `explicit:1,0.5`) and
/// prepares its bound function with constant `dostanic_c`.
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_weight_parse(spec: *const c_char, dostanic_c: f64, out: *mut *mut SbWeight) -> SbStatus {
    guard(|| {
        let weight: WeightSpec = as_str(spec, "spec is null")?.parse()?;
        let bound = BoundFunction::for_weight(&weight, dostanic_c, SeriesControl::default())?;
        write(out, Box::into_raw(Box::new(SbWeight { weight, bound })), "out is null")
    })
}

/// # Safety
/// `w` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sb_weight_free(w: *mut SbWeight) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

/// `max_k s_k / w_k`; may be `+inf`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_gauge(m: *const SbMatrix, w: *const SbWeight, out: *mut f64) -> SbStatus {
    guard(|| {
        let g = w_gauge(&as_ref(m, "matrix is null")?.0, &as_ref(w, "weight is null")?.weight)?;
        write(out, g, "out is null")
    })
}

/// Upper bound on the departure from normality.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_departure_budget(m: *const SbMatrix, w: *const SbWeight, strategy: SbStrategy, out: *mut f64) -> SbStatus {
    guard(|| {
        let b = departure_budget(&as_ref(m, "matrix is null")?.0, &as_ref(w, "weight is null")?.weight, &strategy.to_core())?;
        write(out, b.nu_upper, "out is null")
    })
}

/// Perturbation radius function `H(r)`.
///
/// # Safety
/// `w` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_h(w: *const SbWeight, r: f64, out: *mut f64) -> SbStatus {
    guard(|| {
        let v = as_ref(w, "weight is null")?.bound.h(r)?;
        write(out, v, "out is null")
    })
}

/// Upper bound on `‖(zI − A)⁻¹‖` at `z = re + i·im`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_resolvent_bound(
    m: *const SbMatrix,
    w: *const SbWeight,
    strategy: SbStrategy,
    re: f64,
    im: f64,
    out: *mut f64,
) -> SbStatus {
    guard(|| {
        let a = &as_ref(m, "matrix is null")?.0;
        let w = as_ref(w, "weight is null")?;
        let budget = departure_budget(a, &w.weight, &strategy.to_core())?;
        let spectrum = eigenvalues(a)?;
        let v = resolvent_bound(&w.bound, spectrum.values(), c64(re, im), &budget)?;
        write(out, v, "out is null")
    })
}

/// Certified bound on the distance between `σ(A)` and `σ(B)`: Hausdorff when
/// `symmetric` is nonzero, otherwise the variation of `σ(B)` from `σ(A)`.
/// When `observed` is non-null it receives the measured distance.
///
/// # Safety
/// Handles must be live; `out` must be writable; `observed` may be null.
#[no_mangle]
pub unsafe extern "C" fn sb_distance_bound(
    a: *const SbMatrix,
    b: *const SbMatrix,
    w: *const SbWeight,
    strategy: SbStrategy,
    symmetric: i32,
    out: *mut f64,
    observed: *mut f64,
) -> SbStatus {
    guard(|| {
        let a = &as_ref(a, "a is null")?.0;
        let b = &as_ref(b, "b is null")?.0;
        let w = as_ref(w, "weight is null")?;
        let s = CertificateSettings {
            weight: &w.weight,
            bound: &w.bound,
            strategy: strategy.to_core(),
            observe: !observed.is_null(),
        };
        let cert = if symmetric != 0 {
            spectral_distance_bound(a, b, &s)?
        } else {
            spectral_variation_bound(a, b, &s)?
        };
        if let Some(o) = cert.observed {
            observed.write(o);
        }
        write(out, cert.value, "out is null")
    })
}
