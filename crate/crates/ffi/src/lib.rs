//! C ABI for the solvers in `krylov-core`.
//!
//! Matrices and reports are opaque heap handles released with their
//! `_free` function. Every entry point returns a `KrylovError`; the message
//! for the most recent failure on the calling thread is available from
//! `krylov_last_error`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use krylov_core::dispatch::{self, MethodSpec, PrecondSpec};
use krylov_core::sparse::{build, FormatTag, SparseMatrix, Triplets};
use krylov_core::{Error, SolveReport, SolverOptions, Status, TolKind, Tolerance};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KrylovError {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    /// The matrix is unsuitable for the requested method or preconditioner.
    Numerical = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KrylovFormat {
    Row = 0,
    Col = 1,
    Diag = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KrylovTolKind {
    Abs = 0,
    RelToB = 1,
    RelToR0 = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KrylovStatus {
    Converged = 0,
    MaxIter = 1,
    Breakdown = 2,
}

pub struct KrylovMatrix {
    a: SparseMatrix,
}

pub struct KrylovReport {
    report: SolveReport,
    breakdown: Option<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn fail(code: KrylovError, msg: impl Into<String>) -> KrylovError {
    set_error(msg);
    code
}

fn from_core(e: Error) -> KrylovError {
    let code = match e {
        Error::DimensionMismatch { .. } => KrylovError::DimensionMismatch,
        Error::InvalidArgument(_) | Error::Parse { .. } | Error::Io(_) => KrylovError::InvalidArgument,
        _ => KrylovError::Numerical,
    };
    fail(code, e.to_string())
}

fn guarded(f: impl FnOnce() -> KrylovError) -> KrylovError {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(code) => {
            if code == KrylovError::Ok {
                set_error("");
            }
            code
        }
        Err(_) => fail(KrylovError::Panic, "internal panic"),
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize) -> Option<&'a [T]> {
    if len == 0 {
        Some(&[])
    } else if p.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(p, len))
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, KrylovError> {
    if p.is_null() {
        return Err(fail(KrylovError::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(KrylovError::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Message for the last failed call on this thread, empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn krylov_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds an `n × n` matrix from `nnz` zero-based triplets. Duplicates are
/// summed.
///
/// # Safety
/// `rows`, `cols` and `vals` must point to `nnz` readable elements and `out`
/// to a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn krylov_matrix_from_triplets(
    n: usize,
    nnz: usize,
    rows: *const usize,
    cols: *const usize,
    vals: *const f64,
    format: KrylovFormat,
    out: *mut *mut KrylovMatrix,
) -> KrylovError {
    guarded(|| {
        if out.is_null() {
            return fail(KrylovError::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let (Some(r), Some(c), Some(v)) = (slice(rows, nnz), slice(cols, nnz), slice(vals, nnz)) else {
            return fail(KrylovError::NullPointer, "triplet array is null");
        };
        if n == 0 {
            return fail(KrylovError::InvalidArgument, "n must be positive");
        }
        let mut t = Triplets::new(n);
        for k in 0..nnz {
            if r[k] >= n || c[k] >= n {
                return fail(KrylovError::InvalidArgument, format!("entry {k} at ({}, {}) out of range", r[k], c[k]));
            }
            if !v[k].is_finite() {
                return fail(KrylovError::InvalidArgument, format!("entry {k} is not finite"));
            }
            t.push(r[k], c[k], v[k]);
        }
        let tag = match format {
            KrylovFormat::Row => FormatTag::Row,
            KrylovFormat::Col => FormatTag::Col,
            KrylovFormat::Diag => FormatTag::Diag,
        };
        *out = Box::into_raw(Box::new(KrylovMatrix { a: build(&t, tag) }));
        KrylovError::Ok
    })
}

/// # Safety
/// `m` must be null or a handle from `krylov_matrix_from_triplets` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn krylov_matrix_free(m: *mut KrylovMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Order of the matrix, 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live matrix handle.
#[no_mangle]
pub unsafe extern "C" fn krylov_matrix_n(m: *const KrylovMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.a.n())
}

/// Solves `A x = b`. `method` and `precond` use the CLI syntax, e.g.
/// `"gmres,restart=20"` and `"ic"`; a null `precond` means none. `x0` may
/// be null for a zero start, and `max_iter = 0` selects the method default.
///
/// Nonconvergence and breakdown are not errors: they are reported through
/// `krylov_report_status`.
///
/// # Safety
/// `m` must be a live matrix handle, `b` (and `x0` when non-null) must hold
/// `n` values, strings must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn krylov_solve(
    m: *const KrylovMatrix,
    b: *const f64,
    x0: *const f64,
    method: *const c_char,
    precond: *const c_char,
    tol: f64,
    tol_kind: KrylovTolKind,
    max_iter: usize,
    out: *mut *mut KrylovReport,
) -> KrylovError {
    guarded(|| {
        if out.is_null() {
            return fail(KrylovError::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let Some(m) = m.as_ref() else {
            return fail(KrylovError::NullPointer, "matrix is null");
        };
        let n = m.a.n();
        let Some(b) = slice(b, n) else {
            return fail(KrylovError::NullPointer, "b is null");
        };
        let x0 = if x0.is_null() { vec![0.0; n] } else { slice(x0, n).unwrap().to_vec() };
        let method = match text(method, "method") {
            Ok(s) => s,
            Err(code) => return code,
        };
        let precond = if precond.is_null() {
            "none"
        } else {
            match text(precond, "precond") {
                Ok(s) => s,
                Err(code) => return code,
            }
        };
        let method: MethodSpec = match method.parse() {
            Ok(s) => s,
            Err(e) => return from_core(e),
        };
        let precond: PrecondSpec = match precond.parse() {
            Ok(s) => s,
            Err(e) => return from_core(e),
        };
        if !(tol > 0.0 && tol.is_finite()) {
            return fail(KrylovError::InvalidArgument, "tol must be positive");
        }
        let kind = match tol_kind {
            KrylovTolKind::Abs => TolKind::AbsResidual,
            KrylovTolKind::RelToB => TolKind::RelToB,
            KrylovTolKind::RelToR0 => TolKind::RelToR0,
        };
        let opts = SolverOptions { tol: Tolerance { tol, kind }, max_iter: (max_iter > 0).then_some(max_iter) };
        match dispatch::solve(&m.a, b, &x0, &method, &precond, &opts) {
            Ok(report) => {
                let breakdown = match report.status {
                    Status::Breakdown(k) => Some(CString::new(k.as_str()).unwrap()),
                    _ => None,
                };
                *out = Box::into_raw(Box::new(KrylovReport { report, breakdown }));
                KrylovError::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// # Safety
/// `r` must be null or a report handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn krylov_report_free(r: *mut KrylovReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `r` must be a live report handle.
#[no_mangle]
pub unsafe extern "C" fn krylov_report_status(r: *const KrylovReport) -> KrylovStatus {
    match (*r).report.status {
        Status::Converged => KrylovStatus::Converged,
        Status::MaxIter => KrylovStatus::MaxIter,
        Status::Breakdown(_) => KrylovStatus::Breakdown,
    }
}

/// Breakdown kind such as `"serious_breakdown"`, or null when the run did
/// not break down. Owned by the report.
///
/// # Safety
/// `r` must be a live report handle.
#[no_mangle]
pub unsafe extern "C" fn krylov_report_breakdown(r: *const KrylovReport) -> *const c_char {
    (*r).breakdown.as_ref().map_or(ptr::null(), |s| s.as_ptr())
}

/// # Safety
/// `r` must be a live report handle.
#[no_mangle]
pub unsafe extern "C" fn krylov_report_iterations(r: *const KrylovReport) -> usize {
    (*r).report.iterations
}

/// Number of residual-history entries (iterations + 1).
///
/// # Safety
/// `r` must be a live report handle.
#[no_mangle]
pub unsafe extern "C" fn krylov_report_history_len(r: *const KrylovReport) -> usize {
    (*r).report.history.len()
}

/// Copies up to `len` history entries into `buf`; returns the number copied.
///
/// # Safety
/// `r` must be a live report handle and `buf` writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn krylov_report_history(r: *const KrylovReport, buf: *mut f64, len: usize) -> usize {
    copy_out(&(*r).report.history, buf, len)
}

/// Copies up to `len` solution entries into `buf`; returns the number copied.
///
/// # Safety
/// `r` must be a live report handle and `buf` writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn krylov_report_solution(r: *const KrylovReport, buf: *mut f64, len: usize) -> usize {
    copy_out(&(*r).report.x, buf, len)
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> usize {
    if buf.is_null() {
        return 0;
    }
    let k = src.len().min(len);
    ptr::copy_nonoverlapping(src.as_ptr(), buf, k);
    k
}
