use std::ffi::{CStr, CString};
use std::ptr;

use krylov_ffi::*;

fn tridiag(n: usize, format: KrylovFormat) -> *mut KrylovMatrix {
    let mut r = Vec::new();
    let mut c = Vec::new();
    let mut v = Vec::new();
    for i in 0..n {
        r.push(i);
        c.push(i);
        v.push(2.0);
        if i + 1 < n {
            r.extend([i, i + 1]);
            c.extend([i + 1, i]);
            v.extend([-1.0, -1.0]);
        }
    }
    let mut m = ptr::null_mut();
    let code = unsafe { krylov_matrix_from_triplets(n, r.len(), r.as_ptr(), c.as_ptr(), v.as_ptr(), format, &mut m) };
    assert_eq!(code, KrylovError::Ok);
    m
}

fn solve(m: *const KrylovMatrix, b: &[f64], method: &str, precond: Option<&str>) -> (KrylovError, *mut KrylovReport) {
    let method = CString::new(method).unwrap();
    let precond = precond.map(|p| CString::new(p).unwrap());
    let mut rep = ptr::null_mut();
    let code = unsafe {
        krylov_solve(
            m,
            b.as_ptr(),
            ptr::null(),
            method.as_ptr(),
            precond.as_ref().map_or(ptr::null(), |p| p.as_ptr()),
            1e-10,
            KrylovTolKind::RelToB,
            0,
            &mut rep,
        )
    };
    (code, rep)
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(krylov_last_error()) }.to_str().unwrap().to_string()
}

#[test]
fn cg_solves_tridiagonal() {
    for format in [KrylovFormat::Row, KrylovFormat::Col, KrylovFormat::Diag] {
        let n = 20;
        let m = tridiag(n, format);
        assert_eq!(unsafe { krylov_matrix_n(m) }, n);
        // A·1 for the 2, −1 stencil
        let mut b = vec![0.0; n];
        b[0] = 1.0;
        b[n - 1] = 1.0;
        let (code, rep) = solve(m, &b, "cg", Some("jacobi"));
        assert_eq!(code, KrylovError::Ok, "{}", last_error());
        unsafe {
            assert_eq!(krylov_report_status(rep), KrylovStatus::Converged);
            assert!(krylov_report_breakdown(rep).is_null());
            let iters = krylov_report_iterations(rep);
            assert!(iters > 0 && iters <= n);
            assert_eq!(krylov_report_history_len(rep), iters + 1);
            let mut hist = vec![0.0; iters + 1];
            assert_eq!(krylov_report_history(rep, hist.as_mut_ptr(), hist.len()), iters + 1);
            assert!(hist[iters] <= 1e-10 * 2f64.sqrt());
            let mut x = vec![0.0; n];
            assert_eq!(krylov_report_solution(rep, x.as_mut_ptr(), n), n);
            assert!(x.iter().all(|v| (v - 1.0).abs() < 1e-8));
            krylov_report_free(rep);
            krylov_matrix_free(m);
        }
    }
}

#[test]
fn breakdown_is_reported_not_an_error() {
    // [[0, 1], [1, 0]] with b = e1: the bi-Lanczos pair is self-orthogonal
    let r = [0usize, 1];
    let c = [1usize, 0];
    let v = [1.0, 1.0];
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(krylov_matrix_from_triplets(2, 2, r.as_ptr(), c.as_ptr(), v.as_ptr(), KrylovFormat::Row, &mut m), KrylovError::Ok);
    }
    let (code, rep) = solve(m, &[1.0, 0.0], "bicg", None);
    assert_eq!(code, KrylovError::Ok);
    unsafe {
        assert_eq!(krylov_report_status(rep), KrylovStatus::Breakdown);
        assert_eq!(CStr::from_ptr(krylov_report_breakdown(rep)).to_str().unwrap(), "serious_breakdown");
        krylov_report_free(rep);
        krylov_matrix_free(m);
    }
}

#[test]
fn bad_arguments() {
    let m = tridiag(4, KrylovFormat::Row);
    let b = [1.0; 4];
    let (code, rep) = solve(m, &b, "nonsense", None);
    assert_eq!(code, KrylovError::InvalidArgument);
    assert!(rep.is_null());
    assert!(!last_error().is_empty());

    let (code, _) = solve(ptr::null(), &b, "cg", None);
    assert_eq!(code, KrylovError::NullPointer);

    let (code, _) = solve(m, &b, "minres", Some("jacobi"));
    assert_eq!(code, KrylovError::InvalidArgument);

    let (code, rep) = solve(m, &b, "gmres", None);
    assert_eq!(code, KrylovError::Ok);
    assert!(last_error().is_empty());
    unsafe {
        krylov_report_free(rep);
        krylov_matrix_free(m);
    }
}

#[test]
fn triplets_are_validated() {
    let r = [0usize, 5];
    let c = [0usize, 0];
    let v = [1.0, 1.0];
    let mut m = ptr::null_mut();
    let code = unsafe { krylov_matrix_from_triplets(2, 2, r.as_ptr(), c.as_ptr(), v.as_ptr(), KrylovFormat::Row, &mut m) };
    assert_eq!(code, KrylovError::InvalidArgument);
    assert!(m.is_null());
    let code = unsafe { krylov_matrix_from_triplets(2, 2, ptr::null(), c.as_ptr(), v.as_ptr(), KrylovFormat::Row, &mut m) };
    assert_eq!(code, KrylovError::NullPointer);
    unsafe {
        krylov_matrix_free(ptr::null_mut());
        krylov_report_free(ptr::null_mut());
    }
}

#[test]
fn header_is_generated() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/krylov.h")).unwrap();
    for sym in ["krylov_solve", "krylov_matrix_from_triplets", "KRYLOV_ERROR_OK", "typedef struct KrylovMatrix KrylovMatrix"] {
        assert!(h.contains(sym), "{sym}");
    }
}
