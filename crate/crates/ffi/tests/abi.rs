use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use toric_stability_ffi::*;

const SIMPLEX: &str = "dim 2\nfacet 1 0 0\nfacet 0 1 0\nfacet -1 -1 -1\n";
const SQUARE: &str = "dim 2\nfacet 1 0 0\nfacet 0 1 0\nfacet -1 0 -1\nfacet 0 -1 -1\n";

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn parse(text: &str) -> *mut TsPolytope {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { ts_polytope_parse(c(text).as_ptr(), &mut p) }, TsStatus::Ok);
    p
}

unsafe fn take(s: *mut std::ffi::c_char) -> String {
    let out = CStr::from_ptr(s).to_str().unwrap().to_string();
    ts_string_free(s);
    out
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(ts_last_error()) }.to_str().unwrap().to_string()
}

#[test]
fn handle_lifecycle() {
    let p = parse(SIMPLEX);
    let (mut dim, mut count) = (0, 0);
    unsafe {
        assert_eq!(ts_polytope_dim(p, &mut dim), TsStatus::Ok);
        assert_eq!(ts_polytope_vertex_count(p, &mut count), TsStatus::Ok);
        assert_eq!((dim, count), (2, 3));

        let mut chopped = ptr::null_mut();
        assert_eq!(ts_polytope_chop(p, 0, c("1/3").as_ptr(), &mut chopped), TsStatus::Ok);
        assert_eq!(ts_polytope_vertex_count(chopped, &mut count), TsStatus::Ok);
        assert_eq!(count, 4);

        let mut text = ptr::null_mut();
        assert_eq!(ts_polytope_to_text(chopped, &mut text), TsStatus::Ok);
        let again = parse(&take(text));
        assert_eq!(ts_polytope_vertex_count(again, &mut count), TsStatus::Ok);
        assert_eq!(count, 4);

        ts_polytope_free(again);
        ts_polytope_free(chopped);
        ts_polytope_free(p);
        ts_polytope_free(ptr::null_mut());
        ts_string_free(ptr::null_mut());
    }
}

#[test]
fn invariants_as_strings() {
    let p = parse(SQUARE);
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(ts_futaki(p, c("1,0").as_ptr(), &mut out), TsStatus::Ok);
        assert_eq!(take(out), "0");
        assert_eq!(ts_inner_product(p, c("1,0").as_ptr(), c("1,0").as_ptr(), &mut out), TsStatus::Ok);
        assert_eq!(take(out), "1/12");
        ts_polytope_free(p);
    }
}

#[test]
fn stability_verdicts() {
    let p = parse(SIMPLEX);
    unsafe {
        let mut verdict = TsVerdict::Unstable;
        let mut cert = ptr::null_mut();
        let eps = c("1/8");
        assert_eq!(ts_check_stability(p, ptr::null(), 0, eps.as_ptr(), &mut verdict, &mut cert), TsStatus::Ok);
        assert_eq!(verdict, TsVerdict::Stable);
        assert!(!cert.is_null());
        ts_string_free(cert);

        let vertex = [0usize, 1];
        assert_eq!(ts_check_stability(p, vertex.as_ptr(), 2, eps.as_ptr(), &mut verdict, &mut cert), TsStatus::Ok);
        assert_eq!(verdict, TsVerdict::Stable);
        assert!(cert.is_null());

        assert_eq!(ts_check_stability(p, ptr::null(), 0, c("1").as_ptr(), &mut verdict, ptr::null_mut()), TsStatus::DomainError);
        assert!(!last_error().is_empty());
        ts_polytope_free(p);
    }
}

#[test]
fn reports_are_json() {
    let p = parse(SIMPLEX);
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(ts_report_check(p, c("1/8,1/16").as_ptr(), &mut out), TsStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
        assert_eq!(v["command"], "check");
        assert_eq!(v["results"]["verdicts"].as_array().unwrap().len(), 2);

        let model = c("vars 1\nactive 1\nradius 1\nh1 -1 0 0 1\nh1 1 1 1 0\nh1 1 1 1 1\n");
        let grid = [1e-2, 1e-3];
        assert_eq!(ts_report_solve_moment(model.as_ptr(), grid.as_ptr(), 2, 2, 1e-12, &mut out), TsStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
        assert!(v["oracle"].as_array().unwrap().iter().all(|c| c["pass"] == true));
        ts_polytope_free(p);
    }
}

#[test]
fn error_codes() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(ts_polytope_parse(c("dim 2\nfacet 1 0 x\n").as_ptr(), &mut p), TsStatus::ParseError);
        assert!(last_error().contains("line 2"));
        assert!(p.is_null());
        assert_eq!(ts_polytope_parse(c("dim 2\nfacet 1 0 0\nfacet 0 1 0\n").as_ptr(), &mut p), TsStatus::DomainError);
        assert_eq!(ts_polytope_parse(ptr::null(), &mut p), TsStatus::NullPointer);
        assert_eq!(ts_polytope_parse(c(SIMPLEX).as_ptr(), ptr::null_mut()), TsStatus::NullPointer);

        let mut dim = 0;
        assert_eq!(ts_polytope_dim(ptr::null(), &mut dim), TsStatus::NullPointer);

        let s = parse(SIMPLEX);
        let mut out = ptr::null_mut();
        assert_eq!(ts_futaki(s, c("1,0,0").as_ptr(), &mut out), TsStatus::InvalidArgument);
        assert_eq!(ts_futaki(s, c("1,a").as_ptr(), &mut out), TsStatus::InvalidArgument);
        assert_eq!(ts_futaki(s, c("1,0").as_ptr(), &mut out), TsStatus::Ok);
        ts_string_free(out);
        assert_eq!(last_error(), "");
        ts_polytope_free(s);
    }
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/toric_stability.h");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(&src, format!("#include \"{header}\"\nint main(void) {{ TsStatus s = TS_STATUS_OK; return (int)s; }}\n")).unwrap();
    let Ok(status) = Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"]).arg(&src).status() else {
        eprintln!("no C compiler available; skipping");
        return;
    };
    assert!(status.success());
}
