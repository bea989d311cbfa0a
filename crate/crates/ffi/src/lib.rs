//! C ABI for the toric-stability toolkit.
//!
//! Polytopes cross the boundary as opaque `TsPolytope` handles. Exact values
//! travel as strings (`"n"` or `"n/d"`, vectors comma-separated), and every
//! function returns a [`TsStatus`]. On failure, [`ts_last_error`] describes
//! the most recent error on the calling thread. Strings returned through
//! out-parameters are owned by the caller and released with
//! [`ts_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use toric_stability::invariants::Moments;
use toric_stability::rational::{parse_q, parse_q_list};
use toric_stability::report::{self, FaceSelector, MomentOptions};
use toric_stability::stability::{check_point_stability, PointSpec, Status};
use toric_stability::{chop_corner, parse_polytope, DelzantPolytope, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsStatus {
    Ok = 0,
    ParseError = 1,
    DomainError = 2,
    NullPointer = 3,
    InvalidArgument = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsVerdict {
    Stable = 0,
    Borderline = 1,
    Unstable = 2,
}

/// A validated Delzant polytope.
pub struct TsPolytope {
    inner: DelzantPolytope,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(TsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Parse { .. } => TsStatus::ParseError,
            Error::InvalidArgument(_) => TsStatus::InvalidArgument,
            _ => TsStatus::DomainError,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(TsStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: String) -> Failure {
    Failure(TsStatus::InvalidArgument, msg)
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            TsStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal error");
            TsStatus::DomainError
        }
    }
}

unsafe fn str_arg<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|_| invalid(format!("{what} is not UTF-8")))
}

unsafe fn polytope<'a>(p: *const TsPolytope) -> Result<&'a DelzantPolytope, Failure> {
    p.as_ref().map(|p| &p.inner).ok_or_else(|| null("polytope"))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn to_c(s: String) -> *mut c_char {
    CString::new(s).expect("no interior nul").into_raw()
}

unsafe fn vector(s: *const c_char, what: &str, dim: usize) -> Result<Vec<toric_stability::Q>, Failure> {
    let text = str_arg(s, what)?;
    let v = parse_q_list(text).ok_or_else(|| invalid(format!("{what} `{text}` is not a list of rationals")))?;
    if v.len() != dim {
        return Err(invalid(format!("{what} has {} entries, expected {dim}", v.len())));
    }
    Ok(v)
}

/// The message of the last failed call on this thread, or `""`. The
/// pointer stays valid until the next call into this library on the thread.
#[no_mangle]
pub extern "C" fn ts_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ts_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses and validates a polytope in the `dim`/`facet` text format.
///
/// # Safety
/// `text` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_polytope_parse(text: *const c_char, out: *mut *mut TsPolytope) -> TsStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let p = parse_polytope(text)?;
        put(out, Box::into_raw(Box::new(TsPolytope { inner: p })), "out")
    })
}

/// # Safety
/// `p` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ts_polytope_free(p: *mut TsPolytope) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `p` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_polytope_dim(p: *const TsPolytope, out: *mut usize) -> TsStatus {
    guard(|| put(out, polytope(p)?.dim(), "out"))
}

/// # Safety
/// `p` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_polytope_vertex_count(p: *const TsPolytope, out: *mut usize) -> TsStatus {
    guard(|| put(out, polytope(p)?.vertices().len(), "out"))
}

/// The polytope in the text format accepted by [`ts_polytope_parse`].
///
/// # Safety
/// `p` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_polytope_to_text(p: *const TsPolytope, out: *mut *mut c_char) -> TsStatus {
    guard(|| {
        let text = polytope(p)?.to_text();
        if out.is_null() {
            return Err(null("out"));
        }
        put(out, to_c(text), "out")
    })
}

/// Cuts `vertex` off by a simplex of size `t`.
///
/// # Safety
/// `p` must be a live handle, `t` a nul-terminated string and `out` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_polytope_chop(
    p: *const TsPolytope,
    vertex: usize,
    t: *const c_char,
    out: *mut *mut TsPolytope,
) -> TsStatus {
    guard(|| {
        let p = polytope(p)?;
        let ts = str_arg(t, "t")?;
        let t = parse_q(ts).ok_or_else(|| invalid(format!("t `{ts}` is not rational")))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let chopped = chop_corner(p, vertex, &t)?;
        put(out, Box::into_raw(Box::new(TsPolytope { inner: chopped })), "out")
    })
}

/// The Futaki invariant of the torus vector `u`, as a rational string.
///
/// # Safety
/// `p` must be a live handle, `u` a nul-terminated string and `out` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_futaki(p: *const TsPolytope, u: *const c_char, out: *mut *mut c_char) -> TsStatus {
    guard(|| {
        let p = polytope(p)?;
        let u = vector(u, "u", p.dim())?;
        if out.is_null() {
            return Err(null("out"));
        }
        let f = Moments::of(p)?.futaki(&u);
        put(out, to_c(f.to_string()), "out")
    })
}

/// The Futaki-Mabuchi inner product of `u` and `v`, as a rational string.
///
/// # Safety
/// `p` must be a live handle, `u` and `v` nul-terminated strings and `out`
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_inner_product(
    p: *const TsPolytope,
    u: *const c_char,
    v: *const c_char,
    out: *mut *mut c_char,
) -> TsStatus {
    guard(|| {
        let p = polytope(p)?;
        let u = vector(u, "u", p.dim())?;
        let v = vector(v, "v", p.dim())?;
        if out.is_null() {
            return Err(null("out"));
        }
        let ip = Moments::of(p)?.inner_product(&u, &v);
        put(out, to_c(ip.to_string()), "out")
    })
}

/// Stability of the blowup at a point of the face cut out by `facets`
/// (`n_facets == 0` for the open orbit) at `eps`. `certificate` may be null;
/// otherwise it receives the minimum of the functional over the extreme
/// rays, or null when there is nothing to test.
///
/// # Safety
/// `p` must be a live handle, `facets` valid for `n_facets` reads, `eps` a
/// nul-terminated string, `verdict` a valid pointer and `certificate` null
/// or valid.
#[no_mangle]
pub unsafe extern "C" fn ts_check_stability(
    p: *const TsPolytope,
    facets: *const usize,
    n_facets: usize,
    eps: *const c_char,
    verdict: *mut TsVerdict,
    certificate: *mut *mut c_char,
) -> TsStatus {
    guard(|| {
        let p = polytope(p)?;
        let es = str_arg(eps, "eps")?;
        let eps = parse_q(es).ok_or_else(|| invalid(format!("eps `{es}` is not rational")))?;
        if verdict.is_null() {
            return Err(null("verdict"));
        }
        let ps = if n_facets == 0 {
            PointSpec::generic(p)
        } else {
            if facets.is_null() {
                return Err(null("facets"));
            }
            PointSpec::on_face(p, std::slice::from_raw_parts(facets, n_facets))?
        };
        let v = check_point_stability(p, &ps, &eps, None)?;
        let status = match v.status {
            Status::Stable => TsVerdict::Stable,
            Status::Borderline => TsVerdict::Borderline,
            Status::Unstable => TsVerdict::Unstable,
        };
        put(verdict, status, "verdict")?;
        if !certificate.is_null() {
            certificate.write(v.certificate.map_or(ptr::null_mut(), |c| to_c(c.to_string())));
        }
        Ok(())
    })
}

/// The JSON report of the `check` command for the open orbit over a
/// comma-separated `eps` grid.
///
/// # Safety
/// `p` must be a live handle, `grid` a nul-terminated string and `out` a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_report_check(p: *const TsPolytope, grid: *const c_char, out: *mut *mut c_char) -> TsStatus {
    guard(|| {
        let p = polytope(p)?;
        let gs = str_arg(grid, "grid")?;
        let grid = parse_q_list(gs).ok_or_else(|| invalid(format!("grid `{gs}` is not a list of rationals")))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = report::cmd_check(&p.to_text(), &FaceSelector::All, &grid)?;
        put(out, to_c(r.to_json()), "out")
    })
}

/// The JSON report of the `solve-moment` command for a model in the
/// Hamiltonian-family text format.
///
/// # Safety
/// `model` must be a nul-terminated string, `grid` valid for `n_grid`
/// reads and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_report_solve_moment(
    model: *const c_char,
    grid: *const f64,
    n_grid: usize,
    order: usize,
    tol: f64,
    out: *mut *mut c_char,
) -> TsStatus {
    guard(|| {
        let model = str_arg(model, "model")?;
        if grid.is_null() {
            return Err(null("grid"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let grid = std::slice::from_raw_parts(grid, n_grid);
        let opts = MomentOptions { order, tol, ..MomentOptions::default() };
        let r = report::cmd_solve_moment(model, grid, opts)?;
        put(out, to_c(r.to_json()), "out")
    })
}
