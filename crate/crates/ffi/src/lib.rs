//! C interface to `oaforge`.
//!
//! Every fallible function returns an [`OafStatus`]; on failure the message
//! is available from [`oaf_last_error_message`] on the same thread. Designs
//! are opaque [`OafDesign`] handles released with [`oaf_design_free`].
//! Permutations cross the boundary as `m` bytes holding the labels `0..m`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use oaforge::anneal::{fsa_kd, seeded_rng, srs_design, AnnealConfig};
use oaforge::criteria::{summarize, Rational};
use oaforge::foldover::detect_foldover;
use oaforge::perm::kendall_distance;
use oaforge::{Design, Error, Permutation};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OafStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Infeasible = 3,
    Internal = 4,
}

/// Opaque design handle.
pub struct OafDesign {
    inner: Design,
}

/// Exact rational `num / den` with `den > 0`.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OafRational {
    pub num: i64,
    pub den: i64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct OafMetrics {
    pub k_min: u32,
    pub k_ave: OafRational,
    pub k_m2: OafRational,
    pub c1: OafRational,
    pub c2: OafRational,
    pub tr_m2: OafRational,
    /// Composite objective; meaningful only when `has_phi` is nonzero.
    pub phi: f64,
    pub has_phi: i32,
    /// Nonzero when the design is a foldover design.
    pub foldover: i32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(err: &Error) -> OafStatus {
    match err {
        Error::Infeasible(_) => OafStatus::Infeasible,
        Error::Conditioning(_) | Error::Capability(_) => OafStatus::Internal,
        _ => OafStatus::InvalidArgument,
    }
}

fn fail(status: OafStatus, msg: impl Into<String>) -> OafStatus {
    set_error(msg.into());
    status
}

fn guard(f: impl FnOnce() -> Result<(), (OafStatus, String)>) -> OafStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => OafStatus::Ok,
        Ok(Err((status, msg))) => fail(status, msg),
        Err(_) => fail(OafStatus::Internal, "internal panic"),
    }
}

fn lib_err(e: Error) -> (OafStatus, String) {
    (status_of(&e), e.to_string())
}

fn null_err(name: &str) -> (OafStatus, String) {
    (OafStatus::NullPointer, format!("{name} is NULL"))
}

fn rational(r: &Rational) -> Result<OafRational, (OafStatus, String)> {
    match (i64::try_from(*r.numer()), i64::try_from(*r.denom())) {
        (Ok(num), Ok(den)) => Ok(OafRational { num, den }),
        _ => Err((OafStatus::Internal, format!("{r} does not fit in 64 bits"))),
    }
}

/// # Safety
/// `labels` must point to `m` readable bytes.
unsafe fn read_perm(labels: *const u8, m: usize) -> Result<Permutation, (OafStatus, String)> {
    if labels.is_null() {
        return Err(null_err("permutation"));
    }
    let bytes = std::slice::from_raw_parts(labels, m);
    Permutation::new(bytes.iter().map(|&b| b as usize).collect()).map_err(lib_err)
}

fn emit(design: Design, out: *mut *mut OafDesign) {
    let handle = Box::into_raw(Box::new(OafDesign { inner: design }));
    // SAFETY: checked non-null by every caller
    unsafe { *out = handle };
}

/// Message of the last failure on this thread, or NULL if none. The pointer
/// stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn oaf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn oaf_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// Kendall tau distance between two permutations of `0..m`.
///
/// # Safety
/// `x` and `y` must each point to `m` readable bytes and `out` must be a
/// valid pointer to a `uint32_t`.
#[no_mangle]
pub unsafe extern "C" fn oaf_kendall_distance(x: *const u8, y: *const u8, m: usize, out: *mut u32) -> OafStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_err("out"));
        }
        let (x, y) = (read_perm(x, m)?, read_perm(y, m)?);
        *out = kendall_distance(&x, &y).map_err(lib_err)?;
        Ok(())
    })
}

/// Builds a design from `n` rows of `m` labels stored row by row.
///
/// # Safety
/// `rows` must point to `n * m` readable bytes and `out` must be a valid
/// pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn oaf_design_from_rows(rows: *const u8, n: usize, m: usize, out: *mut *mut OafDesign) -> OafStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_err("out"));
        }
        if rows.is_null() {
            return Err(null_err("rows"));
        }
        let runs = (0..n)
            .map(|i| read_perm(rows.add(i * m), m))
            .collect::<Result<Vec<_>, _>>()?;
        emit(Design::new(runs).map_err(lib_err)?, out);
        Ok(())
    })
}

/// Foldover simulated annealing with the default schedule.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn oaf_construct_fsa_kd(m: usize, n: usize, seed: u64, lambda: f64, out: *mut *mut OafDesign) -> OafStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_err("out"));
        }
        let mut cfg = AnnealConfig::new(m, n, seed);
        cfg.lambda = lambda;
        cfg.record_trace = false;
        emit(fsa_kd(&cfg).map_err(lib_err)?.design, out);
        Ok(())
    })
}

/// `n` distinct permutations drawn uniformly at random.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn oaf_construct_srs(m: usize, n: usize, seed: u64, out: *mut *mut OafDesign) -> OafStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_err("out"));
        }
        emit(srs_design(n, m, &mut seeded_rng(seed)).map_err(lib_err)?, out);
        Ok(())
    })
}

/// Number of runs, or 0 for NULL.
///
/// # Safety
/// `design` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn oaf_design_n(design: *const OafDesign) -> usize {
    design.as_ref().map_or(0, |d| d.inner.n())
}

/// Number of components, or 0 for NULL.
///
/// # Safety
/// `design` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn oaf_design_m(design: *const OafDesign) -> usize {
    design.as_ref().map_or(0, |d| d.inner.m())
}

/// Copies the `n * m` labels row by row into `buf` of capacity `len`.
///
/// # Safety
/// `design` must be a live handle and `buf` must point to `len` writable
/// bytes.
#[no_mangle]
pub unsafe extern "C" fn oaf_design_rows(design: *const OafDesign, buf: *mut u8, len: usize) -> OafStatus {
    guard(|| {
        let d = &design.as_ref().ok_or_else(|| null_err("design"))?.inner;
        if buf.is_null() {
            return Err(null_err("buf"));
        }
        let need = d.n() * d.m();
        if len < need {
            return Err((OafStatus::InvalidArgument, format!("buffer holds {len} bytes, need {need}")));
        }
        let out = std::slice::from_raw_parts_mut(buf, need);
        for (row, x) in out.chunks_mut(d.m()).zip(d.runs()) {
            row.copy_from_slice(x.entries());
        }
        Ok(())
    })
}

/// Evaluates every criterion of `design`.
///
/// # Safety
/// `design` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn oaf_evaluate(design: *const OafDesign, lambda: f64, out: *mut OafMetrics) -> OafStatus {
    guard(|| {
        let d = &design.as_ref().ok_or_else(|| null_err("design"))?.inner;
        if out.is_null() {
            return Err(null_err("out"));
        }
        let s = summarize(d, lambda).map_err(lib_err)?;
        *out = OafMetrics {
            k_min: s.k_min,
            k_ave: rational(&s.k_ave)?,
            k_m2: rational(&s.k_m2)?,
            c1: rational(&s.c1)?,
            c2: rational(&s.c2)?,
            tr_m2: rational(&s.tr_m2)?,
            phi: s.phi.unwrap_or(f64::NAN),
            has_phi: s.phi.is_some() as i32,
            foldover: detect_foldover(d).is_some() as i32,
        };
        Ok(())
    })
}

/// Releases a handle; NULL is ignored.
///
/// # Safety
/// `design` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn oaf_design_free(design: *mut OafDesign) {
    if !design.is_null() {
        drop(Box::from_raw(design));
    }
}
