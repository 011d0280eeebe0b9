//! C ABI over `abcage`.
//!
//! Models and evolution traces are opaque heap handles released with their
//! `*_free` function. Every fallible call returns an [`AbcStatus`]; on
//! failure the message is available from [`abc_last_error`] on the same
//! thread until the next failing call.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use abcage::dynamics::{self, EvolutionTrace, ExcitationSpec};
use abcage::model::{build_bloch, gauge_fix, wilson_loop, LadderParams, LatticeSpec, Model, Site};
use abcage::numkit::eigvals;
use abcage::spectra::{self, DegeneracyKind, DEFAULT_TOL};
use abcage::Error;

/// Opaque model handle (ladder or N-chain).
pub struct AbcModel(Model);

/// Opaque evolution trace handle.
pub struct AbcTrace(EvolutionTrace);

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AbcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Inconsistent = 4,
    Inconclusive = 5,
    DegenerateResponse = 6,
    Numerical = 7,
    Io = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AbcDegeneracy {
    Dp2 = 0,
    Ep2First = 1,
    Ep2Second = 2,
    Ep4 = 3,
    Ep2N = 4,
    NonFlat = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> AbcStatus {
    match e {
        Error::Config(_) | Error::Json(_) => AbcStatus::Config,
        Error::Io(_) | Error::Csv(_) => AbcStatus::Io,
        Error::Consistency { .. } => AbcStatus::Inconsistent,
        Error::Inconclusive(_) => AbcStatus::Inconclusive,
        Error::DegenerateResponse(_) => AbcStatus::DegenerateResponse,
        Error::Convergence { .. } | Error::NonFinite { .. } | Error::Range(_) | Error::Internal(_) | Error::AmbiguousFit(_) => {
            AbcStatus::Numerical
        }
        _ => AbcStatus::InvalidArgument,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard<F>(f: F) -> AbcStatus
where
    F: FnOnce() -> Result<(), (AbcStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AbcStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            AbcStatus::Panic
        }
    }
}

fn lib<T>(r: abcage::Result<T>) -> Result<T, (AbcStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(name: &str) -> (AbcStatus, String) {
    (AbcStatus::NullPointer, format!("{name} is null"))
}

unsafe fn model_ref<'a>(m: *const AbcModel) -> Result<&'a Model, (AbcStatus, String)> {
    m.as_ref().map(|m| &m.0).ok_or_else(|| null("model"))
}

fn ladder(m: &Model) -> Result<LadderParams, (AbcStatus, String)> {
    match m {
        Model::Ladder(p) => Ok(*p),
        Model::NChain(_) => Err((AbcStatus::InvalidArgument, "operation needs a ladder model".into())),
    }
}

fn lattice(cells: usize, periodic: bool) -> LatticeSpec {
    if periodic {
        LatticeSpec::periodic(cells)
    } else {
        LatticeSpec::open(cells)
    }
}

/// Message of the last failure on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn abc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn abc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a ladder model.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn abc_model_ladder_new(
    j: f64,
    t: f64,
    t1: f64,
    t2: f64,
    theta1: f64,
    theta2: f64,
    eta_a: f64,
    eta_b: f64,
    out: *mut *mut AbcModel,
) -> AbcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = lib(LadderParams::with_gauge(j, t, t1, t2, theta1, theta2, eta_a, eta_b))?;
        *out = Box::into_raw(Box::new(AbcModel(p.into())));
        Ok(())
    })
}

/// Creates a model from a JSON document in the configuration schema
/// (without the `"lattice"` key).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn abc_model_from_json(json: *const c_char, out: *mut *mut AbcModel) -> AbcStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| (AbcStatus::Config, format!("json is not UTF-8: {e}")))?;
        let v: serde_json::Value = lib(serde_json::from_str(text).map_err(Error::from))?;
        let m = lib(Model::from_json(&v))?;
        *out = Box::into_raw(Box::new(AbcModel(m)));
        Ok(())
    })
}

/// Releases a model; null is ignored.
///
/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn abc_model_free(model: *mut AbcModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of chains (2 for a ladder), or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn abc_model_n_chains(model: *const AbcModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.n_chains())
}

/// The four Bloch eigenvalues at momentum `k` (ladder only, gauge-fixed
/// internally), written to `re[0..4]` and `im[0..4]`.
///
/// # Safety
/// `re` and `im` must each point to 4 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn abc_bloch_eigenvalues(model: *const AbcModel, k: f64, re: *mut f64, im: *mut f64) -> AbcStatus {
    guard(|| {
        let p = ladder(model_ref(model)?)?;
        if re.is_null() || im.is_null() {
            return Err(null("output buffer"));
        }
        let h = lib(build_bloch(&gauge_fix(&p), k))?;
        let e = lib(eigvals(&h))?;
        for (i, z) in e.values.iter().enumerate().take(4) {
            *re.add(i) = z.re;
            *im.add(i) = z.im;
        }
        Ok(())
    })
}

/// Degeneracy class. For N-chain models the real-space matrix on a periodic
/// lattice of `cells` cells is used; `degree` receives the minimal
/// polynomial degree (0 when not flat).
///
/// # Safety
/// `kind` and `degree` must be writable.
#[no_mangle]
pub unsafe extern "C" fn abc_classify(
    model: *const AbcModel,
    cells: usize,
    kind: *mut AbcDegeneracy,
    degree: *mut usize,
) -> AbcStatus {
    guard(|| {
        let m = model_ref(model)?;
        if kind.is_null() || degree.is_null() {
            return Err(null("output"));
        }
        let c = match m {
            Model::Ladder(p) => lib(spectra::classify(p, DEFAULT_TOL))?,
            Model::NChain(p) => lib(spectra::classify_nchain(p, &LatticeSpec::periodic(cells), DEFAULT_TOL))?,
        };
        *kind = match c.kind {
            DegeneracyKind::DP2 => AbcDegeneracy::Dp2,
            DegeneracyKind::EP2First => AbcDegeneracy::Ep2First,
            DegeneracyKind::EP2Second => AbcDegeneracy::Ep2Second,
            DegeneracyKind::EP4 => AbcDegeneracy::Ep4,
            DegeneracyKind::EP2N(_) => AbcDegeneracy::Ep2N,
            DegeneracyKind::NonFlat => AbcDegeneracy::NonFlat,
        };
        *degree = c.minimal_poly.map_or(0, |mp| mp.degree);
        Ok(())
    })
}

/// Gauge-invariant Wilson loop of a ladder model.
///
/// # Safety
/// `re` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn abc_wilson_loop(model: *const AbcModel, re: *mut f64, im: *mut f64) -> AbcStatus {
    guard(|| {
        let p = ladder(model_ref(model)?)?;
        if re.is_null() || im.is_null() {
            return Err(null("output"));
        }
        let w = lib(wilson_loop(&p))?;
        *re = w.re;
        *im = w.im;
        Ok(())
    })
}

/// Krylov local range of the default excitation at (`chain`, `cell`).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn abc_local_range(
    model: *const AbcModel,
    cells: usize,
    periodic: bool,
    chain: usize,
    cell: usize,
    out: *mut usize,
) -> AbcStatus {
    guard(|| {
        let m = model_ref(model)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let lat = lattice(cells, periodic);
        *out = lib(spectra::local_range(
            m,
            &lat,
            Site::new(chain, cell),
            spectra::default_amplitudes(),
            DEFAULT_TOL,
        ))?;
        Ok(())
    })
}

/// Evolves the default excitation at (`chain`, `cell`) over `steps`
/// uniform time points on `[0, t_max]`.
///
/// # Safety
/// `out` must be writable; the returned trace is freed with
/// [`abc_trace_free`].
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn abc_evolve(
    model: *const AbcModel,
    cells: usize,
    periodic: bool,
    chain: usize,
    cell: usize,
    t_max: f64,
    steps: usize,
    out: *mut *mut AbcTrace,
) -> AbcStatus {
    guard(|| {
        let m = model_ref(model)?;
        if out.is_null() {
            return Err(null("out"));
        }
        if steps < 2 || !(t_max > 0.0) {
            return Err((AbcStatus::InvalidArgument, "need steps >= 2 and t_max > 0".into()));
        }
        let times = dynamics::uniform_times(t_max, steps);
        let exc = ExcitationSpec::new(Site::new(chain, cell));
        let tr = lib(dynamics::evolve(m, &lattice(cells, periodic), &exc, &times))?;
        *out = Box::into_raw(Box::new(AbcTrace(tr)));
        Ok(())
    })
}

/// Releases a trace; null is ignored.
///
/// # Safety
/// `trace` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn abc_trace_free(trace: *mut AbcTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Number of time points and sites in a trace.
///
/// # Safety
/// `n_times` and `n_sites` must be writable.
#[no_mangle]
pub unsafe extern "C" fn abc_trace_shape(trace: *const AbcTrace, n_times: *mut usize, n_sites: *mut usize) -> AbcStatus {
    guard(|| {
        let tr = &trace.as_ref().ok_or_else(|| null("trace"))?.0;
        if n_times.is_null() || n_sites.is_null() {
            return Err(null("output"));
        }
        *n_times = tr.times.len();
        *n_sites = tr.intensities.first().map_or(0, |r| r.len());
        Ok(())
    })
}

/// Copies the row-major `n_times × n_sites` intensity table into `buf`
/// (site index `cell·n_chains + chain − 1`).
///
/// # Safety
/// `buf` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn abc_trace_intensities(trace: *const AbcTrace, buf: *mut f64, len: usize) -> AbcStatus {
    guard(|| {
        let tr = &trace.as_ref().ok_or_else(|| null("trace"))?.0;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let need: usize = tr.intensities.iter().map(|r| r.len()).sum();
        if len < need {
            return Err((AbcStatus::InvalidArgument, format!("buffer holds {len} values, need {need}")));
        }
        let out = std::slice::from_raw_parts_mut(buf, need);
        for (dst, src) in out.chunks_mut(need / tr.times.len().max(1)).zip(&tr.intensities) {
            dst.copy_from_slice(src);
        }
        Ok(())
    })
}

/// Whether every intensity farther than `radius` columns from the source
/// stays at or below `tol`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn abc_trace_confined(trace: *const AbcTrace, radius: usize, tol: f64, out: *mut bool) -> AbcStatus {
    guard(|| {
        let tr = &trace.as_ref().ok_or_else(|| null("trace"))?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = dynamics::confinement_check(tr, radius, tol);
        Ok(())
    })
}
