//! C interface to `rupture-lab`.
//!
//! Every function returns an [`RlStatus`]. On failure a message is kept per
//! thread and can be read with [`rl_last_error`]. Fields are opaque
//! [`RlField`] handles released with [`rl_field_free`]. Panics never cross the
//! boundary; they surface as `RL_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::Arc;

use rupture_lab::blowup::{blowup_analyze, BlowupConfig};
use rupture_lab::diagnostics::{classify_point, energy_e, frequency, holder_seminorm, PointKind, FREQUENCY_GATE_TOL};
use rupture_lab::field::io::{read_field, write_field};
use rupture_lab::field::{Grid, ScalarField};
use rupture_lab::profiles::radial_exact;
use rupture_lab::rupture::{sublevel, sweep_dimension};
use rupture_lab::solver::{continue_pullin, harmonic_extension, solve_dirichlet, ContinuationConfig, SolveConfig};
use rupture_lab::Error;

/// Status codes.
#[allow(non_camel_case_types)]
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RlStatus {
    RL_OK = 0,
    RL_INVALID_INPUT = 1,
    RL_INVALID_GRID = 2,
    RL_OUT_OF_DOMAIN = 3,
    RL_UNSUPPORTED = 4,
    /// A solver or continuation run failed to converge.
    RL_NUMERICAL = 5,
    RL_IO = 6,
    RL_FORMAT = 7,
    RL_NULL_POINTER = 8,
    RL_PANIC = 9,
}

#[allow(non_camel_case_types)]
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RlDomainKind {
    RL_DOMAIN_RECTANGLE = 0,
    RL_DOMAIN_DISK = 1,
    RL_DOMAIN_ANNULUS = 2,
}

/// Planar domain. Rectangles use `origin` and `extent`; disks use `center`
/// and `outer`; annuli use `center`, `inner` and `outer`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RlDomain {
    pub kind: RlDomainKind,
    pub origin: [f64; 2],
    pub extent: [f64; 2],
    pub center: [f64; 2],
    pub inner: f64,
    pub outer: f64,
}

/// Opaque scalar field on a grid.
pub struct RlField {
    inner: ScalarField,
}

/// Frequency data on one ball. `n` is NaN when `H` vanishes.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct RlFrequency {
    pub d: f64,
    pub h: f64,
    pub n: f64,
    /// Nonzero when `u Δu` is negligible in the ball.
    pub interpretable: i32,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("interior NULs removed"));
}

fn status_of(e: &Error) -> RlStatus {
    match e {
        Error::InvalidInput(_) | Error::NonFinite { .. } | Error::Negative { .. } => RlStatus::RL_INVALID_INPUT,
        Error::InvalidGrid(_) => RlStatus::RL_INVALID_GRID,
        Error::OutOfDomain(_) => RlStatus::RL_OUT_OF_DOMAIN,
        Error::Unsupported(_) => RlStatus::RL_UNSUPPORTED,
        Error::Io(_) => RlStatus::RL_IO,
        Error::Format(_) | Error::Json(_) => RlStatus::RL_FORMAT,
        _ if e.is_numerical() => RlStatus::RL_NUMERICAL,
        _ => RlStatus::RL_INVALID_INPUT,
    }
}

enum Fail {
    Lib(Error),
    Null(&'static str),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

/// Runs `f`, recording any failure (including a panic) in the thread's error slot.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> RlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            RlStatus::RL_OK
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("{what} is NULL"));
            RlStatus::RL_NULL_POINTER
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            RlStatus::RL_PANIC
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn path<'a>(p: *const c_char) -> Result<&'a Path, Fail> {
    if p.is_null() {
        return Err(Fail::Null("path"));
    }
    let s = CStr::from_ptr(p).to_str().map_err(|_| Error::InvalidInput("path is not valid UTF-8".into()))?;
    Ok(Path::new(s))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn boxed(f: ScalarField) -> *mut RlField {
    Box::into_raw(Box::new(RlField { inner: f }))
}

fn build_grid(d: &RlDomain, h: f64) -> Result<Arc<Grid>, Error> {
    let g = match d.kind {
        RlDomainKind::RL_DOMAIN_RECTANGLE => Grid::rectangle(d.origin, d.extent, h)?,
        RlDomainKind::RL_DOMAIN_DISK => Grid::disk(d.center, d.outer, h)?,
        RlDomainKind::RL_DOMAIN_ANNULUS => Grid::annulus(d.center, d.inner, d.outer, h)?,
    };
    Ok(Arc::new(g))
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn rl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Array shape of the grid a domain produces at spacing `h`.
///
/// # Safety
/// `domain` must point to a valid `RlDomain`; `rows` and `cols` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn rl_domain_shape(domain: *const RlDomain, h: f64, rows: *mut usize, cols: *mut usize) -> RlStatus {
    guard(|| {
        let g = build_grid(deref(domain, "domain")?, h)?;
        *out(rows, "rows")? = g.shape()[0];
        *out(cols, "cols")? = g.shape()[1];
        Ok(())
    })
}

/// Field with the given node values (row-major, `rows * cols` of them).
///
/// # Safety
/// `domain` must be valid, `values` must hold `len` doubles and `field`
/// must be writable. The returned handle is owned by the caller.
#[no_mangle]
pub unsafe extern "C" fn rl_field_new(
    domain: *const RlDomain,
    h: f64,
    p: f64,
    values: *const f64,
    len: usize,
    field: *mut *mut RlField,
) -> RlStatus {
    guard(|| {
        let slot = out(field, "field")?;
        let g = build_grid(deref(domain, "domain")?, h)?;
        let v = slice(values, len, "values")?;
        if v.len() != g.len() {
            return Err(Error::InvalidInput(format!("expected {} values, got {len}", g.len())).into());
        }
        *slot = boxed(ScalarField::new(g, v.to_vec(), p)?);
        Ok(())
    })
}

/// The homogeneous radial solution `c|x - x0|^{2/(p+1)}` sampled on a domain,
/// centered at the domain's `center`.
///
/// # Safety
/// As for [`rl_field_new`].
#[no_mangle]
pub unsafe extern "C" fn rl_field_radial_exact(domain: *const RlDomain, h: f64, p: f64, field: *mut *mut RlField) -> RlStatus {
    guard(|| {
        let slot = out(field, "field")?;
        let d = deref(domain, "domain")?;
        let g = build_grid(d, h)?;
        *slot = boxed(radial_exact(2, p)?.sample(g, d.center)?);
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `field` writable.
#[no_mangle]
pub unsafe extern "C" fn rl_field_read(path_: *const c_char, field: *mut *mut RlField) -> RlStatus {
    guard(|| {
        let slot = out(field, "field")?;
        *slot = boxed(read_field(path(path_)?)?);
        Ok(())
    })
}

/// Writes the field atomically.
///
/// # Safety
/// `field` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rl_field_write(field: *const RlField, path_: *const c_char) -> RlStatus {
    guard(|| {
        write_field(path(path_)?, &deref(field, "field")?.inner)?;
        Ok(())
    })
}

/// Releases a field. NULL is ignored.
///
/// # Safety
/// `field` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rl_field_free(field: *mut RlField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Borrows the node values. The pointer lives as long as the handle.
///
/// # Safety
/// `field` must be a live handle; `values` and `len` writable.
#[no_mangle]
pub unsafe extern "C" fn rl_field_values(field: *const RlField, values: *mut *const f64, len: *mut usize) -> RlStatus {
    guard(|| {
        let f = &deref(field, "field")?.inner;
        *out(values, "values")? = f.values().as_ptr();
        *out(len, "len")? = f.values().len();
        Ok(())
    })
}

/// Exponent and grid spacing of a field.
///
/// # Safety
/// `field` must be a live handle; `p` and `h` writable.
#[no_mangle]
pub unsafe extern "C" fn rl_field_params(field: *const RlField, p: *mut f64, h: *mut f64) -> RlStatus {
    guard(|| {
        let f = &deref(field, "field")?.inner;
        *out(p, "p")? = f.p();
        *out(h, "h")? = f.grid().h();
        Ok(())
    })
}

/// Solves `Δu = u^{-p}` with the non-interior values of `bc` as Dirichlet
/// data, starting from the harmonic extension. `max_iters = 0` and
/// `residual_tol <= 0` select the defaults. On `RL_NUMERICAL` the last
/// iterate is returned in `solution` when one exists (else NULL).
///
/// # Safety
/// `bc` must be a live handle; `solution` writable; `iterations` and
/// `residual` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn rl_solve_dirichlet(
    bc: *const RlField,
    max_iters: usize,
    residual_tol: f64,
    solution: *mut *mut RlField,
    iterations: *mut usize,
    residual: *mut f64,
) -> RlStatus {
    guard(|| {
        let slot = out(solution, "solution")?;
        *slot = ptr::null_mut();
        let bc = &deref(bc, "bc")?.inner;
        let mut cfg = SolveConfig::default();
        if max_iters > 0 {
            cfg.max_newton_iters = max_iters;
        }
        if residual_tol > 0.0 {
            cfg.residual_tol = residual_tol;
        }
        let guess = harmonic_extension(bc)?;
        match solve_dirichlet(bc, &guess, &cfg) {
            Ok(sol) => {
                if let Some(it) = iterations.as_mut() {
                    *it = sol.iterations;
                }
                if let Some(r) = residual.as_mut() {
                    *r = sol.residual;
                }
                *slot = boxed(sol.field);
                Ok(())
            }
            Err(mut e) => {
                if let Error::Diverged { iterations: it, residual: res, last, .. } = &mut e {
                    if let Some(i) = iterations.as_mut() {
                        *i = *it;
                    }
                    if let Some(r) = residual.as_mut() {
                        *r = *res;
                    }
                    if let Some(f) = last.take() {
                        *slot = boxed(*f);
                    }
                }
                Err(e.into())
            }
        }
    })
}

/// Monotone energy `E(r; x)`.
///
/// # Safety
/// `field` must be a live handle and `energy` writable.
#[no_mangle]
pub unsafe extern "C" fn rl_energy(field: *const RlField, x: f64, y: f64, r: f64, energy: *mut f64) -> RlStatus {
    guard(|| {
        let rec = energy_e(&deref(field, "field")?.inner, [x, y], r)?;
        *out(energy, "energy")? = rec.e;
        Ok(())
    })
}

/// `D`, `H` and `N` on `B_r(x)`.
///
/// # Safety
/// `field` must be a live handle and `result` writable.
#[no_mangle]
pub unsafe extern "C" fn rl_frequency(field: *const RlField, x: f64, y: f64, r: f64, result: *mut RlFrequency) -> RlStatus {
    guard(|| {
        let rec = frequency(&deref(field, "field")?.inner, [x, y], r, FREQUENCY_GATE_TOL)?;
        *out(result, "result")? =
            RlFrequency { d: rec.d, h: rec.h, n: rec.n.unwrap_or(f64::NAN), interpretable: rec.interpretable.into() };
        Ok(())
    })
}

/// Hölder seminorm over node pairs (exhaustive up to `budget` pairs, seeded
/// sampling beyond).
///
/// # Safety
/// `field` must be a live handle and `seminorm` writable.
#[no_mangle]
pub unsafe extern "C" fn rl_holder_seminorm(
    field: *const RlField,
    exponent: f64,
    budget: usize,
    seed: u64,
    seminorm: *mut f64,
) -> RlStatus {
    guard(|| {
        let est = holder_seminorm(&deref(field, "field")?.inner, exponent, budget, seed)?;
        *out(seminorm, "seminorm")? = est.seminorm;
        Ok(())
    })
}

/// Sets `is_rupture` to 1 at a rupture point and 0 at a positive point.
///
/// # Safety
/// `field` must be a live handle and `is_rupture` writable.
#[no_mangle]
pub unsafe extern "C" fn rl_classify_point(field: *const RlField, x: f64, y: f64, is_rupture: *mut i32) -> RlStatus {
    guard(|| {
        let c = classify_point(&deref(field, "field")?.inner, [x, y])?;
        *out(is_rupture, "is_rupture")? = (c.kind == PointKind::Rupture).into();
        Ok(())
    })
}

/// Blow-up test at `(x, y)` over strictly decreasing scales. The center is
/// not classified first.
///
/// # Safety
/// `field` must be a live handle, `lambdas` must hold `count` doubles, and
/// `homogeneous` and `worst` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_blowup(
    field: *const RlField,
    x: f64,
    y: f64,
    lambdas: *const f64,
    count: usize,
    tol: f64,
    homogeneous: *mut i32,
    worst: *mut f64,
) -> RlStatus {
    guard(|| {
        let cfg = BlowupConfig { lambdas: slice(lambdas, count, "lambdas")?.to_vec(), tol, skip_classification: true };
        let seq = blowup_analyze(&deref(field, "field")?.inner, [x, y], &cfg)?;
        *out(homogeneous, "homogeneous")? = seq.is_homogeneous().into();
        *out(worst, "worst")? = seq.check.worst_violation;
        Ok(())
    })
}

/// Number of connected components of `{u <= tau}`.
///
/// # Safety
/// `field` must be a live handle and `count` writable.
#[no_mangle]
pub unsafe extern "C" fn rl_rupture_components(field: *const RlField, tau: f64, count: *mut usize) -> RlStatus {
    guard(|| {
        let mask = sublevel(&deref(field, "field")?.inner, tau)?;
        *out(count, "count")? = mask.components.len();
        Ok(())
    })
}

/// Box-counting dimension of the rupture set over a decreasing threshold
/// sweep. `slope` is NaN when every sublevel set is empty.
///
/// # Safety
/// `field` must be a live handle, `taus` must hold `count` doubles and
/// `slope` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rl_rupture_dimension(field: *const RlField, taus: *const f64, count: usize, slope: *mut f64) -> RlStatus {
    guard(|| {
        let est = sweep_dimension(&deref(field, "field")?.inner, slice(taus, count, "taus")?)?;
        *out(slope, "slope")? = est.slope.unwrap_or(f64::NAN);
        Ok(())
    })
}

/// Pull-in continuation from `λ = 0` until the minimum gap reaches
/// `stop_gap`. Reports the first fold (NaN when none was crossed) and its
/// error bound.
///
/// # Safety
/// `domain` must be valid; `lambda_star` and `error_bound` writable.
#[no_mangle]
pub unsafe extern "C" fn rl_continue_pullin(
    domain: *const RlDomain,
    h: f64,
    p: f64,
    stop_gap: f64,
    lambda_star: *mut f64,
    error_bound: *mut f64,
) -> RlStatus {
    guard(|| {
        let ls = out(lambda_star, "lambda_star")?;
        let eb = out(error_bound, "error_bound")?;
        let g = build_grid(deref(domain, "domain")?, h)?;
        let cont = ContinuationConfig { stop_gap, ..ContinuationConfig::default() };
        let branch = continue_pullin(g, p, &SolveConfig::default(), &cont)?;
        let fold = branch.lambda_star();
        *ls = fold.map_or(f64::NAN, |f| f.lambda);
        *eb = fold.map_or(f64::NAN, |f| f.error_bound);
        Ok(())
    })
}
