//! C interface to vlaser.
//!
//! Every function returns a [`VlStatus`]. On failure the message is kept per
//! thread and can be copied out with [`vl_last_error`]. Handles are opaque
//! and owned by the caller, who releases them with the matching `_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::OnceLock;

use vlaser::harness::{self, ExperimentConfig, Plan, RunOptions};
use vlaser::model::{preset, steady_inversion, ModelParams, Param};
use vlaser::spectrum::{laser_spectrum, single_atom_spectrum, LaserEquations, SpectrumResult};
use vlaser::units::{Quantity, Unit, UnitSystem};
use vlaser::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    /// The moments oscillate; there is no steady state.
    LimitCycle = 4,
    Solver = 5,
    Io = 6,
    Panic = 7,
}

/// Model parameters together with the unit system of their preset.
pub struct VlParams {
    params: ModelParams,
    units: UnitSystem,
}

/// A normalized spectrum on its frequency grid.
pub struct VlSpectrum {
    inner: SpectrumResult,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> VlStatus {
    match e {
        Error::Config { .. } | Error::Unit(_) | Error::Parse { .. } => VlStatus::Config,
        Error::InvalidParameter { .. }
        | Error::InvalidInput(_)
        | Error::InvalidGrid(_)
        | Error::NegativeRate { .. } => VlStatus::InvalidArgument,
        Error::LimitCycle { .. } => VlStatus::LimitCycle,
        Error::Io(_) => VlStatus::Io,
        _ => VlStatus::Solver,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (VlStatus, String)>) -> VlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VlStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            VlStatus::Panic
        }
    }
}

fn lib(e: Error) -> (VlStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (VlStatus, String) {
    (VlStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, (VlStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (VlStatus::InvalidArgument, format!("`{what}` is not UTF-8")))
}

unsafe fn params<'a>(p: *const VlParams) -> Result<&'a VlParams, (VlStatus, String)> {
    p.as_ref().ok_or_else(|| null("params"))
}

unsafe fn put<T>(out: *mut T, v: T, what: &str) -> Result<(), (VlStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    *out = v;
    Ok(())
}

fn equations() -> Result<&'static LaserEquations, (VlStatus, String)> {
    static EQS: OnceLock<Result<LaserEquations, String>> = OnceLock::new();
    EQS.get_or_init(|| LaserEquations::generate(false).map_err(|e| e.to_string()))
        .as_ref()
        .map_err(|e| (VlStatus::Solver, e.clone()))
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn vl_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn vl_version() -> *const c_char {
    static V: OnceLock<CString> = OnceLock::new();
    V.get_or_init(|| CString::new(env!("CARGO_PKG_VERSION")).expect("no NUL"))
        .as_ptr()
}

/// Creates parameters from a preset name ("Sr88", "Yb174").
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vl_params_preset(name: *const c_char, out: *mut *mut VlParams) -> VlStatus {
    guard(|| {
        let p = preset(text(name, "name")?).map_err(lib)?;
        let h = Box::into_raw(Box::new(VlParams {
            params: p.params,
            units: p.units,
        }));
        put(out, h, "out").inspect_err(|_| drop(Box::from_raw(h)))
    })
}

/// # Safety
/// `p` must come from [`vl_params_preset`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn vl_params_free(p: *mut VlParams) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Sets one parameter from a value with unit, e.g. ("delta2", "5 Gamma3")
/// or ("n_atoms", "50000").
///
/// # Safety
/// `p` must be a live handle; strings must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn vl_params_set(p: *mut VlParams, name: *const c_char, value: *const c_char) -> VlStatus {
    guard(|| {
        let h = p.as_mut().ok_or_else(|| null("params"))?;
        let param: Param = text(name, "name")?.parse().map_err(lib)?;
        let q: Quantity = text(value, "value")?.parse().map_err(lib)?;
        if param.is_frequency() == (q.unit == Unit::Dimensionless) {
            return Err((
                VlStatus::InvalidArgument,
                format!(
                    "`{param}` {} a unit",
                    if param.is_frequency() { "needs" } else { "takes no" }
                ),
            ));
        }
        let mut next = h.params;
        next.set(param, q.internal(&h.units)).map_err(lib)?;
        next.validate().map_err(lib)?;
        h.params = next;
        Ok(())
    })
}

/// Reads one parameter in internal units (Γ₃ = 1; atom count for n_atoms).
///
/// # Safety
/// `p` must be a live handle; `name` NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn vl_params_get(p: *const VlParams, name: *const c_char, out: *mut f64) -> VlStatus {
    guard(|| {
        let h = params(p)?;
        let param: Param = text(name, "name")?.parse().map_err(lib)?;
        put(out, h.params.get(param), "out")
    })
}

/// Steady inversion ⟨σ₂₂⟩ − ⟨σ₁₁⟩ of one driven atom.
///
/// # Safety
/// `p` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn vl_steady_inversion(p: *const VlParams, out: *mut f64) -> VlStatus {
    guard(|| {
        let h = params(p)?;
        put(out, steady_inversion(&h.params).map_err(lib)?, "out")
    })
}

/// Steady photon number and per-atom inversion of the N-atom laser.
///
/// # Safety
/// `p` must be a live handle; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn vl_laser_steady(p: *const VlParams, photons: *mut f64, inversion: *mut f64) -> VlStatus {
    guard(|| {
        let h = params(p)?;
        let sys = &equations()?.moments;
        let s = vlaser::cumulant::integrate_to_steady(sys, &h.params, &vlaser::cumulant::MomentState::ground(sys))
            .map_err(lib)?;
        put(photons, s.photons(), "photons")?;
        put(inversion, s.inversion(), "inversion")
    })
}

fn spectrum_out(r: SpectrumResult, out: *mut *mut VlSpectrum) -> Result<(), (VlStatus, String)> {
    let h = Box::into_raw(Box::new(VlSpectrum { inner: r }));
    unsafe { put(out, h, "out").inspect_err(|_| drop(Box::from_raw(h))) }
}

/// Cavity output spectrum of the N-atom laser.
///
/// # Safety
/// `p` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn vl_laser_spectrum(p: *const VlParams, out: *mut *mut VlSpectrum) -> VlStatus {
    guard(|| {
        let h = params(p)?;
        spectrum_out(laser_spectrum(equations()?, &h.params).map_err(lib)?.spectrum, out)
    })
}

/// Fluorescence spectrum of one driven atom around the narrow line.
///
/// # Safety
/// `p` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn vl_single_atom_spectrum(p: *const VlParams, out: *mut *mut VlSpectrum) -> VlStatus {
    guard(|| {
        let h = params(p)?;
        spectrum_out(single_atom_spectrum(&h.params).map_err(lib)?, out)
    })
}

/// Number of grid points of a spectrum (0 for a null handle).
///
/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vl_spectrum_len(s: *const VlSpectrum) -> usize {
    s.as_ref().map_or(0, |s| s.inner.omega.len())
}

/// Copies up to `len` points: offsets from the narrow line (units of Γ₂)
/// and peak-normalized values.
///
/// # Safety
/// `s` must be a live handle; `omega` and `value` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn vl_spectrum_data(
    s: *const VlSpectrum,
    omega: *mut f64,
    value: *mut f64,
    len: usize,
) -> VlStatus {
    guard(|| {
        let s = &s.as_ref().ok_or_else(|| null("spectrum"))?.inner;
        if omega.is_null() || value.is_null() {
            return Err(null("omega/value"));
        }
        let n = len.min(s.omega.len());
        std::ptr::copy_nonoverlapping(s.omega.as_ptr(), omega, n);
        std::ptr::copy_nonoverlapping(s.s.as_ptr(), value, n);
        Ok(())
    })
}

/// FWHM and peak offset of the dominant line, both in units of Γ₂.
///
/// # Safety
/// `s` must be a live handle; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn vl_spectrum_peak(s: *const VlSpectrum, fwhm: *mut f64, peak: *mut f64) -> VlStatus {
    guard(|| {
        let s = &s.as_ref().ok_or_else(|| null("spectrum"))?.inner;
        put(fwhm, s.fwhm, "fwhm")?;
        put(peak, s.peak, "peak")
    })
}

/// # Safety
/// `s` must come from a spectrum constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn vl_spectrum_free(s: *mut VlSpectrum) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Doppler FWHM (rad/s) for thermal energy `kbt` (J), angular frequency
/// `omega` (rad/s) and mass (kg).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vl_doppler_broadening(kbt: f64, omega: f64, mass: f64, out: *mut f64) -> VlStatus {
    guard(|| {
        put(
            out,
            vlaser::motion::doppler_broadening(kbt, omega, mass).map_err(lib)?,
            "out",
        )
    })
}

/// Runs a config file into `out_root/<config stem>`. `failed` receives the
/// number of failed points.
///
/// # Safety
/// Strings must be NUL-terminated; `failed` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn vl_run_config(
    config: *const c_char,
    out_root: *const c_char,
    force: bool,
    failed: *mut usize,
) -> VlStatus {
    guard(|| {
        let path = Path::new(text(config, "config")?);
        let root = Path::new(text(out_root, "out_root")?);
        let plan = ExperimentConfig::load(path).and_then(Plan::new).map_err(lib)?;
        let dir = harness::output_dir(root, path);
        let m = harness::run(&plan, &dir, &RunOptions { force, workers: None }).map_err(lib)?;
        if !failed.is_null() {
            *failed = m.failed;
        }
        Ok(())
    })
}
