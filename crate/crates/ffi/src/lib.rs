//! C ABI over the phase-field AVI simulator.
//!
//! Every function returns an [`AviStatus`]; on failure the thread-local message from
//! [`avi_last_error_message`] describes what went wrong. Simulations are opaque
//! handles created from a TOML run configuration and released with
//! [`avi_simulation_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use phasefield_avi::app::build_simulation;
use phasefield_avi::config::RunConfig;
use phasefield_avi::diagnostics::update_statistics;
use phasefield_avi::engine::Simulation;
use phasefield_avi::error::{ConfigError, EngineError};
use phasefield_avi::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AviStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Config = 4,
    Mesh = 5,
    Solver = 6,
    Panic = 7,
}

/// Energies of the most recent nodal state (J per unit thickness).
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct AviEnergies {
    pub t: f64,
    pub kinetic: f64,
    pub strain: f64,
    pub crack: f64,
    pub external_work: f64,
    pub free: f64,
}

/// Per-element update counts so far.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct AviUpdateStats {
    pub min: u64,
    pub max: u64,
    pub median: u64,
    pub total: u64,
    pub synchronous_estimate: u64,
}

/// Opaque simulation handle.
pub struct AviSimulation {
    sim: Simulation,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> AviStatus {
    match err {
        Error::Mesh(_) | Error::Engine(EngineError::Mesh(_)) => AviStatus::Mesh,
        Error::Engine(EngineError::Solver { .. }) => AviStatus::Solver,
        Error::Io { .. } | Error::Config(ConfigError::Io { .. }) => AviStatus::Io,
        Error::Config(_) | Error::Engine(EngineError::Config(_)) => AviStatus::Config,
        _ => AviStatus::InvalidArgument,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (AviStatus, String)>) -> AviStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AviStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            AviStatus::Panic
        }
    }
}

fn fail(err: impl Into<Error>) -> (AviStatus, String) {
    let err = err.into();
    (status_of(&err), err.to_string())
}

fn null(what: &str) -> (AviStatus, String) {
    (AviStatus::NullPointer, format!("{what} is null"))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (AviStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (AviStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn sim_ref<'a>(p: *const AviSimulation) -> Result<&'a AviSimulation, (AviStatus, String)> {
    p.as_ref().ok_or_else(|| null("simulation"))
}

unsafe fn sim_mut<'a>(p: *mut AviSimulation) -> Result<&'a mut AviSimulation, (AviStatus, String)> {
    p.as_mut().ok_or_else(|| null("simulation"))
}

unsafe fn out_ref<'a, T>(p: *mut T) -> Result<&'a mut T, (AviStatus, String)> {
    p.as_mut().ok_or_else(|| null("output pointer"))
}

fn create(cfg: RunConfig, out: &mut *mut AviSimulation) -> Result<(), (AviStatus, String)> {
    let sim = build_simulation(&cfg).map_err(fail)?;
    *out = Box::into_raw(Box::new(AviSimulation { sim }));
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn avi_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Builds a simulation from a TOML file; relative paths resolve against its directory.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn avi_simulation_from_config_file(
    path: *const c_char,
    out: *mut *mut AviSimulation,
) -> AviStatus {
    guard(|| {
        let path = c_str(path, "path")?;
        let out = out_ref(out)?;
        let cfg = RunConfig::from_path(Path::new(path)).map_err(fail)?;
        create(cfg, out)
    })
}

/// Builds a simulation from TOML text; relative paths resolve against the working
/// directory.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn avi_simulation_from_config_str(
    text: *const c_char,
    out: *mut *mut AviSimulation,
) -> AviStatus {
    guard(|| {
        let text = c_str(text, "text")?;
        let out = out_ref(out)?;
        let cfg = RunConfig::from_toml(text).map_err(fail)?;
        create(cfg, out)
    })
}

/// Releases a handle; NULL is ignored.
///
/// # Safety
/// `sim` must come from one of the constructors and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn avi_simulation_free(sim: *mut AviSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Performs up to `max_updates` elemental updates; the number done goes to `performed`
/// (may be NULL).
///
/// # Safety
/// `sim` must be a live handle; `performed` NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn avi_simulation_step(
    sim: *mut AviSimulation,
    max_updates: u64,
    performed: *mut u64,
) -> AviStatus {
    guard(|| {
        let s = sim_mut(sim)?;
        let n = s.sim.advance(max_updates).map_err(fail)?;
        if let Some(p) = performed.as_mut() {
            *p = n;
        }
        Ok(())
    })
}

/// # Safety
/// `sim` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn avi_simulation_is_finished(
    sim: *const AviSimulation,
    out: *mut bool,
) -> AviStatus {
    guard(|| {
        *out_ref(out)? = sim_ref(sim)?.sim.is_finished();
        Ok(())
    })
}

/// Time of the last processed event.
///
/// # Safety
/// `sim` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn avi_simulation_time(sim: *const AviSimulation, out: *mut f64) -> AviStatus {
    guard(|| {
        *out_ref(out)? = sim_ref(sim)?.sim.time();
        Ok(())
    })
}

/// # Safety
/// `sim` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn avi_simulation_energies(
    sim: *const AviSimulation,
    out: *mut AviEnergies,
) -> AviStatus {
    guard(|| {
        let e = sim_ref(sim)?.sim.energies();
        *out_ref(out)? = AviEnergies {
            t: e.t,
            kinetic: e.kinetic,
            strain: e.strain,
            crack: e.crack,
            external_work: e.external_work,
            free: e.free,
        };
        Ok(())
    })
}

/// # Safety
/// `sim` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn avi_simulation_num_nodes(
    sim: *const AviSimulation,
    out: *mut usize,
) -> AviStatus {
    guard(|| {
        *out_ref(out)? = sim_ref(sim)?.sim.mesh().num_nodes();
        Ok(())
    })
}

/// # Safety
/// `sim` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn avi_simulation_num_elements(
    sim: *const AviSimulation,
    out: *mut usize,
) -> AviStatus {
    guard(|| {
        *out_ref(out)? = sim_ref(sim)?.sim.mesh().num_elements();
        Ok(())
    })
}

/// Copies the nodal phase field into `buf` (`len >= num_nodes`).
///
/// # Safety
/// `sim` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn avi_simulation_copy_phase(
    sim: *const AviSimulation,
    buf: *mut f64,
    len: usize,
) -> AviStatus {
    guard(|| {
        let d = sim_ref(sim)?.sim.phase();
        copy_into(d, buf, len)
    })
}

/// Copies the nodal displacements as `x0, y0, x1, y1, ...` into `buf`
/// (`len >= 2 * num_nodes`).
///
/// # Safety
/// `sim` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn avi_simulation_copy_displacement(
    sim: *const AviSimulation,
    buf: *mut f64,
    len: usize,
) -> AviStatus {
    guard(|| {
        let u = sim_ref(sim)?.sim.displacement();
        let flat: Vec<f64> = u.iter().flat_map(|v| *v).collect();
        copy_into(&flat, buf, len)
    })
}

unsafe fn copy_into(src: &[f64], buf: *mut f64, len: usize) -> Result<(), (AviStatus, String)> {
    if buf.is_null() {
        return Err(null("buffer"));
    }
    if len < src.len() {
        return Err((
            AviStatus::InvalidArgument,
            format!("buffer holds {len} values, {} needed", src.len()),
        ));
    }
    std::ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// # Safety
/// `sim` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn avi_simulation_update_stats(
    sim: *const AviSimulation,
    out: *mut AviUpdateStats,
) -> AviStatus {
    guard(|| {
        let s = &sim_ref(sim)?.sim;
        let set = s.settings();
        let st = update_statistics(s.update_counts(), s.time_steps(), set.t0, set.tf);
        *out_ref(out)? = AviUpdateStats {
            min: st.min,
            max: st.max,
            median: st.median,
            total: st.total,
            synchronous_estimate: st.synchronous_estimate,
        };
        Ok(())
    })
}
