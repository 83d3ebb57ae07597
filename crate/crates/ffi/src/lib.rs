//! C interface to `qcycle`.
//!
//! Objects are opaque handles created by `qc_*_new` and released by the
//! matching `qc_*_free`. Every fallible call returns a [`QcStatus`]; on
//! failure the message is available from [`qc_last_error`] on the same
//! thread. Matrices are written column-major as separate real and imaginary
//! arrays.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qcycle::energy::transfer_spectrum;
use qcycle::pulse::compose_cycle;
use qcycle::simulate::{make_initial_state, CycleRecord, InitialSpec, Simulation};
use qcycle::{CycleParams, Error};

/// Status code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidParameter = 3,
    RequiresStrongLimit = 4,
    CheckFailed = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Cycle parameters.
pub struct QcParams(CycleParams);

/// Composed one-cycle S-matrix on the truncated space.
pub struct QcCycle(qcycle::pulse::ComposedCycle);

/// Precomputed multi-cycle propagator.
pub struct QcSimulation(Simulation);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> QcStatus {
    match err {
        Error::InvalidParameter(_) | Error::Config(_) => QcStatus::InvalidParameter,
        Error::RequiresStrongLimit(_) => QcStatus::RequiresStrongLimit,
        Error::InitialState(_) | Error::DimensionMismatch(_) | Error::GellMannIndex(_) => {
            QcStatus::InvalidArgument
        }
        _ => QcStatus::CheckFailed,
    }
}

fn guard(f: impl FnOnce() -> Result<(), QcStatus>) -> QcStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QcStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            QcStatus::Panic
        }
    }
}

fn lib<T>(r: qcycle::Result<T>) -> Result<T, QcStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, QcStatus> {
    p.as_ref().ok_or_else(|| {
        set_error("null pointer".into());
        QcStatus::NullPointer
    })
}

unsafe fn deref_mut<'a, T>(p: *mut T) -> Result<&'a mut T, QcStatus> {
    p.as_mut().ok_or_else(|| {
        set_error("null pointer".into());
        QcStatus::NullPointer
    })
}

unsafe fn string<'a>(p: *const c_char) -> Result<&'a str, QcStatus> {
    if p.is_null() {
        set_error("null string".into());
        return Err(QcStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("string is not UTF-8".into());
        QcStatus::InvalidArgument
    })
}

unsafe fn output<'a>(p: *mut f64, len: usize, needed: usize) -> Result<&'a mut [f64], QcStatus> {
    if p.is_null() {
        set_error("null output buffer".into());
        return Err(QcStatus::NullPointer);
    }
    if len < needed {
        set_error(format!("buffer holds {len} values, {needed} needed"));
        return Err(QcStatus::BufferTooSmall);
    }
    Ok(std::slice::from_raw_parts_mut(p, needed))
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn qc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default parameters (strong-limit pulses).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qc_params_new(out: *mut *mut QcParams) -> QcStatus {
    guard(|| {
        let out = deref_mut(out)?;
        *out = Box::into_raw(Box::new(QcParams(CycleParams::default())));
        Ok(())
    })
}

/// # Safety
/// `params` must come from [`qc_params_new`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn qc_params_free(params: *mut QcParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Sets one field from its text form, e.g. `("mu", "0.7")`,
/// `("tau_a", "none")` or `("pulse_mode", "finite")`.
///
/// # Safety
/// `params` must be a live handle, `key` and `value` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn qc_params_set(
    params: *mut QcParams,
    key: *const c_char,
    value: *const c_char,
) -> QcStatus {
    guard(|| {
        let p = deref_mut(params)?;
        let (key, value) = (string(key)?, string(value)?);
        let mut next = p.0;
        lib(next.set(key, value))?;
        lib(next.validate())?;
        p.0 = next;
        Ok(())
    })
}

/// Reads a numeric field. Unset pulse durations read as NaN.
///
/// # Safety
/// `params` must be a live handle, `key` a NUL-terminated string and
/// `value` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qc_params_get(
    params: *const QcParams,
    key: *const c_char,
    value: *mut f64,
) -> QcStatus {
    guard(|| {
        let p = &deref(params)?.0;
        let out = deref_mut(value)?;
        *out = match string(key)? {
            "omega1" => p.omega1,
            "omega3" => p.omega3,
            "mu" => p.mu,
            "delta" => p.delta,
            "kappa12" => p.kappa12,
            "kappa23" => p.kappa23,
            "tau1" => p.tau1,
            "tau3" => p.tau3,
            "eps_a" => p.eps_a,
            "eps_b" => p.eps_b,
            "tau_a" => p.tau_a.unwrap_or(f64::NAN),
            "tau_b" => p.tau_b.unwrap_or(f64::NAN),
            other => {
                set_error(format!("unknown numeric parameter '{other}'"));
                return Err(QcStatus::InvalidArgument);
            }
        };
        Ok(())
    })
}

/// `ρ±` of the transfer operator on Fock index `n`.
///
/// # Safety
/// `params` must be a live handle; `rho_plus` and `rho_minus` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn qc_transfer_eigenvalues(
    params: *const QcParams,
    n: usize,
    rho_plus: *mut f64,
    rho_minus: *mut f64,
) -> QcStatus {
    guard(|| {
        let p = &deref(params)?.0;
        let (plus, minus) = (deref_mut(rho_plus)?, deref_mut(rho_minus)?);
        let t = transfer_spectrum(n, p);
        *plus = t.rho_plus;
        *minus = t.rho_minus;
        Ok(())
    })
}

/// Composes the cycle S-matrix on the space holding every state with at
/// most `quanta_bound` quanta. Fails with `CheckFailed` when the product and
/// closed form disagree.
///
/// # Safety
/// `params` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qc_cycle_new(
    params: *const QcParams,
    quanta_bound: usize,
    out: *mut *mut QcCycle,
) -> QcStatus {
    guard(|| {
        let p = &deref(params)?.0;
        let out = deref_mut(out)?;
        let c = lib(compose_cycle(p, quanta_bound))?;
        *out = Box::into_raw(Box::new(QcCycle(c)));
        Ok(())
    })
}

/// # Safety
/// `cycle` must come from [`qc_cycle_new`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn qc_cycle_free(cycle: *mut QcCycle) {
    if !cycle.is_null() {
        drop(Box::from_raw(cycle));
    }
}

/// Dimension of the full (truncated) space.
///
/// # Safety
/// `cycle` must be a live handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn qc_cycle_dim(cycle: *const QcCycle) -> usize {
    cycle.as_ref().map_or(0, |c| c.0.space.dim())
}

/// Deviation between product and closed form, NaN when no closed form
/// applies (finite pulses).
///
/// # Safety
/// `cycle` must be a live handle or NULL (returns NaN).
#[no_mangle]
pub unsafe extern "C" fn qc_cycle_path_deviation(cycle: *const QcCycle) -> f64 {
    cycle
        .as_ref()
        .and_then(|c| c.0.path_deviation)
        .unwrap_or(f64::NAN)
}

/// Full-space index of `|m, level, k⟩` (`level` 0, 1, 2 for g, e, f), or
/// `usize::MAX` when outside the cutoffs.
///
/// # Safety
/// `cycle` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn qc_cycle_index(
    cycle: *const QcCycle,
    m: usize,
    level: u32,
    k: usize,
) -> usize {
    let Some(c) = cycle.as_ref() else {
        return usize::MAX;
    };
    let level = match level {
        0 => qcycle::EngineLevel::G,
        1 => qcycle::EngineLevel::E,
        2 => qcycle::EngineLevel::F,
        _ => return usize::MAX,
    };
    if c.0.space.contains(m, k) {
        c.0.space.index(m, level, k)
    } else {
        usize::MAX
    }
}

/// Copies the S-matrix column-major into `re` and `im`, each of length at
/// least `dim²`.
///
/// # Safety
/// `cycle` must be a live handle; `re` and `im` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qc_cycle_matrix(
    cycle: *const QcCycle,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> QcStatus {
    guard(|| {
        let m = deref(cycle)?.0.operator.matrix();
        let needed = m.len();
        let (re, im) = (output(re, len, needed)?, output(im, len, needed)?);
        for (i, z) in m.iter().enumerate() {
            re[i] = z.re;
            im[i] = z.im;
        }
        Ok(())
    })
}

/// Prepares a strong-limit simulation.
///
/// # Safety
/// `params` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qc_simulation_new(
    params: *const QcParams,
    quanta_bound: usize,
    out: *mut *mut QcSimulation,
) -> QcStatus {
    guard(|| {
        let p = &deref(params)?.0;
        let out = deref_mut(out)?;
        let sim = lib(Simulation::new(p, quanta_bound))?;
        *out = Box::into_raw(Box::new(QcSimulation(sim)));
        Ok(())
    })
}

/// # Safety
/// `sim` must come from [`qc_simulation_new`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn qc_simulation_free(sim: *mut QcSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Number of values per record written by [`qc_simulation_run`].
#[no_mangle]
pub extern "C" fn qc_record_width() -> usize {
    CycleRecord::COLUMNS.len()
}

/// Name of record column `i` as a static string, or NULL.
#[no_mangle]
pub extern "C" fn qc_record_column(i: usize) -> *const c_char {
    static NAMES: std::sync::OnceLock<Vec<CString>> = std::sync::OnceLock::new();
    let names = NAMES.get_or_init(|| {
        CycleRecord::COLUMNS
            .iter()
            .map(|(n, _)| CString::new(*n).unwrap())
            .collect()
    });
    names.get(i).map_or(ptr::null(), |c| c.as_ptr())
}

/// Runs `n_cycles` cycles from the initial state described by `initial`
/// (same syntax as the command line, e.g. `"1,e,0"`) and writes
/// `(n_cycles + 1) × qc_record_width()` values row by row.
///
/// # Safety
/// `sim` must be a live handle, `initial` a NUL-terminated string and
/// `records` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qc_simulation_run(
    sim: *const QcSimulation,
    initial: *const c_char,
    n_cycles: usize,
    records: *mut f64,
    len: usize,
) -> QcStatus {
    guard(|| {
        let sim = &deref(sim)?.0;
        let spec: InitialSpec = lib(string(initial)?.parse())?;
        let width = CycleRecord::COLUMNS.len();
        let needed = n_cycles
            .checked_add(1)
            .and_then(|r| r.checked_mul(width))
            .ok_or_else(|| {
                set_error("record count overflows".into());
                QcStatus::InvalidArgument
            })?;
        let out = output(records, len, needed)?;
        let state = lib(make_initial_state(&spec, &sim.params, sim.quanta_bound()))?;
        let mut row = 0;
        lib(sim.for_each(&state, n_cycles, |r| {
            out[row * width..(row + 1) * width].copy_from_slice(&r.values());
            row += 1;
        }))?;
        Ok(())
    })
}
