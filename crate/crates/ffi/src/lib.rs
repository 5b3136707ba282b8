//! C ABI for `tdgl-core`.
//!
//! A simulator is an opaque handle created with [`tdgl_simulator_new`] and
//! released with [`tdgl_simulator_free`]. Every fallible call returns a
//! [`TdglStatus`]; on failure a message is available from
//! [`tdgl_last_error`] on the calling thread. Complex coefficient arrays are
//! interleaved `(re, im)` doubles, one pair per retained mode in increasing
//! wavenumber order. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::Arc;

use num_complex::Complex64;
use tdgl_core::diagnostics::{Diagnostics, DiagnosticsRecord, EnergyWeights};
use tdgl_core::dynamics::{Integrator, RunOptions, SystemState, DEFAULT_GUARD};
use tdgl_core::experiments::{run_scenario, seeded_initial_data, write_bundle, write_failure, ExperimentConfig};
use tdgl_core::model::{BoxDomain, Forcing, PhysParams};
use tdgl_core::spectral::{Basis, SpectralField};
use tdgl_core::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TdglStatus {
    Ok = 0,
    /// A required pointer was null.
    NullPointer = 1,
    /// Physical parameters violate the model's constraints.
    InvalidParams = 2,
    /// Any other invalid input (sizes, domain, non-finite values).
    InvalidArgument = 3,
    /// The state left the guard ball or became non-finite.
    BlowUp = 4,
    Io = 5,
    /// A configuration file could not be parsed or validated.
    Config = 6,
    /// An internal panic was caught.
    Panic = 7,
}

/// Model coefficients; `d = d_r + i d_i`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdglParams {
    pub u: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub m: f64,
    pub g: f64,
    pub nu: f64,
    pub mu: f64,
    pub gamma: f64,
    pub d_r: f64,
    pub d_i: f64,
}

impl From<TdglParams> for PhysParams {
    fn from(p: TdglParams) -> Self {
        PhysParams {
            u: p.u,
            a: p.a,
            b: p.b,
            c: p.c,
            m: p.m,
            g: p.g,
            nu: p.nu,
            mu: p.mu,
            gamma: p.gamma,
            d_r: p.d_r,
            d_i: p.d_i,
        }
    }
}

impl From<PhysParams> for TdglParams {
    fn from(p: PhysParams) -> Self {
        TdglParams {
            u: p.u,
            a: p.a,
            b: p.b,
            c: p.c,
            m: p.m,
            g: p.g,
            nu: p.nu,
            mu: p.mu,
            gamma: p.gamma,
            d_r: p.d_r,
            d_i: p.d_i,
        }
    }
}

/// Diagnostics of the current state, in the column order of the CSV series
/// plus the energy rate `de1`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TdglDiagnostics {
    pub t: f64,
    pub l2_v: f64,
    pub grad_v: f64,
    pub h2_v: f64,
    pub l4_v4: f64,
    pub l2_phi: f64,
    pub grad_phi: f64,
    pub hminus1_phi: f64,
    pub ups1: f64,
    pub ups2: f64,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub res_phi_l2: f64,
    pub res_phi_h1: f64,
    pub res_v_l2: f64,
    pub nvt: f64,
    pub nphit: f64,
    pub nvt_h1: f64,
    pub de1: f64,
}

impl From<DiagnosticsRecord> for TdglDiagnostics {
    fn from(r: DiagnosticsRecord) -> Self {
        TdglDiagnostics {
            t: r.t,
            l2_v: r.l2_v,
            grad_v: r.grad_v,
            h2_v: r.h2_v,
            l4_v4: r.l4_v4,
            l2_phi: r.l2_phi,
            grad_phi: r.grad_phi,
            hminus1_phi: r.hminus1_phi,
            ups1: r.ups1,
            ups2: r.ups2,
            e1: r.e1,
            e2: r.e2,
            e3: r.e3,
            res_phi_l2: r.res_phi_l2,
            res_phi_h1: r.res_phi_h1,
            res_v_l2: r.res_v_l2,
            nvt: r.nvt,
            nphit: r.nphit,
            nvt_h1: r.nvt_h1,
            de1: r.de1,
        }
    }
}

/// Opaque simulator handle for a one-dimensional interval.
pub struct TdglSimulator {
    params: PhysParams,
    basis: Arc<Basis>,
    forcing: Forcing,
    integ: Integrator,
    state: SystemState,
    guard: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

type Failure = (TdglStatus, String);

fn classify(e: Error) -> Failure {
    let status = match &e {
        Error::InvalidParams(_) => TdglStatus::InvalidParams,
        Error::BlowUp { .. } => TdglStatus::BlowUp,
        Error::Io(_) | Error::Json(_) => TdglStatus::Io,
        Error::Config { .. } => TdglStatus::Config,
        _ => TdglStatus::InvalidArgument,
    };
    (status, e.to_string())
}

fn null(what: &str) -> Failure {
    (TdglStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status and a stored message.
fn guarded(f: impl FnOnce() -> Result<(), Failure>) -> TdglStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            TdglStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("internal panic: {msg}"));
            TdglStatus::Panic
        }
    }
}

/// Reads `len` interleaved complex values.
///
/// # Safety
/// `ptr` must be valid for `2 * len` reads when non-null.
unsafe fn read_complex(ptr: *const f64, len: usize, what: &str) -> Result<Vec<Complex64>, Failure> {
    if ptr.is_null() {
        return Err(null(what));
    }
    let raw = std::slice::from_raw_parts(ptr, 2 * len);
    let out: Vec<Complex64> = raw.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
    if out.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err((TdglStatus::InvalidArgument, format!("{what} contains non-finite values")));
    }
    Ok(out)
}

/// # Safety
/// `ptr` must be valid for `2 * values.len()` writes when non-null.
unsafe fn write_complex(ptr: *mut f64, values: &[Complex64]) {
    if ptr.is_null() {
        return;
    }
    let out = std::slice::from_raw_parts_mut(ptr, 2 * values.len());
    for (pair, z) in out.chunks_exact_mut(2).zip(values) {
        pair[0] = z.re;
        pair[1] = z.im;
    }
}

fn check_len(sim: &TdglSimulator, len: usize) -> Result<(), Failure> {
    if len != sim.basis.len() {
        return Err((
            TdglStatus::InvalidArgument,
            format!("expected {} modes, got {len}", sim.basis.len()),
        ));
    }
    Ok(())
}

unsafe fn sim_mut<'a>(sim: *mut TdglSimulator) -> Result<&'a mut TdglSimulator, Failure> {
    sim.as_mut().ok_or_else(|| null("simulator"))
}

unsafe fn sim_ref<'a>(sim: *const TdglSimulator) -> Result<&'a TdglSimulator, Failure> {
    sim.as_ref().ok_or_else(|| null("simulator"))
}

/// The benchmark parameter set.
#[no_mangle]
pub extern "C" fn tdgl_default_params() -> TdglParams {
    PhysParams::default().into()
}

/// Creates a simulator on `(0, length)` with `modes` sine modes and a
/// quadrature grid of `grid` intervals (`0` selects `4 * modes`). The state
/// starts at zero with zero forcing.
///
/// # Safety
/// `params` must point to a valid `TdglParams`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tdgl_simulator_new(
    params: *const TdglParams,
    length: f64,
    modes: usize,
    grid: usize,
    out: *mut *mut TdglSimulator,
) -> TdglStatus {
    guarded(|| {
        let params = params.as_ref().ok_or_else(|| null("params"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = std::ptr::null_mut();
        let p = PhysParams::from(*params).checked_allow_linear().map_err(classify)?;
        let grid = if grid == 0 { 4 * modes } else { grid };
        let domain = BoxDomain::interval(length, modes, grid).map_err(classify)?;
        let basis = Basis::new(domain).map_err(classify)?;
        let forcing = Forcing::zero(&basis.zeros());
        let integ = Integrator::new(p, &forcing).map_err(classify)?;
        let sim = TdglSimulator {
            params: p,
            state: SystemState::zeros(&basis, 0.0),
            basis,
            forcing,
            integ,
            guard: DEFAULT_GUARD,
        };
        *out = Box::into_raw(Box::new(sim));
        Ok(())
    })
}

/// Releases a simulator. Null is ignored.
///
/// # Safety
/// `sim` must come from [`tdgl_simulator_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tdgl_simulator_free(sim: *mut TdglSimulator) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Number of retained modes, or 0 for a null handle.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tdgl_simulator_modes(sim: *const TdglSimulator) -> usize {
    sim.as_ref().map_or(0, |s| s.basis.len())
}

/// Replaces the state with `len` coefficients per field at time `t`.
///
/// # Safety
/// `v` and `phi` must each hold `2 * len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tdgl_simulator_set_state(
    sim: *mut TdglSimulator,
    v: *const f64,
    phi: *const f64,
    len: usize,
    t: f64,
) -> TdglStatus {
    guarded(|| {
        let sim = sim_mut(sim)?;
        check_len(sim, len)?;
        let v = sim.basis.field(read_complex(v, len, "v")?).map_err(classify)?;
        let phi = sim.basis.field(read_complex(phi, len, "phi")?).map_err(classify)?;
        sim.state = SystemState::new(v, phi, t).map_err(classify)?;
        Ok(())
    })
}

/// Copies the current coefficients into `v` and `phi` (either may be null).
///
/// # Safety
/// Non-null `v` and `phi` must each have room for `2 * len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tdgl_simulator_get_state(
    sim: *const TdglSimulator,
    v: *mut f64,
    phi: *mut f64,
    len: usize,
) -> TdglStatus {
    guarded(|| {
        let sim = sim_ref(sim)?;
        check_len(sim, len)?;
        write_complex(v, sim.state.v.coeffs());
        write_complex(phi, sim.state.phi.coeffs());
        Ok(())
    })
}

/// Replaces the state by seeded random data of joint `H¹` norm `radius`
/// at time 0.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tdgl_simulator_seed_state(sim: *mut TdglSimulator, radius: f64, seed: u64) -> TdglStatus {
    guarded(|| {
        let sim = sim_mut(sim)?;
        let (v, phi) = seeded_initial_data(&sim.basis, radius, 1.5, seed).map_err(classify)?;
        sim.state = SystemState::new(v, phi, 0.0).map_err(classify)?;
        Ok(())
    })
}

/// Sets time-independent forcing; a null array means zero.
///
/// # Safety
/// Non-null `f` and `h` must each hold `2 * len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tdgl_simulator_set_forcing(
    sim: *mut TdglSimulator,
    f: *const f64,
    h: *const f64,
    len: usize,
) -> TdglStatus {
    guarded(|| {
        let sim = sim_mut(sim)?;
        check_len(sim, len)?;
        let read = |p: *const f64, what: &str| -> Result<SpectralField, Failure> {
            if p.is_null() {
                Ok(sim.basis.zeros())
            } else {
                sim.basis.field(read_complex(p, len, what)?).map_err(classify)
            }
        };
        let forcing = Forcing {
            f: read(f, "f")?,
            h: read(h, "h")?,
        };
        sim.integ = Integrator::new(sim.params, &forcing).map_err(classify)?;
        sim.forcing = forcing;
        Ok(())
    })
}

/// Bound on `‖v‖_{H¹} + ‖φ‖_{H¹}` beyond which a step reports blow-up.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tdgl_simulator_set_guard(sim: *mut TdglSimulator, guard: f64) -> TdglStatus {
    guarded(|| {
        let sim = sim_mut(sim)?;
        if guard.is_nan() || guard <= 0.0 {
            return Err((TdglStatus::InvalidArgument, "guard must be positive".into()));
        }
        sim.guard = guard;
        Ok(())
    })
}

/// Advances the state by `horizon` with step `dt`, landing exactly on the
/// end time. On failure the state is left unchanged.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tdgl_simulator_advance(sim: *mut TdglSimulator, horizon: f64, dt: f64) -> TdglStatus {
    guarded(|| {
        let sim = sim_mut(sim)?;
        let opts = RunOptions {
            dt,
            sample_stride: usize::MAX,
            guard: sim.guard,
        };
        let next = sim
            .integ
            .integrate(&sim.state, horizon, &opts, |_, _| {})
            .map_err(classify)?;
        sim.state = next;
        Ok(())
    })
}

/// Writes the current time to `out`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tdgl_simulator_time(sim: *const TdglSimulator, out: *mut f64) -> TdglStatus {
    guarded(|| {
        let sim = sim_ref(sim)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = sim.state.t;
        Ok(())
    })
}

/// Evaluates all diagnostics of the current state with unit weights.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tdgl_simulator_diagnostics(sim: *const TdglSimulator, out: *mut TdglDiagnostics) -> TdglStatus {
    guarded(|| {
        let sim = sim_ref(sim)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let diag = Diagnostics::new(sim.params, EnergyWeights::default(), sim.forcing.clone()).map_err(classify)?;
        let d = sim.integ.rhs(&sim.state);
        *out = diag.record(&sim.state, &d).into();
        Ok(())
    })
}

unsafe fn c_path(p: *const c_char, what: &str) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(PathBuf::from)
        .map_err(|_| (TdglStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

/// Runs a configuration file like `tdgl run` and writes its outputs to
/// `out_dir` (null selects the configuration's own directory, then
/// `TDGL_OUT_DIR`, then the working directory). `exit_code` receives 0 when
/// every certificate passes, 1 when one fails, and 2 on error.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out_dir` null or NUL-terminated;
/// `exit_code` null or writable.
#[no_mangle]
pub unsafe extern "C" fn tdgl_run_config(path: *const c_char, out_dir: *const c_char, exit_code: *mut i32) -> TdglStatus {
    if let Some(code) = exit_code.as_mut() {
        *code = 2;
    }
    guarded(|| {
        let path = c_path(path, "path")?;
        let cfg = ExperimentConfig::from_file(&path).map_err(classify)?;
        let dir = if out_dir.is_null() {
            cfg.output_dir
                .clone()
                .map(PathBuf::from)
                .or_else(|| std::env::var_os("TDGL_OUT_DIR").map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("."))
        } else {
            c_path(out_dir, "out_dir")?
        };
        let bundle = match run_scenario(&cfg) {
            Ok(b) => b,
            Err(e) => {
                let _ = write_failure(&cfg, &e, &dir);
                return Err(classify(e));
            }
        };
        write_bundle(&bundle, &dir).map_err(classify)?;
        if let Some(code) = exit_code.as_mut() {
            *code = bundle.exit_code();
        }
        Ok(())
    })
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn tdgl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tdgl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
