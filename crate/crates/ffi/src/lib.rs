//! C interface to `recoil_fidelity`.
//!
//! Every function returns an [`RfStatus`]; on failure a message is kept per
//! thread and can be read with [`rf_last_error_message`]. Protocols are
//! built from the same JSON configuration the command-line tool reads and
//! handed out as opaque [`RfProtocol`] pointers.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use libc::c_char;
use recoil_fidelity::config::RunConfig;
use recoil_fidelity::error_budget::{generate_table1, solve_timebin_length_for, KappaConvention};
use recoil_fidelity::herald::{fidelity_with, mc_protocol_with, HeraldChannel, MotionTreatment, ProtocolSpec};
use recoil_fidelity::quadrature::QuadratureOptions;
use recoil_fidelity::temporal::{detection_yield, window_variance_factor, DetectionWindows};
use recoil_fidelity::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    NonConvergence = 4,
    BufferTooSmall = 5,
    Internal = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RfChannel {
    Opposite1001 = 0,
    Opposite0110 = 1,
    Same1100 = 2,
    Same0011 = 3,
}

impl From<RfChannel> for HeraldChannel {
    fn from(c: RfChannel) -> Self {
        match c {
            RfChannel::Opposite1001 => HeraldChannel::Opposite1001,
            RfChannel::Opposite0110 => HeraldChannel::Opposite0110,
            RfChannel::Same1100 => HeraldChannel::Same1100,
            RfChannel::Same0011 => HeraldChannel::Same0011,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RfKappa {
    Table = 0,
    PrintedEq37 = 1,
    Oracle = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RfBellResult {
    pub population_down_up: f64,
    pub population_up_down: f64,
    pub coherence_re: f64,
    pub coherence_im: f64,
    pub fidelity: f64,
    pub herald_probability: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RfMcResult {
    pub fidelity: f64,
    pub fidelity_error: f64,
    pub coherence_re: f64,
    pub coherence_im: f64,
    pub coherence_error: f64,
    pub herald_probability: f64,
    pub herald_probability_error: f64,
    pub discard_probability: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RfTableRow {
    pub wavelength_nm: f64,
    pub lifetime_ns: f64,
    pub recoil_frequency_khz: f64,
    /// 2E_T as a probability.
    pub timebin_error: f64,
    /// 2E_R as a probability.
    pub random_error: f64,
    pub timebin_length_ell: f64,
}

/// Opaque protocol handle.
pub struct RfProtocol {
    spec: ProtocolSpec,
    motion: MotionTreatment,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: RfStatus, msg: impl Into<String>) -> RfStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> RfStatus {
    let status = match e {
        Error::Config(_) | Error::Json(_) | Error::UnknownSpecies(_) => RfStatus::Config,
        Error::NonConvergence { .. } | Error::NoRoot { .. } => RfStatus::NonConvergence,
        Error::Io(_) => RfStatus::Internal,
        _ => RfStatus::InvalidArgument,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> RfStatus) -> RfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(RfStatus::Internal, "panic inside recoil_fidelity"),
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn rf_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a protocol from a JSON configuration.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn rf_protocol_from_json(json: *const c_char, out: *mut *mut RfProtocol) -> RfStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return fail(RfStatus::NullPointer, "null argument");
        }
        // SAFETY: checked non-null; caller guarantees NUL termination.
        let text = match unsafe { CStr::from_ptr(json) }.to_str() {
            Ok(t) => t,
            Err(_) => return fail(RfStatus::Config, "configuration is not UTF-8"),
        };
        let cfg = match RunConfig::from_json(text) {
            Ok(c) => c,
            Err(e) => return from_error(e),
        };
        let spec = match cfg.protocol_spec() {
            Ok(s) => s,
            Err(e) => return from_error(e),
        };
        let handle = Box::new(RfProtocol { spec, motion: cfg.motion() });
        // SAFETY: checked non-null.
        unsafe { *out = Box::into_raw(handle) };
        RfStatus::Ok
    })
}

/// Releases a protocol; NULL is ignored.
///
/// # Safety
/// `protocol` must come from [`rf_protocol_from_json`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rf_protocol_free(protocol: *mut RfProtocol) {
    if !protocol.is_null() {
        // SAFETY: caller passes a pointer obtained from Box::into_raw.
        drop(unsafe { Box::from_raw(protocol) });
    }
}

/// Quadrature fidelity of one herald channel.
///
/// # Safety
/// `protocol` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rf_fidelity(protocol: *const RfProtocol, channel: RfChannel, out: *mut RfBellResult) -> RfStatus {
    guard(|| {
        // SAFETY: null checked; caller guarantees a live handle.
        let Some(p) = (unsafe { protocol.as_ref() }) else {
            return fail(RfStatus::NullPointer, "null protocol");
        };
        if out.is_null() {
            return fail(RfStatus::NullPointer, "null output");
        }
        match fidelity_with(&p.spec, channel.into(), p.motion, &QuadratureOptions::default()) {
            Ok(r) => {
                let res = RfBellResult {
                    population_down_up: r.population_down_up,
                    population_up_down: r.population_up_down,
                    coherence_re: r.coherence.re,
                    coherence_im: r.coherence.im,
                    fidelity: r.fidelity,
                    herald_probability: r.herald_probability,
                };
                // SAFETY: checked non-null.
                unsafe { *out = res };
                RfStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Monte-Carlo estimate of one herald channel.
///
/// # Safety
/// `protocol` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rf_mc_protocol(
    protocol: *const RfProtocol,
    channel: RfChannel,
    samples: u64,
    seed: u64,
    out: *mut RfMcResult,
) -> RfStatus {
    guard(|| {
        // SAFETY: null checked; caller guarantees a live handle.
        let Some(p) = (unsafe { protocol.as_ref() }) else {
            return fail(RfStatus::NullPointer, "null protocol");
        };
        if out.is_null() {
            return fail(RfStatus::NullPointer, "null output");
        }
        let Ok(samples) = usize::try_from(samples) else {
            return fail(RfStatus::InvalidArgument, "sample count does not fit in size_t");
        };
        match mc_protocol_with(&p.spec, samples, seed, p.motion) {
            Ok(r) => {
                let c = r.get(channel.into());
                let res = RfMcResult {
                    fidelity: c.fidelity,
                    fidelity_error: c.fidelity_error,
                    coherence_re: c.coherence.re,
                    coherence_im: c.coherence.im,
                    coherence_error: c.coherence_error,
                    herald_probability: c.herald_probability,
                    herald_probability_error: c.herald_probability_error,
                    discard_probability: r.discard_probability,
                };
                // SAFETY: checked non-null.
                unsafe { *out = res };
                RfStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// W(w) for a difference window of `w` lifetimes.
#[no_mangle]
pub extern "C" fn rf_window_variance_factor(w: f64) -> f64 {
    window_variance_factor(w)
}

/// Two-photon detection yield; pass INFINITY for unbounded windows.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rf_detection_yield(
    detector_window_ns: f64,
    difference_window_ns: f64,
    lifetime_ns: f64,
    out: *mut f64,
) -> RfStatus {
    guard(|| {
        if out.is_null() {
            return fail(RfStatus::NullPointer, "null output");
        }
        if !(lifetime_ns > 0.0 && lifetime_ns.is_finite()) {
            return fail(RfStatus::InvalidArgument, "lifetime must be positive");
        }
        match DetectionWindows::new(detector_window_ns, difference_window_ns, 0.0) {
            Ok(w) => {
                // SAFETY: checked non-null.
                unsafe { *out = detection_yield(&w, lifetime_ns) };
                RfStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// ℓ solving e^{−ℓ} = ½ℓ²x for x = ω^{ΔR}τ.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rf_solve_timebin_length(recoil_times_lifetime: f64, out: *mut f64) -> RfStatus {
    guard(|| {
        if out.is_null() {
            return fail(RfStatus::NullPointer, "null output");
        }
        match solve_timebin_length_for(recoil_times_lifetime) {
            Ok(l) => {
                // SAFETY: checked non-null.
                unsafe { *out = l };
                RfStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Number of rows [`rf_table1`] writes.
#[no_mangle]
pub extern "C" fn rf_table1_len() -> usize {
    recoil_fidelity::atoms::builtin_species().len()
}

/// Fills `rows` with the per-species recoil table. `written` receives the
/// row count, also when the buffer is too small.
///
/// # Safety
/// `rows` must point to `capacity` writable rows; `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rf_table1(
    w: f64,
    kappa: RfKappa,
    rows: *mut RfTableRow,
    capacity: usize,
    written: *mut usize,
) -> RfStatus {
    guard(|| {
        if rows.is_null() || written.is_null() {
            return fail(RfStatus::NullPointer, "null argument");
        }
        let tag = match kappa {
            RfKappa::Table => "table",
            RfKappa::PrintedEq37 => "printed-eq37",
            RfKappa::Oracle => "oracle",
        };
        let table = KappaConvention::from_tag(tag, if w > 0.0 { w } else { 2.0 }).and_then(|c| generate_table1(w, c));
        let table = match table {
            Ok(t) => t,
            Err(e) => return from_error(e),
        };
        // SAFETY: checked non-null.
        unsafe { *written = table.len() };
        if capacity < table.len() {
            return fail(RfStatus::BufferTooSmall, format!("need {} rows", table.len()));
        }
        for (i, r) in table.iter().enumerate() {
            let row = RfTableRow {
                wavelength_nm: r.wavelength_nm,
                lifetime_ns: r.lifetime_ns,
                recoil_frequency_khz: r.recoil_frequency_khz,
                timebin_error: r.timebin_error,
                random_error: r.random_error,
                timebin_length_ell: r.timebin_length_ell,
            };
            // SAFETY: i < capacity by the check above.
            unsafe { *rows.add(i) = row };
        }
        RfStatus::Ok
    })
}
