//! C ABI over `locc-core`.
//!
//! Every entry point returns a [`LoccStatus`]; on failure the message is kept
//! per thread and read back with [`locc_last_error_message`]. Handles and
//! strings returned here are owned by the caller and released with the
//! matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use locc_core::pipeline::{self, PipelineError, PipelineOptions};
use locc_core::protocol::{self, Protocol};
use locc_core::simulator;
use locc_core::states::{self, LoadOptions, StateFamily};

/// Status codes; the nonzero values match the CLI exit codes where they overlap.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoccStatus {
    Ok = 0,
    InvalidInput = 2,
    Unsupported = 3,
    SearchFailed = 4,
    NullPointer = 5,
    Panic = 6,
}

/// Opaque validated state family.
pub struct LoccFamily(StateFamily);

/// Opaque compiled protocol.
pub struct LoccProtocol(Protocol);

/// Pipeline settings; start from [`locc_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LoccOptions {
    pub zero_tol: f64,
    pub ortho_tol: f64,
    pub rank_tol: f64,
    pub support_tol: f64,
    pub seed: u64,
    pub reorthonormalize: bool,
    pub best_effort: bool,
}

impl From<LoccOptions> for PipelineOptions {
    fn from(o: LoccOptions) -> Self {
        PipelineOptions {
            zero_tol: o.zero_tol,
            ortho_tol: o.ortho_tol,
            rank_tol: o.rank_tol,
            support_tol: o.support_tol,
            seed: o.seed,
            reorthonormalize: o.reorthonormalize,
            best_effort: o.best_effort,
        }
    }
}

/// Exact outcome probabilities for one true state.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct LoccOutcome {
    pub success: f64,
    pub inconclusive: f64,
    pub misidentification: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(LoccStatus, String);

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let status = match e.exit_code() {
            pipeline::EXIT_UNSUPPORTED => LoccStatus::Unsupported,
            pipeline::EXIT_SEARCH_FAILED => LoccStatus::SearchFailed,
            _ => LoccStatus::InvalidInput,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(e: impl std::fmt::Display) -> Failure {
    Failure(LoccStatus::InvalidInput, e.to_string())
}

fn null(what: &str) -> Failure {
    Failure(LoccStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LoccStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LoccStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".to_string());
            LoccStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not UTF-8")))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s).expect("JSON has no nul bytes").into_raw()
}

/// Message of the last failure on this thread, or null. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn locc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn locc_options_default() -> LoccOptions {
    let o = PipelineOptions::default();
    LoccOptions {
        zero_tol: o.zero_tol,
        ortho_tol: o.ortho_tol,
        rank_tol: o.rank_tol,
        support_tol: o.support_tol,
        seed: o.seed,
        reorthonormalize: o.reorthonormalize,
        best_effort: o.best_effort,
    }
}

/// Parses and validates a state file given as JSON text.
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn locc_family_from_json(
    json: *const c_char,
    ortho_tol: f64,
    reorthonormalize: bool,
    out: *mut *mut LoccFamily,
) -> LoccStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        let opts = LoadOptions {
            ortho_tol,
            reorthonormalize,
        };
        let family = states::load_family(text.as_bytes(), opts).map_err(invalid)?;
        write_out(out, Box::into_raw(Box::new(LoccFamily(family))), "out")
    })
}

/// # Safety
/// `family` must come from [`locc_family_from_json`] and not be freed yet, or be null.
#[no_mangle]
pub unsafe extern "C" fn locc_family_free(family: *mut LoccFamily) {
    if !family.is_null() {
        drop(Box::from_raw(family));
    }
}

/// Number of states, or 0 for a null handle.
///
/// # Safety
/// `family` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn locc_family_len(family: *const LoccFamily) -> usize {
    family.as_ref().map_or(0, |f| f.0.len())
}

/// Writes the analysis report as JSON.
///
/// # Safety
/// `family` must be a live handle, `options` readable or null (defaults), `out_json` writable.
/// Free the string with [`locc_string_free`].
#[no_mangle]
pub unsafe extern "C" fn locc_analyze(
    family: *const LoccFamily,
    options: *const LoccOptions,
    out_json: *mut *mut c_char,
) -> LoccStatus {
    guard(|| {
        let family = deref(family, "family")?;
        let opts = options_or_default(options);
        let report = pipeline::analyze(&family.0, &opts)?;
        let json = serde_json::to_string_pretty(&report).map_err(invalid)?;
        write_out(out_json, to_c_string(json), "out_json")
    })
}

unsafe fn options_or_default(options: *const LoccOptions) -> PipelineOptions {
    options
        .as_ref()
        .map_or_else(PipelineOptions::default, |o| (*o).into())
}

/// Builds the distinguishing basis and compiles the protocol.
///
/// # Safety
/// `family` must be a live handle, `options` readable or null, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn locc_compile(
    family: *const LoccFamily,
    options: *const LoccOptions,
    out: *mut *mut LoccProtocol,
) -> LoccStatus {
    guard(|| {
        let family = deref(family, "family")?;
        let (compiled, _) = pipeline::compile(&family.0, &options_or_default(options))?;
        write_out(out, Box::into_raw(Box::new(LoccProtocol(compiled))), "out")
    })
}

/// # Safety
/// `json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn locc_protocol_from_json(
    json: *const c_char,
    out: *mut *mut LoccProtocol,
) -> LoccStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        let compiled = Protocol::from_json(text).map_err(invalid)?;
        write_out(out, Box::into_raw(Box::new(LoccProtocol(compiled))), "out")
    })
}

/// # Safety
/// `protocol` must be a live handle; `out_json` writable. Free with [`locc_string_free`].
#[no_mangle]
pub unsafe extern "C" fn locc_protocol_to_json(
    protocol: *const LoccProtocol,
    out_json: *mut *mut c_char,
) -> LoccStatus {
    guard(|| {
        let protocol = deref(protocol, "protocol")?;
        write_out(out_json, to_c_string(protocol.0.to_json()), "out_json")
    })
}

/// # Safety
/// `protocol` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn locc_protocol_free(protocol: *mut LoccProtocol) {
    if !protocol.is_null() {
        drop(Box::from_raw(protocol));
    }
}

/// Exact success, inconclusive and misidentification probabilities when the
/// state at `true_index` (0-based) is prepared.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn locc_outcome_probabilities(
    protocol: *const LoccProtocol,
    family: *const LoccFamily,
    true_index: usize,
    out: *mut LoccOutcome,
) -> LoccStatus {
    guard(|| {
        let protocol = deref(protocol, "protocol")?;
        let family = deref(family, "family")?;
        let d =
            simulator::outcome_distribution(&protocol.0, &family.0, true_index).map_err(invalid)?;
        let outcome = LoccOutcome {
            success: d.success(),
            inconclusive: d.inconclusive(),
            misidentification: d.misidentification(),
        };
        write_out(out, outcome, "out")
    })
}

/// Runs `trials` sampled rounds and writes the statistics as JSON.
///
/// # Safety
/// Handles must be live; `out_json` writable. Free with [`locc_string_free`].
#[no_mangle]
pub unsafe extern "C" fn locc_simulate(
    protocol: *const LoccProtocol,
    family: *const LoccFamily,
    true_index: usize,
    trials: u64,
    seed: u64,
    out_json: *mut *mut c_char,
) -> LoccStatus {
    guard(|| {
        let protocol = deref(protocol, "protocol")?;
        let family = deref(family, "family")?;
        let stats = simulator::simulate(&protocol.0, &family.0, true_index, trials, seed)
            .map_err(invalid)?;
        let json = serde_json::to_string_pretty(&stats).map_err(invalid)?;
        write_out(out_json, to_c_string(json), "out_json")
    })
}

/// Schmidt lower bound on the success probability with `n_p` error slots.
///
/// # Safety
/// `family` must be a live handle; `out_bound` writable.
#[no_mangle]
pub unsafe extern "C" fn locc_bound(
    family: *const LoccFamily,
    n_p: usize,
    out_bound: *mut f64,
) -> LoccStatus {
    guard(|| {
        let family = deref(family, "family")?;
        let profile = states::schmidt_profile(&family.0).map_err(invalid)?;
        let bound = protocol::discrimination_bound(&profile, n_p).map_err(invalid)?;
        write_out(out_bound, bound.bound, "out_bound")
    })
}

/// # Safety
/// `s` must be a string returned by this library and not yet freed, or null.
#[no_mangle]
pub unsafe extern "C" fn locc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
