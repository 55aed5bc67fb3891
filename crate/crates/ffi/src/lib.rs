//! C ABI for the workflow-pattern engine.
//!
//! The surface follows the usual opaque-handle pattern: [`wfp_process_parse`]
//! turns process text into a `WfpProcess` handle, the other entry points
//! operate on the handle, and every returned string is owned by the caller
//! until released with [`wfp_string_free`]. Functions report a status code;
//! on a non-zero status [`wfp_last_error`] returns a description of what went
//! wrong on the current thread.
//!
//! Status codes match the `wfp` command-line exit codes: 0 success, 2 parse
//! or validation failure, 4 improper completion, 5 deadlock, 6 exceeded
//! bound, plus 1 for invalid arguments (null pointers, non-UTF-8 text).

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::ptr;

use wfp_core::analyzer::{check_soundness, explore};
use wfp_core::dot::export_dot;
use wfp_core::dsl::{parse, serialize, ParseFailure};
use wfp_core::engine::{run_to_completion, CaseStatus, Decider};
use wfp_core::model::ProcessDefinition;

pub const WFP_OK: c_int = 0;
pub const WFP_ERR_ARG: c_int = 1;
pub const WFP_ERR_PARSE: c_int = 2;
pub const WFP_CASE_IMPROPER: c_int = 4;
pub const WFP_CASE_DEADLOCK: c_int = 5;
pub const WFP_ERR_BOUND: c_int = 6;

/// Opaque handle to a validated process definition.
pub struct WfpProcess {
    def: ProcessDefinition,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<Vec<u8>>) {
    let text = CString::new(message).unwrap_or_else(|_| CString::new("error").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn to_owned_c_string(text: String) -> *mut c_char {
    match CString::new(text) {
        Ok(s) => s.into_raw(),
        Err(_) => ptr::null_mut(),
    }
}

/// Description of the most recent failure on this thread, or null when the
/// last call succeeded. The caller owns the string; release it with
/// [`wfp_string_free`].
#[no_mangle]
pub extern "C" fn wfp_last_error() -> *mut c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(ptr::null_mut(), |s| s.clone().into_raw())
    })
}

/// Releases a string returned by this library. Null is accepted.
///
/// # Safety
/// `s` must be a pointer previously returned by one of these functions and
/// not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wfp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses process text into a handle. On success writes the handle to `out`
/// and returns 0; on failure returns 2 (syntax or validation) or 1 (bad
/// arguments) and leaves `out` untouched.
///
/// # Safety
/// `text` must point to a NUL-terminated string and `out` to writable
/// storage for one pointer; both must stay valid for the duration of the
/// call.
#[no_mangle]
pub unsafe extern "C" fn wfp_process_parse(
    text: *const c_char,
    out: *mut *mut WfpProcess,
) -> c_int {
    clear_error();
    if text.is_null() || out.is_null() {
        set_error("null argument");
        return WFP_ERR_ARG;
    }
    let Ok(text) = CStr::from_ptr(text).to_str() else {
        set_error("process text is not valid UTF-8");
        return WFP_ERR_ARG;
    };
    match parse(text) {
        Ok(def) => {
            *out = Box::into_raw(Box::new(WfpProcess { def }));
            WFP_OK
        }
        Err(ParseFailure::Syntax(errors)) => {
            let lines: Vec<String> = errors.iter().map(ToString::to_string).collect();
            set_error(lines.join("\n"));
            WFP_ERR_PARSE
        }
        Err(ParseFailure::Invalid(report)) => {
            let lines: Vec<String> =
                report.violations.iter().map(ToString::to_string).collect();
            set_error(lines.join("\n"));
            WFP_ERR_PARSE
        }
    }
}

/// Releases a process handle. Null is accepted.
///
/// # Safety
/// `process` must be a pointer previously returned by [`wfp_process_parse`]
/// and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wfp_process_free(process: *mut WfpProcess) {
    if !process.is_null() {
        drop(Box::from_raw(process));
    }
}

unsafe fn borrow_process<'a>(process: *const WfpProcess) -> Option<&'a ProcessDefinition> {
    process.as_ref().map(|p| &p.def)
}

/// Number of nodes in the definition, or 0 for a null handle.
///
/// # Safety
/// `process` must be a live handle from [`wfp_process_parse`] or null.
#[no_mangle]
pub unsafe extern "C" fn wfp_process_node_count(process: *const WfpProcess) -> u64 {
    borrow_process(process).map_or(0, |def| def.node_count() as u64)
}

/// Number of edges in the definition, or 0 for a null handle.
///
/// # Safety
/// `process` must be a live handle from [`wfp_process_parse`] or null.
#[no_mangle]
pub unsafe extern "C" fn wfp_process_edge_count(process: *const WfpProcess) -> u64 {
    borrow_process(process).map_or(0, |def| def.edge_count() as u64)
}

/// Process name as a caller-owned string, or null for a null handle.
///
/// # Safety
/// `process` must be a live handle from [`wfp_process_parse`] or null.
#[no_mangle]
pub unsafe extern "C" fn wfp_process_name(process: *const WfpProcess) -> *mut c_char {
    borrow_process(process)
        .map_or(ptr::null_mut(), |def| to_owned_c_string(def.name().to_owned()))
}

/// Canonical text of the definition; feeding it back through
/// [`wfp_process_parse`] reproduces the same definition.
///
/// # Safety
/// `process` must be a live handle from [`wfp_process_parse`] or null.
#[no_mangle]
pub unsafe extern "C" fn wfp_process_serialize(process: *const WfpProcess) -> *mut c_char {
    borrow_process(process).map_or(ptr::null_mut(), |def| to_owned_c_string(serialize(def)))
}

/// Graphviz DOT rendering of the definition.
///
/// # Safety
/// `process` must be a live handle from [`wfp_process_parse`] or null.
#[no_mangle]
pub unsafe extern "C" fn wfp_process_to_dot(process: *const WfpProcess) -> *mut c_char {
    borrow_process(process).map_or(ptr::null_mut(), |def| to_owned_c_string(export_dot(def)))
}

/// Runs one case to termination and writes its JSONL event log to
/// `out_jsonl` (caller-owned). `seed` may be null for fully deterministic
/// scheduling. Returns 0 on completion, 4 on improper completion, 5 on
/// deadlock, 6 when a bound was exceeded.
///
/// # Safety
/// `process` must be a live handle; `case_id` a NUL-terminated string;
/// `seed` null or a readable u64; `out_jsonl` writable storage for one
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn wfp_run_case(
    process: *const WfpProcess,
    case_id: *const c_char,
    seed: *const u64,
    or_join_bound: u64,
    step_limit: u64,
    out_jsonl: *mut *mut c_char,
) -> c_int {
    clear_error();
    let Some(def) = borrow_process(process) else {
        set_error("null process handle");
        return WFP_ERR_ARG;
    };
    if case_id.is_null() || out_jsonl.is_null() {
        set_error("null argument");
        return WFP_ERR_ARG;
    }
    let Ok(case_id) = CStr::from_ptr(case_id).to_str() else {
        set_error("case id is not valid UTF-8");
        return WFP_ERR_ARG;
    };
    let seed = seed.as_ref().copied();
    let decider = match seed {
        Some(s) => Decider::Seeded(s),
        None => Decider::Deterministic,
    };
    match run_to_completion(
        def,
        case_id,
        &decider,
        seed,
        or_join_bound as usize,
        step_limit as usize,
    ) {
        Ok((case, log)) => {
            *out_jsonl = to_owned_c_string(log.to_jsonl());
            match case.status {
                CaseStatus::Completed => WFP_OK,
                CaseStatus::CompletedImproperly => WFP_CASE_IMPROPER,
                CaseStatus::Deadlocked => WFP_CASE_DEADLOCK,
                CaseStatus::Running => unreachable!("runs end in a terminal status"),
            }
        }
        Err(err) => {
            set_error(format!("{}: {err}", err.code()));
            WFP_ERR_BOUND
        }
    }
}

/// Explores the state space and writes the soundness report as JSON to
/// `out_json` (caller-owned). Returns 0 when the report was produced (sound
/// or not; see the `sound` field), 6 when exploration exceeded a bound.
///
/// # Safety
/// `process` must be a live handle and `out_json` writable storage for one
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn wfp_check_soundness(
    process: *const WfpProcess,
    max_states: u64,
    out_json: *mut *mut c_char,
) -> c_int {
    clear_error();
    let Some(def) = borrow_process(process) else {
        set_error("null process handle");
        return WFP_ERR_ARG;
    };
    if out_json.is_null() {
        set_error("null argument");
        return WFP_ERR_ARG;
    }
    match check_soundness(def, max_states as usize) {
        Ok(report) => {
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            *out_json = to_owned_c_string(json);
            WFP_OK
        }
        Err(err) => {
            set_error(format!("{}: {err}", err.code()));
            WFP_ERR_BOUND
        }
    }
}

/// Explores the state space and writes the full graph (states, transitions)
/// as JSON to `out_json` (caller-owned). Returns 0 on success, 6 when a
/// bound was exceeded.
///
/// # Safety
/// `process` must be a live handle and `out_json` writable storage for one
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn wfp_explore_json(
    process: *const WfpProcess,
    max_states: u64,
    or_join_bound: u64,
    out_json: *mut *mut c_char,
) -> c_int {
    clear_error();
    let Some(def) = borrow_process(process) else {
        set_error("null process handle");
        return WFP_ERR_ARG;
    };
    if out_json.is_null() {
        set_error("null argument");
        return WFP_ERR_ARG;
    }
    match explore(def, max_states as usize, or_join_bound as usize) {
        Ok(graph) => {
            *out_json = to_owned_c_string(graph.to_json(def));
            WFP_OK
        }
        Err(err) => {
            set_error(format!("{}: {err}", err.code()));
            WFP_ERR_BOUND
        }
    }
}
