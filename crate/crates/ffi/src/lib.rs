//! C ABI for the experiment laboratory.
//!
//! Every entry point is `extern "C"`, panic-proof (panics are caught and
//! surfaced as [`FlStatus::Panic`]), and safe to call from any thread.
//! Reports are handed out as opaque [`FlReport`] pointers; strings produced
//! by this library are NUL-terminated UTF-8 owned by the caller.
//!
//! Ownership contract:
//! * every `FlReport*` returned through an out-parameter must be released
//!   with [`fl_report_free`];
//! * every `char*` returned by the library must be released with
//!   [`fl_string_free`], except the static string from [`fl_version`];
//! * out-parameters are written to null on entry, so they hold either null
//!   or a valid handle after any call.
//!
//! Errors: fallible functions return [`FlStatus`]; on any status other than
//! `Ok`, a human-readable message for the current thread is available via
//! [`fl_last_error`] until the next fallible call on the same thread.

#![deny(unsafe_op_in_unsafe_fn)]

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use filtration_lab::experiments::{self, PartialConfig};
use filtration_lab::report::{Report, ReportFormat};
use filtration_lab::Error;

/// Opaque handle to a finished experiment report.
///
/// Obtain one from `fl_report_run` or `fl_suite_run`, inspect it with
/// `fl_report_all_pass` / `fl_report_check_count` / `fl_report_render`,
/// and release it with `fl_report_free`.
pub struct FlReport(Report);

/// Status code returned by every fallible entry point.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The configuration JSON or the requested format was rejected.
    InvalidConfig = 3,
    /// The experiment name is not one of the known experiments.
    UnknownExperiment = 4,
    /// The experiment started but failed; see `fl_last_error`.
    RunFailed = 5,
    /// The report could not be rendered in the requested format.
    RenderFailed = 6,
    /// An internal panic was caught at the language boundary.
    Panic = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn fail(status: FlStatus, message: impl Into<String>) -> FlStatus {
    let text = message.into().replace('\0', " ");
    let text = CString::new(text).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
    status
}

fn status_of(error: &Error) -> FlStatus {
    match error {
        Error::UnknownExperiment(_) => FlStatus::UnknownExperiment,
        Error::InvalidConfig(_) => FlStatus::InvalidConfig,
        _ => FlStatus::RunFailed,
    }
}

/// Read a required `const char*` argument into `&str`.
///
/// # Safety
/// `ptr` must be null or point to a NUL-terminated string.
unsafe fn str_arg<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, (FlStatus, String)> {
    if ptr.is_null() {
        return Err((FlStatus::NullArgument, format!("{name} must not be null")));
    }
    unsafe { CStr::from_ptr(ptr) }
        .to_str()
        .map_err(|_| (FlStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

fn boxed_report(out: *mut *mut FlReport, result: Result<Report, Error>) -> FlStatus {
    match result {
        Ok(report) => {
            unsafe { *out = Box::into_raw(Box::new(FlReport(report))) };
            FlStatus::Ok
        }
        Err(error) => fail(status_of(&error), error.to_string()),
    }
}

/// Run one experiment and hand back an owned report handle.
///
/// `experiment` is one of `decimate`, `cascade`, `cascade-collapsed`,
/// `tsirelson`, `entropy-suite`, `exchange-suite`. `config_json` may be
/// null (all defaults) or a JSON object with any of the keys `seed`,
/// `trials`, `depth`, `window`, `steps`, `field_moduli`, `prefix_cap`;
/// unset keys take experiment-specific defaults. On success `*out` owns a
/// report and must be released with `fl_report_free`.
///
/// # Safety
/// `experiment` and `config_json` must be null or NUL-terminated strings;
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn fl_report_run(
    experiment: *const c_char,
    config_json: *const c_char,
    out: *mut *mut FlReport,
) -> FlStatus {
    clear_error();
    if out.is_null() {
        return fail(FlStatus::NullArgument, "out must not be null");
    }
    unsafe { *out = ptr::null_mut() };
    let experiment = match unsafe { str_arg(experiment, "experiment") } {
        Ok(name) => name,
        Err((status, message)) => return fail(status, message),
    };
    let config_text = if config_json.is_null() {
        "{}"
    } else {
        match unsafe { str_arg(config_json, "config_json") } {
            Ok(text) => text,
            Err((status, message)) => return fail(status, message),
        }
    };
    let outcome = catch_unwind(AssertUnwindSafe(|| -> Result<Report, Error> {
        let partial = PartialConfig::from_json(config_text)?;
        let config = experiments::resolve(experiment, &partial)?;
        experiments::run(&config)
    }));
    match outcome {
        Ok(result) => boxed_report(out, result),
        Err(_) => fail(FlStatus::Panic, "internal panic while running the experiment"),
    }
}

/// Run every experiment at its default scale under one seed and hand back
/// the combined suite report. Check names are prefixed with the experiment
/// name, e.g. `cascade/recursion-identity`. On success `*out` owns a report
/// and must be released with `fl_report_free`.
///
/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn fl_suite_run(seed: u64, out: *mut *mut FlReport) -> FlStatus {
    clear_error();
    if out.is_null() {
        return fail(FlStatus::NullArgument, "out must not be null");
    }
    unsafe { *out = ptr::null_mut() };
    let outcome = catch_unwind(AssertUnwindSafe(|| experiments::suite(seed)));
    match outcome {
        Ok(result) => boxed_report(out, result),
        Err(_) => fail(FlStatus::Panic, "internal panic while running the suite"),
    }
}

/// Render a report as text. `format` is `"json"` or `"csv"`; null selects
/// JSON. Identical report and format always produce byte-identical output.
/// On success `*out` owns a NUL-terminated string and must be released with
/// `fl_string_free`.
///
/// # Safety
/// `report` must be null or a live handle from this library; `format` must
/// be null or a NUL-terminated string; `out` must point to writable storage
/// for one pointer.
#[no_mangle]
pub unsafe extern "C" fn fl_report_render(
    report: *const FlReport,
    format: *const c_char,
    out: *mut *mut c_char,
) -> FlStatus {
    clear_error();
    if out.is_null() {
        return fail(FlStatus::NullArgument, "out must not be null");
    }
    unsafe { *out = ptr::null_mut() };
    let report = if report.is_null() {
        return fail(FlStatus::NullArgument, "report must not be null");
    } else {
        unsafe { &*report }
    };
    let format = if format.is_null() {
        ReportFormat::Json
    } else {
        let text = match unsafe { str_arg(format, "format") } {
            Ok(text) => text,
            Err((status, message)) => return fail(status, message),
        };
        match text.parse::<ReportFormat>() {
            Ok(format) => format,
            Err(error) => return fail(FlStatus::InvalidConfig, error.to_string()),
        }
    };
    let outcome = catch_unwind(AssertUnwindSafe(|| report.0.render(format)));
    let rendered = match outcome {
        Ok(Ok(text)) => text,
        Ok(Err(error)) => return fail(FlStatus::RenderFailed, error.to_string()),
        Err(_) => return fail(FlStatus::Panic, "internal panic while rendering the report"),
    };
    match CString::new(rendered) {
        Ok(text) => {
            unsafe { *out = text.into_raw() };
            FlStatus::Ok
        }
        Err(_) => fail(FlStatus::RenderFailed, "rendered text contains an interior NUL byte"),
    }
}

/// True when every check in the report passed. A null report yields false.
///
/// # Safety
/// `report` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn fl_report_all_pass(report: *const FlReport) -> bool {
    if report.is_null() {
        return false;
    }
    unsafe { &*report }.0.all_pass()
}

/// Number of checks in the report. A null report yields zero.
///
/// # Safety
/// `report` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn fl_report_check_count(report: *const FlReport) -> u64 {
    if report.is_null() {
        return 0;
    }
    unsafe { &*report }.0.checks.len() as u64
}

/// Release a report handle. Null is accepted and ignored.
///
/// # Safety
/// `report` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fl_report_free(report: *mut FlReport) {
    if !report.is_null() {
        drop(unsafe { Box::from_raw(report) });
    }
}

/// Release a string produced by this library. Null is accepted and ignored.
///
/// # Safety
/// `text` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fl_string_free(text: *mut c_char) {
    if !text.is_null() {
        drop(unsafe { CString::from_raw(text) });
    }
}

/// Message for the most recent failure on the calling thread, or null when
/// the most recent fallible call succeeded. The returned copy is owned by
/// the caller and must be released with `fl_string_free`.
#[no_mangle]
pub extern "C" fn fl_last_error() -> *mut c_char {
    LAST_ERROR.with(|slot| match &*slot.borrow() {
        Some(text) => text.clone().into_raw(),
        None => ptr::null_mut(),
    })
}

/// Library version as a static NUL-terminated string. Do not free.
#[no_mangle]
pub extern "C" fn fl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn version_is_static_and_nul_terminated() {
        let version = fl_version();
        assert!(!version.is_null());
        let text = unsafe { CStr::from_ptr(version) }.to_str().unwrap();
        assert_eq!(text, env!("CARGO_PKG_VERSION"));
    }

    #[test]
    fn error_mapping_distinguishes_config_from_unknown_experiment() {
        assert_eq!(
            status_of(&Error::UnknownExperiment("x".into())),
            FlStatus::UnknownExperiment
        );
        assert_eq!(
            status_of(&Error::InvalidConfig("x".into())),
            FlStatus::InvalidConfig
        );
        assert_eq!(
            status_of(&Error::InconsistentRanks("x".into())),
            FlStatus::RunFailed
        );
    }

    #[test]
    fn fail_replaces_interior_nul_in_messages() {
        let status = fail(FlStatus::RunFailed, "a\0b");
        assert_eq!(status, FlStatus::RunFailed);
        let message = fl_last_error();
        assert!(!message.is_null());
        let text = unsafe { CStr::from_ptr(message) }.to_str().unwrap().to_owned();
        unsafe { fl_string_free(message) };
        assert_eq!(text, "a b");
    }
}
