//! C interface to `dcpair`.
//!
//! A run is described by a `DcpairConfig` handle, executed with
//! `dcpair_run`, and inspected through the returned `DcpairReport` handle.
//! Every function returns a `DcpairStatus`; on failure the message is
//! available from `dcpair_last_error` on the same thread. Strings handed out
//! by the library are released with `dcpair_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use dcpair::cli::{run, Command, RunConfig};
use dcpair::coherence::CaseTag;
use dcpair::report::Report;
use dcpair::scalar::{parse_rational, Mode};
use dcpair::weights::FamilyTag;
use dcpair::Error;

/// Result of every API call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DcpairStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Unknown family, case or command, bad parameters, inadmissible input.
    InvalidInput = 3,
    Degenerate = 4,
    Inconsistent = 5,
    Io = 6,
    Panic = 7,
}

impl From<&Error> for DcpairStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Degenerate(_) => DcpairStatus::Degenerate,
            Error::Inconsistent(_) => DcpairStatus::Inconsistent,
            Error::Io(_) => DcpairStatus::Io,
            _ => DcpairStatus::InvalidInput,
        }
    }
}

/// Opaque run configuration.
pub struct DcpairConfig {
    inner: RunConfig,
}

/// Opaque verification report.
pub struct DcpairReport {
    inner: Report,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(status: DcpairStatus, msg: impl Into<String>) -> DcpairStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> DcpairStatus {
    let status = DcpairStatus::from(&e);
    fail(status, e.to_string())
}

/// Runs `f` with panics turned into `DcpairStatus::Panic`.
fn guard(f: impl FnOnce() -> DcpairStatus) -> DcpairStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(DcpairStatus::Panic, format!("internal panic: {msg}"))
        }
    }
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, DcpairStatus> {
    if s.is_null() {
        return Err(fail(DcpairStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(s).to_str().map_err(|_| fail(DcpairStatus::InvalidUtf8, "string argument is not valid UTF-8"))
}

unsafe fn config_mut<'a>(cfg: *mut DcpairConfig) -> Result<&'a mut RunConfig, DcpairStatus> {
    cfg.as_mut().map(|c| &mut c.inner).ok_or_else(|| fail(DcpairStatus::NullPointer, "null config handle"))
}

unsafe fn report_ref<'a>(r: *const DcpairReport) -> Result<&'a Report, DcpairStatus> {
    r.as_ref().map(|r| &r.inner).ok_or_else(|| fail(DcpairStatus::NullPointer, "null report handle"))
}

fn hand_out(s: String, out: *mut *mut c_char) -> DcpairStatus {
    if out.is_null() {
        return fail(DcpairStatus::NullPointer, "null output pointer");
    }
    match CString::new(s) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            DcpairStatus::Ok
        }
        Err(_) => fail(DcpairStatus::Inconsistent, "output contains a NUL byte"),
    }
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dcpair_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next API call on the same thread.
#[no_mangle]
pub extern "C" fn dcpair_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by the library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn dcpair_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// New configuration for `command`: pearson, structure, mops, coherence,
/// sobolev or classify-table.
///
/// # Safety
/// `command` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dcpair_config_new(command: *const c_char, out: *mut *mut DcpairConfig) -> DcpairStatus {
    guard(|| {
        if out.is_null() {
            return fail(DcpairStatus::NullPointer, "null output pointer");
        }
        let name = try_status!(read_str(command));
        let command: Command = match name.parse() {
            Ok(c) => c,
            Err(e) => return from_error(e),
        };
        *out = Box::into_raw(Box::new(DcpairConfig { inner: RunConfig::new(command) }));
        DcpairStatus::Ok
    })
}

/// # Safety
/// `cfg` must come from `dcpair_config_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn dcpair_config_free(cfg: *mut DcpairConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// # Safety
/// `cfg` must be a live handle and `family` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn dcpair_config_set_family(cfg: *mut DcpairConfig, family: *const c_char) -> DcpairStatus {
    guard(|| {
        let c = try_status!(config_mut(cfg));
        match try_status!(read_str(family)).parse::<FamilyTag>() {
            Ok(f) => {
                c.family = Some(f);
                DcpairStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `cfg` must be a live handle and `case` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn dcpair_config_set_case(cfg: *mut DcpairConfig, case: *const c_char) -> DcpairStatus {
    guard(|| {
        let c = try_status!(config_mut(cfg));
        match try_status!(read_str(case)).parse::<CaseTag>() {
            Ok(t) => {
                c.case = Some(t);
                DcpairStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Sets parameter `name` to the rational `value` (`p` or `p/q`).
///
/// # Safety
/// `cfg` must be a live handle; `name` and `value` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn dcpair_config_set_param(cfg: *mut DcpairConfig, name: *const c_char, value: *const c_char) -> DcpairStatus {
    guard(|| {
        let c = try_status!(config_mut(cfg));
        let name = try_status!(read_str(name)).trim().to_string();
        if name.is_empty() {
            return fail(DcpairStatus::InvalidInput, "empty parameter name");
        }
        match parse_rational(try_status!(read_str(value))) {
            Ok(q) => {
                c.params.insert(name, q);
                DcpairStatus::Ok
            }
            Err(e) => from_error(e.into()),
        }
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dcpair_config_set_nmax(cfg: *mut DcpairConfig, nmax: u32) -> DcpairStatus {
    guard(|| {
        try_status!(config_mut(cfg)).nmax = Some(nmax as usize);
        DcpairStatus::Ok
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dcpair_config_set_xmax(cfg: *mut DcpairConfig, xmax: u32) -> DcpairStatus {
    guard(|| {
        try_status!(config_mut(cfg)).xmax = xmax as usize;
        DcpairStatus::Ok
    })
}

/// Exact arithmetic.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dcpair_config_set_exact(cfg: *mut DcpairConfig) -> DcpairStatus {
    guard(|| {
        try_status!(config_mut(cfg)).mode = Mode::Exact;
        DcpairStatus::Ok
    })
}

/// Ball arithmetic at `precision` bits (at least 64).
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dcpair_config_set_approx(cfg: *mut DcpairConfig, precision: u32) -> DcpairStatus {
    guard(|| {
        let c = try_status!(config_mut(cfg));
        match Mode::approx(precision) {
            Ok(m) => {
                c.mode = m;
                DcpairStatus::Ok
            }
            Err(e) => from_error(e.into()),
        }
    })
}

/// Replaces the Sobolev weights with the given rationals.
///
/// # Safety
/// `cfg` must be a live handle and `values` an array of `len`
/// NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn dcpair_config_set_lambdas(cfg: *mut DcpairConfig, values: *const *const c_char, len: usize) -> DcpairStatus {
    guard(|| {
        let c = try_status!(config_mut(cfg));
        if values.is_null() && len > 0 {
            return fail(DcpairStatus::NullPointer, "null lambda array");
        }
        let mut out = Vec::with_capacity(len);
        for i in 0..len {
            match parse_rational(try_status!(read_str(*values.add(i)))) {
                Ok(q) => out.push(q),
                Err(e) => return from_error(e.into()),
            }
        }
        c.lambdas = out;
        DcpairStatus::Ok
    })
}

/// Fixture file for the pair commands.
///
/// # Safety
/// `cfg` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn dcpair_config_set_fixtures(cfg: *mut DcpairConfig, path: *const c_char) -> DcpairStatus {
    guard(|| {
        let c = try_status!(config_mut(cfg));
        c.fixtures = Some(PathBuf::from(try_status!(read_str(path))));
        DcpairStatus::Ok
    })
}

/// Worker threads; 0 uses the default.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dcpair_config_set_workers(cfg: *mut DcpairConfig, workers: u32) -> DcpairStatus {
    guard(|| {
        try_status!(config_mut(cfg)).workers = (workers > 0).then_some(workers as usize);
        DcpairStatus::Ok
    })
}

/// Runs the configured checks. A report is produced whenever the input is
/// valid, whether or not the checks pass.
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dcpair_run(cfg: *const DcpairConfig, out: *mut *mut DcpairReport) -> DcpairStatus {
    guard(|| {
        if out.is_null() {
            return fail(DcpairStatus::NullPointer, "null output pointer");
        }
        let Some(c) = cfg.as_ref() else {
            return fail(DcpairStatus::NullPointer, "null config handle");
        };
        match run(&c.inner) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(DcpairReport { inner: r }));
                DcpairStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `report` must come from `dcpair_run` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn dcpair_report_free(report: *mut DcpairReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Check counts of a report.
///
/// # Safety
/// `report` must be a live handle; the output pointers valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn dcpair_report_summary(
    report: *const DcpairReport,
    passed: *mut u64,
    failed: *mut u64,
    inconclusive: *mut u64,
) -> DcpairStatus {
    guard(|| {
        let r = try_status!(report_ref(report));
        let s = &r.summary;
        for (p, v) in [(passed, s.passed), (failed, s.failed), (inconclusive, s.inconclusive)] {
            if !p.is_null() {
                *p = v as u64;
            }
        }
        DcpairStatus::Ok
    })
}

/// 1 when every check passed, 0 otherwise, -1 for a NULL handle.
///
/// # Safety
/// `report` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn dcpair_report_all_passed(report: *const DcpairReport) -> i32 {
    match report.as_ref() {
        Some(r) => r.inner.all_passed() as i32,
        None => -1,
    }
}

/// Report as JSON; free the result with `dcpair_string_free`.
///
/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dcpair_report_json(report: *const DcpairReport, out: *mut *mut c_char) -> DcpairStatus {
    guard(|| {
        let r = try_status!(report_ref(report));
        match r.to_json() {
            Ok(s) => hand_out(s, out),
            Err(e) => from_error(e),
        }
    })
}

/// Report as CSV (the classification table when present); free the result
/// with `dcpair_string_free`.
///
/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dcpair_report_csv(report: *const DcpairReport, out: *mut *mut c_char) -> DcpairStatus {
    guard(|| {
        let r = try_status!(report_ref(report));
        match r.to_csv() {
            Ok(s) => hand_out(s, out),
            Err(e) => from_error(e),
        }
    })
}
