//! C ABI for the `sabf` experiment harness and node placement.
//!
//! Objects cross the boundary as opaque handles created and freed by this
//! library. Every fallible call returns a [`SabfStatus`]; the text of the most
//! recent failure on the calling thread is available from
//! [`sabf_last_error`]. Strings and arrays are copied into caller buffers
//! using a query-then-fill convention: the required length is always reported
//! and [`SabfStatus::BufferTooSmall`] is returned when the buffer is short.
//! Panics are caught at the boundary and reported as [`SabfStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use sabf::harness::{deploy_layout, load_config, run_experiment, ExperimentConfig, ExperimentReport, Status};
use sabf::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SabfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BufferTooSmall = 3,
    Config = 4,
    Infeasible = 5,
    Solver = 6,
    Io = 7,
    NotFound = 8,
    Panic = 9,
}

/// Per-row outcome of an experiment report.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SabfRowStatus {
    Ok = 0,
    Infeasible = 1,
    SolverFail = 2,
}

/// A validated experiment configuration.
pub struct SabfConfig(ExperimentConfig);

/// The result of running an experiment.
pub struct SabfReport(ExperimentReport);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> SabfStatus {
    match err {
        Error::Config(_) => SabfStatus::Config,
        Error::Infeasible { .. } => SabfStatus::Infeasible,
        Error::NotConverged(_) | Error::RoundingFailed { .. } => SabfStatus::Solver,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => SabfStatus::Io,
        _ => SabfStatus::InvalidArgument,
    }
}

struct Fail(SabfStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(SabfStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, translating errors and panics into a status and recording the message.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SabfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SabfStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            SabfStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(SabfStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Copies `s` and a terminating NUL into `buf`; `needed` receives the full size.
unsafe fn copy_str(s: &str, buf: *mut c_char, len: usize, needed: *mut usize) -> Result<(), Fail> {
    let n = s.len() + 1;
    if !needed.is_null() {
        *needed = n;
    }
    if buf.is_null() || len < n {
        return Err(Fail(SabfStatus::BufferTooSmall, format!("string needs {n} bytes, buffer holds {len}")));
    }
    ptr::copy_nonoverlapping(s.as_ptr(), buf.cast::<u8>(), s.len());
    *buf.add(s.len()) = 0;
    Ok(())
}

unsafe fn copy_f64(v: &[f64], out: *mut f64, len: usize, needed: *mut usize) -> Result<(), Fail> {
    if !needed.is_null() {
        *needed = v.len();
    }
    if out.is_null() || len < v.len() {
        return Err(Fail(SabfStatus::BufferTooSmall, format!("array needs {} values, buffer holds {len}", v.len())));
    }
    ptr::copy_nonoverlapping(v.as_ptr(), out, v.len());
    Ok(())
}

/// Static description of a status code. Never null.
#[no_mangle]
pub extern "C" fn sabf_status_message(status: SabfStatus) -> *const c_char {
    let s: &'static CStr = match status {
        SabfStatus::Ok => c"ok",
        SabfStatus::NullPointer => c"null pointer argument",
        SabfStatus::InvalidArgument => c"invalid argument",
        SabfStatus::BufferTooSmall => c"buffer too small",
        SabfStatus::Config => c"configuration error",
        SabfStatus::Infeasible => c"problem infeasible",
        SabfStatus::Solver => c"solver failure",
        SabfStatus::Io => c"I/O error",
        SabfStatus::NotFound => c"not found",
        SabfStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

/// Copies the message of the last failure on this thread into `buf`.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes; `needed` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn sabf_last_error(buf: *mut c_char, len: usize, needed: *mut usize) -> SabfStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().clone());
    match copy_str(&msg, buf, len, needed) {
        Ok(()) => SabfStatus::Ok,
        Err(Fail(s, _)) => s,
    }
}

/// Parses and validates a TOML experiment configuration.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sabf_config_parse(toml: *const c_char, out: *mut *mut SabfConfig) -> SabfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let cfg = load_config(str_arg(toml, "toml")?)?;
        *out = Box::into_raw(Box::new(SabfConfig(cfg)));
        Ok(())
    })
}

/// Releases a configuration. Null is ignored.
///
/// # Safety
/// `cfg` must come from `sabf_config_parse` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sabf_config_free(cfg: *mut SabfConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Overrides the master seed.
///
/// # Safety
/// `cfg` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn sabf_config_set_seed(cfg: *mut SabfConfig, seed: u64) -> SabfStatus {
    guard(|| {
        cfg.as_mut().ok_or_else(|| null("cfg"))?.0.seed = seed;
        Ok(())
    })
}

/// Overrides the number of trials per sweep point. The change is validated
/// and rejected if the experiment kind is single-shot.
///
/// # Safety
/// `cfg` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn sabf_config_set_trials(cfg: *mut SabfConfig, trials: usize) -> SabfStatus {
    guard(|| {
        let cfg = &mut cfg.as_mut().ok_or_else(|| null("cfg"))?.0;
        let mut next = cfg.clone();
        next.trials = trials;
        next.validate()?;
        *cfg = next;
        Ok(())
    })
}

/// Copies the hex SHA-256 of the canonical configuration into `buf`.
///
/// # Safety
/// `cfg` must be a live handle, `buf` null or valid for `len` bytes and
/// `needed` null or writable.
#[no_mangle]
pub unsafe extern "C" fn sabf_config_hash(
    cfg: *const SabfConfig,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> SabfStatus {
    guard(|| copy_str(&handle(cfg, "cfg")?.0.hash(), buf, len, needed))
}

/// Normalized positions in `[-1, 1]` of the layout the harness deploys for
/// `nodes` flight nodes under `cfg`.
///
/// # Safety
/// `cfg` must be a live handle, `out` null or valid for `len` doubles and
/// `needed` null or writable.
#[no_mangle]
pub unsafe extern "C" fn sabf_deploy(
    cfg: *const SabfConfig,
    nodes: usize,
    out: *mut f64,
    len: usize,
    needed: *mut usize,
) -> SabfStatus {
    guard(|| {
        let layout = deploy_layout(&handle(cfg, "cfg")?.0, nodes)?;
        copy_f64(layout.delta(), out, len, needed)
    })
}

/// The `k` Fekete points of `[-1, 1]` (Gauss-Lobatto nodes), ascending.
///
/// # Safety
/// `out` must be null or valid for `len` doubles and `needed` null or writable.
#[no_mangle]
pub unsafe extern "C" fn sabf_fekete_points(k: usize, out: *mut f64, len: usize, needed: *mut usize) -> SabfStatus {
    guard(|| copy_f64(&sabf::deployment::gauss_lobatto_points(k)?.points, out, len, needed))
}

/// Runs the configured experiment. Per-row solver failures do not fail the
/// call; inspect them with `sabf_report_row_status`.
///
/// # Safety
/// `cfg` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sabf_run(cfg: *const SabfConfig, out: *mut *mut SabfReport) -> SabfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let report = run_experiment(&handle(cfg, "cfg")?.0)?;
        *out = Box::into_raw(Box::new(SabfReport(report)));
        Ok(())
    })
}

/// Releases a report. Null is ignored.
///
/// # Safety
/// `report` must come from `sabf_run` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sabf_report_free(report: *mut SabfReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Number of sweep rows; 0 for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sabf_report_rows(report: *const SabfReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.rows.len())
}

/// Outcome of row `row`.
///
/// # Safety
/// `report` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sabf_report_row_status(
    report: *const SabfReport,
    row: usize,
    out: *mut SabfRowStatus,
) -> SabfStatus {
    guard(|| {
        let r = &handle(report, "report")?.0;
        let n = r.rows.len();
        let row = r.rows.get(row).ok_or_else(|| Fail(SabfStatus::InvalidArgument, format!("row {row} of {n}")))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = match row.status {
            Status::Ok => SabfRowStatus::Ok,
            Status::Infeasible => SabfRowStatus::Infeasible,
            Status::SolverFail => SabfRowStatus::SolverFail,
        };
        Ok(())
    })
}

/// Sweep values of the rows.
///
/// # Safety
/// `report` must be a live handle, `out` null or valid for `len` doubles and
/// `needed` null or writable.
#[no_mangle]
pub unsafe extern "C" fn sabf_report_sweep(
    report: *const SabfReport,
    out: *mut f64,
    len: usize,
    needed: *mut usize,
) -> SabfStatus {
    guard(|| copy_f64(&handle(report, "report")?.0.sweep(), out, len, needed))
}

/// Row means of the named metric in report units (dBm, dB or plain), as in
/// the report CSV column of the same name.
///
/// # Safety
/// `report` must be a live handle, `metric` a NUL-terminated string, `out`
/// null or valid for `len` doubles and `needed` null or writable.
#[no_mangle]
pub unsafe extern "C" fn sabf_report_means(
    report: *const SabfReport,
    metric: *const c_char,
    out: *mut f64,
    len: usize,
    needed: *mut usize,
) -> SabfStatus {
    guard(|| {
        let name = str_arg(metric, "metric")?;
        let means = handle(report, "report")?
            .0
            .means(name)
            .ok_or_else(|| Fail(SabfStatus::NotFound, format!("no metric named {name}")))?;
        copy_f64(&means, out, len, needed)
    })
}

/// The report table as CSV text.
///
/// # Safety
/// `report` must be a live handle, `buf` null or valid for `len` bytes and
/// `needed` null or writable.
#[no_mangle]
pub unsafe extern "C" fn sabf_report_csv(
    report: *const SabfReport,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> SabfStatus {
    guard(|| copy_str(&handle(report, "report")?.0.report_csv()?, buf, len, needed))
}

/// Writes the report, plot table and metadata files into `dir`, creating it if needed.
///
/// # Safety
/// `report` must be a live handle and `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sabf_report_write(report: *const SabfReport, dir: *const c_char) -> SabfStatus {
    guard(|| {
        let dir = str_arg(dir, "dir")?;
        handle(report, "report")?.0.write(Path::new(dir))?;
        Ok(())
    })
}
