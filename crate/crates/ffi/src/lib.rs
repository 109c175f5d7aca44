//! C interface to `slh-feedback`.
//!
//! Objects cross the boundary as opaque handles created by `slh_netlist_parse` or `slh_netlist_run`
//! and released with the matching `*_free`. Every fallible call returns an
//! [`SlhStatus`]; on failure the message is kept per thread and can be read
//! with [`slh_last_error`].
//!
//! Strings returned by a handle stay valid until the handle is freed.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use slh_feedback::netlist::{run, Cell, Netlist, OutputFormat, RunReport};
use slh_feedback::slh::{kerr_coefficients, AmplifierParams};
use slh_feedback::{Error, ErrorClass};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlhStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Physics = 4,
    Numerical = 5,
    Io = 6,
    OutOfRange = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlhFormat {
    Csv = 0,
    Json = 1,
}

/// Amplifier parameters in internal units (rad/µs).
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct SlhAmplifier {
    pub r0: f64,
    pub gain: f64,
    pub n_bath: f64,
    pub m_bath: f64,
}

/// Parsed netlist.
pub struct SlhNetlist {
    inner: Netlist,
}

/// Result of running a netlist.
pub struct SlhReport {
    inner: RunReport,
    summary: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> SlhStatus {
    match e.class() {
        ErrorClass::Parse => SlhStatus::Parse,
        ErrorClass::Physics => SlhStatus::Physics,
        ErrorClass::Numerical => SlhStatus::Numerical,
        ErrorClass::Io => SlhStatus::Io,
    }
}

fn fail(status: SlhStatus, msg: impl Into<String>) -> SlhStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> Result<(), SlhStatus>) -> SlhStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SlhStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => fail(SlhStatus::Panic, "internal panic"),
    }
}

fn lib(e: Error) -> SlhStatus {
    let s = status_of(&e);
    fail(s, e.to_string())
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, SlhStatus> {
    if p.is_null() {
        return Err(fail(SlhStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(SlhStatus::InvalidUtf8, "string is not valid UTF-8"))
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, SlhStatus> {
    p.as_mut().ok_or_else(|| fail(SlhStatus::NullPointer, "null output pointer"))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, SlhStatus> {
    p.as_ref().ok_or_else(|| fail(SlhStatus::NullPointer, "null handle"))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn slh_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn slh_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn slh_netlist_parse(text_ptr: *const c_char, out_ptr: *mut *mut SlhNetlist) -> SlhStatus {
    guard(|| {
        let dst = out(out_ptr)?;
        *dst = ptr::null_mut();
        let nl = Netlist::parse(text(text_ptr)?).map_err(lib)?;
        *dst = Box::into_raw(Box::new(SlhNetlist { inner: nl }));
        Ok(())
    })
}

/// # Safety
/// `nl` must come from [`slh_netlist_parse`] or be null.
#[no_mangle]
pub unsafe extern "C" fn slh_netlist_free(nl: *mut SlhNetlist) {
    if !nl.is_null() {
        drop(Box::from_raw(nl));
    }
}

/// Replaces the truncation of mode `label`.
///
/// # Safety
/// `nl` must be a live handle and `label` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn slh_netlist_set_truncation(nl: *mut SlhNetlist, label: *const c_char, dim: usize) -> SlhStatus {
    guard(|| {
        let h = out(nl)?;
        h.inner = h.inner.with_truncation(text(label)?, dim).map_err(lib)?;
        Ok(())
    })
}

/// Replaces parameter `name` with `value` in its declared unit.
///
/// # Safety
/// `nl` must be a live handle and `name` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn slh_netlist_set_param(nl: *mut SlhNetlist, name: *const c_char, value: f64) -> SlhStatus {
    guard(|| {
        let h = out(nl)?;
        h.inner = h.inner.with_param(text(name)?, value).map_err(lib)?;
        Ok(())
    })
}

/// Runs the netlist's task. `out_dir` may be null, in which case nothing is
/// written to disk.
///
/// # Safety
/// `nl` must be a live handle, `out_dir` null or a NUL-terminated string and
/// `report` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn slh_netlist_run(
    nl: *const SlhNetlist,
    out_dir: *const c_char,
    format: SlhFormat,
    report: *mut *mut SlhReport,
) -> SlhStatus {
    guard(|| {
        let dst = out(report)?;
        *dst = ptr::null_mut();
        let h = handle(nl)?;
        let dir = if out_dir.is_null() {
            None
        } else {
            Some(Path::new(text(out_dir)?))
        };
        let format = match format {
            SlhFormat::Csv => OutputFormat::Csv,
            SlhFormat::Json => OutputFormat::Json,
        };
        let r = run(&h.inner, dir, format).map_err(lib)?;
        let summary = CString::new(r.summary.replace('\0', " ")).unwrap_or_default();
        *dst = Box::into_raw(Box::new(SlhReport { inner: r, summary }));
        Ok(())
    })
}

/// # Safety
/// `r` must come from [`slh_netlist_run`] or be null.
#[no_mangle]
pub unsafe extern "C" fn slh_report_free(r: *mut SlhReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Human-readable summary; null if `r` is null.
///
/// # Safety
/// `r` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn slh_report_summary(r: *const SlhReport) -> *const c_char {
    r.as_ref().map_or(ptr::null(), |r| r.summary.as_ptr())
}

/// # Safety
/// `r` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn slh_report_table_count(r: *const SlhReport) -> usize {
    r.as_ref().map_or(0, |r| r.inner.tables.len())
}

/// Row and column counts of table `table`.
///
/// # Safety
/// `r` must be a live handle; `rows` and `cols` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn slh_report_table_shape(
    r: *const SlhReport,
    table: usize,
    rows: *mut usize,
    cols: *mut usize,
) -> SlhStatus {
    guard(|| {
        let t = handle(r)?
            .inner
            .tables
            .get(table)
            .ok_or_else(|| fail(SlhStatus::OutOfRange, format!("no table {table}")))?;
        *out(rows)? = t.rows.len();
        *out(cols)? = t.columns.len();
        Ok(())
    })
}

/// Numeric cell value; text cells are reported as NaN.
///
/// # Safety
/// `r` must be a live handle and `value` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn slh_report_table_value(
    r: *const SlhReport,
    table: usize,
    row: usize,
    col: usize,
    value: *mut f64,
) -> SlhStatus {
    guard(|| {
        let dst = out(value)?;
        let cell = handle(r)?
            .inner
            .tables
            .get(table)
            .and_then(|t| t.rows.get(row))
            .and_then(|r| r.get(col))
            .ok_or_else(|| fail(SlhStatus::OutOfRange, format!("no cell ({table}, {row}, {col})")))?;
        *dst = match cell {
            Cell::Num(v) => *v,
            Cell::Text(_) => f64::NAN,
        };
        Ok(())
    })
}

/// Amplifier from pump rate `kappa` and squeezing rate `xi` (rad/µs).
///
/// # Safety
/// `amp` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn slh_amplifier_from_kappa_xi(kappa: f64, xi: f64, amp: *mut SlhAmplifier) -> SlhStatus {
    guard(|| {
        let dst = out(amp)?;
        let a = AmplifierParams::from_kappa_xi(kappa, xi).map_err(lib)?;
        *dst = SlhAmplifier {
            r0: a.r0(),
            gain: a.gain(),
            n_bath: a.n_bath(),
            m_bath: a.m_bath(),
        };
        Ok(())
    })
}

/// Kerr frequency shift and strength (rad/µs) from gain, coupling rate and
/// drive amplitude.
///
/// # Safety
/// `delta` and `chi` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn slh_kerr_coefficients(
    g0: f64,
    gamma_a: f64,
    a_t: f64,
    delta: *mut f64,
    chi: *mut f64,
) -> SlhStatus {
    guard(|| {
        let d = out(delta)?;
        let c = out(chi)?;
        let k = kerr_coefficients(g0, gamma_a, a_t).map_err(lib)?;
        *d = k.delta;
        *c = k.chi;
        Ok(())
    })
}
