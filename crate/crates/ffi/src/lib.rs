// Copyright 2026 The spinboson-rwa Contributors
// SPDX-License-Identifier: Apache-2.0

//! C ABI for `spinboson-rwa`.
//!
//! Objects cross the boundary as opaque handles (`SbScenario`, `SbRun`,
//! `SbSurvival`) created by `sb_*_new`/`sb_*_from_*` and released with the
//! matching `sb_*_free`. Every fallible call returns an [`SbStatus`]; the
//! message of the most recent failure on the calling thread is available from
//! [`sb_last_error`]. Panics never unwind into C; they surface as
//! `SB_STATUS_PANIC`.
//!
//! Strings returned through caller buffers follow one rule: the function
//! returns the number of bytes needed including the terminating NUL, and
//! writes as much as fits (always NUL-terminated when `capacity > 0`).
//!
//! # Safety
//!
//! Every `unsafe` function shares one contract. Pointer arguments are either
//! null (rejected with `SB_STATUS_INVALID_ARGUMENT` where a value is required)
//! or valid for the access the function documents: C strings are
//! NUL-terminated, buffers hold at least `capacity` elements, and handles come
//! from this library and have not been freed.
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use spinboson_rwa::bath::{CutoffShape, SpectralDensity};
use spinboson_rwa::friedrichs::{solve_survival, SurvivalAmplitude};
use spinboson_rwa::grid::TimeGrid;
use spinboson_rwa::output::{render_all, write_all};
use spinboson_rwa::pipeline::{run_with_threads, RunOutput};
use spinboson_rwa::scenario::{preset, Format, Scenario};
use spinboson_rwa::Error;

/// Result of every fallible call. The numeric values of the library error
/// kinds match the exit codes of the `spinboson` binary.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbStatus {
    Ok = 0,
    Io = 1,
    /// Null pointer, invalid UTF-8, unknown name or similar misuse.
    InvalidArgument = 2,
    Config = 3,
    Truncation = 4,
    Solver = 5,
    Panic = 6,
    /// The caller's buffer is shorter than the data.
    BufferTooSmall = 7,
}

/// Spectral density family for [`SbSpectralDensity`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbFamily {
    /// `p0` = exponent, `p1` = scale, `p2` = cutoff, `shape` used.
    Ohmic = 0,
    /// `p0` = level, `p1` = lower edge, `p2` = upper edge.
    FlatBand = 1,
    /// `p0` = frequency, `p1` = coupling, `p2` ignored.
    SingleMode = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbCutoff {
    Exponential = 0,
    Hard = 1,
    None = 2,
}

/// Plain-data description of `J(ω)`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SbSpectralDensity {
    pub family: SbFamily,
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
    pub shape: SbCutoff,
}

/// A parsed and validated scenario.
pub struct SbScenario(Scenario);

/// The result of running a scenario.
pub struct SbRun(RunOutput);

/// A survival amplitude computed directly from a spectral density.
pub struct SbSurvival(SurvivalAmplitude);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("NUL removed"));
}

fn status_of(e: &Error) -> SbStatus {
    match e {
        Error::InvalidInput { .. } => SbStatus::Config,
        Error::Truncation { .. } => SbStatus::Truncation,
        Error::Solver { .. } => SbStatus::Solver,
        Error::Io { .. } => SbStatus::Io,
    }
}

struct Fail(SbStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn misuse(msg: impl Into<String>) -> Fail {
    Fail(SbStatus::InvalidArgument, msg.into())
}

/// Runs `f`, recording any failure or panic for `sb_last_error`.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SbStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            SbStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(misuse(format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| misuse(format!("{what} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| misuse(format!("{what} is null")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(misuse("output pointer is null"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Copies `s` into a caller buffer; see the module docs.
unsafe fn copy_str(s: &str, buf: *mut c_char, capacity: usize) -> usize {
    let bytes = s.as_bytes();
    if !buf.is_null() && capacity > 0 {
        let n = bytes.len().min(capacity - 1);
        std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
        *buf.add(n) = 0;
    }
    bytes.len() + 1
}

/// Message describing the last failure on this thread (empty after a
/// success). Returns the bytes needed including the NUL.
#[no_mangle]
pub unsafe extern "C" fn sb_last_error(buf: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|e| copy_str(e.borrow().to_str().unwrap_or(""), buf, capacity))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// --- scenarios -------------------------------------------------------------

fn checked(s: Scenario) -> Result<SbScenario, Fail> {
    s.resolve()?;
    Ok(SbScenario(s))
}

/// Parses a TOML scenario and checks every precondition.
#[no_mangle]
pub unsafe extern "C" fn sb_scenario_from_toml(toml: *const c_char, out: *mut *mut SbScenario) -> SbStatus {
    guard(|| {
        let text = str_arg(toml, "toml")?;
        put(out, checked(Scenario::from_toml_str(text)?)?)
    })
}

/// Reads and checks a scenario file.
#[no_mangle]
pub unsafe extern "C" fn sb_scenario_from_path(path: *const c_char, out: *mut *mut SbScenario) -> SbStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        put(out, checked(Scenario::from_path(Path::new(path))?)?)
    })
}

/// Loads a built-in scenario by name.
#[no_mangle]
pub unsafe extern "C" fn sb_scenario_from_preset(name: *const c_char, out: *mut *mut SbScenario) -> SbStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        let p = preset(name).ok_or_else(|| misuse(format!("unknown preset `{name}`")))?;
        put(out, checked(p.scenario())?)
    })
}

#[no_mangle]
pub unsafe extern "C" fn sb_scenario_free(s: *mut SbScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Hex SHA-256 of the scenario's computational content.
#[no_mangle]
pub unsafe extern "C" fn sb_scenario_config_hash(s: *const SbScenario, buf: *mut c_char, capacity: usize) -> usize {
    match s.as_ref() {
        Some(s) => copy_str(&s.0.config_hash(), buf, capacity),
        None => copy_str("", buf, capacity),
    }
}

/// Runs the scenario on `threads` workers (0 means all cores).
#[no_mangle]
pub unsafe extern "C" fn sb_run(s: *const SbScenario, threads: usize, out: *mut *mut SbRun) -> SbStatus {
    guard(|| {
        let s = ref_arg(s, "scenario")?;
        let threads = (threads > 0).then_some(threads);
        put(out, SbRun(run_with_threads(&s.0, threads)?))
    })
}

#[no_mangle]
pub unsafe extern "C" fn sb_run_free(r: *mut SbRun) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Shape of a result table. Fails with `InvalidArgument` if the run has no
/// table of that name.
#[no_mangle]
pub unsafe extern "C" fn sb_run_table_shape(
    r: *const SbRun,
    name: *const c_char,
    rows: *mut usize,
    columns: *mut usize,
) -> SbStatus {
    guard(|| {
        let r = ref_arg(r, "run")?;
        let name = str_arg(name, "name")?;
        let t = r.0.table(name).ok_or_else(|| misuse(format!("no table `{name}`")))?;
        if rows.is_null() || columns.is_null() {
            return Err(misuse("output pointer is null"));
        }
        *rows = t.rows.len();
        *columns = t.columns.len();
        Ok(())
    })
}

/// Name of column `index` of a table.
#[no_mangle]
pub unsafe extern "C" fn sb_run_table_column_name(
    r: *const SbRun,
    name: *const c_char,
    index: usize,
    buf: *mut c_char,
    capacity: usize,
) -> usize {
    let col = (|| {
        if name.is_null() {
            return None;
        }
        let t = r.as_ref()?.0.table(CStr::from_ptr(name).to_str().ok()?)?;
        t.columns.get(index).cloned()
    })();
    copy_str(col.as_deref().unwrap_or(""), buf, capacity)
}

/// Copies a table in row-major order into `data`, which must hold
/// `rows * columns` doubles. Masked points are NaN.
#[no_mangle]
pub unsafe extern "C" fn sb_run_table_copy(
    r: *const SbRun,
    name: *const c_char,
    data: *mut f64,
    len: usize,
) -> SbStatus {
    guard(|| {
        let r = ref_arg(r, "run")?;
        let name = str_arg(name, "name")?;
        let t = r.0.table(name).ok_or_else(|| misuse(format!("no table `{name}`")))?;
        let need = t.rows.len() * t.columns.len();
        if len < need {
            return Err(Fail(SbStatus::BufferTooSmall, format!("table `{name}` needs {need} doubles, got {len}")));
        }
        if data.is_null() {
            return Err(misuse("data is null"));
        }
        let out = std::slice::from_raw_parts_mut(data, need);
        for (dst, src) in out.chunks_mut(t.columns.len().max(1)).zip(&t.rows) {
            dst.copy_from_slice(src);
        }
        Ok(())
    })
}

/// A structured report (`equilibrium`, `survival_report`) or the manifest
/// (`manifest`) as JSON. Returns the bytes needed including the NUL, or 0 if
/// there is no such report.
#[no_mangle]
pub unsafe extern "C" fn sb_run_report_json(
    r: *const SbRun,
    name: *const c_char,
    buf: *mut c_char,
    capacity: usize,
) -> usize {
    let text = (|| {
        let r = r.as_ref()?;
        if name.is_null() {
            return None;
        }
        let name = CStr::from_ptr(name).to_str().ok()?;
        if name == "manifest" {
            return serde_json::to_string(&r.0.manifest()).ok();
        }
        let rep = r.0.reports.iter().find(|rep| rep.name == name)?;
        serde_json::to_string(&rep.value).ok()
    })();
    match text {
        Some(t) => copy_str(&t, buf, capacity),
        None => 0,
    }
}

/// Writes every table (`format`: 0 = CSV, 1 = JSON), report and the
/// manifest into `dir`, exactly as the `spinboson run` command does.
#[no_mangle]
pub unsafe extern "C" fn sb_run_write(r: *const SbRun, dir: *const c_char, format: u32) -> SbStatus {
    guard(|| {
        let r = ref_arg(r, "run")?;
        let dir = str_arg(dir, "dir")?;
        let format = match format {
            0 => Format::Csv,
            1 => Format::Json,
            other => return Err(misuse(format!("unknown format {other}"))),
        };
        let files = render_all(&r.0.tables, &r.0.reports, format);
        let mut manifest = r.0.manifest();
        manifest.format = format;
        write_all(Path::new(dir), &files, manifest)?;
        Ok(())
    })
}

// --- direct survival solve -------------------------------------------------

fn density(j: &SbSpectralDensity) -> Result<SpectralDensity, Fail> {
    let d = match j.family {
        SbFamily::Ohmic => {
            let shape = match j.shape {
                SbCutoff::Exponential => CutoffShape::Exponential,
                SbCutoff::Hard => CutoffShape::Hard,
                SbCutoff::None => CutoffShape::None,
            };
            SpectralDensity::ohmic(j.p0, j.p1, j.p2, shape)?
        }
        SbFamily::FlatBand => SpectralDensity::flat_band(j.p0, j.p1, j.p2)?,
        SbFamily::SingleMode => SpectralDensity::single_mode(j.p0, j.p1)?,
    };
    Ok(d)
}

/// Solves for the survival amplitude `U₊(t)` of the excited qubit in the
/// vacuum on `steps + 1` equally spaced times in `[0, t_max]`.
#[no_mangle]
pub unsafe extern "C" fn sb_survival_solve(
    j: *const SbSpectralDensity,
    omega: f64,
    t_max: f64,
    steps: usize,
    out: *mut *mut SbSurvival,
) -> SbStatus {
    guard(|| {
        let j = density(ref_arg(j, "spectral density")?)?;
        let grid = TimeGrid::new(t_max, steps)?;
        put(out, SbSurvival(solve_survival(&j, omega, &grid)?))
    })
}

#[no_mangle]
pub unsafe extern "C" fn sb_survival_free(s: *mut SbSurvival) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Number of time points (0 for a null handle).
#[no_mangle]
pub unsafe extern "C" fn sb_survival_len(s: *const SbSurvival) -> usize {
    s.as_ref().map_or(0, |s| s.0.len())
}

/// Copies times, `Re U₊`, `Im U₊` and the flip norm. Any output pointer may
/// be null to skip it; the others must hold `sb_survival_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sb_survival_copy(
    s: *const SbSurvival,
    times: *mut f64,
    re: *mut f64,
    im: *mut f64,
    flip_norm: *mut f64,
    len: usize,
) -> SbStatus {
    guard(|| {
        let s = &ref_arg(s, "survival")?.0;
        let n = s.len();
        if len < n {
            return Err(Fail(SbStatus::BufferTooSmall, format!("need {n} doubles, got {len}")));
        }
        let fill = |dst: *mut f64, f: &dyn Fn(usize) -> f64| {
            if !dst.is_null() {
                let out = std::slice::from_raw_parts_mut(dst, n);
                for (i, v) in out.iter_mut().enumerate() {
                    *v = f(i);
                }
            }
        };
        fill(times, &|i| s.times[i]);
        fill(re, &|i| s.amplitude[i].re);
        fill(im, &|i| s.amplitude[i].im);
        fill(flip_norm, &|i| s.flip_norm[i]);
        Ok(())
    })
}
