//! C interface to `monomed`.
//!
//! Every entry point returns a [`MonomedStatus`]; results come back through
//! out-pointers. On failure a description of the error is available from
//! [`monomed_last_error`] on the calling thread. Objects created here are
//! opaque and must be released with their matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use monomed::{
    calibrate, hsu_berger_med, step_up_identify_med, t_quantile, CalibrationConfig, CriticalValues,
    DoseResponseData, Error, FitMethod, GroupSummary, IsotonicFit, MedDecision, WeightedMeans,
};

/// Outcome of a call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonomedStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Capacity = 3,
    Data = 4,
    Calibration = 5,
    DesignMismatch = 6,
    /// A Rust panic was caught at the boundary.
    Panic = 7,
}

/// Isotonic fitting algorithm.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonomedFitMethod {
    Sdmmsa = 0,
    Pava = 1,
    Oracle = 2,
}

/// A monotone fit of treatment means.
pub struct MonomedFit(IsotonicFit);

/// Group summaries with pooled `S` and `nu`.
pub struct MonomedData(DoseResponseData);

/// Calibrated step-up cutoffs.
pub struct MonomedCriticalValues(CriticalValues);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

struct Failure(MonomedStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Argument(_) => MonomedStatus::InvalidArgument,
            Error::Data(_) => MonomedStatus::Data,
            Error::Capacity { .. } => MonomedStatus::Capacity,
            Error::Calibration { .. } => MonomedStatus::Calibration,
            Error::DesignMismatch(_) => MonomedStatus::DesignMismatch,
        };
        Failure(status, e.to_string())
    }
}

fn null(name: &str) -> Failure {
    Failure(MonomedStatus::NullPointer, format!("`{name}` is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(MonomedStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MonomedStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MonomedStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            MonomedStatus::Panic
        }
    }
}

unsafe fn input<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a, T>(p: *mut T, len: usize, name: &str) -> Result<&'a mut [T], Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn object<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn store<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

fn copy_exact(src: &[f64], dst: &mut [f64]) -> Result<(), Failure> {
    if src.len() != dst.len() {
        return Err(invalid(format!(
            "buffer holds {} values but {} are available",
            dst.len(),
            src.len()
        )));
    }
    dst.copy_from_slice(src);
    Ok(())
}

/// Message describing the last failure on this thread, or NULL if none.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn monomed_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Fits nondecreasing means to `k` weighted group means.
///
/// # Safety
/// `means` and `weights` must point to `k` readable doubles and `out` to a
/// writable pointer.
#[no_mangle]
pub unsafe extern "C" fn monomed_fit_new(
    method: MonomedFitMethod,
    means: *const f64,
    weights: *const f64,
    k: usize,
    out: *mut *mut MonomedFit,
) -> MonomedStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let data = WeightedMeans::new(
            input(means, k, "means")?.to_vec(),
            input(weights, k, "weights")?.to_vec(),
        )?;
        let method = match method {
            MonomedFitMethod::Sdmmsa => FitMethod::Sdmmsa,
            MonomedFitMethod::Pava => FitMethod::Pava,
            MonomedFitMethod::Oracle => FitMethod::Oracle,
        };
        store(out, MonomedFit(method.fit(&data)?));
        Ok(())
    })
}

/// Number of fitted values.
///
/// # Safety
/// `fit` must be NULL or a live handle from [`monomed_fit_new`].
#[no_mangle]
pub unsafe extern "C" fn monomed_fit_len(fit: *const MonomedFit) -> usize {
    fit.as_ref().map_or(0, |f| f.0.len())
}

/// Copies the `len` fitted values into `out`; `len` must equal the fit length.
///
/// # Safety
/// `fit` must be a live handle and `out` must have room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn monomed_fit_values(
    fit: *const MonomedFit,
    out: *mut f64,
    len: usize,
) -> MonomedStatus {
    guard(|| {
        let fit = object(fit, "fit")?;
        copy_exact(fit.0.fitted(), output(out, len, "out")?)
    })
}

/// Writes the 1-based block index of each dose into `out` (left to right).
///
/// # Safety
/// `fit` must be a live handle and `out` must have room for `len` values.
#[no_mangle]
pub unsafe extern "C" fn monomed_fit_block_ids(
    fit: *const MonomedFit,
    out: *mut usize,
    len: usize,
) -> MonomedStatus {
    guard(|| {
        let ids = object(fit, "fit")?.0.block_ids();
        if ids.len() != len {
            return Err(invalid(format!("expected a buffer of {} ids", ids.len())));
        }
        output(out, len, "out")?.copy_from_slice(&ids);
        Ok(())
    })
}

/// # Safety
/// `fit` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn monomed_fit_free(fit: *mut MonomedFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// Builds a dataset from `groups` summaries, control first.
///
/// `S` and `nu` are pooled from the standard deviations.
///
/// # Safety
/// `sizes`, `means` and `sds` must each point to `groups` readable values and
/// `out` to a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn monomed_data_from_summaries(
    sizes: *const u32,
    means: *const f64,
    sds: *const f64,
    groups: usize,
    out: *mut *mut MonomedData,
) -> MonomedStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let sizes = input(sizes, groups, "sizes")?;
        let means = input(means, groups, "means")?;
        let sds = input(sds, groups, "sds")?;
        let summaries = (0..groups)
            .map(|i| GroupSummary::new(i.to_string(), sizes[i], means[i], Some(sds[i])))
            .collect::<Result<Vec<_>, _>>()?;
        store(
            out,
            MonomedData(DoseResponseData::from_summaries(summaries)?),
        );
        Ok(())
    })
}

/// Pooled standard deviation and its degrees of freedom.
///
/// # Safety
/// `data` must be a live handle; `s` and `nu` must be writable.
#[no_mangle]
pub unsafe extern "C" fn monomed_data_pooled(
    data: *const MonomedData,
    s: *mut f64,
    nu: *mut u32,
) -> MonomedStatus {
    guard(|| {
        let data = object(data, "data")?;
        if s.is_null() || nu.is_null() {
            return Err(null("s/nu"));
        }
        *s = data.0.s();
        *nu = data.0.nu();
        Ok(())
    })
}

/// # Safety
/// `data` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn monomed_data_free(data: *mut MonomedData) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// Calibrates cutoffs for a design of `groups` sizes (control first).
///
/// # Safety
/// `sizes` must point to `groups` readable values and `out` to a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn monomed_calibrate(
    alpha: f64,
    delta: f64,
    sizes: *const u32,
    groups: usize,
    nu: u32,
    replicates: usize,
    seed: u64,
    out: *mut *mut MonomedCriticalValues,
) -> MonomedStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let sizes = input(sizes, groups, "sizes")?.to_vec();
        let config = CalibrationConfig::new(alpha, delta, sizes, nu, replicates, seed)?;
        store(out, MonomedCriticalValues(calibrate(&config)?));
        Ok(())
    })
}

/// Number of cutoffs (one per dose).
///
/// # Safety
/// `cv` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn monomed_cutoffs_len(cv: *const MonomedCriticalValues) -> usize {
    cv.as_ref().map_or(0, |c| c.0.k())
}

/// Copies the cutoffs `c_1..c_k` and, when `se` is not NULL, their Monte
/// Carlo standard errors.
///
/// # Safety
/// `cv` must be a live handle; `c` (and `se` if given) must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn monomed_cutoffs_get(
    cv: *const MonomedCriticalValues,
    c: *mut f64,
    se: *mut f64,
    len: usize,
) -> MonomedStatus {
    guard(|| {
        let cv = object(cv, "cv")?;
        copy_exact(cv.0.cutoffs(), output(c, len, "c")?)?;
        if !se.is_null() {
            copy_exact(cv.0.standard_errors(), output(se, len, "se")?)?;
        }
        Ok(())
    })
}

/// Serializes the calibration table; free the string with [`monomed_string_free`].
///
/// # Safety
/// `cv` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn monomed_cutoffs_to_json(
    cv: *const MonomedCriticalValues,
    out: *mut *mut c_char,
) -> MonomedStatus {
    guard(|| {
        let cv = object(cv, "cv")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CString::new(cv.0.to_json()?).map_err(|e| invalid(e.to_string()))?;
        *out = text.into_raw();
        Ok(())
    })
}

/// Parses a calibration table written by [`monomed_cutoffs_to_json`] or the CLI.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn monomed_cutoffs_from_json(
    json: *const c_char,
    out: *mut *mut MonomedCriticalValues,
) -> MonomedStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| invalid(format!("json is not UTF-8: {e}")))?;
        store(out, MonomedCriticalValues(CriticalValues::from_json(text)?));
        Ok(())
    })
}

/// # Safety
/// `cv` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn monomed_cutoffs_free(cv: *mut MonomedCriticalValues) {
    if !cv.is_null() {
        drop(Box::from_raw(cv));
    }
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn monomed_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn report(
    decision: MedDecision,
    med: *mut usize,
    statistics: *mut f64,
    len: usize,
) -> Result<(), Failure> {
    if !statistics.is_null() {
        copy_exact(&decision.statistics, output(statistics, len, "statistics")?)?;
    }
    *med = decision.med.unwrap_or(0);
    Ok(())
}

/// Step-up MED. `*med` is the 1-based dose, or 0 when no dose is declared.
/// When `statistics` is not NULL it receives the `len == k` test statistics.
///
/// # Safety
/// `data` and `cv` must be live handles, `med` writable, and `statistics`
/// NULL or room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn monomed_step_up_med(
    data: *const MonomedData,
    cv: *const MonomedCriticalValues,
    delta: f64,
    med: *mut usize,
    statistics: *mut f64,
    len: usize,
) -> MonomedStatus {
    guard(|| {
        let data = object(data, "data")?;
        let cv = object(cv, "cv")?;
        if med.is_null() {
            return Err(null("med"));
        }
        report(
            step_up_identify_med(&data.0, &cv.0, delta)?,
            med,
            statistics,
            len,
        )
    })
}

/// Hsu–Berger step-down MED with the same conventions as [`monomed_step_up_med`].
///
/// # Safety
/// As for [`monomed_step_up_med`].
#[no_mangle]
pub unsafe extern "C" fn monomed_hsu_berger_med(
    data: *const MonomedData,
    delta: f64,
    alpha: f64,
    med: *mut usize,
    statistics: *mut f64,
    len: usize,
) -> MonomedStatus {
    guard(|| {
        let data = object(data, "data")?;
        if med.is_null() {
            return Err(null("med"));
        }
        report(hsu_berger_med(&data.0, delta, alpha)?, med, statistics, len)
    })
}

/// Upper `p` quantile of Student's t with `nu` degrees of freedom.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn monomed_t_quantile(p: f64, nu: u32, out: *mut f64) -> MonomedStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = t_quantile(p, nu)?;
        Ok(())
    })
}
