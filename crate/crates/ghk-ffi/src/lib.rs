//! C ABI over the Gowers-Host-Kra norm laboratory.
//!
//! Conventions: every function returns a [`GhkStatus`] code; results come
//! back through out-pointers; grid functions and extremizer parameters are
//! opaque handles created and freed here. On any non-zero status the
//! thread-local message from [`ghk_last_error_message`] describes the
//! failure. Complex buffers are interleaved (re, im) doubles.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};

use num_complex::Complex64;

use ghk_core::error::GhkError;
use ghk_core::extremizer::{fit, synthesize, ExtremizerParams, FitOptions};
use ghk_core::gowers::{
    deficit_budgeted, gowers_inner_budgeted, u2_norm, uk_norm_budgeted, DEFAULT_BUDGET,
};
use ghk_core::grid::{lp_norm, GridFunction, GridSpec};
use ghk_core::io::{read_ghk1_file, write_ghk1_file};
use ghk_core::rearrange::symmetric_rearrangement;

/// Status codes of every `ghk_*` call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GhkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DomainError = 3,
    BudgetExceeded = 4,
    IoError = 5,
    ParseError = 6,
    InternalError = 7,
}

/// Opaque handle to a complex grid function.
pub struct GhkGrid {
    inner: GridFunction,
}

/// Opaque handle to extremizer-family parameters.
pub struct GhkExtremizer {
    inner: ExtremizerParams,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(e: &GhkError) -> GhkStatus {
    match e {
        GhkError::InvalidParameter(_) | GhkError::GridMismatch(_) => GhkStatus::InvalidArgument,
        GhkError::Domain(_) => GhkStatus::DomainError,
        GhkError::Budget { .. } => GhkStatus::BudgetExceeded,
        GhkError::Io(_) => GhkStatus::IoError,
        GhkError::Parse(_) => GhkStatus::ParseError,
        GhkError::Sampling(_) | GhkError::Rank(_) => GhkStatus::InvalidArgument,
        GhkError::Internal(_) => GhkStatus::InternalError,
    }
}

fn fail(e: GhkError) -> GhkStatus {
    let code = status_of(&e);
    set_error(&e.to_string());
    code
}

/// Message describing the most recent failure on this thread. The pointer
/// stays valid until the next failing `ghk_*` call on the same thread.
#[no_mangle]
pub extern "C" fn ghk_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn ghk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

unsafe fn cstr<'a>(ptr: *const c_char) -> Result<&'a str, GhkStatus> {
    if ptr.is_null() {
        set_error("null string pointer");
        return Err(GhkStatus::NullPointer);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string is not valid UTF-8");
        GhkStatus::InvalidArgument
    })
}

macro_rules! require {
    ($ptr:expr) => {
        if $ptr.is_null() {
            set_error(concat!("null pointer: ", stringify!($ptr)));
            return GhkStatus::NullPointer;
        }
    };
}

/// Create a grid function from shape/spacing/origin arrays and interleaved
/// complex values (`2·value_count` doubles).
///
/// # Safety
/// All array pointers must be valid for the lengths implied by `dim` and the
/// product of `shape`.
#[no_mangle]
pub unsafe extern "C" fn ghk_grid_create(
    dim: usize,
    shape: *const usize,
    spacing: *const f64,
    origin: *const f64,
    values_interleaved: *const f64,
    value_count: usize,
    out: *mut *mut GhkGrid,
) -> GhkStatus {
    require!(shape);
    require!(spacing);
    require!(origin);
    require!(values_interleaved);
    require!(out);
    let shape = std::slice::from_raw_parts(shape, dim).to_vec();
    let spacing = std::slice::from_raw_parts(spacing, dim).to_vec();
    let origin = std::slice::from_raw_parts(origin, dim).to_vec();
    let raw = std::slice::from_raw_parts(values_interleaved, 2 * value_count);
    let values: Vec<Complex64> = raw
        .chunks_exact(2)
        .map(|c| Complex64::new(c[0], c[1]))
        .collect();
    match GridFunction::new(shape, spacing, origin, values) {
        Ok(g) => {
            *out = Box::into_raw(Box::new(GhkGrid { inner: g }));
            GhkStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Release a grid handle. Null is ignored.
///
/// # Safety
/// `grid` must be a pointer returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ghk_grid_free(grid: *mut GhkGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Read a GHK1 file.
///
/// # Safety
/// `path` must be a valid NUL-terminated string; `out` a valid out-pointer.
#[no_mangle]
pub unsafe extern "C" fn ghk_grid_read_ghk1(
    path: *const c_char,
    out: *mut *mut GhkGrid,
) -> GhkStatus {
    require!(out);
    let path = match cstr(path) {
        Ok(s) => s,
        Err(code) => return code,
    };
    match read_ghk1_file(path) {
        Ok(g) => {
            *out = Box::into_raw(Box::new(GhkGrid { inner: g }));
            GhkStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Write a grid to a GHK1 file.
///
/// # Safety
/// `grid` must be a live handle, `path` a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ghk_grid_write_ghk1(
    grid: *const GhkGrid,
    path: *const c_char,
) -> GhkStatus {
    require!(grid);
    let path = match cstr(path) {
        Ok(s) => s,
        Err(code) => return code,
    };
    match write_ghk1_file(&(*grid).inner, path) {
        Ok(()) => GhkStatus::Ok,
        Err(e) => fail(e),
    }
}

/// Number of cells of the grid (0 for null).
///
/// # Safety
/// `grid` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ghk_grid_value_count(grid: *const GhkGrid) -> usize {
    if grid.is_null() {
        0
    } else {
        (*grid).inner.len()
    }
}

/// Grid dimension (0 for null).
///
/// # Safety
/// `grid` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ghk_grid_dim(grid: *const GhkGrid) -> usize {
    if grid.is_null() {
        0
    } else {
        (*grid).inner.dim()
    }
}

/// Copy the interleaved complex values into `out` (`2·value_count` doubles).
///
/// # Safety
/// `out` must hold at least `2·ghk_grid_value_count(grid)` doubles.
#[no_mangle]
pub unsafe extern "C" fn ghk_grid_values(
    grid: *const GhkGrid,
    out: *mut f64,
    capacity: usize,
) -> GhkStatus {
    require!(grid);
    require!(out);
    let values = (*grid).inner.values();
    if capacity < 2 * values.len() {
        set_error("output buffer too small");
        return GhkStatus::InvalidArgument;
    }
    let slice = std::slice::from_raw_parts_mut(out, 2 * values.len());
    for (i, v) in values.iter().enumerate() {
        slice[2 * i] = v.re;
        slice[2 * i + 1] = v.im;
    }
    GhkStatus::Ok
}

/// L^p norm with the midpoint cell quadrature.
///
/// # Safety
/// `grid` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ghk_lp_norm(grid: *const GhkGrid, p: f64, out: *mut f64) -> GhkStatus {
    require!(grid);
    require!(out);
    match lp_norm(&(*grid).inner, p) {
        Ok(v) => {
            *out = v;
            GhkStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// ‖f‖_{U²} via the zero-padded DFT.
///
/// # Safety
/// `grid` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ghk_u2_norm(grid: *const GhkGrid, out: *mut f64) -> GhkStatus {
    require!(grid);
    require!(out);
    *out = u2_norm(&(*grid).inner);
    GhkStatus::Ok
}

/// ‖f‖_{U^k}; `budget` of 0 selects the default slice guard.
///
/// # Safety
/// `grid` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ghk_uk_norm(
    grid: *const GhkGrid,
    k: u32,
    budget: u64,
    out: *mut f64,
) -> GhkStatus {
    require!(grid);
    require!(out);
    let budget = if budget == 0 {
        DEFAULT_BUDGET
    } else {
        budget as u128
    };
    match uk_norm_budgeted(&(*grid).inner, k as usize, budget) {
        Ok(v) => {
            *out = v;
            GhkStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Deficit 1 − ‖f‖_{U^k}/(A(k,n)·‖f‖_{p_k}).
///
/// # Safety
/// `grid` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ghk_deficit(
    grid: *const GhkGrid,
    k: u32,
    budget: u64,
    out: *mut f64,
) -> GhkStatus {
    require!(grid);
    require!(out);
    let budget = if budget == 0 {
        DEFAULT_BUDGET
    } else {
        budget as u128
    };
    match deficit_budgeted(&(*grid).inner, k as usize, budget) {
        Ok(v) => {
            *out = v;
            GhkStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Gowers inner product of `2^k` grids (bitmask slot order, conjugation on
/// odd-parity slots).
///
/// # Safety
/// `grids` must point to `count` live handles; out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ghk_gowers_inner(
    grids: *const *const GhkGrid,
    count: usize,
    k: u32,
    budget: u64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> GhkStatus {
    require!(grids);
    require!(out_re);
    require!(out_im);
    let handles = std::slice::from_raw_parts(grids, count);
    let mut fs = Vec::with_capacity(count);
    for &h in handles {
        if h.is_null() {
            set_error("null grid handle in tuple");
            return GhkStatus::NullPointer;
        }
        fs.push((*h).inner.clone());
    }
    let budget = if budget == 0 {
        DEFAULT_BUDGET
    } else {
        budget as u128
    };
    match gowers_inner_budgeted(&fs, k as usize, budget) {
        Ok(v) => {
            *out_re = v.re;
            *out_im = v.im;
            GhkStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Symmetric decreasing rearrangement of |f| as a new handle.
///
/// # Safety
/// `grid` must be a live handle and `out` a valid out-pointer.
#[no_mangle]
pub unsafe extern "C" fn ghk_rearrange(
    grid: *const GhkGrid,
    out: *mut *mut GhkGrid,
) -> GhkStatus {
    require!(grid);
    require!(out);
    let g = symmetric_rearrangement(&(*grid).inner);
    *out = Box::into_raw(Box::new(GhkGrid { inner: g }));
    GhkStatus::Ok
}

/// The standard isotropic extremizer member (amplitude 1, M = I, P = 0).
///
/// # Safety
/// `out` must be a valid out-pointer.
#[no_mangle]
pub unsafe extern "C" fn ghk_extremizer_standard(
    k: u32,
    n: u32,
    out: *mut *mut GhkExtremizer,
) -> GhkStatus {
    require!(out);
    if k < 2 || n < 1 {
        set_error("extremizer requires k >= 2 and n >= 1");
        return GhkStatus::InvalidArgument;
    }
    let p = ExtremizerParams::standard(k as usize, n as usize);
    *out = Box::into_raw(Box::new(GhkExtremizer { inner: p }));
    GhkStatus::Ok
}

/// Parse extremizer parameters from their flat JSON form.
///
/// # Safety
/// `json` must be a valid NUL-terminated string, `out` a valid out-pointer.
#[no_mangle]
pub unsafe extern "C" fn ghk_extremizer_from_json(
    json: *const c_char,
    out: *mut *mut GhkExtremizer,
) -> GhkStatus {
    require!(out);
    let text = match cstr(json) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let value: serde_json::Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => {
            set_error(&format!("parse error: {e}"));
            return GhkStatus::ParseError;
        }
    };
    match ExtremizerParams::from_json_value(&value) {
        Ok(p) => {
            *out = Box::into_raw(Box::new(GhkExtremizer { inner: p }));
            GhkStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Serialize extremizer parameters to JSON; free with [`ghk_string_free`].
///
/// # Safety
/// `params` must be a live handle and `out` a valid out-pointer.
#[no_mangle]
pub unsafe extern "C" fn ghk_extremizer_to_json(
    params: *const GhkExtremizer,
    out: *mut *mut c_char,
) -> GhkStatus {
    require!(params);
    require!(out);
    let text = (*params).inner.to_json_value().to_string();
    match CString::new(text) {
        Ok(s) => {
            *out = s.into_raw();
            GhkStatus::Ok
        }
        Err(_) => {
            set_error("JSON contained an interior NUL");
            GhkStatus::InternalError
        }
    }
}

/// Release an extremizer handle. Null is ignored.
///
/// # Safety
/// `params` must be a pointer returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ghk_extremizer_free(params: *mut GhkExtremizer) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from a `ghk_*` call and not yet be freed.
#[no_mangle]
pub unsafe extern "C" fn ghk_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Sample the extremizer on a uniform grid: `cells`, `lo`, `hi` hold one
/// entry per axis.
///
/// # Safety
/// Array pointers must be valid for `dim` entries; handles must be live.
#[no_mangle]
pub unsafe extern "C" fn ghk_synthesize(
    params: *const GhkExtremizer,
    dim: usize,
    cells: *const usize,
    lo: *const f64,
    hi: *const f64,
    out: *mut *mut GhkGrid,
) -> GhkStatus {
    require!(params);
    require!(cells);
    require!(lo);
    require!(hi);
    require!(out);
    let cells = std::slice::from_raw_parts(cells, dim);
    let lo = std::slice::from_raw_parts(lo, dim);
    let hi = std::slice::from_raw_parts(hi, dim);
    let spec = GridSpec::boxed(cells, lo, hi);
    match synthesize(&(*params).inner, &spec) {
        Ok(g) => {
            *out = Box::into_raw(Box::new(GhkGrid { inner: g }));
            GhkStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Project a grid function onto the extremizer family. Returns the fitted
/// parameters and the realized relative distance epsilon.
///
/// # Safety
/// `grid` must be a live handle; out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ghk_fit(
    grid: *const GhkGrid,
    k: u32,
    restarts: u32,
    seed: u64,
    out_params: *mut *mut GhkExtremizer,
    out_epsilon: *mut f64,
) -> GhkStatus {
    require!(grid);
    require!(out_params);
    require!(out_epsilon);
    let opts = FitOptions {
        restarts: restarts as usize,
        seed,
        ..Default::default()
    };
    match fit(&(*grid).inner, k as usize, &opts) {
        Ok(r) => {
            *out_epsilon = r.epsilon;
            *out_params = Box::into_raw(Box::new(GhkExtremizer { inner: r.params }));
            GhkStatus::Ok
        }
        Err(e) => fail(e),
    }
}
