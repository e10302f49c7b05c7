//! C ABI over `schrodinger_lab`.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `_free` function. Every fallible call returns an
//! [`SlStatus`] and, on failure, records a message retrievable with
//! [`sl_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use num_complex::Complex64;
use schrodinger_lab::evolve::{self, TimeGrid};
use schrodinger_lab::fields::{self, SpectralField};
use schrodinger_lab::maximal;
use schrodinger_lab::spectra::{self, ModeTable, ModelKind, Point, QuadratureGrid};
use schrodinger_lab::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ResourceLimit = 3,
    SupUnresolved = 4,
    Domain = 5,
    Config = 6,
    DivergentConstant = 7,
    EmptyEnsemble = 8,
    NonCompact = 9,
    Io = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlModel {
    Circle = 0,
    Torus2 = 1,
    Torus3 = 2,
    Sphere2 = 3,
    SphereZonal3 = 4,
    HyperbolicRadial3 = 5,
}

impl From<SlModel> for ModelKind {
    fn from(m: SlModel) -> Self {
        match m {
            SlModel::Circle => ModelKind::Circle,
            SlModel::Torus2 => ModelKind::Torus2,
            SlModel::Torus3 => ModelKind::Torus3,
            SlModel::Sphere2 => ModelKind::Sphere2,
            SlModel::SphereZonal3 => ModelKind::SphereZonal3,
            SlModel::HyperbolicRadial3 => ModelKind::HyperbolicRadial3,
        }
    }
}

/// An enumerated eigenmode table.
pub struct SlModeTable(Arc<ModeTable>);

/// A spectral coefficient vector over a mode table.
pub struct SlField(SpectralField);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> SlStatus {
    match e {
        Error::ResourceLimit(_) => SlStatus::ResourceLimit,
        Error::SupUnresolved { .. } => SlStatus::SupUnresolved,
        Error::Domain(_) => SlStatus::Domain,
        Error::Config(_) => SlStatus::Config,
        Error::DivergentConstant(_) => SlStatus::DivergentConstant,
        Error::EmptyEnsemble(_) => SlStatus::EmptyEnsemble,
        Error::NonCompact(_) => SlStatus::NonCompact,
        Error::Io(_) => SlStatus::Io,
    }
}

enum Fail {
    Null(&'static str),
    Arg(String),
    Lab(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lab(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            SlStatus::Ok
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            SlStatus::NullPointer
        }
        Ok(Err(Fail::Arg(msg))) => {
            set_error(msg);
            SlStatus::InvalidArgument
        }
        Ok(Err(Fail::Lab(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            SlStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn point(coords: *const f64, n: usize) -> Result<Point, Fail> {
    let c = slice(coords, n, "coords")?;
    if c.is_empty() || c.len() > 3 {
        return Err(Fail::Arg(format!("points carry 1 to 3 coordinates, got {}", c.len())));
    }
    Ok(Point::new(c))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Enumerate all modes with frequency λ_j at most `cutoff`.
///
/// # Safety
/// `out_table` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sl_mode_table_new(model: SlModel, cutoff: f64, out_table: *mut *mut SlModeTable) -> SlStatus {
    guard(|| {
        let o = out(out_table, "out_table")?;
        *o = ptr::null_mut();
        let t = spectra::enumerate_modes(model.into(), cutoff)?;
        *o = boxed(SlModeTable(Arc::new(t)));
        Ok(())
    })
}

/// # Safety
/// `table` must come from [`sl_mode_table_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sl_mode_table_free(table: *mut SlModeTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Number of modes, or 0 for a null handle.
///
/// # Safety
/// `table` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_mode_table_len(table: *const SlModeTable) -> usize {
    table.as_ref().map_or(0, |t| t.0.len())
}

/// # Safety
/// `table` must be a live handle and `out_value` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sl_mode_table_eigenvalue(
    table: *const SlModeTable,
    index: usize,
    out_value: *mut f64,
) -> SlStatus {
    guard(|| {
        let t = deref(table, "table")?;
        let o = out(out_value, "out_value")?;
        let m = t.0.modes().get(index).ok_or_else(|| Fail::Arg(format!("mode {index} out of range")))?;
        *o = m.eigenvalue;
        Ok(())
    })
}

/// Gaussian random field normalized in `H^alpha`.
///
/// # Safety
/// `table` must be a live handle and `out_field` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sl_field_random(
    table: *const SlModeTable,
    alpha: f64,
    seed: u64,
    out_field: *mut *mut SlField,
) -> SlStatus {
    guard(|| {
        let t = deref(table, "table")?;
        let o = out(out_field, "out_field")?;
        *o = ptr::null_mut();
        if !alpha.is_finite() {
            return Err(Fail::Arg("alpha must be finite".into()));
        }
        *o = boxed(SlField(fields::random_field(&t.0, alpha, seed)));
        Ok(())
    })
}

/// Field from split real and imaginary coefficient arrays of the table length.
///
/// # Safety
/// `re` and `im` must point to `len` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn sl_field_from_coeffs(
    table: *const SlModeTable,
    re: *const f64,
    im: *const f64,
    len: usize,
    out_field: *mut *mut SlField,
) -> SlStatus {
    guard(|| {
        let t = deref(table, "table")?;
        let o = out(out_field, "out_field")?;
        *o = ptr::null_mut();
        let re = slice(re, len, "re")?;
        let im = slice(im, len, "im")?;
        let coeffs = re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect();
        *o = boxed(SlField(SpectralField::new(t.0.clone(), coeffs)?));
        Ok(())
    })
}

/// # Safety
/// `field` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sl_field_free(field: *mut SlField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Number of coefficients, or 0 for a null handle.
///
/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_field_len(field: *const SlField) -> usize {
    field.as_ref().map_or(0, |f| f.0.coeffs().len())
}

/// Copy coefficients into caller buffers of exactly the field length.
///
/// # Safety
/// `re` and `im` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sl_field_coeffs(field: *const SlField, re: *mut f64, im: *mut f64, len: usize) -> SlStatus {
    guard(|| {
        let f = deref(field, "field")?;
        let c = f.0.coeffs();
        if len != c.len() {
            return Err(Fail::Arg(format!("buffer length {len} does not match field length {}", c.len())));
        }
        if c.is_empty() {
            return Ok(());
        }
        if re.is_null() || im.is_null() {
            return Err(Fail::Null("coefficient buffer"));
        }
        let re = std::slice::from_raw_parts_mut(re, len);
        let im = std::slice::from_raw_parts_mut(im, len);
        for (j, z) in c.iter().enumerate() {
            re[j] = z.re;
            im[j] = z.im;
        }
        Ok(())
    })
}

/// `e^{-itΔ} f` as a new field.
///
/// # Safety
/// `field` must be a live handle and `out_field` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sl_propagate(field: *const SlField, t: f64, out_field: *mut *mut SlField) -> SlStatus {
    guard(|| {
        let f = deref(field, "field")?;
        let o = out(out_field, "out_field")?;
        *o = ptr::null_mut();
        *o = boxed(SlField(evolve::propagate(&f.0, t)?));
        Ok(())
    })
}

/// Coefficient l² norm, or NaN for a null handle.
///
/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_field_l2_norm(field: *const SlField) -> f64 {
    field.as_ref().map_or(f64::NAN, |f| f.0.l2_norm())
}

/// `‖f‖_{H^alpha}`, or NaN for a null handle.
///
/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_field_sobolev_norm(field: *const SlField, alpha: f64) -> f64 {
    field.as_ref().map_or(f64::NAN, |f| f.0.sobolev_norm(alpha))
}

/// Evaluate the field at a point given by its chart coordinates.
///
/// # Safety
/// `coords` must point to `ncoords` doubles; `out_re` and `out_im` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sl_field_eval(
    field: *const SlField,
    coords: *const f64,
    ncoords: usize,
    out_re: *mut f64,
    out_im: *mut f64,
) -> SlStatus {
    guard(|| {
        let f = deref(field, "field")?;
        let re = out(out_re, "out_re")?;
        let im = out(out_im, "out_im")?;
        let z = f.0.synthesize(&point(coords, ncoords)?)?;
        *re = z.re;
        *im = z.im;
        Ok(())
    })
}

/// Certified enclosure `[lo, hi]` of `sup_{t∈[0,1]} |e^{-itΔ} f(x)|`.
///
/// On `SupUnresolved` the best enclosure found is still written.
///
/// # Safety
/// `coords` must point to `ncoords` doubles; `out_lo` and `out_hi` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sl_certified_sup(
    field: *const SlField,
    coords: *const f64,
    ncoords: usize,
    tol: f64,
    out_lo: *mut f64,
    out_hi: *mut f64,
) -> SlStatus {
    guard(|| {
        let f = deref(field, "field")?;
        let lo = out(out_lo, "out_lo")?;
        let hi = out(out_hi, "out_hi")?;
        match maximal::certified_sup(&f.0, &point(coords, ncoords)?, tol) {
            Ok(e) => {
                *lo = e.lo;
                *hi = e.hi;
                Ok(())
            }
            Err(Error::SupUnresolved { best, tol }) => {
                *lo = best.lo;
                *hi = best.hi;
                Err(Error::SupUnresolved { best, tol }.into())
            }
            Err(e) => Err(e.into()),
        }
    })
}

/// `‖e^{-itΔ} f‖_{L^p([0,1]×M)}` on automatically resolved grids.
///
/// # Safety
/// `field` must be a live handle and `out_value` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sl_spacetime_norm(field: *const SlField, p: f64, out_value: *mut f64) -> SlStatus {
    guard(|| {
        let f = deref(field, "field")?;
        let o = out(out_value, "out_value")?;
        let sgrid = QuadratureGrid::for_lp(f.0.table(), p)?;
        let tgrid = TimeGrid::gauss_for(&f.0, p, 0.0, 1.0)?;
        *o = evolve::spacetime_norm(&f.0, p, &tgrid, &sgrid)?;
        Ok(())
    })
}

/// Copy the calling thread's last error message, NUL-terminated, into `buf`.
///
/// Returns the message length in bytes excluding the terminator. A call
/// with a null `buf` or zero `cap` only reports the length.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn sl_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}
