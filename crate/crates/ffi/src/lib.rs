//! C interface to `bnmtf`.
//!
//! Matrices and fits are opaque handles created and released by this
//! library. Every function returns a [`BnmtfStatus`]; on failure the message
//! is available from [`bnmtf_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bnmtf::engine::{fit, Engine, Fit, FitSpec, Priors, Rank};
use bnmtf::hyper::InitScheme;
use bnmtf::io::read_matrix_csv;
use bnmtf::ndarray::Array2;
use bnmtf::randvar::{tn_mean_var, TruncNormParams};
use bnmtf::{Error, ObservedMatrix};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnmtfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Shape = 3,
    NoObservations = 4,
    NonFinite = 5,
    Numeric = 6,
    Io = 7,
    Parse = 8,
    BufferSize = 9,
    Panic = 10,
}

/// Values accepted by [`BnmtfFitOptions::engine`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnmtfEngine {
    Gibbs = 0,
    Vb = 1,
    Icm = 2,
    Np = 3,
}

/// Values accepted by [`BnmtfFitOptions::init`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnmtfInit {
    PriorMean = 0,
    PriorDraw = 1,
    KMeans = 2,
}

/// Fit settings. Start from [`bnmtf_fit_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BnmtfFitOptions {
    /// A [`BnmtfEngine`] value.
    pub engine: u32,
    pub k: usize,
    /// 0 selects the two-factor model.
    pub l: usize,
    pub iterations: usize,
    /// Negative means four fifths of `iterations`.
    pub burn_in: i64,
    pub thinning: usize,
    pub tol: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    /// A [`BnmtfInit`] value.
    pub init: u32,
    pub seed: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BnmtfQuality {
    pub mse: f64,
    pub loglik: f64,
    /// NaN unless `has_elbo`.
    pub elbo: f64,
    pub has_elbo: bool,
    pub aic: f64,
    pub bic: f64,
    pub k_free: usize,
}

/// A partially observed matrix.
pub struct BnmtfMatrix {
    inner: ObservedMatrix,
}

/// A fitted model.
pub struct BnmtfFit {
    inner: Fit,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: BnmtfStatus,
    message: String,
}

impl Failure {
    fn new(status: BnmtfStatus, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn null(name: &str) -> Self {
        Self::new(BnmtfStatus::NullPointer, format!("{name} is null"))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Shape(_) => BnmtfStatus::Shape,
            Error::InvalidArgument(_) | Error::EmptySplit(_) | Error::Config(_) => BnmtfStatus::InvalidArgument,
            Error::NoObservations => BnmtfStatus::NoObservations,
            Error::NonFinite { .. } | Error::NegativeEntry { .. } => BnmtfStatus::NonFinite,
            Error::GammaModeUndefined(_) | Error::NoDraws => BnmtfStatus::Numeric,
            Error::Io(_) => BnmtfStatus::Io,
            Error::RaggedRow { .. } | Error::Parse { .. } | Error::Csv(_) | Error::Json(_) => BnmtfStatus::Parse,
        };
        Self::new(status, e.to_string())
    }
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> BnmtfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            BnmtfStatus::Ok
        }
        Ok(Err(fail)) => {
            set_error(fail.message);
            fail.status
        }
        Err(payload) => {
            let what = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {what}"));
            BnmtfStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::null(name))
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::null(name))
}

unsafe fn buffer<'a>(p: *mut f64, len: usize, needed: usize, name: &str) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(Failure::null(name));
    }
    if len != needed {
        return Err(Failure::new(
            BnmtfStatus::BufferSize,
            format!("{name} holds {len} values, {needed} needed"),
        ));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bnmtf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL after a success.
/// The pointer stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn bnmtf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a matrix from `rows * cols` row-major values. `mask` may be NULL
/// (everything observed); otherwise a nonzero byte marks an observed entry.
///
/// # Safety
/// `values` must point to `rows * cols` doubles and `mask`, when not NULL, to
/// as many bytes. `out_matrix` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bnmtf_matrix_new(
    values: *const f64,
    mask: *const u8,
    rows: usize,
    cols: usize,
    out_matrix: *mut *mut BnmtfMatrix,
) -> BnmtfStatus {
    guard(|| {
        let slot = out(out_matrix, "out_matrix")?;
        *slot = ptr::null_mut();
        if values.is_null() {
            return Err(Failure::null("values"));
        }
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| Failure::new(BnmtfStatus::Shape, "rows * cols overflows"))?;
        let v = std::slice::from_raw_parts(values, n).to_vec();
        let m: Vec<bool> = if mask.is_null() {
            vec![true; n]
        } else {
            std::slice::from_raw_parts(mask, n).iter().map(|&b| b != 0).collect()
        };
        let shape_err = |_| Failure::new(BnmtfStatus::Shape, "bad matrix shape");
        let v = Array2::from_shape_vec((rows, cols), v).map_err(shape_err)?;
        let m = Array2::from_shape_vec((rows, cols), m).map_err(shape_err)?;
        let inner = ObservedMatrix::new(v, m)?;
        *slot = Box::into_raw(Box::new(BnmtfMatrix { inner }));
        Ok(())
    })
}

/// Reads a header-less CSV file; empty fields and `NA` are missing.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out_matrix` writable.
#[no_mangle]
pub unsafe extern "C" fn bnmtf_matrix_from_csv(path: *const c_char, out_matrix: *mut *mut BnmtfMatrix) -> BnmtfStatus {
    guard(|| {
        let slot = out(out_matrix, "out_matrix")?;
        *slot = ptr::null_mut();
        if path.is_null() {
            return Err(Failure::null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Failure::new(BnmtfStatus::InvalidArgument, "path is not UTF-8"))?;
        let inner = read_matrix_csv(path)?;
        *slot = Box::into_raw(Box::new(BnmtfMatrix { inner }));
        Ok(())
    })
}

/// # Safety
/// `matrix` must be a live handle; `rows` and `cols` writable.
#[no_mangle]
pub unsafe extern "C" fn bnmtf_matrix_shape(matrix: *const BnmtfMatrix, rows: *mut usize, cols: *mut usize) -> BnmtfStatus {
    guard(|| {
        let m = deref(matrix, "matrix")?;
        let (r, c) = m.inner.dim();
        *out(rows, "rows")? = r;
        *out(cols, "cols")? = c;
        Ok(())
    })
}

/// Releases a matrix. NULL is ignored.
///
/// # Safety
/// `matrix` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bnmtf_matrix_free(matrix: *mut BnmtfMatrix) {
    if !matrix.is_null() {
        drop(Box::from_raw(matrix));
    }
}

/// Fills `options` with the library defaults: variational Bayes, K = 10,
/// 1000 iterations, unit priors.
///
/// # Safety
/// `options` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bnmtf_fit_options_default(options: *mut BnmtfFitOptions) -> BnmtfStatus {
    guard(|| {
        let d = FitSpec::new(Engine::Vb);
        *out(options, "options")? = BnmtfFitOptions {
            engine: BnmtfEngine::Vb as u32,
            k: 10,
            l: 0,
            iterations: d.iterations,
            burn_in: -1,
            thinning: d.thinning,
            tol: d.tol,
            lambda: d.priors.lambda,
            alpha: d.priors.alpha,
            beta: d.priors.beta,
            init: BnmtfInit::PriorDraw as u32,
            seed: 0,
        };
        Ok(())
    })
}

fn spec_from(o: &BnmtfFitOptions) -> Result<(Rank, FitSpec), Failure> {
    let bad = |what: &str, v: u32| Failure::new(BnmtfStatus::InvalidArgument, format!("unknown {what} {v}"));
    let engine = match o.engine {
        0 => Engine::Gibbs,
        1 => Engine::Vb,
        2 => Engine::Icm,
        3 => Engine::Np,
        v => return Err(bad("engine", v)),
    };
    let init = match o.init {
        0 => InitScheme::PriorMean,
        1 => InitScheme::PriorDraw,
        2 => InitScheme::KMeans,
        v => return Err(bad("init scheme", v)),
    };
    let rank = if o.l == 0 {
        Rank::Nmf { k: o.k }
    } else {
        Rank::Nmtf { k: o.k, l: o.l }
    };
    let spec = FitSpec {
        engine,
        iterations: o.iterations,
        burn_in: usize::try_from(o.burn_in).ok(),
        thinning: o.thinning,
        tol: o.tol,
        init,
        priors: Priors {
            lambda: o.lambda,
            alpha: o.alpha,
            beta: o.beta,
        },
    };
    Ok((rank, spec))
}

/// Fits a model to `matrix`.
///
/// # Safety
/// `matrix` must be a live handle, `options` readable and `out_fit` writable.
#[no_mangle]
pub unsafe extern "C" fn bnmtf_fit(
    matrix: *const BnmtfMatrix,
    options: *const BnmtfFitOptions,
    out_fit: *mut *mut BnmtfFit,
) -> BnmtfStatus {
    guard(|| {
        let slot = out(out_fit, "out_fit")?;
        *slot = ptr::null_mut();
        let m = &deref(matrix, "matrix")?.inner;
        let (rank, spec) = spec_from(deref(options, "options")?)?;
        spec.validate(rank, m.rows(), m.cols())?;
        let inner = fit(m, rank, &spec, deref(options, "options")?.seed)?;
        *slot = Box::into_raw(Box::new(BnmtfFit { inner }));
        Ok(())
    })
}

/// Releases a fit. NULL is ignored.
///
/// # Safety
/// `fit` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bnmtf_fit_free(fit: *mut BnmtfFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// Copies the row-major prediction matrix into `out`, which must hold exactly
/// rows × cols values of the fitted matrix.
///
/// # Safety
/// `fit` must be a live handle and `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn bnmtf_fit_predict(fit: *const BnmtfFit, out: *mut f64, len: usize) -> BnmtfStatus {
    guard(|| {
        let p = &deref(fit, "fit")?.inner.prediction;
        let dst = buffer(out, len, p.len(), "out")?;
        for (d, s) in dst.iter_mut().zip(p.iter()) {
            *d = *s;
        }
        Ok(())
    })
}

/// Scores the fit on the observed entries of `matrix`.
///
/// # Safety
/// Both handles must be live and `out_quality` writable.
#[no_mangle]
pub unsafe extern "C" fn bnmtf_fit_quality(
    fit: *const BnmtfFit,
    matrix: *const BnmtfMatrix,
    out_quality: *mut BnmtfQuality,
) -> BnmtfStatus {
    guard(|| {
        let q = deref(fit, "fit")?.inner.quality(&deref(matrix, "matrix")?.inner)?;
        *out(out_quality, "out_quality")? = BnmtfQuality {
            mse: q.mse,
            loglik: q.loglik,
            elbo: q.elbo.unwrap_or(f64::NAN),
            has_elbo: q.elbo.is_some(),
            aic: q.aic,
            bic: q.bic,
            k_free: q.k_free,
        };
        Ok(())
    })
}

/// Noise precision of the fit.
///
/// # Safety
/// `fit` must be a live handle and `out_tau` writable.
#[no_mangle]
pub unsafe extern "C" fn bnmtf_fit_tau(fit: *const BnmtfFit, out_tau: *mut f64) -> BnmtfStatus {
    guard(|| {
        *out(out_tau, "out_tau")? = deref(fit, "fit")?.inner.tau;
        Ok(())
    })
}

/// Number of recorded iterations.
///
/// # Safety
/// `fit` must be a live handle and `out_len` writable.
#[no_mangle]
pub unsafe extern "C" fn bnmtf_fit_trace_len(fit: *const BnmtfFit, out_len: *mut usize) -> BnmtfStatus {
    guard(|| {
        *out(out_len, "out_len")? = deref(fit, "fit")?.inner.trace.iter_mse.len();
        Ok(())
    })
}

/// Training MSE per iteration; `len` must equal the trace length.
///
/// # Safety
/// `fit` must be a live handle and `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn bnmtf_fit_trace_mse(fit: *const BnmtfFit, out: *mut f64, len: usize) -> BnmtfStatus {
    guard(|| {
        let t = &deref(fit, "fit")?.inner.trace.iter_mse;
        let dst = buffer(out, len, t.len(), "out")?;
        for (d, &(_, v)) in dst.iter_mut().zip(t) {
            *d = v;
        }
        Ok(())
    })
}

/// ELBO per iteration, variational Bayes fits only.
///
/// # Safety
/// `fit` must be a live handle and `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn bnmtf_fit_trace_elbo(fit: *const BnmtfFit, out: *mut f64, len: usize) -> BnmtfStatus {
    guard(|| {
        let t = deref(fit, "fit")?
            .inner
            .trace
            .iter_elbo
            .as_ref()
            .ok_or_else(|| Failure::new(BnmtfStatus::InvalidArgument, "this engine records no ELBO"))?;
        let dst = buffer(out, len, t.len(), "out")?;
        for (d, &(_, v)) in dst.iter_mut().zip(t) {
            *d = v;
        }
        Ok(())
    })
}

/// Mean and variance of a normal with location `mu` and precision `tau`
/// truncated below at zero.
///
/// # Safety
/// `out_mean` and `out_var` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bnmtf_tn_mean_var(mu: f64, tau: f64, out_mean: *mut f64, out_var: *mut f64) -> BnmtfStatus {
    guard(|| {
        let (m, v) = tn_mean_var(TruncNormParams::new(mu, tau)?);
        *out(out_mean, "out_mean")? = m;
        *out(out_var, "out_var")? = v;
        Ok(())
    })
}
