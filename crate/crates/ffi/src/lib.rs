//! C ABI over the fuzzreg library.
//!
//! Objects cross the boundary as opaque handles created by `fzr_*_new` (or
//! `fzr_fit`) and released with the matching `fzr_*_free`. Every fallible
//! call returns an `int32_t` status (`FZR_OK` on success) and writes results
//! through out-pointers; the message of the most recent failure on the
//! calling thread is available from `fzr_last_error`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use fuzzreg::cli::io::ingest;
use fuzzreg::cli::DataFormat;
use fuzzreg::diagnostics::summarize;
use fuzzreg::dists::c_factor;
use fuzzreg::error::Error;
use fuzzreg::fuzznum::{trapezoid_to_beta, BetaFuzzyNumber, TrapezoidalFuzzyNumber};
use fuzzreg::gibbs::{run_chains, ChainDraws, SamplerConfig};
use fuzzreg::model::{Family, FuzzyDataset, Link, ModelSpec};
use nalgebra::DMatrix;

pub const FZR_OK: i32 = 0;
pub const FZR_ERR_NULL_POINTER: i32 = 1;
pub const FZR_ERR_INVALID_PARAMETER: i32 = 2;
pub const FZR_ERR_DOMAIN: i32 = 3;
pub const FZR_ERR_DIMENSION: i32 = 4;
/// Quadrature, conversion, convergence or approximation failure.
pub const FZR_ERR_NUMERICAL: i32 = 5;
pub const FZR_ERR_CHAIN_ABORTED: i32 = 6;
pub const FZR_ERR_INSUFFICIENT_DATA: i32 = 7;
pub const FZR_ERR_PARSE: i32 = 8;
pub const FZR_ERR_IO: i32 = 9;
/// A Rust panic was caught at the boundary.
pub const FZR_ERR_PANIC: i32 = 10;
pub const FZR_ERR_BUFFER_TOO_SMALL: i32 = 11;

pub const FZR_FAMILY_BETA: i32 = 0;
pub const FZR_FAMILY_LOGITNORMAL: i32 = 1;
pub const FZR_FAMILY_KUMARASWAMY: i32 = 2;
pub const FZR_FAMILY_LOGNORMAL: i32 = 3;
pub const FZR_FAMILY_LOGBILAL: i32 = 4;
pub const FZR_FAMILY_TRUNCNORMAL: i32 = 5;

/// Use the family's default link.
pub const FZR_LINK_DEFAULT: i32 = -1;
pub const FZR_LINK_LOGIT: i32 = 0;
pub const FZR_LINK_LOG: i32 = 1;
pub const FZR_LINK_IDENTITY: i32 = 2;

pub const FZR_FORMAT_BETA_FUZZY: i32 = 0;
pub const FZR_FORMAT_TRAPEZOIDAL: i32 = 1;

/// Observed fuzzy data with its design matrix.
pub struct FzrDataset(FuzzyDataset);

/// Family, link, bounds and prior.
pub struct FzrModel(ModelSpec);

/// Posterior draws of all chains.
pub struct FzrFit(Vec<ChainDraws>);

/// Sampler settings; obtain defaults from `fzr_sampler_config_default`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FzrSamplerConfig {
    pub chains: usize,
    pub samples: usize,
    pub burnin: usize,
    pub seed: u64,
    pub eps: f64,
    /// Non-zero enables the Metropolis–Hastings correction.
    pub mh_correct: i32,
    pub sn_refresh: usize,
    /// Non-zero runs chains on a thread pool.
    pub parallel: i32,
}

/// Posterior summary of one parameter.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FzrParamSummary {
    pub mean: f64,
    pub sd: f64,
    pub hpdi_lower: f64,
    pub hpdi_upper: f64,
    pub rhat: f64,
    pub ess_bulk: f64,
    pub ess_tail: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn code(err: &Error) -> i32 {
    match err {
        Error::Domain(_) => FZR_ERR_DOMAIN,
        Error::InvalidParameter(_) => FZR_ERR_INVALID_PARAMETER,
        Error::DimensionMismatch { .. } => FZR_ERR_DIMENSION,
        Error::Integration { .. } | Error::Conversion { .. } | Error::NonConvergence(_) | Error::Approximation(_) => {
            FZR_ERR_NUMERICAL
        }
        Error::ChainAborted { .. } => FZR_ERR_CHAIN_ABORTED,
        Error::InsufficientData(_) => FZR_ERR_INSUFFICIENT_DATA,
        Error::Parse { .. } => FZR_ERR_PARSE,
        Error::Io(_) => FZR_ERR_IO,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), (i32, String)>>(f: F) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FZR_OK,
        Ok(Err((c, msg))) => {
            set_error(msg);
            c
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            FZR_ERR_PANIC
        }
    }
}

fn lib<T>(r: fuzzreg::error::Result<T>) -> Result<T, (i32, String)> {
    r.map_err(|e| (code(&e), e.to_string()))
}

fn null(what: &str) -> (i32, String) {
    (FZR_ERR_NULL_POINTER, format!("{what} is null"))
}

fn bad(msg: impl Into<String>) -> (i32, String) {
    (FZR_ERR_INVALID_PARAMETER, msg.into())
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], (i32, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write<T>(out: *mut T, v: T, what: &str) -> Result<(), (i32, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

fn family(v: i32) -> Result<Family, (i32, String)> {
    Ok(match v {
        FZR_FAMILY_BETA => Family::Beta,
        FZR_FAMILY_LOGITNORMAL => Family::LogitNormal,
        FZR_FAMILY_KUMARASWAMY => Family::Kumaraswamy,
        FZR_FAMILY_LOGNORMAL => Family::Lognormal,
        FZR_FAMILY_LOGBILAL => Family::LogBilal,
        FZR_FAMILY_TRUNCNORMAL => Family::TruncatedNormal,
        other => return Err(bad(format!("unknown family code {other}"))),
    })
}

fn link(v: i32, fam: Family) -> Result<Link, (i32, String)> {
    Ok(match v {
        FZR_LINK_DEFAULT => fam.default_link(),
        FZR_LINK_LOGIT => Link::Logit,
        FZR_LINK_LOG => Link::Log,
        FZR_LINK_IDENTITY => Link::Identity,
        other => return Err(bad(format!("unknown link code {other}"))),
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fzr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn fzr_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Builds a dataset from modes `m`, precisions `s` (length `n`) and a
/// row-major `n × n_coef` design matrix `x` (include the intercept column).
///
/// # Safety
/// Pointers must reference arrays of the stated lengths; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fzr_dataset_new(
    m: *const f64,
    s: *const f64,
    n: usize,
    x: *const f64,
    n_coef: usize,
    lb: f64,
    ub: f64,
    out: *mut *mut FzrDataset,
) -> i32 {
    guard(|| {
        let m = slice(m, n, "m")?;
        let s = slice(s, n, "s")?;
        let x = slice(x, n * n_coef, "x")?;
        let obs = m
            .iter()
            .zip(s)
            .map(|(&m, &s)| BetaFuzzyNumber::new(m, s, lb, ub))
            .collect::<fuzzreg::error::Result<Vec<_>>>();
        let data = lib(FuzzyDataset::new(
            lib(obs)?,
            DMatrix::from_row_slice(n, n_coef, x),
            lb,
            ub,
        ))?;
        write(out, Box::into_raw(Box::new(FzrDataset(data))), "out")
    })
}

/// Reads a CSV data file (`FZR_FORMAT_*`); an intercept column is added.
/// Bounds are derived from the file; covariates are z-scored when
/// `standardize` is non-zero.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fzr_dataset_read_csv(
    path: *const c_char,
    format: i32,
    standardize: i32,
    out: *mut *mut FzrDataset,
) -> i32 {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path).to_str().map_err(|_| bad("path is not UTF-8"))?;
        let format = match format {
            FZR_FORMAT_BETA_FUZZY => DataFormat::BetaFuzzy,
            FZR_FORMAT_TRAPEZOIDAL => DataFormat::Trapezoidal,
            other => return Err(bad(format!("unknown format code {other}"))),
        };
        let ing = lib(ingest(Path::new(path), format, None, standardize != 0))?;
        write(out, Box::into_raw(Box::new(FzrDataset(ing.data))), "out")
    })
}

/// Number of units and of coefficients.
///
/// # Safety
/// `data` must be a live handle; out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn fzr_dataset_shape(data: *const FzrDataset, n: *mut usize, n_coef: *mut usize) -> i32 {
    guard(|| {
        let d = data.as_ref().ok_or_else(|| null("data"))?;
        write(n, d.0.n(), "n")?;
        write(n_coef, d.0.n_coef(), "n_coef")
    })
}

/// Shared bounds of the dataset.
///
/// # Safety
/// `data` must be a live handle; out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn fzr_dataset_bounds(data: *const FzrDataset, lb: *mut f64, ub: *mut f64) -> i32 {
    guard(|| {
        let d = data.as_ref().ok_or_else(|| null("data"))?;
        write(lb, d.0.lb, "lb")?;
        write(ub, d.0.ub, "ub")
    })
}

/// # Safety
/// `data` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn fzr_dataset_free(data: *mut FzrDataset) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// Model with default priors; `link` may be `FZR_LINK_DEFAULT`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fzr_model_new(
    family_code: i32,
    link_code: i32,
    lb: f64,
    ub: f64,
    n_coef: usize,
    out: *mut *mut FzrModel,
) -> i32 {
    guard(|| {
        let fam = family(family_code)?;
        let spec = lib(ModelSpec::new(fam, link(link_code, fam)?, lb, ub, n_coef))?;
        write(out, Box::into_raw(Box::new(FzrModel(spec))), "out")
    })
}

/// Normal priors: β ~ N(beta_mean, beta_sd²), φ ~ N(phi_mean, phi_sd²).
///
/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fzr_model_set_prior(
    model: *mut FzrModel,
    beta_mean: f64,
    beta_sd: f64,
    phi_mean: f64,
    phi_sd: f64,
) -> i32 {
    guard(|| {
        let m = model.as_mut().ok_or_else(|| null("model"))?;
        let prior = fuzzreg::model::PriorSpec {
            beta_mean,
            beta_sd,
            phi_mean,
            phi_sd,
        };
        m.0 = lib(m.0.clone().with_prior(prior))?;
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn fzr_model_free(model: *mut FzrModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Default sampler settings.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fzr_sampler_config_default(out: *mut FzrSamplerConfig) -> i32 {
    guard(|| {
        let d = SamplerConfig::default();
        write(
            out,
            FzrSamplerConfig {
                chains: d.chains,
                samples: d.samples,
                burnin: d.burnin,
                seed: d.seed,
                eps: d.eps,
                mh_correct: d.mh_correct as i32,
                sn_refresh: d.sn_refresh,
                parallel: d.parallel as i32,
            },
            "out",
        )
    })
}

/// Runs the sampler.
///
/// # Safety
/// `data`, `model` and `cfg` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fzr_fit(
    data: *const FzrDataset,
    model: *const FzrModel,
    cfg: *const FzrSamplerConfig,
    out: *mut *mut FzrFit,
) -> i32 {
    guard(|| {
        let d = data.as_ref().ok_or_else(|| null("data"))?;
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let c = cfg.as_ref().ok_or_else(|| null("cfg"))?;
        let sampler = SamplerConfig {
            chains: c.chains,
            samples: c.samples,
            burnin: c.burnin,
            seed: c.seed,
            eps: c.eps,
            mh_correct: c.mh_correct != 0,
            sn_refresh: c.sn_refresh,
            parallel: c.parallel != 0,
            store_latent: false,
            ..SamplerConfig::default()
        };
        let chains = lib(run_chains(&d.0, &m.0, &sampler))?;
        write(out, Box::into_raw(Box::new(FzrFit(chains))), "out")
    })
}

/// Chains, retained draws per chain and parameters per draw (coefficients, then φ).
///
/// # Safety
/// `fit` must be live; out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn fzr_fit_shape(
    fit: *const FzrFit,
    chains: *mut usize,
    draws: *mut usize,
    params: *mut usize,
) -> i32 {
    guard(|| {
        let f = fit.as_ref().ok_or_else(|| null("fit"))?;
        write(chains, f.0.len(), "chains")?;
        write(draws, f.0.first().map_or(0, |c| c.theta.nrows()), "draws")?;
        write(params, f.0.first().map_or(0, |c| c.theta.ncols()), "params")
    })
}

/// Copies the draws of `chain` row-major (draws × params) into `buf`.
///
/// # Safety
/// `fit` must be live; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fzr_fit_draws(fit: *const FzrFit, chain: usize, buf: *mut f64, len: usize) -> i32 {
    guard(|| {
        let f = fit.as_ref().ok_or_else(|| null("fit"))?;
        let ch =
            f.0.get(chain)
                .ok_or_else(|| bad(format!("chain {chain} out of range")))?;
        let (r, c) = ch.theta.shape();
        if len < r * c {
            return Err((
                FZR_ERR_BUFFER_TOO_SMALL,
                format!("buffer holds {len} values, need {}", r * c),
            ));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        for i in 0..r {
            for j in 0..c {
                *buf.add(i * c + j) = ch.theta[(i, j)];
            }
        }
        Ok(())
    })
}

/// Posterior summary of parameter `param` over all chains.
///
/// # Safety
/// `fit` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fzr_fit_summary(fit: *const FzrFit, param: usize, out: *mut FzrParamSummary) -> i32 {
    guard(|| {
        let f = fit.as_ref().ok_or_else(|| null("fit"))?;
        let summary = lib(summarize(&f.0))?;
        let p = summary
            .params
            .get(param)
            .ok_or_else(|| bad(format!("parameter {param} out of range")))?;
        write(
            out,
            FzrParamSummary {
                mean: p.mean,
                sd: p.sd,
                hpdi_lower: p.hpdi.lo,
                hpdi_upper: p.hpdi.hi,
                rhat: p.rhat,
                ess_bulk: p.ess_bulk,
                ess_tail: p.ess_tail,
            },
            "out",
        )
    })
}

/// # Safety
/// `fit` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn fzr_fit_free(fit: *mut FzrFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// Scaling factor c = E[1/(S + 1)] for S ~ Gamma(shape, scale).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fzr_c_factor(alpha_s: f64, beta_s: f64, out: *mut f64) -> i32 {
    guard(|| write(out, lib(c_factor(alpha_s, beta_s))?, "out"))
}

/// Centroid, Kaufman index and α-cut of a Beta fuzzy number.
///
/// # Safety
/// Out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn fzr_bfn_statistics(
    m: f64,
    s: f64,
    lb: f64,
    ub: f64,
    alpha: f64,
    centroid: *mut f64,
    kaufman: *mut f64,
    cut_lower: *mut f64,
    cut_upper: *mut f64,
) -> i32 {
    guard(|| {
        let bf = lib(BetaFuzzyNumber::new(m, s, lb, ub))?;
        let cut = bf.alpha_cut(alpha);
        write(centroid, lib(bf.centroid())?, "centroid")?;
        write(kaufman, lib(bf.kaufman_index())?, "kaufman")?;
        write(cut_lower, cut.lo, "cut_lower")?;
        write(cut_upper, cut.hi, "cut_upper")
    })
}

/// Beta fuzzy number on [a1, a4] closest in L² to the trapezoid.
///
/// # Safety
/// Out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn fzr_trapezoid_to_beta(a1: f64, a2: f64, a3: f64, a4: f64, m: *mut f64, s: *mut f64) -> i32 {
    guard(|| {
        let tp = lib(TrapezoidalFuzzyNumber::new(a1, a2, a3, a4))?;
        let bf = lib(trapezoid_to_beta(&tp))?;
        write(m, bf.m, "m")?;
        write(s, bf.s, "s")
    })
}
