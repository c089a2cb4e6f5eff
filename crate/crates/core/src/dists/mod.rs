//! Densities, log-density derivatives in the outcome, and samplers for the
//! distributions used by the model and the sampler.

pub mod cfactor;
pub mod skewnormal;
pub mod special;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{domain, invalid, Result};
use crate::quad::{self, QuadConfig};
use special::{ln_gamma, logistic, logit, std_normal_cdf, std_normal_quantile};

pub use cfactor::c_factor;
pub use skewnormal::{sample_skewnormal, SkewNormalParams};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const LN_6: f64 = 1.791_759_469_228_055;

/// Unit-interval draws are kept this far from 0 and 1 so that log terms and
/// polygamma evaluations of downstream updates stay finite.
pub(crate) const UNIT_EDGE: f64 = 1e-12;

pub(crate) fn clamp_unit(u: f64) -> f64 {
    u.clamp(UNIT_EDGE, 1.0 - UNIT_EDGE)
}

/// Tag identifying a distribution family without its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyTag {
    Beta,
    Beta4P,
    LogitNormal,
    Kumaraswamy,
    LogBilal,
    TruncatedNormal,
    Lognormal,
    Gamma,
}

/// A fully parameterized univariate distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dist {
    /// Beta with shapes `a`, `b` on (0, 1).
    Beta { a: f64, b: f64 },
    /// Beta with shapes `a`, `b` rescaled to (lb, ub).
    Beta4P { a: f64, b: f64, lb: f64, ub: f64 },
    /// logistic(N(mu, sigma²)) on (0, 1).
    LogitNormal { mu: f64, sigma: f64 },
    /// Kumaraswamy with density a b y^(a−1) (1 − y^a)^(b−1) on (0, 1).
    Kumaraswamy { a: f64, b: f64 },
    /// exp(−X) for X Bilal(theta); density (6/θ) y^(2/θ−1) (1 − y^(1/θ)).
    LogBilal { theta: f64 },
    /// N(mu, sigma²) truncated to (lo, hi).
    TruncatedNormal { lo: f64, hi: f64, mu: f64, sigma: f64 },
    /// exp(N(mu, sigma²)).
    Lognormal { mu: f64, sigma: f64 },
    /// Gamma in shape–scale form.
    Gamma { shape: f64, scale: f64 },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        invalid(format!("{name} must be positive and finite, got {v}"))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        invalid(format!("{name} must be finite, got {v}"))
    }
}

impl Dist {
    pub fn tag(&self) -> FamilyTag {
        match self {
            Dist::Beta { .. } => FamilyTag::Beta,
            Dist::Beta4P { .. } => FamilyTag::Beta4P,
            Dist::LogitNormal { .. } => FamilyTag::LogitNormal,
            Dist::Kumaraswamy { .. } => FamilyTag::Kumaraswamy,
            Dist::LogBilal { .. } => FamilyTag::LogBilal,
            Dist::TruncatedNormal { .. } => FamilyTag::TruncatedNormal,
            Dist::Lognormal { .. } => FamilyTag::Lognormal,
            Dist::Gamma { .. } => FamilyTag::Gamma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Dist::Beta { a, b } | Dist::Kumaraswamy { a, b } => {
                positive("a", a)?;
                positive("b", b)
            }
            Dist::Beta4P { a, b, lb, ub } => {
                positive("a", a)?;
                positive("b", b)?;
                finite("lb", lb)?;
                finite("ub", ub)?;
                if lb < ub {
                    Ok(())
                } else {
                    invalid(format!("bounds must satisfy lb < ub, got ({lb}, {ub})"))
                }
            }
            Dist::LogitNormal { mu, sigma } | Dist::Lognormal { mu, sigma } => {
                finite("mu", mu)?;
                positive("sigma", sigma)
            }
            Dist::LogBilal { theta } => positive("theta", theta),
            Dist::TruncatedNormal { lo, hi, mu, sigma } => {
                finite("mu", mu)?;
                positive("sigma", sigma)?;
                if lo < hi && !lo.is_nan() && !hi.is_nan() {
                    Ok(())
                } else {
                    invalid(format!("truncation requires lo < hi, got ({lo}, {hi})"))
                }
            }
            Dist::Gamma { shape, scale } => {
                positive("shape", shape)?;
                positive("scale", scale)
            }
        }
    }

    /// Closure of the support.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Dist::Beta { .. } | Dist::LogitNormal { .. } | Dist::Kumaraswamy { .. } | Dist::LogBilal { .. } => {
                (0.0, 1.0)
            }
            Dist::Beta4P { lb, ub, .. } => (lb, ub),
            Dist::TruncatedNormal { lo, hi, .. } => (lo, hi),
            Dist::Lognormal { .. } | Dist::Gamma { .. } => (0.0, f64::INFINITY),
        }
    }

    fn interior(&self, y: f64) -> bool {
        let (lo, hi) = self.support();
        y > lo && y < hi
    }

    /// Log density; negative infinity outside the open support.
    pub fn logpdf(&self, y: f64) -> f64 {
        if !self.interior(y) {
            return f64::NEG_INFINITY;
        }
        match *self {
            Dist::Beta { a, b } => beta_logpdf(a, b, y),
            Dist::Beta4P { a, b, lb, ub } => {
                let w = ub - lb;
                beta_logpdf(a, b, (y - lb) / w) - w.ln()
            }
            Dist::LogitNormal { mu, sigma } => {
                let z = (logit(y) - mu) / sigma;
                -0.5 * z * z - sigma.ln() - LN_SQRT_2PI - y.ln() - (-y).ln_1p()
            }
            Dist::Kumaraswamy { a, b } => a.ln() + b.ln() + (a - 1.0) * y.ln() + (b - 1.0) * one_minus_pow(a, y).ln(),
            Dist::LogBilal { theta } => {
                let c = 1.0 / theta;
                LN_6 - theta.ln() + (2.0 * c - 1.0) * y.ln() + one_minus_pow(c, y).ln()
            }
            Dist::TruncatedNormal { lo, hi, mu, sigma } => {
                let z = (y - mu) / sigma;
                -0.5 * z * z - LN_SQRT_2PI - sigma.ln() - truncnorm_ln_mass(lo, hi, mu, sigma)
            }
            Dist::Lognormal { mu, sigma } => {
                let ly = y.ln();
                let z = (ly - mu) / sigma;
                -0.5 * z * z - LN_SQRT_2PI - sigma.ln() - ly
            }
            Dist::Gamma { shape, scale } => (shape - 1.0) * y.ln() - y / scale - ln_gamma(shape) - shape * scale.ln(),
        }
    }

    pub fn pdf(&self, y: f64) -> f64 {
        self.logpdf(y).exp()
    }

    fn require_interior(&self, y: f64) -> Result<()> {
        if self.interior(y) {
            Ok(())
        } else {
            let (lo, hi) = self.support();
            domain(format!("y = {y} is not interior to ({lo}, {hi})"))
        }
    }

    /// d/dy ln f(y).
    pub fn dlogpdf_dy(&self, y: f64) -> Result<f64> {
        self.require_interior(y)?;
        Ok(self.log_derivatives(y).0)
    }

    /// d²/dy² ln f(y).
    pub fn d2logpdf_dy2(&self, y: f64) -> Result<f64> {
        self.require_interior(y)?;
        Ok(self.log_derivatives(y).1)
    }

    /// First and second log-density derivatives at an interior point.
    pub(crate) fn log_derivatives(&self, y: f64) -> (f64, f64) {
        match *self {
            Dist::Beta { a, b } => beta_log_derivatives(a, b, y),
            Dist::Beta4P { a, b, lb, ub } => {
                let w = ub - lb;
                let (d1, d2) = beta_log_derivatives(a, b, (y - lb) / w);
                (d1 / w, d2 / (w * w))
            }
            Dist::LogitNormal { mu, sigma } => {
                let one_m = 1.0 - y;
                let z = logit(y);
                let s2 = sigma * sigma;
                let dz = 1.0 / (y * one_m);
                let d2z = -(1.0 - 2.0 * y) * dz * dz;
                let d1 = -1.0 / y + 1.0 / one_m - (z - mu) / s2 * dz;
                let d2 = 1.0 / (y * y) + 1.0 / (one_m * one_m) - (dz * dz + (z - mu) * d2z) / s2;
                (d1, d2)
            }
            Dist::Kumaraswamy { a, b } => {
                let (t1, t2) = log_one_minus_pow_derivatives(a, y);
                ((a - 1.0) / y + (b - 1.0) * t1, -(a - 1.0) / (y * y) + (b - 1.0) * t2)
            }
            Dist::LogBilal { theta } => {
                let c = 1.0 / theta;
                let (t1, t2) = log_one_minus_pow_derivatives(c, y);
                ((2.0 * c - 1.0) / y + t1, -(2.0 * c - 1.0) / (y * y) + t2)
            }
            Dist::TruncatedNormal { mu, sigma, .. } => {
                let s2 = sigma * sigma;
                (-(y - mu) / s2, -1.0 / s2)
            }
            Dist::Lognormal { mu, sigma } => {
                let s2 = sigma * sigma;
                let r = y.ln() - mu;
                (-1.0 / y - r / (s2 * y), (1.0 - (1.0 - r) / s2) / (y * y))
            }
            Dist::Gamma { shape, scale } => ((shape - 1.0) / y - 1.0 / scale, -(shape - 1.0) / (y * y)),
        }
    }

    /// One draw. Bounded draws are kept strictly inside the support.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Dist::Beta { a, b } => sample_unit_beta(a, b, rng),
            Dist::Beta4P { a, b, lb, ub } => lb + (ub - lb) * sample_unit_beta(a, b, rng),
            Dist::LogitNormal { mu, sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                clamp_unit(logistic(mu + sigma * z))
            }
            Dist::Kumaraswamy { a, b } => {
                let u: f64 = rng.random();
                clamp_unit((1.0 - (1.0 - u).powf(1.0 / b)).powf(1.0 / a))
            }
            Dist::LogBilal { theta } => {
                // y^(1/θ) has CDF 3w² − 2w³, i.e. it is Beta(2, 2).
                let w = sample_unit_beta(2.0, 2.0, rng);
                clamp_unit(w.powf(theta))
            }
            Dist::TruncatedNormal { lo, hi, mu, sigma } => sample_truncnorm(lo, hi, mu, sigma, rng),
            Dist::Lognormal { mu, sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                (mu + sigma * z).exp()
            }
            Dist::Gamma { shape, scale } => sample_gamma(GammaParams::new(shape, scale).expect("validated"), rng),
        }
    }

    /// Mean, in closed form where one exists and by quadrature otherwise.
    pub fn mean(&self) -> Result<f64> {
        Ok(self.moments()?.0)
    }

    pub fn variance(&self) -> Result<f64> {
        Ok(self.moments()?.1)
    }

    /// (mean, variance).
    pub fn moments(&self) -> Result<(f64, f64)> {
        self.validate()?;
        Ok(match *self {
            Dist::Beta { a, b } => beta_moments(a, b),
            Dist::Beta4P { a, b, lb, ub } => {
                let (m, v) = beta_moments(a, b);
                let w = ub - lb;
                (lb + w * m, w * w * v)
            }
            Dist::LogitNormal { mu, sigma } => {
                let cfg = QuadConfig::with_rel_tol(1e-11);
                let lo = -14.0;
                let hi = 14.0;
                let breaks = quad::uniform_breaks(lo, hi, 8);
                let weight = |t: f64| special::std_normal_pdf(t);
                let m1 = quad::integrate(|t| logistic(mu + sigma * t) * weight(t), lo, hi, &breaks, cfg)?;
                let m2 = quad::integrate(|t| logistic(mu + sigma * t).powi(2) * weight(t), lo, hi, &breaks, cfg)?;
                (m1, (m2 - m1 * m1).max(0.0))
            }
            Dist::Kumaraswamy { a, b } => {
                let raw = |k: f64| (b.ln() + ln_gamma(1.0 + k / a) + ln_gamma(b) - ln_gamma(1.0 + k / a + b)).exp();
                let m1 = raw(1.0);
                (m1, (raw(2.0) - m1 * m1).max(0.0))
            }
            Dist::LogBilal { theta } => {
                let m1 = 6.0 / ((2.0 + theta) * (3.0 + theta));
                let m2 = 6.0 / ((2.0 + 2.0 * theta) * (3.0 + 2.0 * theta));
                (m1, (m2 - m1 * m1).max(0.0))
            }
            Dist::TruncatedNormal { lo, hi, mu, sigma } => truncnorm_moments(lo, hi, mu, sigma),
            Dist::Lognormal { mu, sigma } => {
                let s2 = sigma * sigma;
                ((mu + 0.5 * s2).exp(), s2.exp_m1() * (2.0 * mu + s2).exp())
            }
            Dist::Gamma { shape, scale } => (shape * scale, shape * scale * scale),
        })
    }
}

pub(crate) fn beta_logpdf(a: f64, b: f64, u: f64) -> f64 {
    (a - 1.0) * u.ln() + (b - 1.0) * (-u).ln_1p() - ln_beta(a, b)
}

pub(crate) fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

fn beta_log_derivatives(a: f64, b: f64, u: f64) -> (f64, f64) {
    let v = 1.0 - u;
    (
        (a - 1.0) / u - (b - 1.0) / v,
        -(a - 1.0) / (u * u) - (b - 1.0) / (v * v),
    )
}

fn beta_moments(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (a / s, a * b / (s * s * (s + 1.0)))
}

/// 1 − y^c, accurate when y^c is close to one.
fn one_minus_pow(c: f64, y: f64) -> f64 {
    -(c * y.ln()).exp_m1()
}

/// Derivatives of ln(1 − y^c) in y.
fn log_one_minus_pow_derivatives(c: f64, y: f64) -> (f64, f64) {
    let yc = y.powf(c);
    let om = one_minus_pow(c, y);
    let d1 = -c * yc / (y * om);
    let d2 = -c * yc * ((c - 1.0) + yc) / (y * y * om * om);
    (d1, d2)
}

/// ln(Φ(β) − Φ(α)) for standardized truncation limits, using the tail that
/// avoids cancellation.
pub(crate) fn truncnorm_ln_mass(lo: f64, hi: f64, mu: f64, sigma: f64) -> f64 {
    let alpha = (lo - mu) / sigma;
    let beta = (hi - mu) / sigma;
    if alpha > 0.0 {
        (std_normal_cdf(-alpha) - std_normal_cdf(-beta)).ln()
    } else {
        (std_normal_cdf(beta) - std_normal_cdf(alpha)).ln()
    }
}

fn truncnorm_moments(lo: f64, hi: f64, mu: f64, sigma: f64) -> (f64, f64) {
    let alpha = (lo - mu) / sigma;
    let beta = (hi - mu) / sigma;
    let z = truncnorm_ln_mass(lo, hi, mu, sigma).exp();
    let pa = special::std_normal_pdf(alpha);
    let pb = special::std_normal_pdf(beta);
    let apa = if alpha.is_finite() { alpha * pa } else { 0.0 };
    let bpb = if beta.is_finite() { beta * pb } else { 0.0 };
    let r = (pa - pb) / z;
    let mean = mu + sigma * r;
    let var = sigma * sigma * (1.0 + (apa - bpb) / z - r * r);
    (mean, var.max(0.0))
}

pub(crate) fn sample_unit_beta<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    let d = rand_distr::Beta::new(a, b).expect("beta shapes validated");
    clamp_unit(d.sample(rng))
}

pub(crate) fn sample_truncnorm<R: Rng + ?Sized>(lo: f64, hi: f64, mu: f64, sigma: f64, rng: &mut R) -> f64 {
    let alpha = (lo - mu) / sigma;
    let beta = (hi - mu) / sigma;
    let u: f64 = rng.random();
    // Work in whichever tail keeps the CDF values away from 1.
    let z = if alpha > 0.0 {
        let pa = std_normal_cdf(-beta);
        let pb = std_normal_cdf(-alpha);
        -std_normal_quantile(pa + u * (pb - pa))
    } else {
        let pa = std_normal_cdf(alpha);
        let pb = std_normal_cdf(beta);
        std_normal_quantile(pa + u * (pb - pa))
    };
    let x = mu + sigma * z;
    let width = hi - lo;
    let eps = if width.is_finite() { UNIT_EDGE * width } else { 0.0 };
    x.clamp(lo + eps, hi - eps)
}

/// Four-parameter Beta in location–precision form.
///
/// The induced shapes are `a = σλ*` and `b = σ − σλ*` with `λ*` the location
/// rescaled to (0, 1), so `λ` is the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beta4PParams {
    pub lambda: f64,
    pub sigma: f64,
    pub lb: f64,
    pub ub: f64,
}

impl Beta4PParams {
    pub fn new(lambda: f64, sigma: f64, lb: f64, ub: f64) -> Result<Self> {
        if !(lb < ub) || !lb.is_finite() || !ub.is_finite() {
            return invalid(format!("bounds must satisfy lb < ub, got ({lb}, {ub})"));
        }
        if !(lambda > lb && lambda < ub) {
            return invalid(format!("lambda = {lambda} must lie in ({lb}, {ub})"));
        }
        positive("sigma", sigma)?;
        Ok(Self { lambda, sigma, lb, ub })
    }

    pub fn unit_location(&self) -> f64 {
        (self.lambda - self.lb) / (self.ub - self.lb)
    }

    pub fn shapes(&self) -> (f64, f64) {
        let l = self.unit_location();
        (self.sigma * l, self.sigma - self.sigma * l)
    }

    pub fn dist(&self) -> Dist {
        let (a, b) = self.shapes();
        Dist::Beta4P {
            a,
            b,
            lb: self.lb,
            ub: self.ub,
        }
    }
}

/// Gamma in shape–scale form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaParams {
    pub alpha: f64,
    pub beta: f64,
}

impl GammaParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        positive("alpha", alpha)?;
        positive("beta", beta)?;
        Ok(Self { alpha, beta })
    }

    pub fn dist(&self) -> Dist {
        Dist::Gamma {
            shape: self.alpha,
            scale: self.beta,
        }
    }
}

pub fn sample_beta4p<R: Rng + ?Sized>(params: &Beta4PParams, rng: &mut R) -> f64 {
    let (a, b) = params.shapes();
    params.lb + (params.ub - params.lb) * sample_unit_beta(a, b, rng)
}

pub fn sample_gamma<R: Rng + ?Sized>(params: GammaParams, rng: &mut R) -> f64 {
    let d = rand_distr::Gamma::new(params.alpha, params.beta).expect("gamma params validated");
    d.sample(rng).max(f64::MIN_POSITIVE)
}
