//! The two-stage generative model: a crisp outcome y from a regression family,
//! a fuzziness precision s from a Gamma law, and an observed fuzzy mode m drawn
//! around y by a four-parameter Beta.
//!
//! Internally everything runs on the unit scale u = (y − lb)/(ub − lb).

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::dists::special::{self, logistic, logit, std_normal_cdf};
use crate::dists::{self, c_factor, clamp_unit, sample_gamma, Dist, GammaParams, UNIT_EDGE};
use crate::error::{invalid, Error, Result};
use crate::fuzznum::{BetaFuzzyNumber, Interval};

/// Regression family of the latent outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Beta,
    LogitNormal,
    Kumaraswamy,
    Lognormal,
    LogBilal,
    TruncatedNormal,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Beta,
        Family::LogitNormal,
        Family::Kumaraswamy,
        Family::Lognormal,
        Family::LogBilal,
        Family::TruncatedNormal,
    ];

    pub fn default_link(self) -> Link {
        match self {
            Family::Lognormal => Link::Log,
            _ => Link::Logit,
        }
    }

    pub fn bounded(self) -> bool {
        self != Family::Lognormal
    }

    /// Whether `link` is legal for this family.
    pub fn accepts(self, link: Link) -> bool {
        match self {
            Family::Lognormal => matches!(link, Link::Log | Link::Identity),
            _ => matches!(link, Link::Logit | Link::Identity),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Beta => "beta",
            Family::LogitNormal => "logitnormal",
            Family::Kumaraswamy => "kumaraswamy",
            Family::Lognormal => "lognormal",
            Family::LogBilal => "logbilal",
            Family::TruncatedNormal => "truncnormal",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "beta" => Family::Beta,
            "logitnormal" | "lgn" => Family::LogitNormal,
            "kumaraswamy" | "kuma" => Family::Kumaraswamy,
            "lognormal" | "ln" => Family::Lognormal,
            "logbilal" | "lbl" => Family::LogBilal,
            "truncnormal" | "truncatednormal" | "tn" => Family::TruncatedNormal,
            other => return invalid(format!("unknown family '{other}'")),
        })
    }
}

/// Link g with η = g(μ).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Link {
    Logit,
    Log,
    Identity,
}

impl Link {
    pub fn inverse(self, eta: f64) -> f64 {
        match self {
            Link::Logit => logistic(eta),
            Link::Log => eta.exp(),
            Link::Identity => eta,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Link::Logit => "logit",
            Link::Log => "log",
            Link::Identity => "identity",
        }
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Link {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "logit" => Link::Logit,
            "log" => Link::Log,
            "identity" => Link::Identity,
            other => return invalid(format!("unknown link '{other}'")),
        })
    }
}

/// Independent Gaussian priors on the coefficients and on the unconstrained φ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorSpec {
    pub beta_mean: f64,
    pub beta_sd: f64,
    pub phi_mean: f64,
    pub phi_sd: f64,
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self {
            beta_mean: 0.0,
            beta_sd: 10.0,
            phi_mean: 0.0,
            phi_sd: 5.0,
        }
    }
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = self.beta_sd > 0.0
            && self.phi_sd > 0.0
            && self.beta_sd.is_finite()
            && self.phi_sd.is_finite()
            && self.beta_mean.is_finite()
            && self.phi_mean.is_finite();
        if ok {
            Ok(())
        } else {
            invalid("prior means must be finite and prior sds positive")
        }
    }

    /// Log prior density up to a constant, for θ = (β, φ).
    pub fn log_density(&self, theta: &DVector<f64>) -> f64 {
        let k = theta.len() - 1;
        let mut acc = 0.0;
        for j in 0..k {
            let z = (theta[j] - self.beta_mean) / self.beta_sd;
            acc -= 0.5 * z * z;
        }
        let z = (theta[k] - self.phi_mean) / self.phi_sd;
        acc - 0.5 * z * z
    }

    /// Prior mean vector of (β, φ) for `n_coef` coefficients.
    pub fn mean_vector(&self, n_coef: usize) -> DVector<f64> {
        let mut v = DVector::from_element(n_coef + 1, self.beta_mean);
        v[n_coef] = self.phi_mean;
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub family: Family,
    pub link: Link,
    pub lb: f64,
    pub ub: f64,
    /// Number of regression coefficients, intercept included.
    pub n_coef: usize,
    pub prior: PriorSpec,
}

impl ModelSpec {
    pub fn new(family: Family, link: Link, lb: f64, ub: f64, n_coef: usize) -> Result<Self> {
        let spec = Self {
            family,
            link,
            lb,
            ub,
            n_coef,
            prior: PriorSpec::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_prior(mut self, prior: PriorSpec) -> Result<Self> {
        prior.validate()?;
        self.prior = prior;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lb.is_finite() && self.ub.is_finite() && self.lb < self.ub) {
            return invalid(format!(
                "bounds must be finite with lb < ub, got ({}, {})",
                self.lb, self.ub
            ));
        }
        if self.n_coef == 0 {
            return invalid("the linear predictor needs at least one coefficient");
        }
        if !self.family.accepts(self.link) {
            return invalid(format!(
                "link '{}' is not available for family '{}'",
                self.link, self.family
            ));
        }
        if self.family == Family::Lognormal && self.lb < 0.0 {
            return invalid(format!("lognormal outcomes need lb >= 0, got {}", self.lb));
        }
        self.prior.validate()
    }

    pub fn width(&self) -> f64 {
        self.ub - self.lb
    }

    pub fn to_unit(&self, y: f64) -> f64 {
        (y - self.lb) / self.width()
    }

    pub fn from_unit(&self, u: f64) -> f64 {
        self.lb + self.width() * u
    }
}

/// Regression parameters: coefficients β and the unconstrained dispersion φ.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaY {
    pub beta: DVector<f64>,
    pub phi: f64,
}

impl ThetaY {
    pub fn new(beta: Vec<f64>, phi: f64) -> Self {
        Self {
            beta: DVector::from_vec(beta),
            phi,
        }
    }

    /// Stacked (β, φ).
    pub fn to_vector(&self) -> DVector<f64> {
        let k = self.beta.len();
        let mut v = DVector::zeros(k + 1);
        v.rows_mut(0, k).copy_from(&self.beta);
        v[k] = self.phi;
        v
    }

    pub fn from_vector(v: &DVector<f64>) -> Self {
        let k = v.len() - 1;
        Self {
            beta: v.rows(0, k).into_owned(),
            phi: v[k],
        }
    }
}

/// Gamma law of the fuzziness precision, shape–scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaS {
    pub alpha_s: f64,
    pub beta_s: f64,
}

impl ThetaS {
    pub fn new(alpha_s: f64, beta_s: f64) -> Result<Self> {
        GammaParams::new(alpha_s, beta_s)?;
        Ok(Self { alpha_s, beta_s })
    }

    pub fn gamma(&self) -> GammaParams {
        GammaParams {
            alpha: self.alpha_s,
            beta: self.beta_s,
        }
    }
}

/// Observed fuzzy data with covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyDataset {
    pub observations: Vec<BetaFuzzyNumber>,
    /// n × J design matrix.
    pub x: DMatrix<f64>,
    pub lb: f64,
    pub ub: f64,
    /// Latent outcomes on the response scale, when known (simulation).
    pub latent: Option<Vec<f64>>,
}

impl FuzzyDataset {
    /// Builds a dataset on the shared bounds `(lb, ub)`. Observations with
    /// other bounds keep their mode and precision and are re-expressed on
    /// the shared support.
    pub fn new(observations: Vec<BetaFuzzyNumber>, x: DMatrix<f64>, lb: f64, ub: f64) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::InsufficientData("dataset has no observations".into()));
        }
        if x.nrows() != observations.len() {
            return Err(Error::DimensionMismatch {
                expected: observations.len(),
                got: x.nrows(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return invalid("covariate matrix has non-finite entries");
        }
        let observations = observations
            .into_iter()
            .map(|o| BetaFuzzyNumber::new(o.m, o.s, lb, ub))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            observations,
            x,
            lb,
            ub,
            latent: None,
        })
    }

    pub fn n(&self) -> usize {
        self.observations.len()
    }

    pub fn n_coef(&self) -> usize {
        self.x.ncols()
    }

    pub fn precisions(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.s).collect()
    }

    /// Modes on the unit scale.
    pub fn unit_modes(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.unit_mode()).collect()
    }
}

/// η = Xβ.
pub fn linear_predictor(x: &DMatrix<f64>, beta: &DVector<f64>) -> Result<DVector<f64>> {
    if x.ncols() != beta.len() {
        return Err(Error::DimensionMismatch {
            expected: x.ncols(),
            got: beta.len(),
        });
    }
    Ok(x * beta)
}

/// μ = g⁻¹(η) on the response scale; bounded families are mapped into (lb, ub).
pub fn mean_from_eta(eta: &DVector<f64>, spec: &ModelSpec) -> DVector<f64> {
    eta.map(|e| {
        let mu = spec.link.inverse(e);
        if spec.family.bounded() {
            spec.from_unit(mu)
        } else {
            mu
        }
    })
}

/// Distribution of the latent outcome for one unit, expressed on the unit scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatentLaw {
    /// The family law. Bounded families live on (0, 1); the lognormal on the
    /// response scale, truncated to (lb, ub).
    pub dist: Dist,
    pub lb: f64,
    pub ub: f64,
    ln_mass: f64,
}

impl LatentLaw {
    /// A bounded-family law used directly on (0, 1).
    pub fn on_unit(dist: Dist) -> Result<Self> {
        dist.validate()?;
        if dist.support() != (0.0, 1.0) {
            return invalid("law must live on (0, 1)");
        }
        Ok(Self {
            dist,
            lb: 0.0,
            ub: 1.0,
            ln_mass: 0.0,
        })
    }

    fn truncated(&self) -> bool {
        matches!(self.dist, Dist::Lognormal { .. })
    }

    fn width(&self) -> f64 {
        self.ub - self.lb
    }

    /// Log density of u = (y − lb)/(ub − lb).
    pub fn unit_logpdf(&self, u: f64) -> f64 {
        if !(u > 0.0 && u < 1.0) {
            return f64::NEG_INFINITY;
        }
        if self.truncated() {
            let w = self.width();
            w.ln() + self.dist.logpdf(self.lb + w * u) - self.ln_mass
        } else {
            self.dist.logpdf(u)
        }
    }

    /// Log density on the response scale.
    pub fn logpdf(&self, y: f64) -> f64 {
        self.unit_logpdf((y - self.lb) / self.width()) - self.width().ln()
    }

    /// First and second derivatives of the unit-scale log density.
    pub fn unit_log_derivatives(&self, u: f64) -> (f64, f64) {
        if self.truncated() {
            let w = self.width();
            let (d1, d2) = self.dist.log_derivatives(self.lb + w * u);
            (w * d1, w * w * d2)
        } else {
            self.dist.log_derivatives(u)
        }
    }

    pub fn sample_unit<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.dist {
            Dist::Lognormal { mu, sigma } => {
                let t = dists::sample_truncnorm(self.lb.ln(), self.ub.ln(), mu, sigma, rng);
                clamp_unit((t.exp() - self.lb) / self.width())
            }
            d => clamp_unit(d.sample(rng)),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.lb + self.width() * self.sample_unit(rng)
    }

    /// Mean and variance of u.
    pub fn unit_moments(&self) -> Result<(f64, f64)> {
        match self.dist {
            Dist::Lognormal { mu, sigma } => {
                // E[e^{kT}] for T ~ N(μ, σ²) truncated to (ln lb, ln ub).
                let (a, b) = ((self.lb.ln() - mu) / sigma, (self.ub.ln() - mu) / sigma);
                let z = std_normal_cdf(b) - std_normal_cdf(a);
                let raw = |k: f64| {
                    (k * mu + 0.5 * k * k * sigma * sigma).exp()
                        * (std_normal_cdf(b - k * sigma) - std_normal_cdf(a - k * sigma))
                        / z
                };
                let (m1, m2) = (raw(1.0), raw(2.0));
                let w = self.width();
                Ok(((m1 - self.lb) / w, ((m2 - m1 * m1).max(0.0)) / (w * w)))
            }
            d => d.moments(),
        }
    }
}

/// Location μ on the family's natural scale (unit scale for bounded families).
fn location(spec: &ModelSpec, eta: f64) -> Result<f64> {
    let mu = spec.link.inverse(eta);
    let ok = match (spec.family, spec.link) {
        (Family::TruncatedNormal, Link::Identity) => mu.is_finite(),
        (Family::Lognormal, _) => mu > 0.0 && mu.is_finite(),
        _ => mu > 0.0 && mu < 1.0,
    };
    if ok {
        Ok(mu)
    } else {
        invalid(format!(
            "location {mu} from eta {eta} is outside the domain of family '{}'",
            spec.family
        ))
    }
}

/// Parameters of unit i's latent law given its linear predictor `eta`.
pub fn family_params(spec: &ModelSpec, phi: f64, eta: f64) -> Result<LatentLaw> {
    let mu = location(spec, eta)?;
    if !phi.is_finite() {
        return invalid(format!("phi must be finite, got {phi}"));
    }
    let mut ln_mass = 0.0;
    let dist = match spec.family {
        Family::Beta => {
            let prec = phi.exp();
            Dist::Beta {
                a: mu * prec,
                b: (1.0 - mu) * prec,
            }
        }
        Family::LogitNormal => Dist::LogitNormal {
            mu: logit(mu),
            sigma: phi.exp(),
        },
        Family::Kumaraswamy => {
            let nu = logistic(phi);
            // Chosen so that the median is μ.
            let a = (-(0.5f64.powf(nu))).ln_1p() / mu.ln();
            Dist::Kumaraswamy { a, b: 1.0 / nu }
        }
        Family::LogBilal => Dist::LogBilal {
            theta: 0.5 * (-5.0 + (1.0 + 24.0 / mu).sqrt()),
        },
        Family::TruncatedNormal => Dist::TruncatedNormal {
            lo: 0.0,
            hi: 1.0,
            mu,
            sigma: phi.exp(),
        },
        Family::Lognormal => {
            let sigma = phi.exp();
            let mu_log = mu.ln();
            ln_mass = dists::truncnorm_ln_mass(spec.lb.ln(), spec.ub.ln(), mu_log, sigma);
            if !ln_mass.is_finite() {
                return invalid("lognormal law puts no mass on the bounds");
            }
            Dist::Lognormal { mu: mu_log, sigma }
        }
    };
    dist.validate()?;
    Ok(LatentLaw {
        dist,
        lb: spec.lb,
        ub: spec.ub,
        ln_mass,
    })
}

/// ln f(m* | u, s): the Beta(s·u, s − s·u) log density of a unit-scale mode.
pub fn mode_logpdf(m_star: f64, s: f64, u: f64) -> f64 {
    dists::beta_logpdf(s * u, s - s * u, m_star)
}

/// Draws a fuzzy dataset from the two-stage model for design matrix `x`.
pub fn simulate<R: Rng + ?Sized>(
    spec: &ModelSpec,
    theta_y: &ThetaY,
    theta_s: &ThetaS,
    x: &DMatrix<f64>,
    rng: &mut R,
) -> Result<FuzzyDataset> {
    spec.validate()?;
    let eta = linear_predictor(x, &theta_y.beta)?;
    let laws = eta
        .iter()
        .map(|&e| family_params(spec, theta_y.phi, e))
        .collect::<Result<Vec<_>>>()?;
    let gamma = theta_s.gamma();
    let mut obs = Vec::with_capacity(laws.len());
    let mut latent = Vec::with_capacity(laws.len());
    for law in &laws {
        let u = law.sample_unit(rng);
        let s = sample_gamma(gamma, rng);
        let m_star = sample_mode(u, s, rng);
        obs.push(BetaFuzzyNumber::new(spec.from_unit(m_star), s, spec.lb, spec.ub)?);
        latent.push(spec.from_unit(u));
    }
    let mut data = FuzzyDataset::new(obs, x.clone(), spec.lb, spec.ub)?;
    data.latent = Some(latent);
    Ok(data)
}

/// m* | u, s ~ Beta(s·u, s − s·u), kept strictly inside (0, 1).
pub fn sample_mode<R: Rng + ?Sized>(u: f64, s: f64, rng: &mut R) -> f64 {
    let a = (s * u).max(1e-10);
    let b = (s - s * u).max(1e-10);
    dists::sample_unit_beta(a, b, rng).clamp(1e-9, 1.0 - 1e-9)
}

/// (E[M], V[M]) on the unit scale for the unit with covariates `x_row`:
/// E[M] = E[Y] and V[M] = V[Y](1 − c) + E[Y](1 − E[Y])c with c = c_factor(θ_s).
pub fn mode_moments(spec: &ModelSpec, theta_y: &ThetaY, theta_s: &ThetaS, x_row: &[f64]) -> Result<(f64, f64)> {
    if x_row.len() != theta_y.beta.len() {
        return Err(Error::DimensionMismatch {
            expected: theta_y.beta.len(),
            got: x_row.len(),
        });
    }
    let eta: f64 = x_row.iter().zip(theta_y.beta.iter()).map(|(a, b)| a * b).sum();
    let law = family_params(spec, theta_y.phi, eta)?;
    let (ey, vy) = law.unit_moments()?;
    let c = c_factor(theta_s.alpha_s, theta_s.beta_s)?;
    Ok(moment_identity(ey, vy, c))
}

/// The mode moment identity for given latent moments and scaling factor c.
pub fn moment_identity(ey: f64, vy: f64, c: f64) -> (f64, f64) {
    (ey, vy * (1.0 - c) + ey * (1.0 - ey) * c)
}

/// Smallest interval containing every support.
pub fn derive_bounds(supports: &[Interval]) -> Result<(f64, f64)> {
    if supports.is_empty() {
        return Err(Error::InsufficientData("no observations to derive bounds from".into()));
    }
    let lb = supports.iter().map(|i| i.lo).fold(f64::INFINITY, f64::min);
    let ub = supports.iter().map(|i| i.hi).fold(f64::NEG_INFINITY, f64::max);
    Ok((lb, ub))
}

/// Widens `(lb, ub)` by `rel` of its width on each side; with `positive`,
/// the lower bound stays strictly above zero.
pub fn pad_bounds(lb: f64, ub: f64, rel: f64, positive: bool) -> (f64, f64) {
    let w = ub - lb;
    let mut lo = lb - rel * w;
    if positive && lo <= 0.0 {
        lo = lb * 0.5;
        if lo <= 0.0 {
            lo = f64::MIN_POSITIVE.max(UNIT_EDGE * w);
        }
    }
    (lo, ub + rel * w)
}

/// Log-likelihood of one unit and its derivatives in (η, φ).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EtaPhiDerivs {
    pub l: f64,
    pub l_e: f64,
    pub l_p: f64,
    pub l_ee: f64,
    pub l_ep: f64,
    pub l_pp: f64,
    pub l_eee: f64,
    pub l_ppp: f64,
}

/// Step of the (η, φ) finite-difference stencil.
const STENCIL_H: f64 = 2e-3;

/// ln f(u | η, φ) and its derivatives through third unmixed order.
///
/// Beta with the logit link is analytic; other families use a 13-point stencil.
pub fn eta_phi_derivatives(spec: &ModelSpec, u: f64, eta: f64, phi: f64) -> EtaPhiDerivs {
    let u = clamp_unit(u);
    if spec.family == Family::Beta && spec.link == Link::Logit {
        return beta_logit_derivatives(u, eta, phi);
    }
    let f = |e: f64, p: f64| match family_params(spec, p, e) {
        Ok(law) => law.unit_logpdf(u),
        Err(_) => f64::NEG_INFINITY,
    };
    let h = STENCIL_H;
    let f0 = f(eta, phi);
    let (fe1, fe_1, fe2, fe_2) = (
        f(eta + h, phi),
        f(eta - h, phi),
        f(eta + 2.0 * h, phi),
        f(eta - 2.0 * h, phi),
    );
    let mut d = EtaPhiDerivs {
        l: f0,
        ..Default::default()
    };
    // Fourth-order first and second derivatives, second-order third derivative.
    d.l_e = (fe_2 - 8.0 * fe_1 + 8.0 * fe1 - fe2) / (12.0 * h);
    d.l_ee = (-fe2 + 16.0 * fe1 - 30.0 * f0 + 16.0 * fe_1 - fe_2) / (12.0 * h * h);
    d.l_eee = (fe2 - 2.0 * fe1 + 2.0 * fe_1 - fe_2) / (2.0 * h * h * h);
    if spec.family == Family::LogBilal {
        // φ does not enter the LogBilal likelihood.
        return d;
    }
    let (fp1, fp_1, fp2, fp_2) = (
        f(eta, phi + h),
        f(eta, phi - h),
        f(eta, phi + 2.0 * h),
        f(eta, phi - 2.0 * h),
    );
    d.l_p = (fp_2 - 8.0 * fp_1 + 8.0 * fp1 - fp2) / (12.0 * h);
    d.l_pp = (-fp2 + 16.0 * fp1 - 30.0 * f0 + 16.0 * fp_1 - fp_2) / (12.0 * h * h);
    d.l_ppp = (fp2 - 2.0 * fp1 + 2.0 * fp_1 - fp_2) / (2.0 * h * h * h);
    d.l_ep = (f(eta + h, phi + h) - f(eta + h, phi - h) - f(eta - h, phi + h) + f(eta - h, phi - h)) / (4.0 * h * h);
    d
}

fn beta_logit_derivatives(u: f64, eta: f64, phi: f64) -> EtaPhiDerivs {
    use special::{digamma as psi0, tetragamma as psi2, trigamma as psi1};
    let mu = logistic(eta);
    let k = phi.exp();
    let a = mu * k;
    let b = k - a;
    let (lu, lv) = (u.ln(), (-u).ln_1p());
    let (p0a, p0b, p0k) = (psi0(a), psi0(b), psi0(k));
    let (p1a, p1b, p1k) = (psi1(a), psi1(b), psi1(k));
    let (p2a, p2b, p2k) = (psi2(a), psi2(b), psi2(k));
    let ln_b = special::ln_gamma(a) + special::ln_gamma(b) - special::ln_gamma(k);
    let l = (a - 1.0) * lu + (b - 1.0) * lv - ln_b;

    // In μ: ℓ_μ = κ(ψ(b) − ψ(a) + ln u − ln(1−u)), etc.
    let l_m = k * (p0b - p0a + lu - lv);
    let l_mm = -k * k * (p1a + p1b);
    let l_mmm = -k * k * k * (p2a - p2b);
    let m1 = mu * (1.0 - mu);
    let m2 = m1 * (1.0 - 2.0 * mu);
    let m3 = m1 * (1.0 - 6.0 * mu + 6.0 * mu * mu);

    let ga = lu - p0a;
    let gb = lv - p0b;
    let l_p = k * p0k + a * ga + b * gb;
    let l_pp = l_p + k * k * p1k - a * a * p1a - b * b * p1b;
    let cube = |x: f64, t1: f64, t2: f64| 2.0 * x * x * t1 + x * x * x * t2;
    let l_ppp = l_pp + cube(k, p1k, p2k) - cube(a, p1a, p2a) - cube(b, p1b, p2b);
    let l_ep = m1 * (l_m + k * (b * p1b - a * p1a));

    EtaPhiDerivs {
        l,
        l_e: l_m * m1,
        l_p,
        l_ee: l_mm * m1 * m1 + l_m * m2,
        l_ep,
        l_pp,
        l_eee: l_mmm * m1 * m1 * m1 + 3.0 * l_mm * m1 * m2 + l_m * m3,
        l_ppp,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec(family: Family) -> ModelSpec {
        ModelSpec::new(family, family.default_link(), 0.0, 1.0, 2).unwrap()
    }

    #[test]
    fn null_model_mean() {
        let s = spec(Family::Beta);
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.5, 1.0, -2.0, 1.0, 3.0]);
        let eta = linear_predictor(&x, &DVector::zeros(2)).unwrap();
        let mu = mean_from_eta(&eta, &s);
        assert!(mu.iter().all(|m| *m == 0.5));
        let eta = linear_predictor(&x, &DVector::from_vec(vec![1.0, -1.0])).unwrap();
        assert_eq!(eta.as_slice(), &[0.5, 3.0, -2.0]);
        assert!(linear_predictor(&x, &DVector::zeros(3)).is_err());
        let sat = mean_from_eta(&DVector::from_vec(vec![800.0]), &s);
        assert!((sat[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn family_param_examples() {
        let law = family_params(&spec(Family::Beta), 10f64.ln(), 0.0).unwrap();
        match law.dist {
            Dist::Beta { a, b } => assert!((a - 5.0).abs() < 1e-12 && (b - 5.0).abs() < 1e-12),
            _ => unreachable!(),
        }
        let law = family_params(&spec(Family::Kumaraswamy), 0.0, 0.0).unwrap();
        match law.dist {
            Dist::Kumaraswamy { a, b } => {
                let want = -(1.0 - 0.5f64.sqrt()).ln() / 2f64.ln();
                assert!((a - want).abs() < 1e-12);
                assert!((b - 2.0).abs() < 1e-12);
                // Median at μ = 0.5.
                let median = (1.0 - 0.5f64.powf(1.0 / b)).powf(1.0 / a);
                assert!((median - 0.5).abs() < 1e-12);
            }
            _ => unreachable!(),
        }
        let law = family_params(&spec(Family::LogBilal), 0.0, 0.3).unwrap();
        let (m, _) = law.unit_moments().unwrap();
        assert!((m - logistic(0.3)).abs() < 1e-12);
    }

    #[test]
    fn identity_link_domain_is_enforced() {
        let s = ModelSpec::new(Family::Beta, Link::Identity, 0.0, 1.0, 1).unwrap();
        assert!(family_params(&s, 0.0, 1.3).is_err());
        assert!(ModelSpec::new(Family::Beta, Link::Log, 0.0, 1.0, 1).is_err());
        assert!(ModelSpec::new(Family::Lognormal, Link::Logit, 0.0, 1.0, 1).is_err());
    }

    #[test]
    fn beta_moment_identity_example() {
        // Beta(2,2): E = 0.5, V = 0.05; c(1, 1.639) ≈ 0.5.
        let s = ModelSpec::new(Family::Beta, Link::Logit, 0.0, 1.0, 1).unwrap();
        let theta = ThetaY::new(vec![0.0], 4f64.ln());
        let ts = ThetaS::new(1.0, 1.639).unwrap();
        let (em, vm) = mode_moments(&s, &theta, &ts, &[1.0]).unwrap();
        assert!((em - 0.5).abs() < 1e-12);
        assert!((vm - 0.15).abs() < 1e-4);
        assert_eq!(moment_identity(0.3, 0.02, 0.0), (0.3, 0.02));
        assert!((moment_identity(0.3, 0.02, 1.0).1 - 0.21).abs() < 1e-15);
    }

    #[test]
    fn huge_precision_collapses_modes() {
        let s = spec(Family::Beta);
        let x = DMatrix::from_element(200, 2, 1.0);
        let theta = ThetaY::new(vec![0.2, -0.1], 2.0);
        let ts = ThetaS::new(1e4, 1e4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = simulate(&s, &theta, &ts, &x, &mut rng).unwrap();
        let y = d.latent.as_ref().unwrap();
        for (o, yi) in d.observations.iter().zip(y) {
            assert!((o.m - yi).abs() < 1e-3);
        }
    }

    #[test]
    fn bounds_helpers() {
        let b = derive_bounds(&[Interval { lo: 2.0, hi: 7.0 }]).unwrap();
        assert_eq!(b, (2.0, 7.0));
        let b = derive_bounds(&[Interval { lo: 0.0, hi: 1.0 }, Interval { lo: 0.2, hi: 3.0 }]).unwrap();
        assert_eq!(b, (0.0, 3.0));
        assert!(derive_bounds(&[]).is_err());
        let (lo, hi) = pad_bounds(0.01, 10.0, 0.01, true);
        assert!(lo > 0.0 && lo < 0.01 && hi > 10.0);
    }

    #[test]
    fn latent_law_normalizes_on_unit_scale() {
        use crate::quad::{self, QuadConfig};
        let ln_spec = ModelSpec::new(Family::Lognormal, Link::Log, 0.5, 30.0, 1).unwrap();
        for (fam, s, eta, phi) in [
            (Family::Lognormal, ln_spec.clone(), 1.2, -0.3),
            (Family::TruncatedNormal, spec(Family::TruncatedNormal), 0.4, -1.5),
            (Family::LogitNormal, spec(Family::LogitNormal), -0.7, 0.2),
        ] {
            let law = family_params(&s, phi, eta).unwrap();
            let cfg = QuadConfig::with_rel_tol(1e-10);
            let br = quad::uniform_breaks(0.0, 1.0, 32);
            let mass = quad::integrate(|u| law.unit_logpdf(u).exp(), 0.0, 1.0, &br, cfg).unwrap();
            assert!((mass - 1.0).abs() < 1e-8, "{fam}");
            let m1 = quad::integrate(|u| u * law.unit_logpdf(u).exp(), 0.0, 1.0, &br, cfg).unwrap();
            let m2 = quad::integrate(|u| u * u * law.unit_logpdf(u).exp(), 0.0, 1.0, &br, cfg).unwrap();
            let (em, vm) = law.unit_moments().unwrap();
            assert!((m1 - em).abs() < 1e-8, "{fam}");
            assert!((m2 - m1 * m1 - vm).abs() < 1e-8, "{fam}");
        }
    }

    #[test]
    fn beta_analytic_derivatives_match_stencil() {
        let s = spec(Family::Beta);
        for (u, eta, phi) in [(0.3, 0.4, 1.5), (0.91, -1.2, 3.0), (0.05, 2.0, 0.2)] {
            let an = beta_logit_derivatives(u, eta, phi);
            let f = |e: f64, p: f64| family_params(&s, p, e).unwrap().unit_logpdf(u);
            let h = 1e-3;
            let fd_e = (f(eta + h, phi) - f(eta - h, phi)) / (2.0 * h);
            let fd_p = (f(eta, phi + h) - f(eta, phi - h)) / (2.0 * h);
            let g = |e: f64, p: f64| beta_logit_derivatives(u, e, p);
            let fd_ee = (g(eta + h, phi).l_e - g(eta - h, phi).l_e) / (2.0 * h);
            let fd_ep = (g(eta, phi + h).l_e - g(eta, phi - h).l_e) / (2.0 * h);
            let fd_pp = (g(eta, phi + h).l_p - g(eta, phi - h).l_p) / (2.0 * h);
            let fd_eee = (g(eta + h, phi).l_ee - g(eta - h, phi).l_ee) / (2.0 * h);
            let fd_ppp = (g(eta, phi + h).l_pp - g(eta, phi - h).l_pp) / (2.0 * h);
            let close = |a: f64, b: f64| (a - b).abs() < 1e-5 * (1.0 + a.abs());
            assert!((an.l - f(eta, phi)).abs() < 1e-12);
            assert!(close(an.l_e, fd_e) && close(an.l_p, fd_p));
            assert!(close(an.l_ee, fd_ee) && close(an.l_ep, fd_ep) && close(an.l_pp, fd_pp));
            assert!(close(an.l_eee, fd_eee) && close(an.l_ppp, fd_ppp));
        }
    }
}
