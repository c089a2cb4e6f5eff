//! Four-parameter Beta proposal for the latent-outcome conditional
//! π(y | m, s, θ) ∝ f(m | y, s) f_Y(y | θ), fitted by matching the first two
//! log-density derivatives at the proposal mean.

use rand::Rng;

use crate::dists::special::{digamma, ln_gamma, trigamma};
use crate::dists::{self, Beta4PParams, UNIT_EDGE};
use crate::error::{invalid, Error, Result};
use crate::model::{family_params, FuzzyDataset, LatentLaw, ModelSpec, ThetaY};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct B4PConfig {
    /// Tolerance of the relative-change stopping rule.
    pub eps: f64,
    pub max_iter: usize,
    /// Step halvings allowed when an update leaves the legal domain.
    pub max_halvings: usize,
}

impl Default for B4PConfig {
    fn default() -> Self {
        Self {
            eps: 1e-6,
            max_iter: 200,
            max_halvings: 10,
        }
    }
}

impl B4PConfig {
    pub fn with_eps(eps: f64) -> Self {
        Self { eps, ..Self::default() }
    }
}

/// A fitted Beta4P(λ̂σ̂, σ̂ − λ̂σ̂, lb, ub) proposal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct B4PProposal {
    /// Location (mean) on the response scale.
    pub lambda_hat: f64,
    pub sigma_hat: f64,
    pub lb: f64,
    pub ub: f64,
    pub iterations: usize,
    /// True when the derivative-matching recursion met its stopping rule.
    pub converged: bool,
    /// True when the proposal came from the Laplace-type fallback.
    pub fallback: bool,
}

impl B4PProposal {
    pub fn unit_lambda(&self) -> f64 {
        (self.lambda_hat - self.lb) / (self.ub - self.lb)
    }

    pub fn params(&self) -> Beta4PParams {
        Beta4PParams {
            lambda: self.lambda_hat,
            sigma: self.sigma_hat,
            lb: self.lb,
            ub: self.ub,
        }
    }

    /// Log density on the response scale.
    pub fn logpdf(&self, y: f64) -> f64 {
        self.params().dist().logpdf(y)
    }

    /// Log density of the rescaled variable on (0, 1).
    pub fn unit_logpdf(&self, u: f64) -> f64 {
        let (a, b) = self.params().shapes();
        if !(u > 0.0 && u < 1.0) {
            return f64::NEG_INFINITY;
        }
        dists::beta_logpdf(a, b, u)
    }

    /// First and second derivatives of the unit-scale log density.
    pub fn unit_log_derivatives(&self, u: f64) -> (f64, f64) {
        let (a, b) = self.params().shapes();
        beta_kernel_derivatives(a, b, u)
    }
}

fn beta_kernel_derivatives(a: f64, b: f64, u: f64) -> (f64, f64) {
    let v = 1.0 - u;
    (
        (a - 1.0) / u - (b - 1.0) / v,
        -(a - 1.0) / (u * u) - (b - 1.0) / (v * v),
    )
}

/// h(u; m*, s) = −lnΓ(su) − lnΓ(s − su) + su·ln(m*/(1 − m*)), which equals
/// ln Beta(m*; su, s − su) up to a u-free constant.
pub fn h_term(u: f64, m_star: f64, s: f64) -> f64 {
    -ln_gamma(s * u) - ln_gamma(s - s * u) + s * u * (m_star / (1.0 - m_star)).ln()
}

/// Unnormalized log conditional of the unit-scale latent outcome.
pub fn log_unnorm_posterior_unit(u: f64, m_star: f64, s: f64, law: &LatentLaw) -> f64 {
    if !(u > 0.0 && u < 1.0) {
        return f64::NEG_INFINITY;
    }
    h_term(u, m_star, s) + law.unit_logpdf(u)
}

/// Unnormalized log conditional of y on the response scale, given the
/// observed mode `m` and precision `s` of unit `i`.
pub fn log_unnorm_posterior_y(y: f64, m: f64, s: f64, spec: &ModelSpec, theta_y: &ThetaY, x_row: &[f64]) -> f64 {
    let Ok(law) = unit_law(spec, theta_y, x_row) else {
        return f64::NEG_INFINITY;
    };
    log_unnorm_posterior_unit(spec.to_unit(y), spec.to_unit(m), s, &law)
}

fn unit_law(spec: &ModelSpec, theta_y: &ThetaY, x_row: &[f64]) -> Result<LatentLaw> {
    if x_row.len() != theta_y.beta.len() {
        return Err(Error::DimensionMismatch {
            expected: theta_y.beta.len(),
            got: x_row.len(),
        });
    }
    let eta: f64 = x_row.iter().zip(theta_y.beta.iter()).map(|(a, b)| a * b).sum();
    family_params(spec, theta_y.phi, eta)
}

/// (k₁, k₂): first and second derivatives of the log conditional at u.
pub fn target_derivatives(u: f64, m_star: f64, s: f64, law: &LatentLaw) -> (f64, f64) {
    let (f1, f2) = law.unit_log_derivatives(u);
    let su = s * u;
    let sv = s - su;
    let k1 = f1 + s * (m_star / (1.0 - m_star)).ln() + s * (digamma(sv) - digamma(su));
    let k2 = f2 - s * s * (trigamma(su) + trigamma(sv));
    (k1, k2)
}

fn legal(lambda: f64, sigma: f64) -> bool {
    lambda > 0.0 && lambda < 1.0 && sigma > 0.0 && sigma.is_finite()
}

/// Fits the proposal for a mode `m` (response scale) and precision `s`.
///
/// Starts at y = m*, σ = s and iterates the derivative-matching updates. When
/// that run leaves the legal domain or does not settle, the recursion is
/// restarted from the Laplace-type fit; if the restart fails as well, the
/// Laplace-type fit itself is returned with `fallback` set.
pub fn fit_b4p(m: f64, s: f64, law: &LatentLaw, cfg: &B4PConfig) -> Result<B4PProposal> {
    let (lb, ub) = (law.lb, law.ub);
    let w = ub - lb;
    let m_star = (m - lb) / w;
    if !(m_star > 0.0 && m_star < 1.0) {
        return invalid(format!("mode {m} is not interior to ({lb}, {ub})"));
    }
    if !(s > 0.0 && s.is_finite()) {
        return invalid(format!("precision must be positive, got {s}"));
    }
    if !(cfg.eps > 0.0) {
        return invalid(format!("eps must be positive, got {}", cfg.eps));
    }
    let wrap = |(lambda, sigma): (f64, f64), iterations, converged, fallback| B4PProposal {
        lambda_hat: lb + w * lambda,
        sigma_hat: sigma,
        lb,
        ub,
        iterations,
        converged,
        fallback,
    };

    let first = recurse(m_star, s, (m_star, s), law, cfg);
    if let Ok((fit, it)) = first {
        return Ok(wrap(fit, it, true, false));
    }
    let laplace = match laplace_fit(m_star, s, law) {
        Ok(v) => v,
        Err(e) => {
            return Err(match first {
                Err(Error::Approximation(msg)) => Error::Approximation(format!("{msg}; {e}")),
                _ => e,
            })
        }
    };
    match recurse(m_star, s, laplace, law, cfg) {
        Ok((fit, it)) => Ok(wrap(fit, cfg.max_iter + it, true, false)),
        Err(_) => Ok(wrap(laplace, 2 * cfg.max_iter, false, true)),
    }
}

/// Derivative-matching recursion from `start`; returns the fixed point and
/// the iteration count.
fn recurse(m_star: f64, s: f64, start: (f64, f64), law: &LatentLaw, cfg: &B4PConfig) -> Result<((f64, f64), usize)> {
    let (mut lambda, mut sigma) = start;
    for it in 1..=cfg.max_iter {
        let y = lambda;
        let (k1, k2) = target_derivatives(y, m_star, s, law);
        if !(k1.is_finite() && k2.is_finite()) {
            return Err(Error::Approximation(format!("non-finite target derivatives at {y}")));
        }
        let lam_full = (1.0 + y * (-2.0 + k1 + sigma - k1 * y)) / sigma;
        let sig_full =
            (1.0 - 2.0 * y + 2.0 * y * y - k2 * y * y * (1.0 - y) * (1.0 - y)) / (lam_full * (1.0 - 2.0 * y) + y * y);
        let (mut lam_new, mut sig_new) = (lam_full, sig_full);
        let mut halvings = 0;
        while !legal(lam_new, sig_new) {
            if halvings == cfg.max_halvings {
                return Err(Error::Approximation(format!(
                    "B4P update left the legal domain (lambda {lam_full}, sigma {sig_full}) after {halvings} halvings"
                )));
            }
            halvings += 1;
            let f = 0.5f64.powi(halvings as i32);
            lam_new = lambda + f * (lam_full - lambda);
            sig_new = sigma + f * (sig_full - sigma);
        }
        let done = (y / lam_new - 1.0).abs() < cfg.eps && (sig_new / sigma - 1.0).abs() < cfg.eps;
        lambda = lam_new;
        sigma = sig_new;
        if done {
            return Ok(((lambda, sigma), it));
        }
    }
    Err(Error::NonConvergence(format!(
        "B4P recursion after {} iterations",
        cfg.max_iter
    )))
}

/// Beta kernel with the conditional's mode and curvature at the mode.
pub fn laplace_fit(m_star: f64, s: f64, law: &LatentLaw) -> Result<(f64, f64)> {
    let k1 = |u: f64| target_derivatives(u, m_star, s, law).0;
    let lo = UNIT_EDGE;
    let hi = 1.0 - UNIT_EDGE;
    let y0 = if k1(lo) > 0.0 && k1(hi) < 0.0 {
        crate::optim::bisect(k1, lo, hi, 1e-14)?
    } else {
        // Derivative does not change sign: scan the log conditional.
        let mut best = (f64::NEG_INFINITY, m_star);
        for k in 1..2000 {
            let u = k as f64 / 2000.0;
            let v = log_unnorm_posterior_unit(u, m_star, s, law);
            if v > best.0 {
                best = (v, u);
            }
        }
        best.1
    };
    let (_, k2) = target_derivatives(y0, m_star, s, law);
    if !(k2 < 0.0 && k2.is_finite()) {
        return Err(Error::Approximation(format!(
            "log conditional is not concave at its mode {y0} (curvature {k2})"
        )));
    }
    let a = -k2 * y0 * y0 * (1.0 - y0);
    let b = -k2 * y0 * (1.0 - y0) * (1.0 - y0);
    let sigma = a + b + 2.0;
    Ok(((a + 1.0) / sigma, sigma))
}

/// Fits the proposal for unit `i` of `data` under `theta_y`.
pub fn fit_b4p_for_unit(
    data: &FuzzyDataset,
    spec: &ModelSpec,
    theta_y: &ThetaY,
    i: usize,
    cfg: &B4PConfig,
) -> Result<B4PProposal> {
    let obs = data
        .observations
        .get(i)
        .ok_or_else(|| Error::InvalidParameter(format!("unit index {i} out of range")))?;
    let row: Vec<f64> = data.x.row(i).iter().copied().collect();
    let law = unit_law(spec, theta_y, &row)?;
    fit_b4p(obs.m, obs.s, &law, cfg)
}

/// One draw from the fitted proposal, on the response scale.
pub fn sample_y_conditional<R: Rng + ?Sized>(proposal: &B4PProposal, rng: &mut R) -> f64 {
    dists::sample_beta4p(&proposal.params(), rng)
}
