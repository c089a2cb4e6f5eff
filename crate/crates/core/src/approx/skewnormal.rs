//! Third-order skew-normal approximation of a log posterior: the fitted
//! SN(μ, Σ, δ) shares the target's mode, negative Hessian at the mode and
//! unmixed third derivatives at the mode.

use std::cell::RefCell;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::dists::special::ln_cdf_derivatives;
use crate::dists::{sample_skewnormal, SkewNormalParams};
use crate::error::{Error, Result};
use crate::optim::{self, BfgsConfig};

#[derive(Debug, Clone)]
pub struct SNApprox {
    pub params: SkewNormalParams,
    /// Mode of the target (and of the approximation).
    pub mode: DVector<f64>,
    /// δᵀ(mode − μ), the argument of Φ at the mode.
    pub kappa: f64,
    /// ln det Σ.
    pub log_det: f64,
    /// True when the skewness solve failed and δ was set to zero.
    pub gaussian_fallback: bool,
}

impl SNApprox {
    pub fn mu(&self) -> &DVector<f64> {
        self.params.location()
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        self.params.scale()
    }

    pub fn delta(&self) -> &DVector<f64> {
        self.params.skewness()
    }

    pub fn logpdf(&self, theta: &DVector<f64>) -> f64 {
        self.params.logpdf(theta)
    }

    /// Gaussian (Laplace) approximation with the same mode and curvature.
    pub fn laplace(mode: DVector<f64>, neg_hessian: &DMatrix<f64>) -> Result<Self> {
        let d = mode.len();
        build(mode, neg_hessian, DVector::zeros(d), 0.0, false)
    }
}

fn build(
    mode: DVector<f64>,
    neg_hessian: &DMatrix<f64>,
    delta: DVector<f64>,
    kappa: f64,
    gaussian_fallback: bool,
) -> Result<SNApprox> {
    let (z1, z2, _) = ln_cdf_derivatives(kappa);
    let precision = neg_hessian + &delta * delta.transpose() * z2;
    let chol = precision
        .cholesky()
        .ok_or_else(|| Error::Approximation("matched precision is not positive definite".into()))?;
    let sigma = chol.inverse();
    let log_det = -2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let mu = &mode - &sigma * &delta * z1;
    let params = SkewNormalParams::new(mu, sigma, delta)?;
    Ok(SNApprox {
        params,
        mode,
        kappa,
        log_det,
        gaussian_fallback,
    })
}

/// Solves for (μ, Σ, δ) from the mode, the negative Hessian J at the mode
/// and the unmixed third derivatives t at the mode.
///
/// With κ = δᵀ(mode − μ) the matching conditions reduce to
/// Σ⁻¹ = J + ζ₂(κ)δδᵀ, δⱼ = ∛(tⱼ/ζ₃(κ)) and the scalar equation
/// κ(1 + ζ₂q) = ζ₁q with q = δᵀJ⁻¹δ. The scalar equation is solved by a
/// damped fixed-point iteration from κ = 0, with a bracketing search as
/// backup; if both fail the Gaussian fit is returned and flagged.
pub fn match_skewnormal(mode: DVector<f64>, neg_hessian: &DMatrix<f64>, third: &DVector<f64>) -> Result<SNApprox> {
    let d = mode.len();
    if neg_hessian.nrows() != d || neg_hessian.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: neg_hessian.nrows(),
        });
    }
    if third.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: third.len(),
        });
    }
    let chol = neg_hessian
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Approximation("negative Hessian is not positive definite".into()))?;
    if third.iter().all(|t| *t == 0.0) {
        return build(mode, neg_hessian, DVector::zeros(d), 0.0, false);
    }
    let cbrt_t = third.map(f64::cbrt);
    let q0 = cbrt_t.dot(&chol.solve(&cbrt_t));
    let q_of = |k: f64| q0 * ln_cdf_derivatives(k).2.powf(-2.0 / 3.0);
    let rhs = |k: f64| -> Option<f64> {
        let (z1, z2, _) = ln_cdf_derivatives(k);
        let q = q_of(k);
        let den = 1.0 + z2 * q;
        (den > 0.0).then(|| z1 * q / den)
    };

    let mut kappa = None;
    let mut k = 0.0;
    for _ in 0..500 {
        let Some(target) = rhs(k) else { break };
        let next = 0.5 * (k + target);
        if (next - k).abs() < 1e-13 * (1.0 + k) {
            kappa = Some(next);
            break;
        }
        k = next;
    }
    if kappa.is_none() {
        // Bracket the smallest root of κ(1 + ζ₂q) − ζ₁q on a grid.
        let g = |k: f64| {
            let (z1, z2, _) = ln_cdf_derivatives(k);
            let q = q_of(k);
            (1.0 + z2 * q > 0.0).then_some(k * (1.0 + z2 * q) - z1 * q)
        };
        let mut prev = (0.0, g(0.0));
        for step in 1..=800 {
            let kk = step as f64 * 0.05;
            let cur = g(kk);
            if let (Some(a), Some(b)) = (prev.1, cur) {
                if a < 0.0 && b >= 0.0 {
                    let root = optim::bisect(|x| g(x).unwrap_or(f64::NAN), prev.0, kk, 1e-13);
                    if let Ok(r) = root {
                        kappa = Some(r);
                    }
                    break;
                }
            }
            prev = (kk, cur);
        }
    }
    match kappa {
        Some(k) if k.is_finite() && k >= 0.0 => {
            let delta = &cbrt_t * ln_cdf_derivatives(k).2.powf(-1.0 / 3.0);
            build(mode.clone(), neg_hessian, delta, k, false)
                .or_else(|_| build(mode, neg_hessian, DVector::zeros(d), 0.0, true))
        }
        _ => build(mode, neg_hessian, DVector::zeros(d), 0.0, true),
    }
}

/// Central-difference Hessian with steps h = 1e−4(1 + |θⱼ|).
pub fn fd_hessian<F: FnMut(&DVector<f64>) -> f64>(f: &mut F, x: &DVector<f64>) -> DMatrix<f64> {
    let d = x.len();
    let h: Vec<f64> = x.iter().map(|v| 1e-4 * (1.0 + v.abs())).collect();
    let f0 = f(x);
    let mut hess = DMatrix::zeros(d, d);
    let mut p = x.clone();
    for j in 0..d {
        p[j] = x[j] + h[j];
        let fp = f(&p);
        p[j] = x[j] - h[j];
        let fm = f(&p);
        p[j] = x[j];
        hess[(j, j)] = (fp - 2.0 * f0 + fm) / (h[j] * h[j]);
        for k in 0..j {
            let mut eval = |sj: f64, sk: f64| {
                p[j] = x[j] + sj * h[j];
                p[k] = x[k] + sk * h[k];
                let v = f(&p);
                p[j] = x[j];
                p[k] = x[k];
                v
            };
            let v = (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0)) / (4.0 * h[j] * h[k]);
            hess[(j, k)] = v;
            hess[(k, j)] = v;
        }
    }
    hess
}

/// Five-point third derivatives ∂³f/∂θⱼ³ with per-coordinate steps `h`.
///
/// Values below the round-off floor of the stencil are reported as zero.
pub fn fd_third_unmixed<F: FnMut(&DVector<f64>) -> f64>(f: &mut F, x: &DVector<f64>, h: &[f64]) -> DVector<f64> {
    let f0 = f(x);
    let mut p = x.clone();
    let mut out = DVector::zeros(x.len());
    for j in 0..x.len() {
        let mut at = |s: f64| {
            p[j] = x[j] + s * h[j];
            let v = f(&p);
            p[j] = x[j];
            v
        };
        let (f2, f1, fm1, fm2) = (at(2.0), at(1.0), at(-1.0), at(-2.0));
        let t = (f2 - 2.0 * f1 + 2.0 * fm1 - fm2) / (2.0 * h[j].powi(3));
        let scale = [f0, f1, f2, fm1, fm2].iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let floor = 64.0 * f64::EPSILON * scale / h[j].powi(3);
        out[j] = if t.abs() <= floor { 0.0 } else { t };
    }
    out
}

/// Fits the skew-normal approximation to a generic log posterior.
///
/// The mode is found by BFGS from `theta_init` and polished by Newton steps;
/// derivatives are finite differences. A candidate mode whose Hessian is not
/// negative definite triggers up to three jittered restarts.
pub fn fit_skewnormal<F: FnMut(&DVector<f64>) -> f64>(mut log_post: F, theta_init: &DVector<f64>) -> Result<SNApprox> {
    if theta_init.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("initial point must be finite".into()));
    }
    let d = theta_init.len();
    let mut start = theta_init.clone();
    for attempt in 0..4 {
        let mode = find_mode(&mut log_post, &start);
        let hess = fd_hessian(&mut log_post, &mode);
        let neg = -&hess;
        if let Some(chol) = neg.clone().cholesky() {
            let inv = chol.inverse();
            let h3: Vec<f64> = (0..d).map(|j| 0.05 * inv[(j, j)].sqrt()).collect();
            let third = fd_third_unmixed(&mut log_post, &mode, &h3);
            return match_skewnormal(mode, &neg, &third);
        }
        // Deterministic jitter so the fit stays reproducible.
        let bump = 0.1 * (attempt + 1) as f64;
        start =
            theta_init.map_with_location(|j, _, v| v + bump * (1.0 + v.abs()) * if j % 2 == 0 { 1.0 } else { -1.0 });
    }
    Err(Error::Approximation(
        "no candidate mode with a negative definite Hessian".into(),
    ))
}

fn find_mode<F: FnMut(&DVector<f64>) -> f64>(log_post: &mut F, start: &DVector<f64>) -> DVector<f64> {
    let cell = RefCell::new(log_post);
    let neg = |x: &DVector<f64>| {
        let v = -(cell.borrow_mut())(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let bf = optim::bfgs(
        neg,
        |x| optim::fd_gradient(&mut { neg }, x, 1e-6),
        start.clone(),
        BfgsConfig {
            max_iter: 500,
            grad_tol: 1e-9,
            f_tol: 1e-15,
        },
    );
    let mut neg = neg;
    let mut x = bf.x;
    // Newton polish with finite-difference derivatives.
    let mut fx = neg(&x);
    for _ in 0..20 {
        let g = optim::fd_gradient(&mut neg, &x, 1e-5);
        let h = fd_hessian(&mut neg, &x);
        let Some(chol) = h.cholesky() else { break };
        let step = chol.solve(&g);
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..30 {
            let cand = &x - &step * t;
            let fc = neg(&cand);
            if fc.is_finite() && fc <= fx {
                x = cand;
                fx = fc;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved || step.amax() < 1e-12 * (1.0 + x.amax()) {
            break;
        }
    }
    x
}

/// One draw of θ from the fitted approximation.
pub fn sample_theta_conditional<R: Rng + ?Sized>(approx: &SNApprox, rng: &mut R) -> DVector<f64> {
    sample_skewnormal(&approx.params, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dists::special::ln_gamma;

    #[test]
    fn quadratic_target_is_recovered() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, -0.2, 0.5, -0.2, 2.0]);
        let m = DVector::from_vec(vec![0.3, -1.2, 2.5]);
        let f = |x: &DVector<f64>| {
            let z = x - &m;
            -0.5 * z.dot(&(&a * &z))
        };
        let fit = fit_skewnormal(f, &DVector::zeros(3)).unwrap();
        let cov = a.clone().try_inverse().unwrap();
        assert!(fit.delta().amax() < 1e-4);
        assert!((fit.mu() - &m).amax() < 1e-4);
        assert!((fit.sigma() - cov).amax() < 1e-4);
    }

    #[test]
    fn log_gamma_target_skews_right() {
        // Gamma(5, 1) log density has positive third derivative at its mode.
        let f = |x: &DVector<f64>| {
            let t = x[0];
            if t <= 0.0 {
                f64::NEG_INFINITY
            } else {
                4.0 * t.ln() - t - ln_gamma(5.0)
            }
        };
        let fit = fit_skewnormal(f, &DVector::from_vec(vec![2.0])).unwrap();
        assert!((fit.mode[0] - 4.0).abs() < 1e-5);
        assert!(fit.delta()[0] > 0.0);
        assert!(!fit.gaussian_fallback);
    }

    #[test]
    fn analytic_matching_reproduces_derivatives() {
        let mode = DVector::from_vec(vec![0.2, -0.4]);
        let j = DMatrix::from_row_slice(2, 2, &[5.0, 1.2, 1.2, 3.0]);
        let t = DVector::from_vec(vec![2.5, -1.0]);
        let fit = match_skewnormal(mode.clone(), &j, &t).unwrap();
        let mut lp = |x: &DVector<f64>| fit.logpdf(x);
        let g = optim::fd_gradient(&mut lp, &mode, 1e-6);
        assert!(g.amax() < 1e-6);
        let h = fd_hessian(&mut lp, &mode);
        assert!((h + &j).amax() < 1e-4);
        let t_fd = fd_third_unmixed(&mut lp, &mode, &[1e-2, 1e-2]);
        assert!((t_fd - t).amax() < 1e-3);
    }
}
