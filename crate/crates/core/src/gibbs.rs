//! The approximated Gibbs sampler: the fuzziness law is estimated once by
//! maximum likelihood, then latent outcomes (Beta4P proposals) and regression
//! parameters (skew-normal approximation) are updated in turn.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::approx::b4p::{laplace_fit, B4PConfig};
use crate::approx::{fit_b4p, match_skewnormal, sample_theta_conditional, SNApprox};
use crate::dists::special::{digamma, trigamma};
use crate::dists::{self, clamp_unit};
use crate::error::{invalid, Error, Result};
use crate::model::{eta_phi_derivatives, family_params, FuzzyDataset, ModelSpec, ThetaS};

pub use crate::model::PriorSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub chains: usize,
    /// Retained draws per chain.
    pub samples: usize,
    pub burnin: usize,
    pub seed: u64,
    /// B4P stopping tolerance.
    pub eps: f64,
    /// Use the skew-normal fit as an independence Metropolis–Hastings proposal.
    pub mh_correct: bool,
    /// Refit the skew-normal approximation every this many iterations.
    pub sn_refresh: usize,
    /// Keep the latent draws of every retained iteration.
    pub store_latent: bool,
    /// Run chains on the rayon pool.
    pub parallel: bool,
    /// Abort when B4P fallbacks exceed this share of unit updates in a window.
    pub max_fallback_rate: f64,
    /// Window length in iterations for the fallback check.
    pub fallback_window: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            chains: 5,
            samples: 4000,
            burnin: 2000,
            seed: 1,
            eps: 1e-6,
            mh_correct: false,
            sn_refresh: 1,
            store_latent: true,
            parallel: true,
            max_fallback_rate: 0.05,
            fallback_window: 100,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 || self.samples == 0 {
            return invalid("chains and samples must be at least 1");
        }
        if self.sn_refresh == 0 {
            return invalid("sn_refresh must be at least 1");
        }
        if !(self.eps > 0.0) {
            return invalid("eps must be positive");
        }
        Ok(())
    }
}

/// Output of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainDraws {
    pub chain_id: usize,
    /// Master seed; the chain uses RNG stream `chain_id` of it.
    pub seed: u64,
    /// samples × (J + 1) draws of (β, φ).
    pub theta: DMatrix<f64>,
    /// samples × n latent outcomes on the response scale.
    pub y_latent: Option<DMatrix<f64>>,
    pub theta_s: ThetaS,
    /// Unit updates that used the Laplace-type fallback.
    pub b4p_fallback_count: usize,
    /// θ updates whose skew-normal fit fell back to the Gaussian.
    pub sn_fallback_count: usize,
    pub mh_proposed: usize,
    pub mh_accepted: usize,
}

impl ChainDraws {
    pub fn acceptance_rate(&self) -> Option<f64> {
        (self.mh_proposed > 0).then(|| self.mh_accepted as f64 / self.mh_proposed as f64)
    }

    /// Draws of parameter `j` (β₀ … β_{J−1}, then φ).
    pub fn param(&self, j: usize) -> Vec<f64> {
        self.theta.column(j).iter().copied().collect()
    }
}

/// Maximum-likelihood Gamma(shape α, scale β) fit to precisions.
///
/// Solves ln α − ψ(α) = ln s̄ − mean(ln s) by Newton from Minka's start.
pub fn gamma_mle(s: &[f64]) -> Result<ThetaS> {
    if s.len() < 2 {
        return Err(Error::InsufficientData(
            "gamma fit needs at least two precisions".into(),
        ));
    }
    if s.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return invalid("precisions must be positive and finite");
    }
    let n = s.len() as f64;
    let mean = s.iter().sum::<f64>() / n;
    let mean_ln = s.iter().map(|v| v.ln()).sum::<f64>() / n;
    let c = mean.ln() - mean_ln;
    if !(c > 1e-14) {
        return Err(Error::InsufficientData("precisions are all equal".into()));
    }
    let mut alpha = (3.0 - c + ((c - 3.0).powi(2) + 24.0 * c).sqrt()) / (12.0 * c);
    for _ in 0..100 {
        let f = alpha.ln() - digamma(alpha) - c;
        let df = 1.0 / alpha - trigamma(alpha);
        let mut next = alpha - f / df;
        if !(next > 0.0) {
            next = 0.5 * alpha;
        }
        let done = (next - alpha).abs() <= 1e-13 * alpha;
        alpha = next;
        if done {
            return ThetaS::new(alpha, mean / alpha);
        }
    }
    Err(Error::NonConvergence("gamma shape Newton iteration".into()))
}

/// The θ-conditional ln π(θ | y) = Σᵢ ln f_Y(uᵢ | θ) + ln prior, given
/// unit-scale latent outcomes.
pub struct ThetaConditional<'a> {
    pub spec: &'a ModelSpec,
    pub x: &'a DMatrix<f64>,
    pub u: &'a [f64],
}

struct Assembled {
    value: f64,
    grad: DVector<f64>,
    hess: DMatrix<f64>,
    third: DVector<f64>,
}

impl ThetaConditional<'_> {
    fn k(&self) -> usize {
        self.x.ncols()
    }

    /// Log density up to a constant; −∞ where the family parameters are illegal.
    pub fn log_density(&self, theta: &DVector<f64>) -> f64 {
        let k = self.k();
        let phi = theta[k];
        let beta = theta.rows(0, k);
        let mut acc = self.spec.prior.log_density(theta);
        for (i, &u) in self.u.iter().enumerate() {
            let eta = self.x.row(i).dot(&beta.transpose());
            match family_params(self.spec, phi, eta) {
                Ok(law) => acc += law.unit_logpdf(clamp_unit(u)),
                Err(_) => return f64::NEG_INFINITY,
            }
        }
        if acc.is_nan() {
            f64::NEG_INFINITY
        } else {
            acc
        }
    }

    fn assemble(&self, theta: &DVector<f64>) -> Assembled {
        let k = self.k();
        let d = k + 1;
        let phi = theta[k];
        let beta = theta.rows(0, k);
        let prior = &self.spec.prior;
        let mut grad = DVector::zeros(d);
        let mut hess = DMatrix::zeros(d, d);
        let mut third = DVector::zeros(d);
        let mut value = prior.log_density(theta);
        let mut xr = vec![0.0; k];
        for (i, &u) in self.u.iter().enumerate() {
            for (j, v) in xr.iter_mut().enumerate() {
                *v = self.x[(i, j)];
            }
            let eta = self.x.row(i).dot(&beta.transpose());
            let dv = eta_phi_derivatives(self.spec, u, eta, phi);
            value += dv.l;
            for a in 0..k {
                grad[a] += xr[a] * dv.l_e;
                third[a] += xr[a].powi(3) * dv.l_eee;
                hess[(a, k)] += xr[a] * dv.l_ep;
                for b in 0..=a {
                    hess[(a, b)] += xr[a] * xr[b] * dv.l_ee;
                }
            }
            grad[k] += dv.l_p;
            hess[(k, k)] += dv.l_pp;
            third[k] += dv.l_ppp;
        }
        for a in 0..k {
            grad[a] -= (theta[a] - prior.beta_mean) / (prior.beta_sd * prior.beta_sd);
            hess[(a, a)] -= 1.0 / (prior.beta_sd * prior.beta_sd);
            hess[(k, a)] = hess[(a, k)];
            for b in 0..a {
                hess[(b, a)] = hess[(a, b)];
            }
        }
        grad[k] -= (phi - prior.phi_mean) / (prior.phi_sd * prior.phi_sd);
        hess[(k, k)] -= 1.0 / (prior.phi_sd * prior.phi_sd);
        if !value.is_finite() {
            value = f64::NEG_INFINITY;
        }
        Assembled {
            value,
            grad,
            hess,
            third,
        }
    }

    /// Newton ascent to the mode from `start`.
    pub fn mode(&self, start: &DVector<f64>) -> Result<DVector<f64>> {
        let d = start.len();
        let mut theta = start.clone();
        let mut cur = self.assemble(&theta);
        if !cur.value.is_finite() {
            return Err(Error::Approximation(
                "θ conditional is not finite at the start point".into(),
            ));
        }
        for _ in 0..200 {
            let neg = -&cur.hess;
            // Levenberg-style shift when the curvature is not negative definite.
            let mut shift = 0.0;
            let step = loop {
                let m = &neg + DMatrix::identity(d, d) * shift;
                if let Some(ch) = m.cholesky() {
                    break ch.solve(&cur.grad);
                }
                shift = if shift == 0.0 {
                    1e-6 * (1.0 + neg.diagonal().amax())
                } else {
                    shift * 10.0
                };
                if shift > 1e12 {
                    return Err(Error::Approximation("θ curvature could not be regularized".into()));
                }
            };
            let decrement = cur.grad.dot(&step);
            if decrement.abs() < 1e-12 && shift == 0.0 {
                return Ok(theta);
            }
            let mut t = 1.0;
            let mut next = None;
            for _ in 0..40 {
                let cand = &theta + &step * t;
                let v = self.log_density(&cand);
                if v.is_finite() && v >= cur.value - 1e-12 * cur.value.abs() {
                    next = Some(cand);
                    break;
                }
                t *= 0.5;
            }
            let Some(cand) = next else {
                // No progress possible along the Newton direction.
                return Ok(theta);
            };
            let moved = (&cand - &theta).amax();
            theta = cand;
            cur = self.assemble(&theta);
            if moved < 1e-10 * (1.0 + theta.amax()) && shift == 0.0 {
                return Ok(theta);
            }
        }
        Ok(theta)
    }

    /// Skew-normal approximation at the mode reached from `start`.
    pub fn fit(&self, start: &DVector<f64>) -> Result<SNApprox> {
        let mode = self.mode(start)?;
        let a = self.assemble(&mode);
        let neg = -&a.hess;
        match_skewnormal(mode, &neg, &a.third)
    }
}

struct ChainState {
    theta: DVector<f64>,
    u: Vec<f64>,
}

/// Runs one chain with RNG stream `chain_id` of `cfg.seed`.
/// Independence Metropolis–Hastings step with proposal `sn`. Returns the next
/// state and whether the candidate was accepted.
pub fn independence_mh_step<R: Rng + ?Sized, F: Fn(&DVector<f64>) -> f64>(
    current: &DVector<f64>,
    log_target: F,
    sn: &SNApprox,
    rng: &mut R,
) -> (DVector<f64>, bool) {
    let cand = sample_theta_conditional(sn, rng);
    let cand_lp = log_target(&cand);
    let cur_lp = log_target(current);
    let log_ratio = (cand_lp - cur_lp) - (sn.logpdf(&cand) - sn.logpdf(current));
    let u: f64 = rng.random();
    if cand_lp.is_finite() && (!cur_lp.is_finite() || u.ln() < log_ratio) {
        (cand, true)
    } else {
        (current.clone(), false)
    }
}

pub fn run_chain(data: &FuzzyDataset, spec: &ModelSpec, cfg: &SamplerConfig, chain_id: usize) -> Result<ChainDraws> {
    cfg.validate()?;
    spec.validate()?;
    if data.n_coef() != spec.n_coef {
        return Err(Error::DimensionMismatch {
            expected: spec.n_coef,
            got: data.n_coef(),
        });
    }
    if (data.lb, data.ub) != (spec.lb, spec.ub) {
        return invalid(format!(
            "dataset bounds ({}, {}) differ from model bounds ({}, {})",
            data.lb, data.ub, spec.lb, spec.ub
        ));
    }
    let theta_s = gamma_mle(&data.precisions())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(chain_id as u64);

    let n = data.n();
    let k = spec.n_coef;
    let m_star = data.unit_modes();
    let s = data.precisions();
    let b4p_cfg = B4PConfig::with_eps(cfg.eps);

    let mut theta0 = spec.prior.mean_vector(k);
    for v in theta0.iter_mut() {
        *v += 0.1 * rng.sample::<f64, _>(StandardNormal);
    }
    let mut state = ChainState {
        theta: theta0,
        u: m_star.clone(),
    };
    // A start outside the family's domain is replaced by the modal θ for y⁽⁰⁾.
    if (ThetaConditional {
        spec,
        x: &data.x,
        u: &state.u,
    })
    .log_density(&state.theta)
        == f64::NEG_INFINITY
    {
        let cond = ThetaConditional {
            spec,
            x: &data.x,
            u: &state.u,
        };
        let mut start = spec.prior.mean_vector(k);
        if spec.link == crate::model::Link::Identity {
            start[0] = 0.5;
        }
        state.theta = cond.mode(&start)?;
    }

    let total = cfg.burnin + cfg.samples;
    let mut theta_out = DMatrix::zeros(cfg.samples, k + 1);
    let mut y_out = cfg.store_latent.then(|| DMatrix::zeros(cfg.samples, n));
    let mut window: VecDeque<usize> = VecDeque::with_capacity(cfg.fallback_window + 1);
    let mut window_sum = 0usize;
    let mut fallback_total = 0usize;
    let mut sn_fallbacks = 0usize;
    let (mut proposed, mut accepted) = (0usize, 0usize);
    let mut approx: Option<SNApprox> = None;

    for t in 0..total {
        // Latent outcomes given θ.
        let beta = state.theta.rows(0, k).into_owned();
        let phi = state.theta[k];
        let mut fallbacks = 0usize;
        for i in 0..n {
            let eta = data.x.row(i).dot(&beta.transpose());
            let law = family_params(spec, phi, eta).map_err(|e| Error::ChainAborted {
                chain: chain_id,
                iteration: t,
                reason: e.to_string(),
            })?;
            let obs = &data.observations[i];
            let proposal = fit_b4p(obs.m, obs.s, &law, &b4p_cfg);
            let (lam, sig) = match proposal {
                Ok(p) if !p.fallback => (p.unit_lambda(), p.sigma_hat),
                Ok(p) => {
                    fallbacks += 1;
                    (p.unit_lambda(), p.sigma_hat)
                }
                Err(_) => {
                    fallbacks += 1;
                    match laplace_fit(m_star[i], s[i], &law) {
                        Ok(v) => v,
                        Err(_) => continue,
                    }
                }
            };
            state.u[i] = dists::sample_unit_beta(lam * sig, sig - lam * sig, &mut rng);
        }
        fallback_total += fallbacks;
        window.push_back(fallbacks);
        window_sum += fallbacks;
        if window.len() > cfg.fallback_window {
            window_sum -= window.pop_front().unwrap_or(0);
        }
        if window.len() == cfg.fallback_window
            && window_sum as f64 > cfg.max_fallback_rate * (cfg.fallback_window * n) as f64
        {
            return Err(Error::ChainAborted {
                chain: chain_id,
                iteration: t,
                reason: format!(
                    "{window_sum} of the last {} unit updates used the B4P fallback",
                    cfg.fallback_window * n
                ),
            });
        }

        // Regression parameters given the latent outcomes.
        let cond = ThetaConditional {
            spec,
            x: &data.x,
            u: &state.u,
        };
        if approx.is_none() || t % cfg.sn_refresh == 0 {
            let start = approx
                .as_ref()
                .map(|a| a.mode.clone())
                .unwrap_or_else(|| state.theta.clone());
            match cond.fit(&start) {
                Ok(a) => {
                    if a.gaussian_fallback {
                        sn_fallbacks += 1;
                    }
                    approx = Some(a);
                }
                Err(e) if approx.is_none() => {
                    return Err(Error::ChainAborted {
                        chain: chain_id,
                        iteration: t,
                        reason: e.to_string(),
                    })
                }
                Err(_) => sn_fallbacks += 1,
            }
        }
        let sn = approx.as_ref().expect("approximation present");
        // The first step only moves the chain into the approximation's bulk:
        // an independence sampler started in a light proposal tail never leaves.
        if cfg.mh_correct && t > 0 {
            proposed += 1;
            let (next, ok) = independence_mh_step(&state.theta, |t| cond.log_density(t), sn, &mut rng);
            state.theta = next;
            accepted += ok as usize;
        } else {
            let cand = sample_theta_conditional(sn, &mut rng);
            if cond.log_density(&cand).is_finite() {
                state.theta = cand;
            }
        }

        if t >= cfg.burnin {
            let r = t - cfg.burnin;
            theta_out.row_mut(r).copy_from(&state.theta.transpose());
            if let Some(y) = y_out.as_mut() {
                for i in 0..n {
                    y[(r, i)] = spec.from_unit(state.u[i]);
                }
            }
        }
    }

    Ok(ChainDraws {
        chain_id,
        seed: cfg.seed,
        theta: theta_out,
        y_latent: y_out,
        theta_s,
        b4p_fallback_count: fallback_total,
        sn_fallback_count: sn_fallbacks,
        mh_proposed: proposed,
        mh_accepted: accepted,
    })
}

/// Runs `cfg.chains` chains on streams 0, 1, …; output is ordered by chain id.
pub fn run_chains(data: &FuzzyDataset, spec: &ModelSpec, cfg: &SamplerConfig) -> Result<Vec<ChainDraws>> {
    cfg.validate()?;
    if cfg.parallel {
        (0..cfg.chains)
            .into_par_iter()
            .map(|c| run_chain(data, spec, cfg, c))
            .collect()
    } else {
        (0..cfg.chains).map(|c| run_chain(data, spec, cfg, c)).collect()
    }
}
