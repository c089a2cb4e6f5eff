//! Convergence diagnostics, information criteria, density distances and the
//! posterior predictive check.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::approx::b4p::log_unnorm_posterior_unit;
use crate::approx::{fit_b4p, B4PConfig, B4PProposal};
use crate::dists::special::std_normal_quantile;
use crate::error::{invalid, Error, Result};
use crate::fuzznum::{BetaFuzzyNumber, Interval};
use crate::gibbs::ChainDraws;
use crate::model::{family_params, mode_logpdf, simulate, FuzzyDataset, LatentLaw, ModelSpec, ThetaS, ThetaY};
use crate::quad::{integrate, QuadConfig};

fn check_chains(chains: &[Vec<f64>]) -> Result<usize> {
    if chains.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 chains, got {}",
            chains.len()
        )));
    }
    let n = chains[0].len();
    if chains.iter().any(|c| c.len() != n) {
        return invalid("chains must have equal lengths");
    }
    if n < 4 {
        return Err(Error::InsufficientData(format!(
            "need at least 4 draws per chain, got {n}"
        )));
    }
    if chains.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Domain("draws must be finite".into()));
    }
    Ok(n)
}

/// Each chain cut into its first and second half (middle draw dropped when odd).
fn split(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let half = chains[0].len() / 2;
    chains
        .iter()
        .flat_map(|c| [c[..half].to_vec(), c[c.len() - half..].to_vec()])
        .collect()
}

/// Normal scores of the pooled average ranks.
fn rank_normalize(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut pooled: Vec<(f64, usize)> = chains
        .iter()
        .flatten()
        .copied()
        .enumerate()
        .map(|(i, v)| (v, i))
        .collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total = pooled.len();
    let mut z = vec![0.0; total];
    let mut i = 0;
    while i < total {
        let mut j = i;
        while j + 1 < total && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        let rank = 0.5 * ((i + 1) + (j + 1)) as f64;
        let score = std_normal_quantile((rank - 0.375) / (total as f64 + 0.25));
        for p in &pooled[i..=j] {
            z[p.1] = score;
        }
        i = j + 1;
    }
    let n = chains[0].len();
    z.chunks(n).map(|c| c.to_vec()).collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sample_var(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)
}

fn rhat_basic(chains: &[Vec<f64>]) -> Result<f64> {
    let n = chains[0].len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let w = mean(&chains.iter().map(|c| sample_var(c)).collect::<Vec<_>>());
    if !(w > 0.0) {
        return Err(Error::Domain("zero within-chain variance".into()));
    }
    let b = n * sample_var(&means);
    let var_plus = (n - 1.0) / n * w + b / n;
    Ok((var_plus / w).sqrt())
}

/// Split-R̂ on rank-normalized draws.
pub fn rhat(chains: &[Vec<f64>]) -> Result<f64> {
    check_chains(chains)?;
    rhat_basic(&rank_normalize(&split(chains)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EssKind {
    Bulk,
    Tail,
}

/// Biased autocovariances of `x` for all lags, via zero-padded FFT.
fn autocovariance(x: &[f64], planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let n = x.len();
    let size = (2 * n).next_power_of_two();
    let m = mean(x);
    let mut buf: Vec<Complex<f64>> = x.iter().map(|v| Complex::new(v - m, 0.0)).collect();
    buf.resize(size, Complex::new(0.0, 0.0));
    planner.plan_fft_forward(size).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    buf[..n].iter().map(|c| c.re / (size as f64 * n as f64)).collect()
}

/// Multi-chain ESS with Geyer's initial monotone sequence.
fn ess_basic(chains: &[Vec<f64>]) -> Result<f64> {
    let m = chains.len();
    let n = chains[0].len();
    let mut planner = FftPlanner::new();
    let acov: Vec<Vec<f64>> = chains.iter().map(|c| autocovariance(c, &mut planner)).collect();
    let nf = n as f64;
    let chain_var: Vec<f64> = acov.iter().map(|a| a[0] * nf / (nf - 1.0)).collect();
    let mean_var = mean(&chain_var);
    let mut var_plus = mean_var * (nf - 1.0) / nf;
    if m > 1 {
        var_plus += sample_var(&chains.iter().map(|c| mean(c)).collect::<Vec<_>>());
    }
    if !(var_plus > 0.0 && mean_var > 0.0) {
        return Err(Error::Domain("ESS is undefined for draws without variance".into()));
    }
    let rho = |t: usize| 1.0 - (mean_var - acov.iter().map(|a| a[t]).sum::<f64>() / m as f64) / var_plus;
    let mut rho_t = vec![0.0; n];
    rho_t[0] = 1.0;
    let mut even = 1.0;
    let mut odd = rho(1);
    rho_t[1] = odd;
    let mut t = 1;
    while t + 3 < n && even + odd > 0.0 {
        even = rho(t + 1);
        odd = rho(t + 2);
        if even + odd >= 0.0 {
            rho_t[t + 1] = even;
            rho_t[t + 2] = odd;
        }
        t += 2;
    }
    let max_t = t;
    if even > 0.0 && max_t + 1 < n {
        rho_t[max_t + 1] = even;
    }
    let mut t = 1;
    while t + 2 <= max_t {
        let prev = rho_t[t - 1] + rho_t[t];
        if rho_t[t + 1] + rho_t[t + 2] > prev {
            rho_t[t + 1] = prev / 2.0;
            rho_t[t + 2] = prev / 2.0;
        }
        t += 2;
    }
    let total = (m * n) as f64;
    let tail: f64 = rho_t[max_t..(max_t + 2).min(n)].iter().sum();
    let tau = (-1.0 + 2.0 * rho_t[..max_t].iter().sum::<f64>() + tail).max(1.0 / total.log10());
    Ok(total / tau)
}

fn pooled_quantile(chains: &[Vec<f64>], p: f64) -> f64 {
    let mut all: Vec<f64> = chains.iter().flatten().copied().collect();
    all.sort_by(f64::total_cmp);
    quantile_sorted(&all, p)
}

/// Bulk ESS (rank-normalized split chains) or tail ESS (minimum over the
/// 5% and 95% quantile indicators of the split chains).
pub fn ess(chains: &[Vec<f64>], kind: EssKind) -> Result<f64> {
    check_chains(chains)?;
    let halves = split(chains);
    match kind {
        EssKind::Bulk => {
            if halves.iter().flatten().all(|v| *v == halves[0][0]) {
                return Err(Error::Domain("ESS is undefined for constant draws".into()));
            }
            ess_basic(&rank_normalize(&halves))
        }
        EssKind::Tail => {
            let mut best = f64::INFINITY;
            for p in [0.05, 0.95] {
                let q = pooled_quantile(chains, p);
                let ind: Vec<Vec<f64>> = halves
                    .iter()
                    .map(|c| c.iter().map(|v| if *v <= q { 1.0 } else { 0.0 }).collect())
                    .collect();
                best = best.min(ess_basic(&ind)?);
            }
            Ok(best)
        }
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Shortest interval containing ⌈mass·N⌉ of the sorted draws.
pub fn hpdi(draws: &[f64], mass: f64) -> Result<Interval> {
    if !(mass > 0.0 && mass < 1.0) {
        return invalid(format!("mass must lie in (0, 1), got {mass}"));
    }
    if draws.len() < 100 {
        return Err(Error::InsufficientData(format!(
            "HPDI needs at least 100 draws, got {}",
            draws.len()
        )));
    }
    if draws.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("draws must be finite".into()));
    }
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = ((mass * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    let (lo, hi) = sorted
        .windows(k)
        .map(|w| (w[0], w[k - 1]))
        .min_by(|a, b| (a.1 - a.0).total_cmp(&(b.1 - b.0)))
        .expect("at least one window");
    Interval::new(lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waic {
    pub waic: f64,
    pub lppd: f64,
    pub p_waic: f64,
}

/// WAIC from a draws × units matrix of pointwise log-likelihoods.
pub fn waic(loglik: &DMatrix<f64>) -> Result<Waic> {
    if loglik.nrows() == 0 || loglik.ncols() == 0 {
        return Err(Error::InsufficientData("empty log-likelihood matrix".into()));
    }
    if loglik.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("pointwise log-likelihoods must be finite".into()));
    }
    let s = loglik.nrows() as f64;
    let mut lppd = 0.0;
    let mut p_waic = 0.0;
    for col in loglik.column_iter() {
        let max = col.max();
        let lse = max + col.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        lppd += lse - s.ln();
        if loglik.nrows() > 1 {
            let m = col.mean();
            p_waic += col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (s - 1.0);
        }
    }
    Ok(Waic {
        waic: -2.0 * (lppd - p_waic),
        lppd,
        p_waic,
    })
}

/// How the latent outcome enters the pointwise log-likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WaicMode {
    /// ln f(mᵢ | yᵢ⁽ᵈ⁾, sᵢ) + ln f_Y(yᵢ⁽ᵈ⁾ | θ⁽ᵈ⁾) with the stored latent draws.
    #[default]
    Conditional,
    /// ln ∫ f(mᵢ | y, sᵢ) f_Y(y | θ⁽ᵈ⁾) dy by quadrature.
    Marginal,
}

/// Draws × units pointwise log-likelihood over the pooled chains, keeping
/// every `thin`-th draw.
pub fn pointwise_loglik(
    chains: &[ChainDraws],
    data: &FuzzyDataset,
    spec: &ModelSpec,
    mode: WaicMode,
    thin: usize,
) -> Result<DMatrix<f64>> {
    let thin = thin.max(1);
    let k = spec.n_coef;
    let ln_w = spec.width().ln();
    let m_star = data.unit_modes();
    let s = data.precisions();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for ch in chains {
        if mode == WaicMode::Conditional && ch.y_latent.is_none() {
            return invalid("conditional WAIC needs stored latent draws");
        }
        for d in (0..ch.theta.nrows()).step_by(thin) {
            let theta = ThetaY::from_vector(&ch.theta.row(d).transpose());
            let mut row = Vec::with_capacity(data.n());
            for i in 0..data.n() {
                let eta = data.x.row(i).dot(&theta.beta.rows(0, k).transpose());
                let law = family_params(spec, theta.phi, eta)?;
                let v = match mode {
                    WaicMode::Conditional => {
                        let y = ch.y_latent.as_ref().map(|y| y[(d, i)]).unwrap_or(f64::NAN);
                        let u = spec.to_unit(y);
                        mode_logpdf(m_star[i], s[i], u) + law.unit_logpdf(u) - 2.0 * ln_w
                    }
                    WaicMode::Marginal => marginal_mode_loglik(m_star[i], s[i], &law)? - ln_w,
                };
                row.push(v);
            }
            rows.push(row);
        }
    }
    let n = data.n();
    Ok(DMatrix::from_fn(rows.len(), n, |r, c| rows[r][c]))
}

/// ln ∫ Beta(m*; s·u, s − s·u) f_Y(u) du on the unit scale.
pub fn marginal_mode_loglik(m_star: f64, s: f64, law: &LatentLaw) -> Result<f64> {
    let f = |u: f64| log_unnorm_posterior_kernel(u, m_star, s, law);
    let (peak, _) = grid_peak(&f);
    let v = integrate(
        |u| (f(u) - peak).exp(),
        0.0,
        1.0,
        &peak_breaks(&f),
        QuadConfig::with_rel_tol(1e-8),
    )?;
    Ok(peak + v.ln())
}

fn log_unnorm_posterior_kernel(u: f64, m_star: f64, s: f64, law: &LatentLaw) -> f64 {
    if !(u > 0.0 && u < 1.0) {
        return f64::NEG_INFINITY;
    }
    mode_logpdf(m_star, s, u) + law.unit_logpdf(u)
}

const GRID: usize = 400;

fn grid_peak(f: &impl Fn(f64) -> f64) -> (f64, f64) {
    (1..GRID)
        .map(|k| {
            let u = k as f64 / GRID as f64;
            (f(u), u)
        })
        .filter(|p| p.0.is_finite())
        .fold((f64::NEG_INFINITY, 0.5), |a, b| if b.0 > a.0 { b } else { a })
}

/// Breaks concentrated where a log density is within reach of its peak.
fn peak_breaks(f: &impl Fn(f64) -> f64) -> Vec<f64> {
    let (peak, _) = grid_peak(f);
    let mut out: Vec<f64> = (1..GRID)
        .map(|k| k as f64 / GRID as f64)
        .filter(|u| f(*u) > peak - 40.0)
        .collect();
    if out.len() > 64 {
        let step = out.len() / 64;
        out = out.into_iter().step_by(step).collect();
    }
    out
}

fn distance_pair<F: Fn(f64) -> f64, G: Fn(f64) -> f64>(
    f: &F,
    g: &G,
    support: Interval,
    breaks: &[f64],
) -> Result<(f64, f64)> {
    let cfg = QuadConfig {
        rel_tol: 1e-7,
        abs_tol: 1e-12,
        max_segments: 4000,
    };
    let safe = |v: f64| if v.is_finite() && v > 0.0 { v } else { 0.0 };
    let tv = 0.5 * integrate(|x| (safe(f(x)) - safe(g(x))).abs(), support.lo, support.hi, breaks, cfg)?;
    let h2 = 0.5
        * integrate(
            |x| (safe(f(x)).sqrt() - safe(g(x)).sqrt()).powi(2),
            support.lo,
            support.hi,
            breaks,
            cfg,
        )?;
    Ok((tv.clamp(0.0, 1.0), h2.clamp(0.0, 1.0).sqrt()))
}

/// Total variation distance ½∫|f − g| over `support`.
pub fn tv_distance<F: Fn(f64) -> f64, G: Fn(f64) -> f64>(f: F, g: G, support: Interval) -> Result<f64> {
    Ok(distance_pair(&f, &g, support, &[])?.0)
}

/// Hellinger distance √(½∫(√f − √g)²) over `support`.
pub fn hellinger<F: Fn(f64) -> f64, G: Fn(f64) -> f64>(f: F, g: G, support: Interval) -> Result<f64> {
    Ok(distance_pair(&f, &g, support, &[])?.1)
}

/// Both distances, with the integration range pre-split at `breaks`.
pub fn distances_with_breaks<F: Fn(f64) -> f64, G: Fn(f64) -> f64>(
    f: F,
    g: G,
    support: Interval,
    breaks: &[f64],
) -> Result<(f64, f64)> {
    distance_pair(&f, &g, support, breaks)
}

/// Distances between the normalized latent conditional π(u | m*, s, θ) and
/// its fitted B4P proposal, on the unit scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproximationDistance {
    pub tv: f64,
    pub hellinger: f64,
    pub proposal: B4PProposal,
}

pub fn approximation_distance(m_star: f64, s: f64, law: &LatentLaw, cfg: &B4PConfig) -> Result<ApproximationDistance> {
    let w = law.ub - law.lb;
    let proposal = fit_b4p(law.lb + w * m_star, s, law, cfg)?;
    let target = |u: f64| log_unnorm_posterior_unit(u, m_star, s, law);
    let (peak, _) = grid_peak(&target);
    let mut breaks = peak_breaks(&target);
    breaks.push(proposal.unit_lambda());
    let quad = QuadConfig::with_rel_tol(1e-9);
    let z = integrate(|u| (target(u) - peak).exp(), 0.0, 1.0, &breaks, quad)?;
    let ln_z = peak + z.ln();
    let (tv, hd) = distance_pair(
        &|u: f64| (target(u) - ln_z).exp(),
        &|u: f64| proposal.unit_logpdf(u).exp(),
        Interval { lo: 0.0, hi: 1.0 },
        &breaks,
    )?;
    Ok(ApproximationDistance {
        tv,
        hellinger: hd,
        proposal,
    })
}

/// Per-parameter posterior summary.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub hpdi: Interval,
    pub rhat: f64,
    pub ess_bulk: f64,
    pub ess_tail: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub params: Vec<ParamSummary>,
}

/// beta_0 … beta_{k−1}, phi.
pub fn param_names(n_coef: usize) -> Vec<String> {
    (0..n_coef)
        .map(|j| format!("beta_{j}"))
        .chain(["phi".to_string()])
        .collect()
}

/// Summaries over pooled chains. With a single chain R̂ and ESS are NaN.
pub fn summarize(chains: &[ChainDraws]) -> Result<PosteriorSummary> {
    let first = chains
        .first()
        .ok_or_else(|| Error::InsufficientData("no chains to summarize".into()))?;
    let d = first.theta.ncols();
    let names = param_names(d - 1);
    let mut params = Vec::with_capacity(d);
    for (j, name) in names.into_iter().enumerate() {
        let per: Vec<Vec<f64>> = chains.iter().map(|c| c.param(j)).collect();
        let pooled: Vec<f64> = per.iter().flatten().copied().collect();
        let m = mean(&pooled);
        let sd = if pooled.len() > 1 {
            sample_var(&pooled).sqrt()
        } else {
            0.0
        };
        let (rhat, ess_bulk, ess_tail) = if per.len() >= 2 {
            (
                rhat(&per).unwrap_or(f64::NAN),
                ess(&per, EssKind::Bulk).unwrap_or(f64::NAN),
                ess(&per, EssKind::Tail).unwrap_or(f64::NAN),
            )
        } else {
            (f64::NAN, f64::NAN, f64::NAN)
        };
        params.push(ParamSummary {
            name,
            mean: m,
            sd,
            hpdi: hpdi(&pooled, 0.95)?,
            rhat,
            ess_bulk,
            ess_tail,
        });
    }
    Ok(PosteriorSummary { params })
}

/// Fuzzy-data statistics compared in the predictive check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    Centroid,
    /// Width of the α-cut at [`PpcOptions::support_alpha`]: the 0-cut of a
    /// Beta fuzzy number is always the whole bound interval.
    SupportWidth,
    Kaufman,
}

impl Statistic {
    pub const ALL: [Statistic; 3] = [Statistic::Centroid, Statistic::SupportWidth, Statistic::Kaufman];

    pub fn name(self) -> &'static str {
        match self {
            Statistic::Centroid => "centroid",
            Statistic::SupportWidth => "support",
            Statistic::Kaufman => "kaufman",
        }
    }
}

/// How replicate statistics are paired with observed ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PpcAlignment {
    /// Unit i of each replicate against observed unit i.
    #[default]
    Unit,
    /// k-th smallest replicate statistic against the k-th smallest observed.
    Sorted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpcOptions {
    pub replicates: usize,
    pub alignment: PpcAlignment,
    pub support_alpha: f64,
}

impl Default for PpcOptions {
    fn default() -> Self {
        Self {
            replicates: 500,
            alignment: PpcAlignment::Unit,
            support_alpha: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatisticReport {
    pub statistic: Statistic,
    pub observed: Vec<f64>,
    pub q1: Vec<f64>,
    pub q3: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    /// 2.5% and 97.5% predictive quantiles.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Share of observed values inside [lower, upper].
    pub cp: f64,
    /// |2p̄ − 1| with p̄ the mean over units of Pr(S_rep ≥ S_obs).
    pub bp: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PPCReport {
    pub replicates: usize,
    pub alignment: PpcAlignment,
    pub stats: Vec<StatisticReport>,
}

impl PPCReport {
    pub fn get(&self, statistic: Statistic) -> &StatisticReport {
        self.stats
            .iter()
            .find(|s| s.statistic == statistic)
            .expect("all statistics are reported")
    }
}

/// (centroid, support width, Kaufman index) of one fuzzy number.
pub fn fuzzy_statistics(bf: &BetaFuzzyNumber, support_alpha: f64) -> Result<[f64; 3]> {
    Ok([bf.centroid()?, bf.alpha_cut(support_alpha).width(), bf.kaufman_index()?])
}

fn dataset_statistics(data: &FuzzyDataset, support_alpha: f64) -> Result<Vec<[f64; 3]>> {
    data.observations
        .iter()
        .map(|o| fuzzy_statistics(o, support_alpha))
        .collect()
}

/// Posterior predictive check with default options and `b` replicates.
pub fn ppc<R: Rng + ?Sized>(
    chains: &[ChainDraws],
    data: &FuzzyDataset,
    spec: &ModelSpec,
    theta_s: &ThetaS,
    b: usize,
    rng: &mut R,
) -> Result<PPCReport> {
    let opts = PpcOptions {
        replicates: b,
        ..Default::default()
    };
    ppc_with(chains, data, spec, theta_s, &opts, rng)
}

/// Draws `opts.replicates` parameter vectors from the pooled chains,
/// simulates one fuzzy dataset per draw and compares statistics.
pub fn ppc_with<R: Rng + ?Sized>(
    chains: &[ChainDraws],
    data: &FuzzyDataset,
    spec: &ModelSpec,
    theta_s: &ThetaS,
    opts: &PpcOptions,
    rng: &mut R,
) -> Result<PPCReport> {
    if opts.replicates < 100 {
        return Err(Error::InsufficientData(format!(
            "predictive check needs at least 100 replicates, got {}",
            opts.replicates
        )));
    }
    let total: usize = chains.iter().map(|c| c.theta.nrows()).sum();
    if total == 0 {
        return Err(Error::InsufficientData("no posterior draws".into()));
    }
    let n = data.n();
    let base: u64 = rng.random();
    let reps: Vec<Vec<[f64; 3]>> = (0..opts.replicates)
        .into_par_iter()
        .map(|b| {
            let mut r = ChaCha8Rng::seed_from_u64(base);
            r.set_stream(b as u64);
            let mut pick = r.random_range(0..total);
            let chain = chains
                .iter()
                .find(|c| {
                    if pick < c.theta.nrows() {
                        true
                    } else {
                        pick -= c.theta.nrows();
                        false
                    }
                })
                .expect("index within pooled draws");
            let theta = ThetaY::from_vector(&chain.theta.row(pick).transpose());
            let rep = simulate(spec, &theta, theta_s, &data.x, &mut r)?;
            dataset_statistics(&rep, opts.support_alpha)
        })
        .collect::<Result<_>>()?;
    let observed = dataset_statistics(data, opts.support_alpha)?;

    let mut stats = Vec::with_capacity(3);
    for (k, statistic) in Statistic::ALL.into_iter().enumerate() {
        let mut obs: Vec<f64> = observed.iter().map(|v| v[k]).collect();
        let mut per_unit: Vec<Vec<f64>> = vec![Vec::with_capacity(opts.replicates); n];
        for rep in &reps {
            let mut vals: Vec<f64> = rep.iter().map(|v| v[k]).collect();
            if opts.alignment == PpcAlignment::Sorted {
                vals.sort_by(f64::total_cmp);
            }
            for (i, v) in vals.into_iter().enumerate() {
                per_unit[i].push(v);
            }
        }
        if opts.alignment == PpcAlignment::Sorted {
            obs.sort_by(f64::total_cmp);
        }
        let mut report = StatisticReport {
            statistic,
            observed: obs.clone(),
            q1: Vec::with_capacity(n),
            q3: Vec::with_capacity(n),
            min: Vec::with_capacity(n),
            max: Vec::with_capacity(n),
            lower: Vec::with_capacity(n),
            upper: Vec::with_capacity(n),
            cp: 0.0,
            bp: 0.0,
        };
        let mut covered = 0usize;
        let mut p_sum = 0.0;
        for (i, vals) in per_unit.iter_mut().enumerate() {
            vals.sort_by(f64::total_cmp);
            let (lo, hi) = (quantile_sorted(vals, 0.025), quantile_sorted(vals, 0.975));
            if lo <= obs[i] && obs[i] <= hi {
                covered += 1;
            }
            p_sum += vals.iter().filter(|v| **v >= obs[i]).count() as f64 / vals.len() as f64;
            report.q1.push(quantile_sorted(vals, 0.25));
            report.q3.push(quantile_sorted(vals, 0.75));
            report.min.push(vals[0]);
            report.max.push(vals[vals.len() - 1]);
            report.lower.push(lo);
            report.upper.push(hi);
        }
        report.cp = covered as f64 / n as f64;
        report.bp = (2.0 * p_sum / n as f64 - 1.0).abs();
        stats.push(report);
    }
    Ok(PPCReport {
        replicates: opts.replicates,
        alignment: opts.alignment,
        stats,
    })
}
