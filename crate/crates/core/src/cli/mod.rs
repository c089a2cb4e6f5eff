//! Command-line front end: configuration, data ingestion, the simulate / fit
//! / ppc / benchmark commands and their file outputs.

pub mod benchmark;
pub mod config;
pub mod io;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::approx::B4PConfig;
use crate::diagnostics::{pointwise_loglik, ppc_with, summarize, waic, PpcOptions};
use crate::gibbs::{gamma_mle, run_chains, ChainDraws};
use crate::model::{simulate, ThetaS, ThetaY};
pub use config::{DataFormat, RunConfig};
use io::{ingest, Ingested};

#[derive(Debug, Parser)]
#[command(name = "fuzzreg", version, about = "Bayesian regression for bounded fuzzy data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a fuzzy dataset from the model; writes data.csv, latent.csv and truth.txt.
    Simulate,
    /// Run the sampler; writes draws.csv and summary.txt.
    Fit,
    /// Posterior predictive check; writes ppc_report.txt and ppc_quantiles.csv.
    Ppc,
    /// Approximation-quality benchmark; writes benchmark.csv.
    Benchmark,
}

/// Flags that override the configuration file.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub chains: Option<usize>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true)]
    pub burnin: Option<usize>,
    #[arg(long, global = true)]
    pub family: Option<String>,
    #[arg(long, global = true)]
    pub link: Option<String>,
    /// Metropolis–Hastings correction of the θ step.
    #[arg(long, global = true)]
    pub mh_correct: bool,
    /// Refit the skew-normal approximation every K iterations.
    #[arg(long, global = true, value_name = "K")]
    pub sn_refresh: Option<usize>,
    /// Keep covariates on their original scale.
    #[arg(long, global = true)]
    pub no_standardize: bool,
    /// Benchmark repetitions per grid configuration.
    #[arg(long, global = true)]
    pub reps: Option<usize>,
    /// Predictive-check replicates.
    #[arg(long, global = true)]
    pub replicates: Option<usize>,
    /// Input data file.
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    /// beta-fuzzy | trapezoidal
    #[arg(long, global = true)]
    pub format: Option<String>,
    /// Draws CSV from an earlier fit (ppc).
    #[arg(long, global = true)]
    pub draws: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub lb: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub ub: Option<f64>,
}

impl Overrides {
    /// Loads the configuration file (if any) and applies the flags.
    pub fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                RunConfig::parse(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => RunConfig::default(),
        };
        macro_rules! take {
            ($field:ident) => {
                if let Some(v) = self.$field.clone() {
                    cfg.$field = v;
                }
            };
        }
        take!(seed);
        take!(chains);
        take!(samples);
        take!(burnin);
        take!(sn_refresh);
        take!(reps);
        take!(out);
        if let Some(f) = &self.family {
            cfg.family = f.parse()?;
        }
        if let Some(l) = &self.link {
            cfg.link = Some(l.parse()?);
        }
        if let Some(f) = &self.format {
            cfg.format = f.parse()?;
        }
        if self.mh_correct {
            cfg.mh_correct = true;
        }
        if self.no_standardize {
            cfg.standardize = false;
        }
        if let Some(b) = self.replicates {
            cfg.ppc_replicates = b;
        }
        if self.data.is_some() {
            cfg.data = self.data.clone();
        }
        if self.draws.is_some() {
            cfg.draws = self.draws.clone();
        }
        if self.lb.is_some() {
            cfg.lb = self.lb;
        }
        if self.ub.is_some() {
            cfg.ub = self.ub;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Runs the parsed command; returns the files written.
pub fn run(cli: &Cli) -> anyhow::Result<Vec<PathBuf>> {
    let cfg = cli.overrides.resolve()?;
    match cli.command {
        Command::Simulate => cmd_simulate(&cfg),
        Command::Fit => cmd_fit(&cfg).map(|f| f.files),
        Command::Ppc => cmd_ppc(&cfg),
        Command::Benchmark => cmd_benchmark(&cfg),
    }
}

fn bounds(cfg: &RunConfig) -> Option<(f64, f64)> {
    match (cfg.lb, cfg.ub) {
        (Some(l), Some(u)) => Some((l, u)),
        (None, None) => None,
        (l, u) => Some((l.unwrap_or(0.0), u.unwrap_or(1.0))),
    }
}

fn emit(out: &Path, name: &str, contents: &str, files: &mut Vec<PathBuf>) -> anyhow::Result<()> {
    let path = out.join(name);
    io::write_atomic(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    files.push(path);
    Ok(())
}

/// Simulates `n` units with standard-normal covariates from the configured truth.
pub fn cmd_simulate(cfg: &RunConfig) -> anyhow::Result<Vec<PathBuf>> {
    if cfg.beta.is_empty() {
        bail!("simulation needs at least an intercept in 'beta'");
    }
    let (lb, ub) = bounds(cfg).unwrap_or((0.0, 1.0));
    let k = cfg.beta.len();
    let spec = cfg.model(lb, ub, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut x = DMatrix::from_element(cfg.n, k, 1.0);
    for i in 0..cfg.n {
        for j in 1..k {
            x[(i, j)] = StandardNormal.sample(&mut rng);
        }
    }
    let theta_y = ThetaY::new(cfg.beta.clone(), cfg.phi);
    let theta_s = ThetaS::new(cfg.alpha_s, cfg.beta_s)?;
    let data = simulate(&spec, &theta_y, &theta_s, &x, &mut rng)?;
    let ids: Vec<String> = (1..=cfg.n).map(|i| i.to_string()).collect();
    let names: Vec<String> = (1..k).map(|j| format!("x{j}")).collect();
    let covariates = x.columns(1, k - 1).into_owned();

    let mut files = Vec::new();
    emit(
        &cfg.out,
        "data.csv",
        &io::dataset_csv(&data, &ids, &covariates, &names),
        &mut files,
    )?;
    let mut latent = String::from("id,y\n");
    for (id, y) in ids.iter().zip(data.latent.iter().flatten()) {
        let _ = writeln!(latent, "{id},{y}");
    }
    emit(&cfg.out, "latent.csv", &latent, &mut files)?;
    let mut truth = cfg.clone();
    truth.lb = Some(lb);
    truth.ub = Some(ub);
    emit(&cfg.out, "truth.txt", &truth.to_text(), &mut files)?;
    Ok(files)
}

/// Output of [`cmd_fit`].
pub struct FitOutput {
    pub ingested: Ingested,
    pub chains: Vec<ChainDraws>,
    pub theta_s: ThetaS,
    pub files: Vec<PathBuf>,
}

fn load(cfg: &RunConfig) -> anyhow::Result<Ingested> {
    let Some(path) = &cfg.data else {
        bail!("no input data: pass --data or set 'data' in the configuration");
    };
    ingest(path, cfg.format, bounds(cfg), cfg.standardize).with_context(|| format!("ingesting {}", path.display()))
}

/// Fits the model to the configured data file.
pub fn cmd_fit(cfg: &RunConfig) -> anyhow::Result<FitOutput> {
    let ingested = load(cfg)?;
    let data = &ingested.data;
    let spec = cfg.model(data.lb, data.ub, data.n_coef())?;
    let chains = run_chains(data, &spec, &cfg.sampler())?;
    let theta_s = chains[0].theta_s;
    let summary = summarize(&chains)?;

    let mut files = Vec::new();
    emit(&cfg.out, "draws.csv", &io::draws_csv(&chains), &mut files)?;
    let mut text = io::summary_text(&summary);
    let _ = writeln!(
        text,
        "[theta_s]\nalpha_s = {:.4}\nbeta_s = {:.4}\n",
        theta_s.alpha_s, theta_s.beta_s
    );
    if cfg.store_latent {
        let ll = pointwise_loglik(&chains, data, &spec, cfg.waic, 1)?;
        let w = waic(&ll)?;
        let _ = writeln!(
            text,
            "[waic]\nmode = {:?}\nwaic = {:.4}\nlppd = {:.4}\np_waic = {:.4}\n",
            cfg.waic, w.waic, w.lppd, w.p_waic
        );
    }
    let fallbacks: usize = chains.iter().map(|c| c.b4p_fallback_count).sum();
    let sn_fallbacks: usize = chains.iter().map(|c| c.sn_fallback_count).sum();
    let _ = writeln!(
        text,
        "[sampler]\nchains = {}\nsamples = {}\nburnin = {}\nseed = {}\nb4p_fallbacks = {fallbacks}\nsn_fallbacks = {sn_fallbacks}",
        cfg.chains, cfg.samples, cfg.burnin, cfg.seed
    );
    if let Some(rate) = chains.iter().map(|c| c.acceptance_rate()).collect::<Option<Vec<_>>>() {
        let _ = writeln!(
            text,
            "mh_acceptance = {:.4}",
            rate.iter().sum::<f64>() / rate.len() as f64
        );
    }
    emit(&cfg.out, "summary.txt", &text, &mut files)?;

    if let Some(st) = &ingested.standardization {
        emit(&cfg.out, "standardization.csv", &st.to_text(), &mut files)?;
        let original: Vec<ChainDraws> = chains
            .iter()
            .map(|c| {
                let mut c = c.clone();
                for r in 0..c.theta.nrows() {
                    let row: Vec<f64> = c.theta.row(r).iter().copied().collect();
                    for (j, v) in st.back_transform(&row).into_iter().enumerate() {
                        c.theta[(r, j)] = v;
                    }
                }
                c
            })
            .collect();
        emit(
            &cfg.out,
            "summary_original_scale.txt",
            &io::summary_text(&summarize(&original)?),
            &mut files,
        )?;
    }
    Ok(FitOutput {
        ingested,
        chains,
        theta_s,
        files,
    })
}

/// Predictive check from stored draws (`draws`) or from a fresh fit.
pub fn cmd_ppc(cfg: &RunConfig) -> anyhow::Result<Vec<PathBuf>> {
    let (ingested, chains, theta_s, mut files) = match &cfg.draws {
        Some(path) => {
            let ingested = load(cfg)?;
            let theta_s = gamma_mle(&ingested.data.precisions())?;
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let chains = io::read_draws(&text, theta_s)?;
            if chains.first().map(|c| c.theta.ncols()) != Some(ingested.data.n_coef() + 1) {
                bail!("draws do not match the number of coefficients in the data");
            }
            (ingested, chains, theta_s, Vec::new())
        }
        None => {
            let fit = cmd_fit(cfg)?;
            (fit.ingested, fit.chains, fit.theta_s, fit.files)
        }
    };
    let data = &ingested.data;
    let spec = cfg.model(data.lb, data.ub, data.n_coef())?;
    let opts = PpcOptions {
        replicates: cfg.ppc_replicates,
        alignment: cfg.ppc_alignment,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(u64::MAX);
    let report = ppc_with(&chains, data, &spec, &theta_s, &opts, &mut rng)?;
    emit(&cfg.out, "ppc_report.txt", &io::ppc_report_text(&report), &mut files)?;
    emit(
        &cfg.out,
        "ppc_quantiles.csv",
        &io::ppc_quantiles_csv(&report),
        &mut files,
    )?;
    Ok(files)
}

/// Sweeps the benchmark grids with `reps` problems per configuration.
pub fn cmd_benchmark(cfg: &RunConfig) -> anyhow::Result<Vec<PathBuf>> {
    let b4p = B4PConfig::with_eps(cfg.eps);
    let results = benchmark::run(cfg.reps, cfg.seed, &b4p)?;
    let table = benchmark::format_table(&results);
    let mut files = Vec::new();
    emit(&cfg.out, "benchmark.csv", &table, &mut files)?;
    Ok(files)
}
