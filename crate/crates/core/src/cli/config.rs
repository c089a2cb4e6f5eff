//! Flat `key = value` run configuration.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::diagnostics::{PpcAlignment, WaicMode};
use crate::error::{invalid, Error, Result};
use crate::gibbs::SamplerConfig;
use crate::model::{Family, Link, ModelSpec, PriorSpec};

/// Layout of an input data file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DataFormat {
    /// `id,m,s[,lb,ub],x1..xJ`
    #[default]
    BetaFuzzy,
    /// `id,a1,a2,a3,a4,x1..xJ`
    Trapezoidal,
}

impl FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "beta-fuzzy" | "beta" | "bfn" => Ok(Self::BetaFuzzy),
            "trapezoidal" | "trapezoid" | "tpz" => Ok(Self::Trapezoidal),
            other => invalid(format!("unknown data format '{other}'")),
        }
    }
}

impl DataFormat {
    pub fn name(self) -> &'static str {
        match self {
            Self::BetaFuzzy => "beta-fuzzy",
            Self::Trapezoidal => "trapezoidal",
        }
    }
}

/// Every command's parameters. Unset optional values fall back to
/// family defaults (link) or to the data (bounds).
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub family: Family,
    pub link: Option<Link>,
    pub lb: Option<f64>,
    pub ub: Option<f64>,
    pub chains: usize,
    pub samples: usize,
    pub burnin: usize,
    pub seed: u64,
    pub eps: f64,
    pub mh_correct: bool,
    pub sn_refresh: usize,
    pub standardize: bool,
    pub store_latent: bool,
    pub prior: PriorSpec,
    pub data: Option<PathBuf>,
    pub format: DataFormat,
    pub draws: Option<PathBuf>,
    pub out: PathBuf,
    /// Benchmark repetitions per grid configuration.
    pub reps: usize,
    /// Predictive-check replicates.
    pub ppc_replicates: usize,
    pub ppc_alignment: PpcAlignment,
    pub waic: WaicMode,
    // Simulation truth.
    pub n: usize,
    pub beta: Vec<f64>,
    pub phi: f64,
    pub alpha_s: f64,
    pub beta_s: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sampler = SamplerConfig::default();
        Self {
            family: Family::Beta,
            link: None,
            lb: None,
            ub: None,
            chains: sampler.chains,
            samples: sampler.samples,
            burnin: sampler.burnin,
            seed: sampler.seed,
            eps: sampler.eps,
            mh_correct: sampler.mh_correct,
            sn_refresh: sampler.sn_refresh,
            standardize: true,
            store_latent: true,
            prior: PriorSpec::default(),
            data: None,
            format: DataFormat::BetaFuzzy,
            draws: None,
            out: PathBuf::from("."),
            reps: 500,
            ppc_replicates: 500,
            ppc_alignment: PpcAlignment::Unit,
            waic: WaicMode::Conditional,
            n: 200,
            beta: vec![0.0, 0.5],
            phi: 2.0,
            alpha_s: 15.0,
            beta_s: 5.0,
        }
    }
}

fn parse_bool(v: &str) -> std::result::Result<bool, String> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(format!("expected a boolean, got '{v}'")),
    }
}

fn parse_num<T: FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse '{v}' as a number"))
}

fn parse_list(v: &str) -> std::result::Result<Vec<f64>, String> {
    v.split(',').map(|p| parse_num(p.trim())).collect()
}

impl RunConfig {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse { line: idx + 1, message };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected key = value, got '{line}'")))?;
            cfg.set(key.trim(), value.trim()).map_err(parse_err)?;
        }
        Ok(cfg)
    }

    /// Sets one key from its text value.
    pub fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        let opt_f = |v: &str| -> std::result::Result<Option<f64>, String> {
            if v.is_empty() || v == "auto" {
                Ok(None)
            } else {
                parse_num(v).map(Some)
            }
        };
        match key {
            "family" => self.family = v.parse().map_err(|e: Error| e.to_string())?,
            "link" => {
                self.link = if v.is_empty() || v == "auto" {
                    None
                } else {
                    Some(v.parse().map_err(|e: Error| e.to_string())?)
                }
            }
            "lb" => self.lb = opt_f(v)?,
            "ub" => self.ub = opt_f(v)?,
            "bounds" => {
                let b = parse_list(v)?;
                if b.len() != 2 {
                    return Err("bounds needs two values: lb, ub".into());
                }
                self.lb = Some(b[0]);
                self.ub = Some(b[1]);
            }
            "chains" => self.chains = parse_num(v)?,
            "samples" => self.samples = parse_num(v)?,
            "burnin" => self.burnin = parse_num(v)?,
            "seed" => self.seed = parse_num(v)?,
            "eps" => self.eps = parse_num(v)?,
            "mh_correct" => self.mh_correct = parse_bool(v)?,
            "sn_refresh" => self.sn_refresh = parse_num(v)?,
            "standardize" => self.standardize = parse_bool(v)?,
            "store_latent" => self.store_latent = parse_bool(v)?,
            "prior_beta_mean" => self.prior.beta_mean = parse_num(v)?,
            "prior_beta_sd" => self.prior.beta_sd = parse_num(v)?,
            "prior_phi_mean" => self.prior.phi_mean = parse_num(v)?,
            "prior_phi_sd" => self.prior.phi_sd = parse_num(v)?,
            "data" => self.data = (!v.is_empty()).then(|| PathBuf::from(v)),
            "format" => self.format = v.parse().map_err(|e: Error| e.to_string())?,
            "draws" => self.draws = (!v.is_empty()).then(|| PathBuf::from(v)),
            "out" => self.out = PathBuf::from(v),
            "reps" => self.reps = parse_num(v)?,
            "ppc_replicates" => self.ppc_replicates = parse_num(v)?,
            "ppc_alignment" => {
                self.ppc_alignment = match v {
                    "unit" => PpcAlignment::Unit,
                    "sorted" => PpcAlignment::Sorted,
                    _ => return Err(format!("unknown alignment '{v}' (unit | sorted)")),
                }
            }
            "waic" => {
                self.waic = match v {
                    "conditional" => WaicMode::Conditional,
                    "marginal" => WaicMode::Marginal,
                    _ => return Err(format!("unknown WAIC mode '{v}' (conditional | marginal)")),
                }
            }
            "n" => self.n = parse_num(v)?,
            "beta" => self.beta = parse_list(v)?,
            "phi" => self.phi = parse_num(v)?,
            "alpha_s" => self.alpha_s = parse_num(v)?,
            "beta_s" => self.beta_s = parse_num(v)?,
            other => return Err(format!("unknown key '{other}'")),
        }
        Ok(())
    }

    /// Serializes every key; [`RunConfig::parse`] reads it back unchanged.
    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_else(|| "auto".into());
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("family", self.family.name().into());
        kv(
            "link",
            self.link.map(|l| l.name().to_string()).unwrap_or_else(|| "auto".into()),
        );
        kv("lb", opt(self.lb));
        kv("ub", opt(self.ub));
        kv("chains", self.chains.to_string());
        kv("samples", self.samples.to_string());
        kv("burnin", self.burnin.to_string());
        kv("seed", self.seed.to_string());
        kv("eps", self.eps.to_string());
        kv("mh_correct", self.mh_correct.to_string());
        kv("sn_refresh", self.sn_refresh.to_string());
        kv("standardize", self.standardize.to_string());
        kv("store_latent", self.store_latent.to_string());
        kv("prior_beta_mean", self.prior.beta_mean.to_string());
        kv("prior_beta_sd", self.prior.beta_sd.to_string());
        kv("prior_phi_mean", self.prior.phi_mean.to_string());
        kv("prior_phi_sd", self.prior.phi_sd.to_string());
        kv("data", path(&self.data));
        kv("format", self.format.name().into());
        kv("draws", path(&self.draws));
        kv("out", self.out.display().to_string());
        kv("reps", self.reps.to_string());
        kv("ppc_replicates", self.ppc_replicates.to_string());
        kv(
            "ppc_alignment",
            match self.ppc_alignment {
                PpcAlignment::Unit => "unit",
                PpcAlignment::Sorted => "sorted",
            }
            .into(),
        );
        kv(
            "waic",
            match self.waic {
                WaicMode::Conditional => "conditional",
                WaicMode::Marginal => "marginal",
            }
            .into(),
        );
        kv("n", self.n.to_string());
        kv("beta", list(&self.beta));
        kv("phi", self.phi.to_string());
        kv("alpha_s", self.alpha_s.to_string());
        kv("beta_s", self.beta_s.to_string());
        s
    }

    pub fn link(&self) -> Link {
        self.link.unwrap_or_else(|| self.family.default_link())
    }

    pub fn sampler(&self) -> SamplerConfig {
        SamplerConfig {
            chains: self.chains,
            samples: self.samples,
            burnin: self.burnin,
            seed: self.seed,
            eps: self.eps,
            mh_correct: self.mh_correct,
            sn_refresh: self.sn_refresh,
            store_latent: self.store_latent,
            ..SamplerConfig::default()
        }
    }

    /// Model for `n_coef` coefficients on `(lb, ub)`.
    pub fn model(&self, lb: f64, ub: f64, n_coef: usize) -> Result<ModelSpec> {
        ModelSpec::new(self.family, self.link(), lb, ub, n_coef)?.with_prior(self.prior)
    }

    /// Checks file references and the family/link pairing.
    pub fn validate(&self) -> Result<()> {
        self.sampler().validate()?;
        self.prior.validate()?;
        if !self.family.accepts(self.link()) {
            return invalid(format!(
                "link {} is not available for family {}",
                self.link().name(),
                self.family.name()
            ));
        }
        for p in [&self.data, &self.draws].into_iter().flatten() {
            if !p.exists() {
                return Err(Error::Io(std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    format!("{} does not exist", p.display()),
                )));
            }
        }
        if let (Some(lb), Some(ub)) = (self.lb, self.ub) {
            if !(lb < ub) {
                return invalid(format!("bounds need lb < ub, got ({lb}, {ub})"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut cfg = RunConfig {
            family: Family::Kumaraswamy,
            lb: Some(1.5),
            ub: Some(7.25),
            beta: vec![0.1, -0.30000000000000004],
            data: Some(PathBuf::from("d.csv")),
            ppc_alignment: PpcAlignment::Sorted,
            ..Default::default()
        };
        cfg.prior.beta_sd = 2.5;
        assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn errors_carry_line_numbers() {
        match RunConfig::parse("chains = 2\n\nbogus = 1\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            RunConfig::parse("chains 2"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn illegal_link_rejected() {
        let cfg = RunConfig::parse("family = beta\nlink = log\n").unwrap();
        assert!(cfg.validate().is_err());
    }
}
