//! CSV ingestion and result emission.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use super::config::DataFormat;
use crate::diagnostics::{param_names, PPCReport, PosteriorSummary};
use crate::error::{invalid, Error, Result};
use crate::fuzznum::{trapezoid_to_beta, BetaFuzzyNumber, Interval, TrapezoidalFuzzyNumber};
use crate::gibbs::ChainDraws;
use crate::model::{derive_bounds, FuzzyDataset, ThetaS};

/// Column-wise z-scoring of the covariates (intercept excluded).
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    pub names: Vec<String>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl Standardization {
    /// Coefficients (β₀, β₁, …, φ) on the original covariate scale.
    pub fn back_transform(&self, theta: &[f64]) -> Vec<f64> {
        let mut out = theta.to_vec();
        let mut shift = 0.0;
        for j in 0..self.means.len() {
            out[j + 1] = theta[j + 1] / self.sds[j];
            shift += theta[j + 1] * self.means[j] / self.sds[j];
        }
        out[0] = theta[0] - shift;
        out
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("covariate,mean,sd\n");
        for ((n, m), d) in self.names.iter().zip(&self.means).zip(&self.sds) {
            let _ = writeln!(s, "{n},{m},{d}");
        }
        s
    }
}

/// A dataset read from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    /// Design matrix with intercept column (standardized when requested).
    pub data: FuzzyDataset,
    pub ids: Vec<String>,
    pub covariate_names: Vec<String>,
    /// Covariates as read, without intercept.
    pub raw_covariates: DMatrix<f64>,
    pub standardization: Option<Standardization>,
}

fn parse_field(rec: &csv::StringRecord, idx: usize, line: usize, name: &str) -> Result<f64> {
    let raw = rec.get(idx).unwrap_or("");
    raw.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("column '{name}': cannot parse '{raw}' as a number"),
    })
}

fn at_line<T>(line: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        e @ Error::Parse { .. } => e,
        other => Error::Parse {
            line,
            message: other.to_string(),
        },
    })
}

/// Reads a dataset file; see [`ingest_str`].
pub fn ingest(path: &Path, format: DataFormat, bounds: Option<(f64, f64)>, standardize: bool) -> Result<Ingested> {
    let text = std::fs::read_to_string(path)?;
    ingest_str(&text, format, bounds, standardize)
}

/// Parses dataset text. An intercept column is prepended to the covariates.
///
/// Shared bounds are `bounds` when given, else the envelope of the rows'
/// own bounds (beta-fuzzy with lb/ub columns, trapezoid supports), else
/// (0, 1).
pub fn ingest_str(text: &str, format: DataFormat, bounds: Option<(f64, f64)>, standardize: bool) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let cols: Vec<String> = header.iter().map(|h| h.to_ascii_lowercase()).collect();
    let find = |name: &str| cols.iter().position(|c| c == name);
    let require = |name: &str| {
        find(name).ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("header lacks column '{name}'"),
        })
    };
    let id_col = require("id")?;
    let fixed: Vec<usize> = match format {
        DataFormat::BetaFuzzy => {
            let mut v = vec![id_col, require("m")?, require("s")?];
            match (find("lb"), find("ub")) {
                (Some(l), Some(u)) => v.extend([l, u]),
                (None, None) => {}
                _ => {
                    return Err(Error::Parse {
                        line: 1,
                        message: "lb and ub columns must appear together".into(),
                    })
                }
            }
            v
        }
        DataFormat::Trapezoidal => vec![id_col, require("a1")?, require("a2")?, require("a3")?, require("a4")?],
    };
    let cov_cols: Vec<usize> = (0..cols.len()).filter(|c| !fixed.contains(c)).collect();
    let covariate_names: Vec<String> = cov_cols.iter().map(|&c| header[c].to_string()).collect();

    let mut ids = Vec::new();
    let mut fuzzy = Vec::new();
    let mut supports = Vec::new();
    let mut covs: Vec<f64> = Vec::new();
    let default_bounds = bounds.unwrap_or((0.0, 1.0));
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.len() != cols.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", cols.len(), rec.len()),
            });
        }
        ids.push(rec[id_col].to_string());
        let bf = match format {
            DataFormat::BetaFuzzy => {
                let m = parse_field(&rec, fixed[1], line, "m")?;
                let s = parse_field(&rec, fixed[2], line, "s")?;
                let (lb, ub) = if fixed.len() == 5 {
                    (
                        parse_field(&rec, fixed[3], line, "lb")?,
                        parse_field(&rec, fixed[4], line, "ub")?,
                    )
                } else {
                    default_bounds
                };
                at_line(line, BetaFuzzyNumber::new(m, s, lb, ub))?
            }
            DataFormat::Trapezoidal => {
                let a: Vec<f64> = (1..5)
                    .map(|k| parse_field(&rec, fixed[k], line, &format!("a{k}")))
                    .collect::<Result<_>>()?;
                let tp = at_line(line, TrapezoidalFuzzyNumber::new(a[0], a[1], a[2], a[3]))?;
                at_line(line, trapezoid_to_beta(&tp))?
            }
        };
        supports.push(Interval { lo: bf.lb, hi: bf.ub });
        fuzzy.push(bf);
        for (k, &c) in cov_cols.iter().enumerate() {
            covs.push(parse_field(&rec, c, line, &covariate_names[k])?);
        }
    }
    let n = fuzzy.len();
    if n == 0 {
        return Err(Error::InsufficientData("data file has no rows".into()));
    }
    let (lb, ub) = match bounds {
        Some(b) => b,
        None => derive_bounds(&supports)?,
    };
    for (i, bf) in fuzzy.iter().enumerate() {
        if !(bf.m > lb && bf.m < ub) {
            return Err(Error::Parse {
                line: i + 2,
                message: format!("mode {} lies outside the bounds ({lb}, {ub})", bf.m),
            });
        }
    }
    let j = cov_cols.len();
    let raw = DMatrix::from_row_slice(n, j, &covs);
    let mut x = DMatrix::from_element(n, j + 1, 1.0);
    let mut standardization = None;
    if standardize && j > 0 {
        let mut st = Standardization {
            names: covariate_names.clone(),
            means: Vec::with_capacity(j),
            sds: Vec::with_capacity(j),
        };
        for c in 0..j {
            let col = raw.column(c);
            let mean = col.mean();
            let sd = if n > 1 {
                (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt()
            } else {
                0.0
            };
            if !(sd > 0.0) {
                return invalid(format!(
                    "covariate '{}' is constant and cannot be standardized",
                    covariate_names[c]
                ));
            }
            for r in 0..n {
                x[(r, c + 1)] = (raw[(r, c)] - mean) / sd;
            }
            st.means.push(mean);
            st.sds.push(sd);
        }
        standardization = Some(st);
    } else {
        x.view_mut((0, 1), (n, j)).copy_from(&raw);
    }
    let data = FuzzyDataset::new(fuzzy, x, lb, ub)?;
    Ok(Ingested {
        data,
        ids,
        covariate_names,
        raw_covariates: raw,
        standardization,
    })
}

/// Beta-fuzzy CSV (`id,m,s,lb,ub,covariates…`); values use the shortest
/// representation that parses back to the same bits.
pub fn dataset_csv(data: &FuzzyDataset, ids: &[String], covariates: &DMatrix<f64>, names: &[String]) -> String {
    let mut s = String::from("id,m,s,lb,ub");
    for n in names {
        s.push(',');
        s.push_str(n);
    }
    s.push('\n');
    for (i, o) in data.observations.iter().enumerate() {
        let _ = write!(s, "{},{},{},{},{}", ids[i], o.m, o.s, o.lb, o.ub);
        for c in 0..covariates.ncols() {
            let _ = write!(s, ",{}", covariates[(i, c)]);
        }
        s.push('\n');
    }
    s
}

/// Writes through a temporary file in the target directory and renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// `chain,iter,beta_0..,phi` with 17 significant digits.
pub fn draws_csv(chains: &[ChainDraws]) -> String {
    let Some(first) = chains.first() else {
        return String::new();
    };
    let names = param_names(first.theta.ncols() - 1);
    let mut s = format!("chain,iter,{}\n", names.join(","));
    for ch in chains {
        for r in 0..ch.theta.nrows() {
            let _ = write!(s, "{},{}", ch.chain_id, r);
            for v in ch.theta.row(r).iter() {
                let _ = write!(s, ",{v:.16e}");
            }
            s.push('\n');
        }
    }
    s
}

/// Reads a draws CSV back into per-chain draws (without latent outcomes).
pub fn read_draws(text: &str, theta_s: ThetaS) -> Result<Vec<ChainDraws>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let width = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .len();
    if width < 3 {
        return Err(Error::Parse {
            line: 1,
            message: "draws need chain, iter and at least one parameter".into(),
        });
    }
    let mut per_chain: Vec<(usize, Vec<f64>)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let chain: usize = rec[0].parse().map_err(|_| Error::Parse {
            line,
            message: format!("bad chain id '{}'", &rec[0]),
        })?;
        let vals: Vec<f64> = (2..width)
            .map(|c| parse_field(&rec, c, line, "draw"))
            .collect::<Result<_>>()?;
        match per_chain.iter_mut().find(|(c, _)| *c == chain) {
            Some((_, v)) => v.extend(vals),
            None => per_chain.push((chain, vals)),
        }
    }
    let d = width - 2;
    Ok(per_chain
        .into_iter()
        .map(|(chain_id, v)| ChainDraws {
            chain_id,
            seed: 0,
            theta: DMatrix::from_row_slice(v.len() / d, d, &v),
            y_latent: None,
            theta_s,
            b4p_fallback_count: 0,
            sn_fallback_count: 0,
            mh_proposed: 0,
            mh_accepted: 0,
        })
        .collect())
}

fn fmt4(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.4}")
    } else {
        "NA".into()
    }
}

/// One block per parameter, values at 4 decimals.
pub fn summary_text(summary: &PosteriorSummary) -> String {
    let mut s = String::new();
    for p in &summary.params {
        let _ = writeln!(s, "[{}]", p.name);
        for (k, v) in [
            ("mean", p.mean),
            ("sd", p.sd),
            ("hpdi_lb", p.hpdi.lo),
            ("hpdi_ub", p.hpdi.hi),
            ("rhat", p.rhat),
            ("ess_bulk", p.ess_bulk),
            ("ess_tail", p.ess_tail),
        ] {
            let _ = writeln!(s, "{k} = {}", fmt4(v));
        }
        s.push('\n');
    }
    s
}

/// Per-statistic CP and bP.
pub fn ppc_report_text(report: &PPCReport) -> String {
    let mut s = format!(
        "replicates = {}\nalignment = {:?}\n\n",
        report.replicates, report.alignment
    );
    for st in &report.stats {
        let _ = writeln!(
            s,
            "[{}]\ncp = {}\nbp = {}\n",
            st.statistic.name(),
            fmt4(st.cp),
            fmt4(st.bp)
        );
    }
    s
}

/// Plot-ready per-unit predictive quantiles.
pub fn ppc_quantiles_csv(report: &PPCReport) -> String {
    let mut s = String::from("statistic,unit,observed,min,q1,q3,max,lower,upper\n");
    for st in &report.stats {
        for i in 0..st.observed.len() {
            let _ = writeln!(
                s,
                "{},{i},{},{},{},{},{},{},{}",
                st.statistic.name(),
                st.observed[i],
                st.min[i],
                st.q1[i],
                st.q3[i],
                st.max[i],
                st.lower[i],
                st.upper[i]
            );
        }
    }
    s
}
