//! Approximation-quality benchmark: TV and Hellinger distances between the
//! latent conditional and its B4P proposal over fixed parameter grids.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::approx::B4PConfig;
use crate::diagnostics::approximation_distance;
use crate::dists::{sample_gamma, Dist, GammaParams};
use crate::error::Result;
use crate::model::{sample_mode, Family, LatentLaw};

/// Precision-law grid: shape × scale.
pub const GAMMA_SHAPES: [f64; 3] = [15.0, 30.0, 45.0];
pub const GAMMA_SCALES: [f64; 3] = [5.0, 15.0, 35.0];

/// Families in the benchmark, in report order.
pub const FAMILIES: [Family; 5] = [
    Family::LogitNormal,
    Family::Beta,
    Family::LogBilal,
    Family::Kumaraswamy,
    Family::TruncatedNormal,
];

fn cross(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> Dist) -> Vec<Dist> {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| (*x, *y)))
        .map(|(x, y)| f(x, y))
        .collect()
}

/// Latent laws of the grid for `family`.
pub fn family_grid(family: Family) -> Vec<Dist> {
    match family {
        Family::LogitNormal => cross(&[-1.85, 0.0, 1.85], &[1.0, 2.0, 3.5], |mu, sigma| Dist::LogitNormal {
            mu,
            sigma,
        }),
        Family::Beta => cross(&[0.5, 2.0, 5.0], &[0.5, 1.0, 3.0], |a, b| Dist::Beta { a, b }),
        Family::LogBilal => [0.3, 0.5, 1.0, 1.5]
            .iter()
            .map(|&theta| Dist::LogBilal { theta })
            .collect(),
        Family::Kumaraswamy => cross(&[0.5, 2.0, 5.0], &[0.5, 3.0, 6.0], |a, b| Dist::Kumaraswamy { a, b }),
        Family::TruncatedNormal => cross(&[0.2, 0.3, 0.5], &[0.1, 0.17, 0.2], |mu, sigma| Dist::TruncatedNormal {
            lo: 0.0,
            hi: 1.0,
            mu,
            sigma,
        }),
        Family::Lognormal => Vec::new(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyResult {
    pub family: Family,
    pub tv: Vec<f64>,
    pub hd: Vec<f64>,
    /// Problems whose fit or distance evaluation failed.
    pub failures: usize,
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (m, (var / n).sqrt())
}

impl FamilyResult {
    pub fn tv_mean_se(&self) -> (f64, f64) {
        mean_se(&self.tv)
    }

    pub fn hd_mean_se(&self) -> (f64, f64) {
        mean_se(&self.hd)
    }
}

/// Runs `reps` problems per grid configuration (latent law × precision law).
///
/// Each problem draws y ~ f_Y, s ~ Gamma and m* | y, s, then measures the
/// distance between π(y | m*, s, θ) and its fitted proposal. Configuration
/// `c` uses RNG stream `c` of `seed`, so results do not depend on threading.
pub fn run_family(family: Family, reps: usize, seed: u64, cfg: &B4PConfig) -> Result<FamilyResult> {
    let mut configs = Vec::new();
    for dist in family_grid(family) {
        for &a in &GAMMA_SHAPES {
            for &b in &GAMMA_SCALES {
                configs.push((dist, GammaParams::new(a, b)?));
            }
        }
    }
    let family_offset = FAMILIES.iter().position(|f| *f == family).unwrap_or(0) as u64 * 1_000;
    let results: Vec<(Vec<f64>, Vec<f64>, usize)> = configs
        .par_iter()
        .enumerate()
        .map(|(c, (dist, gamma))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(family_offset + c as u64);
            let law = LatentLaw::on_unit(*dist)?;
            let (mut tv, mut hd, mut failures) = (Vec::with_capacity(reps), Vec::with_capacity(reps), 0);
            for _ in 0..reps {
                let y = law.sample_unit(&mut rng);
                let s = sample_gamma(*gamma, &mut rng);
                let m_star = sample_mode(y, s, &mut rng);
                match approximation_distance(m_star, s, &law, cfg) {
                    Ok(d) => {
                        tv.push(d.tv);
                        hd.push(d.hellinger);
                    }
                    Err(_) => failures += 1,
                }
            }
            Ok((tv, hd, failures))
        })
        .collect::<Result<_>>()?;
    let mut out = FamilyResult {
        family,
        tv: Vec::new(),
        hd: Vec::new(),
        failures: 0,
    };
    for (tv, hd, f) in results {
        out.tv.extend(tv);
        out.hd.extend(hd);
        out.failures += f;
    }
    Ok(out)
}

/// All benchmark families.
pub fn run(reps: usize, seed: u64, cfg: &B4PConfig) -> Result<Vec<FamilyResult>> {
    FAMILIES.iter().map(|f| run_family(*f, reps, seed, cfg)).collect()
}

/// Table layout: family, TV mean, TV s.e., HD mean, HD s.e., failures.
pub fn format_table(results: &[FamilyResult]) -> String {
    let mut out = String::from("family,tv_mean,tv_se,hd_mean,hd_se,problems,failures\n");
    for r in results {
        let (tm, ts) = r.tv_mean_se();
        let (hm, hs) = r.hd_mean_se();
        out.push_str(&format!(
            "{},{tm:.4},{ts:.4},{hm:.4},{hs:.4},{},{}\n",
            r.family.name(),
            r.tv.len(),
            r.failures
        ));
    }
    out
}
