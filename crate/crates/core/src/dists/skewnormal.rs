//! Multivariate skew-normal law with density 2 φ_d(θ − μ; Σ) Φ(δᵀ(θ − μ)).

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

use super::special::std_normal_ln_cdf;

const LN_2PI: f64 = 1.837_877_066_409_345_5;
const TWO_OVER_PI: f64 = std::f64::consts::FRAC_2_PI;

#[derive(Debug, Clone)]
pub struct SkewNormalParams {
    mu: DVector<f64>,
    sigma: DMatrix<f64>,
    delta: DVector<f64>,
    chol: DMatrix<f64>,
    log_det: f64,
    omega: DVector<f64>,
    // Cholesky factor of Σ − ω̃ω̃ᵀ, the covariance of the symmetric part.
    residual_chol: DMatrix<f64>,
}

impl SkewNormalParams {
    pub fn new(mu: DVector<f64>, sigma: DMatrix<f64>, delta: DVector<f64>) -> Result<Self> {
        let d = mu.len();
        if sigma.nrows() != d || sigma.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: sigma.nrows(),
            });
        }
        if delta.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: delta.len(),
            });
        }
        if mu
            .iter()
            .chain(delta.iter())
            .chain(sigma.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidParameter("skew-normal parameters must be finite".into()));
        }
        let sym = 0.5 * (&sigma + sigma.transpose());
        let chol = sym
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidParameter("Σ is not positive definite".into()))?
            .l();
        let log_det = 2.0 * chol.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let sd = &sym * &delta;
        let q = delta.dot(&sd);
        let omega = sd / (1.0 + q).sqrt();
        let resid = &sym - &omega * omega.transpose();
        let residual_chol = resid
            .cholesky()
            .ok_or_else(|| Error::InvalidParameter("skewness too large for Σ".into()))?
            .l();
        Ok(Self {
            mu,
            sigma: sym,
            delta,
            chol,
            log_det,
            omega,
            residual_chol,
        })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn location(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn scale(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn skewness(&self) -> &DVector<f64> {
        &self.delta
    }

    /// ω̃ = Σδ / √(1 + δᵀΣδ).
    pub fn omega_tilde(&self) -> &DVector<f64> {
        &self.omega
    }

    pub fn mean(&self) -> DVector<f64> {
        &self.mu + &self.omega * TWO_OVER_PI.sqrt()
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        &self.sigma - &self.omega * self.omega.transpose() * TWO_OVER_PI
    }

    pub fn logpdf(&self, theta: &DVector<f64>) -> f64 {
        let z = theta - &self.mu;
        let w = self
            .chol
            .solve_lower_triangular(&z)
            .expect("Cholesky factor has a positive diagonal");
        let d = self.dim() as f64;
        std::f64::consts::LN_2 - 0.5 * (d * LN_2PI + self.log_det + w.norm_squared())
            + std_normal_ln_cdf(self.delta.dot(&z))
    }
}

/// Draws θ = μ + ω̃|U₀| + U with U ~ N(0, Σ − ω̃ω̃ᵀ).
pub fn sample_skewnormal<R: Rng + ?Sized>(params: &SkewNormalParams, rng: &mut R) -> DVector<f64> {
    let d = params.dim();
    let u0: f64 = rng.sample(StandardNormal);
    let e = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
    &params.mu + &params.omega * u0.abs() + &params.residual_chol * e
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{self, QuadConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn example() -> SkewNormalParams {
        SkewNormalParams::new(
            DVector::from_vec(vec![0.3, -1.0]),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.4, 0.4, 0.5]),
            DVector::from_vec(vec![2.0, -1.5]),
        )
        .unwrap()
    }

    #[test]
    fn univariate_density_integrates_to_one() {
        let p = SkewNormalParams::new(
            DVector::from_vec(vec![0.5]),
            DMatrix::from_element(1, 1, 0.8),
            DVector::from_vec(vec![3.0]),
        )
        .unwrap();
        let f = |x: f64| p.logpdf(&DVector::from_vec(vec![x])).exp();
        let cfg = QuadConfig::with_rel_tol(1e-10);
        let mass = quad::integrate(f, -12.0, 12.0, &quad::uniform_breaks(-12.0, 12.0, 24), cfg).unwrap();
        let mean = quad::integrate(|x| x * f(x), -12.0, 12.0, &quad::uniform_breaks(-12.0, 12.0, 24), cfg).unwrap();
        assert!((mass - 1.0).abs() < 1e-9);
        assert!((mean - p.mean()[0]).abs() < 1e-9);
    }

    #[test]
    fn zero_skew_is_gaussian() {
        let p = SkewNormalParams::new(
            DVector::from_vec(vec![0.0, 0.0]),
            DMatrix::identity(2, 2),
            DVector::zeros(2),
        )
        .unwrap();
        let v = p.logpdf(&DVector::from_vec(vec![1.0, 0.0]));
        assert!((v - (-LN_2PI - 0.5)).abs() < 1e-12);
        assert!((p.covariance() - DMatrix::identity(2, 2)).norm() < 1e-15);
    }

    #[test]
    fn sample_moments_match() {
        let p = example();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 200_000;
        let mut m = DVector::zeros(2);
        let mut s = DMatrix::zeros(2, 2);
        for _ in 0..n {
            let x = sample_skewnormal(&p, &mut rng);
            s += &x * x.transpose();
            m += x;
        }
        m /= n as f64;
        s = s / n as f64 - &m * m.transpose();
        let em = p.mean();
        let ec = p.covariance();
        for j in 0..2 {
            let se = (ec[(j, j)] / n as f64).sqrt();
            assert!((m[j] - em[j]).abs() < 5.0 * se, "mean {j}");
        }
        assert!((s - ec).abs().max() < 0.02);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(SkewNormalParams::new(DVector::zeros(2), DMatrix::identity(3, 3), DVector::zeros(2)).is_err());
        assert!(SkewNormalParams::new(
            DVector::zeros(2),
            DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]),
            DVector::zeros(2)
        )
        .is_err());
    }
}
