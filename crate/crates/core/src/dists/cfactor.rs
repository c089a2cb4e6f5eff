//! The variance scaling factor c = E[(S + 1)⁻¹] for S ~ Gamma(shape α, scale β).
//!
//! Equivalently c is the mean of S* = 1/(S + 1), whose density on (0, 1) is
//! β^(−α) exp((x − 1)/(xβ)) (1/x − 1)^(α−1) / (x² Γ(α)).

use crate::error::{invalid, Result};
use crate::quad::{self, QuadConfig};

use super::special::{ln_gamma, upper_gamma_cf, upper_incomplete_gamma};

const QUAD_REL_TOL: f64 = 1e-11;

/// c = E[1/(S + 1)], S ~ Gamma(shape `alpha_s`, scale `beta_s`).
///
/// Uses the incomplete-gamma closed form when `alpha_s < 1` and quadrature
/// otherwise.
pub fn c_factor(alpha_s: f64, beta_s: f64) -> Result<f64> {
    check(alpha_s, beta_s)?;
    if alpha_s < 1.0 {
        c_factor_closed_form(alpha_s, beta_s)
    } else {
        c_factor_quadrature(alpha_s, beta_s)
    }
}

fn check(alpha_s: f64, beta_s: f64) -> Result<()> {
    if alpha_s > 0.0 && beta_s > 0.0 && alpha_s.is_finite() && beta_s.is_finite() {
        Ok(())
    } else {
        invalid(format!(
            "c factor needs alpha_s > 0 and beta_s > 0, got ({alpha_s}, {beta_s})"
        ))
    }
}

/// β^(−α) e^(1/β) Γ(1 − α, 1/β), valid for α < 1.
pub fn c_factor_closed_form(alpha_s: f64, beta_s: f64) -> Result<f64> {
    check(alpha_s, beta_s)?;
    if alpha_s >= 1.0 {
        return invalid(format!("closed form requires alpha_s < 1, got {alpha_s}"));
    }
    let a = 1.0 - alpha_s;
    let x = 1.0 / beta_s;
    // e^x Γ(a, x) is formed in log space; the factors overflow separately.
    let ln_scaled = if x < a + 1.0 {
        upper_incomplete_gamma(a, x)?.ln() + x
    } else {
        a * x.ln() + upper_gamma_cf(a, x).ln()
    };
    Ok((ln_scaled - alpha_s * beta_s.ln()).exp())
}

/// E[1/(S + 1)] by adaptive quadrature over the Gamma law of S.
pub fn c_factor_quadrature(alpha_s: f64, beta_s: f64) -> Result<f64> {
    check(alpha_s, beta_s)?;
    let cfg = QuadConfig {
        rel_tol: QUAD_REL_TOL,
        abs_tol: 1e-15,
        max_segments: 4000,
    };
    let ln_norm = ln_gamma(alpha_s) + alpha_s * beta_s.ln();
    if alpha_s < 1.0 {
        // s = u^(1/α) absorbs the s^(α−1) singularity at zero.
        let inv = 1.0 / alpha_s;
        let ln_const = -ln_norm - alpha_s.ln();
        let scale_u = beta_s.powf(alpha_s);
        let breaks: Vec<f64> = [1e-6, 1e-3, 0.1, 1.0, 10.0].iter().map(|k| k * scale_u).collect();
        quad::integrate_to_infinity(
            |u| {
                let s = u.powf(inv);
                (ln_const - s / beta_s).exp() / (1.0 + s)
            },
            0.0,
            &breaks,
            cfg,
        )
    } else {
        let mean = alpha_s * beta_s;
        let sd = alpha_s.sqrt() * beta_s;
        let breaks: Vec<f64> = (-6..=12).map(|k| mean + k as f64 * sd).filter(|s| *s > 0.0).collect();
        quad::integrate_to_infinity(
            |s| {
                if s <= 0.0 {
                    return 0.0;
                }
                ((alpha_s - 1.0) * s.ln() - s / beta_s - ln_norm).exp() / (1.0 + s)
            },
            0.0,
            &breaks,
            cfg,
        )
    }
}

/// Density of S* = 1/(S + 1) on (0, 1).
pub fn s_star_pdf(x: f64, alpha_s: f64, beta_s: f64) -> f64 {
    if !(x > 0.0 && x < 1.0) {
        return 0.0;
    }
    let ln = -alpha_s * beta_s.ln() + (x - 1.0) / (x * beta_s) + (alpha_s - 1.0) * (1.0 / x - 1.0).ln()
        - 2.0 * x.ln()
        - ln_gamma(alpha_s);
    ln.exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    // x e^x E1(x) at x = 1/β, evaluated to 15 digits with mpmath.
    #[test]
    fn exponential_case_reference_values() {
        assert!((c_factor(1.0, 1.639).unwrap() - 0.500_022_477_464_167).abs() < 1e-9);
        assert!((c_factor(1.0, 10.121).unwrap() - 0.200_005_495_314_001).abs() < 1e-9);
        assert!((c_factor(1.0, 1e-4).unwrap() - 0.999_900_019_994_002).abs() < 1e-9);
    }

    #[test]
    fn closed_form_and_quadrature_agree_below_one() {
        for &a in &[0.05, 0.3, 0.5, 0.77, 0.99] {
            for &b in &[0.01, 0.5, 1.0, 7.0, 300.0] {
                let cf = c_factor_closed_form(a, b).unwrap();
                let q = c_factor_quadrature(a, b).unwrap();
                assert!((cf - q).abs() < 1e-8, "a={a} b={b}: {cf} vs {q}");
            }
        }
    }

    #[test]
    fn s_star_density_mean_matches() {
        let (a, b) = (2.5, 0.8);
        let cfg = QuadConfig::with_rel_tol(1e-10);
        let mass = quad::integrate(|x| s_star_pdf(x, a, b), 0.0, 1.0, &[0.5], cfg).unwrap();
        let mean = quad::integrate(|x| x * s_star_pdf(x, a, b), 0.0, 1.0, &[0.5], cfg).unwrap();
        assert!((mass - 1.0).abs() < 1e-8);
        assert!((mean - c_factor(a, b).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn decreasing_in_scale() {
        for &a in &[0.4, 1.0, 3.0] {
            let mut prev = 1.0;
            for k in 0..40 {
                let b = 0.01 * 1.3f64.powi(k);
                let c = c_factor(a, b).unwrap();
                assert!(c > 0.0 && c < 1.0);
                assert!(c < prev, "a={a} b={b}");
                prev = c;
            }
        }
    }

    #[test]
    fn rejects_nonpositive_parameters() {
        assert!(c_factor(0.0, 1.0).is_err());
        assert!(c_factor(1.0, -1.0).is_err());
        assert!(c_factor_closed_form(1.5, 1.0).is_err());
    }
}
