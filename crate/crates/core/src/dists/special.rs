//! Special functions: polygamma of order 0 and 1, the upper incomplete gamma
//! function, and Gaussian tail helpers.
//!
//! `ln_gamma` and `erfc` come from `statrs`; digamma and trigamma are computed
//! here so results do not depend on platform libm.

use std::f64::consts::SQRT_2;

use crate::error::{domain, Result};

pub use statrs::function::gamma::ln_gamma;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Shift argument used before switching to the asymptotic series.
const ASYMPTOTIC_FROM: f64 = 10.0;

/// ψ⁽⁰⁾(x) for x > 0. Callers must guarantee positivity.
pub fn digamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < ASYMPTOTIC_FROM {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0 - inv2 / 12.0))))));
    acc + x.ln() - 0.5 * inv - series
}

/// ψ⁽¹⁾(x) for x > 0. Callers must guarantee positivity.
pub fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < ASYMPTOTIC_FROM {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv2
        * inv
        * (1.0 / 6.0
            - inv2
                * (1.0 / 30.0
                    - inv2
                        * (1.0 / 42.0
                            - inv2 * (1.0 / 30.0 - inv2 * (5.0 / 66.0 - inv2 * (691.0 / 2730.0 - inv2 * 7.0 / 6.0))))));
    acc + inv + 0.5 * inv2 + series
}

/// ψ⁽²⁾(x) for x > 0, used for third derivatives of Beta log-likelihoods.
pub fn tetragamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < ASYMPTOTIC_FROM {
        acc -= 2.0 / (x * x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // −1/x² − 1/x³ − Σ B₂ₖ (2k+1)! / ((2k)! x^(2k+2))
    let series = inv2
        * inv2
        * (0.5
            - inv2
                * (1.0 / 6.0 - inv2 * (1.0 / 6.0 - inv2 * (3.0 / 10.0 - inv2 * (5.0 / 6.0 - inv2 * 691.0 / 210.0)))));
    acc - inv2 - inv2 * inv - series
}

/// Polygamma function ψ⁽ᵒʳᵈᵉʳ⁾(x) for order 0 or 1.
pub fn polygamma(order: u32, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return domain(format!("polygamma requires x > 0, got {x}"));
    }
    match order {
        0 => Ok(digamma(x)),
        1 => Ok(trigamma(x)),
        _ => domain(format!("polygamma order {order} is not supported")),
    }
}

/// Unregularized upper incomplete gamma Γ(a, x) for a > 0, x ≥ 0.
///
/// Series for the lower function when x < a + 1, modified Lentz continued
/// fraction otherwise.
pub fn upper_incomplete_gamma(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) || !(x >= 0.0) {
        return domain(format!("upper incomplete gamma needs a > 0, x >= 0 (a={a}, x={x})"));
    }
    let ln_ga = ln_gamma(a);
    if x == 0.0 {
        return Ok(ln_ga.exp());
    }
    if x < a + 1.0 {
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..10_000 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-17 {
                break;
            }
        }
        let lower = (a * x.ln() - x).exp() * sum;
        Ok(ln_ga.exp() - lower)
    } else {
        Ok((a * x.ln() - x).exp() * upper_gamma_cf(a, x))
    }
}

/// Continued-fraction factor h with Γ(a, x) = x^a e^(−x) h, for x ≥ a + 1.
pub fn upper_gamma_cf(a: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

pub fn std_normal_ln_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / SQRT_2)
}

pub fn std_normal_quantile(p: f64) -> f64 {
    -SQRT_2 * statrs::function::erf::erfc_inv(2.0 * p)
}

/// Mills ratio (1 − Φ(t)) / φ(t) for t ≥ 5 by continued fraction.
fn mills_ratio_tail(t: f64) -> f64 {
    let mut f = t;
    for k in (1..=60).rev() {
        f = t + k as f64 / f;
    }
    1.0 / f
}

/// ln Φ(x), accurate far into the lower tail.
pub fn std_normal_ln_cdf(x: f64) -> f64 {
    if x < -5.0 {
        std_normal_ln_pdf(x) + mills_ratio_tail(-x).ln()
    } else {
        std_normal_cdf(x).ln()
    }
}

/// First three derivatives of ln Φ at x: (φ/Φ, d/dx, d²/dx²).
pub fn ln_cdf_derivatives(x: f64) -> (f64, f64, f64) {
    let z1 = if x < -5.0 {
        1.0 / mills_ratio_tail(-x)
    } else {
        std_normal_pdf(x) / std_normal_cdf(x)
    };
    let z2 = -z1 * (x + z1);
    let z3 = -z2 * (x + z1) - z1 * (1.0 + z2);
    (z1, z2, z3)
}

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}
