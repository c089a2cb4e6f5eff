//! Fuzzy numbers: trapezoidal LR numbers, Beta-type fuzzy numbers, and the
//! statistics used to summarize them.

use nalgebra::DVector;

use crate::dists::special::{logistic, logit};
use crate::error::{invalid, Error, Result};
use crate::optim::{self, BfgsConfig};
use crate::quad::{self, QuadConfig};

/// Absolute tolerance for α-cut flank bisection.
pub const CUT_TOL: f64 = 1e-10;

/// A closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo <= hi {
            Ok(Self { lo, hi })
        } else {
            invalid(format!("interval needs lo <= hi, got [{lo}, {hi}]"))
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }
}

/// Trapezoidal LR fuzzy number with linear flanks; triangular when `a2 == a3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapezoidalFuzzyNumber {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
}

impl TrapezoidalFuzzyNumber {
    pub fn new(a1: f64, a2: f64, a3: f64, a4: f64) -> Result<Self> {
        let all_finite = [a1, a2, a3, a4].iter().all(|v| v.is_finite());
        if !all_finite || !(a1 <= a2 && a2 <= a3 && a3 <= a4) {
            return invalid(format!(
                "trapezoid needs finite a1 <= a2 <= a3 <= a4, got ({a1}, {a2}, {a3}, {a4})"
            ));
        }
        Ok(Self { a1, a2, a3, a4 })
    }

    pub fn membership(&self, x: f64) -> f64 {
        if x < self.a1 || x > self.a4 {
            0.0
        } else if x < self.a2 {
            (x - self.a1) / (self.a2 - self.a1)
        } else if x <= self.a3 {
            1.0
        } else {
            (self.a4 - x) / (self.a4 - self.a3)
        }
    }

    pub fn alpha_cut(&self, alpha: f64) -> Interval {
        let a = alpha.clamp(0.0, 1.0);
        Interval {
            lo: self.a1 + a * (self.a2 - self.a1),
            hi: self.a4 - a * (self.a4 - self.a3),
        }
    }

    pub fn support(&self) -> Interval {
        Interval {
            lo: self.a1,
            hi: self.a4,
        }
    }
}

/// Beta-type fuzzy number in mode–precision form.
///
/// With u = (x − lb)/(ub − lb) and m* the rescaled mode, the membership is the
/// Beta(p, q) kernel u^(p−1)(1−u)^(q−1) normalized to 1 at m*, where
/// p = 1 + s·m* and q = 1 + s(1 − m*).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaFuzzyNumber {
    pub m: f64,
    pub s: f64,
    pub lb: f64,
    pub ub: f64,
}

impl BetaFuzzyNumber {
    pub fn new(m: f64, s: f64, lb: f64, ub: f64) -> Result<Self> {
        if !(lb.is_finite() && ub.is_finite() && lb < ub) {
            return invalid(format!("fuzzy number needs finite lb < ub, got [{lb}, {ub}]"));
        }
        if !(lb < m && m < ub) {
            return invalid(format!("mode {m} must lie strictly inside ({lb}, {ub})"));
        }
        if !(s > 0.0 && s.is_finite()) {
            return invalid(format!("precision must be positive and finite, got {s}"));
        }
        Ok(Self { m, s, lb, ub })
    }

    pub fn width(&self) -> f64 {
        self.ub - self.lb
    }

    /// Mode rescaled to (0, 1).
    pub fn unit_mode(&self) -> f64 {
        (self.m - self.lb) / (self.ub - self.lb)
    }

    /// Shape parameters (p, q) of the membership kernel.
    pub fn shapes(&self) -> (f64, f64) {
        let ms = self.unit_mode();
        (1.0 + self.s * ms, 1.0 + self.s * (1.0 - ms))
    }

    /// ln Ã(x); −∞ outside the open support.
    pub fn ln_membership(&self, x: f64) -> f64 {
        if !(x > self.lb && x < self.ub) {
            return f64::NEG_INFINITY;
        }
        let u = (x - self.lb) / self.width();
        let ms = self.unit_mode();
        self.s * (ms * (u / ms).ln() + (1.0 - ms) * ((1.0 - u) / (1.0 - ms)).ln())
    }

    pub fn membership(&self, x: f64) -> f64 {
        if x == self.m {
            return 1.0;
        }
        self.ln_membership(x).exp().min(1.0)
    }

    pub fn support(&self) -> Interval {
        Interval {
            lo: self.lb,
            hi: self.ub,
        }
    }

    /// The level set {x : Ã(x) ≥ α}. α = 0 gives the closed support and
    /// α = 1 the core {m}; α is clamped to [0, 1].
    pub fn alpha_cut(&self, alpha: f64) -> Interval {
        let alpha = if alpha.is_nan() { 0.0 } else { alpha.clamp(0.0, 1.0) };
        if alpha == 0.0 {
            return self.support();
        }
        if alpha == 1.0 {
            return Interval { lo: self.m, hi: self.m };
        }
        let target = alpha.ln();
        // Left flank: membership increases from lb to m.
        let (mut lo, mut hi) = (self.lb, self.m);
        while hi - lo > CUT_TOL {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.ln_membership(mid) >= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let left = hi;
        let (mut lo, mut hi) = (self.m, self.ub);
        while hi - lo > CUT_TOL {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.ln_membership(mid) >= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Interval { lo: left, hi: lo }
    }

    /// Break points that resolve the membership peak for quadrature.
    fn peak_breaks(&self) -> Vec<f64> {
        let (p, q) = self.shapes();
        let sd = (p * q / ((p + q).powi(2) * (p + q + 1.0))).sqrt() * self.width();
        let mut b: Vec<f64> = (-8..=8).map(|k| self.m + k as f64 * sd).collect();
        b.retain(|x| *x > self.lb && *x < self.ub);
        b
    }

    /// Center of gravity ∫x·Ã(x)dx / ∫Ã(x)dx.
    pub fn centroid(&self) -> Result<f64> {
        let cfg = QuadConfig::default();
        let breaks = self.peak_breaks();
        // Integrate x − m to keep the numerator well conditioned.
        let area = quad::integrate(|x| self.membership(x), self.lb, self.ub, &breaks, cfg)?;
        let moment = quad::integrate(
            |x| (x - self.m) * self.membership(x),
            self.lb,
            self.ub,
            &breaks,
            QuadConfig {
                abs_tol: 1e-13 * area * self.width(),
                ..cfg
            },
        )?;
        Ok(self.m + moment / area)
    }

    /// Kaufman's index: range-normalized linear distance to the nearest crisp set,
    /// (2/(ub − lb))·∫|Ã(x) − 1[Ã(x) ≥ ½]|dx.
    pub fn kaufman_index(&self) -> Result<f64> {
        let half = self.alpha_cut(0.5);
        let mut breaks = self.peak_breaks();
        breaks.extend([half.lo, half.hi, self.m]);
        let v = quad::integrate(
            |x| {
                let a = self.membership(x);
                if half.contains(x) {
                    1.0 - a
                } else {
                    a
                }
            },
            self.lb,
            self.ub,
            &breaks,
            QuadConfig {
                abs_tol: 1e-13 * self.width(),
                ..QuadConfig::default()
            },
        )?;
        Ok((2.0 * v / self.width()).clamp(0.0, 1.0))
    }
}

/// ∫(Ã_beta − Ã_tp)² over the trapezoid's support.
pub fn l2_membership_residual(tp: &TrapezoidalFuzzyNumber, bf: &BetaFuzzyNumber) -> f64 {
    let mut breaks = vec![tp.a2, tp.a3, bf.m];
    breaks.extend(bf.peak_breaks());
    let (v, _) = quad::integrate_raw(
        |x| (bf.membership(x) - tp.membership(x)).powi(2),
        tp.a1,
        tp.a4,
        &breaks,
        QuadConfig {
            rel_tol: 1e-11,
            abs_tol: 1e-16,
            max_segments: 4000,
        },
    );
    v
}

const MAX_LN_S: f64 = 16.0;
const MIN_LN_S: f64 = -12.0;

/// Converts a trapezoidal fuzzy number into the Beta fuzzy number on
/// `[a1, a4]` whose membership is closest in L².
///
/// The search runs over (logit m*, ln s) by BFGS, started at the midpoint of
/// the core with s matched to the width of the ½-cut.
pub fn trapezoid_to_beta(tp: &TrapezoidalFuzzyNumber) -> Result<BetaFuzzyNumber> {
    if !(tp.a1 < tp.a4) {
        return invalid(format!("trapezoid with a1 = a4 = {} has no spread to convert", tp.a1));
    }
    let (lb, ub) = (tp.a1, tp.a4);
    let w = ub - lb;
    let edge = 1e-9;
    let m0 = ((0.5 * (tp.a2 + tp.a3) - lb) / w).clamp(edge, 1.0 - edge);
    let target_width = tp.alpha_cut(0.5).width();
    let make = |ms: f64, ln_s: f64| BetaFuzzyNumber {
        m: lb + w * ms,
        s: ln_s.exp(),
        lb,
        ub,
    };
    // ½-cut width falls monotonically in s.
    let ln_s0 = optim::bisect(
        |ln_s| make(m0, ln_s).alpha_cut(0.5).width() - target_width,
        MIN_LN_S,
        MAX_LN_S,
        1e-8,
    )
    .unwrap_or(0.0);

    let mut objective = |z: &DVector<f64>| {
        if !(z[1] > MIN_LN_S && z[1] < MAX_LN_S) || !z[0].is_finite() {
            return f64::INFINITY;
        }
        let ms = logistic(z[0]);
        if !(ms > 0.0 && ms < 1.0) {
            return f64::INFINITY;
        }
        l2_membership_residual(tp, &make(ms, z[1])) / w
    };
    let x0 = DVector::from_vec(vec![logit(m0), ln_s0]);
    let mut grad_obj = objective;
    let result = optim::bfgs(
        &mut objective,
        |z| optim::fd_gradient(&mut grad_obj, z, 1e-6),
        x0,
        BfgsConfig {
            max_iter: 300,
            grad_tol: 1e-9,
            f_tol: 1e-13,
        },
    );
    let ms = logistic(result.x[0]);
    let residual = result.f * w;
    if !result.converged || !residual.is_finite() || !(ms > 0.0 && ms < 1.0) {
        return Err(Error::Conversion {
            message: format!("L2 fit stopped after {} iterations", result.iterations),
            residual,
        });
    }
    BetaFuzzyNumber::new(lb + w * ms, result.x[1].exp(), lb, ub)
}
