//! Standard and bivariate normal distribution functions, and the
//! exponential-tilting identities for truncated lognormal moments.
//!
//! The bivariate CDF follows Genz's double-precision variant of the
//! Drezner–Wesolowsky method: Gauss–Legendre quadrature of Plackett's
//! identity for moderate correlations and an asymptotic expansion plus
//! quadrature correction for |ρ| ≥ 0.925.

#![allow(clippy::excessive_precision)]

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_677_94;
const TWO_PI: f64 = 2.0 * PI;

/// Largest |ρ| accepted by the bivariate routines.
pub const MAX_ABS_CORRELATION: f64 = 1.0 - 1e-12;

/// `ln(f64::MAX)`; exponents above this overflow.
pub(crate) const LN_MAX: f64 = 709.782_712_893_384;

/// A probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::Domain(format!("probability {value} outside [0, 1]")))
        }
    }

    /// Clamps rounding excursions (e.g. `1 + 1e-17`) back into `[0, 1]`.
    pub(crate) fn saturating(value: f64) -> Self {
        Self(value.clamp(0.0, 1.0))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// A correlation coefficient strictly inside `(-1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Correlation(f64);

impl Correlation {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value.abs() < 1.0 {
            Ok(Self(value))
        } else {
            Err(Error::Domain(format!(
                "correlation {value} outside (-1, 1)"
            )))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Correlation {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<Correlation> for f64 {
    fn from(c: Correlation) -> f64 {
        c.0
    }
}

/// Standard normal density.
pub fn std_normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal CDF, accurate to a few ulps in both tails.
pub fn std_normal_cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 1.0;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `ln Φ(x)`, finite far into the lower tail where `Φ` itself underflows.
pub fn log_std_normal_cdf(x: f64) -> f64 {
    if x > -35.0 {
        return std_normal_cdf(x).ln();
    }
    if x == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    // Mills-ratio asymptotic series: Φ(x) = φ(x)/|x| · Σ (-1)^n (2n-1)!! / x^{2n}.
    let inv_x2 = 1.0 / (x * x);
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..8 {
        term *= -((2 * n - 1) as f64) * inv_x2;
        sum += term;
    }
    -0.5 * x * x - (-x).ln() - 0.5 * TWO_PI.ln() + sum.ln()
}

// Gauss–Legendre nodes (negative half) and weights for N = 6, 12, 20.
const GL6: [(f64, f64); 3] = [
    (-9.3246951420315205e-01, 1.7132449237916975e-01),
    (-6.6120938646626448e-01, 3.6076157304813894e-01),
    (-2.3861918608319693e-01, 4.6791393457269137e-01),
];

const GL12: [(f64, f64); 6] = [
    (-9.8156063424671924e-01, 4.7175336386512022e-02),
    (-9.0411725637047480e-01, 1.0693932599531888e-01),
    (-7.6990267419430469e-01, 1.6007832854334611e-01),
    (-5.8731795428661748e-01, 2.0316742672306565e-01),
    (-3.6783149899818018e-01, 2.3349253653835464e-01),
    (-1.2523340851146891e-01, 2.4914704581340269e-01),
];

const GL20: [(f64, f64); 10] = [
    (-9.9312859918509488e-01, 1.7614007139153273e-02),
    (-9.6397192727791381e-01, 4.0601429800386217e-02),
    (-9.1223442825132584e-01, 6.2672048334109443e-02),
    (-8.3911697182221878e-01, 8.3276741576704671e-02),
    (-7.4633190646015080e-01, 1.0193011981724026e-01),
    (-6.3605368072651502e-01, 1.1819453196151825e-01),
    (-5.1086700195082713e-01, 1.3168863844917653e-01),
    (-3.7370608871541955e-01, 1.4209610931838187e-01),
    (-2.2778585114164510e-01, 1.4917298647260366e-01),
    (-7.6526521133497338e-02, 1.5275338713072578e-01),
];

/// Upper orthant probability `P(X > h, Y > k)` for standard bivariate
/// normal `(X, Y)` with correlation `r`, `|r| < 1`, finite `h`, `k`.
fn bvn_upper(h: f64, k: f64, r: f64) -> f64 {
    let nodes: &[(f64, f64)] = if r.abs() < 0.3 {
        &GL6
    } else if r.abs() < 0.75 {
        &GL12
    } else {
        &GL20
    };

    let mut k = k;
    let mut hk = h * k;
    let mut bvn = 0.0;

    if r.abs() < 0.925 {
        let hs = 0.5 * (h * h + k * k);
        let asr = r.asin();
        for &(x, w) in nodes {
            for node in [x, -x] {
                let sn = (0.5 * asr * (node + 1.0)).sin();
                bvn += w * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
            }
        }
        return bvn * asr / (2.0 * TWO_PI) + std_normal_cdf(-h) * std_normal_cdf(-k);
    }

    if r < 0.0 {
        k = -k;
        hk = -hk;
    }
    let as_ = (1.0 - r) * (1.0 + r);
    let mut a = as_.sqrt();
    let bs = (h - k) * (h - k);
    let c = (4.0 - hk) / 8.0;
    let d = (12.0 - hk) / 16.0;
    bvn = a
        * (-0.5 * (bs / as_ + hk)).exp()
        * (1.0 - c * (bs - as_) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as_ * as_ / 5.0);
    if hk > -160.0 {
        let b = bs.sqrt();
        bvn -= (-0.5 * hk).exp()
            * TWO_PI.sqrt()
            * std_normal_cdf(-b / a)
            * b
            * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
    }
    a *= 0.5;
    for &(x, w) in nodes {
        let xs = (a * (x + 1.0)).powi(2);
        let rs = (1.0 - xs).sqrt();
        bvn += a
            * w
            * ((-bs / (2.0 * xs) - hk / (1.0 + rs)).exp() / rs
                - (-0.5 * (bs / xs + hk)).exp() * (1.0 + c * xs * (1.0 + d * xs)));
        let xs = as_ * (1.0 - x).powi(2) / 4.0;
        let rs = (1.0 - xs).sqrt();
        bvn += a
            * w
            * (-0.5 * (bs / xs + hk)).exp()
            * ((-hk * (1.0 - rs) / (2.0 * (1.0 + rs))).exp() / rs
                - (1.0 + c * xs * (1.0 + d * xs)));
    }
    bvn = -bvn / TWO_PI;

    if r > 0.0 {
        bvn + std_normal_cdf(-h.max(k))
    } else {
        -bvn + (std_normal_cdf(-h) - std_normal_cdf(-k)).max(0.0)
    }
}

/// Bivariate standard normal CDF `Φ_ρ(x, y) = P(X ≤ x, Y ≤ y)`.
///
/// Infinite arguments reduce analytically to the marginal or to zero.
pub fn bvn_cdf(x: f64, y: f64, rho: f64) -> Result<f64> {
    if x.is_nan() || y.is_nan() || rho.is_nan() {
        return Err(Error::Domain("NaN argument to bvn_cdf".into()));
    }
    if rho.abs() > MAX_ABS_CORRELATION {
        return Err(Error::NearSingularCorrelation { rho });
    }
    if x == f64::NEG_INFINITY || y == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    if x == f64::INFINITY {
        return Ok(std_normal_cdf(y));
    }
    if y == f64::INFINITY {
        return Ok(std_normal_cdf(x));
    }
    Ok(bvn_upper(-x, -y, rho).clamp(0.0, 1.0))
}

/// `E[e^{kZ} 1{Z ≥ c}] = e^{k²/2} Φ(k − c)` for standard normal `Z`.
pub fn tilted_upper_tail(k: f64, c: f64) -> Result<f64> {
    if k.is_nan() || c.is_nan() {
        return Err(Error::Domain("NaN argument to tilted_upper_tail".into()));
    }
    let log_value = 0.5 * k * k + log_std_normal_cdf(k - c);
    exp_checked(log_value, "tilted_upper_tail")
}

/// `E[e^{kP} 1{P ≥ p_c, T ≥ t_c}] = e^{k²/2} Φ_ρ(k − p_c, ρk − t_c)` for
/// standard bivariate normal `(P, T)` with correlation `ρ`.
pub fn tilted_upper_tail2(k: f64, p_c: f64, t_c: f64, rho: f64) -> Result<f64> {
    let tail = bvn_cdf(k - p_c, rho * k - t_c, rho)?;
    if tail == 0.0 {
        return Ok(0.0);
    }
    exp_checked(0.5 * k * k + tail.ln(), "tilted_upper_tail2")
}

pub(crate) fn exp_checked(log_value: f64, what: &str) -> Result<f64> {
    if log_value > LN_MAX {
        Err(Error::Overflow(format!(
            "{what}: exponent {log_value} exceeds the f64 range"
        )))
    } else {
        Ok(log_value.exp())
    }
}
