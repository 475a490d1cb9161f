//! Adaptive Gauss–Kronrod quadrature and direct integral references for the
//! closed-form aggregates.
//!
//! Everything here integrates the raw Gaussian density; no normal CDF,
//! tilting identity or bivariate routine from the analytic layer is used.

use serde::{Deserialize, Serialize};

use crate::economy::Primitives;
use crate::error::{Error, Result};

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Interval cap for a single adaptive integration.
pub const MAX_INTERVALS: usize = 2000;

/// Half-width, in standard deviations, beyond which Gaussian mass is dropped.
const TRUNCATION: f64 = 14.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    rounding: f64,
}

fn kronrod15<F>(f: &mut F, a: f64, b: f64) -> Result<Segment>
where
    F: FnMut(f64) -> Result<f64>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut fv = [(0.0, 0.0); 7];
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    let mut abs = WGK[7] * fc.abs();
    for j in 0..7 {
        let x = h * XGK[j];
        let (f1, f2) = (f(c - x)?, f(c + x)?);
        fv[j] = (f1, f2);
        k += WGK[j] * (f1 + f2);
        abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            g += WG[j / 2] * (f1 + f2);
        }
    }
    if !k.is_finite() {
        return Err(Error::Domain(format!("non-finite integrand on [{a}, {b}]")));
    }
    // QUADPACK error heuristic, floored at the rounding level of the sum.
    let mean = 0.5 * k;
    let asc = WGK[7] * (fc - mean).abs()
        + (0..7)
            .map(|j| WGK[j] * ((fv[j].0 - mean).abs() + (fv[j].1 - mean).abs()))
            .sum::<f64>();
    let (h_abs, asc) = (h.abs(), asc * h.abs());
    let mut error = ((k - g) * h).abs();
    if asc != 0.0 && error != 0.0 {
        error = asc * (200.0 * error / asc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * abs * h_abs;
    Ok(Segment {
        a,
        b,
        value: k * h,
        error: error.max(floor),
        rounding: floor,
    })
}

/// Globally adaptive G7K15 integration of `f` over `[a, b]` to absolute
/// tolerance `abs_tol`. Bisects the segment with the largest error estimate.
pub fn integrate<F>(mut f: F, a: f64, b: f64, abs_tol: f64) -> Result<Integral>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!(
            "integration limits [{a}, {b}] must be finite"
        )));
    }
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
            intervals: 0,
        });
    }
    let mut segments = vec![kronrod15(&mut f, a, b)?];
    loop {
        let error: f64 = segments.iter().map(|s| s.error).sum();
        let rounding: f64 = segments.iter().map(|s| s.rounding).sum();
        // Stop once the estimate is down to rounding noise as well.
        if error <= abs_tol || error <= 2.0 * rounding {
            return Ok(Integral {
                value: segments.iter().map(|s| s.value).sum(),
                error,
                intervals: segments.len(),
            });
        }
        if segments.len() >= MAX_INTERVALS {
            return Err(Error::ToleranceNotMet {
                error,
                intervals: segments.len(),
            });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("non-empty");
        let s = segments.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        segments.push(kronrod15(&mut f, s.a, mid)?);
        segments.push(kronrod15(&mut f, mid, s.b)?);
    }
}

fn density(x: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_677_939_946_059_934_381_87;
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// `Pr(Z ≤ u)` by direct integration.
fn lower_mass(u: f64, tol: f64) -> Result<f64> {
    if u <= -TRUNCATION {
        return Ok(0.0);
    }
    if u > 0.0 {
        let upper = integrate(|z| Ok(density(z)), u, u.max(0.0) + TRUNCATION, tol)?.value;
        return Ok(1.0 - upper);
    }
    Ok(integrate(|z| Ok(density(z)), -TRUNCATION, u, tol)?.value)
}

/// `∫_{z0}^∞ (e^{k(m + s z − c)} − w) φ(z) dz`, the building block of every
/// conditional moment below.
fn tilted_conditional(k: f64, m: f64, s: f64, c: f64, w: f64, tol: f64) -> Result<f64> {
    let z0 = (c - m) / s;
    let upper = z0.max(k * s) + TRUNCATION;
    let lower = z0.max(-TRUNCATION);
    if lower >= upper {
        return Ok(0.0);
    }
    integrate(
        |z| Ok(((k * (m + s * z - c)).exp() - w) * density(z)),
        lower,
        upper,
        tol,
    )
    .map(|i| i.value)
}

/// Quantities with a direct integral representation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "quantity", rename_all = "snake_case")]
pub enum QuadratureQuantity {
    /// `π̃(e^t)` at log productivity cutoff `p_star`.
    PiTilde { rho: f64, p_star: f64, t: f64 },
    /// `π̆ = E[π̃(θ) 1{θ ≥ θ*}]`.
    PiBreve { rho: f64, p_star: f64, t_star: f64 },
    /// `E[φ^{σ−1} 1{θ ≥ θ*, φ ≥ φ*}]`.
    S { rho: f64, p_star: f64, t_star: f64 },
    /// `Pr(X ≤ x, Y ≤ y)` for standard normals with correlation `rho`.
    Bvn { x: f64, y: f64, rho: f64 },
    /// `Pr(Z ≥ c)`.
    UpperTail { c: f64 },
}

fn check_finite(values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Domain("quadrature parameters must be finite".into()))
    }
}

fn check_rho(rho: f64, lo: f64) -> Result<f64> {
    if !(rho > lo && rho < 1.0) {
        return Err(Error::Domain(format!(
            "rho = {rho} outside the quadrature range"
        )));
    }
    Ok(((1.0 - rho) * (1.0 + rho)).sqrt())
}

/// Reference value of `quantity` by adaptive quadrature to absolute
/// tolerance `abs_tol` (at most `1e-10`).
pub fn quadrature_reference(
    prim: &Primitives,
    quantity: QuadratureQuantity,
    abs_tol: f64,
) -> Result<f64> {
    if !(abs_tol > 0.0 && abs_tol <= 1e-10) {
        return Err(Error::Domain(format!(
            "tolerance {abs_tol} must lie in (0, 1e-10]"
        )));
    }
    let k = prim.k();
    let inner_tol = 1e-3 * abs_tol;
    let outer_tol = 0.5 * abs_tol;

    match quantity {
        QuadratureQuantity::PiTilde { rho, p_star, t } => {
            check_finite(&[p_star, t])?;
            let s = check_rho(rho, 0.0)?;
            let v = tilted_conditional(k, rho * t, s, p_star, 1.0, abs_tol / prim.f)?;
            Ok(prim.f * v)
        }
        QuadratureQuantity::PiBreve {
            rho,
            p_star,
            t_star,
        } => {
            check_finite(&[p_star, t_star])?;
            let s = check_rho(rho, 0.0)?;
            let (lo, hi) = outer_range(t_star, k * rho);
            let v = integrate(
                |t| Ok(tilted_conditional(k, rho * t, s, p_star, 1.0, inner_tol)? * density(t)),
                lo,
                hi,
                outer_tol / prim.f,
            )?;
            Ok(prim.f * v.value)
        }
        QuadratureQuantity::S {
            rho,
            p_star,
            t_star,
        } => {
            check_finite(&[p_star, t_star])?;
            let s = check_rho(rho, 0.0)?;
            let (lo, hi) = outer_range(t_star, k * rho);
            // Integrate with the cutoff factored out, e^{k p*} restored after.
            let v = integrate(
                |t| Ok(tilted_conditional(k, rho * t, s, p_star, 0.0, inner_tol)? * density(t)),
                lo,
                hi,
                outer_tol * (-k * p_star).exp().min(1.0),
            )?;
            Ok((k * p_star).exp() * v.value)
        }
        QuadratureQuantity::Bvn { x, y, rho } => {
            check_finite(&[x, y])?;
            let s = check_rho(rho, -1.0)?;
            let hi = y.min(TRUNCATION);
            if hi <= -TRUNCATION {
                return Ok(0.0);
            }
            let v = integrate(
                |t| Ok(lower_mass((x - rho * t) / s, inner_tol)? * density(t)),
                -TRUNCATION,
                hi,
                outer_tol,
            )?;
            Ok(v.value)
        }
        QuadratureQuantity::UpperTail { c } => {
            check_finite(&[c])?;
            Ok(1.0 - lower_mass(c, abs_tol)?)
        }
    }
}

/// Outer range for `∫_{t*}^∞ g(t) φ(t) dt` when `g` tilts the density's
/// mode to `mode`.
fn outer_range(t_star: f64, mode: f64) -> (f64, f64) {
    let lo = t_star.max(mode - TRUNCATION).max(-TRUNCATION - 2.0);
    let hi = t_star.max(mode) + TRUNCATION;
    (lo, hi)
}
