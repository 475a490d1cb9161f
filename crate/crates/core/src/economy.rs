//! Economy primitives, gatekeeping regimes and the closed-form profit
//! building blocks.
//!
//! Everything solver-facing lives in log space: `t = log θ` for the signal
//! and `p = log φ` for productivity. `(p, t)` is standard bivariate normal
//! with correlation `ρ`, so `p | t ~ N(ρt, 1 − ρ²)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{
    exp_checked, log_std_normal_cdf, std_normal_cdf, tilted_upper_tail2, Correlation,
    MAX_ABS_CORRELATION,
};

/// Lower clamp applied to `ρ` at the API boundary.
pub const RHO_MIN: f64 = 1e-6;
/// Upper clamp applied to `ρ` at the API boundary.
pub const RHO_MAX: f64 = 1.0 - 1e-6;

/// Deep parameters of the economy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Primitives {
    /// Elasticity of substitution.
    pub sigma: f64,
    /// Per-period operating fixed requirement.
    pub f: f64,
    /// Experimentation cost.
    pub f_n: f64,
    /// Effective discount / exit rate.
    pub delta: f64,
    /// Labor endowment.
    #[serde(rename = "L", default = "default_labor")]
    pub labor: f64,
}

fn default_labor() -> f64 {
    1.0
}

impl Primitives {
    pub fn new(sigma: f64, f: f64, f_n: f64, delta: f64, labor: f64) -> Result<Self> {
        let prim = Self {
            sigma,
            f,
            f_n,
            delta,
            labor,
        };
        prim.validate()?;
        Ok(prim)
    }

    /// σ = 2, f = 0.15, f_n = 0.005, δ = 0.1, L = 1.
    pub fn baseline() -> Self {
        Self {
            sigma: 2.0,
            f: 0.15,
            f_n: 0.005,
            delta: 0.1,
            labor: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Domain(msg.to_string()))
            }
        };
        check(
            self.sigma.is_finite() && self.sigma > 1.0,
            "sigma must exceed 1",
        )?;
        check(self.f.is_finite() && self.f > 0.0, "f must be positive")?;
        check(
            self.f_n.is_finite() && self.f_n > 0.0,
            "f_n must be positive",
        )?;
        check(
            self.delta.is_finite() && self.delta > 0.0 && self.delta < 1.0,
            "delta must lie in (0, 1)",
        )?;
        check(
            self.labor.is_finite() && self.labor > 0.0,
            "L must be positive",
        )
    }

    /// `σ − 1`, the tilting exponent of every truncated moment.
    pub fn k(&self) -> f64 {
        self.sigma - 1.0
    }
}

/// Activation cost as a function of screening precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CostSchedule {
    Constant {
        f_b: f64,
    },
    /// `f_b0 (1 + κ ρ^α)`, bounded above by `f_b0 (1 + κ)`.
    PowerBounded {
        f_b0: f64,
        kappa: f64,
        alpha: f64,
    },
    /// `f_low` below `rho_l`, `f_high` above `rho_h`, linear in between.
    PiecewiseLinear {
        rho_l: f64,
        rho_h: f64,
        f_low: f64,
        f_high: f64,
    },
    /// `f_b0 / (1 − ρ)`, unbounded as `ρ → 1`.
    Hyperbolic {
        f_b0: f64,
    },
}

impl CostSchedule {
    /// `3 (1 + 2ρ⁸)`.
    pub fn baseline() -> Self {
        Self::PowerBounded {
            f_b0: 3.0,
            kappa: 2.0,
            alpha: 8.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Domain(msg.to_string()));
        match *self {
            Self::Constant { f_b } if !(f_b.is_finite() && f_b > 0.0) => {
                fail("constant f_b must be positive")
            }
            Self::PowerBounded { f_b0, kappa, alpha }
                if !(f_b0.is_finite() && f_b0 > 0.0 && kappa >= 0.0 && alpha > 0.0) =>
            {
                fail("power schedule needs f_b0 > 0, kappa >= 0, alpha > 0")
            }
            Self::PiecewiseLinear {
                rho_l,
                rho_h,
                f_low,
                f_high,
            } if !(0.0 < rho_l
                && rho_l < rho_h
                && rho_h < 1.0
                && f_low > 0.0
                && f_low <= f_high
                && f_high.is_finite()) =>
            {
                fail("piecewise schedule needs 0 < rho_l < rho_h < 1 and 0 < f_low <= f_high")
            }
            Self::Hyperbolic { f_b0 } if !(f_b0.is_finite() && f_b0 > 0.0) => {
                fail("hyperbolic f_b0 must be positive")
            }
            _ => Ok(()),
        }
    }

    /// Evaluates the schedule at `rho ∈ (0, 1)`.
    pub fn cost_at(&self, rho: f64) -> Result<f64> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::Domain(format!("rho = {rho} outside (0, 1)")));
        }
        Ok(match *self {
            Self::Constant { f_b } => f_b,
            Self::PowerBounded { f_b0, kappa, alpha } => f_b0 * (1.0 + kappa * rho.powf(alpha)),
            Self::PiecewiseLinear {
                rho_l,
                rho_h,
                f_low,
                f_high,
            } => {
                if rho <= rho_l {
                    f_low
                } else if rho >= rho_h {
                    f_high
                } else {
                    f_low + (f_high - f_low) * (rho - rho_l) / (rho_h - rho_l)
                }
            }
            Self::Hyperbolic { f_b0 } => f_b0 / (1.0 - rho),
        })
    }

    /// Points where the schedule is not differentiable.
    pub fn kinks(&self) -> Vec<f64> {
        match *self {
            Self::PiecewiseLinear { rho_l, rho_h, .. } => vec![rho_l, rho_h],
            _ => Vec::new(),
        }
    }
}

/// A gatekeeping regime: precision `ρ` together with its cost schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regime {
    rho: Correlation,
    schedule: CostSchedule,
    activation_cost: f64,
}

impl Regime {
    /// Validates `rho ∈ (0, 1)`, clamps it to `[RHO_MIN, RHO_MAX]` and
    /// evaluates the schedule.
    pub fn new(rho: f64, schedule: CostSchedule) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::Domain(format!("rho = {rho} outside (0, 1)")));
        }
        schedule.validate()?;
        let rho = rho.clamp(RHO_MIN, RHO_MAX);
        let activation_cost = schedule.cost_at(rho)?;
        Ok(Self {
            rho: Correlation::new(rho)?,
            schedule,
            activation_cost,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho.get()
    }

    pub fn schedule(&self) -> CostSchedule {
        self.schedule
    }

    /// `f_b(ρ)`.
    pub fn activation_cost(&self) -> f64 {
        self.activation_cost
    }
}

/// Equilibrium cutoffs in log space, with the activation-locus intercept
/// `a` such that `p* = ρ t* + a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogCutoffs {
    pub t_star: f64,
    pub p_star: f64,
    pub a: f64,
}

fn check_positive(x: f64, name: &str) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {x} must be positive")))
    }
}

/// Per-period profit `f[(φ/φ*)^{σ−1} − 1]`.
pub fn flow_profit(prim: &Primitives, phi: f64, phi_star: f64) -> Result<f64> {
    check_positive(phi, "phi")?;
    check_positive(phi_star, "phi_star")?;
    Ok(prim.f * ((phi / phi_star).powf(prim.k()) - 1.0))
}

/// Per-period revenue `σ f (φ/φ*)^{σ−1}`.
pub fn flow_revenue(prim: &Primitives, phi: f64, phi_star: f64) -> Result<f64> {
    check_positive(phi, "phi")?;
    check_positive(phi_star, "phi_star")?;
    Ok(prim.sigma * prim.f * (phi / phi_star).powf(prim.k()))
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Domain(format!("rho = {rho} outside (0, 1)")));
    }
    if rho > MAX_ABS_CORRELATION {
        return Err(Error::NearSingularCorrelation { rho });
    }
    Ok(())
}

/// Expected flow profit of an activated entrant as a function of the index
/// `x = ρt − p*` alone.
pub fn expected_profit_at_index(prim: &Primitives, rho: f64, x: f64) -> Result<f64> {
    check_rho(rho)?;
    if x == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let k = prim.k();
    let var = (1.0 - rho) * (1.0 + rho);
    let sd = var.sqrt();
    let log_tilted = k * x + 0.5 * k * k * var + log_std_normal_cdf((x + k * var) / sd);
    let tilted = exp_checked(log_tilted, "expected profit")?;
    Ok(prim.f * (tilted - std_normal_cdf(x / sd)).max(0.0))
}

/// `π̃(e^t)`: expected per-period profit of activating with log signal `t`,
/// given the log productivity cutoff `p_star`.
pub fn expected_profit_given_signal(
    prim: &Primitives,
    rho: f64,
    p_star: f64,
    t: f64,
) -> Result<f64> {
    expected_profit_at_index(prim, rho, rho * t - p_star)
}

/// `π̆ = ∫_{t*}^∞ π̃(e^t) φ(t) dt`, the unconditional expected flow profit
/// at the experimentation stage.
pub fn expected_joint_profit(prim: &Primitives, rho: f64, cutoffs: &LogCutoffs) -> Result<f64> {
    check_rho(rho)?;
    let LogCutoffs { t_star, p_star, .. } = *cutoffs;
    if t_star == f64::INFINITY || p_star == f64::INFINITY {
        return Ok(0.0);
    }
    let k = prim.k();
    let selection = tilted_upper_tail2(k, p_star, t_star, rho)?;
    let survival = tilted_upper_tail2(0.0, p_star, t_star, rho)?;
    let scaled = if selection == 0.0 {
        0.0
    } else {
        exp_checked(selection.ln() - k * p_star, "expected joint profit")?
    };
    Ok(prim.f * (scaled - survival).max(0.0))
}
