//! Equilibrium cutoffs.
//!
//! The activation condition depends on `(t*, p*)` only through the index
//! `ρt* − p*`, so it pins down the intercept `a` of the line `p* = ρt* + a`.
//! Along that line the free-entry residual `J(t) = H(ρt + a, t)` is strictly
//! decreasing, and its unique root is the equilibrium signal cutoff.

use serde::{Deserialize, Serialize};

use crate::economy::{expected_profit_at_index, LogCutoffs, Primitives, Regime};
use crate::error::{Error, Result};
use crate::roots::{brent, expand_bracket, Bracket};
use crate::stats::{bvn_cdf, exp_checked, std_normal_cdf, tilted_upper_tail};

/// Numerical tolerances of the nested solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    /// Brent stopping width on the abscissa.
    pub abscissa_tol: f64,
    /// Maximum |residual| accepted for the activation intercept.
    pub ac_tol: f64,
    /// Maximum |residual| accepted for the AC and FE conditions.
    pub residual_tol: f64,
    /// Maximum |∂H/∂t| accepted at the solution.
    pub stationarity_tol: f64,
    /// Central-difference step for the stationarity check.
    pub stationarity_step: f64,
    /// Brackets are searched within `[-limit, limit]` in log space.
    pub bracket_limit: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            abscissa_tol: 1e-12,
            ac_tol: 1e-12,
            residual_tol: 1e-10,
            stationarity_tol: 1e-6,
            stationarity_step: 1e-5,
            bracket_limit: 50.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationCounts {
    /// Function evaluations spent bracketing and solving for `a`.
    pub ac: usize,
    /// Function evaluations spent bracketing and solving `J(t) = 0`.
    pub fe: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSolution {
    pub cutoffs: LogCutoffs,
    pub ac_residual: f64,
    pub fe_residual: f64,
    /// Central-difference `∂H/∂t` at the solution.
    pub fe_stationarity: f64,
    pub iterations: IterationCounts,
}

// ---------------------------------------------------------------------------
// Residuals in terms of raw (ρ, f_b) so the policy layer can reuse them with
// modified activation costs.

pub(crate) fn ac_residual_raw(prim: &Primitives, rho: f64, f_b: f64, a: f64) -> Result<f64> {
    Ok(expected_profit_at_index(prim, rho, -a)? / prim.f - prim.delta * f_b / prim.f)
}

pub(crate) fn fe_residual_raw(
    prim: &Primitives,
    rho: f64,
    f_b: f64,
    p_star: f64,
    t_star: f64,
) -> Result<f64> {
    let k = prim.k();
    let tilted = bvn_cdf(-p_star + k, -t_star + rho * k, rho)?;
    let tilted = if tilted == 0.0 {
        0.0
    } else {
        exp_checked(
            0.5 * k * k - k * p_star + tilted.ln(),
            "free-entry residual",
        )?
    };
    let survive = bvn_cdf(-p_star, -t_star, rho)?;
    Ok(tilted
        - survive
        - prim.delta * f_b / prim.f * std_normal_cdf(-t_star)
        - prim.delta * prim.f_n / prim.f)
}

pub(crate) fn solve_ac_raw(
    prim: &Primitives,
    rho: f64,
    f_b: f64,
    opts: &SolverOptions,
) -> Result<(f64, f64, usize)> {
    let g = |a: f64| ac_residual_raw(prim, rho, f_b, a);
    let (bracket, evals) = expand_bracket(g, true, opts.bracket_limit, "activation intercept")?;
    let root = brent(g, bracket, opts.abscissa_tol)?;
    let residual = g(root.x)?;
    let tolerance = rounding_floor(opts.ac_tol, prim.delta * f_b / prim.f);
    if residual.abs() > tolerance {
        return Err(Error::ResidualTolerance {
            what: "activation intercept",
            residual,
            tolerance,
        });
    }
    Ok((root.x, residual, evals + root.iterations))
}

/// `tol`, raised to a few ulps of `scale` when the residual's terms are too
/// large for `tol` to be representable.
pub(crate) fn rounding_floor(tol: f64, scale: f64) -> f64 {
    tol.max(64.0 * f64::EPSILON * scale.abs())
}

/// Central-difference `∂H/∂t` at `(p*, t*)`.
pub(crate) fn fe_slope_in_t(
    prim: &Primitives,
    rho: f64,
    f_b: f64,
    p_star: f64,
    t_star: f64,
    h: f64,
) -> Result<f64> {
    let up = fe_residual_raw(prim, rho, f_b, p_star, t_star + h)?;
    let down = fe_residual_raw(prim, rho, f_b, p_star, t_star - h)?;
    Ok((up - down) / (2.0 * h))
}

/// Finishes a solve given the intercept and a bracket for `t*`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn finish_solution(
    prim: &Primitives,
    rho: f64,
    ac_cost: f64,
    fe_cost: f64,
    a: f64,
    bracket: Bracket,
    evals: IterationCounts,
    opts: &SolverOptions,
) -> Result<EquilibriumSolution> {
    let j = |t: f64| fe_residual_raw(prim, rho, fe_cost, rho * t + a, t);
    let root = brent(j, bracket, opts.abscissa_tol)?;
    let t_star = root.x;
    let p_star = rho * t_star + a;
    let ac_residual = ac_residual_raw(prim, rho, ac_cost, p_star - rho * t_star)?;
    let fe_residual = fe_residual_raw(prim, rho, fe_cost, p_star, t_star)?;
    let fe_stationarity =
        fe_slope_in_t(prim, rho, fe_cost, p_star, t_star, opts.stationarity_step)?;

    let ac_scale = prim.delta * ac_cost / prim.f;
    let fe_scale = prim.delta * (fe_cost + prim.f_n) / prim.f;
    for (what, residual, tolerance) in [
        (
            "activation condition",
            ac_residual,
            rounding_floor(opts.residual_tol, ac_scale),
        ),
        (
            "free-entry condition",
            fe_residual,
            rounding_floor(opts.residual_tol, fe_scale),
        ),
    ] {
        if !(residual.abs() <= tolerance) {
            return Err(Error::ResidualTolerance {
                what,
                residual,
                tolerance,
            });
        }
    }

    Ok(EquilibriumSolution {
        cutoffs: LogCutoffs { t_star, p_star, a },
        ac_residual,
        fe_residual,
        fe_stationarity,
        iterations: IterationCounts {
            ac: evals.ac,
            fe: evals.fe + root.iterations,
        },
    })
}

// ---------------------------------------------------------------------------

/// Activation-condition residual at intercept `a`: `π̃/f − δ f_b / f`
/// evaluated at index `−a`. Strictly decreasing in `a`.
pub fn ac_residual(a: f64, prim: &Primitives, regime: &Regime) -> Result<f64> {
    ac_residual_raw(prim, regime.rho(), regime.activation_cost(), a)
}

/// The unique intercept `a(ρ)` solving the activation condition.
pub fn solve_ac_intercept(prim: &Primitives, regime: &Regime) -> Result<f64> {
    let (a, _, _) = solve_ac_raw(
        prim,
        regime.rho(),
        regime.activation_cost(),
        &SolverOptions::default(),
    )?;
    Ok(a)
}

/// Free-entry residual `H(p*, t*)`, normalized by `f`. Strictly decreasing
/// in `p*`.
pub fn fe_residual(p_star: f64, t_star: f64, prim: &Primitives, regime: &Regime) -> Result<f64> {
    fe_residual_raw(prim, regime.rho(), regime.activation_cost(), p_star, t_star)
}

/// `J(t) = H(ρt + a, t)`: the free-entry residual along the activation line.
pub fn fe_along_ac(t: f64, a: f64, prim: &Primitives, regime: &Regime) -> Result<f64> {
    fe_residual(regime.rho() * t + a, t, prim, regime)
}

pub fn solve_equilibrium(prim: &Primitives, regime: &Regime) -> Result<EquilibriumSolution> {
    solve_equilibrium_with(prim, regime, &SolverOptions::default())
}

pub fn solve_equilibrium_with(
    prim: &Primitives,
    regime: &Regime,
    opts: &SolverOptions,
) -> Result<EquilibriumSolution> {
    let rho = regime.rho();
    let f_b = regime.activation_cost();
    let (a, _, ac_evals) = solve_ac_raw(prim, rho, f_b, opts)?;
    let j = |t: f64| fe_residual_raw(prim, rho, f_b, rho * t + a, t);
    let (bracket, fe_evals) = expand_bracket(j, true, opts.bracket_limit, "signal cutoff")?;
    let sol = finish_solution(
        prim,
        rho,
        f_b,
        f_b,
        a,
        bracket,
        IterationCounts {
            ac: ac_evals,
            fe: fe_evals,
        },
        opts,
    )?;
    if !(sol.fe_stationarity.abs() <= opts.stationarity_tol) {
        return Err(Error::ResidualTolerance {
            what: "free-entry stationarity",
            residual: sol.fe_stationarity,
            tolerance: opts.stationarity_tol,
        });
    }
    Ok(sol)
}

/// `H(p*, t)` over a grid of `t`, for inspecting the single-peaked
/// free-entry locus.
pub fn fe_locus_profile(
    p_star: f64,
    t_grid: &[f64],
    prim: &Primitives,
    regime: &Regime,
) -> Result<Vec<f64>> {
    t_grid
        .iter()
        .map(|&t| fe_residual(p_star, t, prim, regime))
        .collect()
}

// ---------------------------------------------------------------------------
// Single-stage (Melitz) limits.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitVariant {
    /// ρ → 0: every experimenter activates and pays `f_n + f_b(0⁺)`.
    ZeroPrecision,
    /// ρ → 1 at a fixed activation cost: the cost acts like an extra
    /// operating fixed requirement `δ f̄_b`.
    PerfectInfo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MelitzLimit {
    pub p_star: f64,
    pub variant: LimitVariant,
    pub effective_entry_cost: f64,
    pub effective_fixed_cost: f64,
    pub fe_residual: f64,
    pub zpc_residual: f64,
}

/// Melitz's `k(φ*) = (φ̃/φ*)^{σ−1} − 1` for a standard lognormal
/// productivity distribution, in terms of `p* = log φ*`.
pub fn melitz_k(prim: &Primitives, p_star: f64) -> Result<f64> {
    let k = prim.k();
    // φ̃^{σ−1} = e^{k²/2} Φ(k − p*) / Φ(−p*)
    let log_ratio = 0.5 * k * k + crate::stats::log_std_normal_cdf(k - p_star)
        - crate::stats::log_std_normal_cdf(-p_star)
        - k * p_star;
    Ok(exp_checked(log_ratio, "melitz k")? - 1.0)
}

fn solve_limit(
    prim: &Primitives,
    fixed_cost: f64,
    entry_cost: f64,
    variant: LimitVariant,
) -> Result<MelitzLimit> {
    let opts = SolverOptions::default();
    let fe = |p: f64| -> Result<f64> {
        Ok(std_normal_cdf(-p) * fixed_cost * melitz_k(prim, p)? / prim.delta - entry_cost)
    };
    let (bracket, _) = expand_bracket(fe, true, opts.bracket_limit, "limit cutoff")?;
    let root = brent(fe, bracket, opts.abscissa_tol)?;
    let p_star = root.x;
    let fe_residual = fe(p_star)?;

    // Average profit of survivors from the truncated moment directly.
    let k = prim.k();
    let survivors = std_normal_cdf(-p_star);
    let moment = tilted_upper_tail(k, p_star)?;
    let pi_bar = fixed_cost * ((-k * p_star).exp() * moment / survivors - 1.0);
    let zpc_residual = pi_bar - fixed_cost * melitz_k(prim, p_star)?;

    if fe_residual.abs() > opts.residual_tol || zpc_residual.abs() > opts.residual_tol {
        return Err(Error::ResidualTolerance {
            what: "limit economy",
            residual: fe_residual.abs().max(zpc_residual.abs()),
            tolerance: opts.residual_tol,
        });
    }
    Ok(MelitzLimit {
        p_star,
        variant,
        effective_entry_cost: entry_cost,
        effective_fixed_cost: fixed_cost,
        fe_residual,
        zpc_residual,
    })
}

/// Uninformative-signal limit with total entry cost `f_e0`.
pub fn melitz_limit_zero(prim: &Primitives, f_e0: f64) -> Result<MelitzLimit> {
    if !(f_e0 > 0.0 && f_e0.is_finite()) {
        return Err(Error::Domain(format!("f_e0 = {f_e0} must be positive")));
    }
    solve_limit(prim, prim.f, f_e0, LimitVariant::ZeroPrecision)
}

/// Perfect-information limit with the activation cost frozen at `f_b_bar`.
pub fn melitz_limit_perfect(prim: &Primitives, f_b_bar: f64) -> Result<MelitzLimit> {
    if !(f_b_bar > 0.0 && f_b_bar.is_finite()) {
        return Err(Error::Domain(format!(
            "f_b_bar = {f_b_bar} must be positive"
        )));
    }
    solve_limit(
        prim,
        prim.f + prim.delta * f_b_bar,
        prim.f_n,
        LimitVariant::PerfectInfo,
    )
}
