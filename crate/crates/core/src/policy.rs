//! Constrained planner, intermediation contracts and activation transfers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::economy::{expected_profit_given_signal, LogCutoffs, Primitives, Regime};
use crate::equilibrium::{
    fe_residual_raw, finish_solution, solve_ac_raw, EquilibriumSolution, IterationCounts,
    SolverOptions,
};
use crate::error::{Error, Result};
use crate::roots::{brent, expand_bracket, scan_brackets, Bracket};
use crate::stats::std_normal_cdf;
use crate::welfare::{aggregates_at, solve_point, Aggregates};

/// Largest admissible gap between the planner and market cutoffs.
pub const CUTOFF_MATCH_TOL: f64 = 1e-8;

/// Margin below `f_b` that a per-activation subsidy must respect.
pub const SUBSIDY_MARGIN: f64 = 1e-6;

/// Bracketing scan for the signal cutoff under a transfer.
const SCAN_LO: f64 = -50.0;
const SCAN_HI: f64 = 50.0;
const SCAN_STEP: f64 = 0.05;

/// Marginal payoff kernel `π̃(e^t)/δ − f_b(ρ)` of activating a type with
/// log signal `t`.
pub fn planner_kernel(prim: &Primitives, regime: &Regime, p_star: f64, t: f64) -> Result<f64> {
    let profit = expected_profit_given_signal(prim, regime.rho(), p_star, t)?;
    Ok(profit / prim.delta - regime.activation_cost())
}

/// Root of the planner kernel at the equilibrium productivity cutoff.
/// Fails with `CutoffMismatch` if it departs from the market cutoff.
pub fn planner_cutoff(prim: &Primitives, regime: &Regime, eq: &EquilibriumSolution) -> Result<f64> {
    let p_star = eq.cutoffs.p_star;
    let g = |t: f64| planner_kernel(prim, regime, p_star, t);
    let (bracket, _) = expand_bracket(g, false, 50.0, "planner cutoff")?;
    let t_p = brent(g, bracket, 1e-14)?.x;
    let market = eq.cutoffs.t_star;
    if !((t_p - market).abs() <= CUTOFF_MATCH_TOL) {
        return Err(Error::CutoffMismatch {
            planner: t_p,
            market,
        });
    }
    Ok(t_p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractPoint {
    pub t: f64,
    /// Share of profits retained by the firm.
    pub b: f64,
}

/// Profit shares `b(t) = δ f_b / π̃(e^t)` that leave each activated type
/// exactly indifferent to paying the activation cost.
pub fn intermediation_schedule(
    prim: &Primitives,
    regime: &Regime,
    eq: &EquilibriumSolution,
    t_grid: &[f64],
) -> Result<Vec<ContractPoint>> {
    let LogCutoffs { t_star, p_star, .. } = eq.cutoffs;
    let cost = prim.delta * regime.activation_cost();
    t_grid
        .iter()
        .map(|&t| {
            // Allow the marginal type itself through despite rounding in t*.
            if !(t >= t_star - 1e-12) {
                return Err(Error::Domain(format!(
                    "contract undefined below the signal cutoff: t = {t} < {t_star}"
                )));
            }
            let profit = expected_profit_given_signal(prim, regime.rho(), p_star, t)?;
            Ok(ContractPoint {
                t,
                b: (cost / profit).min(1.0),
            })
        })
        .collect()
}

/// Activation transfer and entry fee implementing a chosen signal cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyBundle {
    pub theta_p_log: f64,
    /// Per-activation subsidy; negative values are taxes.
    pub s: f64,
    /// Entry fee paid by every experimenter.
    pub tau: f64,
}

impl PolicyBundle {
    /// `τ − s Φ(−t^P)`.
    pub fn budget_gap(&self) -> f64 {
        self.tau - self.s * std_normal_cdf(-self.theta_p_log)
    }

    /// Whether a type with log signal `t` activates under the transfer.
    pub fn activates(
        &self,
        prim: &Primitives,
        regime: &Regime,
        p_star: f64,
        t: f64,
    ) -> Result<bool> {
        Ok(planner_kernel(prim, regime, p_star, t)? + self.s >= 0.0)
    }
}

pub fn decentralize_cutoff(
    prim: &Primitives,
    regime: &Regime,
    eq: &EquilibriumSolution,
    t_p: f64,
) -> Result<PolicyBundle> {
    if !t_p.is_finite() {
        return Err(Error::Domain(format!("policy cutoff {t_p} must be finite")));
    }
    let s = -planner_kernel(prim, regime, eq.cutoffs.p_star, t_p)?;
    Ok(PolicyBundle {
        theta_p_log: t_p,
        s,
        tau: s * std_normal_cdf(-t_p),
    })
}

/// Equilibrium under a per-activation transfer `s` financed by a
/// budget-balancing entry fee.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PigouvianOutcome {
    pub s: f64,
    pub equilibrium: EquilibriumSolution,
    pub aggregates: Aggregates,
}

/// Solves the economy when activation costs `f_b − s` privately while the
/// fee keeps the entry condition at the unmodified cost.
pub fn pigouvian_equilibrium(
    prim: &Primitives,
    regime: &Regime,
    s: f64,
) -> Result<PigouvianOutcome> {
    let f_b = regime.activation_cost();
    if !(s.is_finite() && s < f_b - SUBSIDY_MARGIN) {
        return Err(Error::Domain(format!(
            "subsidy {s} must stay below the activation cost {f_b} minus {SUBSIDY_MARGIN}"
        )));
    }
    if s == 0.0 {
        let p = solve_point(prim, regime)?;
        return Ok(PigouvianOutcome {
            s,
            equilibrium: p.equilibrium,
            aggregates: p.aggregates,
        });
    }

    let rho = regime.rho();
    let private_cost = f_b - s;
    let opts = SolverOptions::default();
    let (a, _, ac_evals) = solve_ac_raw(prim, rho, private_cost, &opts)?;
    let j = |t: f64| fe_residual_raw(prim, rho, f_b, rho * t + a, t);
    let brackets = scan_brackets(j, SCAN_LO, SCAN_HI, SCAN_STEP)?;
    let bracket: Bracket = *brackets.first().ok_or(Error::BracketFailure {
        what: "signal cutoff under transfer",
        lo: SCAN_LO,
        hi: SCAN_HI,
    })?;
    let scan_evals = ((SCAN_HI - SCAN_LO) / SCAN_STEP) as usize + 1;
    let equilibrium = finish_solution(
        prim,
        rho,
        private_cost,
        f_b,
        a,
        bracket,
        IterationCounts {
            ac: ac_evals,
            fe: scan_evals,
        },
        &opts,
    )?;
    let aggregates = aggregates_at(prim, rho, f_b, &equilibrium.cutoffs)?;
    Ok(PigouvianOutcome {
        s,
        equilibrium,
        aggregates,
    })
}

pub fn pigouvian_welfare(prim: &Primitives, regime: &Regime, s: f64) -> Result<f64> {
    Ok(pigouvian_equilibrium(prim, regime, s)?.aggregates.welfare)
}

/// Welfare over a grid of transfers, evaluated in parallel and returned in
/// grid order.
pub fn pigouvian_sweep(
    prim: &Primitives,
    regime: &Regime,
    s_grid: &[f64],
) -> Vec<(f64, Result<f64>)> {
    s_grid
        .par_iter()
        .map(|&s| (s, pigouvian_welfare(prim, regime, s)))
        .collect()
}
