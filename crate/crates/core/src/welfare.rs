//! Steady-state aggregates, welfare and precision sweeps.
//!
//! Welfare factors into a selection term `S = E[φ^{σ−1} 1{θ≥θ*, φ≥φ*}]` and
//! the labor absorbed per experimenter `B`:
//! `W^{σ−1} = ((σ−1)/σ)^{σ−1} (L/δ) S/B`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::economy::{expected_joint_profit, CostSchedule, LogCutoffs, Primitives, Regime};
use crate::equilibrium::{solve_equilibrium_with, EquilibriumSolution, SolverOptions};
use crate::error::{Error, Result};
use crate::roots::golden_max;
use crate::stats::{bvn_cdf, std_normal_cdf, tilted_upper_tail2, Probability};

/// Relative tolerance for the welfare identities.
pub const IDENTITY_TOL: f64 = 1e-8;

/// Welfare computed through three algebraically equivalent routes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelfareForms {
    /// `((σ−1)/σ) M^{1/(σ−1)} φ̃`.
    pub variety_productivity: f64,
    /// `[((σ−1)/σ)^{σ−1} (M_e/δ) S]^{1/(σ−1)}`.
    pub master: f64,
    /// `[((σ−1)/σ)^{σ−1} (L/δ) S/B]^{1/(σ−1)}`.
    pub selection_burden: f64,
}

impl WelfareForms {
    pub fn max_relative_gap(&self) -> f64 {
        let v = [
            self.variety_productivity,
            self.master,
            self.selection_burden,
        ];
        let hi = v.iter().cloned().fold(f64::MIN, f64::max);
        let lo = v.iter().cloned().fold(f64::MAX, f64::min);
        (hi - lo) / hi.abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    /// `Pr(θ ≥ θ*)`.
    pub p_theta: Probability,
    /// `Pr(φ ≥ φ*, θ ≥ θ*)`.
    pub p_phi: Probability,
    pub s_term: f64,
    /// Labor per experimenter.
    pub b_term: f64,
    pub pi_breve: f64,
    pub r_bar: f64,
    pub pi_bar: f64,
    pub m_e: f64,
    pub m: f64,
    pub phi_tilde: f64,
    /// Welfare, from the selection/burden form.
    pub welfare: f64,
    pub welfare_forms: WelfareForms,
}

impl Aggregates {
    /// `(M(r̄ − π̄) + M_e f_n + P_θ M_e f_b − L) / L`.
    pub fn labor_clearing_gap(&self, prim: &Primitives, f_b: f64) -> f64 {
        let used = self.m * (self.r_bar - self.pi_bar)
            + self.m_e * prim.f_n
            + self.p_theta.get() * self.m_e * f_b;
        (used - prim.labor) / prim.labor
    }

    /// `π̆ − δ(P_θ f_b + f_n)`; zero when free entry holds.
    pub fn free_entry_gap(&self, prim: &Primitives, f_b: f64) -> f64 {
        self.pi_breve - prim.delta * (self.p_theta.get() * f_b + prim.f_n)
    }
}

/// Aggregates at arbitrary cutoffs with activation cost `f_b` counted as a
/// real resource. Used for both market and policy allocations.
pub(crate) fn aggregates_at(
    prim: &Primitives,
    rho: f64,
    f_b: f64,
    cutoffs: &LogCutoffs,
) -> Result<Aggregates> {
    let LogCutoffs { t_star, p_star, .. } = *cutoffs;
    let k = prim.k();
    let sigma = prim.sigma;

    let p_theta = std_normal_cdf(-t_star);
    let p_phi = bvn_cdf(-p_star, -t_star, rho)?;
    if !(p_phi > 0.0) {
        return Err(Error::Domain(format!(
            "no operating firms at cutoffs t* = {t_star}, p* = {p_star}"
        )));
    }
    let s_term = tilted_upper_tail2(k, p_star, t_star, rho)?;
    let pi_breve = expected_joint_profit(prim, rho, cutoffs)?;

    let mean_weight = s_term / p_phi; // E[φ^{σ−1} | operating]
    let r_bar = sigma * prim.f * (-k * p_star).exp() * mean_weight;
    let pi_bar = r_bar / sigma - prim.f;
    let b_term = prim.f_n + p_theta * f_b + p_phi / prim.delta * (r_bar - pi_bar);
    let m_e = prim.labor / b_term;
    let m = p_phi * m_e / prim.delta;
    let phi_tilde = mean_weight.powf(1.0 / k);

    let markdown = k / sigma;
    let forms = WelfareForms {
        variety_productivity: markdown * m.powf(1.0 / k) * phi_tilde,
        master: (markdown.powf(k) * m_e / prim.delta * s_term).powf(1.0 / k),
        selection_burden: (markdown.powf(k) * prim.labor / prim.delta * s_term / b_term)
            .powf(1.0 / k),
    };
    let gap = forms.max_relative_gap();
    if !(gap <= IDENTITY_TOL) {
        return Err(Error::InconsistentEquilibrium { gap });
    }

    Ok(Aggregates {
        p_theta: Probability::saturating(p_theta),
        p_phi: Probability::saturating(p_phi),
        s_term,
        b_term,
        pi_breve,
        r_bar,
        pi_bar,
        m_e,
        m,
        phi_tilde,
        welfare: forms.selection_burden,
        welfare_forms: forms,
    })
}

pub fn compute_aggregates(
    prim: &Primitives,
    regime: &Regime,
    eq: &EquilibriumSolution,
) -> Result<Aggregates> {
    aggregates_at(prim, regime.rho(), regime.activation_cost(), &eq.cutoffs)
}

/// A solved equilibrium with its aggregates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolvedPoint {
    pub rho: f64,
    pub activation_cost: f64,
    pub equilibrium: EquilibriumSolution,
    pub aggregates: Aggregates,
}

pub fn solve_point(prim: &Primitives, regime: &Regime) -> Result<SolvedPoint> {
    solve_point_with(prim, regime, &SolverOptions::default())
}

pub fn solve_point_with(
    prim: &Primitives,
    regime: &Regime,
    opts: &SolverOptions,
) -> Result<SolvedPoint> {
    let equilibrium = solve_equilibrium_with(prim, regime, opts)?;
    let aggregates = compute_aggregates(prim, regime, &equilibrium)?;
    Ok(SolvedPoint {
        rho: regime.rho(),
        activation_cost: regime.activation_cost(),
        equilibrium,
        aggregates,
    })
}

/// Equilibrium welfare of a regime.
pub fn welfare_at(prim: &Primitives, regime: &Regime) -> Result<f64> {
    Ok(solve_point(prim, regime)?.aggregates.welfare)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelfareCurvePoint {
    pub rho: f64,
    pub welfare: f64,
    pub m: f64,
    pub phi_tilde: f64,
    pub t_star: f64,
    pub p_star: f64,
    pub s_term: f64,
    pub b_term: f64,
}

impl From<&SolvedPoint> for WelfareCurvePoint {
    fn from(p: &SolvedPoint) -> Self {
        Self {
            rho: p.rho,
            welfare: p.aggregates.welfare,
            m: p.aggregates.m,
            phi_tilde: p.aggregates.phi_tilde,
            t_star: p.equilibrium.cutoffs.t_star,
            p_star: p.equilibrium.cutoffs.p_star,
            s_term: p.aggregates.s_term,
            b_term: p.aggregates.b_term,
        }
    }
}

/// One grid point of a sweep. Failed solves are kept, never dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub rho: f64,
    pub outcome: Result<SolvedPoint>,
}

impl CurveRow {
    pub fn point(&self) -> Option<WelfareCurvePoint> {
        self.outcome.as_ref().ok().map(WelfareCurvePoint::from)
    }
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Domain("empty rho grid".into()));
    }
    if grid.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
        return Err(Error::Domain("rho grid must lie inside (0, 1)".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("rho grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Uniform grid `lo, lo + step, …` up to `hi` inclusive.
pub fn uniform_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && hi >= lo) {
        return Err(Error::Domain(format!("bad grid {lo}:{hi}:{step}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    // Snap to 12 decimals so 0.05 + 1 * 0.01 prints as 0.06.
    Ok((0..=n)
        .map(|i| ((lo + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

/// Solves the economy at every grid point, in parallel. Row order follows
/// the grid regardless of completion order.
pub fn welfare_curve(
    prim: &Primitives,
    schedule: &CostSchedule,
    rho_grid: &[f64],
) -> Result<Vec<CurveRow>> {
    welfare_curve_with(prim, schedule, rho_grid, &SolverOptions::default())
}

pub fn welfare_curve_with(
    prim: &Primitives,
    schedule: &CostSchedule,
    rho_grid: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<CurveRow>> {
    validate_grid(rho_grid)?;
    schedule.validate()?;
    Ok(rho_grid
        .par_iter()
        .map(|&rho| CurveRow {
            rho,
            outcome: Regime::new(rho, *schedule).and_then(|r| solve_point_with(prim, &r, opts)),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogDerivatives {
    pub dlog_w: f64,
    pub dlog_s: f64,
    pub dlog_b: f64,
}

impl LogDerivatives {
    /// `dlogW − (dlogS − dlogB)/(σ−1)`, relative to the largest term.
    pub fn identity_gap(&self, sigma: f64) -> f64 {
        let rhs = (self.dlog_s - self.dlog_b) / (sigma - 1.0);
        let scale = self
            .dlog_w
            .abs()
            .max(self.dlog_s.abs())
            .max(self.dlog_b.abs());
        (self.dlog_w - rhs).abs() / scale
    }
}

/// Central-difference log-derivatives of `W`, `S` and `B` in `ρ`.
pub fn log_welfare_derivative(
    prim: &Primitives,
    regime: &Regime,
    h: f64,
) -> Result<LogDerivatives> {
    let rho = regime.rho();
    if !(h > 0.0 && rho - h > 0.0 && rho + h < 1.0) {
        return Err(Error::Domain(format!(
            "rho ± h = {rho} ± {h} leaves (0, 1)"
        )));
    }
    let schedule = regime.schedule();
    if let Some(&kink) = schedule.kinks().iter().find(|&&k| (k - rho).abs() <= h) {
        return Err(Error::Kink { rho, h, kink });
    }
    let up = solve_point(prim, &Regime::new(rho + h, schedule)?)?.aggregates;
    let down = solve_point(prim, &Regime::new(rho - h, schedule)?)?.aggregates;
    let d = |hi: f64, lo: f64| (hi.ln() - lo.ln()) / (2.0 * h);
    Ok(LogDerivatives {
        dlog_w: d(up.welfare, down.welfare),
        dlog_s: d(up.s_term, down.s_term),
        dlog_b: d(up.b_term, down.b_term),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalPrecision {
    pub rho_w: f64,
    pub welfare: f64,
    /// The coarse argmax sat on the edge of the grid; `rho_w` is that edge.
    pub boundary: bool,
}

/// Golden-section stopping width for the refined optimum.
pub const OPTIMUM_XTOL: f64 = 1e-6;

/// Coarse grid argmax of welfare, refined by golden-section search between
/// the neighbouring grid points.
pub fn find_optimal_precision(
    prim: &Primitives,
    schedule: &CostSchedule,
    grid: &[f64],
) -> Result<OptimalPrecision> {
    let rows = welfare_curve(prim, schedule, grid)?;
    let (best, welfare) = rows
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.outcome.as_ref().ok().map(|p| (i, p.aggregates.welfare)))
        .fold(None, |acc: Option<(usize, f64)>, (i, w)| match acc {
            Some((_, bw)) if bw >= w => acc,
            _ => Some((i, w)),
        })
        .ok_or_else(|| Error::Domain("no grid point could be solved".into()))?;

    if best == 0 || best == grid.len() - 1 {
        return Ok(OptimalPrecision {
            rho_w: grid[best],
            welfare,
            boundary: true,
        });
    }
    let (rho_w, w) = golden_max(
        |rho| welfare_at(prim, &Regime::new(rho, *schedule)?),
        grid[best - 1],
        grid[best + 1],
        OPTIMUM_XTOL,
    )?;
    // Golden search may land on a slightly lower value than the grid point
    // when the peak is flat within rounding.
    if w >= welfare {
        Ok(OptimalPrecision {
            rho_w,
            welfare: w,
            boundary: false,
        })
    } else {
        Ok(OptimalPrecision {
            rho_w: grid[best],
            welfare,
            boundary: false,
        })
    }
}

/// Witness that welfare can fall with precision under bounded costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeclineCertificate {
    pub schedule: CostSchedule,
    pub w_low: f64,
    pub w_high: f64,
    /// `(f_b, W(ρ_H; f_b))` along the doubling path.
    pub path: Vec<(f64, f64)>,
}

const DOUBLING_CAP: usize = 60;

/// Doubles a constant activation cost at `rho_h` until welfare there drops
/// below welfare at `rho_l` with cost `f_low`, then returns the piecewise
/// linear schedule joining the two.
pub fn bounded_decline_certificate(
    prim: &Primitives,
    rho_l: f64,
    rho_h: f64,
    f_low: f64,
) -> Result<DeclineCertificate> {
    if !(0.0 < rho_l && rho_l < rho_h && rho_h < 1.0) {
        return Err(Error::Domain("need 0 < rho_l < rho_h < 1".into()));
    }
    if !(f_low > 0.0 && f_low.is_finite()) {
        return Err(Error::Domain("f_low must be positive".into()));
    }
    let w_target = welfare_at(
        prim,
        &Regime::new(rho_l, CostSchedule::Constant { f_b: f_low })?,
    )?;

    let mut path = Vec::new();
    let mut f_high = f_low;
    for _ in 0..DOUBLING_CAP {
        f_high *= 2.0;
        let w = welfare_at(
            prim,
            &Regime::new(rho_h, CostSchedule::Constant { f_b: f_high })?,
        )?;
        path.push((f_high, w));
        if w < w_target {
            let schedule = CostSchedule::PiecewiseLinear {
                rho_l,
                rho_h,
                f_low,
                f_high,
            };
            let w_low = welfare_at(prim, &Regime::new(rho_l, schedule)?)?;
            let w_high = welfare_at(prim, &Regime::new(rho_h, schedule)?)?;
            return Ok(DeclineCertificate {
                schedule,
                w_low,
                w_high,
                path,
            });
        }
    }
    Err(Error::IterationCap {
        what: "bounded-decline doubling",
        cap: DOUBLING_CAP,
    })
}
