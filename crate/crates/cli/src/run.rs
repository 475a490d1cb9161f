use gatekeep_core::economy::{expected_profit_given_signal, RHO_MIN};
use gatekeep_core::equilibrium::{melitz_limit_perfect, melitz_limit_zero, MelitzLimit};
use gatekeep_core::oracle::{
    estimate_aggregates, estimate_profit_given_signal, quadrature_reference, sample_log_population,
    QuadratureQuantity, Z_THRESHOLD,
};
use gatekeep_core::policy::pigouvian_sweep;
use gatekeep_core::welfare::{
    find_optimal_precision, solve_point_with, welfare_curve_with, CurveRow, SolvedPoint,
};
use gatekeep_core::Regime;

use crate::config::{Mode, RunConfig};
use crate::error::CliError;
use crate::svg::{line_chart, Series};
use crate::table::{num, ResultTable, SWEEP_COLUMNS};

/// Largest quadrature discrepancy accepted by `validate`.
pub const QUADRATURE_TOL: f64 = 1e-8;

/// Precisions checked by `validate` unless `run.rho` is set.
pub const VALIDATION_RHOS: [f64; 4] = [0.1, 0.5, 0.89, 0.97];

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub table: ResultTable,
    pub svg: Option<String>,
    /// One-line human summary.
    pub summary: String,
    /// Rows whose solve failed.
    pub failed: usize,
    /// Oracle checks outside tolerance.
    pub mismatches: Vec<String>,
}

impl RunOutput {
    fn new(table: ResultTable, summary: String) -> Self {
        Self {
            table,
            svg: None,
            summary,
            failed: 0,
            mismatches: Vec::new(),
        }
    }
}

fn sweep_row(rho: f64, outcome: &Result<SolvedPoint, gatekeep_core::Error>) -> Vec<String> {
    match outcome {
        Ok(p) => {
            let c = p.equilibrium.cutoffs;
            let a = &p.aggregates;
            let mut row: Vec<String> = [
                rho,
                c.t_star,
                c.p_star,
                c.a,
                a.p_theta.get(),
                a.p_phi.get(),
                a.s_term,
                a.b_term,
                a.pi_breve,
                a.r_bar,
                a.pi_bar,
                a.m_e,
                a.m,
                a.phi_tilde,
                a.welfare,
            ]
            .into_iter()
            .map(num)
            .collect();
            row.push("ok".into());
            row
        }
        Err(e) => {
            let mut row = vec![num(rho)];
            row.extend(std::iter::repeat_n(String::new(), SWEEP_COLUMNS.len() - 2));
            row.push(e.to_string());
            row
        }
    }
}

/// Runs the configured mode without touching the filesystem.
pub fn execute(config: &RunConfig) -> Result<RunOutput, CliError> {
    config.validate()?;
    match config.run.mode {
        Mode::Solve => solve(config),
        Mode::Sweep => sweep(config),
        Mode::Optimum => optimum(config),
        Mode::Pigouvian => pigouvian(config),
        Mode::Limits => limits(config),
        Mode::Validate => validate(config),
    }
}

fn required_rho(config: &RunConfig) -> Result<f64, CliError> {
    config
        .run
        .rho
        .ok_or_else(|| CliError::Validation(format!("mode {:?} needs run.rho", config.run.mode)))
}

fn solve(config: &RunConfig) -> Result<RunOutput, CliError> {
    let rho = required_rho(config)?;
    let regime = Regime::new(rho, config.schedule)?;
    let point = solve_point_with(&config.primitives, &regime, &config.tolerances)?;
    let mut table = ResultTable::new(SWEEP_COLUMNS);
    table.push(sweep_row(rho, &Ok(point)));
    let summary = format!(
        "rho = {rho}: t* = {:.6}, p* = {:.6}, W = {:.6}",
        point.equilibrium.cutoffs.t_star,
        point.equilibrium.cutoffs.p_star,
        point.aggregates.welfare
    );
    Ok(RunOutput::new(table, summary))
}

fn sweep_chart(rows: &[CurveRow]) -> String {
    let mut x = Vec::new();
    let (mut w, mut m, mut phi) = (Vec::new(), Vec::new(), Vec::new());
    for r in rows {
        if let Some(p) = r.point() {
            x.push(p.rho);
            w.push(p.welfare);
            m.push(p.m);
            phi.push(p.phi_tilde);
        }
    }
    line_chart(
        &x,
        &[
            Series {
                label: "welfare W",
                color: "black",
                dash: "",
                values: w,
            },
            Series {
                label: "firms M",
                color: "#1f4e9c",
                dash: "8 4",
                values: m,
            },
            Series {
                label: "productivity φ̃",
                color: "#c0392b",
                dash: "2 3",
                values: phi,
            },
        ],
    )
}

fn sweep(config: &RunConfig) -> Result<RunOutput, CliError> {
    let grid = config.run.grid.points();
    let rows = welfare_curve_with(
        &config.primitives,
        &config.schedule,
        &grid,
        &config.tolerances,
    )?;
    let mut table = ResultTable::new(SWEEP_COLUMNS);
    for r in &rows {
        table.push(sweep_row(r.rho, &r.outcome));
    }
    let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
    let best = rows
        .iter()
        .filter_map(|r| r.point())
        .max_by(|a, b| a.welfare.total_cmp(&b.welfare));
    let summary = match best {
        Some(p) => format!(
            "{} points, {failed} failed; welfare peaks at rho = {} (W = {:.6})",
            rows.len(),
            num(p.rho),
            p.welfare
        ),
        None => format!("{} points, all failed", rows.len()),
    };
    let mut out = RunOutput::new(table, summary);
    out.svg = Some(sweep_chart(&rows));
    out.failed = failed;
    Ok(out)
}

fn optimum(config: &RunConfig) -> Result<RunOutput, CliError> {
    let grid = config.run.grid.points();
    let opt = find_optimal_precision(&config.primitives, &config.schedule, &grid)?;
    let mut table = ResultTable::new(["rho_w", "W", "boundary"]);
    table.push(vec![
        num(opt.rho_w),
        num(opt.welfare),
        opt.boundary.to_string(),
    ]);
    let summary = format!(
        "rho^W = {:.6}{}",
        opt.rho_w,
        if opt.boundary { " (grid boundary)" } else { "" }
    );
    Ok(RunOutput::new(table, summary))
}

fn pigouvian(config: &RunConfig) -> Result<RunOutput, CliError> {
    let rho = required_rho(config)?;
    let regime = Regime::new(rho, config.schedule)?;
    let f_b = regime.activation_cost();
    let n = config.run.s_points;
    let grid: Vec<f64> = (0..n)
        .map(|i| -0.5 * f_b + f_b * i as f64 / (n - 1) as f64)
        .collect();
    let results = pigouvian_sweep(&config.primitives, &regime, &grid);
    let mut table = ResultTable::new(["s", "W", "status"]);
    let mut failed = 0;
    let mut best: Option<(f64, f64)> = None;
    for (s, r) in &results {
        match r {
            Ok(w) => {
                table.push(vec![num(*s), num(*w), "ok".into()]);
                if best.is_none_or(|(_, bw)| *w > bw) {
                    best = Some((*s, *w));
                }
            }
            Err(e) => {
                failed += 1;
                table.push(vec![num(*s), String::new(), e.to_string()]);
            }
        }
    }
    let summary = match best {
        Some((s, w)) => format!("welfare peaks at s = {} (W = {w:.6})", num(s)),
        None => "no transfer could be solved".into(),
    };
    let mut out = RunOutput::new(table, summary);
    out.failed = failed;
    Ok(out)
}

fn limits(config: &RunConfig) -> Result<RunOutput, CliError> {
    let prim = &config.primitives;
    let f_b_bar = match config.run.f_b_bar {
        Some(v) => v,
        None => config.schedule.cost_at(RHO_MIN)?,
    };
    let f_e0 = config.run.f_e0.unwrap_or(prim.f_n + f_b_bar);
    let zero = melitz_limit_zero(prim, f_e0)?;
    let perfect = melitz_limit_perfect(prim, f_b_bar)?;
    let mut table = ResultTable::new([
        "variant",
        "p_star",
        "effective_entry_cost",
        "effective_fixed_cost",
        "fe_residual",
        "zpc_residual",
    ]);
    let row = |name: &str, l: &MelitzLimit| {
        vec![
            name.to_owned(),
            num(l.p_star),
            num(l.effective_entry_cost),
            num(l.effective_fixed_cost),
            num(l.fe_residual),
            num(l.zpc_residual),
        ]
    };
    table.push(row("zero_precision", &zero));
    table.push(row("perfect_info", &perfect));
    let summary = format!("p*_0 = {:.6}, p*_1 = {:.6}", zero.p_star, perfect.p_star);
    Ok(RunOutput::new(table, summary))
}

fn validate(config: &RunConfig) -> Result<RunOutput, CliError> {
    let prim = &config.primitives;
    let rhos: Vec<f64> = match config.run.rho {
        Some(r) => vec![r],
        None => VALIDATION_RHOS.to_vec(),
    };
    let n = config.run.samples;
    let mut table = ResultTable::new([
        "rho",
        "quantity",
        "closed_form",
        "mc_mean",
        "mc_std_error",
        "n",
        "z_score",
        "quadrature",
        "quadrature_gap",
        "status",
    ]);
    let mut mismatches = Vec::new();
    let mut worst_z: f64 = 0.0;

    for (i, &rho) in rhos.iter().enumerate() {
        let regime = Regime::new(rho, config.schedule)?;
        let point = solve_point_with(prim, &regime, &config.tolerances)?;
        let cut = point.equilibrium.cutoffs;
        let (t_star, p_star) = (cut.t_star, cut.p_star);
        let seed = config.run.seed.wrapping_add(i as u64);

        let pop = sample_log_population(rho, n, seed)?;
        let report = estimate_aggregates(&pop, prim, &cut)?;
        mismatches.extend(report.issues.iter().map(|m| format!("rho {rho}: {m}")));

        let t = t_star + 0.5;
        let pi_tilde = expected_profit_given_signal(prim, rho, p_star, t)?;
        let mc = estimate_profit_given_signal(t, prim, rho, p_star, n, seed)?;
        let mut rows: Vec<(
            String,
            f64,
            gatekeep_core::oracle::McEstimate,
            QuadratureQuantity,
        )> = Vec::new();
        for row in &report.rows {
            let q = match row.name.as_str() {
                "P_theta" => QuadratureQuantity::UpperTail { c: t_star },
                "P_phi" => QuadratureQuantity::Bvn {
                    x: -p_star,
                    y: -t_star,
                    rho,
                },
                "S" => QuadratureQuantity::S {
                    rho,
                    p_star,
                    t_star,
                },
                _ => QuadratureQuantity::PiBreve {
                    rho,
                    p_star,
                    t_star,
                },
            };
            rows.push((row.name.clone(), row.closed_form, row.estimate, q));
        }
        rows.push((
            "pi_tilde".into(),
            pi_tilde,
            mc,
            QuadratureQuantity::PiTilde { rho, p_star, t },
        ));

        for (name, closed, est, q) in rows {
            let z = if est.std_error > 0.0 {
                (closed - est.mean) / est.std_error
            } else if closed == est.mean {
                0.0
            } else {
                f64::INFINITY
            };
            let reference = quadrature_reference(prim, q, 1e-12)?;
            let gap = (reference - closed).abs();
            let mut status = Vec::new();
            if !(z.abs() <= Z_THRESHOLD) {
                status.push(format!("|z| > {Z_THRESHOLD}"));
            }
            if !(gap <= QUADRATURE_TOL) {
                status.push(format!("quadrature gap > {QUADRATURE_TOL:e}"));
            }
            worst_z = worst_z.max(z.abs());
            let status = if status.is_empty() {
                "ok".to_owned()
            } else {
                let s = status.join("; ");
                mismatches.push(format!("rho {rho} {name}: {s}"));
                s
            };
            table.push(vec![
                num(rho),
                name,
                num(closed),
                num(est.mean),
                num(est.std_error),
                est.n.to_string(),
                num(z),
                num(reference),
                num(gap),
                status,
            ]);
        }
    }
    let summary = format!(
        "{} checks at {} precision(s), max |z| = {worst_z:.2}, {} mismatch(es)",
        table.rows().len(),
        rhos.len(),
        mismatches.len()
    );
    let mut out = RunOutput::new(table, summary);
    out.mismatches = mismatches;
    Ok(out)
}
