use gatekeep_core::equilibrium::{melitz_limit_perfect, melitz_limit_zero, solve_ac_intercept};
use gatekeep_core::oracle::{quadrature_reference, QuadratureQuantity};
use gatekeep_core::welfare::solve_point;
use gatekeep_core::{solve_equilibrium, CostSchedule, Primitives, Regime};

fn baseline_regime(rho: f64) -> Regime {
    Regime::new(rho, CostSchedule::baseline()).unwrap()
}

// Frozen from the first verified run; cross-checked below by quadrature.
const T_STAR: f64 = 2.859_757_747_929_911;
const P_STAR: f64 = 1.128_630_593_881_847_7;
const A: f64 = -1.416_553_801_775_773;
const W: f64 = 5.152_366_984_083_27;
const M: f64 = 0.542_125_001_735_767_9;
const PHI_TILDE: f64 = 19.008_040_461_467_363;

#[test]
fn golden_point_at_rho_089() {
    let prim = Primitives::baseline();
    let regime = baseline_regime(0.89);
    let p = solve_point(&prim, &regime).unwrap();
    let c = p.equilibrium.cutoffs;
    assert!((c.t_star - T_STAR).abs() < 1e-9);
    assert!((c.p_star - P_STAR).abs() < 1e-9);
    assert!((c.a - A).abs() < 1e-9);
    assert!((solve_ac_intercept(&prim, &regime).unwrap() - A).abs() < 1e-11);
    assert!((p.aggregates.welfare - W).abs() < 1e-8 * W);
    assert!((p.aggregates.m - M).abs() < 1e-8 * M);
    assert!((p.aggregates.phi_tilde - PHI_TILDE).abs() < 1e-8 * PHI_TILDE);
}

/// Both equilibrium conditions hold when every term is recomputed by direct
/// integration instead of the closed forms.
#[test]
fn golden_point_satisfies_conditions_by_quadrature() {
    let prim = Primitives::baseline();
    let rho = 0.89;
    let f_b = baseline_regime(rho).activation_cost();
    let q = |quantity| quadrature_reference(&prim, quantity, 1e-12).unwrap();

    let pi_marginal = q(QuadratureQuantity::PiTilde {
        rho,
        p_star: P_STAR,
        t: T_STAR,
    });
    assert!((pi_marginal - prim.delta * f_b).abs() < 1e-9);

    let pi_breve = q(QuadratureQuantity::PiBreve {
        rho,
        p_star: P_STAR,
        t_star: T_STAR,
    });
    let p_theta = q(QuadratureQuantity::UpperTail { c: T_STAR });
    assert!((pi_breve - prim.delta * (p_theta * f_b + prim.f_n)).abs() < 1e-9);
}

#[test]
fn solver_is_deterministic() {
    let prim = Primitives::baseline();
    for rho in [0.05, 0.3, 0.89, 0.98] {
        let a = solve_equilibrium(&prim, &baseline_regime(rho)).unwrap();
        let b = solve_equilibrium(&prim, &baseline_regime(rho)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cutoffs.t_star.to_bits(), b.cutoffs.t_star.to_bits());
    }
}

#[test]
fn golden_limits() {
    let prim = Primitives::baseline();
    let zero = melitz_limit_zero(&prim, prim.f_n + 3.0).unwrap();
    let perfect = melitz_limit_perfect(&prim, 3.0).unwrap();
    assert!((zero.p_star - -0.560_226_552_317_962_3).abs() < 1e-9);
    assert!((perfect.p_star - 2.782_743_118_822_57).abs() < 1e-9);
}

#[test]
fn huge_entry_costs_solve_to_relative_precision() {
    let regime = baseline_regime(0.5);
    let mut last = f64::INFINITY;
    for f_n in [1e3, 1e5, 1e7, 1e9] {
        let prim = Primitives::new(2.0, 0.15, f_n, 0.1, 1.0).unwrap();
        let sol = solve_equilibrium(&prim, &regime).unwrap();
        let scale = prim.delta * (regime.activation_cost() + f_n) / prim.f;
        assert!(sol.fe_residual.abs() <= 1e-13 * scale, "f_n = {f_n}");
        // Costlier entry lowers both cutoffs; the intercept is unaffected.
        assert!(sol.cutoffs.t_star < last);
        assert!((sol.cutoffs.a - solve_ac_intercept(&prim, &regime).unwrap()).abs() < 1e-12);
        last = sol.cutoffs.t_star;
    }
    let prim = Primitives::new(2.0, 0.15, 1e12, 0.1, 1.0).unwrap();
    assert!(matches!(
        solve_equilibrium(&prim, &regime),
        Err(gatekeep_core::Error::BracketFailure { .. })
    ));
}
