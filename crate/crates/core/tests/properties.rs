use proptest::prelude::*;
use proptest::test_runner::RngSeed;

use qcournot::bifurcation::{find_thresholds, sweep};
use qcournot::equilibria::{
    asymmetry_bound, asymmetry_identity, best_response, best_response_residual, br_conjugate,
    enumerate_equilibria, pareto_optimum, symmetric_closed_form,
};
use qcournot::realroots::{real_roots, sturm_count, Polynomial, RES_TOL};
use qcournot::{EntangledGame, ModelParams, QuantityPair, StrategyPair};

fn params() -> ModelParams {
    ModelParams::new(3.0, 5.0, 10.0).unwrap()
}

fn game(gamma: f64) -> EntangledGame {
    EntangledGame::new(params(), gamma).unwrap()
}

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 256,
        rng_seed: RngSeed::Fixed(0x5eed),
        ..ProptestConfig::default()
    }
}

/// Distinct sorted values with pairwise gaps of at least `gap`.
fn separated(values: Vec<f64>, gap: f64) -> Option<Vec<f64>> {
    let mut v = values;
    v.sort_by(f64::total_cmp);
    v.windows(2).all(|w| w[1] - w[0] >= gap).then_some(v)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn profits_do_not_depend_on_b(
        a in 0.5..5.0f64, d in 0.0..20.0f64, gamma in 0.0..1.0f64,
        b1 in 0.1..10.0f64, b2 in 0.1..10.0f64,
        x1 in -1.0..5.0f64, x2 in -1.0..5.0f64,
    ) {
        let u = |b| EntangledGame::new(ModelParams::new(a, b, d).unwrap(), gamma)
            .unwrap()
            .profit_quantum(StrategyPair::new(x1, x2));
        let (p, q) = (u(b1), u(b2));
        prop_assert!((p.u1 - q.u1).abs() <= 1e-9 && (p.u2 - q.u2).abs() <= 1e-9);
    }

    #[test]
    fn map_round_trip_is_exact_at_moderate_gamma(
        gamma in 0.0..2.0f64, x1 in -5.0..5.0f64, x2 in -5.0..5.0f64,
    ) {
        let g = game(gamma);
        let x = StrategyPair::new(x1, x2);
        let back = g.quantity_map_inverse(g.quantity_map(x));
        let scale = x1.abs().max(x2.abs());
        prop_assert!((back.x1 - x1).abs() <= 1e-12 * scale);
        prop_assert!((back.x2 - x2).abs() <= 1e-12 * scale);
    }

    // The map has condition number e^{2 gamma}; the error is measured
    // against that.
    #[test]
    fn map_round_trip_is_backward_stable(
        gamma in 0.0..=20.0f64, x1 in -5.0..5.0f64, x2 in -5.0..5.0f64,
    ) {
        let g = game(gamma);
        let x = StrategyPair::new(x1, x2);
        let back = g.quantity_map_inverse(g.quantity_map(x));
        let scale = x1.abs().max(x2.abs()) * (2.0 * gamma).exp();
        prop_assert!((back.x1 - x1).abs() <= 1e-14 * scale);
        prop_assert!((back.x2 - x2).abs() <= 1e-14 * scale);
    }

    #[test]
    fn classical_reduction(x1 in -5.0..5.0f64, x2 in -5.0..5.0f64) {
        let g = game(0.0);
        let x = StrategyPair::new(x1, x2);
        prop_assert_eq!(g.quantity_map(x), QuantityPair::new(x1, x2));
        prop_assert_eq!(g.profit_quantum(x), params().profit_classical(QuantityPair::new(x1, x2)));
    }

    #[test]
    fn own_payoff_is_concave(
        gamma in 0.0..3.0f64, x1 in -2.0..6.0f64, x2 in -2.0..6.0f64,
    ) {
        let g = game(gamma);
        let h = 1e-3;
        let u = |x1: f64| g.profit_quantum(StrategyPair::new(x1, x2)).u1;
        let second = (u(x1 + h) - 2.0 * u(x1) + u(x1 - h)) / (h * h);
        prop_assert!(second <= 1e-9, "second difference {second}");
    }

    // Clustered roots move by ~1e-8 when the product is rounded to f64
    // coefficients, so planted roots keep a minimum gap.
    #[test]
    fn planted_roots_are_recovered(
        real in prop::collection::vec(-4.0..4.0f64, 0..=7),
        complex in prop::collection::vec((-3.0..3.0f64, 0.1..2.0f64), 0..=2),
        lead in prop_oneof![-3.0..-0.2f64, 0.2..3.0f64],
    ) {
        prop_assume!(real.len() + complex.len() <= 9);
        let Some(planted) = separated(real, 0.25) else { return Ok(()); };
        let mut p = Polynomial::from_roots(&planted).unwrap().scale(lead);
        for (re, im) in complex {
            let quad = Polynomial::new(vec![re * re + im * im, -2.0 * re, 1.0]).unwrap();
            p = p.mul(&quad).unwrap();
        }
        let found = real_roots(&p).unwrap();
        prop_assert_eq!(found.len(), planted.len(), "found {:?}, planted {:?}", found.roots, planted);
        for (r, t) in found.roots.iter().zip(&planted) {
            prop_assert!((r - t).abs() <= 1e-9, "root {r} vs planted {t}");
        }
    }

    #[test]
    fn root_count_matches_sturm_count(coeffs in prop::collection::vec(-5.0..5.0f64, 2..=10)) {
        let p = Polynomial::new(coeffs).unwrap();
        prop_assume!(p.degree().unwrap_or(0) >= 1 && p.leading().abs() > 1e-3);
        let bound = p.cauchy_bound().unwrap();
        let roots = real_roots(&p).unwrap();
        prop_assert_eq!(roots.len(), sturm_count(&p, -bound, bound).unwrap());
        for r in &roots.roots {
            prop_assert!(p.eval(*r).abs() <= RES_TOL * p.residual_scale(*r));
        }
    }

    #[test]
    fn foc_forms_define_the_same_locus(
        a in 0.5..5.0f64, gamma in 0.0..2.0f64, offset in -3.0..3.0f64,
    ) {
        let g = EntangledGame::new(ModelParams::new(a, 1.0, 1.0).unwrap(), gamma).unwrap();
        let q_i = a + offset;
        let q_j = best_response(&g, q_i);
        prop_assert!(best_response_residual(&g, QuantityPair::new(q_j, q_i), 1).abs() <= 1e-8);
        let x = g.quantity_map_inverse(QuantityPair::new(q_j, q_i));
        prop_assert!(g.strategy_foc(x, 1).abs() <= 1e-8);
    }

    #[test]
    fn equilibria_are_mutual_best_responses(a in 0.5..5.0f64, gamma in 0.0..1.5f64) {
        let g = EntangledGame::new(ModelParams::new(a, 5.0, 10.0).unwrap(), gamma).unwrap();
        let eqs = enumerate_equilibria(&g).unwrap();
        prop_assert_eq!(eqs.iter().filter(|e| e.symmetric).count(), 1);
        prop_assert_eq!((eqs.len() - 1) % 2, 0);
        for eq in &eqs {
            let q = eq.quantities;
            let tol = if eq.tangency { 1e-6 } else { 1e-8 };
            prop_assert!((best_response(&g, q.q2) - q.q1).abs() <= tol);
            prop_assert!((best_response(&g, q.q1) - q.q2).abs() <= tol);
            prop_assert!((br_conjugate(&g, q.q1) - q.q2).abs() <= tol);
        }
    }

    #[test]
    fn closed_form_matches_the_symmetric_root(a in 0.5..5.0f64, gamma in 0.0..5.0f64) {
        let g = EntangledGame::new(ModelParams::new(a, 5.0, 10.0).unwrap(), gamma).unwrap();
        let sym = symmetric_closed_form(&g);
        let eq = enumerate_equilibria(&g).unwrap().into_iter().find(|e| e.symmetric).unwrap();
        prop_assert!((sym.q_star_gamma - eq.quantities.q1).abs() <= 1e-8 * (1.0 + a));
    }
}

#[test]
fn equilibrium_set_is_swap_symmetric() {
    for gamma in (0..=10).map(|i| i as f64 / 10.0) {
        let eqs = enumerate_equilibria(&game(gamma)).unwrap();
        for eq in &eqs {
            let m = eq.quantities.swapped();
            assert!(
                eqs.iter().any(|o| (o.quantities.q1 - m.q1).abs() <= 1e-8 && (o.quantities.q2 - m.q2).abs() <= 1e-8),
                "no mirror for {:?} at gamma {gamma}",
                eq.quantities
            );
        }
    }
}

#[test]
fn asymmetry_identity_holds_on_every_asymmetric_equilibrium() {
    let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    let mut checked = 0;
    for gamma in grid {
        let g = game(gamma);
        for eq in enumerate_equilibria(&g).unwrap().iter().filter(|e| !e.symmetric) {
            let r = asymmetry_identity(&g, eq).unwrap();
            assert!(r <= 1e-8, "identity residual {r} at gamma {gamma}");
            let dev = (eq.quantities.q1 - 3.0).abs();
            assert!(dev <= asymmetry_bound(&g) + 1e-8, "deviation {dev} at gamma {gamma}");
            checked += 1;
        }
    }
    assert!(checked > 50);
}

#[test]
fn equilibria_are_local_maxima_of_own_payoff() {
    let h = 1e-3;
    for gamma in (0..=10).map(|i| i as f64 / 10.0) {
        let g = game(gamma);
        for eq in enumerate_equilibria(&g).unwrap() {
            let x = eq.strategies;
            let u1 = |t: f64| g.profit_quantum(StrategyPair::new(t, x.x2)).u1;
            let u2 = |t: f64| g.profit_quantum(StrategyPair::new(x.x1, t)).u2;
            let d1 = (u1(x.x1 + h) - 2.0 * u1(x.x1) + u1(x.x1 - h)) / (h * h);
            let d2 = (u2(x.x2 + h) - 2.0 * u2(x.x2) + u2(x.x2 - h)) / (h * h);
            assert!(d1 <= 1e-6 && d2 <= 1e-6, "{d1}, {d2} at gamma {gamma}");
        }
    }
}

#[test]
fn symmetric_quantity_falls_to_the_optimum() {
    let q_star = pareto_optimum(&params()).q_star;
    let path: Vec<f64> = (0..200)
        .map(|i| symmetric_closed_form(&game(10.0 * i as f64 / 199.0)).q_star_gamma)
        .collect();
    assert!(path.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    assert!((path[199] - q_star).abs() < 1e-6);
}

#[test]
fn symmetric_profit_rises_to_the_optimum() {
    let p = params();
    let cap = 1.75 + p.d() + 1e-9;
    let profits: Vec<f64> = (0..=500)
        .map(|i| {
            let eqs = enumerate_equilibria(&game(5.0 * i as f64 / 500.0)).unwrap();
            eqs.iter().find(|e| e.symmetric).unwrap().profits.u1
        })
        .collect();
    assert!(profits.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    assert!(profits.iter().all(|&u| u <= cap));
}

#[test]
fn sweep_counts_are_one_symmetric_plus_pairs() {
    for rec in sweep(&params(), 0.0, 1.0, 201).unwrap() {
        assert_eq!(rec.count, rec.equilibria.len());
        assert_eq!(rec.equilibria.iter().filter(|e| e.symmetric).count(), 1, "gamma {}", rec.gamma);
        assert_eq!((rec.count - 1) % 2, 0, "gamma {}", rec.gamma);
        assert!(rec.equilibria.windows(2).all(|w| w[0].quantities.q1 <= w[1].quantities.q1));
    }
}

#[test]
fn counts_change_across_gamma2() {
    let t = find_thresholds(&params()).unwrap();
    assert_eq!(enumerate_equilibria(&game(t.gamma2 + 1e-3)).unwrap().len(), 1);
    assert!(enumerate_equilibria(&game(t.gamma2 - 1e-3)).unwrap().len() > 1);
    assert!(t.gamma1 < t.gamma2);
}
