mod common;

use common::{brute_force_regime, max_residual, model};
use moneymult::equilibrium::classify;
use moneymult::series::backout_delta;
use moneymult::{BankCostParams, Error, Model};
use proptest::prelude::*;

fn rescaled(m: &Model, t: f64) -> Model {
    let c = &m.costs;
    let a = c.deposit_curvature();
    let mut out = *m;
    out.costs = BankCostParams::new(
        c.deposit_scale() * t.powf(1.0 - a),
        a,
        c.enforcement_scale() / t,
        c.entry_cost() * t,
    )
    .unwrap();
    out
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn payment_inverse_round_trips(frac in 1e-6f64..1.0) {
        let p = model().prefs;
        let q = frac * p.q_star();
        let back = p.payment_inverse(p.payment(q).unwrap()).unwrap();
        prop_assert!(close(back, q, 1e-12), "{back} vs {q}");
    }

    #[test]
    fn quantity_at_rate_prices_the_premium(frac in 1e-4f64..0.999) {
        let p = model().prefs;
        let i = frac * p.max_premium();
        let q = p.quantity_at_rate(i).unwrap();
        prop_assert!(close(p.liquidity_premium(q).unwrap(), i, 1e-10));
    }

    #[test]
    fn liquidity_inverse_falls_with_rate(a in 0.0f64..0.5, b in 0.0f64..0.5) {
        let p = model().prefs;
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi > lo);
        prop_assert!(p.liquidity_inverse(hi).unwrap() <= p.liquidity_inverse(lo).unwrap());
    }

    #[test]
    fn cost_derivative_inverses_round_trip(x in 1e-4f64..50.0) {
        let c = model().costs;
        let g = c.gamma_prime_inverse(c.gamma_prime(x).unwrap()).unwrap();
        let h = c.eta_prime_inverse(c.eta_prime(x).unwrap()).unwrap();
        prop_assert!(close(g, x, 1e-10) && close(h, x, 1e-12));
    }

    #[test]
    fn random_policies_clear_markets(
        i in 0.0f64..0.16,
        i_r in 0.0f64..0.08,
        chi in 0.02f64..0.9,
        db in 0.0f64..1.0,
    ) {
        let m = model();
        let eq = m.solve(&m.policy(i, i_r, chi, db)).unwrap();
        prop_assert!(max_residual(&eq) <= 1e-10);
        prop_assert!(m.aggregates(&eq).zeta >= 1.0);
        let w = m.welfare(&eq);
        prop_assert!(w.jb[2] >= w.jb[1] - 1e-15 && w.jb[1] >= w.jb[0] - 1e-15);
    }

    #[test]
    fn classify_matches_brute_force(i in 0.0f64..0.16, i_r in 0.0f64..0.08, chi in 0.05f64..0.5) {
        let m = model();
        let got = classify(&m.costs, &m.policy(i, i_r, chi, 0.0)).unwrap();
        prop_assert_eq!(got, brute_force_regime(i, i_r, chi));
    }

    /// Scaling bank size by `t` with costs adjusted to keep marginal costs
    /// and entry profit fixed leaves every aggregate unchanged.
    #[test]
    fn aggregates_invariant_to_bank_size(
        t in 0.3f64..3.0,
        i in 0.0f64..0.16,
        i_r in 0.0f64..0.08,
        db in 0.0f64..0.5,
    ) {
        let m = model();
        let s = rescaled(&m, t);
        let e1 = m.solve(&m.policy(i, i_r, 0.1, db)).unwrap();
        let e2 = s.solve(&s.policy(i, i_r, 0.1, db)).unwrap();
        prop_assert_eq!(e1.regime, e2.regime);
        let (a, b) = (m.aggregates(&e1), s.aggregates(&e2));
        for (x, y) in [
            (a.zeta, b.zeta),
            (a.c_over_y, b.c_over_y),
            (a.r_over_y, b.r_over_y),
            (a.pi_over_y, b.pi_over_y),
            (a.uc_over_y, b.uc_over_y),
            (a.markup, b.markup),
            (a.excess, b.excess),
        ] {
            prop_assert!(close(x, y, 1e-9), "{x} vs {y}");
        }
        if e1.bank.n > 0.0 {
            prop_assert!(close(e2.bank.r_tilde, t * e1.bank.r_tilde, 1e-9));
        }
    }

    #[test]
    fn backout_round_trips(i in 0.0f64..0.16, i_r in 0.0f64..0.08, frac in 0.0f64..1.0) {
        let m = model();
        let p = m.policy(i, i_r, 0.1, 0.0);
        let cap = m.solve(&p).unwrap().delta_hat;
        let sup = m.aggregates(&m.solve(&m.policy(i, i_r, 0.1, cap)).unwrap()).uc_over_y;
        let target = frac * sup;
        let d = backout_delta(&m, &p, target).unwrap();
        let got = m.aggregates(&m.solve(&m.policy(i, i_r, 0.1, d)).unwrap()).uc_over_y;
        prop_assert!((got - target).abs() <= 1e-9, "{got} vs {target}");
    }

    #[test]
    fn backout_is_monotone(i in 0.0f64..0.16, a in 0.0f64..0.04, b in 0.0f64..0.04) {
        let m = model();
        let p = m.policy(i, 0.0, 0.1, 0.0);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi - lo > 1e-6);
        prop_assert!(backout_delta(&m, &p, hi).unwrap() > backout_delta(&m, &p, lo).unwrap());
    }
}

#[test]
fn backout_of_zero_is_zero() {
    let m = model();
    assert_eq!(backout_delta(&m, &m.policy(0.05, 0.0, 0.1, 0.3), 0.0).unwrap(), 0.0);
}

#[test]
fn backout_reports_supremum_when_infeasible() {
    let m = model();
    let p = m.policy(0.05, 0.0, 0.1, 0.0);
    match backout_delta(&m, &p, 0.9) {
        Err(Error::InfeasibleTarget { supremum, .. }) => {
            let cap = m.solve(&p).unwrap().delta_hat;
            let sup = m.aggregates(&m.solve(&m.policy(0.05, 0.0, 0.1, cap)).unwrap()).uc_over_y;
            assert!((supremum - sup).abs() < 1e-15);
        }
        other => panic!("expected infeasible target, got {other:?}"),
    }
}
