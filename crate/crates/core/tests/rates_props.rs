use approx::assert_relative_eq;
use num_rational::Ratio;
use proptest::prelude::*;

use pexp_core::rates::{
    l2_switch_point, linear_minimax, minimax, rate_l2, rate_l2_rescaled, rate_sup, RateQuery, Regime,
};

#[test]
fn closed_form_examples() {
    let a = rate_l2(&RateQuery::new(1.0, 1.0, 2.0, 2.0, 1)).unwrap();
    assert_eq!(a.poly_exponent.exact, Some(Ratio::new(1, 3)));
    for p in [1.0, 1.3, 2.0] {
        let b = rate_l2(&RateQuery::new(0.5, 1.0, p, 2.0, 1)).unwrap();
        assert_relative_eq!(b.poly_exponent.value, 0.25, epsilon = 1e-15);
    }
    let sp = l2_switch_point(2.0, 1.0, 1.0, 1);
    assert_relative_eq!(sp, (1.0 + 7f64.sqrt()) / 2.0, epsilon = 1e-12);
    assert!(1.5 < sp && sp < 2.0);
}

#[test]
fn rescaled_examples() {
    let r = rate_l2_rescaled(&RateQuery::new(0.0, 2.0, 1.0, 1.0, 1)).unwrap();
    assert_eq!(r.poly_exponent.exact, Some(Ratio::new(2, 5)));
    assert_eq!(r.lambda_poly_exponent.unwrap().exact, Some(Ratio::new(1, 5)));

    let r = rate_l2_rescaled(&RateQuery::new(0.0, 2.0, 1.0, 1.5, 1)).unwrap();
    assert_relative_eq!(r.log_exponent.value, 1.0 / 15.0, epsilon = 1e-14);

    let r = rate_l2_rescaled(&RateQuery::new(0.0, 2.0, 2.0, 1.0, 1)).unwrap();
    assert_relative_eq!(r.poly_exponent.value, 0.375, epsilon = 1e-14);
    assert_eq!(r.regime, Regime::RescaledLinearBest);
}

#[test]
fn sup_examples() {
    let s = rate_sup(1.0, 1.0, 1.0).unwrap();
    assert_eq!(s.rho.poly_exponent.exact, Some(Ratio::new(1, 3)));
    assert_eq!(s.rho_tilde.poly_exponent.exact, Some(Ratio::new(7, 24)));
    assert_eq!(s.combined.exact, Some(Ratio::new(7, 24)));
}

#[test]
fn minimax_examples() {
    assert_eq!(minimax(1.0, 1).exact, Some(Ratio::new(1, 3)));
    assert_eq!(linear_minimax(2.0, 1.0).exact, Some(Ratio::new(3, 8)));
    for b in [0.5, 1.0, 2.7] {
        assert_eq!(linear_minimax(b, 2.0).value, minimax(b, 1).value);
        assert_eq!(linear_minimax(b, 3.0).value, minimax(b, 1).value);
    }
}

#[test]
fn invalid_queries_are_rejected() {
    assert!(rate_l2(&RateQuery::new(-1.0, 1.0, 1.0, 2.0, 1)).is_err());
    assert!(rate_sup(0.0, 1.0, 1.0).is_err());
    assert!(rate_sup(1.0, -0.5, 1.0).is_err());
}

proptest! {
    #[test]
    fn l2_exponent_bounded_by_minimax(
        alpha in 0.05f64..4.0, beta in 0.3f64..4.0, p in 1.0f64..=2.0,
    ) {
        let r = rate_l2(&RateQuery::new(alpha, beta, p, 2.0, 1)).unwrap();
        let e = r.poly_exponent.value;
        prop_assert!(e > 0.0 && e <= 0.5);
        prop_assert!(e <= minimax(beta, 1).value + 1e-12);
    }

    #[test]
    fn l2_exponent_continuous_in_alpha(
        alpha in 0.05f64..4.0, beta in 0.3f64..4.0, p in 1.0f64..=2.0,
    ) {
        let q = RateQuery::new(alpha, beta, p, 2.0, 1);
        let h = 1e-7;
        let a = rate_l2(&q).unwrap().poly_exponent.value;
        let b = rate_l2(&RateQuery { alpha: alpha + h, ..q }).unwrap().poly_exponent.value;
        prop_assert!((a - b).abs() < 1e-5);
    }

    #[test]
    fn rescaled_p_equals_q_gives_minimax(beta in 1.01f64..4.0, p in 1.0f64..1.99) {
        let r = rate_l2_rescaled(&RateQuery::new(0.0, beta, p, p, 1)).unwrap();
        prop_assert!((r.poly_exponent.value - minimax(beta, 1).value).abs() < 1e-12);
        prop_assert_eq!(r.log_exponent.value, 0.0);
    }

    #[test]
    fn sup_rates_ordered_and_equal_at_gaussian(alpha in 0.1f64..3.0, beta in 0.1f64..3.0, p in 1.0f64..=2.0) {
        let s = rate_sup(alpha, beta, p).unwrap();
        prop_assert!(s.combined.value <= s.rho.poly_exponent.value);
        prop_assert!(s.combined.value <= s.rho_tilde.poly_exponent.value);
        prop_assert!(s.rho.poly_exponent.value > 0.0);
        let g = rate_sup(alpha, beta, 2.0).unwrap();
        if beta <= alpha {
            prop_assert!((g.rho.poly_exponent.value - g.rho_tilde.poly_exponent.value).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_minimax_never_beats_minimax(beta in 0.6f64..4.0, q in 1.0f64..4.0) {
        prop_assert!(linear_minimax(beta, q).value <= minimax(beta, 1).value + 1e-15);
    }
}
