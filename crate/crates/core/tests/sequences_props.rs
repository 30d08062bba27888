use approx::assert_relative_eq;
use proptest::prelude::*;

use pexp_core::sequences::{
    besov_norm, dyadic_to_linear, embedding_check, linear_to_dyadic, make_truth, q_norm, z_norm_p,
    BesovParams, SignPattern, TruthProfile,
};
use pexp_core::{CoefVec, IndexScheme, ScalingSpec};

fn unit(len: usize) -> CoefVec {
    let mut v = vec![0.0; len];
    v[0] = 1.0;
    CoefVec::linear(v)
}

#[test]
fn first_unit_vector_has_besov_norm_one() {
    for (s, q, d) in [(0.3, 1.0, 1), (2.0, 2.0, 3), (1.0, f64::INFINITY, 2), (-0.2, 4.0, 1)] {
        let n = besov_norm(&unit(16), BesovParams::new(s, q, d)).unwrap();
        assert_relative_eq!(n, 1.0, epsilon = 1e-15);
    }
}

#[test]
fn besov_norm_matches_direct_summation() {
    let n = 10_000;
    let u = CoefVec::linear((1..=n).map(|l| 1.0 / l as f64).collect());
    let got = besov_norm(&u, BesovParams::new(0.4, 2.0, 1)).unwrap();
    let direct: f64 = (1..=n).map(|l| (l as f64).powf(-1.2)).sum::<f64>().sqrt();
    assert_relative_eq!(got, direct, max_relative = 1e-12);
}

#[test]
fn scaling_sequence_norms() {
    for p in [1.0, 1.5, 2.0] {
        let spec = ScalingSpec::linear(p, 1.3, 1, 50).unwrap();
        let g = spec.as_coefvec();
        assert_relative_eq!(z_norm_p(&g, &spec).unwrap(), 50.0, max_relative = 1e-12);
        assert_relative_eq!(q_norm(&g, &spec).unwrap(), 50f64.sqrt(), max_relative = 1e-12);
        let zero = CoefVec::zeros(spec.scheme);
        assert_eq!(z_norm_p(&zero, &spec).unwrap(), 0.0);
        assert_eq!(q_norm(&zero, &spec).unwrap(), 0.0);
    }
}

#[test]
fn norms_reject_scheme_mismatch() {
    let spec = ScalingSpec::dyadic(1.0, 1.0, 3).unwrap();
    let h = CoefVec::linear(vec![1.0; 15]);
    assert!(z_norm_p(&h, &spec).is_err());
    assert!(q_norm(&h, &spec).is_err());
}

#[test]
fn embedding_examples() {
    assert!(embedding_check(BesovParams::new(0.1, 2.0, 1)));
    assert!(!embedding_check(BesovParams::new(0.4, 1.0, 1)));
    assert!(embedding_check(BesovParams::new(-0.2, 4.0, 1)));
}

#[test]
fn sparse_truth_layout() {
    let bp = BesovParams::new(1.0, 2.0, 1);
    let w = make_truth(bp, 0.05, 1024, &SignPattern::Alternating, TruthProfile::Sparse).unwrap();
    for (i, v) in w.values().iter().enumerate() {
        let ell = i + 1;
        if ell.is_power_of_two() {
            let j = ell.trailing_zeros();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            assert_relative_eq!(*v, sign * (ell as f64).powf(-1.05), max_relative = 1e-14);
        } else {
            assert_eq!(*v, 0.0);
        }
    }
    assert!(besov_norm(&w, bp).unwrap().is_finite());
}

#[test]
fn large_margin_truth_is_nearly_first_unit_vector() {
    let bp = BesovParams::new(1.0, 2.0, 1);
    for profile in [TruthProfile::Sparse, TruthProfile::Dense] {
        let w = make_truth(bp, 5.0, 256, &SignPattern::Positive, profile).unwrap();
        let n = besov_norm(&w, bp).unwrap();
        assert!((n - 1.0).abs() < 0.02, "{profile:?}: {n}");
    }
}

#[test]
fn csv_round_trip_is_bit_exact() {
    let values: Vec<f64> = (0..63).map(|i| (i as f64 * 0.731).sin() / 3.0 + 1e-300 * i as f64).collect();
    for cv in [CoefVec::dyadic(5, values.clone()).unwrap(), CoefVec::linear(values)] {
        let mut buf = Vec::new();
        cv.write_csv(&mut buf).unwrap();
        let back = CoefVec::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.scheme(), cv.scheme());
        for (a, b) in back.values().iter().zip(cv.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}

#[test]
fn csv_reader_rejects_malformed_input() {
    assert!(CoefVec::read_csv("scheme,k,l,ell,value\nlinear,,,2,1.0\n".as_bytes()).is_err());
    assert!(CoefVec::read_csv("scheme,k,l,ell,value\ndyadic,0,1,1,1.0\ndyadic,1,1,2,1.0\n".as_bytes()).is_err());
    assert!(CoefVec::read_csv("scheme,k,l,ell,value\nlinear,,,1,abc\n".as_bytes()).is_err());
}

proptest! {
    #[test]
    fn dyadic_index_bijection(k in 0u32..30, frac in 0.0f64..1.0) {
        let l = 1 + ((frac * (1u64 << k) as f64) as usize).min((1usize << k) - 1);
        let ell = dyadic_to_linear(k, l);
        prop_assert_eq!(linear_to_dyadic(ell), (k, l));
        prop_assert_eq!(IndexScheme::Dyadic { max_level: k }.len(), (1usize << (k + 1)) - 1);
    }

    #[test]
    fn besov_norm_is_homogeneous(
        vals in prop::collection::vec(-3.0f64..3.0, 1..40),
        c in -5.0f64..5.0,
        s in 0.0f64..2.0,
        q in 1.0f64..4.0,
    ) {
        let u = CoefVec::linear(vals);
        let bp = BesovParams::new(s, q, 1);
        let a = besov_norm(&u.scaled(c), bp).unwrap();
        let b = c.abs() * besov_norm(&u, bp).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * b.max(1e-300));
    }

    #[test]
    fn besov_norm_increases_with_smoothness(
        vals in prop::collection::vec(-3.0f64..3.0, 1..40),
        s in 0.0f64..2.0,
        ds in 0.0f64..1.0,
        q in 1.0f64..4.0,
    ) {
        let u = CoefVec::linear(vals);
        let lo = besov_norm(&u, BesovParams::new(s, q, 1)).unwrap();
        let hi = besov_norm(&u, BesovParams::new(s + ds, q, 1)).unwrap();
        prop_assert!(hi >= lo * (1.0 - 1e-12));
    }

    #[test]
    fn z_norm_scales_with_lambda(
        vals in prop::collection::vec(-3.0f64..3.0, 20),
        p in 1.0f64..=2.0,
        lam in 0.01f64..100.0,
    ) {
        let h = CoefVec::linear(vals);
        let base = ScalingSpec::linear(p, 0.7, 1, 20).unwrap();
        let scaled = base.with_lambda(lam).unwrap();
        let a = z_norm_p(&h, &scaled).unwrap();
        let b = lam.powf(-p) * z_norm_p(&h, &base).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * b.max(1e-300));
        let qa = q_norm(&h, &scaled).unwrap();
        let qb = q_norm(&h, &base).unwrap() / lam;
        prop_assert!((qa - qb).abs() <= 1e-12 * qb.max(1e-300));
    }

    #[test]
    fn z_norm_equals_q_norm_squared_at_p2(vals in prop::collection::vec(-3.0f64..3.0, 31)) {
        let spec = ScalingSpec::dyadic(2.0, 1.0, 4).unwrap();
        let h = CoefVec::dyadic(4, vals).unwrap();
        let z = z_norm_p(&h, &spec).unwrap();
        let q = q_norm(&h, &spec).unwrap();
        prop_assert!((z - q * q).abs() <= 1e-10 * z.max(1e-300));
    }
}
