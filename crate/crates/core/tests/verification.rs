use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, Zero};
use proptest::prelude::*;

use nforge::arith::ArithBudget;
use nforge::bounds::Precision;
use nforge::construction::{construct, ConstructOptions};
use nforge::schedule::Schedule;
use nforge::verification::{
    control_curve, discrepancy_curve, exact_event_measure, hstar_inflation_check, lemma5_budget_check,
    lil_experiment, parse_points, sweep_corollary, sweep_lemma2, SweepGrid, Threshold,
};
use nforge::Error;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

#[test]
fn threshold_extremes() {
    for (b, h, n, m) in [(2, 1, 4, 0), (3, 1, 3, 1), (2, 2, 5, 2)] {
        let cells = BigUint::from(b).pow(h as u32);
        for a in 0..cells.try_into().unwrap() {
            let none = exact_event_measure(b, h, n, m, a, &Threshold::Rational(q(n as i64, 1))).unwrap();
            assert!(none.is_zero());
            let all = exact_event_measure(b, h, n, m, a, &Threshold::Rational(q(-1, 3))).unwrap();
            assert!(all.is_one());
        }
    }
    assert!(exact_event_measure(2, 1, 2, 0, 2, &Threshold::Rational(q(0, 1))).is_err());
}

#[test]
fn enumeration_budget_is_enforced() {
    let err = exact_event_measure(2, 1, 30, 0, 0, &Threshold::Rational(q(1, 1))).unwrap_err();
    assert!(err.is_budget());
}

#[test]
fn lemma2_and_lemma3_grids_pass() {
    let r2 = sweep_lemma2(&SweepGrid::lemma2_default(), Precision::default()).unwrap();
    assert!(r2.aggregate_pass);
    assert!(r2.tuples.iter().all(|t| t.slack >= 0.0));
    let r3 = sweep_lemma2(&SweepGrid::lemma3_default(), Precision::default()).unwrap();
    assert!(r3.aggregate_pass);
    // reports are reproducible apart from wall-clock
    let again = sweep_lemma2(&SweepGrid::lemma2_default(), Precision::default()).unwrap();
    assert_eq!(again.without_runtime(), r2.without_runtime());
}

#[test]
fn huge_epsilon_gives_zero_measure() {
    let grid = SweepGrid {
        eps: vec![(1000, 1)],
        ..SweepGrid::lemma2_default()
    };
    let r = sweep_lemma2(&grid, Precision::default()).unwrap();
    assert!(r.aggregate_pass);
    assert!(r.tuples.iter().all(|t| t.measure == "0"));
}

#[test]
fn corollary_sweep_with_skips() {
    let r = sweep_corollary(&SweepGrid::lemma3_default(), Precision::default()).unwrap();
    assert!(r.aggregate_pass);
    assert!(r.summary["skipped_by_criterion"].as_u64().unwrap() > 0);
    let checks: Vec<_> = r.tuples.iter().map(|t| t.params["check"].as_str().unwrap()).collect();
    assert!(checks.contains(&"numeric_528"));
    assert!(checks.contains(&"variance_chain"));
}

#[test]
fn measure_budget_at_paper_threshold() {
    let s = Schedule::toy(4).with_threshold(46, 1);
    for k in [3, 4] {
        let r = lemma5_budget_check(&s, k, &ConstructOptions::default()).unwrap();
        assert!(r.aggregate_pass, "k={k}");
        assert!(r.summary["threshold_asserted"].as_bool().unwrap());
        for t in r.tuples.iter().filter(|t| t.params["check"] == "h_ratio") {
            assert_eq!(t.measure, "0");
        }
    }
}

#[test]
fn measure_budget_recorded_below_threshold() {
    let r = lemma5_budget_check(&Schedule::toy(4), 4, &ConstructOptions::default()).unwrap();
    assert!(r.aggregate_pass);
    assert!(!r.summary["threshold_asserted"].as_bool().unwrap());
    let good = r.summary["good_fraction_lower"].as_f64().unwrap();
    assert!(good > 0.0 && good <= 1.0);
}

#[test]
fn hstar_geometry_and_regime() {
    let opts = ConstructOptions::default();
    // b = 3 cells do not align with dyadic candidates
    let s = Schedule::toy(4).with_threshold(1, 1);
    let plain = hstar_inflation_check(&s, 3, 4, &opts).unwrap();
    assert!(plain.aggregate_pass);
    assert!(!plain.summary["paper_regime"].as_bool().unwrap());
    assert_eq!(plain.tuples.len(), 1);
    assert!(plain.summary["inflation"].as_f64().unwrap() > 1.0);

    let mut fine = s.clone();
    fine.resolution_offset = 5;
    let r = hstar_inflation_check(&fine, 3, 4, &opts).unwrap();
    assert!(r.summary["paper_regime"].as_bool().unwrap());
    assert_eq!(r.tuples.len(), 2);
    assert!(r.aggregate_pass, "{}", r.to_json());

    // empty H
    let big = Schedule::toy(3).with_threshold(46, 1);
    let r = hstar_inflation_check(&big, 2, 3, &opts).unwrap();
    assert!(r.aggregate_pass);
    assert_eq!(r.summary["mu_hstar"], "0");
}

#[test]
fn curve_on_constructed_digits() {
    let s = Schedule::toy(6);
    let state = construct(&s, &ConstructOptions::default()).unwrap();
    let curve = discrepancy_curve(&state.digits, 2, &[16, 64, 100], &ArithBudget::default()).unwrap();
    assert!(curve.pass);
    assert_eq!(curve.points.len(), 3);
    let err = discrepancy_curve(&state.digits, 2, &[256], &ArithBudget::default()).unwrap_err();
    assert!(matches!(err, Error::InsufficientDigits { .. }));
}

#[test]
fn van_der_corput_control() {
    let text: String = (0u64..1024)
        .map(|i| {
            let r = i.reverse_bits() >> 54;
            format!("{r}/1024\n")
        })
        .collect();
    let pts = parse_points(&text).unwrap();
    let curve = control_curve(&pts, &[16, 64, 256, 1024]).unwrap();
    for (n, d, ratio) in curve {
        assert!(d <= 1.0);
        // N·D_N stays within a small multiple of log N
        assert!(ratio < 2.0, "N={n}: {ratio}");
    }
}

#[test]
fn lil_contract() {
    let r = lil_experiment(3, 256, 1, 11, &ArithBudget::default()).unwrap();
    assert_eq!(r.values.len(), 1);
    assert!(!r.asserted);
    assert_eq!(r.constant, 1.0);
    let r = lil_experiment(2, 256, 8, 11, &ArithBudget::default()).unwrap();
    assert!(r.asserted);
    assert!(r.quantiles.windows(2).all(|w| w[0] <= w[1]));
    let again = lil_experiment(2, 256, 8, 11, &ArithBudget::default()).unwrap();
    assert_eq!((r.values, r.quantiles), (again.values, again.quantiles));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn measures_are_probabilities(b in 2u64..4, h in 1u64..3, n in 1u64..6, m in 0u64..3, a_pick in any::<u64>(), t in -2i64..12) {
        let a = a_pick % b.pow(h as u32);
        let mu = exact_event_measure(b, h, n, m, a, &Threshold::Rational(q(t, 2))).unwrap();
        prop_assert!(mu >= BigRational::zero() && mu <= BigRational::one());
        let den = BigInt::from(b).pow((m + n + h) as u32);
        prop_assert!(den.is_multiple_of(mu.denom()));
    }

    #[test]
    fn measure_decreases_with_threshold(b in 2u64..4, n in 1u64..6, m in 0u64..3, t1 in -2i64..12, t2 in -2i64..12) {
        let (lo, hi) = (t1.min(t2), t1.max(t2));
        let a = exact_event_measure(b, 1, n, m, 0, &Threshold::Rational(q(lo, 2))).unwrap();
        let c = exact_event_measure(b, 1, n, m, 0, &Threshold::Rational(q(hi, 2))).unwrap();
        prop_assert!(c <= a);
    }

    #[test]
    fn eps_threshold_matches_rational_square(n in 1u64..6, e in 1i64..8) {
        // ε√(hN) with h = 1 and N a perfect square is rational
        let n = n * n;
        prop_assume!(2 + n + 1 <= 22);
        let eps = q(e, 4);
        let root = BigRational::from_integer(BigInt::from(((n as f64).sqrt()) as i64));
        let by_eps = exact_event_measure(2, 1, n, 0, 0, &Threshold::EpsSqrtHN(eps.clone())).unwrap();
        let direct = exact_event_measure(2, 1, n, 0, 0, &Threshold::Rational(eps * root)).unwrap();
        prop_assert_eq!(by_eps, direct);
    }
}
