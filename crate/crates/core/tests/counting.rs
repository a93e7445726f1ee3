use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nforge::arith::{frac_pow, ArithBudget, DyadicRational};
use nforge::counting::{
    big_f, discrepancy_dyadic, discrepancy_exact, discrepancy_oracle, discrepancy_oracle_detail,
    orbit, orbit_discrepancy, shift_check, CountWindow, RationalBand,
};

fn rat(n: u64, d: u64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn dyadic_set(rng: &mut ChaCha8Rng) -> Vec<BigRational> {
    let n = rng.gen_range(1..=128usize);
    // coarse scales make ties likely
    let scale = rng.gen_range(1..=10u32);
    (0..n)
        .map(|_| rat(rng.gen_range(0..1u64 << scale), 1 << scale))
        .collect()
}

#[test]
fn sorted_formula_matches_oracle_on_seeded_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    for i in 0..200 {
        let pts = dyadic_set(&mut rng);
        let fast = discrepancy_exact(&pts).unwrap();
        let slow = discrepancy_oracle(&pts).unwrap();
        assert_eq!(fast, slow, "set {i} of size {}", pts.len());
    }
}

#[test]
fn shift_identity_on_seeded_tuples() {
    let budget = ArithBudget::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    for _ in 0..500 {
        let b = rng.gen_range(2..=5u64);
        let m = rng.gen_range(0..=32u64);
        let n = rng.gen_range(0..=64 - m);
        let scale = rng.gen_range(1..=200u64);
        let bytes: Vec<u8> = (0..scale.div_ceil(8)).map(|_| rng.gen()).collect();
        let x = DyadicRational::new(BigUint::from_bytes_le(&bytes) % (BigUint::one() << scale), scale).unwrap();
        let d = rng.gen_range(1..=12u64);
        let lo = rng.gen_range(0..d);
        let hi = rng.gen_range(lo + 1..=d);
        let band = RationalBand::new(rat(lo, d), rat(hi, d)).unwrap();
        assert!(shift_check(&x, b, m, n, &band, &budget).unwrap());
    }
}

#[test]
fn known_discrepancies() {
    assert_eq!(discrepancy_exact(&[rat(0, 1)]).unwrap(), rat(1, 1));
    assert_eq!(discrepancy_exact(&[rat(1, 2)]).unwrap(), rat(1, 1));
    let vdc: Vec<_> = [0, 4, 2, 6, 1, 5, 3, 7].iter().map(|&v| rat(v, 8)).collect();
    assert_eq!(discrepancy_exact(&vdc).unwrap(), rat(1, 8));
    let d = discrepancy_oracle_detail(&vdc, 64).unwrap();
    assert_eq!(d.star, rat(1, 8));
    assert!(discrepancy_exact(&[]).is_err());
}

#[test]
fn orbit_of_rational_with_period() {
    // x = 1/3 is not dyadic; 5/16 in base 2 shifts out to zero
    let budget = ArithBudget::default();
    let x = DyadicRational::from_u64(5, 4).unwrap();
    let pts = orbit(&x, 2, 0, 6, &budget).unwrap();
    let got: Vec<_> = pts.iter().map(|p| p.to_rational()).collect();
    assert_eq!(got, vec![rat(5, 16), rat(5, 8), rat(1, 4), rat(1, 2), rat(0, 1), rat(0, 1)]);
    assert_eq!(orbit_discrepancy(&x, 2, 4, 2, &budget).unwrap(), rat(1, 1));
}

fn arb_dyadic() -> impl Strategy<Value = DyadicRational> {
    (1u64..=96).prop_flat_map(|scale| {
        proptest::collection::vec(any::<u8>(), scale.div_ceil(8) as usize).prop_map(move |bytes| {
            let num = BigUint::from_bytes_le(&bytes) % (BigUint::one() << scale);
            DyadicRational::new(num, scale).unwrap()
        })
    })
}

fn arb_band() -> impl Strategy<Value = RationalBand> {
    (1u64..=16).prop_flat_map(|d| (0..d).prop_flat_map(move |lo| (Just(lo), lo + 1..=d)).prop_map(move |(lo, hi)| {
        RationalBand::new(rat(lo, d), rat(hi, d)).unwrap()
    }))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn formula_equals_oracle(pts in proptest::collection::vec((0u64..64, 1u32..7), 1..48)) {
        let pts: Vec<_> = pts.into_iter().map(|(n, s)| rat(n % (1 << s), 1 << s)).collect();
        prop_assert_eq!(discrepancy_exact(&pts).unwrap(), discrepancy_oracle(&pts).unwrap());
    }

    #[test]
    fn discrepancy_between_one_over_n_and_one(pts in proptest::collection::vec((0u64..1000, 1u64..1000), 1..64)) {
        let pts: Vec<_> = pts.into_iter().map(|(n, d)| rat(n % d, d)).collect();
        let d = discrepancy_exact(&pts).unwrap();
        prop_assert!(d <= BigRational::one());
        prop_assert!(d >= rat(1, pts.len() as u64));
        let star = discrepancy_oracle_detail(&pts, 512).unwrap().star;
        prop_assert!(star <= d && d <= &star * BigRational::from_integer(BigInt::from(2)));
    }

    #[test]
    fn order_does_not_matter(mut pts in proptest::collection::vec((0u64..256, 1u64..256), 1..40), rot in 0usize..40) {
        let a: Vec<_> = pts.iter().map(|&(n, d)| rat(n % d, d)).collect();
        let r = rot % pts.len();
        pts.rotate_left(r);
        let b: Vec<_> = pts.iter().map(|&(n, d)| rat(n % d, d)).collect();
        prop_assert_eq!(discrepancy_exact(&a).unwrap(), discrepancy_exact(&b).unwrap());
    }

    #[test]
    fn dyadic_path_agrees(x in arb_dyadic(), b in 2u64..6, n in 1u64..40) {
        let budget = ArithBudget::default();
        let pts = orbit(&x, b, 0, n, &budget).unwrap();
        let exact: Vec<_> = pts.iter().map(|p| p.to_rational()).collect();
        let d = discrepancy_exact(&exact).unwrap();
        prop_assert_eq!(&d, &discrepancy_dyadic(&pts).unwrap());
        prop_assert_eq!(&d, &orbit_discrepancy(&x, b, 0, n, &budget).unwrap());
    }

    #[test]
    fn shift_identity(x in arb_dyadic(), b in 2u64..6, m in 0u64..32, n in 0u64..32, band in arb_band()) {
        let budget = ArithBudget::default();
        prop_assert!(shift_check(&x, b, m, n, &band, &budget).unwrap());
        let direct = big_f(&x, b, CountWindow::new(m, n), &band, &budget).unwrap();
        let moved = big_f(&frac_pow(&x, b, m, &budget).unwrap(), b, CountWindow::new(0, n), &band, &budget).unwrap();
        prop_assert_eq!(direct, moved);
    }

    #[test]
    fn count_bounded_by_window(x in arb_dyadic(), b in 2u64..6, n in 0u64..40, band in arb_band()) {
        let f = big_f(&x, b, CountWindow::new(0, n), &band, &ArithBudget::default()).unwrap();
        prop_assert!(f >= BigRational::zero());
        prop_assert!(f <= BigRational::from_integer(n.into()));
    }
}
