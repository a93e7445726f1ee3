use num_bigint::BigUint;
use proptest::prelude::*;

use nforge::arith::ArithBudget;
use nforge::schedule::{partition_check, BaseCap, ResolutionRule, Schedule};

fn budget() -> ArithBudget {
    ArithBudget::default()
}

#[test]
fn toy_blocks_partition_up_to_4096() {
    for name in ["toy-k3", "toy-k4", "toy-k5", "toy-k6"] {
        let s = Schedule::preset(name).unwrap();
        for b in [2, 3] {
            assert!(partition_check(&s, b, 1 << 12, &budget()).unwrap(), "{name} b={b}");
        }
    }
}

#[test]
fn partition_detects_overlap() {
    // a guard wider than the next block makes the bands overlap
    let mut s = Schedule::toy(6);
    s.guard_mul = 40;
    assert!(!partition_check(&s, 2, 1 << 12, &budget()).unwrap());
    assert!(s.validate(&budget()).is_err());
}

#[test]
fn presets_validate() {
    for name in Schedule::preset_names() {
        let s = Schedule::preset(name).unwrap();
        s.validate(&budget()).unwrap();
        assert_eq!(&s.name, name);
    }
    assert!(Schedule::preset("toy-k9").is_err());
}

#[test]
fn paper_preset_constants() {
    let s = Schedule::paper();
    assert_eq!((s.k0, s.kmax), (100, 100));
    assert_eq!(s.threshold(), (46, 1));
    assert!(s.paper_threshold());
    assert_eq!(s.guard(100), 400);
    assert_eq!(s.resolution_at(100).unwrap(), (BigUint::from(1u32) << 101) + 100u32);
    assert_eq!(s.resolution_at(99).unwrap(), BigUint::from(0u32));
    assert_eq!(s.base_cap, BaseCap::Step(nforge::schedule::StepTag::K));
}

#[test]
fn toy_values_are_consistent() {
    let s = Schedule::toy(6);
    for k in 3..=6 {
        for b in s.bases(k) {
            let v = s.values(b, k, &budget()).unwrap();
            let span = &v.n_next - &v.n_k - v.guard;
            // 2^(n-1) < span <= 2^n
            assert!(span <= BigUint::from(1u32) << v.n);
            assert!(v.n == 0 || span > BigUint::from(1u32) << (v.n - 1));
            // b^(2T) >= 2^n > b^(2T-2)
            assert!(BigUint::from(b).pow(2 * v.t as u32) >= BigUint::from(1u32) << v.n);
            assert!(v.t == 0 || BigUint::from(b).pow(2 * (v.t - 1) as u32) < BigUint::from(1u32) << v.n);
            // N(b,k) is the least N with b^N >= 2^(2^k)
            let nk: u32 = v.n_k.clone().try_into().unwrap();
            assert!(BigUint::from(b).pow(nk) >= BigUint::from(1u32) << (1u64 << k));
            assert!(BigUint::from(b).pow(nk - 1) < BigUint::from(1u32) << (1u64 << k));
            for ell in v.levels() {
                let m = v.offsets(ell).unwrap();
                let start = v.block_start().unwrap();
                let end: u64 = v.n_next.clone().try_into().unwrap();
                if m > 0 {
                    assert!(start + ((m - 1) << ell) + (1 << (ell - 1)) <= end);
                }
                assert!(start + (m << ell) + (1 << (ell - 1)) > end);
            }
        }
    }
    assert!(s.values(7, 6, &budget()).is_err());
    assert!(s.values(2, 7, &budget()).is_err());
}

#[test]
fn resolve_reads_files() {
    let dir = std::env::temp_dir().join(format!("nforge-sched-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("custom.toml");
    let mut s = Schedule::toy(4);
    s.name = "custom".into();
    std::fs::write(&path, s.to_toml()).unwrap();
    assert_eq!(Schedule::resolve(path.to_str().unwrap()).unwrap(), s);
    std::fs::write(&path, "name = \"x\"\nbogus = 1\n").unwrap();
    assert!(Schedule::resolve(path.to_str().unwrap()).is_err());
    std::fs::remove_dir_all(&dir).unwrap();
}

proptest! {
    #[test]
    fn toml_round_trip(k0 in 2u64..6, extra in 0u64..3, slope in 1u64..40, offset in 0i64..20,
                       c_num in 1u64..100, c_den in 1u64..10, linear in any::<bool>(), cap in proptest::option::of(2u64..8)) {
        let mut s = Schedule::toy(k0 + extra);
        s.k0 = k0;
        s.resolution = if linear { ResolutionRule::Linear } else { ResolutionRule::Paper };
        s.resolution_slope = slope;
        s.resolution_offset = offset;
        s.c_num = c_num;
        s.c_den = c_den;
        if let Some(c) = cap {
            s.base_cap = BaseCap::Fixed(c);
        }
        prop_assert_eq!(Schedule::from_toml(&s.to_toml()).unwrap(), s);
    }

    #[test]
    fn resolution_strictly_refines(k in 3u64..12) {
        let s = Schedule::toy(12);
        prop_assert!(s.resolution_at(k + 1).unwrap() > s.resolution_at(k).unwrap());
    }
}
