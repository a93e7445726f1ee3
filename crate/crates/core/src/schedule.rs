//! Parameter schedules for the interval construction.
//!
//! A [`Schedule`] fixes every integer the construction needs at step `k`:
//! the block boundaries `N(b,k)`, the guard band, the dyadic exponent `n`,
//! the digit-window cap `T`, the candidate resolution `R(k)` and the
//! threshold constant. The `paper` preset reproduces the original values;
//! the `toy-k*` presets shrink the start index so the scan is executable.

use std::fmt;
use std::path::Path;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{big_pow, ceil_pow_log_ratio, least_exponent, pow2, ArithBudget};
use crate::error::{Error, Result};

/// Largest base considered at step `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BaseCap {
    /// `b <= k`.
    Step(StepTag),
    /// `b <= min(k, cap)`.
    Fixed(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepTag {
    #[serde(rename = "k")]
    K,
}

impl BaseCap {
    pub fn at(&self, k: u64) -> u64 {
        match self {
            BaseCap::Step(_) => k,
            BaseCap::Fixed(c) => k.min(*c),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResolutionRule {
    /// `R(k) = 2^(k+1) + k + offset`.
    Paper,
    /// `R(k) = slope·k + offset`.
    Linear,
}

/// A full parameter schedule. Deserializes from a flat TOML table with the
/// same field names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub name: String,
    pub k0: u64,
    pub kmax: u64,
    pub base_cap: BaseCap,
    /// `e(k) = k + exp_shift`, so `N(b,k)` is the least `N` with `b^N >= 2^(2^e(k))`.
    #[serde(default)]
    pub exp_shift: i64,
    /// `guard(k) = guard_mul·k + guard_add`.
    pub guard_mul: u64,
    #[serde(default)]
    pub guard_add: u64,
    pub resolution: ResolutionRule,
    #[serde(default)]
    pub resolution_slope: u64,
    #[serde(default)]
    pub resolution_offset: i64,
    pub c_num: u64,
    pub c_den: u64,
    /// Most elementary cells a single candidate may overlap.
    #[serde(default = "default_overlap_cap")]
    pub overlap_cap: u64,
}

fn default_overlap_cap() -> u64 {
    1 << 16
}

/// Integer schedule values at one `(b, k)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleValues {
    pub b: u64,
    pub k: u64,
    pub n_k: BigUint,
    pub n_next: BigUint,
    /// `⌈log2(N(b,k+1) - N(b,k) - guard)⌉`.
    pub n: u64,
    /// Least `T` with `b^(2T) >= 2^n`.
    pub t: u64,
    pub guard: u64,
    /// Candidate resolution `R(k)`.
    pub r: BigUint,
}

impl ScheduleValues {
    /// Depth `T + N(b,k+1)` of the base-`b` cells on which every window
    /// count is constant.
    pub fn elementary_depth(&self) -> Result<u64> {
        let n_next = to_u64(&self.n_next, "N(b,k+1)")?;
        Ok(n_next + self.t)
    }

    /// First orbit index of the counted block, `N(b,k) + guard`.
    pub fn block_start(&self) -> Result<u64> {
        Ok(to_u64(&self.n_k, "N(b,k)")? + self.guard)
    }

    pub fn levels(&self) -> std::ops::RangeInclusive<u64> {
        self.n.div_ceil(2).max(1)..=self.n
    }

    /// Offsets `m` with `block_start + m·2^ℓ + 2^(ℓ-1) <= N(b,k+1)`.
    pub fn offsets(&self, ell: u64) -> Result<u64> {
        let start = self.block_start()?;
        let end = to_u64(&self.n_next, "N(b,k+1)")?;
        let half = 1u64 << (ell - 1);
        if start + half > end {
            return Ok(0);
        }
        Ok((end - start - half) / (1u64 << ell) + 1)
    }
}

pub(crate) fn to_u64(v: &BigUint, what: &'static str) -> Result<u64> {
    v.to_u64()
        .ok_or_else(|| Error::cap(what, format!("{} bits", v.bits()), "64 bits"))
}

impl Schedule {
    pub fn paper() -> Self {
        Schedule {
            name: "paper".into(),
            k0: 100,
            kmax: 100,
            base_cap: BaseCap::Step(StepTag::K),
            exp_shift: 0,
            guard_mul: 4,
            guard_add: 0,
            resolution: ResolutionRule::Paper,
            resolution_slope: 0,
            resolution_offset: 0,
            c_num: 46,
            c_den: 1,
            overlap_cap: default_overlap_cap(),
        }
    }

    /// Start at `k0 = 3`, stop at `kmax`, with guard `k` and threshold `2`.
    pub fn toy(kmax: u64) -> Self {
        Schedule {
            name: format!("toy-k{kmax}"),
            k0: 3,
            kmax,
            base_cap: BaseCap::Step(StepTag::K),
            exp_shift: 0,
            guard_mul: 1,
            guard_add: 0,
            resolution: ResolutionRule::Paper,
            resolution_slope: 0,
            resolution_offset: 0,
            c_num: 2,
            c_den: 1,
            overlap_cap: default_overlap_cap(),
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "paper" => Ok(Self::paper()),
            "toy-k3" => Ok(Self::toy(3)),
            "toy-k4" => Ok(Self::toy(4)),
            "toy-k5" => Ok(Self::toy(5)),
            "toy-k6" => Ok(Self::toy(6)),
            _ => Err(Error::InvalidSchedule(format!(
                "unknown preset {name:?} (expected paper, toy-k3..toy-k6)"
            ))),
        }
    }

    pub fn preset_names() -> &'static [&'static str] {
        &["paper", "toy-k3", "toy-k4", "toy-k5", "toy-k6"]
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("schedule serializes")
    }

    /// Preset name or path to a TOML file.
    pub fn resolve(spec: &str) -> Result<Self> {
        let path = Path::new(spec);
        if Self::preset_names().contains(&spec) {
            Self::preset(spec)
        } else if path.exists() {
            Self::from_file(path)
        } else {
            Err(Error::InvalidSchedule(format!(
                "{spec:?} is neither a preset ({}) nor an existing file",
                Self::preset_names().join(", ")
            )))
        }
    }

    pub fn with_threshold(mut self, c_num: u64, c_den: u64) -> Self {
        self.c_num = c_num;
        self.c_den = c_den;
        self
    }

    pub fn guard(&self, k: u64) -> u64 {
        self.guard_mul * k + self.guard_add
    }

    pub fn exponent(&self, k: u64) -> Result<u64> {
        let e = k as i64 + self.exp_shift;
        if e < 0 {
            return Err(Error::InvalidSchedule(format!("e({k}) = {e} < 0")));
        }
        Ok(e as u64)
    }

    /// `N(b,k)` for any `k`, ignoring the `k0..=kmax` range.
    pub fn block_end(&self, b: u64, k: u64, budget: &ArithBudget) -> Result<BigUint> {
        ceil_pow_log_ratio(self.exponent(k)?, b, budget)
    }

    /// `R(k)`; `R(k0 - 1)` is 0 (the unit interval).
    pub fn resolution_at(&self, k: u64) -> Result<BigUint> {
        if k < self.k0 {
            return Ok(BigUint::zero());
        }
        let v: BigUint = match self.resolution {
            ResolutionRule::Paper => pow2(k + 1) + k,
            ResolutionRule::Linear => BigUint::from(self.resolution_slope) * k,
        };
        let off = self.resolution_offset;
        if off >= 0 {
            Ok(v + off as u64)
        } else if v >= BigUint::from(off.unsigned_abs()) {
            Ok(v - off.unsigned_abs())
        } else {
            Err(Error::InvalidSchedule(format!("R({k}) is negative")))
        }
    }

    pub fn bases(&self, k: u64) -> std::ops::RangeInclusive<u64> {
        2..=self.base_cap.at(k)
    }

    pub fn threshold(&self) -> (u64, u64) {
        (self.c_num, self.c_den)
    }

    /// Whether `c >= 46`, the regime in which the measure budget is claimed.
    pub fn paper_threshold(&self) -> bool {
        self.c_num >= 46 * self.c_den
    }

    /// Checks the structural invariants over `k0..=kmax`.
    pub fn validate(&self, budget: &ArithBudget) -> Result<()> {
        if self.c_den == 0 {
            return Err(Error::InvalidSchedule("c_den must be positive".into()));
        }
        if self.k0 == 0 || self.kmax < self.k0 {
            return Err(Error::InvalidSchedule(format!(
                "need 1 <= k0 <= kmax, got k0={}, kmax={}",
                self.k0, self.kmax
            )));
        }
        if self.resolution == ResolutionRule::Linear && self.resolution_slope == 0 {
            return Err(Error::InvalidSchedule("linear resolution needs a positive slope".into()));
        }
        if self.overlap_cap == 0 {
            return Err(Error::InvalidSchedule("overlap_cap must be positive".into()));
        }
        let mut prev = BigUint::zero();
        for k in self.k0..=self.kmax {
            let r = self.resolution_at(k)?;
            if r <= prev {
                return Err(Error::InvalidSchedule(format!(
                    "R({k}) = {r} does not refine R({}) = {prev}",
                    k - 1
                )));
            }
            prev = r;
            if self.base_cap.at(k) < 2 {
                return Err(Error::InvalidSchedule(format!("no bases at step {k}")));
            }
            for b in self.bases(k) {
                self.check_gap(b, k, budget)?;
            }
        }
        Ok(())
    }

    /// `N(b,k+1) > N(b,k) + guard(k)`. Large exponents are settled by the
    /// sufficient condition `2^e > (guard + 1)·bitlen(b)`, since the gap
    /// exceeds `2^e / log2(b) - 1`.
    fn check_gap(&self, b: u64, k: u64, budget: &ArithBudget) -> Result<()> {
        let e = self.exponent(k)?;
        let guard = self.guard(k);
        let bitlen = 64 - b.leading_zeros() as u64;
        if e >= 64 || (1u128 << e) > (guard as u128 + 1) * bitlen as u128 {
            return Ok(());
        }
        let lo = self.block_end(b, k, budget)?;
        let hi = self.block_end(b, k + 1, budget)?;
        if hi > &lo + guard {
            Ok(())
        } else {
            Err(Error::InvalidSchedule(format!(
                "N({b},{}) = {hi} is not above N({b},{k}) + guard = {lo} + {guard}",
                k + 1
            )))
        }
    }

    /// All integer values at `(b, k)`.
    pub fn values(&self, b: u64, k: u64, budget: &ArithBudget) -> Result<ScheduleValues> {
        if k < self.k0 || k > self.kmax || b < 2 || b > self.base_cap.at(k) {
            return Err(Error::OutOfRange { b, k });
        }
        let n_k = self.block_end(b, k, budget)?;
        let n_next = self.block_end(b, k + 1, budget)?;
        let guard = self.guard(k);
        let span = &n_next - &n_k;
        if span <= BigUint::from(guard) {
            return Err(Error::InvalidSchedule(format!(
                "empty block at b={b}, k={k}: N(b,k+1) - N(b,k) = {span} <= guard {guard}"
            )));
        }
        let span = span - guard;
        let n = (span - BigUint::one()).bits();
        let t = least_exponent(&big_pow(b, 2), n, budget)?;
        Ok(ScheduleValues {
            b,
            k,
            n_k,
            n_next,
            n,
            t,
            guard,
            r: self.resolution_at(k)?,
        })
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (k0={}, kmax={}, c={}/{})",
            self.name, self.k0, self.kmax, self.c_num, self.c_den
        )
    }
}

/// `schedule_values` as a free function.
pub fn schedule_values(s: &Schedule, b: u64, k: u64, budget: &ArithBudget) -> Result<ScheduleValues> {
    s.values(b, k, budget)
}

/// Most integers `partition_check` will enumerate.
pub const PARTITION_CAP: u64 = 1 << 24;

/// Checks that the guard bands `(N_k, N_k + guard]` and the blocks
/// `(N_k + guard, N_{k+1}]` tile `(N_{max(k0,b)}, upto]` with no gaps or
/// overlaps. Steps beyond `kmax` are included when `upto` reaches them.
pub fn partition_check(s: &Schedule, b: u64, upto: u64, budget: &ArithBudget) -> Result<bool> {
    if upto > PARTITION_CAP {
        return Err(Error::cap("partition enumeration", upto, PARTITION_CAP));
    }
    let k_start = s.k0.max(b);
    let start = to_u64(&s.block_end(b, k_start, budget)?, "N(b,k)")?;
    if start >= upto {
        return Ok(true);
    }
    let mut hits = vec![0u8; (upto - start) as usize];
    let mut mark = |lo: u64, hi: u64| {
        // (lo, hi] clipped to (start, upto]
        for v in lo.max(start) + 1..=hi.min(upto) {
            let slot = &mut hits[(v - start - 1) as usize];
            *slot = slot.saturating_add(1);
        }
    };
    let mut k = k_start;
    loop {
        let lo = to_u64(&s.block_end(b, k, budget)?, "N(b,k)")?;
        if lo >= upto {
            break;
        }
        let hi = to_u64(&s.block_end(b, k + 1, budget)?, "N(b,k+1)")?;
        let mid = lo + s.guard(k);
        mark(lo, mid);
        if mid < hi {
            mark(mid, hi);
        }
        k += 1;
    }
    Ok(hits.iter().all(|&h| h == 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn budget() -> ArithBudget {
        ArithBudget::default()
    }

    #[test]
    fn paper_values_base_two() {
        let s = Schedule::paper();
        let v = s.values(2, 100, &budget()).unwrap();
        assert_eq!(v.n_k, pow2(100));
        assert_eq!(v.n_next, pow2(101));
        assert_eq!(v.guard, 400);
        assert_eq!(v.n, 100);
        assert_eq!(v.t, 50);
        assert_eq!(v.r, pow2(101) + 100u32);
        assert_eq!(s.values(4, 100, &budget()).unwrap().n_k, pow2(99));
    }

    #[test]
    fn paper_validates_without_large_powers() {
        Schedule::paper().validate(&budget()).unwrap();
        assert!(matches!(
            Schedule::paper().values(3, 100, &budget()),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn toy_values() {
        let s = Schedule::toy(3);
        let v = s.values(2, 3, &budget()).unwrap();
        assert_eq!((v.n_k.clone(), v.n_next.clone()), (8u32.into(), 16u32.into()));
        assert_eq!((v.guard, v.n, v.t), (3, 3, 2));
        assert_eq!(v.r, BigUint::from(19u32));
        assert_eq!(v.elementary_depth().unwrap(), 18);
        assert_eq!(v.levels(), 2..=3);
        assert_eq!(v.offsets(2).unwrap(), 1);
        assert_eq!(v.offsets(3).unwrap(), 1);

        let v = s.values(3, 3, &budget()).unwrap();
        assert_eq!((v.n_k.to_u64(), v.n_next.to_u64()), (Some(6), Some(11)));
        assert_eq!((v.n, v.t), (1, 1));
        assert!(matches!(s.values(4, 3, &budget()), Err(Error::OutOfRange { .. })));
        assert!(matches!(s.values(2, 4, &budget()), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn presets_validate() {
        for name in Schedule::preset_names() {
            Schedule::preset(name).unwrap().validate(&budget()).unwrap();
        }
        assert!(Schedule::preset("toy-k9").is_err());
    }

    #[test]
    fn toml_round_trip() {
        let s = Schedule::toy(4);
        let text = s.to_toml();
        assert!(text.contains("base_cap = \"k\""));
        assert_eq!(Schedule::from_toml(&text).unwrap(), s);
        let fixed = "name = \"x\"\nk0 = 2\nkmax = 3\nbase_cap = 2\nguard_mul = 1\nresolution = \"linear\"\nresolution_slope = 4\nc_num = 1\nc_den = 1\n";
        let s = Schedule::from_toml(fixed).unwrap();
        assert_eq!(s.base_cap, BaseCap::Fixed(2));
        assert_eq!(s.resolution_at(3).unwrap(), BigUint::from(12u32));
        assert!(Schedule::from_toml("name = 1").is_err());
    }

    #[test]
    fn partition_examples() {
        let b = budget();
        assert!(partition_check(&Schedule::toy(3), 2, 1 << 10, &b).unwrap());
        let mut paper_small = Schedule::paper();
        paper_small.k0 = 5;
        assert!(partition_check(&paper_small, 2, 1 << 12, &b).unwrap());
        assert!(partition_check(&paper_small, 3, 1 << 12, &b).unwrap());
        let mut broken = Schedule::toy(3);
        broken.guard_add = 40;
        assert!(!partition_check(&broken, 2, 1 << 10, &b).unwrap());
        assert!(broken.validate(&b).is_err());
    }
}
