//! Exact dyadic arithmetic.
//!
//! Every decision the construction makes (fractional parts of `b^j x`,
//! membership of a point in a base-`b` grid cell, the integer schedules) is
//! made here with unbounded integers. Floating point only shows up in the
//! `to_f64` helpers used for reporting.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Pow, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Memory cap for a single big-integer value, in bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArithBudget {
    pub max_bits: u64,
}

impl ArithBudget {
    pub const fn from_megabytes(mb: u64) -> Self {
        ArithBudget {
            max_bits: mb.saturating_mul(8 << 20),
        }
    }

    /// Reads `NFORGE_BUDGET_MB`, falling back to the default budget.
    pub fn from_env() -> Result<Self> {
        match std::env::var("NFORGE_BUDGET_MB") {
            Ok(v) => v
                .trim()
                .parse::<u64>()
                .map(Self::from_megabytes)
                .map_err(|_| Error::Parse(format!("NFORGE_BUDGET_MB={v:?} is not an integer"))),
            Err(_) => Ok(Self::default()),
        }
    }

    pub fn check(&self, what: &'static str, bits: u64) -> Result<()> {
        if bits > self.max_bits {
            Err(Error::cap(what, format!("{bits} bits"), format!("{} bits", self.max_bits)))
        } else {
            Ok(())
        }
    }
}

impl Default for ArithBudget {
    fn default() -> Self {
        Self::from_megabytes(256)
    }
}

pub(crate) fn pow2(scale: u64) -> BigUint {
    BigUint::one() << scale
}

pub(crate) fn big_pow(base: u64, exp: u64) -> BigUint {
    Pow::pow(BigUint::from(base), exp)
}

fn check_base(b: u64) -> Result<()> {
    if b < 2 {
        Err(Error::InvalidInput(format!("base must be at least 2, got {b}")))
    } else {
        Ok(())
    }
}

/// An exact point `numerator / 2^scale` of `[0, 1)`, always stored in
/// canonical form (odd numerator, or zero with scale 0).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicRational {
    numerator: BigUint,
    scale: u64,
}

impl DyadicRational {
    pub fn new(numerator: BigUint, scale: u64) -> Result<Self> {
        if numerator.bits() > scale {
            return Err(Error::InvalidInput(format!(
                "{numerator}/2^{scale} is not in [0,1)"
            )));
        }
        Ok(Self::canonical(numerator, scale))
    }

    pub fn from_u64(numerator: u64, scale: u64) -> Result<Self> {
        Self::new(BigUint::from(numerator), scale)
    }

    pub fn zero() -> Self {
        DyadicRational {
            numerator: BigUint::zero(),
            scale: 0,
        }
    }

    /// The number `0.d1 d2 d3 ...` in binary.
    pub fn from_bits(bits: &[bool]) -> Self {
        let mut n = BigUint::zero();
        for &bit in bits {
            n <<= 1u32;
            if bit {
                n += 1u32;
            }
        }
        Self::canonical(n, bits.len() as u64)
    }

    fn canonical(numerator: BigUint, scale: u64) -> Self {
        match numerator.trailing_zeros() {
            None => Self::zero(),
            Some(tz) => {
                let shift = tz.min(scale);
                DyadicRational {
                    numerator: numerator >> shift,
                    scale: scale - shift,
                }
            }
        }
    }

    pub fn numerator(&self) -> &BigUint {
        &self.numerator
    }

    pub fn scale(&self) -> u64 {
        self.scale
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }

    /// Numerator over `2^scale`, for any `scale >= self.scale()`.
    pub fn numerator_at(&self, scale: u64) -> BigUint {
        debug_assert!(scale >= self.scale);
        &self.numerator << (scale - self.scale)
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new(self.numerator.clone().into(), pow2(self.scale).into())
    }

    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.to_rational())
    }
}

impl Ord for DyadicRational {
    fn cmp(&self, other: &Self) -> Ordering {
        let s = self.scale.max(other.scale);
        self.numerator_at(s).cmp(&other.numerator_at(s))
    }
}

impl PartialOrd for DyadicRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for DyadicRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.scale == 0 {
            write!(f, "{}", self.numerator)
        } else {
            write!(f, "{}/2^{}", self.numerator, self.scale)
        }
    }
}

/// The half-open interval `[index·2^-scale, (index+1)·2^-scale)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicInterval {
    index: BigUint,
    scale: u64,
}

impl DyadicInterval {
    pub fn new(index: BigUint, scale: u64) -> Result<Self> {
        if index.bits() > scale {
            return Err(Error::InvalidInput(format!(
                "dyadic interval index {index} out of range for scale {scale}"
            )));
        }
        Ok(DyadicInterval { index, scale })
    }

    pub fn unit() -> Self {
        DyadicInterval {
            index: BigUint::zero(),
            scale: 0,
        }
    }

    pub fn index(&self) -> &BigUint {
        &self.index
    }

    pub fn scale(&self) -> u64 {
        self.scale
    }

    pub fn left(&self) -> DyadicRational {
        representative(self)
    }

    pub fn measure(&self) -> BigRational {
        BigRational::new(BigUint::one().into(), pow2(self.scale).into())
    }

    /// Sub-interval number `offset` after refining by `extra` bits.
    pub fn child(&self, extra: u64, offset: &BigUint) -> Result<Self> {
        if offset.bits() > extra {
            return Err(Error::InvalidInput(format!(
                "child offset {offset} exceeds 2^{extra}"
            )));
        }
        Ok(DyadicInterval {
            index: (&self.index << extra) + offset,
            scale: self.scale + extra,
        })
    }

    /// True iff `self ⊆ outer`.
    pub fn is_within(&self, outer: &DyadicInterval) -> bool {
        self.scale >= outer.scale && (&self.index >> (self.scale - outer.scale)) == outer.index
    }

    pub fn contains(&self, y: &DyadicRational) -> bool {
        let s = self.scale.max(y.scale());
        let lo = &self.index << (s - self.scale);
        let hi = (&self.index + 1u32) << (s - self.scale);
        let v = y.numerator_at(s);
        lo <= v && v < hi
    }

    /// Binary expansion of the left endpoint, `scale` bits long.
    pub fn bits(&self) -> Vec<bool> {
        (0..self.scale)
            .rev()
            .map(|i| self.index.bit(i))
            .collect()
    }
}

impl fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{0}/2^{1}, ({0}+1)/2^{1})", self.index, self.scale)
    }
}

/// The half-open base-`b` grid cell `[cell·b^-depth, (cell+1)·b^-depth)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BaseGridInterval {
    base: u64,
    cell: BigUint,
    depth: u64,
}

impl BaseGridInterval {
    pub fn new(base: u64, cell: BigUint, depth: u64) -> Result<Self> {
        check_base(base)?;
        if depth == 0 {
            return Err(Error::InvalidInput("grid depth must be positive".into()));
        }
        if cell >= big_pow(base, depth) {
            return Err(Error::InvalidInput(format!(
                "cell {cell} out of range for base {base} depth {depth}"
            )));
        }
        Ok(BaseGridInterval { base, cell, depth })
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn cell(&self) -> &BigUint {
        &self.cell
    }

    pub fn depth(&self) -> u64 {
        self.depth
    }

    pub fn left(&self) -> BigRational {
        BigRational::new(self.cell.clone().into(), big_pow(self.base, self.depth).into())
    }

    pub fn right(&self) -> BigRational {
        BigRational::new((&self.cell + 1u32).into(), big_pow(self.base, self.depth).into())
    }

    pub fn width(&self) -> BigRational {
        BigRational::new(BigUint::one().into(), big_pow(self.base, self.depth).into())
    }

    /// Base-`b` digits of the cell index, most significant first, padded to
    /// `depth` digits. These are the leading digits of every point in the cell.
    pub fn digits(&self) -> Vec<u8> {
        radix_digits(&self.cell, self.base, self.depth)
    }

    /// Smallest dyadic point of the cell at scale `bits(b^depth)`; for
    /// `b = 2` this is the exact left endpoint.
    pub fn dyadic_point(&self) -> DyadicRational {
        let bpow = big_pow(self.base, self.depth);
        let s = bpow.bits();
        let num = ceil_div(&(&self.cell << s), &bpow);
        DyadicRational::canonical(num, s)
    }

    /// A dyadic point near the middle of the cell.
    pub fn dyadic_midpoint(&self) -> DyadicRational {
        let bpow = big_pow(self.base, self.depth);
        let s = bpow.bits() + 1;
        let num = (((&self.cell << 1u32) + 1u32) << s) / (bpow << 1u32);
        DyadicRational::canonical(num, s)
    }
}

impl fmt::Display for BaseGridInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{0}/{1}^{2}, ({0}+1)/{1}^{2})",
            self.cell, self.base, self.depth
        )
    }
}

pub(crate) fn ceil_div(a: &BigUint, b: &BigUint) -> BigUint {
    let (q, r) = num_integer::Integer::div_rem(a, b);
    if r.is_zero() {
        q
    } else {
        q + 1u32
    }
}

/// `n` in base `base`, most significant digit first, left-padded to `len`.
pub(crate) fn radix_digits(n: &BigUint, base: u64, len: u64) -> Vec<u8> {
    let len = len as usize;
    let mut out = vec![0u8; len];
    if n.is_zero() {
        return out;
    }
    let raw = n.to_radix_be(base as u32);
    debug_assert!(raw.len() <= len);
    out[len - raw.len()..].copy_from_slice(&raw);
    out
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// `{b^j · x}`, exactly. The power is reduced modulo `2^scale` first, so the
/// working size is bounded by twice the scale of `x`.
pub fn frac_pow(x: &DyadicRational, b: u64, j: u64, budget: &ArithBudget) -> Result<DyadicRational> {
    check_base(b)?;
    budget.check("frac_pow working size", x.scale.saturating_mul(2))?;
    if x.is_zero() {
        return Ok(DyadicRational::zero());
    }
    let modulus = pow2(x.scale);
    let factor = BigUint::from(b).modpow(&BigUint::from(j), &modulus);
    let n = (factor * &x.numerator) % &modulus;
    Ok(DyadicRational::canonical(n, x.scale))
}

/// Whether `y` lies in the grid cell `g`, by integer cross-multiplication.
pub fn in_cell(y: &DyadicRational, g: &BaseGridInterval) -> bool {
    let lhs = big_pow(g.base, g.depth) * &y.numerator;
    let lo = &g.cell << y.scale;
    let hi = (&g.cell + 1u32) << y.scale;
    lo <= lhs && lhs < hi
}

/// Least `N` with `base^N >= 2^bits`.
pub fn least_exponent(base: &BigUint, bits: u64, budget: &ArithBudget) -> Result<u64> {
    if base < &BigUint::from(2u32) {
        return Err(Error::InvalidInput(format!("base must be at least 2, got {base}")));
    }
    if bits == 0 {
        return Ok(0);
    }
    if base.count_ones() == 1 {
        let s = base.bits() - 1;
        return Ok(bits.div_ceil(s));
    }
    budget.check("power search", bits.saturating_add(base.bits()))?;
    // X >= 2^bits  <=>  bitlen(X) > bits
    let reaches = |n: u64| Pow::pow(base, n).bits() > bits;
    let width = base.bits();
    let mut lo = bits / width;
    let mut hi = bits.div_ceil(width - 1);
    debug_assert!(!reaches(lo) && reaches(hi));
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if reaches(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `⌈2^k · log 2 / log b⌉`, i.e. the least `N` with `b^N >= 2^(2^k)`.
///
/// Power-of-two bases are answered in closed form at any `k`; other bases
/// need `2^(2^k)` in memory and fail with a cap error beyond the budget.
pub fn ceil_pow_log_ratio(k: u64, b: u64, budget: &ArithBudget) -> Result<BigUint> {
    check_base(b)?;
    if b.is_power_of_two() {
        let s = BigUint::from(b.trailing_zeros());
        return Ok(ceil_div(&pow2(k), &s));
    }
    if k >= 63 {
        return Err(Error::cap("2^(2^k) for non-power-of-two base", format!("2^{k} bits"), format!("{} bits", budget.max_bits)));
    }
    least_exponent(&BigUint::from(b), 1u64 << k, budget).map(BigUint::from)
}

/// The left endpoint of `d`, canonicalized.
pub fn representative(d: &DyadicInterval) -> DyadicRational {
    DyadicRational::canonical(d.index.clone(), d.scale)
}
