//! Outward-rounded interval arithmetic on dyadic endpoints.
//!
//! Only what the tail bounds need: field operations, square roots and the
//! exponential. Every endpoint is rounded away from the true value, so the
//! true result always lies in `[lo, hi]`.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::pow2;

/// Significant bits kept on each endpoint (fractional bits for values `>= 1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Precision(pub u32);

impl Default for Precision {
    fn default() -> Self {
        Precision(128)
    }
}

fn floor_scaled(r: &BigRational, bits: u64) -> BigInt {
    let scaled = r * BigRational::from_integer(pow2(bits).into());
    scaled.floor().to_integer()
}

fn ceil_scaled(r: &BigRational, bits: u64) -> BigInt {
    let scaled = r * BigRational::from_integer(pow2(bits).into());
    scaled.ceil().to_integer()
}

fn from_scaled(v: BigInt, bits: u64) -> BigRational {
    BigRational::new(v, pow2(bits).into())
}

/// Fractional bits needed to keep `p` significant bits of `r`.
fn scale_for(r: &BigRational, p: Precision) -> u64 {
    let mag = r.numer().bits() as i64 - r.denom().bits() as i64;
    (p.0 as i64 - mag.min(0)) as u64
}

fn is_dyadic_within(r: &BigRational, bits: u64) -> bool {
    r.denom().bits() <= bits + 1 && r.denom().magnitude().count_ones() == 1
}

pub(crate) fn round_down(r: &BigRational, p: Precision) -> BigRational {
    let bits = scale_for(r, p);
    if r.is_zero() || is_dyadic_within(r, bits) {
        return r.clone();
    }
    from_scaled(floor_scaled(r, bits), bits)
}

pub(crate) fn round_up(r: &BigRational, p: Precision) -> BigRational {
    let bits = scale_for(r, p);
    if r.is_zero() || is_dyadic_within(r, bits) {
        return r.clone();
    }
    from_scaled(ceil_scaled(r, bits), bits)
}

fn to_biguint(v: BigInt) -> BigUint {
    v.to_biguint().expect("nonnegative")
}

/// `floor(sqrt(r))` and `ceil(sqrt(r))` at `p` fractional bits, `r >= 0`.
fn sqrt_bounds(r: &BigRational, p: Precision) -> (BigRational, BigRational) {
    let bits = 2 * p.0 as u64;
    let lo = to_biguint(floor_scaled(r, bits)).sqrt();
    let hi_sq = to_biguint(ceil_scaled(r, bits));
    let mut hi = hi_sq.sqrt();
    if &hi * &hi < hi_sq {
        hi += 1u32;
    }
    (
        from_scaled(lo.into(), p.0 as u64),
        from_scaled(hi.into(), p.0 as u64),
    )
}

/// Fixed-point `exp(t)` for `0 <= t <= 1/2`, `t = num / 2^w`, returned as
/// `(lo, hi)` numerators over `2^w`.
fn exp_small(t_lo: &BigUint, t_hi: &BigUint, w: u64) -> (BigUint, BigUint) {
    let one = pow2(w);
    let mut sum_lo = one.clone();
    let mut sum_hi = one.clone();
    let mut term_lo = one.clone();
    let mut term_hi = one.clone();
    let mut i = 1u32;
    loop {
        term_lo = (&term_lo * t_lo >> w) / i;
        let prod = &term_hi * t_hi;
        term_hi = ceil_shift(&prod, w);
        term_hi = (&term_hi + (i - 1)) / i;
        sum_lo += &term_lo;
        sum_hi += &term_hi;
        i += 1;
        if term_hi <= BigUint::one() {
            break;
        }
    }
    // With t <= 1/2 the untaken tail is at most the last term.
    sum_hi += &term_hi;
    (sum_lo, sum_hi)
}

fn ceil_shift(v: &BigUint, w: u64) -> BigUint {
    let q = v >> w;
    if (&q << w) == *v {
        q
    } else {
        q + 1u32
    }
}

/// Lower and upper bounds on `exp(x)` at precision `p`.
fn exp_bounds(x: &BigRational, p: Precision) -> (BigRational, BigRational) {
    if x.is_negative() {
        let (lo, hi) = exp_bounds(&-x, p);
        let one = BigRational::one();
        return (round_down(&(&one / hi), p), round_up(&(&one / lo), p));
    }
    if x.is_zero() {
        return (BigRational::one(), BigRational::one());
    }
    // t = x / 2^r <= 1/2
    let int_bits = x.ceil().to_integer().bits();
    let r = int_bits + 1;
    let w = p.0 as u64 + r + 48;
    let t = x / BigRational::from_integer(pow2(r).into());
    let t_lo = to_biguint(floor_scaled(&t, w));
    let t_hi = to_biguint(ceil_scaled(&t, w));
    let (mut lo, mut hi) = exp_small(&t_lo, &t_hi, w);
    for _ in 0..r {
        lo = (&lo * &lo) >> w;
        hi = ceil_shift(&(&hi * &hi), w);
    }
    let lo = from_scaled(lo.into(), w);
    let hi = from_scaled(hi.into(), w);
    (round_down(&lo, p), round_up(&hi, p))
}

/// A closed interval `[lo, hi]` known to contain a real value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Enclosure {
    lo: BigRational,
    hi: BigRational,
    prec: Precision,
}

impl Enclosure {
    pub fn exact(v: BigRational, prec: Precision) -> Self {
        Enclosure {
            lo: v.clone(),
            hi: v,
            prec,
        }
    }

    pub fn from_int(v: i64, prec: Precision) -> Self {
        Self::exact(BigRational::from_integer(v.into()), prec)
    }

    pub fn lower(&self) -> &BigRational {
        &self.lo
    }

    /// The conservative (upward-rounded) value of the bound.
    pub fn upper(&self) -> &BigRational {
        &self.hi
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn precision(&self) -> Precision {
        self.prec
    }

    /// An `f64` that is `>=` the upper endpoint.
    pub fn to_f64_up(&self) -> f64 {
        let f = self.hi.to_f64().unwrap_or(f64::INFINITY);
        match BigRational::from_float(f) {
            Some(back) if back < self.hi => f.next_up(),
            _ => f,
        }
    }

    pub fn to_f64(&self) -> f64 {
        ((&self.lo + &self.hi) / BigRational::from_integer(2.into()))
            .to_f64()
            .unwrap_or(f64::NAN)
    }

    fn make(lo: BigRational, hi: BigRational, prec: Precision) -> Self {
        Enclosure {
            lo: round_down(&lo, prec),
            hi: round_up(&hi, prec),
            prec,
        }
    }

    pub fn add(&self, o: &Enclosure) -> Self {
        Self::make(&self.lo + &o.lo, &self.hi + &o.hi, self.prec)
    }

    pub fn neg(&self) -> Self {
        Enclosure {
            lo: -&self.hi,
            hi: -&self.lo,
            prec: self.prec,
        }
    }

    pub fn sub(&self, o: &Enclosure) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Enclosure) -> Self {
        let products = [
            &self.lo * &o.lo,
            &self.lo * &o.hi,
            &self.hi * &o.lo,
            &self.hi * &o.hi,
        ];
        let lo = products.iter().min().cloned().expect("four products");
        let hi = products.iter().max().cloned().expect("four products");
        Self::make(lo, hi, self.prec)
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        self.mul(&Enclosure::exact(r.clone(), self.prec))
    }

    /// Reciprocal of an interval that excludes zero.
    pub fn recip(&self) -> Self {
        assert!(
            self.lo.is_positive() || self.hi.is_negative(),
            "reciprocal of an interval containing zero"
        );
        let one = BigRational::one();
        Self::make(&one / &self.hi, &one / &self.lo, self.prec)
    }

    pub fn div(&self, o: &Enclosure) -> Self {
        self.mul(&o.recip())
    }

    pub fn sqrt(&self) -> Self {
        assert!(!self.lo.is_negative(), "sqrt of a negative interval");
        let (lo, _) = sqrt_bounds(&self.lo, self.prec);
        let (_, hi) = sqrt_bounds(&self.hi, self.prec);
        Enclosure {
            lo,
            hi,
            prec: self.prec,
        }
    }

    pub fn exp(&self) -> Self {
        let (lo, _) = exp_bounds(&self.lo, self.prec);
        let (_, hi) = exp_bounds(&self.hi, self.prec);
        Enclosure {
            lo,
            hi,
            prec: self.prec,
        }
    }

    /// Certainly `<=` another enclosure (every point of self below every point of `o`).
    pub fn certainly_le(&self, o: &Enclosure) -> bool {
        self.hi <= o.lo
    }
}

impl fmt::Display for Enclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.12e}", self.to_f64())
    }
}
