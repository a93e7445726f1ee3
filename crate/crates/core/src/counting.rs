//! Windowed counts of the orbit `({b^j x})` and exact extreme discrepancy.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{frac_pow, pow2, ArithBudget, BaseGridInterval, DyadicRational};
use crate::error::{Error, Result};

/// Point-set size above which [`discrepancy_oracle`] refuses to run.
pub const ORACLE_CAP: usize = 512;

/// The index window `M <= j < M + N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountWindow {
    pub start: u64,
    pub len: u64,
}

impl CountWindow {
    pub fn new(start: u64, len: u64) -> Self {
        CountWindow { start, len }
    }
}

/// A half-open band `[lo, hi)` with `0 <= lo < hi <= 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalBand {
    lo: BigRational,
    hi: BigRational,
}

impl RationalBand {
    pub fn new(lo: BigRational, hi: BigRational) -> Result<Self> {
        if lo.is_negative() || lo >= hi || hi > BigRational::one() {
            return Err(Error::InvalidInput(format!("band [{lo}, {hi}) is not inside [0,1]")));
        }
        Ok(RationalBand { lo, hi })
    }

    pub fn from_ratios(lo: (i64, i64), hi: (i64, i64)) -> Result<Self> {
        Self::new(
            BigRational::new(lo.0.into(), lo.1.into()),
            BigRational::new(hi.0.into(), hi.1.into()),
        )
    }

    pub fn unit() -> Self {
        RationalBand {
            lo: BigRational::zero(),
            hi: BigRational::one(),
        }
    }

    pub fn from_grid(g: &BaseGridInterval) -> Self {
        RationalBand {
            lo: g.left(),
            hi: g.right(),
        }
    }

    pub fn lo(&self) -> &BigRational {
        &self.lo
    }

    pub fn hi(&self) -> &BigRational {
        &self.hi
    }

    pub fn length(&self) -> BigRational {
        &self.hi - &self.lo
    }

    /// Membership of `num / 2^scale`, by cross-multiplication.
    fn contains_scaled(&self, num: &BigUint, scale: u64) -> bool {
        let y = BigInt::from(num.clone());
        let den = BigInt::from(pow2(scale));
        let above_lo = self.lo.numer() * &den <= &y * self.lo.denom();
        let below_hi = &y * self.hi.denom() < self.hi.numer() * &den;
        above_lo && below_hi
    }

    pub fn contains(&self, y: &DyadicRational) -> bool {
        self.contains_scaled(y.numerator(), y.scale())
    }
}

/// Numerators of `{b^j x}` for `M <= j < M + N`, all over `2^scale(x)`.
pub(crate) fn orbit_numerators(
    x: &DyadicRational,
    b: u64,
    window: CountWindow,
    budget: &ArithBudget,
) -> Result<Vec<BigUint>> {
    let scale = x.scale();
    let first = frac_pow(x, b, window.start, budget)?;
    let mask = pow2(scale) - 1u32;
    let mut y = first.numerator_at(scale);
    let mut out = Vec::with_capacity(window.len as usize);
    for _ in 0..window.len {
        out.push(y.clone());
        y = (y * b) & &mask;
    }
    Ok(out)
}

/// `({b^j x})` for `M <= j < M + N`.
pub fn orbit(x: &DyadicRational, b: u64, start: u64, len: u64, budget: &ArithBudget) -> Result<Vec<DyadicRational>> {
    let scale = x.scale();
    orbit_numerators(x, b, CountWindow::new(start, len), budget)?
        .into_iter()
        .map(|n| DyadicRational::new(n, scale))
        .collect()
}

/// `#{j in window : {b^j x} in band}`.
pub fn window_count(
    x: &DyadicRational,
    b: u64,
    window: CountWindow,
    band: &RationalBand,
    budget: &ArithBudget,
) -> Result<u64> {
    let scale = x.scale();
    let nums = orbit_numerators(x, b, window, budget)?;
    Ok(nums.iter().filter(|n| band.contains_scaled(n, scale)).count() as u64)
}

/// The counting function `F = |#{hits in window} - (hi - lo)·N|`.
pub fn big_f(
    x: &DyadicRational,
    b: u64,
    window: CountWindow,
    band: &RationalBand,
    budget: &ArithBudget,
) -> Result<BigRational> {
    if window.len == 0 {
        return Ok(BigRational::zero());
    }
    let hits = window_count(x, b, window, band, budget)?;
    let expected = band.length() * BigRational::from_integer(window.len.into());
    Ok((BigRational::from_integer(hits.into()) - expected).abs())
}

/// Checks `F(M, N, band, {b^j x}) == F(0, N, band, {b^(j+M) x})`.
pub fn shift_check(
    x: &DyadicRational,
    b: u64,
    start: u64,
    len: u64,
    band: &RationalBand,
    budget: &ArithBudget,
) -> Result<bool> {
    let direct = big_f(x, b, CountWindow::new(start, len), band, budget)?;
    let shifted = frac_pow(x, b, start, budget)?;
    let moved = big_f(&shifted, b, CountWindow::new(0, len), band, budget)?;
    Ok(direct == moved)
}

fn check_unit(r: &BigRational) -> Result<()> {
    if r.is_negative() || r >= &BigRational::one() {
        Err(Error::InvalidInput(format!("point {r} is not in [0,1)")))
    } else {
        Ok(())
    }
}

/// Rewrites rationals in `[0,1)` as integers over a common denominator.
fn common_denominator(points: &[BigRational]) -> Result<(Vec<BigUint>, BigUint)> {
    let mut den = BigInt::one();
    for p in points {
        check_unit(p)?;
        den = den.lcm(p.denom());
    }
    let nums = points
        .iter()
        .map(|p| (p.numer() * (&den / p.denom())).to_biguint().expect("nonnegative"))
        .collect();
    Ok((nums, den.to_biguint().expect("positive")))
}

/// `D_N` from sorted numerators over `den`:
/// `1/N + max_i (i/N - x_(i)) - min_i (i/N - x_(i))`, scaled by `N·den`.
fn discrepancy_from_numerators(mut nums: Vec<BigUint>, den: BigUint) -> BigRational {
    nums.sort_unstable();
    let n = BigInt::from(nums.len());
    let den = BigInt::from(den);
    let mut max: Option<BigInt> = None;
    let mut min: Option<BigInt> = None;
    let mut step = BigInt::zero();
    for p in &nums {
        step += &den;
        let v = &step - &n * BigInt::from(p.clone());
        if max.as_ref().is_none_or(|m| &v > m) {
            max = Some(v.clone());
        }
        if min.as_ref().is_none_or(|m| &v < m) {
            min = Some(v);
        }
    }
    let spread = max.expect("nonempty") - min.expect("nonempty");
    BigRational::new(&den + spread, n * den)
}

/// Exact extreme discrepancy `D_N` of a finite point set in `[0,1)`.
pub fn discrepancy_exact(points: &[BigRational]) -> Result<BigRational> {
    if points.is_empty() {
        return Err(Error::EmptyInput("discrepancy of an empty point set"));
    }
    let (nums, den) = common_denominator(points)?;
    Ok(discrepancy_from_numerators(nums, den))
}

/// [`discrepancy_exact`] for dyadic points, without any gcd work.
pub fn discrepancy_dyadic(points: &[DyadicRational]) -> Result<BigRational> {
    if points.is_empty() {
        return Err(Error::EmptyInput("discrepancy of an empty point set"));
    }
    let scale = points.iter().map(DyadicRational::scale).max().unwrap_or(0);
    let nums = points.iter().map(|p| p.numerator_at(scale)).collect();
    Ok(discrepancy_from_numerators(nums, pow2(scale)))
}

/// `D_N` of the first `len` orbit points `{b^j x}`, `j >= start`.
pub fn orbit_discrepancy(
    x: &DyadicRational,
    b: u64,
    start: u64,
    len: u64,
    budget: &ArithBudget,
) -> Result<BigRational> {
    if len == 0 {
        return Err(Error::EmptyInput("discrepancy of an empty point set"));
    }
    let nums = orbit_numerators(x, b, CountWindow::new(start, len), budget)?;
    Ok(discrepancy_from_numerators(nums, pow2(x.scale())))
}

/// Both discrepancies computed by the brute-force oracle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleDiscrepancy {
    pub extreme: BigRational,
    pub star: BigRational,
}

/// A band endpoint: a point value, or the limit just above it.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Edge {
    Zero,
    At(usize),
    Above(usize),
    One,
}

/// Evaluates the supremum over bands `[a1, a2)` by enumerating every pair of
/// endpoints taken at point values or their one-sided limits.
pub fn discrepancy_oracle_detail(points: &[BigRational], cap: usize) -> Result<OracleDiscrepancy> {
    if points.is_empty() {
        return Err(Error::EmptyInput("discrepancy of an empty point set"));
    }
    if points.len() > cap {
        return Err(Error::cap("discrepancy oracle point count", points.len(), cap));
    }
    let (mut nums, den) = common_denominator(points)?;
    nums.sort_unstable();
    let mut values: Vec<BigInt> = Vec::new();
    // below[i] = #points < values[i]; through[i] = #points <= values[i]
    let mut below = Vec::new();
    let mut through = Vec::new();
    for (i, v) in nums.iter().enumerate() {
        let v = BigInt::from(v.clone());
        if values.last() == Some(&v) {
            *through.last_mut().unwrap() = i + 1;
        } else {
            values.push(v);
            below.push(i);
            through.push(i + 1);
        }
    }
    let total = nums.len();
    let den = BigInt::from(den);
    let n = BigInt::from(total);

    let value = |e: Edge| match e {
        Edge::Zero => BigInt::zero(),
        Edge::At(i) | Edge::Above(i) => values[i].clone(),
        Edge::One => den.clone(),
    };
    // #points >= a1 (At) or > a1 (Above)
    let from = |e: Edge| match e {
        Edge::Zero => total,
        Edge::At(i) => total - below[i],
        Edge::Above(i) => total - through[i],
        Edge::One => 0,
    };
    // #points < a2 (At) or <= a2 (Above)
    let until = |e: Edge| match e {
        Edge::Zero => 0,
        Edge::At(i) => below[i],
        Edge::Above(i) => through[i],
        Edge::One => total,
    };

    let mut edges = vec![Edge::Zero];
    for i in 0..values.len() {
        edges.push(Edge::At(i));
        edges.push(Edge::Above(i));
    }
    edges.push(Edge::One);
    // Edge order equals real order once ties at equal values are broken by
    // At < Above, except that Zero/One may coincide with a point value.
    let key = |e: Edge| (value(e), matches!(e, Edge::Above(_)) as u8);

    let mut best = BigInt::zero();
    let mut best_star = BigInt::zero();
    for &a1 in &edges {
        for &a2 in &edges {
            if key(a1) >= key(a2) || a1 == Edge::One || a2 == Edge::Zero {
                continue;
            }
            // count = #[a1, a2) = from(a1) + until(a2) - total, clamped by ordering
            let count = (from(a1) + until(a2)).saturating_sub(total);
            // |count/N - length| scaled by N·den
            let dev = (BigInt::from(count) * &den - &n * (value(a2) - value(a1))).abs();
            if dev > best {
                best = dev.clone();
            }
            if a1 == Edge::Zero && dev > best_star {
                best_star = dev;
            }
        }
    }
    let scale = &n * &den;
    Ok(OracleDiscrepancy {
        extreme: BigRational::new(best, scale.clone()),
        star: BigRational::new(best_star, scale),
    })
}

/// Brute-force `D_N`, independent of the sorted-points formula.
pub fn discrepancy_oracle(points: &[BigRational]) -> Result<BigRational> {
    discrepancy_oracle_detail(points, ORACLE_CAP).map(|d| d.extreme)
}
