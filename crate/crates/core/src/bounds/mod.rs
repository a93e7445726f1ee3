//! Closed-form tail bounds, the H-threshold decision, the dyadic index
//! decomposition, the base-`b` cover of `[0, α)`, and the law-of-iterated-
//! logarithm constants.
//!
//! Bound values are returned as [`Enclosure`]s; the upper endpoint is the
//! conservative value used for every comparison against a measured quantity.

mod enclosure;

pub use enclosure::{Enclosure, Precision};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{big_pow, BaseGridInterval};
use crate::error::{Error, Result};

fn q(n: u64, d: u64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn int(n: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(n.into())
}

/// Parameters shared by the single-interval tail bounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundParams {
    pub b: u64,
    pub h: u64,
    pub n: u64,
    pub eps: BigRational,
    pub j0: u64,
    pub mu_a: BigRational,
}

impl BoundParams {
    pub fn new(b: u64, h: u64, n: u64, eps: BigRational) -> Self {
        BoundParams {
            b,
            h,
            n,
            eps,
            j0: u64::MAX,
            mu_a: BigRational::one(),
        }
    }

    pub fn with_subinterval(mut self, mu_a: BigRational, j0: u64) -> Self {
        self.mu_a = mu_a;
        self.j0 = j0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.b < 2 {
            return Err(Error::Precondition(format!("base {} < 2", self.b)));
        }
        if self.h == 0 || self.n < self.h {
            return Err(Error::Precondition(format!(
                "need N >= h >= 1, got N={}, h={}",
                self.n, self.h
            )));
        }
        if self.eps.is_negative() {
            return Err(Error::Precondition(format!("epsilon {} < 0", self.eps)));
        }
        if self.mu_a.is_negative() || self.mu_a > BigRational::one() {
            return Err(Error::Precondition(format!("mu(A) = {} not in [0,1]", self.mu_a)));
        }
        Ok(())
    }

    /// `b^-h (1 - b^-h)`, the variance of one centred grid indicator.
    pub fn variance(&self) -> BigRational {
        let cell = BigRational::new(BigInt::one(), big_pow(self.b, self.h).into());
        &cell * (BigRational::one() - &cell)
    }

    /// `2 b^-j0`; zero when `j0` is unset.
    pub fn edge_term(&self) -> BigRational {
        if self.j0 == u64::MAX {
            return BigRational::zero();
        }
        BigRational::new(2.into(), big_pow(self.b, self.j0).into())
    }
}

/// `exp(-ε² / (2σ² + (2/3) ε count^-1/2))`.
fn bernstein_tail(variance: &BigRational, eps: &BigRational, count: u64, prec: Precision) -> Enclosure {
    if eps.is_zero() {
        return Enclosure::from_int(1, prec);
    }
    let inv_sqrt = Enclosure::from_int(count as i64, prec).sqrt().recip();
    let denom = inv_sqrt
        .scale(&(q(2, 3) * eps))
        .add(&Enclosure::exact(variance * int(2), prec));
    let arg = Enclosure::exact(eps * eps, prec).div(&denom);
    arg.neg().exp()
}

/// Bernstein's inequality: `2 exp(-ε² / (2σ² + (2/3) ε n^-1/2))`.
pub fn bernstein_bound(n: u64, variance: &BigRational, eps: &BigRational, prec: Precision) -> Result<Enclosure> {
    if n == 0 {
        return Err(Error::Precondition("n must be positive".into()));
    }
    if variance.is_negative() || variance > &BigRational::one() {
        return Err(Error::Precondition(format!("variance {variance} not in [0,1]")));
    }
    if eps.is_negative() {
        return Err(Error::Precondition(format!("epsilon {eps} < 0")));
    }
    Ok(bernstein_tail(variance, eps, n, prec).scale(&int(2)))
}

/// The single-cell tail bound
/// `2h exp(-ε² / (2 b^-h (1 - b^-h) + (2/3) ε ⌊N/h⌋^-1/2))`.
pub fn lemma2_bound(p: &BoundParams, prec: Precision) -> Result<Enclosure> {
    p.validate()?;
    let tail = bernstein_tail(&p.variance(), &p.eps, p.n / p.h, prec);
    Ok(tail.scale(&int(2 * p.h)))
}

/// The same bound restricted to a subinterval `A` with the window shifted by
/// `j0`: `μ(A) · lemma2 + 2 b^-j0`.
pub fn lemma3_bound(p: &BoundParams, prec: Precision) -> Result<Enclosure> {
    let base = lemma2_bound(p, prec)?;
    Ok(base
        .scale(&p.mu_a)
        .add(&Enclosure::exact(p.edge_term(), prec)))
}

/// `(2/3) ε ⌊N/h⌋^-1/2 <= 1/(b h^5)`, decided as
/// `4 ε² b² h^10 <= 9 ⌊N/h⌋`.
pub fn eps_criterion(p: &BoundParams) -> bool {
    let lhs = int(4) * &p.eps * &p.eps * int(p.b) * int(p.b) * int(big_pow(p.h, 10));
    let rhs = int(9u64 * (p.n / p.h));
    p.h > 0 && lhs <= rhs
}

/// `μ(A) 2h exp(-ε² b h^5 / 529) + 2 b^-j0`, valid when [`eps_criterion`] holds.
pub fn corollary_bound(p: &BoundParams, prec: Precision) -> Result<Enclosure> {
    p.validate()?;
    if !eps_criterion(p) {
        return Err(Error::CriterionViolated(format!(
            "(2/3)·{}·⌊{}/{}⌋^(-1/2) > 1/({}·{}^5)",
            p.eps, p.n, p.h, p.b, p.h
        )));
    }
    let arg = &p.eps * &p.eps * int(p.b) * int(big_pow(p.h, 5)) / int(529);
    let tail = Enclosure::exact(-arg, prec).exp();
    Ok(tail
        .scale(&(int(2 * p.h) * &p.mu_a))
        .add(&Enclosure::exact(p.edge_term(), prec)))
}

/// Checks `2^(-h+2) <= 528 h^-5`, i.e. `4 h^5 <= 528 · 2^h`, for `1 <= h <= hmax`.
pub fn numeric_check_528(hmax: u64) -> bool {
    (1..=hmax).all(|h| BigUint::from(4u32) * big_pow(h, 5) <= BigUint::from(528u32) << h)
}

/// The H-set membership test
/// `F > c · 2^((ℓ-1)/2) · h^(-3/2) · (n - ℓ + 1)^(1/2)` with
/// `F = |count · b^h - 2^(ℓ-1)| / b^h`, decided by squaring both sides.
#[allow(clippy::too_many_arguments)]
pub fn h_threshold_exceeded(
    count: u64,
    b: u64,
    h: u64,
    ell: u64,
    n: u64,
    c_num: u64,
    c_den: u64,
) -> bool {
    assert!(ell >= 1 && ell <= n && c_den > 0 && h >= 1, "bad threshold arguments");
    let bh = BigInt::from(big_pow(b, h));
    let half_window = BigInt::one() << (ell - 1);
    let dev = BigInt::from(count) * &bh - &half_window;
    let lhs = &dev * &dev * BigInt::from(big_pow(h, 3)) * BigInt::from(c_den) * BigInt::from(c_den);
    let rhs = BigInt::from(c_num) * BigInt::from(c_num) * half_window * BigInt::from(n - ell + 1) * &bh * &bh;
    lhs > rhs
}

/// The same test stated on `F` itself:
/// `F² h³ c_den² > c_num² 2^(ℓ-1) (n - ℓ + 1)`.
pub fn h_threshold_exceeded_f(f: &BigRational, h: u64, ell: u64, n: u64, c_num: u64, c_den: u64) -> bool {
    assert!(ell >= 1 && ell <= n && c_den > 0 && h >= 1, "bad threshold arguments");
    let lhs = f * f * int(big_pow(h, 3)) * int(c_den) * int(c_den);
    let rhs = int(c_num) * int(c_num) * int(BigInt::one() << (ell - 1)) * int(n - ell + 1);
    lhs > rhs
}

/// `[offset·2^level, offset·2^level + 2^(level-1))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicBlock {
    pub level: u32,
    pub offset: u64,
    /// False for the `m = 0` placeholder at an unset binary digit.
    pub active: bool,
}

impl DyadicBlock {
    pub fn start(&self) -> u64 {
        self.offset << self.level
    }

    pub fn len(&self) -> u64 {
        1 << (self.level - 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn end(&self) -> u64 {
        self.start() + self.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhilippDecomposition {
    pub total: u64,
    /// `2^(n-1) < N <= 2^n`.
    pub n: u32,
    /// One block per level `1..=bitlen(N)`, highest level first.
    pub blocks: Vec<DyadicBlock>,
}

impl PhilippDecomposition {
    pub fn active(&self) -> impl Iterator<Item = &DyadicBlock> {
        self.blocks.iter().filter(|b| b.active)
    }

    /// Length of `[0, N)` not covered by active blocks with level `>= min_level`.
    pub fn uncovered_suffix(&self, min_level: u32) -> u64 {
        let covered: u64 = self
            .active()
            .filter(|b| b.level >= min_level)
            .map(DyadicBlock::len)
            .sum();
        self.total - covered
    }
}

/// Splits `[0, N)` along the binary digits of `N`: the set digit at level
/// `ℓ` contributes the block starting at the sum of the higher set digits.
pub fn philipp_decompose(total: u64) -> Result<PhilippDecomposition> {
    if total == 0 {
        return Err(Error::InvalidInput("N must be positive".into()));
    }
    let n = u64::BITS - (total - 1).leading_zeros();
    let top = u64::BITS - total.leading_zeros();
    let mut blocks = Vec::with_capacity(top as usize);
    let mut higher = 0u64;
    for level in (1..=top).rev() {
        let digit = total >> (level - 1) & 1;
        if digit == 1 {
            blocks.push(DyadicBlock {
                level,
                offset: higher >> level,
                active: true,
            });
            higher += 1 << (level - 1);
        } else {
            blocks.push(DyadicBlock {
                level,
                offset: 0,
                active: false,
            });
        }
    }
    Ok(PhilippDecomposition { total, n, blocks })
}

/// Grid cells tiling `[0, α)` up to depth `kmax`, read off the base-`b`
/// digits of `α`, plus the depth-`kmax` cell containing `α` when `α` is not
/// on the grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlphaCover {
    pub cells: Vec<BaseGridInterval>,
    pub residual: Option<BaseGridInterval>,
}

pub fn alpha_cover(alpha: &BigRational, b: u64, kmax: u64) -> Result<AlphaCover> {
    if !alpha.is_positive() || alpha >= &BigRational::one() {
        return Err(Error::InvalidInput(format!("alpha {alpha} not in (0,1)")));
    }
    if b < 2 || kmax == 0 {
        return Err(Error::InvalidInput("need b >= 2 and kmax >= 1".into()));
    }
    let mut frac = alpha.clone();
    let mut prefix = BigUint::zero();
    let mut cells = Vec::new();
    for depth in 1..=kmax {
        frac *= int(b);
        let digit = frac.floor().to_integer();
        frac -= BigRational::from_integer(digit.clone());
        let digit = digit.to_u64().expect("digit below base");
        let base_idx = &prefix * b;
        for t in 0..digit {
            cells.push(BaseGridInterval::new(b, &base_idx + t, depth)?);
        }
        prefix = base_idx + digit;
    }
    let residual = if frac.is_zero() {
        None
    } else {
        Some(BaseGridInterval::new(b, prefix, kmax)?)
    };
    Ok(AlphaCover { cells, residual })
}

/// The almost-everywhere limsup constant `C_θ` for integer `θ >= 2`.
pub fn fukuyama_constant(theta: u64) -> Result<f64> {
    if theta < 2 {
        return Err(Error::InvalidInput(format!("theta must be >= 2, got {theta}")));
    }
    let t = theta as f64;
    Ok(if theta == 2 {
        84f64.sqrt() / 9.0
    } else if theta % 2 == 1 {
        ((t + 1.0) / (2.0 * (t - 1.0))).sqrt()
    } else {
        ((t + 1.0) * t * (t - 2.0) / (2.0 * (t - 1.0).powi(3))).sqrt()
    })
}

/// The four contributions to the final discrepancy constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainConstant {
    pub base: u64,
    /// Initial segment, dyadic blocks, last partial block, guard indices.
    pub addends: [u64; 4],
}

impl ChainConstant {
    pub fn per_base(&self) -> u64 {
        self.addends.iter().sum()
    }

    pub fn value(&self) -> u64 {
        self.per_base() * self.base
    }
}

/// `C_b = (2 + 2425 + 1005 + 1) · b`.
pub fn chain_constant(b: u64) -> Result<ChainConstant> {
    if b < 2 {
        return Err(Error::InvalidInput(format!("base must be >= 2, got {b}")));
    }
    Ok(ChainConstant {
        base: b,
        addends: [2, 2425, 1005, 1],
    })
}
