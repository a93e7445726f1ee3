//! Numerical checks of the tail bounds, the bad-set geometry and the
//! discrepancy of constructed prefixes.
//!
//! Event measures are computed exactly by enumerating base-`b` cells deep
//! enough that the counting function is constant on each. Monte Carlo is
//! used only for the iterated-logarithm comparison.

use std::time::Instant;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::arith::{big_pow, pow2, rational_to_f64, ArithBudget, DyadicInterval, DyadicRational};
use crate::bounds::{
    chain_constant, corollary_bound, eps_criterion, fukuyama_constant, lemma2_bound, lemma3_bound,
    numeric_check_528, BoundParams, Enclosure, Precision,
};
use crate::construction::{bad_cells, construct_until, ConstructOptions};
use crate::counting::{discrepancy_exact, orbit_discrepancy};
use crate::error::{Error, Result};
use crate::schedule::{to_u64, Schedule};

/// Most cells any exact enumeration may visit.
pub const ENUM_CAP: u64 = 1 << 24;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn int(n: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(n.into())
}

/// Exceedance threshold for the counting function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Threshold {
    Rational(BigRational),
    /// `ε √(hN)`, compared by squaring.
    EpsSqrtHN(BigRational),
}

impl Threshold {
    fn exceeded(&self, f: &BigRational, h: u64, n: u64) -> bool {
        match self {
            Threshold::Rational(t) => f > t,
            Threshold::EpsSqrtHN(eps) => eps.is_negative() || f * f > eps * eps * int(h * n),
        }
    }
}

/// Parameters of one event: `F(start, n, [a b^-h, (a+1) b^-h)) > threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub b: u64,
    pub h: u64,
    pub n: u64,
    pub start: u64,
}

impl Event {
    fn depth(&self) -> u64 {
        self.start + self.n + self.h
    }
}

/// Base-`b` odometer over cell digits.
struct Odometer {
    b: u8,
    digits: Vec<u8>,
}

impl Odometer {
    fn at(b: u64, depth: u64, cell: &BigUint) -> Self {
        Odometer {
            b: b as u8,
            digits: crate::arith::radix_digits(cell, b, depth),
        }
    }

    fn advance(&mut self) {
        for d in self.digits.iter_mut().rev() {
            *d += 1;
            if *d < self.b {
                return;
            }
            *d = 0;
        }
    }
}

/// Measures of `{x ∈ band : F > threshold}` for every `a` and every
/// threshold, indexed `[threshold][a]`.
pub fn event_measures(
    ev: Event,
    thresholds: &[Threshold],
    band: (&BigRational, &BigRational),
) -> Result<Vec<Vec<BigRational>>> {
    if ev.b < 2 || ev.b > 255 || ev.h == 0 {
        return Err(Error::InvalidInput(format!("need 2 <= b <= 255, h >= 1, got b={}, h={}", ev.b, ev.h)));
    }
    let depth = ev.depth();
    let total = big_pow(ev.b, depth);
    let lo_cell = (band.0 * int(total.clone())).floor().to_integer();
    let hi_cell = (band.1 * int(total.clone())).ceil().to_integer();
    let span = (&hi_cell - &lo_cell).to_u64().unwrap_or(u64::MAX);
    if span > ENUM_CAP {
        return Err(Error::cap("event enumeration cells", span, ENUM_CAP));
    }
    let words = big_pow(ev.b, ev.h)
        .to_usize()
        .filter(|&w| w <= 1 << 16)
        .ok_or_else(|| Error::cap("b^h", format!("{}^{}", ev.b, ev.h), 1 << 16))?;
    let width = BigRational::new(BigInt::one(), BigInt::from(total));
    let expected = BigRational::new(BigInt::from(ev.n), BigInt::from(words));
    // exceed[t][a][count] decided once per count value
    let table: Vec<Vec<bool>> = thresholds
        .iter()
        .map(|t| {
            (0..=ev.n)
                .map(|c| t.exceeded(&(int(c) - &expected).abs(), ev.h, ev.n))
                .collect()
        })
        .collect();
    let mut full = vec![vec![0u64; words]; thresholds.len()];
    let mut partial = vec![vec![BigRational::zero(); words]; thresholds.len()];
    let mut odo = Odometer::at(ev.b, depth, &lo_cell.to_biguint().expect("nonnegative"));
    let mut counts = vec![0u64; words];
    for i in 0..span {
        counts.iter_mut().for_each(|c| *c = 0);
        for j in ev.start..ev.start + ev.n {
            let w = odo.digits[j as usize..(j + ev.h) as usize]
                .iter()
                .fold(0usize, |acc, &d| acc * ev.b as usize + d as usize);
            counts[w] += 1;
        }
        // The end cells may stick out of the band.
        let weight = if i == 0 || i + 1 == span {
            let left = int(&lo_cell + BigInt::from(i)) * &width;
            let right = &left + &width;
            let l = if &left > band.0 { left } else { band.0.clone() };
            let r = if &right < band.1 { right } else { band.1.clone() };
            Some(if r > l { r - l } else { BigRational::zero() })
        } else {
            None
        };
        for (t, row) in table.iter().enumerate() {
            for (a, &c) in counts.iter().enumerate() {
                if row[c as usize] {
                    match &weight {
                        Some(w) => partial[t][a] += w,
                        None => full[t][a] += 1,
                    }
                }
            }
        }
        odo.advance();
    }
    Ok(full
        .into_iter()
        .zip(partial)
        .map(|(f, p)| {
            f.into_iter()
                .zip(p)
                .map(|(n, w)| int(n) * &width + w)
                .collect()
        })
        .collect())
}

/// `μ{x ∈ [0,1) : F(M, N, [a b^-h, (a+1) b^-h), {b^j x}) > threshold}`.
pub fn exact_event_measure(b: u64, h: u64, n: u64, m: u64, a: u64, threshold: &Threshold) -> Result<BigRational> {
    if BigUint::from(a) >= big_pow(b, h) {
        return Err(Error::InvalidInput(format!("a={a} >= b^h")));
    }
    let ev = Event { b, h, n, start: m };
    let all = event_measures(ev, std::slice::from_ref(threshold), (&BigRational::zero(), &BigRational::one()))?;
    Ok(all[0][a as usize].clone())
}

/// The same measure restricted to `[lo, hi)`, with the window shifted by `j0`.
#[allow(clippy::too_many_arguments)]
pub fn exact_event_measure_within(
    b: u64,
    h: u64,
    n: u64,
    m: u64,
    j0: u64,
    a: u64,
    threshold: &Threshold,
    band: (&BigRational, &BigRational),
) -> Result<BigRational> {
    let ev = Event { b, h, n, start: m + j0 };
    let all = event_measures(ev, std::slice::from_ref(threshold), band)?;
    all[0]
        .get(a as usize)
        .cloned()
        .ok_or_else(|| Error::InvalidInput(format!("a={a} >= b^h")))
}

/// Parameter grid for the bound sweeps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub bases: Vec<u64>,
    pub hs: Vec<u64>,
    pub ns: Vec<u64>,
    pub ms: Vec<u64>,
    /// `(num, den)` pairs.
    pub eps: Vec<(i64, i64)>,
    pub j0s: Vec<u64>,
    /// Subinterval `A` as `((num, den), (num, den))`; the unit interval when absent.
    pub band: Option<((i64, i64), (i64, i64))>,
    pub hmax: u64,
}

impl SweepGrid {
    pub fn lemma2_default() -> Self {
        SweepGrid {
            bases: vec![2],
            hs: vec![1, 2],
            ns: vec![4, 8],
            ms: vec![0, 2],
            eps: vec![(1, 2), (1, 1), (2, 1)],
            j0s: vec![],
            band: None,
            hmax: 64,
        }
    }

    pub fn lemma3_default() -> Self {
        SweepGrid {
            j0s: vec![2, 4],
            band: Some(((1, 4), (1, 2))),
            ..Self::lemma2_default()
        }
    }

    fn band(&self) -> (BigRational, BigRational) {
        match self.band {
            Some(((a, b), (c, d))) => (q(a, b), q(c, d)),
            None => (BigRational::zero(), BigRational::one()),
        }
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.band();
        if lo.is_negative() || hi > BigRational::one() || lo >= hi {
            return Err(Error::InvalidInput(format!("band [{lo}, {hi}) is not a subinterval of [0,1)")));
        }
        if self.eps.iter().any(|&(_, d)| d <= 0) {
            return Err(Error::InvalidInput("epsilon denominators must be positive".into()));
        }
        Ok(())
    }

    /// `(b, h, N, M, ε)` in sorted order, skipping `N < h`.
    fn tuples(&self) -> Vec<(u64, u64, u64, u64, (i64, i64))> {
        let mut out = Vec::new();
        for &b in &self.bases {
            for &h in &self.hs {
                for &n in &self.ns {
                    if n < h {
                        continue;
                    }
                    for &m in &self.ms {
                        for &e in &self.eps {
                            out.push((b, h, n, m, e));
                        }
                    }
                }
            }
        }
        out
    }
}

/// One checked inequality `measure <= bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TupleResult {
    pub params: Value,
    /// Exact value when available, as `p/q`.
    pub measure: String,
    pub measure_f64: f64,
    /// Upward-rounded bound.
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
    #[serde(default)]
    pub skipped: bool,
}

impl TupleResult {
    fn exact(params: Value, measure: &BigRational, bound: &BigRational) -> Self {
        let m = rational_to_f64(measure);
        let b = rational_to_f64(bound);
        TupleResult {
            params,
            measure: measure.to_string(),
            measure_f64: m,
            bound: b,
            slack: b - m,
            pass: measure <= bound,
            skipped: false,
        }
    }

    fn check(params: Value, ok: bool, value: f64, bound: f64) -> Self {
        TupleResult {
            params,
            measure: format!("{value}"),
            measure_f64: value,
            bound,
            slack: bound - value,
            pass: ok,
            skipped: false,
        }
    }

    fn skip(params: Value) -> Self {
        TupleResult {
            params,
            measure: String::new(),
            measure_f64: 0.0,
            bound: 0.0,
            slack: 0.0,
            pass: true,
            skipped: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub suite: String,
    pub seed: Option<u64>,
    pub tuples: Vec<TupleResult>,
    pub aggregate_pass: bool,
    pub runtime_ms: u64,
    #[serde(default)]
    pub summary: Value,
}

impl VerificationReport {
    fn finish(suite: &str, seed: Option<u64>, tuples: Vec<TupleResult>, summary: Value, started: Instant) -> Self {
        VerificationReport {
            suite: suite.into(),
            seed,
            aggregate_pass: tuples.iter().all(|t| t.pass),
            tuples,
            runtime_ms: started.elapsed().as_millis() as u64,
            summary,
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &TupleResult> {
        self.tuples.iter().filter(|t| !t.pass)
    }

    /// The report without its wall-clock field, for reproducibility checks.
    pub fn without_runtime(&self) -> Self {
        VerificationReport {
            runtime_ms: 0,
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn eps_of(e: (i64, i64)) -> BigRational {
    q(e.0, e.1)
}

/// Exact event measure against the single-cell tail bound, for every grid
/// tuple and every `a`. With a band or shifts in the grid, the restricted
/// bound is used instead.
pub fn sweep_lemma2(grid: &SweepGrid, prec: Precision) -> Result<VerificationReport> {
    let started = Instant::now();
    grid.validate()?;
    let (lo, hi) = grid.band();
    let restricted = grid.band.is_some() || !grid.j0s.is_empty();
    let j0s: Vec<Option<u64>> = if grid.j0s.is_empty() {
        vec![None]
    } else {
        grid.j0s.iter().copied().map(Some).collect()
    };
    let mut tuples = Vec::new();
    for (b, h, n, m, e) in grid.tuples() {
        let eps = eps_of(e);
        for &j0 in &j0s {
            let ev = Event {
                b,
                h,
                n,
                start: m + j0.unwrap_or(0),
            };
            let measures = event_measures(ev, &[Threshold::EpsSqrtHN(eps.clone())], (&lo, &hi))?;
            let mut p = BoundParams::new(b, h, n, eps.clone());
            let bound = if restricted {
                p = p.with_subinterval(&hi - &lo, j0.unwrap_or(u64::MAX));
                lemma3_bound(&p, prec)?
            } else {
                lemma2_bound(&p, prec)?
            };
            for (a, measure) in measures[0].iter().enumerate() {
                let params = json!({
                    "b": b, "h": h, "N": n, "M": m, "eps": eps.to_string(), "a": a,
                    "j0": j0, "A": [lo.to_string(), hi.to_string()],
                });
                tuples.push(TupleResult::exact(params, measure, bound.upper()));
            }
        }
    }
    let suite = if restricted { "lemma3" } else { "lemma2" };
    Ok(VerificationReport::finish(suite, None, tuples, json!({}), started))
}

/// Checks the corollary: its bound dominates the restricted bound wherever
/// the accuracy criterion holds, the variance step
/// `2 b^-h (1 - b^-h) <= 2 b^-h <= 528 b^-1 h^-5` holds, and
/// `4 h^5 <= 528·2^h` up to `hmax`.
pub fn sweep_corollary(grid: &SweepGrid, prec: Precision) -> Result<VerificationReport> {
    let started = Instant::now();
    grid.validate()?;
    let (lo, hi) = grid.band();
    let j0s: Vec<u64> = if grid.j0s.is_empty() { vec![u64::MAX] } else { grid.j0s.clone() };
    let mut tuples = Vec::new();
    let mut skipped = 0;
    for (b, h, n, _m, e) in grid.tuples() {
        let eps = eps_of(e);
        for &j0 in &j0s {
            let p = BoundParams::new(b, h, n, eps.clone()).with_subinterval(&hi - &lo, j0);
            let params = json!({
                "check": "corollary_vs_lemma3", "b": b, "h": h, "N": n, "eps": eps.to_string(),
                "j0": (j0 != u64::MAX).then_some(j0), "A": [lo.to_string(), hi.to_string()],
            });
            if !eps_criterion(&p) {
                skipped += 1;
                tuples.push(TupleResult::skip(params));
                continue;
            }
            let cor = corollary_bound(&p, prec)?;
            let l3 = lemma3_bound(&p, prec)?;
            tuples.push(TupleResult {
                pass: l3.upper() <= cor.lower(),
                ..TupleResult::exact(params, l3.upper(), cor.lower())
            });
        }
        let cell = BigRational::new(BigInt::one(), BigInt::from(big_pow(b, h)));
        let var2 = int(2) * &cell * (BigRational::one() - &cell);
        let two_cell = int(2) * &cell;
        let cap = BigRational::new(528.into(), BigInt::from(b) * BigInt::from(big_pow(h, 5)));
        let params = json!({"check": "variance_chain", "b": b, "h": h});
        tuples.push(TupleResult {
            pass: var2 <= two_cell && two_cell <= cap,
            ..TupleResult::exact(params, &var2, &cap)
        });
    }
    tuples.dedup_by(|a, b| a.params == b.params);
    let ok528 = numeric_check_528(grid.hmax);
    tuples.push(TupleResult::check(
        json!({"check": "numeric_528", "hmax": grid.hmax}),
        ok528,
        0.0,
        0.0,
    ));
    let summary = json!({"skipped_by_criterion": skipped});
    Ok(VerificationReport::finish("corollary", None, tuples, summary, started))
}

fn upper_f64(e: &Enclosure) -> f64 {
    e.to_f64_up()
}

/// The auxiliary numeric facts behind the measure budget, for bases
/// `2..=kref` at reference step `kref`.
pub fn series_checks(kref: u64, prec: Precision) -> Vec<TupleResult> {
    let mut out = Vec::new();
    let one = Enclosure::from_int(1, prec);
    let exp_neg = |x: BigRational| Enclosure::exact(-x, prec).exp();
    let geometric_h = |qv: &Enclosure| {
        // Σ_{h>=1} 2h q^h = 2q / (1-q)^2
        let d = one.sub(qv);
        qv.scale(&int(2)).div(&d.mul(&d))
    };

    // Σ 2h e^{-1.3h} <= 11/10
    let s = geometric_h(&exp_neg(q(13, 10)));
    out.push(TupleResult::check(
        json!({"check": "sum_2h_exp(-1.3h)"}),
        s.upper() <= &q(11, 10),
        upper_f64(&s),
        1.1,
    ));
    // Σ e^{-r} <= 6/10
    let e1 = exp_neg(int(1));
    let s = e1.div(&one.sub(&e1));
    out.push(TupleResult::check(
        json!({"check": "sum_exp(-r)"}),
        s.upper() <= &q(6, 10),
        upper_f64(&s),
        0.6,
    ));
    // 11/10 · 6/10 <= 7/10
    out.push(TupleResult::exact(
        json!({"check": "product_7_10"}),
        &(q(11, 10) * q(6, 10)),
        &q(7, 10),
    ));
    // 1 - 11/10 Σ_{b=2}^{k} 2^-b >= 9/20
    let tail: BigRational = (2..=kref).map(|b| BigRational::new(BigInt::one(), BigInt::from(pow2(b)))).sum();
    let good = BigRational::one() - q(11, 10) * tail;
    out.push(TupleResult {
        pass: good >= q(9, 20),
        ..TupleResult::exact(json!({"check": "good_fraction_9_20", "k": kref}), &q(9, 20), &good)
    });
    // (x-1)(y-1) >= 1 gives e^{-xy} <= e^{-x} e^{-y} for x, y >= 2
    let mut ok = true;
    for xi in 4..=40i64 {
        for yi in 4..=40i64 {
            let (x, y) = (q(xi, 2), q(yi, 2));
            ok &= &x * &y >= &x + &y;
        }
    }
    out.push(TupleResult::check(json!({"check": "exp_product_grid", "range": "[2,20] step 1/2"}), ok, 0.0, 0.0));
    for b in 2..=kref {
        // b - log b >= 1.3  <=>  e^{b - 1.3} >= b
        let lhs = Enclosure::exact(int(b) - q(13, 10), prec).exp();
        out.push(TupleResult::check(
            json!({"check": "b_minus_log_b", "b": b}),
            lhs.lower() >= &int(b),
            b as f64,
            lhs.to_f64(),
        ));
        // Σ 2h b^h e^{-2bh} <= 11/10 e^{-b}
        let qb = exp_neg(int(2 * b)).scale(&int(b));
        let s = geometric_h(&qb);
        let cap = exp_neg(int(b)).scale(&q(11, 10));
        out.push(TupleResult::check(
            json!({"check": "h_series", "b": b}),
            s.upper() <= cap.lower(),
            upper_f64(&s),
            cap.to_f64(),
        ));
        // (k/2+1) b^{k/2+1} k 2^k 2 b^{-3k+1} <= b^{-k}/10, scaled by 10 b^{3k}
        let half = kref.div_ceil(2);
        let lhs = BigUint::from(20u32) * (half + 1) * big_pow(b, half + 2) * kref * pow2(kref);
        let rhs = big_pow(b, 2 * kref);
        out.push(TupleResult::check(
            json!({"check": "edge_terms", "b": b, "k": kref}),
            lhs <= rhs,
            0.0,
            0.0,
        ));
        // 7/10 e^{-b} + 1/10 b^{-k} <= 2^{-b}
        let total = exp_neg(int(b))
            .scale(&q(7, 10))
            .add(&Enclosure::exact(BigRational::new(1.into(), BigInt::from(big_pow(b, kref)) * 10), prec));
        let target = BigRational::new(1.into(), BigInt::from(pow2(b)));
        out.push(TupleResult::check(
            json!({"check": "final_budget", "b": b, "k": kref}),
            total.upper() <= &target,
            upper_f64(&total),
            rational_to_f64(&target),
        ));
    }
    out
}

/// `μ(H_{b,k} ∩ Ω_{k-1})` for one base, with its bad-cell count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HMeasure {
    pub b: u64,
    pub depth: u64,
    pub measure: BigRational,
    pub bad_cells: u64,
    /// Candidates at `R(k)` meeting `H`, inside `Ω_{k-1}`.
    pub cover: u64,
    pub resolution: u64,
}

impl HMeasure {
    pub fn cover_measure(&self) -> BigRational {
        BigRational::new(self.cover.into(), BigInt::from(pow2(self.resolution)))
    }
}

fn omega_before(s: &Schedule, k: u64, opts: &ConstructOptions) -> Result<DyadicInterval> {
    if k < s.k0 || k > s.kmax {
        return Err(Error::OutOfRange { b: 2, k });
    }
    Ok(construct_until(s, k - 1, opts)?.omega)
}

pub fn h_measure(s: &Schedule, b: u64, k: u64, omega: &DyadicInterval, budget: &ArithBudget) -> Result<HMeasure> {
    let sets = bad_cells(s, b, k, omega, ENUM_CAP, budget)?;
    let width = BigRational::new(BigInt::one(), BigInt::from(big_pow(b, sets.depth)));
    let o_lo = BigRational::new(BigInt::from(omega.index().clone()), BigInt::from(pow2(omega.scale())));
    let o_hi = &o_lo + omega.measure();
    let mut measure = BigRational::zero();
    for c in &sets.bad {
        let l = int(c.clone()) * &width;
        let r = &l + &width;
        let l = if l > o_lo { l } else { o_lo.clone() };
        let r = if r < o_hi { r } else { o_hi.clone() };
        measure += r - l;
    }
    let r = to_u64(&s.resolution_at(k)?, "R(k)")?;
    let shift = r - omega.scale();
    let lo = omega.index() << shift;
    let hi = (omega.index() + 1u32) << shift;
    let cover = to_u64(&sets.cover_count(r, &lo, &hi), "cover size")?;
    Ok(HMeasure {
        b,
        depth: sets.depth,
        measure,
        bad_cells: sets.bad.len() as u64,
        cover,
        resolution: r,
    })
}

/// Measures `H_{b,k}` inside `Ω_{k-1}` for every base and compares the ratio
/// with `2^-b` when the threshold is at least 46; otherwise the ratio is
/// recorded only. Also runs [`series_checks`].
pub fn lemma5_budget_check(s: &Schedule, k: u64, opts: &ConstructOptions) -> Result<VerificationReport> {
    let started = Instant::now();
    let omega = omega_before(s, k, opts)?;
    let mu_omega = omega.measure();
    let asserted = s.paper_threshold();
    let mut tuples = Vec::new();
    let mut union_cover = 0u64;
    for b in s.bases(k) {
        let hm = h_measure(s, b, k, &omega, &opts.budget)?;
        let ratio = &hm.measure / &mu_omega;
        let cap = BigRational::new(BigInt::one(), BigInt::from(pow2(b)));
        let params = json!({
            "check": "h_ratio", "b": b, "k": k, "c": format!("{}/{}", s.c_num, s.c_den),
            "bad_cells": hm.bad_cells, "asserted": asserted,
        });
        let mut t = TupleResult::exact(params, &ratio, &cap);
        if !asserted {
            t.pass = true;
        }
        tuples.push(t);
        union_cover += hm.cover;
    }
    tuples.extend(series_checks(k.max(100), Precision::default()));
    let r = to_u64(&s.resolution_at(k)?, "R(k)")?;
    let per_omega = pow2(r - omega.scale());
    let summary = json!({
        "omega": omega.to_string(),
        "threshold_asserted": asserted,
        "bad_candidates_upper": union_cover,
        "candidates": per_omega.to_string(),
        "good_fraction_lower": 1.0 - union_cover as f64 / per_omega.to_f64().unwrap_or(f64::INFINITY),
    });
    Ok(VerificationReport::finish("lemma5", None, tuples, summary, started))
}

/// Compares `μ(H*)` with `μ(H)`: always `μ(H*) <= μ(H) + 2E·2^-R`, and
/// `μ(H*) <= 11/10 μ(H)` when elementary cells are at least 20 candidates wide.
pub fn hstar_inflation_check(s: &Schedule, b: u64, k: u64, opts: &ConstructOptions) -> Result<VerificationReport> {
    let started = Instant::now();
    let omega = omega_before(s, k, opts)?;
    let hm = h_measure(s, b, k, &omega, &opts.budget)?;
    let cand = BigRational::new(BigInt::one(), BigInt::from(pow2(hm.resolution)));
    let hstar = hm.cover_measure();
    let geometric = &hm.measure + int(2 * hm.bad_cells) * &cand;
    let base = json!({"b": b, "k": k, "bad_cells": hm.bad_cells, "cover": hm.cover, "depth": hm.depth, "R": hm.resolution});
    let mut tuples = vec![TupleResult::exact(
        json!({"check": "geometric", "case": base}),
        &hstar,
        &geometric,
    )];
    let regime = pow2(hm.resolution) >= big_pow(b, hm.depth) * 20u32;
    if regime {
        tuples.push(TupleResult::exact(
            json!({"check": "eleven_tenths", "case": base}),
            &hstar,
            &(q(11, 10) * &hm.measure),
        ));
    }
    let summary = json!({
        "mu_h": hm.measure.to_string(),
        "mu_hstar": hstar.to_string(),
        "paper_regime": regime,
        "inflation": if hm.measure.is_zero() { Value::Null } else { json!(rational_to_f64(&(&hstar / &hm.measure))) },
    });
    Ok(VerificationReport::finish("hstar", None, tuples, summary, started))
}

/// Extra binary digits required beyond `N·log2(b)`.
pub const DIGIT_GUARD: u64 = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: u64,
    pub discrepancy: String,
    pub discrepancy_f64: f64,
    pub sqrt_n_d: f64,
    /// `C_b / √N` with the chain constant.
    pub chain_bound: f64,
    pub below_one: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveReport {
    pub base: u64,
    pub digits: u64,
    pub points: Vec<CurvePoint>,
    pub pass: bool,
}

fn curve_point(n: u64, d: BigRational, chain: f64) -> CurvePoint {
    let df = rational_to_f64(&d);
    CurvePoint {
        n,
        discrepancy: d.to_string(),
        discrepancy_f64: df,
        sqrt_n_d: (n as f64).sqrt() * df,
        chain_bound: chain / (n as f64).sqrt(),
        below_one: d <= BigRational::one(),
    }
}

/// Binary digits needed to evaluate `N` orbit points in base `b`.
pub fn digits_needed(b: u64, n: u64) -> u64 {
    big_pow(b, n).bits() + DIGIT_GUARD
}

/// Exact `D_N` of `({b^j x})_{j<N}` at each checkpoint, where `x` is the
/// dyadic number with the given binary digits.
pub fn discrepancy_curve(digits: &[bool], b: u64, checkpoints: &[u64], budget: &ArithBudget) -> Result<CurveReport> {
    let x = DyadicRational::from_bits(digits);
    let chain = chain_constant(b)?.value() as f64;
    let mut points = Vec::new();
    for &n in checkpoints {
        if n == 0 {
            return Err(Error::InvalidInput("checkpoint N must be positive".into()));
        }
        let needed = digits_needed(b, n);
        if needed > digits.len() as u64 {
            return Err(Error::InsufficientDigits {
                needed,
                available: digits.len() as u64,
            });
        }
        let x = DyadicRational::new(x.numerator_at(digits.len() as u64), digits.len() as u64)?;
        let d = orbit_discrepancy(&x, b, 0, n, budget)?;
        points.push(curve_point(n, d, chain));
    }
    Ok(CurveReport {
        base: b,
        digits: digits.len() as u64,
        pass: points.iter().all(|p| p.below_one),
        points,
    })
}

/// Reads rationals `p/q`, one per line; blank lines and `#` comments skipped.
pub fn parse_points(text: &str) -> Result<Vec<BigRational>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let (p, d) = l.split_once('/').unwrap_or((l, "1"));
            let p: BigInt = p.trim().parse().map_err(|_| Error::Parse(format!("bad numerator in {l:?}")))?;
            let d: BigInt = d.trim().parse().map_err(|_| Error::Parse(format!("bad denominator in {l:?}")))?;
            if d.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {l:?}")));
            }
            Ok(BigRational::new(p, d))
        })
        .collect()
}

/// Discrepancy of the leading `N` points of an explicit sequence, with
/// `N·D_N / log N` alongside.
pub fn control_curve(points: &[BigRational], checkpoints: &[u64]) -> Result<Vec<(u64, f64, f64)>> {
    checkpoints
        .iter()
        .map(|&n| {
            if n as usize > points.len() || n == 0 {
                return Err(Error::InvalidInput(format!("checkpoint {n} outside 1..={}", points.len())));
            }
            let d = rational_to_f64(&discrepancy_exact(&points[..n as usize])?);
            Ok((n, d, n as f64 * d / (n as f64).ln().max(1.0)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LilReport {
    pub base: u64,
    pub n: u64,
    pub samples: u64,
    pub seed: u64,
    pub scale_bits: u64,
    /// `√N D_N / √(log log N)` per sample, in draw order.
    pub values: Vec<f64>,
    pub quantiles: [f64; 5],
    pub constant: f64,
    pub asserted: bool,
    pub pass: bool,
    pub runtime_ms: u64,
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    } else {
        sorted[i]
    }
}

/// Draws uniform dyadic `x` and records the normalized discrepancy of the
/// first `N` orbit points. The median is required to lie within a factor
/// 3 of the limiting constant when there are at least two samples.
pub fn lil_experiment(b: u64, n: u64, samples: u64, seed: u64, budget: &ArithBudget) -> Result<LilReport> {
    let started = Instant::now();
    if n < 16 || samples == 0 {
        return Err(Error::InvalidInput("need N >= 16 and at least one sample".into()));
    }
    let constant = fukuyama_constant(b)?;
    let scale = big_pow(b, n).bits() + 64;
    budget.check("sample scale", scale.saturating_mul(n.min(1 << 20)))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let norm = (n as f64).sqrt() / ((n as f64).ln().ln()).sqrt();
    let mut values = Vec::with_capacity(samples as usize);
    for _ in 0..samples {
        let mut bytes = vec![0u8; scale.div_ceil(8) as usize];
        rng.fill_bytes(&mut bytes);
        let num = BigUint::from_bytes_le(&bytes) % pow2(scale);
        let x = DyadicRational::new(num, scale)?;
        let d = orbit_discrepancy(&x, b, 0, n, budget)?;
        values.push(rational_to_f64(&d) * norm);
    }
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let quantiles = [0.0, 0.25, 0.5, 0.75, 1.0].map(|p| quantile(&sorted, p));
    let asserted = samples >= 2;
    let median = quantiles[2];
    let pass = !asserted || (constant / 3.0 <= median && median <= 3.0 * constant);
    Ok(LilReport {
        base: b,
        n,
        samples,
        seed,
        scale_bits: scale,
        values,
        quantiles,
        constant,
        asserted,
        pass,
        runtime_ms: started.elapsed().as_millis() as u64,
    })
}
