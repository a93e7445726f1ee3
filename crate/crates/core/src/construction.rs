//! The nested-interval construction.
//!
//! Step `k` splits `Ω_{k-1}` into `2^(R(k) - R(k-1))` dyadic candidates and
//! keeps the leftmost one that meets no bad set `H_{b,k}`, `2 <= b <= cap(k)`.
//! Badness is decided on elementary base-`b` cells: the digits of a cell
//! index are the leading digits of every point in it, so each window count
//! reduces to a histogram of digit words.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{big_pow, ceil_div, pow2, radix_digits, ArithBudget, BaseGridInterval, DyadicInterval};
use crate::bounds::h_threshold_exceeded_f;
use crate::counting::{big_f, CountWindow, RationalBand};
use crate::error::{Error, Result};
use crate::schedule::{to_u64, Schedule, ScheduleValues};

pub(crate) mod decimal {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One index tuple `(b, k, a, h, ℓ, m)` of a bad set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HSpec {
    pub b: u64,
    pub k: u64,
    pub a: u64,
    pub h: u64,
    pub ell: u64,
    pub m: u64,
}

/// All in-range tuples for `(b, k)`, in scan order `h, a, ℓ, m`.
pub fn h_specs(s: &Schedule, b: u64, k: u64, budget: &ArithBudget) -> Result<Vec<HSpec>> {
    let v = s.values(b, k, budget)?;
    let mut out = Vec::new();
    for h in 1..=v.t {
        let cells = big_pow(b, h)
            .to_u64()
            .ok_or_else(|| Error::cap("b^h", format!("{b}^{h}"), "2^64"))?;
        for a in 0..cells {
            for ell in v.levels() {
                for m in 0..v.offsets(ell)? {
                    out.push(HSpec { b, k, a, h, ell, m });
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
struct Window {
    h: u64,
    start: u64,
    len: u64,
    /// `b^h`.
    cells: u64,
    half: u64,
    /// Largest `|count·b^h - 2^(ℓ-1)|` that stays below the threshold.
    dev_limit: u128,
}

impl Window {
    /// Number of leading digits the window reads.
    fn end(&self) -> u64 {
        self.start + self.len + self.h - 1
    }
}

/// Indices inspected by one `(b, k, h, ℓ)` sweep over all offsets `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepCensus {
    pub b: u64,
    pub h: u64,
    pub ell: u64,
    pub n: u64,
    pub offsets: u64,
    pub indices: u64,
}

/// Everything needed to classify elementary cells of one base at one step.
#[derive(Debug, Clone)]
pub struct BaseContext {
    pub b: u64,
    pub values: ScheduleValues,
    pub depth: u64,
    /// `b^depth`.
    pub cells: BigUint,
    windows: Vec<Window>,
    pub sweeps: Vec<SweepCensus>,
}

fn dev_limit(b: u64, h: u64, ell: u64, n: u64, c_num: u64, c_den: u64) -> u128 {
    let rhs = BigUint::from(c_num).pow(2u32) * pow2(ell - 1) * (n - ell + 1) * big_pow(b, 2 * h);
    let q = big_pow(h, 3) * BigUint::from(c_den).pow(2u32);
    (rhs / q).sqrt().to_u128().unwrap_or(u128::MAX)
}

impl BaseContext {
    pub fn new(s: &Schedule, b: u64, k: u64, budget: &ArithBudget) -> Result<Self> {
        let values = s.values(b, k, budget)?;
        let depth = values.elementary_depth()?;
        budget.check("elementary cell index", depth.saturating_mul(64 - b.leading_zeros() as u64))?;
        let start = values.block_start()?;
        let mut windows = Vec::new();
        let mut sweeps = Vec::new();
        for h in 1..=values.t {
            let cells = big_pow(b, h)
                .to_u64()
                .ok_or_else(|| Error::cap("b^h", format!("{b}^{h}"), "2^64"))?;
            for ell in values.levels() {
                let offsets = values.offsets(ell)?;
                let half = 1u64 << (ell - 1);
                for m in 0..offsets {
                    windows.push(Window {
                        h,
                        start: start + (m << ell),
                        len: half,
                        cells,
                        half,
                        dev_limit: dev_limit(b, h, ell, values.n, s.c_num, s.c_den),
                    });
                }
                sweeps.push(SweepCensus {
                    b,
                    h,
                    ell,
                    n: values.n,
                    offsets,
                    indices: offsets * half,
                });
            }
        }
        // Shortest prefixes first, so a bad verdict rules out the widest
        // possible block of neighbouring cells.
        windows.sort_by_key(|w| (w.end(), w.h, w.start));
        Ok(BaseContext {
            b,
            cells: big_pow(b, depth),
            depth,
            values,
            windows,
            sweeps,
        })
    }

    /// Whether elementary cell `c` lies in `H_{b,k}`.
    pub fn cell_bad(&self, c: &BigUint, counters: &mut Counters) -> bool {
        self.bad_prefix(c, counters).is_some()
    }

    /// For a bad cell, the number of leading digits that already decide
    /// badness: every cell sharing them is bad too.
    pub fn bad_prefix(&self, c: &BigUint, counters: &mut Counters) -> Option<u64> {
        let digits = radix_digits(c, self.b, self.depth);
        counters.cells_examined += 1;
        counters.bigint_ops += 1;
        let mut words = Vec::new();
        for w in &self.windows {
            counters.f_evaluations += w.cells;
            counters.indices_inspected += w.len;
            words.clear();
            for j in w.start..w.start + w.len {
                let word = digits[j as usize..(j + w.h) as usize]
                    .iter()
                    .fold(0u64, |acc, &d| acc * self.b + d as u64);
                words.push(word);
            }
            words.sort_unstable();
            let exceeds = |count: u64| {
                let dev = (count as i128 * w.cells as i128 - w.half as i128).unsigned_abs();
                dev > w.dev_limit
            };
            let mut distinct = 0u64;
            let mut i = 0;
            while i < words.len() {
                let mut j = i + 1;
                while j < words.len() && words[j] == words[i] {
                    j += 1;
                }
                distinct += 1;
                if exceeds((j - i) as u64) {
                    return Some(w.end());
                }
                i = j;
            }
            if distinct < w.cells && exceeds(0) {
                return Some(w.end());
            }
        }
        None
    }

    /// Elementary cells overlapping candidate `a` at resolution `r`.
    pub fn overlapping(&self, a: &BigUint, r: u64) -> (BigUint, BigUint) {
        let lo = (a * &self.cells) >> r;
        let hi = ceil_div(&((a + 1u32) * &self.cells), &pow2(r)) - 1u32;
        (lo, hi)
    }

    /// First candidate at resolution `r` lying entirely right of the
    /// depth-`p` cell containing elementary cell `c`.
    pub fn first_clear_of(&self, c: &BigUint, p: u64, r: u64) -> BigUint {
        let coarse = c / big_pow(self.b, self.depth - p);
        ceil_div(&((coarse + 1u32) << r), &big_pow(self.b, p))
    }
}

/// Operation counts. All counts are logical, so they do not depend on
/// threading.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    /// One per `(cell, h, a, ℓ, m)` evaluation of the counting function.
    pub f_evaluations: u64,
    pub indices_inspected: u64,
    pub cells_examined: u64,
    pub bigint_ops: u64,
}

impl Counters {
    fn absorb(&mut self, o: &Counters) {
        self.f_evaluations += o.f_evaluations;
        self.indices_inspected += o.indices_inspected;
        self.cells_examined += o.cells_examined;
        self.bigint_ops += o.bigint_ops;
    }
}

struct Verdict {
    bad: bool,
    /// First candidate index that may still be good.
    next: BigUint,
    counters: Counters,
}

fn evaluate(contexts: &[BaseContext], a: &BigUint, r: u64, cap: u64) -> Result<Verdict> {
    let mut counters = Counters::default();
    for ctx in contexts {
        let (lo, hi) = ctx.overlapping(a, r);
        counters.bigint_ops += 2;
        let overlap = &hi - &lo + 1u32;
        if overlap > BigUint::from(cap) {
            return Err(Error::OverlapCapExceeded {
                overlap: overlap.to_string(),
                cap,
            });
        }
        let mut next: Option<BigUint> = None;
        let mut c = lo;
        while c <= hi {
            if let Some(p) = ctx.bad_prefix(&c, &mut counters) {
                counters.bigint_ops += 1;
                let clear = ctx.first_clear_of(&c, p, r);
                next = Some(next.map_or(clear.clone(), |n| n.max(clear)));
            }
            c += 1u32;
        }
        if let Some(next) = next {
            let next = next.max(a + 1u32);
            return Ok(Verdict {
                bad: true,
                next,
                counters,
            });
        }
    }
    Ok(Verdict {
        bad: false,
        next: a + 1u32,
        counters,
    })
}

fn contexts(s: &Schedule, k: u64, budget: &ArithBudget) -> Result<Vec<BaseContext>> {
    s.bases(k).map(|b| BaseContext::new(s, b, k, budget)).collect()
}

/// Whether the candidate meets `H_{b,k}`.
pub fn candidate_bad(cand: &DyadicInterval, b: u64, k: u64, s: &Schedule, budget: &ArithBudget) -> Result<bool> {
    let r = to_u64(&s.resolution_at(k)?, "R(k)")?;
    if cand.scale() != r {
        return Err(Error::Precondition(format!(
            "candidate scale {} differs from R({k}) = {r}",
            cand.scale()
        )));
    }
    let ctx = BaseContext::new(s, b, k, budget)?;
    Ok(evaluate(std::slice::from_ref(&ctx), cand.index(), r, s.overlap_cap)?.bad)
}

/// Reference membership test: evaluates `F` at a dyadic point of the cell
/// with the generic counting function.
pub fn h_member(cell: &BaseGridInterval, spec: &HSpec, s: &Schedule, budget: &ArithBudget) -> Result<bool> {
    let v = s.values(spec.b, spec.k, budget)?;
    if cell.base() != spec.b {
        return Err(Error::Precondition(format!(
            "cell base {} differs from spec base {}",
            cell.base(),
            spec.b
        )));
    }
    let required = v.elementary_depth()?;
    if cell.depth() < required {
        return Err(Error::ResolutionTooCoarse {
            depth: cell.depth(),
            required,
        });
    }
    check_spec(&v, spec)?;
    let x = cell.dyadic_point();
    let window = CountWindow::new(v.block_start()? + (spec.m << spec.ell), 1 << (spec.ell - 1));
    let band = RationalBand::from_grid(&BaseGridInterval::new(spec.b, spec.a.into(), spec.h)?);
    let f = big_f(&x, spec.b, window, &band, budget)?;
    Ok(h_threshold_exceeded_f(&f, spec.h, spec.ell, v.n, s.c_num, s.c_den))
}

fn check_spec(v: &ScheduleValues, spec: &HSpec) -> Result<()> {
    let ok = spec.h >= 1
        && spec.h <= v.t
        && BigUint::from(spec.a) < big_pow(spec.b, spec.h)
        && v.levels().contains(&spec.ell)
        && spec.m < v.offsets(spec.ell)?;
    if ok {
        Ok(())
    } else {
        Err(Error::Precondition(format!("{spec:?} is outside the index range")))
    }
}

/// [`candidate_bad`] by brute force: [`h_member`] on every overlapping cell
/// and every tuple.
pub fn candidate_bad_exhaustive(
    cand: &DyadicInterval,
    b: u64,
    k: u64,
    s: &Schedule,
    budget: &ArithBudget,
) -> Result<bool> {
    let ctx = BaseContext::new(s, b, k, budget)?;
    let specs = h_specs(s, b, k, budget)?;
    let (lo, hi) = ctx.overlapping(cand.index(), cand.scale());
    let mut c = lo;
    while c <= hi {
        let cell = BaseGridInterval::new(b, c.clone(), ctx.depth)?;
        for spec in &specs {
            if h_member(&cell, spec, s, budget)? {
                return Ok(true);
            }
        }
        c += 1u32;
    }
    Ok(false)
}

/// Per-step record of the scan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepReport {
    pub k: u64,
    pub resolution: u64,
    #[serde(with = "decimal")]
    pub candidates_total: BigUint,
    /// Offset of the selected candidate inside `Ω_{k-1}`.
    #[serde(with = "decimal")]
    pub selected: BigUint,
    pub scanned: u64,
    /// Candidates passed over because they meet a cell already known bad.
    #[serde(with = "decimal")]
    pub skipped: BigUint,
    pub counters: Counters,
    pub sweeps: Vec<SweepCensus>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructionState {
    /// Last completed step; `k0 - 1` before the first.
    pub k: u64,
    pub omega: DyadicInterval,
    /// Binary expansion of `omega`'s left endpoint.
    pub digits: Vec<bool>,
    pub steps: Vec<StepReport>,
}

impl ConstructionState {
    pub fn initial(s: &Schedule) -> Self {
        ConstructionState {
            k: s.k0 - 1,
            omega: DyadicInterval::unit(),
            digits: Vec::new(),
            steps: Vec::new(),
        }
    }

    pub fn totals(&self) -> Counters {
        let mut c = Counters::default();
        for st in &self.steps {
            c.absorb(&st.counters);
        }
        c
    }

    pub fn digit_string(&self) -> String {
        self.digits.iter().map(|&d| if d { '1' } else { '0' }).collect()
    }
}

#[derive(Debug, Clone)]
pub struct ConstructOptions {
    /// Worker threads for candidate scans; 1 runs inline.
    pub threads: usize,
    /// Candidates evaluated per parallel batch.
    pub batch: usize,
    pub deadline: Option<Duration>,
    pub budget: ArithBudget,
}

impl Default for ConstructOptions {
    fn default() -> Self {
        ConstructOptions {
            threads: 1,
            batch: 64,
            deadline: None,
            budget: ArithBudget::default(),
        }
    }
}

struct Scan<'a> {
    contexts: &'a [BaseContext],
    r: u64,
    cap: u64,
    end: BigUint,
}

impl Scan<'_> {
    fn verdicts(&self, from: &BigUint, batch: usize, parallel: bool) -> Result<Vec<Verdict>> {
        let count = (&self.end - from).to_usize().map_or(batch, |left| left.min(batch));
        let idx: Vec<BigUint> = (0..count).map(|i| from + i).collect();
        if parallel {
            idx.par_iter().map(|a| evaluate(self.contexts, a, self.r, self.cap)).collect()
        } else {
            idx.iter().map(|a| evaluate(self.contexts, a, self.r, self.cap)).collect()
        }
    }
}

/// One refinement step: `Ω_{k-1} -> Ω_k`.
pub fn refine_step(state: &ConstructionState, s: &Schedule, opts: &ConstructOptions) -> Result<ConstructionState> {
    let started = Instant::now();
    let k = state.k + 1;
    if k > s.kmax || k < s.k0 {
        return Err(Error::OutOfRange { b: 2, k });
    }
    let r_prev = to_u64(&s.resolution_at(k - 1)?, "R(k-1)")?;
    if state.omega.scale() != r_prev {
        return Err(Error::Precondition(format!(
            "omega has scale {}, expected R({}) = {r_prev}",
            state.omega.scale(),
            k - 1
        )));
    }
    let r = to_u64(&s.resolution_at(k)?, "R(k)")?;
    opts.budget.check("candidate index", r)?;
    let step = r - r_prev;
    let contexts = contexts(s, k, &opts.budget)?;
    let first = state.omega.index() << step;
    let total = pow2(step);
    let scan = Scan {
        contexts: &contexts,
        r,
        cap: s.overlap_cap,
        end: &first + &total,
    };

    let parallel = opts.threads != 1;
    let batch = if parallel { opts.batch.max(1) } else { 1 };
    let mut counters = Counters::default();
    let mut scanned = 0u64;
    let mut skipped = BigUint::zero();
    let mut a = first.clone();
    let selected = 'scan: loop {
        if a >= scan.end {
            return Err(Error::NoGoodInterval {
                k,
                scanned,
                skipped: skipped.to_string(),
                total: total.to_string(),
            });
        }
        if let Some(limit) = opts.deadline {
            if started.elapsed() > limit {
                return Err(Error::DeadlineExceeded {
                    during: format!("scan at k={k}"),
                    limit_ms: limit.as_millis() as u64,
                });
            }
        }
        let base = a.clone();
        let verdicts = scan.verdicts(&base, batch, parallel)?;
        // Walk the batch in order; verdicts past a jump are discarded.
        for (i, v) in verdicts.into_iter().enumerate() {
            let here = &base + i;
            if here < a {
                continue;
            }
            scanned += 1;
            counters.absorb(&v.counters);
            if !v.bad {
                break 'scan here;
            }
            skipped += &v.next - &here - 1u32;
            a = v.next;
        }
    };

    let omega = DyadicInterval::new(selected.clone(), r)?;
    let digits = omega.bits();
    debug_assert!(digits.starts_with(&state.digits));
    let mut steps = state.steps.clone();
    steps.push(StepReport {
        k,
        resolution: r,
        candidates_total: total,
        selected: selected - first,
        scanned,
        skipped,
        counters,
        sweeps: contexts.iter().flat_map(|c| c.sweeps.iter().copied()).collect(),
    });
    Ok(ConstructionState {
        k,
        omega,
        digits,
        steps,
    })
}

fn with_pool<T: Send>(opts: &ConstructOptions, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    if opts.threads == 1 {
        return f();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    pool.install(f)
}

/// Runs steps `k0..=upto`.
pub fn construct_until(s: &Schedule, upto: u64, opts: &ConstructOptions) -> Result<ConstructionState> {
    s.validate(&opts.budget)?;
    with_pool(opts, || {
        let mut state = ConstructionState::initial(s);
        while state.k < upto.min(s.kmax) {
            state = refine_step(&state, s, opts)?;
        }
        Ok(state)
    })
}

/// Runs every step `k0..=kmax`.
pub fn construct(s: &Schedule, opts: &ConstructOptions) -> Result<ConstructionState> {
    construct_until(s, s.kmax, opts)
}

/// The first `nbits` binary digits, running only the steps needed.
pub fn digits_for(s: &Schedule, nbits: u64, opts: &ConstructOptions) -> Result<(Vec<bool>, ConstructionState)> {
    if nbits == 0 {
        return Err(Error::InvalidInput("nbits must be positive".into()));
    }
    let mut k = s.k0;
    while s.resolution_at(k)? < BigUint::from(nbits) {
        k += 1;
        if k > s.kmax {
            return Err(Error::InsufficientDigits {
                needed: nbits,
                available: to_u64(&s.resolution_at(s.kmax)?, "R(kmax)")?,
            });
        }
    }
    let state = construct_until(s, k, opts)?;
    Ok((state.digits[..nbits as usize].to_vec(), state))
}

/// Per-step counts next to the predicted costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCensus {
    pub k: u64,
    pub scanned: u64,
    /// `log2` of the predicted candidate count `2^(2^k + 1)`.
    pub candidate_bound_log2: u64,
    pub scanned_within_bound: bool,
    pub f_evaluations: u64,
    pub indices_inspected: u64,
    /// Predicted per-candidate work `k · (k/2) · k^(k/2) · 2^k`.
    pub predicted_cost: f64,
    pub sweeps: Vec<SweepCensus>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Census {
    pub steps: Vec<StepCensus>,
    pub totals: Counters,
}

pub fn op_census(state: &ConstructionState) -> Census {
    let steps = state
        .steps
        .iter()
        .map(|st| {
            let k = st.k;
            let bound_log2 = (1u64 << k.min(62)) + 1;
            let kf = k as f64;
            StepCensus {
                k,
                scanned: st.scanned,
                candidate_bound_log2: bound_log2,
                scanned_within_bound: bound_log2 >= 64 || st.scanned <= 1u64 << bound_log2,
                f_evaluations: st.counters.f_evaluations,
                indices_inspected: st.counters.indices_inspected,
                predicted_cost: kf * (kf / 2.0) * kf.powf(kf / 2.0) * 2f64.powf(kf),
                sweeps: st.sweeps.clone(),
            }
        })
        .collect();
    Census {
        steps,
        totals: state.totals(),
    }
}

/// Bad elementary cells of `H_{b,k}` meeting `Ω_{k-1}`, in increasing order.
pub fn bad_cells(s: &Schedule, b: u64, k: u64, omega_prev: &DyadicInterval, cap: u64, budget: &ArithBudget) -> Result<HSets> {
    let ctx = BaseContext::new(s, b, k, budget)?;
    let (lo, hi) = ctx.overlapping(omega_prev.index(), omega_prev.scale());
    let count = &hi - &lo + 1u32;
    if count > BigUint::from(cap) {
        return Err(Error::cap("elementary cells in omega", count, cap));
    }
    let mut counters = Counters::default();
    let mut bad = Vec::new();
    let mut c = lo;
    while c <= hi {
        if ctx.cell_bad(&c, &mut counters) {
            bad.push(c.clone());
        }
        c += 1u32;
    }
    Ok(HSets {
        b,
        k,
        depth: ctx.depth,
        cells_scanned: to_u64(&count, "cell count")?,
        bad,
    })
}

/// The bad cells of one `(b, k)` inside `Ω_{k-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HSets {
    pub b: u64,
    pub k: u64,
    pub depth: u64,
    pub cells_scanned: u64,
    pub bad: Vec<BigUint>,
}

impl HSets {
    /// Candidate indices at resolution `r` meeting a bad cell, clipped to
    /// `[lo, hi)`.
    pub fn cover(&self, r: u64, lo: &BigUint, hi: &BigUint) -> BTreeSet<BigUint> {
        let cells = big_pow(self.b, self.depth);
        let mut out = BTreeSet::new();
        for c in &self.bad {
            let first = (c << r) / &cells;
            let last = ceil_div(&((c + 1u32) << r), &cells);
            let mut a = first.max(lo.clone());
            let stop = last.min(hi.clone());
            while a < stop {
                out.insert(a.clone());
                a += 1u32;
            }
        }
        out
    }

    /// Size of [`HSets::cover`], by merging candidate ranges.
    pub fn cover_count(&self, r: u64, lo: &BigUint, hi: &BigUint) -> BigUint {
        let cells = big_pow(self.b, self.depth);
        let mut total = BigUint::zero();
        let mut reached = lo.clone();
        for c in &self.bad {
            let first = ((c << r) / &cells).max(reached.clone());
            let last = ceil_div(&((c + 1u32) << r), &cells).min(hi.clone());
            if first < last {
                total += &last - &first;
                reached = last;
            }
        }
        total
    }
}

pub const DIGIT_FILE_MAGIC: &str = "NFORGE v1";

/// Header line plus 64 binary digits per line.
pub fn format_digit_file(s: &Schedule, digits: &[bool]) -> String {
    let mut out = format!(
        "{DIGIT_FILE_MAGIC} schedule={} k0={} kmax={} c={}/{}\n",
        s.name, s.k0, s.kmax, s.c_num, s.c_den
    );
    for chunk in digits.chunks(64) {
        out.extend(chunk.iter().map(|&d| if d { '1' } else { '0' }));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitFile {
    pub schedule: String,
    pub k0: u64,
    pub kmax: u64,
    pub c: (u64, u64),
    pub digits: Vec<bool>,
}

pub fn parse_digit_file(text: &str) -> Result<DigitFile> {
    let mut lines = text.lines();
    let header = lines.next().ok_or(Error::EmptyInput("digit file"))?;
    let rest = header
        .strip_prefix(DIGIT_FILE_MAGIC)
        .ok_or_else(|| Error::Parse(format!("bad digit file header {header:?}")))?;
    let mut schedule = None;
    let (mut k0, mut kmax, mut c) = (None, None, None);
    for field in rest.split_whitespace() {
        let (key, val) = field
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("bad header field {field:?}")))?;
        let num = |v: &str| v.parse::<u64>().map_err(|_| Error::Parse(format!("bad number {v:?}")));
        match key {
            "schedule" => schedule = Some(val.to_string()),
            "k0" => k0 = Some(num(val)?),
            "kmax" => kmax = Some(num(val)?),
            "c" => {
                let (n, d) = val
                    .split_once('/')
                    .ok_or_else(|| Error::Parse(format!("bad threshold {val:?}")))?;
                c = Some((num(n)?, num(d)?));
            }
            _ => return Err(Error::Parse(format!("unknown header field {key:?}"))),
        }
    }
    let mut digits = Vec::new();
    for line in lines {
        for ch in line.trim().chars() {
            match ch {
                '0' => digits.push(false),
                '1' => digits.push(true),
                _ => return Err(Error::Parse(format!("bad digit {ch:?}"))),
            }
        }
    }
    let missing = |f: &str| Error::Parse(format!("digit file header lacks {f}"));
    Ok(DigitFile {
        schedule: schedule.ok_or_else(|| missing("schedule"))?,
        k0: k0.ok_or_else(|| missing("k0"))?,
        kmax: kmax.ok_or_else(|| missing("kmax"))?,
        c: c.ok_or_else(|| missing("c"))?,
        digits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn budget() -> ArithBudget {
        ArithBudget::default()
    }

    #[test]
    fn toy_specs() {
        let s = Schedule::toy(3);
        let specs = h_specs(&s, 2, 3, &budget()).unwrap();
        // h in 1..=2, ℓ in 2..=3 with one offset each
        assert_eq!(specs.len(), 2 * 2 + 4 * 2);
        assert!(specs.iter().all(|p| p.m == 0));
    }

    #[test]
    fn high_threshold_means_no_bad_cells() {
        let s = Schedule::toy(3).with_threshold(46, 1);
        let b = budget();
        let ctx = BaseContext::new(&s, 2, 3, &b).unwrap();
        let mut c = Counters::default();
        for cell in 0u32..256 {
            assert!(!ctx.cell_bad(&BigUint::from(cell * 1021), &mut c));
        }
        let state = construct(&s, &ConstructOptions::default()).unwrap();
        assert_eq!(state.steps[0].scanned, 1);
        assert!(state.omega.index().is_zero());
    }

    #[test]
    fn fast_path_matches_reference_on_cells() {
        let s = Schedule::toy(3);
        let b = budget();
        for base in [2u64, 3] {
            let ctx = BaseContext::new(&s, base, 3, &b).unwrap();
            let specs = h_specs(&s, base, 3, &b).unwrap();
            let mut c = Counters::default();
            for i in 0u64..200 {
                let cell = BigUint::from(i * 7919) % &ctx.cells;
                let g = BaseGridInterval::new(base, cell.clone(), ctx.depth).unwrap();
                let slow = specs.iter().any(|p| h_member(&g, p, &s, &b).unwrap());
                assert_eq!(ctx.cell_bad(&cell, &mut c), slow, "base {base} cell {cell}");
            }
        }
    }

    #[test]
    fn h_member_rejects_coarse_cells() {
        let s = Schedule::toy(3);
        let spec = HSpec { b: 2, k: 3, a: 0, h: 1, ell: 2, m: 0 };
        let g = BaseGridInterval::new(2, BigUint::one(), 5).unwrap();
        assert!(matches!(
            h_member(&g, &spec, &s, &budget()),
            Err(Error::ResolutionTooCoarse { depth: 5, required: 18 })
        ));
    }

    #[test]
    fn toy_run_is_nested_and_deterministic() {
        let s = Schedule::toy(4);
        let opts = ConstructOptions::default();
        let one = construct(&s, &opts).unwrap();
        let two = construct(&s, &ConstructOptions { threads: 3, batch: 8, ..opts }).unwrap();
        assert_eq!(one, two);
        assert_eq!(one.digits.len(), 36);
        assert_eq!(one.omega.scale(), 36);
        assert_eq!(format_digit_file(&s, &one.digits), format_digit_file(&s, &two.digits));
    }

    #[test]
    fn digit_file_round_trip() {
        let s = Schedule::toy(3);
        let digits: Vec<bool> = (0..150).map(|i| i % 3 == 0).collect();
        let text = format_digit_file(&s, &digits);
        assert!(text.starts_with("NFORGE v1 schedule=toy-k3 k0=3 kmax=3 c=2/1\n"));
        let back = parse_digit_file(&text).unwrap();
        assert_eq!(back.digits, digits);
        assert_eq!(back.c, (2, 1));
        assert!(parse_digit_file("junk\n").is_err());
    }

    #[test]
    fn digits_for_runs_minimal_steps() {
        let s = Schedule::toy(4);
        let o = ConstructOptions::default();
        let (d, st) = digits_for(&s, 19, &o).unwrap();
        assert_eq!((d.len(), st.steps.len()), (19, 1));
        let (d2, st2) = digits_for(&s, 20, &o).unwrap();
        assert_eq!(st2.steps.len(), 2);
        assert!(d2.starts_with(&d));
        assert!(matches!(digits_for(&s, 37, &o), Err(Error::InsufficientDigits { .. })));
    }
}
