//! Witnesses that `x^(r)` and `x^(s)` (`r < s`) generate different summable
//! ideals under a given bijection `f`: a set `A` on which `x^(r) ∘ f` sums to
//! infinity while `x^(s)` stays summable.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::index_sets::{root_primes, IndexSetExpr};
use crate::sequences::{power_transform, SequenceExpr};
use crate::summation::{growth_profile, CompensatedSum, GrowthEvidence, GrowthShape, SumMode};

/// A bijection of the positive integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BijectionSpec {
    Identity,
    /// Reverses every block `{jL + 1, ..., jL + L}`.
    BlockSwap(u64),
    /// Finite permutation given as `n -> f(n)`; identity off the table.
    FiniteTable(BTreeMap<u64, u64>),
}

impl BijectionSpec {
    pub fn block_swap(len: u64) -> Result<Self> {
        if len == 0 {
            return Err(Error::invalid("block length must be >= 1"));
        }
        Ok(BijectionSpec::BlockSwap(len))
    }

    /// Fails unless the pairs permute their own support.
    pub fn finite_table(pairs: impl IntoIterator<Item = (u64, u64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (a, b) in pairs {
            if a == 0 || b == 0 {
                return Err(Error::invalid("bijections act on positive integers"));
            }
            if map.insert(a, b).is_some_and(|old| old != b) {
                return Err(Error::invalid(format!("{a} is mapped twice")));
            }
        }
        let mut image: Vec<u64> = map.values().copied().collect();
        image.sort_unstable();
        let domain: Vec<u64> = map.keys().copied().collect();
        if image != domain {
            return Err(Error::invalid("table is not a permutation of its support"));
        }
        map.retain(|a, b| a != b);
        Ok(BijectionSpec::FiniteTable(map))
    }

    pub fn apply(&self, n: u64) -> u64 {
        match self {
            BijectionSpec::Identity => n,
            BijectionSpec::BlockSwap(len) => {
                let j = (n - 1) / len;
                let i = n - j * len;
                j * len + len + 1 - i
            }
            BijectionSpec::FiniteTable(map) => map.get(&n).copied().unwrap_or(n),
        }
    }

    pub fn inverse(&self, n: u64) -> u64 {
        match self {
            BijectionSpec::Identity | BijectionSpec::BlockSwap(_) => self.apply(n),
            BijectionSpec::FiniteTable(map) => map
                .iter()
                .find(|&(_, &b)| b == n)
                .map_or(n, |(&a, _)| a),
        }
    }

    /// `(P, c, N)`: `f(n) = n + c[n mod P]` for every `n >= N`.
    fn structure(&self) -> (u64, Vec<i64>, u64) {
        match self {
            BijectionSpec::Identity => (1, vec![0], 1),
            BijectionSpec::BlockSwap(len) => {
                let offsets = (0..*len)
                    .map(|rho| {
                        let i = if rho == 0 { *len } else { rho };
                        *len as i64 + 1 - 2 * i as i64
                    })
                    .collect();
                (*len, offsets, 1)
            }
            BijectionSpec::FiniteTable(map) => {
                (1, vec![0], map.keys().next_back().map_or(1, |&m| m + 1))
            }
        }
    }
}

impl fmt::Display for BijectionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BijectionSpec::Identity => f.write_str("identity"),
            BijectionSpec::BlockSwap(len) => write!(f, "blockswap:{len}"),
            BijectionSpec::FiniteTable(map) => write!(f, "table({} moved points)", map.len()),
        }
    }
}

impl FromStr for BijectionSpec {
    type Err = Error;

    /// `identity` or `blockswap:L`. Tables come from [`parse_table`].
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "identity" => Ok(BijectionSpec::Identity),
            other => match other.strip_prefix("blockswap:") {
                Some(len) => BijectionSpec::block_swap(
                    len.parse()
                        .map_err(|_| Error::parse(10, format!("invalid block length `{len}`")))?,
                ),
                None => Err(Error::parse(0, format!("unknown bijection `{other}`"))),
            },
        }
    }
}

/// Reads `a b` lines (`f(a) = b`); blank lines and `#` comments are skipped.
pub fn parse_table(text: &str) -> Result<BijectionSpec> {
    let mut pairs = Vec::new();
    let mut offset = 0;
    for line in text.lines() {
        let body = line.split('#').next().unwrap_or("").trim();
        if !body.is_empty() {
            let nums: Vec<&str> = body.split_whitespace().collect();
            let parsed: Option<Vec<u64>> = nums.iter().map(|t| t.parse().ok()).collect();
            match parsed.as_deref() {
                Some(&[a, b]) => pairs.push((a, b)),
                _ => return Err(Error::parse(offset, format!("expected `a b`, got `{body}`"))),
            }
        }
        offset += line.len() + 1;
    }
    BijectionSpec::finite_table(pairs)
}

fn check_exponents(r: f64, s: f64) -> Result<()> {
    if !(r > 0.0 && r < s && s <= 1.0) {
        return Err(Error::invalid(format!("need 0 < r < s <= 1, got r = {r}, s = {s}")));
    }
    Ok(())
}

/// Midpoint of `(1, s/r)`.
pub fn choose_t(r: f64, s: f64) -> Result<f64> {
    check_exponents(r, s)?;
    Ok((1.0 + s / r) / 2.0)
}

fn in_t(f: &BijectionSpec, t: f64, n: u64) -> bool {
    !(f.apply(n) as f64 > (n as f64).powf(t))
}

/// Partitions `[1, horizon]` into `S = {f(n) > n^t}` and its complement `T`.
pub fn split_s_t(f: &BijectionSpec, t: f64, horizon: u64) -> Result<(Vec<u64>, Vec<u64>)> {
    if !(t > 1.0) {
        return Err(Error::invalid(format!("t must exceed 1, got {t}")));
    }
    Ok((1..=horizon).partition(|&n| !in_t(f, t, n)))
}

/// Knobs for threshold certification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyOptions {
    /// Factor applied to the envelope before it is compared with `1/k^2`.
    /// Anything below 1 makes the envelope unsound.
    pub majorant_scale: f64,
    /// Random probes above the threshold.
    pub samples: usize,
    pub seed: u64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            majorant_scale: 1.0,
            samples: 10_000,
            seed: 0x5eed,
        }
    }
}

/// How `n_k` was established.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub k: u64,
    pub n_k: u64,
    /// Start of the range certified by the monotone envelope.
    pub envelope_start: u64,
    /// Largest `n < envelope_start` in `T` with ratio above `1/k^2`.
    pub last_violation: Option<u64>,
}

struct RatioModel<'a> {
    r: f64,
    s: f64,
    t: f64,
    f: &'a BijectionSpec,
    star: SequenceExpr,
}

impl RatioModel<'_> {
    fn ratio(&self, n: u64) -> f64 {
        self.star.eval(n).powf(self.s) / self.star.eval(self.f.apply(n)).powf(self.r)
    }

    fn in_t(&self, n: u64) -> bool {
        in_t(self.f, self.t, n)
    }
}

/// Smallest `n` past which every per-class ratio is decreasing, given
/// `|f(n) - n| <= d`.
fn monotone_from(r: f64, s: f64, d: u64) -> Result<u64> {
    let ok = |n: u64| {
        let m = (n - d) as f64;
        s * m >= r * n as f64 * (1.0 + 1.0 / (m + 1.0).ln())
    };
    let mut lo = d + 2;
    if ok(lo) {
        return Ok(lo);
    }
    let mut hi = lo;
    while !ok(hi) {
        lo = hi;
        hi = hi
            .checked_mul(2)
            .ok_or(Error::IndexOverflow("locating the monotone range"))?;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Smallest `n_k` such that `x^(s)_n / x^(r)_(f(n)) <= 1/k^2` for every
/// `n >= n_k` in `T`, searched up to `scan_cap`.
///
/// Past a structural threshold the bijection is `n -> n + c` on each residue
/// class mod an even period, and each class ratio is a decreasing function,
/// so the supremum over `n >= N` is attained at the first member of some
/// class. Below the point where that envelope drops under `1/k^2`, a
/// downward scan finds the last violation exactly. Random probes above the
/// result then cross-check the envelope.
pub fn nk_threshold(
    k: u64,
    r: f64,
    s: f64,
    t: f64,
    f: &BijectionSpec,
    scan_cap: u64,
    opts: &CertifyOptions,
) -> Result<Threshold> {
    check_exponents(r, s)?;
    if k == 0 {
        return Err(Error::invalid("k must be >= 1"));
    }
    if !(t > 1.0 && t < s / r) {
        return Err(Error::invalid(format!("t must lie in (1, s/r), got {t}")));
    }
    let model = RatioModel {
        r,
        s,
        t,
        f,
        star: SequenceExpr::star(),
    };
    let bound = 1.0 / (k as f64 * k as f64);
    let (period, offsets, structured_from) = f.structure();
    let spread = offsets.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0);
    let classes = if period % 2 == 0 { period } else { 2 * period };
    let start = monotone_from(r, s, spread)?.max(structured_from);

    let envelope = |from: u64| -> f64 {
        (0..classes)
            .map(|rho| {
                let n = from + (rho + classes - from % classes) % classes;
                model.ratio(n)
            })
            .fold(0.0, f64::max)
            * opts.majorant_scale
    };
    let cap_error = |model: &RatioModel<'_>| {
        let last_violation = (1..=scan_cap)
            .rev()
            .take(1 << 20)
            .find(|&n| model.in_t(n) && model.ratio(n) > bound);
        Error::ScanCapExceeded {
            k,
            cap: scan_cap,
            last_violation,
        }
    };

    // exponential then binary search for the envelope crossing
    let mut lo = start;
    let mut hi = start;
    while envelope(hi) > bound {
        if hi >= scan_cap {
            return Err(cap_error(&model));
        }
        lo = hi;
        hi = hi.saturating_mul(2).min(scan_cap);
    }
    if hi > start {
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if envelope(mid) <= bound {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    let envelope_start = hi;
    let last_violation = (1..envelope_start)
        .rev()
        .find(|&n| model.in_t(n) && model.ratio(n) > bound);
    let n_k = last_violation.map_or(1, |v| v + 1);

    cross_check(&model, k, n_k, bound, opts)?;
    Ok(Threshold {
        k,
        n_k,
        envelope_start,
        last_violation,
    })
}

fn cross_check(
    model: &RatioModel<'_>,
    k: u64,
    n_k: u64,
    bound: f64,
    opts: &CertifyOptions,
) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ k);
    let span = n_k.saturating_mul(10).max(n_k + 10_000);
    let dense = (n_k..n_k + 1000).map(Some);
    let sparse = (0..opts.samples).map(|_| Some(rng.gen_range(n_k..=span)));
    for n in dense.chain(sparse).flatten() {
        if model.in_t(n) {
            let ratio = model.ratio(n);
            if ratio > bound {
                return Err(Error::Certification { k, n, ratio, bound });
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessBlock {
    pub k: u64,
    pub n_k: u64,
    /// `A_k`, increasing.
    pub elements: Vec<u64>,
    /// `sum_{n in A_k} x^(r)_(f(n))`.
    pub sum_r: f64,
    /// `sum_{n in A_k} x^(s)_n`.
    pub sum_s: f64,
}

impl WitnessBlock {
    pub fn min(&self) -> u64 {
        self.elements[0]
    }

    pub fn max(&self) -> u64 {
        *self.elements.last().expect("blocks are non-empty")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessReport {
    pub r: f64,
    pub s: f64,
    pub t: f64,
    pub f: BijectionSpec,
    pub blocks: Vec<WitnessBlock>,
    /// `sum_A x^(r) ∘ f`.
    pub total_r: f64,
    /// `sum_A x^(s)`.
    pub total_s: f64,
    /// `sum_{k <= K} 1/k^2`.
    pub bound: f64,
}

/// Which witness property failed, if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WitnessFailure {
    Placement { k: u64 },
    BlockSum { k: u64 },
    ConvergentSide { k: u64 },
    NotInT { k: u64, n: u64 },
    Totals,
}

impl fmt::Display for WitnessFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WitnessFailure::Placement { k } => write!(f, "block {k} starts too early"),
            WitnessFailure::BlockSum { k } => write!(f, "block {k} sum outside (1/2, 1)"),
            WitnessFailure::ConvergentSide { k } => write!(f, "block {k} exceeds 1/k^2 on the x^(s) side"),
            WitnessFailure::NotInT { k, n } => write!(f, "block {k} element {n} lies in S"),
            WitnessFailure::Totals => f.write_str("totals violate K/2 or sum 1/k^2"),
        }
    }
}

impl WitnessReport {
    /// Re-checks every per-block and total property.
    pub fn failures(&self) -> Vec<WitnessFailure> {
        let mut out = Vec::new();
        let mut prev_max = 0;
        for b in &self.blocks {
            let k = b.k;
            if b.min() < b.n_k + prev_max {
                out.push(WitnessFailure::Placement { k });
            }
            if !(b.sum_r > 0.5 && b.sum_r < 1.0) {
                out.push(WitnessFailure::BlockSum { k });
            }
            let kk = (k * k) as f64;
            if !(b.sum_s <= b.sum_r / kk && b.sum_r / kk <= 1.0 / kk) {
                out.push(WitnessFailure::ConvergentSide { k });
            }
            if let Some(&n) = b.elements.iter().find(|&&n| !in_t(&self.f, self.t, n)) {
                out.push(WitnessFailure::NotInT { k, n });
            }
            prev_max = b.max();
        }
        let half_k = self.blocks.len() as f64 / 2.0;
        if !(self.total_r >= half_k && self.total_s <= self.bound) {
            out.push(WitnessFailure::Totals);
        }
        out
    }

    pub fn passed(&self) -> bool {
        self.failures().is_empty()
    }

    /// `k,n_k,block_min,block_max,block_sum_r,block_sum_s` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,n_k,block_min,block_max,block_sum_r,block_sum_s\n");
        for b in &self.blocks {
            out.push_str(&format!(
                "{},{},{},{},{:.17e},{:.17e}\n",
                b.k,
                b.n_k,
                b.min(),
                b.max(),
                b.sum_r,
                b.sum_s
            ));
        }
        out
    }
}

/// Greedy construction of `K` blocks; every index stays `<= scan_cap`.
pub fn build_witness(
    r: f64,
    s: f64,
    f: &BijectionSpec,
    blocks: u64,
    scan_cap: u64,
    opts: &CertifyOptions,
) -> Result<WitnessReport> {
    let t = choose_t(r, s)?;
    if r >= 1.0 {
        return Err(Error::invalid("r must be < 1"));
    }
    if blocks == 0 {
        return Err(Error::invalid("need at least one block"));
    }
    let thresholds: Vec<Threshold> = (1..=blocks)
        .into_par_iter()
        .map(|k| nk_threshold(k, r, s, t, f, scan_cap, opts))
        .collect::<Result<_>>()?;
    let x_r = power_transform(SequenceExpr::star(), r)?;
    let x_s = power_transform(SequenceExpr::star(), s)?;

    let mut out = Vec::with_capacity(blocks as usize);
    let mut prev_max = 0u64;
    let (mut total_r, mut total_s) = (CompensatedSum::new(), CompensatedSum::new());
    for th in thresholds {
        let start = prev_max
            .checked_add(th.n_k)
            .ok_or(Error::IndexOverflow("placing a witness block"))?;
        let (mut sum_r, mut sum_s) = (CompensatedSum::new(), CompensatedSum::new());
        let mut elements = Vec::new();
        let mut n = start;
        while !(sum_r.value() > 0.5) {
            if n > scan_cap {
                return Err(Error::ScanCapExceeded {
                    k: th.k,
                    cap: scan_cap,
                    last_violation: None,
                });
            }
            if in_t(f, t, n) {
                let term = x_r.eval(f.apply(n));
                if sum_r.value() + term < 1.0 {
                    sum_r.add(term);
                    sum_s.add(x_s.eval(n));
                    elements.push(n);
                }
            }
            n += 1;
        }
        prev_max = *elements.last().expect("block reached its target sum");
        total_r.add(sum_r.value());
        total_s.add(sum_s.value());
        out.push(WitnessBlock {
            k: th.k,
            n_k: th.n_k,
            elements,
            sum_r: sum_r.value(),
            sum_s: sum_s.value(),
        });
    }
    let bound = (1..=blocks).map(|k| 1.0 / (k as f64 * k as f64)).sum();
    Ok(WitnessReport {
        r,
        s,
        t,
        f: f.clone(),
        blocks: out,
        total_r: total_r.value(),
        total_s: total_s.value(),
        bound,
    })
}

// --- root-prime dichotomy ----------------------------------------------------

/// Growth of `x^(r)` over an index set and over the same set shifted by -1.
#[derive(Debug, Clone, PartialEq)]
pub struct Dichotomy {
    pub direct_set: IndexSetExpr,
    pub shifted_set: IndexSetExpr,
    pub direct: GrowthEvidence,
    pub shifted: GrowthEvidence,
}

impl Dichotomy {
    /// The direct trace levels off with shrinking increments while the
    /// shifted one is fitted best by `log log N` within 5% relative residual.
    pub fn holds(&self) -> bool {
        self.direct.best == GrowthShape::Bounded
            && self.direct.increments_shrinking()
            && self.shifted.best == GrowthShape::LogLog
            && self.shifted.best_fit().relative <= 0.05
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootPrimeReport {
    pub r: f64,
    /// Over `{floor(p^(1/r))}` itself.
    pub literal: Dichotomy,
    /// Over the odd members only. Even members carry the `1/n` branch of the
    /// star sequence, which is not summable along root-primes when `r < 1`
    /// makes `floor(p^(1/r))` even infinitely often.
    pub odd: Dichotomy,
}

fn dichotomy(seq: &SequenceExpr, set: IndexSetExpr, checkpoints: &[u64], mode: SumMode) -> Result<Dichotomy> {
    let shifted_set = IndexSetExpr::shift(set.clone(), -1);
    Ok(Dichotomy {
        direct: growth_profile(seq, &set, checkpoints, mode)?,
        shifted: growth_profile(seq, &shifted_set, checkpoints, mode)?,
        direct_set: set,
        shifted_set,
    })
}

pub fn root_prime_membership_test(r: f64, checkpoints: &[u64], mode: SumMode) -> Result<RootPrimeReport> {
    let seq = power_transform(SequenceExpr::star(), r)?;
    let set = root_primes(r)?;
    Ok(RootPrimeReport {
        r,
        literal: dichotomy(&seq, set.clone(), checkpoints, mode)?,
        odd: dichotomy(&seq, IndexSetExpr::odd(set), checkpoints, mode)?,
    })
}
