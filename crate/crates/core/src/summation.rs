//! Subseries partial sums with certified rounding bounds, prefix domination,
//! and growth-shape evidence.

use std::fmt;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::index_sets::IndexSetExpr;
use crate::oracle;
use crate::sequences::{Patch, SequenceExpr};
use crate::Parity;

/// Unit roundoff of `f64`.
const U: f64 = f64::EPSILON / 2.0;
/// Largest absolute error a subnormal-floored term can carry.
const SUBNORMAL_ABS: f64 = 4.9406564584124654e-324;

/// Decades used when no checkpoints are given.
pub const DEFAULT_CHECKPOINTS: [u64; 5] = [1_000, 10_000, 100_000, 1_000_000, 10_000_000];

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
    count: u64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, term: f64) {
        let t = self.sum + term;
        if self.sum.abs() >= term.abs() {
            self.comp += (self.sum - t) + term;
        } else {
            self.comp += (term - t) + self.sum;
        }
        self.sum = t;
        self.count += 1;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Bound on `|value() - exact|` for positive terms, each carrying a
    /// relative error of at most `term_rel`.
    pub fn error_bound(&self, term_rel: f64) -> f64 {
        let s = self.value();
        let n = self.count as f64;
        let rel = term_rel + 2.0 * U + 4.0 * n * U * U;
        (s * rel + n * SUBNORMAL_ABS) * (1.0 + 1e-12)
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        iter.into_iter().for_each(|t| self.add(t));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SumMode {
    #[default]
    Compensated,
    /// MPFR at [`oracle::PREC`] bits, rounded to `f64` at each checkpoint.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint {
    pub horizon: u64,
    pub sum: f64,
    /// Upper bound on `|sum - exact|`.
    pub rounding_bound: f64,
    /// Number of terms summed up to `horizon`.
    pub terms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartialSumSeries {
    pub mode: SumMode,
    pub checkpoints: Vec<Checkpoint>,
}

impl PartialSumSeries {
    pub fn last(&self) -> &Checkpoint {
        self.checkpoints.last().expect("series has at least one checkpoint")
    }

    /// `horizon,sum,rounding_bound` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("horizon,sum,rounding_bound\n");
        for c in &self.checkpoints {
            out.push_str(&format!("{},{:.17e},{:.3e}\n", c.horizon, c.sum, c.rounding_bound));
        }
        out
    }
}

fn check_horizons(horizons: &[u64]) -> Result<()> {
    if horizons.is_empty() {
        return Err(Error::invalid("at least one horizon is required"));
    }
    if horizons[0] == 0 || horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("horizons must be positive and strictly increasing"));
    }
    Ok(())
}

/// `sum_{n in set, n <= h} seq(n)` for each horizon `h`, compensated.
pub fn partial_sums(
    seq: &SequenceExpr,
    set: &IndexSetExpr,
    horizons: &[u64],
) -> Result<PartialSumSeries> {
    partial_sums_with(seq, set, horizons, SumMode::Compensated)
}

pub fn partial_sums_with(
    seq: &SequenceExpr,
    set: &IndexSetExpr,
    horizons: &[u64],
    mode: SumMode,
) -> Result<PartialSumSeries> {
    check_horizons(horizons)?;
    let checkpoints = match mode {
        SumMode::Compensated => compensated_checkpoints(seq, set, horizons)?,
        SumMode::Oracle => oracle_checkpoints(seq, set, horizons)?,
    };
    Ok(PartialSumSeries { mode, checkpoints })
}

fn compensated_checkpoints(
    seq: &SequenceExpr,
    set: &IndexSetExpr,
    horizons: &[u64],
) -> Result<Vec<Checkpoint>> {
    let term_rel = seq.rule_error_ulps() * U;
    let mut acc = CompensatedSum::new();
    let mut out = Vec::with_capacity(horizons.len());
    let mut pending = horizons.iter().copied().peekable();
    let record = |acc: &CompensatedSum, horizon| Checkpoint {
        horizon,
        sum: acc.value(),
        rounding_bound: acc.error_bound(term_rel),
        terms: acc.count(),
    };
    for n in set.iter_upto(*horizons.last().unwrap()) {
        let n = n?;
        while let Some(h) = pending.next_if(|&h| h < n) {
            out.push(record(&acc, h));
        }
        acc.add(seq.eval(n));
    }
    out.extend(pending.map(|h| record(&acc, h)));
    Ok(out)
}

fn oracle_checkpoints(
    seq: &SequenceExpr,
    set: &IndexSetExpr,
    horizons: &[u64],
) -> Result<Vec<Checkpoint>> {
    let indices = set.elements_upto(*horizons.last().unwrap())?;
    let sums = oracle::precise_partial_sums(seq, set, horizons, oracle::PREC)?;
    let ulp = 2f64.powi(-(oracle::PREC as i32));
    Ok(horizons
        .iter()
        .zip(sums)
        .map(|(&horizon, s)| {
            let terms = indices.partition_point(|&n| n <= horizon) as u64;
            let sum = s.to_f64();
            // final rounding to f64 plus the MPFR accumulation error
            let rounding_bound = sum * (U + (terms as f64 + 16.0) * ulp) + SUBNORMAL_ABS;
            Checkpoint {
                horizon,
                sum,
                rounding_bound,
                terms,
            }
        })
        .collect())
}

/// Single-horizon convenience wrapper.
pub fn partial_sum(seq: &SequenceExpr, set: &IndexSetExpr, horizon: u64) -> Result<Checkpoint> {
    Ok(*partial_sums(seq, set, &[horizon])?.last())
}

/// `(sum_{k in A, k <= n} x_k, sum_{k in A, k <= n} y_k)`.
pub fn alpha_beta(
    set: &IndexSetExpr,
    x: &SequenceExpr,
    y: &SequenceExpr,
    n: u64,
) -> Result<(f64, f64)> {
    Ok((partial_sum(x, set, n)?.sum, partial_sum(y, set, n)?.sum))
}

/// A stretch of a range sum: `count` copies of one stored value, or a single
/// rule term at an index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Piece {
    Repeated { count: u64, value: f64 },
    Rule(u64),
}

/// Splits `range` (restricted to `parity`) at patch boundaries. Block-patched
/// stretches collapse to one [`Piece::Repeated`]; at most `max_terms`
/// unpatched indices are expanded.
pub(crate) fn pieces(
    seq: &SequenceExpr,
    range: Range<u64>,
    parity: Option<Parity>,
    max_terms: u64,
) -> Result<Vec<Piece>> {
    let Range { start, end } = range;
    if start == 0 {
        return Err(Error::invalid("ranges start at index 1"));
    }
    let mut cuts: Vec<u64> = seq
        .patches()
        .iter()
        .flat_map(|p| [p.start(), p.end()])
        .filter(|&c| start < c && c < end)
        .collect();
    cuts.push(start);
    cuts.push(end);
    cuts.sort_unstable();
    cuts.dedup();

    let keep = |n: u64| parity.map_or(true, |q| q.contains(n));
    let mut out = Vec::new();
    let mut plain = 0u64;
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        match seq.patch_at(lo) {
            Some(Patch::Block { even, odd, .. }) => {
                let (evens, odds) = parity_counts(lo..hi);
                if parity != Some(Parity::Odd) && evens > 0 {
                    out.push(Piece::Repeated { count: evens, value: *even });
                }
                if parity != Some(Parity::Even) && odds > 0 {
                    out.push(Piece::Repeated { count: odds, value: *odd });
                }
            }
            Some(p @ Patch::Point { .. }) => {
                if keep(lo) {
                    out.push(Piece::Repeated { count: 1, value: p.value_at(lo) });
                }
            }
            None => {
                plain += hi - lo;
                if plain > max_terms {
                    return Err(Error::invalid(format!(
                        "unpatched stretch of {plain} terms exceeds the {max_terms}-term budget"
                    )));
                }
                out.extend((lo..hi).filter(|&n| keep(n)).map(Piece::Rule));
            }
        }
    }
    Ok(out)
}

/// Sum of `seq` over `range`, optionally restricted to one parity. Stretches
/// covered by a block patch are summed in closed form, so ranges of any
/// length are fine as long as the unpatched part stays below `max_terms`.
pub fn sum_range(
    seq: &SequenceExpr,
    range: Range<u64>,
    parity: Option<Parity>,
    max_terms: u64,
) -> Result<f64> {
    let mut acc = CompensatedSum::new();
    for piece in pieces(seq, range, parity, max_terms)? {
        acc.add(match piece {
            Piece::Repeated { count, value } => count as f64 * value,
            Piece::Rule(n) => seq.eval(n),
        });
    }
    Ok(acc.value())
}

/// Number of even and odd integers in `range`.
pub fn parity_counts(range: Range<u64>) -> (u64, u64) {
    let evens = range.end.div_ceil(2) - range.start.div_ceil(2);
    (evens, range.end - range.start - evens)
}

// --- domination --------------------------------------------------------------

/// Prefix comparison `sum_{i<=k} a_i <= C sum_{i<=k} b_i` over term lists.
#[derive(Debug, Clone, PartialEq)]
pub struct DominationReport {
    /// Number of prefix pairs compared.
    pub terms: u64,
    /// Smallest constant that works for every compared prefix.
    pub constant: f64,
    /// First `k` attaining `constant`.
    pub argmax: u64,
    /// `(k, ratio_k)` at `k = d * 10^j` and at `k = terms`.
    pub trace: Vec<(u64, f64)>,
    /// Largest ratio over the final decade `(terms / 10, terms]`.
    pub last_decade_max: f64,
}

impl DominationReport {
    pub fn bounded(&self) -> bool {
        self.constant.is_finite() && self.last_decade_max <= self.constant
    }

    /// `k,ratio` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,ratio\n");
        for (k, r) in &self.trace {
            out.push_str(&format!("{k},{r:.17e}\n"));
        }
        out
    }
}

fn is_trace_point(k: u64) -> bool {
    let mut m = k;
    while m >= 10 && m % 10 == 0 {
        m /= 10;
    }
    m < 10
}

/// Compares prefix sums of the first `terms` enumerated terms of `a` and `b`.
pub fn domination_check(
    a: (&SequenceExpr, &IndexSetExpr),
    b: (&SequenceExpr, &IndexSetExpr),
    terms: usize,
) -> Result<DominationReport> {
    let left = a.1.enumerate(terms)?;
    let right = b.1.enumerate(terms)?;
    if left.is_empty() {
        return Err(Error::EmptyPrefix("left-hand subseries has no terms"));
    }
    if right.is_empty() {
        return Err(Error::EmptyPrefix("right-hand subseries has no terms"));
    }
    let len = left.len().min(right.len()) as u64;
    let decade_start = len / 10;
    let (mut sa, mut sb) = (CompensatedSum::new(), CompensatedSum::new());
    let mut report = DominationReport {
        terms: len,
        constant: f64::NEG_INFINITY,
        argmax: 0,
        trace: Vec::new(),
        last_decade_max: f64::NEG_INFINITY,
    };
    for (k, (&i, &j)) in (1u64..).zip(left.iter().zip(&right)) {
        sa.add(a.0.eval(i));
        sb.add(b.0.eval(j));
        let ratio = sa.value() / sb.value();
        if ratio > report.constant {
            report.constant = ratio;
            report.argmax = k;
        }
        if k > decade_start {
            report.last_decade_max = report.last_decade_max.max(ratio);
        }
        if is_trace_point(k) || k == len {
            report.trace.push((k, ratio));
        }
    }
    Ok(report)
}

// --- growth evidence ---------------------------------------------------------

/// Reference divergence rates a trace is fitted against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GrowthShape {
    /// `a - b / log N`: levels off.
    Bounded,
    /// `a + b log log N`
    LogLog,
    /// `a + b log N`
    Log,
}

impl GrowthShape {
    pub const ALL: [GrowthShape; 3] = [GrowthShape::Bounded, GrowthShape::LogLog, GrowthShape::Log];

    pub fn basis(self, n: f64) -> f64 {
        match self {
            GrowthShape::Bounded => -1.0 / n.ln(),
            GrowthShape::LogLog => n.ln().ln(),
            GrowthShape::Log => n.ln(),
        }
    }
}

impl fmt::Display for GrowthShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GrowthShape::Bounded => "bounded",
            GrowthShape::LogLog => "loglog",
            GrowthShape::Log => "log",
        })
    }
}

/// Least-squares fit of `intercept + slope * shape.basis(N)` to a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeFit {
    pub shape: GrowthShape,
    pub intercept: f64,
    pub slope: f64,
    pub rms: f64,
    pub max_abs: f64,
    /// `max_abs` relative to the growth of the trace over the checkpoints.
    pub relative: f64,
}

/// Numerical evidence about how a subseries grows. Finite horizons cannot
/// decide convergence; this only ranks candidate shapes by fit quality.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthEvidence {
    pub series: PartialSumSeries,
    /// `S(N_{i+1}) - S(N_i)`.
    pub increments: Vec<f64>,
    pub fits: Vec<ShapeFit>,
    /// Smallest RMS residual; ties go to the slower shape.
    pub best: GrowthShape,
}

impl GrowthEvidence {
    pub const LABEL: &'static str = "EVIDENCE";

    pub fn fit(&self, shape: GrowthShape) -> &ShapeFit {
        self.fits
            .iter()
            .find(|f| f.shape == shape)
            .expect("every shape is fitted")
    }

    pub fn best_fit(&self) -> &ShapeFit {
        self.fit(self.best)
    }

    pub fn final_increment(&self) -> f64 {
        *self.increments.last().expect("at least two checkpoints")
    }

    pub fn increments_shrinking(&self) -> bool {
        self.increments.windows(2).all(|w| w[1] < w[0])
    }
}

pub fn growth_profile(
    seq: &SequenceExpr,
    set: &IndexSetExpr,
    checkpoints: &[u64],
    mode: SumMode,
) -> Result<GrowthEvidence> {
    if checkpoints.len() < 3 {
        return Err(Error::invalid(format!(
            "growth profiling needs at least 3 checkpoints, got {}",
            checkpoints.len()
        )));
    }
    if checkpoints[0] < 3 {
        return Err(Error::invalid("growth checkpoints must be >= 3"));
    }
    let series = partial_sums_with(seq, set, checkpoints, mode)?;
    Ok(evidence_from(series))
}

/// Fits every shape to an already computed trace.
pub fn evidence_from(series: PartialSumSeries) -> GrowthEvidence {
    let xs: Vec<f64> = series.checkpoints.iter().map(|c| c.horizon as f64).collect();
    let ys: Vec<f64> = series.checkpoints.iter().map(|c| c.sum).collect();
    let increments = ys.windows(2).map(|w| w[1] - w[0]).collect();
    let span = ys[ys.len() - 1] - ys[0];
    let fits: Vec<ShapeFit> = GrowthShape::ALL
        .iter()
        .map(|&shape| fit_shape(shape, &xs, &ys, span))
        .collect();
    let best = fits
        .iter()
        .fold(None::<&ShapeFit>, |best, f| match best {
            Some(b) if b.rms <= f.rms => Some(b),
            _ => Some(f),
        })
        .expect("three fits")
        .shape;
    GrowthEvidence {
        series,
        increments,
        fits,
        best,
    }
}

fn fit_shape(shape: GrowthShape, xs: &[f64], ys: &[f64], span: f64) -> ShapeFit {
    let gs: Vec<f64> = xs.iter().map(|&x| shape.basis(x)).collect();
    let n = gs.len() as f64;
    let gm = gs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let sgg: f64 = gs.iter().map(|g| (g - gm) * (g - gm)).sum();
    let sgy: f64 = gs.iter().zip(ys).map(|(g, y)| (g - gm) * (y - ym)).sum();
    let slope = if sgg > 0.0 { sgy / sgg } else { 0.0 };
    let intercept = ym - slope * gm;
    let residuals: Vec<f64> = gs
        .iter()
        .zip(ys)
        .map(|(g, y)| y - (intercept + slope * g))
        .collect();
    let rms = (residuals.iter().map(|r| r * r).sum::<f64>() / n).sqrt();
    let max_abs = residuals.iter().fold(0.0, |m: f64, r| m.max(r.abs()));
    let relative = if span > 0.0 { max_abs / span } else { 0.0 };
    ShapeFit {
        shape,
        intercept,
        slope,
        rms,
        max_abs,
        relative,
    }
}
