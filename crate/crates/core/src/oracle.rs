//! MPFR reference evaluation used to cross-check the `f64` path.

use rayon::prelude::*;
use rug::ops::Pow;
use rug::Float;

use std::ops::Range;

use crate::error::Result;
use crate::index_sets::IndexSetExpr;
use crate::sequences::{Rule, SequenceExpr, GEOMETRIC_FLOOR};
use crate::summation::{pieces, Piece};
use crate::Parity;

/// Working precision in bits (about 38 significant digits).
pub const PREC: u32 = 128;

const CHUNK: usize = 1 << 14;

/// `seq(n)` evaluated at `prec` bits. Patch and table entries are taken as
/// the exact binary values they store.
pub fn eval_precise(seq: &SequenceExpr, n: u64, prec: u32) -> Float {
    assert!(n >= 1, "sequences are indexed from 1");
    if let Some(p) = seq.patch_at(n) {
        return Float::with_val(prec, p.value_at(n));
    }
    let x = Float::with_val(prec, n);
    match seq.rule() {
        Rule::Harmonic => x.recip(),
        Rule::LogHarmonic => log_harmonic(x, n, prec),
        Rule::LogSquaredHarmonic => {
            let l = Float::with_val(prec, n + 1).ln();
            (x * l.clone() * l).recip()
        }
        Rule::StarInterleaved => {
            if n % 2 == 0 {
                x.recip()
            } else {
                log_harmonic(x, n, prec)
            }
        }
        Rule::Constant(c) => Float::with_val(prec, *c),
        Rule::Geometric(q) => Float::with_val(prec, *q).pow(n).max(&Float::with_val(prec, GEOMETRIC_FLOOR)),
        Rule::Power { base, exponent } => {
            eval_precise(base, n, prec).pow(Float::with_val(prec, *exponent))
        }
        Rule::Fubini { even, odd } => {
            if n % 2 == 0 {
                eval_precise(even, n / 2, prec)
            } else {
                eval_precise(odd, n.div_ceil(2), prec)
            }
        }
        Rule::Table { values, tail } => match values.get((n - 1) as usize) {
            Some(&v) => Float::with_val(prec, v),
            None => eval_precise(tail, n, prec),
        },
    }
}

fn log_harmonic(x: Float, n: u64, prec: u32) -> Float {
    let l = Float::with_val(prec, n + 1).ln();
    (x * l).recip()
}

/// `sum_{n in indices} seq(n)` at `prec` bits. Chunks are summed across
/// threads and merged in index order, so the result is reproducible.
pub fn precise_sum(seq: &SequenceExpr, indices: &[u64], prec: u32) -> Float {
    let partials: Vec<Float> = indices
        .par_chunks(CHUNK)
        .map(|chunk| {
            chunk.iter().fold(Float::with_val(prec, 0), |acc, &n| {
                acc + eval_precise(seq, n, prec)
            })
        })
        .collect();
    partials
        .into_iter()
        .fold(Float::with_val(prec, 0), |acc, p| acc + p)
}

/// Precise sums of `seq` over `set ∩ [1, h]` for each horizon `h` (increasing).
pub fn precise_partial_sums(
    seq: &SequenceExpr,
    set: &IndexSetExpr,
    horizons: &[u64],
    prec: u32,
) -> Result<Vec<Float>> {
    let last = horizons.last().copied().unwrap_or(0);
    let indices = set.elements_upto(last)?;
    let mut out = Vec::with_capacity(horizons.len());
    let mut acc = Float::with_val(prec, 0);
    let mut from = 0;
    for &h in horizons {
        let to = indices.partition_point(|&n| n <= h).max(from);
        acc += precise_sum(seq, &indices[from..to], prec);
        out.push(acc.clone());
        from = to;
    }
    Ok(out)
}

/// [`sum_range`](crate::summation::sum_range) at `prec` bits.
pub fn precise_sum_range(
    seq: &SequenceExpr,
    range: Range<u64>,
    parity: Option<Parity>,
    max_terms: u64,
    prec: u32,
) -> Result<Float> {
    let mut acc = Float::with_val(prec, 0);
    for piece in pieces(seq, range, parity, max_terms)? {
        match piece {
            Piece::Repeated { count, value } => acc += Float::with_val(prec, value) * count,
            Piece::Rule(n) => acc += eval_precise(seq, n, prec),
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_at_one() {
        let v = eval_precise(&SequenceExpr::star(), 1, PREC);
        let expected = Float::with_val(PREC, Float::parse("1.442695040888963407359924681").unwrap());
        assert!((v - expected).abs() < 1e-26);
    }

    #[test]
    fn harmonic_million() {
        let h = precise_partial_sums(
            &SequenceExpr::harmonic(),
            &IndexSetExpr::Naturals,
            &[4, 1_000_000],
            PREC,
        )
        .unwrap();
        assert!((h[0].to_f64() - 25.0 / 12.0).abs() < 1e-15);
        let expected = Float::with_val(PREC, Float::parse("14.3927267228657236313811274932").unwrap());
        assert!((h[1].clone() - expected).abs() < 1e-25);
    }
}
