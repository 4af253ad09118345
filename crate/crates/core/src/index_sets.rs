//! Lazy, strictly increasing enumerations of subsets of the positive integers.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use rug::ops::Pow;
use rug::Float;

use crate::error::{Error, Result};
use crate::parse::Cursor;
use crate::sieve::PrimeSieve;
use crate::Parity;

#[derive(Debug, Clone, PartialEq)]
pub enum IndexSetExpr {
    /// Every positive integer.
    Naturals,
    Primes,
    /// `{a + offset : a in base, a + offset >= 1}`; non-positive results are dropped.
    Shift {
        base: Box<IndexSetExpr>,
        offset: i64,
    },
    /// `{floor(p_n^(1/r)) : n >= 1}` for `0 < r <= 1`.
    RootPrimes(f64),
    /// Union of sorted, pairwise disjoint, half-open intervals.
    Blocks(Vec<Range<u64>>),
    /// `base` with every element of parity `remove` taken out.
    ParityRemove {
        base: Box<IndexSetExpr>,
        remove: Parity,
    },
    ExplicitFinite(Vec<u64>),
}

type Stream<'a> = Box<dyn Iterator<Item = Result<u64>> + 'a>;

impl IndexSetExpr {
    pub fn primes() -> Self {
        IndexSetExpr::Primes
    }

    pub fn shift(base: IndexSetExpr, offset: i64) -> Self {
        IndexSetExpr::Shift {
            base: Box::new(base),
            offset,
        }
    }

    /// `P - 1`.
    pub fn shifted_primes() -> Self {
        Self::shift(IndexSetExpr::Primes, -1)
    }

    pub fn blocks(ranges: Vec<Range<u64>>) -> Result<Self> {
        for r in &ranges {
            if r.start == 0 || r.start >= r.end {
                return Err(Error::invalid(format!(
                    "block {}..{} must be non-empty and start at >= 1",
                    r.start, r.end
                )));
            }
        }
        if ranges.windows(2).any(|w| w[0].end > w[1].start) {
            return Err(Error::invalid("blocks must be sorted and pairwise disjoint"));
        }
        Ok(IndexSetExpr::Blocks(ranges))
    }

    pub fn finite(mut elements: Vec<u64>) -> Result<Self> {
        elements.sort_unstable();
        elements.dedup();
        if elements.first() == Some(&0) {
            return Err(Error::invalid("index sets live in the positive integers"));
        }
        Ok(IndexSetExpr::ExplicitFinite(elements))
    }

    /// Keep only the odd elements.
    pub fn odd(base: IndexSetExpr) -> Self {
        IndexSetExpr::ParityRemove {
            base: Box::new(base),
            remove: Parity::Even,
        }
    }

    /// Keep only the even elements.
    pub fn even(base: IndexSetExpr) -> Self {
        IndexSetExpr::ParityRemove {
            base: Box::new(base),
            remove: Parity::Odd,
        }
    }

    /// Elements `<= limit`, in increasing order.
    pub fn iter_upto(&self, limit: u64) -> impl Iterator<Item = Result<u64>> + '_ {
        self.stream(limit)
    }

    pub fn elements_upto(&self, limit: u64) -> Result<Vec<u64>> {
        self.stream(limit).collect()
    }

    /// The first `count` elements (fewer if the set is finite and smaller).
    pub fn enumerate(&self, count: usize) -> Result<Vec<u64>> {
        self.stream(u64::MAX).take(count).collect()
    }

    pub fn contains(&self, n: u64) -> Result<bool> {
        if n == 0 {
            return Ok(false);
        }
        Ok(match self {
            IndexSetExpr::Naturals => true,
            IndexSetExpr::Primes => PrimeSieve::global().is_prime(n)?,
            IndexSetExpr::Shift { base, offset } => {
                let m = n as i128 - *offset as i128;
                m >= 1 && m <= u64::MAX as i128 && base.contains(m as u64)?
            }
            IndexSetExpr::RootPrimes(_) => {
                let mut last = None;
                for v in self.stream(n) {
                    last = Some(v?);
                }
                last == Some(n)
            }
            IndexSetExpr::Blocks(ranges) => ranges.iter().any(|r| r.contains(&n)),
            IndexSetExpr::ParityRemove { base, remove } => {
                !remove.contains(n) && base.contains(n)?
            }
            IndexSetExpr::ExplicitFinite(v) => v.binary_search(&n).is_ok(),
        })
    }

    fn stream(&self, limit: u64) -> Stream<'_> {
        match self {
            IndexSetExpr::Naturals => Box::new((1..=limit).map(Ok)),
            IndexSetExpr::Primes => Box::new(PrimeStream {
                sieve: PrimeSieve::global(),
                idx: 0,
                limit,
                done: false,
            }),
            IndexSetExpr::Shift { base, offset } => {
                let offset = *offset;
                let base_limit = if offset >= 0 {
                    limit.saturating_sub(offset as u64)
                } else {
                    limit.saturating_add(offset.unsigned_abs())
                };
                let inner = if offset > 0 && limit < offset as u64 {
                    Box::new(std::iter::empty())
                } else {
                    base.stream(base_limit)
                };
                Box::new(
                    inner
                        .filter_map(move |v| match v {
                            Ok(a) => {
                                let shifted = a as i128 + offset as i128;
                                (shifted >= 1).then(|| {
                                    u64::try_from(shifted)
                                        .map_err(|_| Error::IndexOverflow("shifting an index set"))
                                })
                            }
                            Err(e) => Some(Err(e)),
                        })
                        .take_while(move |v| v.as_ref().map_or(true, |&a| a <= limit)),
                )
            }
            IndexSetExpr::RootPrimes(r) => {
                let r = *r;
                let prime_limit = if limit == u64::MAX {
                    u64::MAX
                } else {
                    ((limit as f64 + 1.0).powf(r).ceil() as u64).saturating_add(1)
                };
                let primes = PrimeStream {
                    sieve: PrimeSieve::global(),
                    idx: 0,
                    limit: prime_limit,
                    done: false,
                };
                let mut last = 0u64;
                Box::new(
                    primes
                        .map(move |p| {
                            p.and_then(|p| {
                                root_value(p, r)
                                    .ok_or(Error::IndexOverflow("computing a root-prime index"))
                            })
                        })
                        .filter(move |v| match v {
                            Ok(v) if *v <= last => false,
                            Ok(v) => {
                                last = *v;
                                true
                            }
                            Err(_) => true,
                        })
                        .take_while(move |v| v.as_ref().map_or(true, |&a| a <= limit)),
                )
            }
            IndexSetExpr::Blocks(ranges) => Box::new(
                ranges
                    .iter()
                    .flat_map(|r| r.clone())
                    .take_while(move |&a| a <= limit)
                    .map(Ok),
            ),
            IndexSetExpr::ParityRemove { base, remove } => {
                let remove = *remove;
                Box::new(
                    base.stream(limit)
                        .filter(move |v| v.as_ref().map_or(true, |&a| !remove.contains(a))),
                )
            }
            IndexSetExpr::ExplicitFinite(v) => Box::new(
                v.iter()
                    .copied()
                    .take_while(move |&a| a <= limit)
                    .map(Ok),
            ),
        }
    }
}

/// `{floor(p_n^(1/r))}`, de-duplicated.
pub fn root_primes(r: f64) -> Result<IndexSetExpr> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::invalid(format!("root-prime exponent must lie in (0, 1], got {r}")));
    }
    Ok(IndexSetExpr::RootPrimes(r))
}

/// `floor(p^(1/r))`, exact when `1/r` is an integer.
fn root_value(p: u64, r: f64) -> Option<u64> {
    let inv = 1.0 / r;
    if (inv - inv.round()).abs() < 1e-12 {
        return p.checked_pow(inv.round() as u32);
    }
    let approx = (p as f64).powf(inv);
    if !(approx < 1.8e19) {
        return None;
    }
    // covers the powf error and the rounding of 1/r, amplified by ln p
    let tol = approx * 1e-13 + 1e-9;
    let frac = approx - approx.floor();
    if approx < F64_TRUSTED && frac > tol && frac < 1.0 - tol {
        return Some(approx.floor() as u64);
    }
    root_value_precise(p, r)
}

/// Near an integer, or for large roots, the floor is taken at 128 bits.
fn root_value_precise(p: u64, r: f64) -> Option<u64> {
    let root = Float::with_val(128, p).pow(Float::with_val(128, r).recip()).floor();
    if root >= Float::with_val(128, u64::MAX) {
        return None;
    }
    let hi = Float::with_val(128, &root >> 32u32).floor();
    let lo = Float::with_val(128, &root - Float::with_val(128, &hi << 32u32));
    let (hi, lo) = (hi.to_u32_saturating()?, lo.to_u32_saturating()?);
    Some((hi as u64) << 32 | lo as u64)
}

const F64_TRUSTED: f64 = 2_199_023_255_552.0;

struct PrimeStream {
    sieve: &'static PrimeSieve,
    idx: usize,
    limit: u64,
    done: bool,
}

impl Iterator for PrimeStream {
    type Item = Result<u64>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.sieve.prime_at(self.idx, self.limit) {
            Ok(Some(p)) => {
                self.idx += 1;
                Some(Ok(p))
            }
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

// --- grammar -----------------------------------------------------------------

impl fmt::Display for IndexSetExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexSetExpr::Naturals => f.write_str("all"),
            IndexSetExpr::Primes => f.write_str("primes"),
            IndexSetExpr::Shift { base, offset } => write!(f, "shift({base}, {offset})"),
            IndexSetExpr::RootPrimes(r) => write!(f, "rootprimes({r:?})"),
            IndexSetExpr::Blocks(ranges) => {
                f.write_str("blocks(")?;
                for (i, r) in ranges.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{}..{}", r.start, r.end)?;
                }
                f.write_str(")")
            }
            IndexSetExpr::ParityRemove { base, remove } => match remove {
                Parity::Even => write!(f, "odd({base})"),
                Parity::Odd => write!(f, "even({base})"),
            },
            IndexSetExpr::ExplicitFinite(v) => {
                f.write_str("finite(")?;
                for (i, a) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl FromStr for IndexSetExpr {
    type Err = Error;

    /// Parses `all`, `primes`, `primes-1`, `shift(set, k)`, `rootprimes(r)`,
    /// `blocks(4..8, 20..26)`, `odd(set)`, `even(set)` and `finite(1, 2, 3)`.
    fn from_str(s: &str) -> Result<Self> {
        let mut cursor = Cursor::new(s);
        let set = parse_set(&mut cursor)?;
        cursor.finish()?;
        Ok(set)
    }
}

fn parse_set(c: &mut Cursor<'_>) -> Result<IndexSetExpr> {
    let at = c.pos();
    let name = c.ident()?;
    Ok(match name {
        "all" | "naturals" => IndexSetExpr::Naturals,
        "primes" => IndexSetExpr::Primes,
        "primes-1" => IndexSetExpr::shifted_primes(),
        "shift" => {
            c.expect("(")?;
            let base = parse_set(c)?;
            c.expect(",")?;
            let offset = c.integer()?;
            c.expect(")")?;
            IndexSetExpr::shift(base, offset)
        }
        "rootprimes" => {
            c.expect("(")?;
            let r = c.real()?;
            c.expect(")")?;
            root_primes(r)?
        }
        "blocks" => {
            c.expect("(")?;
            let mut ranges = Vec::new();
            if !c.eat(")") {
                loop {
                    let start = c.count()?;
                    c.expect("..")?;
                    let end = c.count()?;
                    ranges.push(start..end);
                    if c.eat(")") {
                        break;
                    }
                    c.expect(",")?;
                }
            }
            IndexSetExpr::blocks(ranges)?
        }
        "odd" | "even" => {
            c.expect("(")?;
            let base = parse_set(c)?;
            c.expect(")")?;
            if name == "odd" {
                IndexSetExpr::odd(base)
            } else {
                IndexSetExpr::even(base)
            }
        }
        "finite" => {
            c.expect("(")?;
            let mut v = Vec::new();
            if !c.eat(")") {
                loop {
                    v.push(c.count()?);
                    if c.eat(")") {
                        break;
                    }
                    c.expect(",")?;
                }
            }
            IndexSetExpr::finite(v)?
        }
        other => return Err(Error::parse(at, format!("unknown index set `{other}`"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerations() {
        assert_eq!(IndexSetExpr::Primes.enumerate(4).unwrap(), vec![2, 3, 5, 7]);
        assert_eq!(IndexSetExpr::shifted_primes().enumerate(4).unwrap(), vec![1, 2, 4, 6]);
        let odd_block = IndexSetExpr::odd(IndexSetExpr::blocks(vec![4..8]).unwrap());
        assert_eq!(odd_block.enumerate(usize::MAX).unwrap(), vec![5, 7]);
        assert_eq!(IndexSetExpr::Naturals.enumerate(3).unwrap(), vec![1, 2, 3]);
    }

    #[test]
    fn wide_root_values_are_exact() {
        assert_eq!(root_value(300_007, 0.35), Some(4_456_016_838_135_070));
        assert_eq!(root_value(1_299_709, 0.35), Some(293_854_123_526_374_834));
        assert_eq!(root_value(15_485_863, 0.4), Some(943_709_945_740_300_857));
        assert_eq!(root_value(15_485_863, 0.3), None);
    }

    #[test]
    fn shift_drops_non_positive() {
        let s = IndexSetExpr::shift(IndexSetExpr::Primes, -3);
        assert_eq!(s.enumerate(3).unwrap(), vec![2, 4, 8]);
        let up = IndexSetExpr::shift(IndexSetExpr::finite(vec![1, 4]).unwrap(), 10);
        assert_eq!(up.elements_upto(13).unwrap(), vec![11]);
        assert_eq!(up.elements_upto(5).unwrap(), Vec::<u64>::new());
    }

    #[test]
    fn root_prime_sets() {
        assert_eq!(
            root_primes(1.0).unwrap().enumerate(10).unwrap(),
            IndexSetExpr::Primes.enumerate(10).unwrap()
        );
        let squares = root_primes(0.5).unwrap();
        assert_eq!(squares.enumerate(3).unwrap(), vec![4, 9, 25]);
        assert!(!squares.contains(10).unwrap());
        assert!(squares.contains(49).unwrap());
        assert!(root_primes(0.0).is_err());
        assert!(root_primes(1.01).is_err());
    }

    #[test]
    fn root_values_match_float_definition() {
        // 3^(1/0.9) = 3.39.. and 7^(1/0.9) = 8.70..
        assert_eq!(root_value(3, 0.9), Some(3));
        assert_eq!(root_value(7, 0.9), Some(8));
        assert_eq!(root_value(2, 1.0 / 3.0), Some(8));
    }

    #[test]
    fn membership() {
        assert!(IndexSetExpr::Primes.contains(97).unwrap());
        assert!(!IndexSetExpr::Primes.contains(91).unwrap());
        assert!(IndexSetExpr::shifted_primes().contains(1).unwrap());
        let b = IndexSetExpr::blocks(vec![10..14]).unwrap();
        assert!(b.contains(13).unwrap());
        assert!(!b.contains(14).unwrap());
        assert!(!IndexSetExpr::Naturals.contains(0).unwrap());
    }

    #[test]
    fn bounded_enumeration_stops_at_limit() {
        let p = IndexSetExpr::Primes.elements_upto(30).unwrap();
        assert_eq!(p, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        let pm1 = IndexSetExpr::shifted_primes().elements_upto(6).unwrap();
        assert_eq!(pm1, vec![1, 2, 4, 6]);
    }

    #[test]
    fn invalid_blocks() {
        assert!(IndexSetExpr::blocks(vec![4..8, 6..10]).is_err());
        assert!(IndexSetExpr::blocks(vec![8..4]).is_err());
        assert!(IndexSetExpr::blocks(vec![0..4]).is_err());
        assert!(IndexSetExpr::finite(vec![0, 3]).is_err());
    }

    #[test]
    fn grammar() {
        let cases = [
            "primes",
            "primes-1",
            "rootprimes(0.5)",
            "blocks(4..8, 20..26)",
            "odd(blocks(4..8))",
            "even(primes-1)",
            "finite(1, 5, 9)",
            "shift(rootprimes(0.9), -1)",
            "all",
        ];
        for text in cases {
            let set: IndexSetExpr = text.parse().unwrap();
            let again: IndexSetExpr = set.to_string().parse().unwrap();
            assert_eq!(set, again, "{text}");
        }
        assert_eq!(
            "primes-1".parse::<IndexSetExpr>().unwrap(),
            IndexSetExpr::shifted_primes()
        );
        assert!("blocks(4..)".parse::<IndexSetExpr>().is_err());
        assert!("rootprimes(2)".parse::<IndexSetExpr>().is_err());
    }
}
