//! Positive real sequences built from a closed set of rules plus finite patches.
//!
//! Every rule except [`Rule::Constant`] carries a certified tail bound, which
//! is what lets the game engine turn "sufficiently large index" into a number.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::parse::Cursor;

/// Floor of the geometric rule. Keeps its terms positive and normal, so they
/// carry a relative error bound.
pub const GEOMETRIC_FLOOR: f64 = f64::MIN_POSITIVE;

#[derive(Debug, Clone, PartialEq)]
pub enum Rule {
    /// `1/n`
    Harmonic,
    /// `1/(n log(n+1))`
    LogHarmonic,
    /// `1/(n log^2(n+1))`
    LogSquaredHarmonic,
    /// `1/n` at even `n`, `1/(n log(n+1))` at odd `n`.
    StarInterleaved,
    Constant(f64),
    /// `max(q^n, GEOMETRIC_FLOOR)` with `0 < q < 1`.
    Geometric(f64),
    /// Pointwise power `base_n^exponent`, `0 < exponent <= 1`.
    Power {
        base: Box<SequenceExpr>,
        exponent: f64,
    },
    /// `even` on indices `2k`, `odd` on indices `2k - 1`.
    Fubini {
        even: Box<SequenceExpr>,
        odd: Box<SequenceExpr>,
    },
    /// Explicit values for `n = 1..=values.len()`, then `tail` (same indexing).
    Table {
        values: Vec<f64>,
        tail: Box<SequenceExpr>,
    },
}

/// A finite override of the rule. Later patches win where they overlap.
#[derive(Debug, Clone, PartialEq)]
pub enum Patch {
    Point {
        index: u64,
        value: f64,
    },
    /// Half-open block `[start, end)` taking `even` at even and `odd` at odd indices.
    Block {
        start: u64,
        end: u64,
        even: f64,
        odd: f64,
    },
}

impl Patch {
    pub fn start(&self) -> u64 {
        match *self {
            Patch::Point { index, .. } => index,
            Patch::Block { start, .. } => start,
        }
    }

    /// Exclusive end.
    pub fn end(&self) -> u64 {
        match *self {
            Patch::Point { index, .. } => index + 1,
            Patch::Block { end, .. } => end,
        }
    }

    pub fn covers(&self, n: u64) -> bool {
        self.start() <= n && n < self.end()
    }

    /// Value at `n`, assuming `self.covers(n)`.
    pub fn value_at(&self, n: u64) -> f64 {
        match *self {
            Patch::Point { value, .. } => value,
            Patch::Block { even, odd, .. } => {
                if n % 2 == 0 {
                    even
                } else {
                    odd
                }
            }
        }
    }

    /// Largest value this patch takes at indices `>= from`, if it covers any.
    pub fn max_from(&self, from: u64) -> Option<f64> {
        let lo = self.start().max(from);
        let hi = self.end();
        if lo >= hi {
            return None;
        }
        match *self {
            Patch::Point { value, .. } => Some(value),
            Patch::Block { even, odd, .. } => {
                if hi - lo >= 2 {
                    Some(even.max(odd))
                } else {
                    Some(self.value_at(lo))
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Patch::Point { index, value } => {
                if index == 0 {
                    return Err(Error::invalid("patch index must be >= 1"));
                }
                check_positive(value)
            }
            Patch::Block {
                start,
                end,
                even,
                odd,
            } => {
                if start == 0 || start >= end {
                    return Err(Error::invalid(format!(
                        "patch block {start}..{end} must be non-empty and start at >= 1"
                    )));
                }
                check_positive(even).and(check_positive(odd))
            }
        }
    }
}

fn check_positive(v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("sequence values must be positive and finite, got {v}")))
    }
}

fn check_exponent(r: f64) -> Result<()> {
    if r > 0.0 && r <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("exponent must lie in (0, 1], got {r}")))
    }
}

/// A positive real sequence indexed from 1. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceExpr {
    rule: Rule,
    patches: Vec<Patch>,
}

impl From<Rule> for SequenceExpr {
    fn from(rule: Rule) -> Self {
        SequenceExpr {
            rule,
            patches: Vec::new(),
        }
    }
}

impl SequenceExpr {
    pub fn harmonic() -> Self {
        Rule::Harmonic.into()
    }

    pub fn log_harmonic() -> Self {
        Rule::LogHarmonic.into()
    }

    pub fn log_squared_harmonic() -> Self {
        Rule::LogSquaredHarmonic.into()
    }

    /// The interleaved sequence: `1/n` on evens, `1/(n log(n+1))` on odds.
    pub fn star() -> Self {
        Rule::StarInterleaved.into()
    }

    pub fn constant(c: f64) -> Result<Self> {
        check_positive(c)?;
        Ok(Rule::Constant(c).into())
    }

    pub fn geometric(q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::invalid(format!("geometric ratio must lie in (0, 1), got {q}")));
        }
        Ok(Rule::Geometric(q).into())
    }

    pub fn table(values: Vec<f64>, tail: SequenceExpr) -> Result<Self> {
        values.iter().try_for_each(|&v| check_positive(v))?;
        Ok(Rule::Table {
            values,
            tail: Box::new(tail),
        }
        .into())
    }

    pub fn rule(&self) -> &Rule {
        &self.rule
    }

    pub fn patches(&self) -> &[Patch] {
        &self.patches
    }

    /// Same sequence with `patch` layered on top. A point patch at an index
    /// that already has a point patch replaces it.
    pub fn with_patch(mut self, patch: Patch) -> Result<Self> {
        patch.validate()?;
        if let Patch::Point { index, .. } = patch {
            self.patches
                .retain(|p| !matches!(p, Patch::Point { index: i, .. } if *i == index));
        }
        self.patches.push(patch);
        Ok(self)
    }

    pub fn with_patches(self, patches: impl IntoIterator<Item = Patch>) -> Result<Self> {
        patches.into_iter().try_fold(self, |seq, p| seq.with_patch(p))
    }

    /// Drop all patches, keeping the rule.
    pub fn unpatched(&self) -> SequenceExpr {
        self.rule.clone().into()
    }

    /// The patch that decides the value at `n`, if any.
    pub fn patch_at(&self, n: u64) -> Option<&Patch> {
        self.patches.iter().rev().find(|p| p.covers(n))
    }

    /// Value at `n >= 1`.
    ///
    /// Panics if `n == 0`.
    pub fn eval(&self, n: u64) -> f64 {
        assert!(n >= 1, "sequences are indexed from 1");
        match self.patch_at(n) {
            Some(p) => p.value_at(n),
            None => self.rule_eval(n),
        }
    }

    /// Value of the rule alone, ignoring patches.
    pub fn rule_eval(&self, n: u64) -> f64 {
        let x = n as f64;
        match &self.rule {
            Rule::Harmonic => 1.0 / x,
            Rule::LogHarmonic => 1.0 / (x * x.ln_1p()),
            Rule::LogSquaredHarmonic => {
                let l = x.ln_1p();
                1.0 / (x * l * l)
            }
            Rule::StarInterleaved => {
                if n % 2 == 0 {
                    1.0 / x
                } else {
                    1.0 / (x * x.ln_1p())
                }
            }
            Rule::Constant(c) => *c,
            Rule::Geometric(q) => q.powf(x).max(GEOMETRIC_FLOOR),
            Rule::Power { base, exponent } => base.eval(n).powf(*exponent),
            Rule::Fubini { even, odd } => {
                if n % 2 == 0 {
                    even.eval(n / 2)
                } else {
                    odd.eval(n.div_ceil(2))
                }
            }
            Rule::Table { values, tail } => match values.get((n - 1) as usize) {
                Some(&v) => v,
                None => tail.eval(n),
            },
        }
    }

    /// Certified upper bound on `sup_{n >= from} eval(n)`, non-increasing in
    /// `from` and tending to zero. Accounts for patches at indices `>= from`.
    pub fn tail_sup(&self, from: u64) -> Result<f64> {
        let from = from.max(1);
        let rule = self.rule_tail(from)?;
        Ok(self
            .patches
            .iter()
            .filter_map(|p| p.max_from(from))
            .fold(rule, f64::max))
    }

    fn rule_tail(&self, from: u64) -> Result<f64> {
        Ok(match &self.rule {
            Rule::Harmonic | Rule::LogHarmonic | Rule::LogSquaredHarmonic => self.rule_eval(from),
            // both parity branches decrease, so the sup sits at `from` or `from + 1`
            Rule::StarInterleaved => self.rule_eval(from).max(self.rule_eval(from + 1)),
            Rule::Geometric(_) => self.rule_eval(from),
            Rule::Constant(c) => {
                return Err(Error::NoCertifiedTail(format!("constant {c} does not tend to zero")))
            }
            Rule::Power { base, exponent } => base.tail_sup(from)?.powf(*exponent),
            Rule::Fubini { even, odd } => even
                .tail_sup(from.div_ceil(2))?
                .max(odd.tail_sup((from + 1).div_ceil(2))?),
            Rule::Table { values, tail } => {
                let skip = (from - 1).min(values.len() as u64) as usize;
                let listed = values[skip..].iter().copied().fold(0.0, f64::max);
                listed.max(tail.tail_sup(from.max(values.len() as u64 + 1))?)
            }
        })
    }

    /// Bound on the relative error of [`rule_eval`](Self::rule_eval), in
    /// units of `2^-53`. Patch and table values are exact by definition.
    pub fn rule_error_ulps(&self) -> f64 {
        match &self.rule {
            Rule::Harmonic => 1.0,
            Rule::LogHarmonic | Rule::StarInterleaved => 4.0,
            Rule::LogSquaredHarmonic => 6.0,
            Rule::Constant(_) => 0.0,
            Rule::Geometric(_) => 2.0,
            Rule::Power { base, exponent } => exponent * base.rule_error_ulps() + 3.0,
            Rule::Fubini { even, odd } => even.rule_error_ulps().max(odd.rule_error_ulps()),
            Rule::Table { tail, .. } => tail.rule_error_ulps(),
        }
    }
}

/// `n -> base_n^r` for `0 < r <= 1`.
pub fn power_transform(base: SequenceExpr, r: f64) -> Result<SequenceExpr> {
    check_exponent(r)?;
    Ok(Rule::Power {
        base: Box::new(base),
        exponent: r,
    }
    .into())
}

/// `s` on even indices (`2k -> s_k`) and `t` on odd ones (`2k - 1 -> t_k`).
pub fn fubini_interleave(s: SequenceExpr, t: SequenceExpr) -> SequenceExpr {
    Rule::Fubini {
        even: Box::new(s),
        odd: Box::new(t),
    }
    .into()
}

// --- grammar -----------------------------------------------------------------

impl fmt::Display for SequenceExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.patches.is_empty() {
            return write!(f, "{}", self.rule);
        }
        write!(f, "patch({}, [", self.rule)?;
        for (i, p) in self.patches.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            match p {
                Patch::Point { index, value } => write!(f, "({index}, {value:?})")?,
                Patch::Block {
                    start,
                    end,
                    even,
                    odd,
                } => write!(f, "({start}..{end}, {even:?}, {odd:?})")?,
            }
        }
        f.write_str("])")
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::Harmonic => f.write_str("harmonic"),
            Rule::LogHarmonic => f.write_str("logharmonic"),
            Rule::LogSquaredHarmonic => f.write_str("logsqharmonic"),
            Rule::StarInterleaved => f.write_str("star"),
            Rule::Constant(c) => write!(f, "const({c:?})"),
            Rule::Geometric(q) => write!(f, "geometric({q:?})"),
            Rule::Power { base, exponent } => write!(f, "power({base}, {exponent:?})"),
            Rule::Fubini { even, odd } => write!(f, "fubini({even}, {odd})"),
            Rule::Table { values, tail } => {
                f.write_str("table([")?;
                for (i, v) in values.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v:?}")?;
                }
                write!(f, "], {tail})")
            }
        }
    }
}

impl FromStr for SequenceExpr {
    type Err = Error;

    /// Parses `star`, `harmonic`, `logharmonic`, `logsqharmonic`, `const(c)`,
    /// `geometric(q)`, `power(seq, r)`, `fubini(even, odd)`,
    /// `table([v, ...], seq)` and `patch(seq, [(n, v), (a..b, even, odd), ...])`.
    fn from_str(s: &str) -> Result<Self> {
        let mut cursor = Cursor::new(s);
        let seq = parse_seq(&mut cursor)?;
        cursor.finish()?;
        Ok(seq)
    }
}

fn parse_seq(c: &mut Cursor<'_>) -> Result<SequenceExpr> {
    let at = c.pos();
    let name = c.ident()?;
    let seq = match name {
        "star" => SequenceExpr::star(),
        "harmonic" => SequenceExpr::harmonic(),
        "logharmonic" => SequenceExpr::log_harmonic(),
        "logsqharmonic" => SequenceExpr::log_squared_harmonic(),
        "const" => {
            c.expect("(")?;
            let v = c.real()?;
            c.expect(")")?;
            SequenceExpr::constant(v)?
        }
        "geometric" => {
            c.expect("(")?;
            let q = c.real()?;
            c.expect(")")?;
            SequenceExpr::geometric(q)?
        }
        "power" => {
            c.expect("(")?;
            let base = parse_seq(c)?;
            c.expect(",")?;
            let r = c.real()?;
            c.expect(")")?;
            power_transform(base, r)?
        }
        "fubini" => {
            c.expect("(")?;
            let even = parse_seq(c)?;
            c.expect(",")?;
            let odd = parse_seq(c)?;
            c.expect(")")?;
            fubini_interleave(even, odd)
        }
        "table" => {
            c.expect("(")?;
            c.expect("[")?;
            let mut values = Vec::new();
            if !c.eat("]") {
                loop {
                    values.push(c.real()?);
                    if c.eat("]") {
                        break;
                    }
                    c.expect(",")?;
                }
            }
            c.expect(",")?;
            let tail = parse_seq(c)?;
            c.expect(")")?;
            SequenceExpr::table(values, tail)?
        }
        "patch" => {
            c.expect("(")?;
            let base = parse_seq(c)?;
            c.expect(",")?;
            c.expect("[")?;
            let mut patches = Vec::new();
            if !c.eat("]") {
                loop {
                    patches.push(parse_patch(c)?);
                    if c.eat("]") {
                        break;
                    }
                    c.expect(",")?;
                }
            }
            c.expect(")")?;
            base.with_patches(patches)?
        }
        other => return Err(Error::parse(at, format!("unknown sequence `{other}`"))),
    };
    Ok(seq)
}

fn parse_patch(c: &mut Cursor<'_>) -> Result<Patch> {
    c.expect("(")?;
    let start = c.count()?;
    let patch = if c.eat("..") {
        let end = c.count()?;
        c.expect(",")?;
        let even = c.real()?;
        c.expect(",")?;
        let odd = c.real()?;
        Patch::Block {
            start,
            end,
            even,
            odd,
        }
    } else {
        c.expect(",")?;
        Patch::Point {
            index: start,
            value: c.real()?,
        }
    };
    c.expect(")")?;
    Ok(patch)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_values() {
        let star = SequenceExpr::star();
        assert_eq!(star.eval(2), 0.5);
        // 1/ln 2 from a 40-digit reference
        assert!((star.eval(1) - 1.442_695_040_888_963_4).abs() < 1e-15);
        assert_eq!(star.eval(3), 1.0 / (3.0 * 4f64.ln()));
    }

    #[test]
    fn patch_overrides_rule_only_where_listed() {
        let seq = SequenceExpr::harmonic()
            .with_patch(Patch::Point {
                index: 3,
                value: 7.0,
            })
            .unwrap();
        assert_eq!(seq.eval(3), 7.0);
        assert_eq!(seq.eval(2), 0.5);
        assert_eq!(seq.eval(4), 0.25);
    }

    #[test]
    fn later_patches_win() {
        let seq = SequenceExpr::harmonic()
            .with_patch(Patch::Block {
                start: 4,
                end: 10,
                even: 0.1,
                odd: 0.2,
            })
            .unwrap()
            .with_patch(Patch::Point {
                index: 6,
                value: 3.0,
            })
            .unwrap();
        assert_eq!(seq.eval(4), 0.1);
        assert_eq!(seq.eval(5), 0.2);
        assert_eq!(seq.eval(6), 3.0);
        assert_eq!(seq.eval(10), 0.1);
    }

    #[test]
    fn repeated_point_patch_replaces() {
        let seq = SequenceExpr::star()
            .with_patches([
                Patch::Point {
                    index: 5,
                    value: 1.0,
                },
                Patch::Point {
                    index: 5,
                    value: 2.0,
                },
            ])
            .unwrap();
        assert_eq!(seq.patches().len(), 1);
        assert_eq!(seq.eval(5), 2.0);
    }

    #[test]
    fn invalid_patches() {
        let h = SequenceExpr::harmonic;
        assert!(h().with_patch(Patch::Point { index: 0, value: 1.0 }).is_err());
        assert!(h().with_patch(Patch::Point { index: 2, value: 0.0 }).is_err());
        assert!(h().with_patch(Patch::Point { index: 2, value: f64::NAN }).is_err());
        assert!(h()
            .with_patch(Patch::Block { start: 5, end: 5, even: 1.0, odd: 1.0 })
            .is_err());
    }

    #[test]
    fn power_family() {
        let star = SequenceExpr::star();
        let same = power_transform(star.clone(), 1.0).unwrap();
        for n in 1..1000 {
            assert_eq!(same.eval(n), star.eval(n));
        }
        let half = power_transform(star, 0.5).unwrap();
        assert!((half.eval(2) - 0.707_106_781_186_547_5).abs() < 1e-15);
        assert!(power_transform(SequenceExpr::star(), 0.0).is_err());
        assert!(power_transform(SequenceExpr::star(), 1.5).is_err());
    }

    #[test]
    fn fubini_indexing() {
        let seq = fubini_interleave(
            SequenceExpr::constant(1.0).unwrap(),
            SequenceExpr::constant(2.0).unwrap(),
        );
        assert_eq!(seq.eval(4), 1.0);
        assert_eq!(seq.eval(3), 2.0);

        let h = SequenceExpr::harmonic();
        let twin = fubini_interleave(h.clone(), h.clone());
        assert_eq!(twin.eval(10), h.eval(5));
        assert_eq!(twin.eval(9), h.eval(5));
    }

    #[test]
    fn tail_bounds() {
        assert_eq!(SequenceExpr::harmonic().tail_sup(100).unwrap(), 0.01);
        assert_eq!(SequenceExpr::star().tail_sup(10).unwrap(), 0.1);
        assert_eq!(SequenceExpr::star().tail_sup(11).unwrap(), 1.0 / 12.0);
        let patched = SequenceExpr::harmonic()
            .with_patch(Patch::Point {
                index: 200,
                value: 0.5,
            })
            .unwrap();
        assert_eq!(patched.tail_sup(100).unwrap(), 0.5);
        assert_eq!(patched.tail_sup(201).unwrap(), 1.0 / 201.0);
        assert!(SequenceExpr::constant(1.0).unwrap().tail_sup(5).is_err());
    }

    #[test]
    fn block_patch_tail_respects_parity() {
        let seq = SequenceExpr::harmonic()
            .with_patch(Patch::Block {
                start: 10,
                end: 20,
                even: 1e-9,
                odd: 0.3,
            })
            .unwrap();
        // only index 19 (odd) remains at or past 19
        assert_eq!(seq.tail_sup(19).unwrap(), 0.3);
        assert_eq!(seq.tail_sup(20).unwrap(), 0.05);
    }

    #[test]
    fn table_with_tail() {
        let seq = SequenceExpr::table(vec![5.0, 4.0, 3.0], SequenceExpr::harmonic()).unwrap();
        assert_eq!(seq.eval(1), 5.0);
        assert_eq!(seq.eval(3), 3.0);
        assert_eq!(seq.eval(4), 0.25);
        assert_eq!(seq.tail_sup(2).unwrap(), 4.0);
        assert_eq!(seq.tail_sup(4).unwrap(), 0.25);
        assert_eq!(seq.tail_sup(100).unwrap(), 0.01);
    }

    #[test]
    fn geometric_stays_positive() {
        let g = SequenceExpr::geometric(0.5).unwrap();
        assert_eq!(g.eval(3), 0.125);
        assert!(g.eval(5000) > 0.0);
        assert!(SequenceExpr::geometric(1.0).is_err());
    }

    #[test]
    fn grammar() {
        let cases = [
            "star",
            "power(star, 0.5)",
            "harmonic",
            "fubini(harmonic, logharmonic)",
            "patch(star, [(3, 0.125)])",
            "patch(harmonic, [(8..14, 0.1, 0.2), (20, 1e-30)])",
            "table([1.0, 0.5], geometric(0.25))",
            "const(2.0)",
            "logsqharmonic",
        ];
        for text in cases {
            let seq: SequenceExpr = text.parse().unwrap();
            let again: SequenceExpr = seq.to_string().parse().unwrap();
            assert_eq!(seq, again, "{text}");
        }
        let p: SequenceExpr = "patch(star,[(3,0.125)])".parse().unwrap();
        assert_eq!(p.eval(3), 0.125);
        assert!("power(star,0)".parse::<SequenceExpr>().is_err());
        assert!("stars".parse::<SequenceExpr>().is_err());
        assert!("star junk".parse::<SequenceExpr>().is_err());
    }
}
