//! Banach-Mazur game on the null sequences with the sup metric, played by
//! scripted Player-I adversaries against an explicit Player-II strategy.
//!
//! Each round Player II answers a ball `B(x, eps)` with `B(z, delta)`, where
//! `z` is `x` overwritten on a fresh block `[k0, k0 + 2t)` by scaled copies of
//! the star sequence at `p_m - 1` (even slots) and `p_m` (odd slots). The odd
//! slots of all blocks form a set on which the limit sequence sums finitely,
//! while the even slots (the same set shifted by one) sum to infinity.

use std::fmt;
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::float::Round;
use rug::Float;

use crate::error::{Error, Region, Result};
use crate::index_sets::IndexSetExpr;
use crate::oracle::precise_sum_range;
use crate::sequences::{Patch, SequenceExpr};
use crate::sieve::nth_prime;
use crate::summation::{parity_counts, CompensatedSum};
use crate::Parity;

/// Bits used for the exact-arithmetic checks.
const CHECK_PREC: u32 = 256;

/// Segments at most this long are compared coordinate by coordinate.
const EXACT_SEGMENT: u64 = 1 << 12;

/// Relative rounding allowance for containment margins. Under
/// [`TRule::Minimal`] the block margin is exactly zero in real arithmetic.
pub const MARGIN_ROUNDING: f64 = 8.0 * f64::EPSILON;

/// Open ball in the sup metric.
#[derive(Debug, Clone, PartialEq)]
pub struct BallSpec {
    pub center: SequenceExpr,
    pub radius: f64,
}

impl BallSpec {
    /// Requires a positive finite radius and a center with a certified tail.
    pub fn new(center: SequenceExpr, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid(format!("ball radius must be positive, got {radius}")));
        }
        center.tail_sup(1)?;
        Ok(BallSpec { center, radius })
    }
}

/// How `t_m` is chosen from `M = max(x*_p, x*_(p-1))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TRule {
    /// Smallest `t` with `M < t * eps / 2`.
    Minimal,
    /// Smallest `t` with `M < t * eps / 4`, which keeps `eps/2 - M/t > eps/4`
    /// so radii shrink geometrically instead of doubly exponentially.
    #[default]
    QuarterSlack,
}

/// Per-region slack of a ball containment check. Negative means violated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContainmentDetail {
    /// Same center: `eps - delta`.
    Trivial { margin: f64 },
    Regions { head: f64, block: f64, tail: f64 },
}

impl ContainmentDetail {
    pub fn min_margin(&self) -> f64 {
        match *self {
            ContainmentDetail::Trivial { margin } => margin,
            ContainmentDetail::Regions { head, block, tail } => head.min(block).min(tail),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub m: usize,
    /// Radius of Player I's ball.
    pub epsilon: f64,
    /// `p_m`.
    pub prime: u64,
    pub k0: u64,
    pub t: u64,
    pub delta: f64,
    /// `I_m = [k0, k0 + 2t)`.
    pub block: Range<u64>,
    /// Center of Player II's answer.
    pub z: SequenceExpr,
    pub containment: ContainmentDetail,
}

impl RoundRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:.17e},{},{}",
            self.m, self.k0, self.t, self.delta, self.block.start, self.block.end
        )
    }
}

/// `x*_n`.
fn star(n: u64) -> f64 {
    SequenceExpr::star().eval(n)
}

/// Smallest even `k >= floor_index` with `tail_sup(x, k) < eps / 4`.
pub fn compute_k0(x: &SequenceExpr, eps: f64, floor_index: u64) -> Result<u64> {
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("eps must be positive, got {eps}")));
    }
    let target = eps / 4.0;
    let below = |k: u64| -> Result<bool> { Ok(x.tail_sup(k)? < target) };
    let first = floor_index.max(2).checked_next_multiple_of(2);
    let mut lo = first.ok_or(Error::IndexOverflow("rounding k0 up to even"))?;
    if below(lo)? {
        return Ok(lo);
    }
    // exponential search for an even `hi` that satisfies the bound
    let mut step = 2u64;
    let mut hi = loop {
        let cand = lo
            .checked_add(step)
            .ok_or(Error::IndexOverflow("searching for k0"))?;
        if below(cand)? {
            break cand;
        }
        lo = cand;
        step = step
            .checked_mul(2)
            .ok_or(Error::IndexOverflow("searching for k0"))?;
    };
    // invariant: lo fails, hi passes, both even
    while hi - lo > 2 {
        let mid = lo + ((hi - lo) / 4) * 2;
        if below(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

fn choose_t(big_m: f64, eps: f64, rule: TRule) -> Result<u64> {
    let share = match rule {
        TRule::Minimal => eps / 2.0,
        TRule::QuarterSlack => eps / 4.0,
    };
    let guess = (big_m / share).floor() + 1.0;
    if !(guess < 2f64.powi(61)) {
        return Err(Error::IndexOverflow("choosing the block half-length"));
    }
    let mut t = guess as u64;
    while !(big_m < t as f64 * share) {
        t += 1;
    }
    while t > 1 && big_m < (t - 1) as f64 * share {
        t -= 1;
    }
    Ok(t)
}

/// `min(1/(m^2 t), eps/2 - M/t, eps/4)`, each term rounded toward zero so
/// the inequalities it feeds hold exactly for the stored `f64`.
fn delta_for(m: usize, t: u64, eps: f64, big_m: f64) -> f64 {
    let exact = |v: Float| v.to_f64_round(Round::Down);
    let m2t = Float::with_val(CHECK_PREC, m as u64 * m as u64) * t;
    let cap = exact(m2t.recip());
    let slack = exact(Float::with_val(CHECK_PREC, eps) / 2 - Float::with_val(CHECK_PREC, big_m) / t);
    cap.min(slack).min(eps / 4.0)
}

/// Player II's answer to `u` in round `m >= 1`; the block starts at or after
/// `floor_index`.
pub fn player2_move(
    m: usize,
    u: &BallSpec,
    floor_index: u64,
    rule: TRule,
) -> Result<(BallSpec, RoundRecord)> {
    if m == 0 {
        return Err(Error::invalid("rounds are numbered from 1"));
    }
    let eps = u.radius;
    let prime = nth_prime(m as u64)?;
    let (odd_val, even_val) = (star(prime), star(prime - 1));
    let big_m = odd_val.max(even_val);
    let k0 = compute_k0(&u.center, eps, floor_index)?;
    let t = choose_t(big_m, eps, rule)?;
    let delta = delta_for(m, t, eps, big_m);
    if !(delta > 0.0) {
        return Err(Error::Verification(format!(
            "round {m}: radius underflowed to {delta:e}"
        )));
    }
    let end = t
        .checked_mul(2)
        .and_then(|len| k0.checked_add(len))
        .ok_or(Error::IndexOverflow("placing the block"))?;
    let z = u.center.clone().with_patch(Patch::Block {
        start: k0,
        end,
        even: even_val / t as f64,
        odd: odd_val / t as f64,
    })?;
    let v = BallSpec { center: z, radius: delta };
    let containment = verify_containment(&v, u)?;
    let record = RoundRecord {
        m,
        epsilon: eps,
        prime,
        k0,
        t,
        delta,
        block: k0..end,
        z: v.center.clone(),
        containment,
    };
    Ok((v, record))
}

/// Checks `v ⊆ u` through the neighbourhood `W_eps(x)`: the center of `v`
/// must be the center of `u` with extra patches appended.
pub fn verify_containment(v: &BallSpec, u: &BallSpec) -> Result<ContainmentDetail> {
    let (x, z) = (&u.center, &v.center);
    let (eps, delta) = (u.radius, v.radius);
    if x == z {
        let margin = eps - delta;
        if margin < 0.0 {
            return Err(Error::Containment {
                region: Region::Radius,
                margin,
            });
        }
        return Ok(ContainmentDetail::Trivial { margin });
    }
    let extends = x.rule() == z.rule()
        && z.patches().len() > x.patches().len()
        && z.patches()[..x.patches().len()] == *x.patches();
    if !extends {
        return Err(Error::Uncomparable(
            "inner center is not the outer center with appended patches".into(),
        ));
    }
    let fresh = &z.patches()[x.patches().len()..];
    let lo = fresh.iter().map(Patch::start).min().expect("non-empty");
    let hi = fresh.iter().map(Patch::end).max().expect("non-empty");
    let fresh_max = fresh
        .iter()
        .filter_map(|p| p.max_from(lo))
        .fold(0.0, f64::max);
    let half = eps / 2.0;
    let head = half - delta;
    let block = half - delta - fresh_max.max(x.tail_sup(lo)?);
    let tail = half - delta - z.tail_sup(hi)?;
    for (region, margin) in [(Region::Head, head), (Region::Block, block), (Region::Tail, tail)] {
        if margin < -MARGIN_ROUNDING * eps {
            return Err(Error::Containment { region, margin });
        }
    }
    Ok(ContainmentDetail::Regions { head, block, tail })
}

/// Upper bound on `sup_n |a_n - b_n|`. Exact when the two sequences share a
/// rule and differ only on short patched stretches.
pub fn sup_distance_bound(a: &SequenceExpr, b: &SequenceExpr) -> Result<f64> {
    if a.rule() != b.rule() {
        return Ok(a.tail_sup(1)?.max(b.tail_sup(1)?));
    }
    let mut cuts: Vec<u64> = a
        .patches()
        .iter()
        .chain(b.patches())
        .flat_map(|p| [p.start(), p.end()])
        .collect();
    cuts.sort_unstable();
    cuts.dedup();
    let mut worst = 0.0f64;
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let (pa, pb) = (a.patch_at(lo), b.patch_at(lo));
        if pa.is_none() && pb.is_none() {
            continue;
        }
        let d = if hi - lo <= EXACT_SEGMENT {
            (lo..hi).fold(0.0f64, |m, n| m.max((a.eval(n) - b.eval(n)).abs()))
        } else {
            match (pa, pb) {
                (Some(Patch::Block { even: e1, odd: o1, .. }), Some(Patch::Block { even: e2, odd: o2, .. })) => {
                    (e1 - e2).abs().max((o1 - o2).abs())
                }
                // both sides positive, so the larger sup bounds the gap
                _ => a.tail_sup(lo)?.max(b.tail_sup(lo)?),
            }
        };
        worst = worst.max(d);
    }
    Ok(worst)
}

// --- adversaries -------------------------------------------------------------

/// A scripted Player I.
pub trait Adversary {
    fn name(&self) -> &str;

    /// `U_1`.
    fn opening(&mut self) -> Result<BallSpec>;

    /// `U_{m+1}`, which must lie inside `v = V_m`.
    fn respond(&mut self, round: &RoundRecord, v: &BallSpec) -> Result<BallSpec>;
}

fn opening_ball() -> Result<BallSpec> {
    BallSpec::new(SequenceExpr::harmonic(), 1.0)
}

/// Answers `B(z, delta)` with `B(z, delta / 2)`.
#[derive(Debug, Default)]
pub struct ShrinkInPlace;

impl Adversary for ShrinkInPlace {
    fn name(&self) -> &str {
        "shrink"
    }

    fn opening(&mut self) -> Result<BallSpec> {
        opening_ball()
    }

    fn respond(&mut self, _round: &RoundRecord, v: &BallSpec) -> Result<BallSpec> {
        BallSpec::new(v.center.clone(), v.radius / 2.0)
    }
}

/// Moves three coordinates of the center by at most `delta / 4`, then halves
/// the radius.
#[derive(Debug)]
pub struct CenterJitter {
    rng: ChaCha8Rng,
}

impl CenterJitter {
    pub fn new(seed: u64) -> Self {
        CenterJitter {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Adversary for CenterJitter {
    fn name(&self) -> &str {
        "jitter"
    }

    fn opening(&mut self) -> Result<BallSpec> {
        opening_ball()
    }

    fn respond(&mut self, round: &RoundRecord, v: &BallSpec) -> Result<BallSpec> {
        let reach = round.block.end - round.block.start;
        let mut center = v.center.clone();
        for _ in 0..3 {
            let n = round.block.start + self.rng.gen_range(0..2 * reach);
            let old = center.eval(n);
            let shift = self.rng.gen_range(-1.0..=1.0) * v.radius / 4.0;
            let value = (old + shift).max(old / 2.0);
            center = center.with_patch(Patch::Point { index: n, value })?;
        }
        BallSpec::new(center, v.radius / 2.0)
    }
}

/// Raises the coordinate at four times the block end by `delta / 3`, which
/// forces the next `k0` past it.
#[derive(Debug, Default)]
pub struct Spike;

impl Adversary for Spike {
    fn name(&self) -> &str {
        "spike"
    }

    fn opening(&mut self) -> Result<BallSpec> {
        opening_ball()
    }

    fn respond(&mut self, round: &RoundRecord, v: &BallSpec) -> Result<BallSpec> {
        let n = round.block.end.saturating_mul(4);
        let value = v.center.eval(n) + v.radius / 3.0;
        let center = v.center.clone().with_patch(Patch::Point { index: n, value })?;
        BallSpec::new(center, v.radius / 2.0)
    }
}

/// The built-in adversaries, by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdversaryKind {
    Shrink,
    Jitter,
    Spike,
}

impl AdversaryKind {
    pub fn build(self, seed: u64) -> Box<dyn Adversary> {
        match self {
            AdversaryKind::Shrink => Box::new(ShrinkInPlace),
            AdversaryKind::Jitter => Box::new(CenterJitter::new(seed)),
            AdversaryKind::Spike => Box::new(Spike),
        }
    }
}

impl std::str::FromStr for AdversaryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shrink" => Ok(AdversaryKind::Shrink),
            "jitter" => Ok(AdversaryKind::Jitter),
            "spike" => Ok(AdversaryKind::Spike),
            other => Err(Error::parse(0, format!("unknown adversary `{other}`"))),
        }
    }
}

impl fmt::Display for AdversaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AdversaryKind::Shrink => "shrink",
            AdversaryKind::Jitter => "jitter",
            AdversaryKind::Spike => "spike",
        })
    }
}

// --- play and verification ---------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct GameTranscript {
    pub rounds: Vec<RoundRecord>,
    /// Odd elements of the union of all blocks.
    pub witness: IndexSetExpr,
    /// Center of the last answer; carries every block as a patch.
    pub z: SequenceExpr,
    /// `sup |z_(m+1) - z_m|` bound for consecutive answers.
    pub center_steps: Vec<f64>,
    pub verification: WitnessCheck,
}

impl GameTranscript {
    /// Consecutive centers moved by less than the previous radius.
    pub fn nested(&self) -> bool {
        self.center_steps
            .iter()
            .zip(&self.rounds)
            .all(|(&d, r)| d <= r.delta)
    }

    pub fn blocks_disjoint(&self) -> bool {
        self.rounds
            .windows(2)
            .all(|w| w[1].block.start >= w[0].block.end)
    }

    pub fn passed(&self) -> bool {
        self.nested()
            && self.blocks_disjoint()
            && self.verification.passed()
            && self
                .rounds
                .iter()
                .all(|r| r.containment.min_margin() > 0.0)
    }

    /// `m,k0,t_m,delta_m,I_m_start,I_m_end` rows with a header; the end is exclusive.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,k0,t_m,delta_m,I_m_start,I_m_end\n");
        for r in &self.rounds {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        out
    }
}

/// Plays `rounds` rounds; fails on an illegal Player-I move.
pub fn play(adversary: &mut dyn Adversary, rounds: usize, rule: TRule) -> Result<GameTranscript> {
    if rounds == 0 {
        return Err(Error::invalid("a game needs at least one round"));
    }
    let mut u = adversary.opening()?;
    let mut floor = 1u64;
    let mut records: Vec<RoundRecord> = Vec::with_capacity(rounds);
    let mut center_steps = Vec::new();
    let mut last_v: Option<BallSpec> = None;
    for m in 1..=rounds {
        let (v, record) = player2_move(m, &u, floor, rule)?;
        if let Some(prev) = &last_v {
            center_steps.push(sup_distance_bound(&v.center, &prev.center)?);
        }
        floor = record.block.end;
        if m < rounds {
            let next = adversary.respond(&record, &v)?;
            let d = sup_distance_bound(&next.center, &v.center)?;
            if !(d + next.radius <= v.radius) {
                return Err(Error::AdversaryFault {
                    round: m + 1,
                    reason: format!(
                        "ball of radius {:e} at distance {d:e} leaves the previous ball of radius {:e}",
                        next.radius, v.radius
                    ),
                });
            }
            u = next;
        }
        records.push(record);
        last_v = Some(v);
    }
    let z = last_v.expect("at least one round").center;
    let witness = IndexSetExpr::odd(IndexSetExpr::blocks(
        records.iter().map(|r| r.block.clone()).collect(),
    )?);
    let mut transcript = GameTranscript {
        rounds: records,
        witness,
        z,
        center_steps,
        verification: WitnessCheck::default(),
    };
    transcript.verification = verify_witness(&transcript)?;
    Ok(transcript)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockCheck {
    pub m: usize,
    /// `sum_{n in I_m, n odd} z_n`.
    pub odd_sum: f64,
    /// `|I_m odd| * (x*_p / t + delta)`.
    pub odd_envelope: f64,
    /// `x*_p + 1/m^2`.
    pub upper_target: f64,
    /// `sum_{n in I_m, n even} z_n`.
    pub even_sum: f64,
    /// `|I_m even| * (x*_(p-1) / t - delta)`.
    pub even_envelope: f64,
    /// `x*_(p-1) - 1/m^2`.
    pub lower_target: f64,
    /// `odd_sum <= odd_envelope <= upper_target`, decided in exact arithmetic.
    pub upper_ok: bool,
    /// `even_sum >= even_envelope >= lower_target`, decided in exact arithmetic.
    pub lower_ok: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct WitnessCheck {
    pub blocks: Vec<BlockCheck>,
    /// Running `sum_m (x*_p + 1/m^2)`.
    pub cumulative_upper: Vec<f64>,
    /// Running `sum_m (x*_(p-1) - 1/m^2)`.
    pub cumulative_lower: Vec<f64>,
}

impl WitnessCheck {
    pub fn lower_trace_increasing(&self) -> bool {
        self.cumulative_lower.windows(2).all(|w| w[1] > w[0])
    }

    pub fn first_failure(&self) -> Option<&BlockCheck> {
        self.blocks.iter().find(|b| !(b.upper_ok && b.lower_ok))
    }

    pub fn passed(&self) -> bool {
        self.first_failure().is_none() && self.lower_trace_increasing()
    }
}

/// Blockwise summability bounds for the witness, evaluated on `transcript.z`.
/// The inequalities are decided at 256 bits on the stored `f64` data.
pub fn verify_witness(transcript: &GameTranscript) -> Result<WitnessCheck> {
    let mut check = WitnessCheck::default();
    let (mut upper, mut lower) = (CompensatedSum::new(), CompensatedSum::new());
    let big = |v: f64| Float::with_val(CHECK_PREC, v);
    for r in &transcript.rounds {
        let (evens, odds) = parity_counts(r.block.clone());
        let (x_p, x_pm1) = (star(r.prime), star(r.prime - 1));
        let inv_m2 = Float::with_val(CHECK_PREC, (r.m * r.m) as u64).recip();
        let sum = |parity| {
            precise_sum_range(&transcript.z, r.block.clone(), Some(parity), EXACT_SEGMENT, CHECK_PREC)
        };
        let odd_sum = sum(Parity::Odd)?;
        let even_sum = sum(Parity::Even)?;
        // |I odd| * (x/t + delta), with |I odd| = t so x * t / t stays exact
        let odd_env = big(x_p) * odds / r.t + big(r.delta) * odds;
        let even_env = big(x_pm1) * evens / r.t - big(r.delta) * evens;
        let upper_target = big(x_p) + &inv_m2;
        let lower_target = big(x_pm1) - &inv_m2;
        let block = BlockCheck {
            m: r.m,
            odd_sum: odd_sum.to_f64(),
            odd_envelope: odd_env.to_f64(),
            upper_target: upper_target.to_f64(),
            even_sum: even_sum.to_f64(),
            even_envelope: even_env.to_f64(),
            lower_target: lower_target.to_f64(),
            upper_ok: odd_sum <= odd_env && odd_env <= upper_target,
            lower_ok: even_sum >= even_env && even_env >= lower_target,
        };
        upper.add(block.upper_target);
        lower.add(block.lower_target);
        check.cumulative_upper.push(upper.value());
        check.cumulative_lower.push(lower.value());
        check.blocks.push(block);
    }
    Ok(check)
}
