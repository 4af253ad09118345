//! Acceptance run: one `PASS`/`FAIL` line per criterion, plus indented
//! detail lines. Exits non-zero if any criterion fails.
//!
//! Reference numbers come from `tests/oracle/freeze_values.py` (mpmath,
//! 40 digits, independent sieve).

use std::process::Command;
use std::time::Instant;

use subseries::game::{play, player2_move, AdversaryKind, BallSpec, TRule};
use subseries::isomorphism::{build_witness, root_prime_membership_test, BijectionSpec, CertifyOptions};
use subseries::oracle::{precise_partial_sums, PREC};
use subseries::summation::{
    domination_check, growth_profile, partial_sums_with, GrowthEvidence, GrowthShape, SumMode,
};
use subseries::{power_transform, root_primes, IndexSetExpr, SequenceExpr};

const CHECKPOINTS: [u64; 4] = [10_000, 100_000, 1_000_000, 10_000_000];

const STAR_P: [f64; 4] = [
    1.222885824881981947844531,
    1.244505382387432948156985,
    1.258960353754829876492635,
    1.269298869620559734885339,
];
const STAR_P_MINUS_1: [f64; 4] = [
    3.698901840959421786843216,
    3.921123086732852821826318,
    4.103179741730704889996022,
    4.257301085358412277615839,
];
/// `(r, direct trace, shifted trace)` over `floor(p^(1/r))`.
const ROOT_PRIME_TRACES: [(f64, [f64; 4], [f64; 4]); 2] = [
    (
        0.9,
        [1.894818228612648530205357, 2.018184756393542005370786, 2.120603100029660512596427, 2.204500126631577071245101],
        [3.046035481063155063357827, 3.171535388625127384736569, 3.269861726694116148486263, 3.353535373725813517455813],
    ),
    (
        0.5,
        [1.151100317831501004510659, 1.219709887108093077209268, 1.269134816240058445919373, 1.308298890004272248881295],
        [1.819901883972024147824148, 2.039612432404751914711275, 2.215169847610933529240595, 2.366359641325949759175171],
    ),
];
const DOMINATION_STAR_P: f64 = 0.38181059530926966226;
const DOMINATION_RECIPROCAL_P: f64 = 0.70503335369914778023;
const H_MILLION: f64 = 14.3927267228657236313811274932;

/// Values the m = 1 round is required to reproduce.
const M1_K0: u64 = 8;
const M1_T: u64 = 3;
const M1_BLOCK: std::ops::Range<u64> = 8..14;
const M1_DELTA: f64 = 0.0191007;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn trace(ev: &GrowthEvidence) -> Vec<f64> {
    ev.series.checkpoints.iter().map(|c| c.sum).collect()
}

fn max_rel(got: &[f64], want: &[f64]) -> f64 {
    got.iter().zip(want).map(|(&a, &b)| rel(a, b)).fold(0.0, f64::max)
}

#[derive(Default)]
struct Report {
    failed: Vec<String>,
}

impl Report {
    fn criterion(&mut self, id: &str, title: &str, ok: bool, details: &[String]) {
        println!("{} {id} {title}", if ok { "PASS" } else { "FAIL" });
        for d in details {
            println!("    {d}");
        }
        if !ok {
            self.failed.push(id.to_string());
        }
    }
}

fn star_profiles() -> (GrowthEvidence, GrowthEvidence) {
    let star = SequenceExpr::star();
    let p = growth_profile(&star, &IndexSetExpr::primes(), &CHECKPOINTS, SumMode::Compensated).unwrap();
    let q = growth_profile(&star, &IndexSetExpr::shifted_primes(), &CHECKPOINTS, SumMode::Compensated).unwrap();
    (p, q)
}

fn criterion_1(rep: &mut Report, over_p: &GrowthEvidence, over_pm1: &GrowthEvidence) {
    let err_p = max_rel(&trace(over_p), &STAR_P);
    let err_q = max_rel(&trace(over_pm1), &STAR_P_MINUS_1);
    let ok_p = over_p.best == GrowthShape::Bounded && over_p.final_increment() < 0.02;
    let ok_q = over_pm1.best == GrowthShape::LogLog && over_pm1.best_fit().relative <= 0.05;
    rep.criterion(
        "1",
        "star series dichotomy over P and P-1",
        ok_p && ok_q && err_p <= 1e-12 && err_q <= 1e-12,
        &[
            format!("P:   best={} final increment={:.5}", over_p.best, over_p.final_increment()),
            format!("P-1: best={} relative residual={:.3e}", over_pm1.best, over_pm1.best_fit().relative),
            format!("max relative deviation from frozen traces: {err_p:.1e} / {err_q:.1e}"),
        ],
    );
}

fn criterion_2(rep: &mut Report) {
    let star = SequenceExpr::star();
    let a = domination_check(
        (&star, &IndexSetExpr::primes()),
        (&SequenceExpr::log_squared_harmonic(), &IndexSetExpr::Naturals),
        100_000,
    )
    .unwrap();
    let b = domination_check(
        (&SequenceExpr::harmonic(), &IndexSetExpr::primes()),
        (&star, &IndexSetExpr::shifted_primes()),
        100_000,
    )
    .unwrap();
    let ok = a.bounded()
        && b.bounded()
        && a.terms == 100_000
        && b.terms == 100_000
        && rel(a.constant, DOMINATION_STAR_P) <= 1e-12
        && rel(b.constant, DOMINATION_RECIPROCAL_P) <= 1e-12;
    rep.criterion(
        "2",
        "prefix domination reports",
        ok,
        &[
            format!("star/P vs 1/(n log^2(n+1)): C={:.15} last decade max={:.15}", a.constant, a.last_decade_max),
            format!("1/p_n vs star/(P-1):        C={:.15} last decade max={:.15}", b.constant, b.last_decade_max),
        ],
    );
}

fn criterion_3(rep: &mut Report) {
    let mut ok = true;
    let mut details = Vec::new();
    for kind in [AdversaryKind::Shrink, AdversaryKind::Jitter, AdversaryKind::Spike] {
        let game = play(kind.build(7).as_mut(), 12, TRule::default()).unwrap();
        let min_margin = game
            .rounds
            .iter()
            .map(|r| r.containment.min_margin())
            .fold(f64::INFINITY, f64::min);
        let status = Command::new(env!("CARGO_BIN_EXE_subseries"))
            .args(["game", "--adversary", &kind.to_string(), "--rounds", "12", "--seed", "7"])
            .output()
            .expect("run the subseries binary")
            .status;
        let this = game.passed()
            && game.rounds.len() == 12
            && game.blocks_disjoint()
            && game.verification.lower_trace_increasing()
            && status.success();
        ok &= this;
        details.push(format!(
            "{kind}: passed={this} min margin={min_margin:.3e} last k0={} cli exit={}",
            game.rounds[11].k0,
            status.code().unwrap_or(-1)
        ));
    }
    rep.criterion("3", "game engine: 12 rounds against each adversary", ok, &details);

    let u = BallSpec::new(SequenceExpr::harmonic(), 1.0).unwrap();
    let (_, r) = player2_move(1, &u, 1, TRule::Minimal).unwrap();
    let ok = r.k0 == M1_K0
        && r.t == M1_T
        && r.block == M1_BLOCK
        && format!("{:.5e}", r.delta) == format!("{:.5e}", M1_DELTA);
    rep.criterion(
        "3b",
        "first round against Ball(harmonic, 1.0) reproduces k0=8, t=3, I=[8,14), delta=0.0191007",
        ok,
        &[format!(
            "got k0={} t={} I=[{},{}) delta={:.10}",
            r.k0, r.t, r.block.start, r.block.end, r.delta
        )],
    );
}

fn criterion_4(rep: &mut Report) {
    let opts = CertifyOptions::default();
    let mut ok = true;
    let mut details = Vec::new();
    for f in [BijectionSpec::Identity, BijectionSpec::block_swap(2).unwrap()] {
        match build_witness(0.5, 1.0, &f, 30, 10_000_000, &opts) {
            Ok(w) => {
                let per_block = w
                    .blocks
                    .iter()
                    .all(|b| b.sum_r > 0.5 && b.sum_r < 1.0 && b.sum_s <= 1.0 / (b.k * b.k) as f64);
                let this = w.passed() && per_block && w.total_r >= 15.0 && w.total_s <= w.bound;
                ok &= this;
                details.push(format!(
                    "{f}: passed={this} total_r={:.4} total_s={:.4} bound={:.4} n_30={} last element={}",
                    w.total_r,
                    w.total_s,
                    w.bound,
                    w.blocks[29].n_k,
                    w.blocks[29].max()
                ));
            }
            Err(e) => {
                ok = false;
                details.push(format!("{f}: {e}"));
            }
        }
    }
    rep.criterion("4", "witness construction, r=0.5, s=1, K=30, scan cap 1e7", ok, &details);
}

fn criterion_5(rep: &mut Report, over_p: &GrowthEvidence) {
    let mut ok = true;
    let mut details = Vec::new();
    for r in [1.0, 0.9, 0.5] {
        let report = root_prime_membership_test(r, &CHECKPOINTS, SumMode::Compensated).unwrap();
        let lit = &report.literal;
        let mut this = lit.holds();
        if r == 1.0 {
            let dev = max_rel(&trace(&lit.direct), &trace(over_p));
            this &= dev <= 1e-12;
            details.push(format!("r=1.0 agrees with the star trace over P to {dev:.1e}"));
        }
        ok &= this;
        details.push(format!(
            "r={r}: holds={this} direct best={} increments={:?} shifted best={} rel={:.2e}; odd-only holds={}",
            lit.direct.best,
            lit.direct.increments.iter().map(|d| format!("{d:.4}")).collect::<Vec<_>>(),
            lit.shifted.best,
            lit.shifted.best_fit().relative,
            report.odd.holds()
        ));
    }
    rep.criterion("5", "root-prime dichotomy for r in {1.0, 0.9, 0.5}", ok, &details);
}

fn criterion_6(rep: &mut Report) {
    let star = SequenceExpr::star();
    let mut traces: Vec<(String, SequenceExpr, IndexSetExpr, Vec<f64>)> = vec![
        ("star/P".into(), star.clone(), IndexSetExpr::primes(), STAR_P.to_vec()),
        ("star/(P-1)".into(), star.clone(), IndexSetExpr::shifted_primes(), STAR_P_MINUS_1.to_vec()),
    ];
    for (r, direct, shifted) in ROOT_PRIME_TRACES {
        let seq = power_transform(star.clone(), r).unwrap();
        let set = root_primes(r).unwrap();
        traces.push((format!("r={r} direct"), seq.clone(), set.clone(), direct.to_vec()));
        traces.push((format!("r={r} shifted"), seq, IndexSetExpr::shift(set, -1), shifted.to_vec()));
    }
    let mut ok = true;
    let mut details = Vec::new();
    for (name, seq, set, frozen) in &traces {
        let fast = partial_sums_with(seq, set, &CHECKPOINTS, SumMode::Compensated).unwrap();
        let slow = partial_sums_with(seq, set, &CHECKPOINTS, SumMode::Oracle).unwrap();
        let fast: Vec<f64> = fast.checkpoints.iter().map(|c| c.sum).collect();
        let slow: Vec<f64> = slow.checkpoints.iter().map(|c| c.sum).collect();
        let vs_oracle = max_rel(&fast, &slow);
        let vs_frozen = max_rel(&slow, frozen);
        let this = vs_oracle <= 1e-12 && vs_frozen <= 1e-12;
        ok &= this;
        details.push(format!("{name}: compensated vs MPFR {vs_oracle:.1e}, MPFR vs frozen {vs_frozen:.1e}"));
    }
    let h = partial_sums_with(&SequenceExpr::harmonic(), &IndexSetExpr::Naturals, &[1_000_000], SumMode::Compensated)
        .unwrap()
        .last()
        .sum;
    let h_precise = precise_partial_sums(&SequenceExpr::harmonic(), &IndexSetExpr::Naturals, &[1_000_000], PREC)
        .unwrap()[0]
        .to_f64();
    let ten_digits = format!("{h:.9e}") == format!("{H_MILLION:.9e}") && format!("{h_precise:.9e}") == format!("{H_MILLION:.9e}");
    ok &= ten_digits;
    details.push(format!("H_1e6 = {h:.15} (MPFR {h_precise:.15}, frozen {H_MILLION:.15})"));
    rep.criterion("6", "numeric soundness against the MPFR oracle", ok, &details);
}

fn main() {
    let started = Instant::now();
    let mut rep = Report::default();
    let (over_p, over_pm1) = star_profiles();
    criterion_1(&mut rep, &over_p, &over_pm1);
    criterion_2(&mut rep);
    criterion_3(&mut rep);
    criterion_4(&mut rep);
    criterion_5(&mut rep, &over_p);
    criterion_6(&mut rep);
    println!("SEE  7 property suites: run by the `properties` test target (>= 1000 cases per property)");
    println!("acceptance finished in {:.1} s", started.elapsed().as_secs_f64());
    if !rep.failed.is_empty() {
        println!("failed criteria: {}", rep.failed.join(", "));
        std::process::exit(1);
    }
}
