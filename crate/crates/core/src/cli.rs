//! The `subseries` command line.
//!
//! Exit codes: 0 success, 1 a verification failed, 2 bad input, 3 a
//! capacity limit was hit. Failures print one `FAIL <kind>: <detail>` line
//! on stderr.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::game::{play, AdversaryKind, TRule};
use crate::index_sets::IndexSetExpr;
use crate::isomorphism::{
    build_witness, parse_table, root_prime_membership_test, BijectionSpec, CertifyOptions,
};
use crate::parse::parse_count;
use crate::sequences::SequenceExpr;
use crate::summation::{
    domination_check, growth_profile, GrowthEvidence, GrowthShape, SumMode, DEFAULT_CHECKPOINTS,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "subseries", version, about = "Subseries experiments on summable ideals")]
pub struct Cli {
    /// Write the CSV here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Sum with the MPFR oracle instead of compensated f64.
    #[arg(long, global = true)]
    oracle: bool,

    /// Run the built-in smoke checks and exit.
    #[arg(long)]
    selftest: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// The star sequence over the primes and over the primes minus one.
    Star(Horizons),
    /// Growth profile of one subseries.
    Profile {
        #[arg(long)]
        seq: String,
        #[arg(long)]
        set: String,
        #[command(flatten)]
        horizons: Horizons,
    },
    /// Prefix domination between two subseries.
    Dominate {
        #[arg(long)]
        a_seq: String,
        #[arg(long)]
        a_set: String,
        #[arg(long)]
        b_seq: String,
        #[arg(long)]
        b_set: String,
        /// Number of terms compared.
        #[arg(long, value_parser = count_arg, default_value = "100000")]
        terms: u64,
    },
    /// Play the Banach-Mazur game against a scripted adversary.
    Game {
        #[arg(long, default_value = "shrink")]
        adversary: String,
        #[arg(long, default_value_t = 12)]
        rounds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = TRuleArg::Quarter)]
        t_rule: TRuleArg,
        /// Accepted for compatibility; the transcript is always CSV.
        #[arg(long, default_value = "csv")]
        report: String,
    },
    /// Build a non-isomorphism witness.
    Witness {
        #[arg(long)]
        r: f64,
        #[arg(long)]
        s: f64,
        /// `identity`, `blockswap:L` or `cycle:PATH` (lines `a b` meaning f(a) = b).
        #[arg(long, default_value = "identity")]
        f: String,
        #[arg(long, default_value_t = 30)]
        blocks: u64,
        #[arg(long, value_parser = count_arg, default_value = "1e7")]
        scan_cap: u64,
    },
    /// Root-prime subseries of the power family.
    Rootprime {
        #[arg(long)]
        r: f64,
        #[command(flatten)]
        horizons: Horizons,
    },
}

#[derive(Debug, Args)]
struct Horizons {
    /// Comma-separated, increasing (`1e4,1e5,1e6`).
    #[arg(long, value_delimiter = ',', value_parser = count_arg)]
    checkpoints: Vec<u64>,
    /// Shorthand for decades `10^3 .. horizon`.
    #[arg(long, value_parser = count_arg, conflicts_with = "checkpoints")]
    horizon: Option<u64>,
}

impl Horizons {
    fn resolve(&self) -> Vec<u64> {
        if let Some(h) = self.horizon {
            let mut v: Vec<u64> = DEFAULT_CHECKPOINTS.iter().copied().filter(|&c| c < h).collect();
            v.push(h);
            v
        } else if self.checkpoints.is_empty() {
            DEFAULT_CHECKPOINTS.to_vec()
        } else {
            self.checkpoints.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TRuleArg {
    Minimal,
    Quarter,
}

fn count_arg(s: &str) -> Result<u64, String> {
    parse_count(s).map_err(|e| e.to_string())
}

/// Outcome of a command: CSV body plus an optional verification failure.
struct Outcome {
    csv: String,
    failure: Option<String>,
}

impl Outcome {
    fn ok(csv: String) -> Self {
        Outcome { csv, failure: None }
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parse { .. } | Error::InvalidParameter(_) | Error::NoCertifiedTail(_) => EXIT_INPUT,
        Error::Capacity { .. } | Error::ScanCapExceeded { .. } | Error::IndexOverflow(_) => {
            EXIT_CAPACITY
        }
        _ => EXIT_VERIFY,
    }
}

fn kind(err: &Error) -> &'static str {
    match err {
        Error::InvalidParameter(_) => "invalid",
        Error::Parse { .. } => "parse",
        Error::Capacity { .. } => "capacity",
        Error::NoCertifiedTail(_) => "tail",
        Error::IndexOverflow(_) => "overflow",
        Error::EmptyPrefix(_) => "empty-prefix",
        Error::Containment { .. } => "containment",
        Error::Uncomparable(_) => "uncomparable",
        Error::AdversaryFault { .. } => "adversary",
        Error::ScanCapExceeded { .. } => "scan-cap",
        Error::Certification { .. } => "certification",
        Error::Verification(_) => "verification",
    }
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if cli.selftest {
        return selftest();
    }
    let Some(command) = &cli.command else {
        eprintln!("FAIL usage: no command given (see --help)");
        return EXIT_INPUT;
    };
    let mode = if cli.oracle { SumMode::Oracle } else { SumMode::Compensated };
    let outcome = match execute(command, mode) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("FAIL {}: {e}", kind(&e));
            return exit_code(&e);
        }
    };
    let written = match &cli.output {
        Some(path) => fs::write(path, &outcome.csv),
        None => std::io::stdout().write_all(outcome.csv.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("FAIL io: {e}");
        return EXIT_INPUT;
    }
    match outcome.failure {
        Some(msg) => {
            eprintln!("FAIL verification: {msg}");
            EXIT_VERIFY
        }
        None => EXIT_OK,
    }
}

fn execute(command: &Command, mode: SumMode) -> crate::Result<Outcome> {
    match command {
        Command::Star(h) => {
            let seq = SequenceExpr::star();
            let cps = h.resolve();
            let direct = growth_profile(&seq, &IndexSetExpr::Primes, &cps, mode)?;
            let shifted = growth_profile(&seq, &IndexSetExpr::shifted_primes(), &cps, mode)?;
            let mut csv = String::from("set,horizon,sum,rounding_bound\n");
            csv += &labelled_rows("primes", &direct);
            csv += &labelled_rows("primes-1", &shifted);
            summarize("primes", &direct);
            summarize("primes-1", &shifted);
            let failure = (direct.best != GrowthShape::Bounded || shifted.best != GrowthShape::LogLog)
                .then(|| {
                    format!(
                        "star dichotomy not observed: primes -> {}, primes-1 -> {}",
                        direct.best, shifted.best
                    )
                });
            Ok(Outcome { csv, failure })
        }
        Command::Profile { seq, set, horizons } => {
            let seq: SequenceExpr = seq.parse()?;
            let set: IndexSetExpr = set.parse()?;
            let ev = growth_profile(&seq, &set, &horizons.resolve(), mode)?;
            summarize(&set.to_string(), &ev);
            Ok(Outcome::ok(ev.series.to_csv()))
        }
        Command::Dominate {
            a_seq,
            a_set,
            b_seq,
            b_set,
            terms,
        } => {
            let (a_seq, a_set): (SequenceExpr, IndexSetExpr) = (a_seq.parse()?, a_set.parse()?);
            let (b_seq, b_set): (SequenceExpr, IndexSetExpr) = (b_seq.parse()?, b_set.parse()?);
            let terms = usize::try_from(*terms).map_err(|_| Error::IndexOverflow("counting terms"))?;
            let report = domination_check((&a_seq, &a_set), (&b_seq, &b_set), terms)?;
            eprintln!(
                "C = {:.12e} at k = {} over {} terms; last-decade max {:.12e}",
                report.constant, report.argmax, report.terms, report.last_decade_max
            );
            let failure = (!report.bounded()).then(|| "ratio trace is not bounded".to_string());
            Ok(Outcome {
                csv: report.to_csv(),
                failure,
            })
        }
        Command::Game {
            adversary,
            rounds,
            seed,
            t_rule,
            report: _,
        } => {
            let kind: AdversaryKind = adversary.parse()?;
            let rule = match t_rule {
                TRuleArg::Minimal => TRule::Minimal,
                TRuleArg::Quarter => TRule::QuarterSlack,
            };
            let transcript = play(kind.build(*seed).as_mut(), *rounds, rule)?;
            let failure = (!transcript.passed()).then(|| {
                match transcript.verification.first_failure() {
                    Some(b) => format!("block bound failed in round {}", b.m),
                    None => "containment, disjointness or nesting check failed".to_string(),
                }
            });
            Ok(Outcome {
                csv: transcript.to_csv(),
                failure,
            })
        }
        Command::Witness {
            r,
            s,
            f,
            blocks,
            scan_cap,
        } => {
            let f = match f.strip_prefix("cycle:") {
                Some(path) => {
                    let text = fs::read_to_string(path)
                        .map_err(|e| Error::invalid(format!("cannot read {path}: {e}")))?;
                    parse_table(&text)?
                }
                None => f.parse::<BijectionSpec>()?,
            };
            let report = build_witness(*r, *s, &f, *blocks, *scan_cap, &CertifyOptions::default())?;
            eprintln!(
                "t = {}; sum_A x^(r) o f = {:.12}; sum_A x^(s) = {:.12} <= {:.12}",
                report.t, report.total_r, report.total_s, report.bound
            );
            let failures = report.failures();
            let failure = (!failures.is_empty()).then(|| {
                failures
                    .iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join("; ")
            });
            Ok(Outcome {
                csv: report.to_csv(),
                failure,
            })
        }
        Command::Rootprime { r, horizons } => {
            let report = root_prime_membership_test(*r, &horizons.resolve(), mode)?;
            let mut csv = String::from("set,horizon,sum,rounding_bound\n");
            for d in [&report.literal, &report.odd] {
                csv += &labelled_rows(&d.direct_set.to_string(), &d.direct);
                csv += &labelled_rows(&d.shifted_set.to_string(), &d.shifted);
                summarize(&d.direct_set.to_string(), &d.direct);
                summarize(&d.shifted_set.to_string(), &d.shifted);
            }
            let failure = (!report.literal.holds()).then(|| {
                format!(
                    "root-prime dichotomy not observed for r = {} (odd-restricted variant {})",
                    report.r,
                    if report.odd.holds() { "holds" } else { "fails too" }
                )
            });
            Ok(Outcome { csv, failure })
        }
    }
}

fn labelled_rows(label: &str, ev: &GrowthEvidence) -> String {
    ev.series
        .checkpoints
        .iter()
        .map(|c| format!("\"{label}\",{},{:.17e},{:.3e}\n", c.horizon, c.sum, c.rounding_bound))
        .collect()
}

fn summarize(label: &str, ev: &GrowthEvidence) {
    let fits: Vec<String> = ev
        .fits
        .iter()
        .map(|f| format!("{} rms {:.3e}", f.shape, f.rms))
        .collect();
    eprintln!(
        "{} {label}: best {} ({}); increments {:?}",
        GrowthEvidence::LABEL,
        ev.best,
        fits.join(", "),
        ev.increments
    );
}

fn selftest() -> i32 {
    let checks: Vec<(&str, bool)> = vec![
        ("star(2) = 1/2", SequenceExpr::star().eval(2) == 0.5),
        (
            "patch overrides rule",
            "patch(harmonic,[(3,7.0)])"
                .parse::<SequenceExpr>()
                .is_ok_and(|s| s.eval(3) == 7.0),
        ),
        (
            "first four primes",
            IndexSetExpr::Primes.enumerate(4).ok() == Some(vec![2, 3, 5, 7]),
        ),
        (
            "primes - 1",
            IndexSetExpr::shifted_primes().enumerate(4).ok() == Some(vec![1, 2, 4, 6]),
        ),
        (
            "odd part of [4, 8)",
            "odd(blocks(4..8))"
                .parse::<IndexSetExpr>()
                .ok()
                .and_then(|s| s.enumerate(10).ok())
                == Some(vec![5, 7]),
        ),
        (
            "[10, 14) excludes 14",
            IndexSetExpr::blocks(vec![10..14]).is_ok_and(|b| b.contains(14).ok() == Some(false)),
        ),
        (
            "harmonic tail at 100",
            SequenceExpr::harmonic().tail_sup(100).ok() == Some(0.01),
        ),
        (
            "midpoint t for (0.5, 1)",
            crate::isomorphism::choose_t(0.5, 1.0).ok() == Some(1.5),
        ),
        (
            "k0 for eps 4.1",
            crate::game::compute_k0(&SequenceExpr::harmonic(), 4.1, 1).ok() == Some(2),
        ),
    ];
    let mut code = EXIT_OK;
    for (name, ok) in checks {
        println!("{} {name}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            code = EXIT_VERIFY;
        }
    }
    code
}
