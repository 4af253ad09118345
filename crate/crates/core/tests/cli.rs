//! Exit-code contract and output determinism of the `subseries` binary.

use std::process::{Command, Output};

fn subseries(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subseries"))
        .args(args)
        .output()
        .expect("spawn subseries")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

#[test]
fn profile_writes_a_shrinking_trace() {
    let out = subseries(&["profile", "--seq", "star", "--set", "primes", "--checkpoints", "1e4,1e5,1e6"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("horizon,sum,rounding_bound"));
    let sums: Vec<f64> = lines
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(sums.len(), 3);
    assert!(sums[2] - sums[1] < sums[1] - sums[0]);
}

#[test]
fn too_few_checkpoints_is_an_input_error() {
    let out = subseries(&["profile", "--seq", "star", "--set", "primes", "--checkpoints", "1e4"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).starts_with("FAIL invalid:"), "{}", stderr(&out));
}

#[test]
fn grammar_errors_exit_2() {
    for args in [
        &["profile", "--seq", "stra", "--set", "primes"][..],
        &["profile", "--seq", "star", "--set", "blocks(5..3)"][..],
        &["game", "--adversary", "nobody"][..],
        &["witness", "--r", "1.0", "--s", "0.5"][..],
        &["game", "--rounds", "lots"][..],
        &[][..],
    ] {
        let out = subseries(args);
        assert_eq!(code(&out), 2, "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn sieve_budget_overflow_exits_3() {
    let out = Command::new(env!("CARGO_BIN_EXE_subseries"))
        .env("SUBSERIES_SIEVE_LIMIT", "1000")
        .args(["profile", "--seq", "star", "--set", "primes", "--checkpoints", "1e3,1e4,1e5"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(stderr(&out).starts_with("FAIL capacity:"));
}

#[test]
fn scan_cap_overflow_exits_3() {
    let out = subseries(&["witness", "--r", "0.5", "--s", "1.0", "--blocks", "5", "--scan-cap", "100"]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(stderr(&out).starts_with("FAIL scan-cap:"));
}

#[test]
fn twelve_round_game_passes() {
    let out = subseries(&["game", "--adversary", "shrink", "--rounds", "12"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("m,k0,t_m,delta_m,I_m_start,I_m_end\n"));
    assert_eq!(text.lines().count(), 13);
}

#[test]
fn runs_are_byte_identical_in_oracle_mode() {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<Vec<u8>> = (0..2)
        .map(|i| {
            let path = dir.path().join(format!("run{i}.csv"));
            let out = subseries(&[
                "--oracle",
                "--output",
                path.to_str().unwrap(),
                "game",
                "--adversary",
                "jitter",
                "--seed",
                "42",
                "--rounds",
                "6",
            ]);
            assert_eq!(code(&out), 0, "{}", stderr(&out));
            assert!(out.stdout.is_empty());
            std::fs::read(&path).unwrap()
        })
        .collect();
    assert!(!runs[0].is_empty());
    assert_eq!(runs[0], runs[1]);

    let a = subseries(&["--oracle", "star", "--checkpoints", "1e3,1e4,1e5"]);
    let b = subseries(&["--oracle", "star", "--checkpoints", "1e3,1e4,1e5"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn witness_csv_schema() {
    let out = subseries(&["witness", "--r", "0.5", "--s", "1.0", "--f", "blockswap:2", "--blocks", "4"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("k,n_k,block_min,block_max,block_sum_r,block_sum_s\n"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn cycle_files_are_loaded() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cycle.txt");
    std::fs::write(&path, "# 3-cycle\n1 2\n2 3\n3 1\n").unwrap();
    let f = format!("cycle:{}", path.display());
    let out = subseries(&["witness", "--r", "0.5", "--s", "1.0", "--f", &f, "--blocks", "3"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    std::fs::write(&path, "1 2\n2 2\n").unwrap();
    let out = subseries(&["witness", "--r", "0.5", "--s", "1.0", "--f", &f, "--blocks", "3"]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn domination_csv_has_a_row_per_trace_point() {
    let out = subseries(&[
        "dominate", "--a-seq", "star", "--a-set", "primes", "--b-seq", "logsqharmonic", "--b-set", "all", "--terms", "1000",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("k,ratio\n"));
    assert!(text.lines().any(|l| l.starts_with("1000,")));
}

#[test]
fn selftest_passes() {
    let out = subseries(&["--selftest"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.lines().all(|l| l.starts_with("PASS")), "{text}");
}
