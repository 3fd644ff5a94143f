//! End-to-end tests of the `ldlc` binary: exit codes, file plumbing, and
//! output formats.

use std::path::Path;
use std::process::{Command, Output};

fn ldlc(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ldlc"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn gen_encode_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = ldlc(
        &["gen", "--kind", "bipolar", "--n", "8", "--d", "3", "--seed", "5", "--out", "g.mat"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(dir.path().join("g.mat").exists());

    std::fs::write(dir.path().join("b.txt"), "1\n-1\n1\n1\n-1\n1\n-1\n-1\n").unwrap();
    let out =
        ldlc(&["encode", "--code", "g.mat", "--b-file", "b.txt", "--out", "x.txt"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let x: Vec<f64> = std::fs::read_to_string(dir.path().join("x.txt"))
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    assert_eq!(x.len(), 8);

    // Must agree with the library encoder on the same matrix.
    let code = ldlc_core::load_code(&dir.path().join("g.mat")).unwrap();
    let want = code.encode(&[1, -1, 1, 1, -1, 1, -1, -1]).unwrap();
    for (a, b) in x.iter().zip(&want) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn gen_latin_requires_a_sequence() {
    let dir = tempfile::tempdir().unwrap();
    let out = ldlc(&["gen", "--kind", "latin", "--n", "6", "--out", "h.mat"], dir.path());
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    assert!(stderr(&out).contains("--seq"));
}

#[test]
fn simulate_emits_csv_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = ldlc(
        &["gen", "--kind", "bipolar", "--n", "10", "--d", "3", "--seed", "1", "--out", "g.mat"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let out = ldlc(
        &[
            "simulate",
            "--code",
            "g.mat",
            "--decoder",
            "nbp",
            "--db",
            "4",
            "--trials",
            "10",
            "--seed",
            "7",
            "--csv-out",
            "r.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2, "header plus one data row:\n{csv}");
    assert_eq!(lines[0], "db,sigma2,symbols,errors,ser,mean_iters,conv_rate,seconds");
    // Without --csv-out the same report goes to stdout.
    let out = ldlc(
        &[
            "simulate",
            "--code",
            "g.mat",
            "--decoder",
            "nbp",
            "--db",
            "4",
            "--trials",
            "10",
            "--seed",
            "7",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("db,sigma2,"));
}

#[test]
fn decoder_code_mismatch_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = ldlc(
        &["gen", "--kind", "bipolar", "--n", "10", "--d", "3", "--seed", "1", "--out", "g.mat"],
        dir.path(),
    );
    assert!(out.status.success());
    let out = ldlc(
        &["simulate", "--code", "g.mat", "--decoder", "ldlc", "--db", "4", "--trials", "1"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
}

#[test]
fn unknown_flag_is_a_usage_error_with_help() {
    let dir = tempfile::tempdir().unwrap();
    let out = ldlc(&["simulate", "--frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--help") || stderr(&out).contains("Usage"));
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = ldlc(&["--help"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("simulate"));
}

#[test]
fn runtime_failures_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    // Missing code file is an I/O failure, not a usage error.
    let out = ldlc(
        &["simulate", "--code", "missing.mat", "--decoder", "nbp", "--db", "4", "--trials", "1"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));

    // Malformed integer file surfaces as a parse failure.
    let out = ldlc(
        &["gen", "--kind", "bipolar", "--n", "8", "--d", "3", "--seed", "5", "--out", "g.mat"],
        dir.path(),
    );
    assert!(out.status.success());
    std::fs::write(dir.path().join("bad.txt"), "1\ntwo\n").unwrap();
    let out =
        ldlc(&["encode", "--code", "g.mat", "--b-file", "bad.txt", "--out", "x.txt"], dir.path());
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn check_reports_certificates_for_latin_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = ldlc(
        &[
            "gen",
            "--kind",
            "latin",
            "--n",
            "12",
            "--seq",
            "1,0.8,0.5",
            "--seed",
            "3",
            "--out",
            "h.mat",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let out = ldlc(&["check", "--code", "h.mat"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("ldlc_ii=pass witness=0.89"), "{text}");
}

#[test]
fn sweep_matches_simulate_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = ldlc(
        &["gen", "--kind", "bipolar", "--n", "10", "--d", "3", "--seed", "1", "--out", "g.mat"],
        dir.path(),
    );
    assert!(out.status.success());
    let args_tail =
        ["--code", "g.mat", "--decoder", "nbp", "--db", "30", "10", "--trials", "5", "--seed", "3"];
    let sim = ldlc(&[&["simulate"], &args_tail[..]].concat(), dir.path());
    let swp = ldlc(&[&["sweep"], &args_tail[..]].concat(), dir.path());
    assert!(sim.status.success() && swp.status.success());
    assert_eq!(mask_seconds(&stdout(&sim)), mask_seconds(&stdout(&swp)));
}

fn mask_seconds(csv: &str) -> String {
    csv.lines()
        .map(|line| {
            if line.starts_with("db,") {
                line.to_string()
            } else {
                let mut fields: Vec<&str> = line.split(',').collect();
                let n = fields.len();
                fields[n - 1] = "X";
                fields.join(",")
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}
