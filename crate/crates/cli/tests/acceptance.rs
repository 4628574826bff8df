//! Acceptance run: the default `qrlab verify` suite, twice.
//!
//! Prints one line per criterion. Criterion 11 is a known red: the negative
//! control with exponent `μ + 1` stays stable for `StretchPower(3, 2)`, whose
//! local Hölder exponent at its branch points is 3, above `μ + 1 = 5/2`. The
//! run asserts it still fails so that any change in that analysis shows up.

use std::io::Write;
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use serde_json::Value;

const EXPECTED_RED: &[u64] = &[11];
const TIME_LIMIT: Duration = Duration::from_secs(600);

fn run_verify(out: &PathBuf) -> (Option<i32>, Duration, Vec<u8>) {
    let start = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_qrlab"))
        .args(["verify", "--out"])
        .arg(out)
        .output()
        .expect("qrlab runs")
        .status;
    let elapsed = start.elapsed();
    let report = std::fs::read(out.join("report.json")).expect("report written");
    (status.code(), elapsed, report)
}

#[test]
fn acceptance_criteria() {
    let base = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    let (code_a, time_a, report_a) = run_verify(&base.join("a"));
    let (code_b, time_b, report_b) = run_verify(&base.join("b"));

    let report: Value = serde_json::from_slice(&report_a).expect("valid JSON");
    let checks = report["checks"].as_array().expect("check list");
    let mut lines = Vec::new();
    let mut unexpected = Vec::new();
    for id in 1..=12u64 {
        let check = checks.iter().find(|c| c["id"] == id);
        let (pass, label) = match check {
            Some(c) => (c["status"] == "pass", c["name"].as_str().unwrap_or("").to_string()),
            None => (false, "missing".to_string()),
        };
        lines.push(format!("criterion {id:>2}: {} {label}", if pass { "PASS" } else { "FAIL" }));
        if let Some(c) = check.filter(|_| !pass) {
            for d in c["detail"].as_array().into_iter().flatten().filter_map(Value::as_str) {
                if d.starts_with("failed") {
                    lines.push(format!("              {d}"));
                }
            }
        }
        if pass == EXPECTED_RED.contains(&id) {
            unexpected.push(id);
        }
    }

    let any_fail = checks.iter().any(|c| c["status"] == "fail");
    let deterministic = report_a == report_b && code_a == code_b;
    let exit_consistent = code_a == Some(if any_fail { 1 } else { 0 });
    let in_time = time_a < TIME_LIMIT && time_b < TIME_LIMIT;
    let pass13 = checks.len() == 12 && deterministic && exit_consistent && in_time;
    lines.push(format!(
        "criterion 13: {} verify end to end (deterministic: {deterministic}, exit code {code_a:?}, {:.0} s and {:.0} s)",
        if pass13 { "PASS" } else { "FAIL" },
        time_a.as_secs_f64(),
        time_b.as_secs_f64()
    ));
    if !pass13 {
        unexpected.push(13);
    }
    // Written to the handle directly so the lines survive output capture.
    let mut stdout = std::io::stdout();
    writeln!(stdout, "\n{}", lines.join("\n")).unwrap();
    stdout.flush().unwrap();
    assert!(unexpected.is_empty(), "criteria with unexpected outcome: {unexpected:?}");
}
