use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn eqgen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eqgen"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn stderr_value(out: &Output, key: &str) -> String {
    let text = String::from_utf8_lossy(&out.stderr);
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .to_string()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_is_byte_identical_and_verifies_completely() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for p in [&a, &b] {
        let out = eqgen(&["--seed", "42", "generate", "--true-count", "10", "--false-count", "10", "--out", path_str(p)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(stderr_value(&out, "records"), "20");
    }
    let bytes = fs::read(&a).unwrap();
    assert_eq!(bytes, fs::read(&b).unwrap());
    assert_eq!(bytes.iter().filter(|&&c| c == b'\n').count(), 20);

    let out = eqgen(&["--seed", "9", "verify", path_str(&a)]);
    assert!(out.status.success());
    assert_eq!(stderr_value(&out, "labeled"), "20");
    assert_eq!(stderr_value(&out, "agreement"), "1.000000");
}

#[test]
fn zero_true_count_gives_only_false_records() {
    let out = eqgen(&["generate", "--true-count", "0", "--false-count", "5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 5);
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["label"], false);
        assert!(v["provenance"]["mutation"].is_object());
    }
}

#[test]
fn record_keys_are_in_schema_order() {
    let out = eqgen(&["generate", "--true-count", "1", "--false-count", "0"]);
    let line = String::from_utf8(out.stdout).unwrap();
    let keys = ["\"id\"", "\"equation\"", "\"label\"", "\"provenance\"", "\"seed\"", "\"verdict_at_generation\""];
    let positions: Vec<usize> = keys.iter().map(|k| line.find(k).unwrap()).collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]), "{line}");
}

#[test]
fn verify_plain_equations_and_report_bad_lines() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("eqs.txt");
    fs::write(&input, "(= (+ 2 2) 4)\n(= (+ 2 2) 3)\n(= (+ 2\n").unwrap();
    let out = eqgen(&["verify", path_str(&input)]);
    assert!(out.status.success());
    let lines: Vec<serde_json::Value> = String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines[0]["outcome"], "true");
    assert_eq!(lines[1]["outcome"], "false");
    assert!(lines[2]["error"].is_string());
    assert_eq!(stderr_value(&out, "parse_errors"), "1");
}

#[test]
fn audit_prints_key_values() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.jsonl");
    let out = eqgen(&[
        "generate", "--true-count", "60", "--false-count", "60", "--valid-steps", "0", "--filter-artifacts", "false",
        "--out", path_str(&data),
    ]);
    assert!(out.status.success());
    let out = eqgen(&["audit", path_str(&data), "--bound", "0.55"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("accuracy=")));
    assert!(text.lines().any(|l| l == "bound=0.55"));
    assert!(text.lines().any(|l| l.starts_with("node_count.mean_true=")));
}

#[test]
fn audit_with_too_few_records_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.jsonl");
    eqgen(&["generate", "--true-count", "3", "--false-count", "3", "--out", path_str(&data)]);
    let out = eqgen(&["audit", path_str(&data)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("insufficient-data"));
}

#[test]
fn axioms_check_lists_each_rule() {
    let out = eqgen(&["axioms-check"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let line = |id: &str| text.lines().find(|l| l.starts_with(id)).unwrap().to_string();
    assert!(line("basic-24 ").contains("unsound"));
    assert!(line("basic-18 ").contains("duplicate of basic-11"));
    assert!(line("basic-01 ").contains("admitted"));

    let fixture = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/bogus_trig.ax");
    let out = eqgen(&["axioms-check", "--json", fixture]);
    let v: serde_json::Value = serde_json::from_str(String::from_utf8(out.stdout).unwrap().trim()).unwrap();
    assert_eq!(v["status"], "rejected-domain-mismatch");
}

#[test]
fn config_file_is_read_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "seed = 5\ntrue-count = 2\nfalse-count = 2\n").unwrap();
    let out = eqgen(&["--config", path_str(&cfg), "generate", "--false-count", "1"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 3);

    let with_flag = eqgen(&["--seed", "5", "generate", "--true-count", "2", "--false-count", "1"]);
    let from_file = eqgen(&["--config", path_str(&cfg), "generate", "--false-count", "1"]);
    assert_eq!(with_flag.stdout, from_file.stdout);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "no-such-key = 1\n").unwrap();
    assert_eq!(eqgen(&["--config", path_str(&bad), "generate"]).status.code(), Some(1));
    assert_eq!(eqgen(&["generate", "--nonsense"]).status.code(), Some(1));
    assert_eq!(eqgen(&["--epsilon", "-1", "verify", "x"]).status.code(), Some(1));
    assert_eq!(eqgen(&["verify", "/no/such/file"]).status.code(), Some(2));

    let inert = dir.path().join("inert.ax");
    fs::write(&inert, "x == x\n").unwrap();
    let out = eqgen(&["generate", "--axioms", path_str(&inert), "--true-count", "1", "--false-count", "0"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(eqgen(&["--help"]).status.success());
}
