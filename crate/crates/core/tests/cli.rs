use std::io::Write;
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_indep-stream"))
}

fn with_stdin(args: &[&str], input: &str) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

#[test]
fn exact_mode_reads_standard_input() {
    let out = with_stdin(&["--k", "2", "--n", "2", "--mode", "exact"], "1,1\n2 2\n\n# comment\n");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["exact_distance"], 0.5);
    assert_eq!(report["m"], 2);
    assert_eq!(report["schema_version"], 1);
    assert!(report["distance_estimate"].is_null());
}

#[test]
fn tsv_has_one_field_per_line() {
    let out = with_stdin(&["--k", "2", "--n", "2", "--mode", "exact", "--format", "tsv"], "1,2\n2,1\n");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l == "exact_distance\t0.5"), "{text}");
    assert!(text.lines().all(|l| l.split('\t').count() == 2));
}

#[test]
fn generated_stream_in_both_modes() {
    let out = bin()
        .args(["--generate", "diagonal", "--m", "200", "--k", "2", "--n", "4", "--mode", "both", "--seed", "3"])
        .args(["--override", "amplification=1"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let est = report["distance_estimate"].as_f64().unwrap();
    let exact = report["exact_distance"].as_f64().unwrap();
    assert!((est - exact).abs() <= 0.3 * exact, "{est} vs {exact}");
    assert_eq!(report["diagnostics"]["config"]["scale"]["amplification"], 1);
}

#[test]
fn exit_codes_follow_error_class() {
    let malformed = with_stdin(&["--k", "2", "--n", "3"], "1,2\n1,x\n");
    assert_eq!(malformed.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&malformed.stderr).contains("record 2"));

    let out_of_range = with_stdin(&["--k", "2", "--n", "3", "--mode", "exact"], "1,4\n");
    assert_eq!(out_of_range.status.code(), Some(1));

    let empty = with_stdin(&["--k", "2", "--n", "3", "--mode", "exact"], "");
    assert_eq!(empty.status.code(), Some(1));

    let bad_override = with_stdin(&["--k", "2", "--n", "3", "--override", "nonsense=1"], "1,1\n");
    assert_eq!(bad_override.status.code(), Some(2));

    let bad_epsilon = with_stdin(&["--k", "2", "--n", "3", "--epsilon", "1.5"], "1,1\n");
    assert_eq!(bad_epsilon.status.code(), Some(2));

    let too_dense = with_stdin(&["--k", "3", "--n", "1000", "--mode", "both"], "1,1,1\n");
    assert_eq!(too_dense.status.code(), Some(3));
}

#[test]
fn missing_file_is_an_input_error() {
    let out = bin()
        .args(["--input", "/nonexistent/tuples.csv", "--k", "2", "--n", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
