use std::process::{Command, Output};

use serde_json::Value;

fn pwb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pwb")).args(args).output().expect("pwb runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8 output")
}

fn json(args: &[&str]) -> (Value, i32) {
    let o = pwb(args);
    let v = serde_json::from_slice(&o.stdout).expect("valid JSON");
    (v, o.status.code().unwrap())
}

#[test]
fn expand_example() {
    let o = pwb(&["expand", "--term", "(a^w b)^w", "--n", "4"]);
    assert!(o.status.success());
    let word: String = stdout(&o).split_whitespace().collect();
    assert_eq!(word.len(), 600);
    assert!(word.starts_with(&format!("{}b", "a".repeat(24))));
}

#[test]
fn separate_parity_over_groups() {
    let (v, code) = json(&["separate", "--class", "G", "--k", "(aa)^+", "--l", "a(aa)^+ + a", "--json"]);
    assert_eq!(code, 0);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["verdict"], "Separable");
    assert_eq!(v["recognizer"]["states"], 2);
    assert_eq!(v["recognizer"]["semigroupSize"], 2);
}

#[test]
fn separate_reports_witness() {
    let o = pwb(&["separate", "--class", "G", "--k", "a^+", "--l", "b^+"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.starts_with("NotSeparable"));
    assert!(text.contains("witness: 1"));
}

#[test]
fn separate_dot_has_two_states() {
    let o = pwb(&["separate", "--class", "G", "--k", "(aa)^+", "--l", "a(aa)^+ + a", "--format", "dot"]);
    assert!(o.status.success());
    let dot = stdout(&o);
    assert!(dot.starts_with("digraph"));
    assert!(dot.contains("0 [shape=") && dot.contains("1 [shape="));
    assert!(!dot.contains("2 [shape="));
}

#[test]
fn histories_round_trip() {
    let (v, code) = json(&["histories", "--term", "(a^w b)^w", "--position", "24", "--json"]);
    assert_eq!(code, 0);
    assert_eq!(v["schema"], 1);
    let h = v["history"].to_string();
    assert!(h.ends_with(r#"[1,1],["","b"]]"#), "{h}");
    let o = pwb(&["histories", "--term", "(a^w b)^w", "--history", &h]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "24");
}

#[test]
fn usage_errors_exit_2() {
    let o = pwb(&["separate", "--class", "Q", "--k", "a", "--l", "b"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--help"));
    let o = pwb(&["histories", "--term", "(a^w b)^w", "--n", "2", "--position", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn graph_dot_has_terminals() {
    let o = pwb(&["graph", "--term", "a^w", "--lang", "a", "--format", "dot"]);
    assert!(o.status.success());
    let dot = stdout(&o);
    assert!(dot.starts_with("digraph gamma"));
    assert!(dot.contains("iota") && dot.contains("tau"));
}

#[test]
fn closure_g_membership() {
    let (v, _) = json(&["closure-g", "--regex", "ab", "--member", "bA", "--json"]);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["member"]["inClosure"], false);
    // The closure of (ab)^+ is the cyclic subgroup, so it contains (ab)^-1 and 1.
    for m in ["BA", "1", "abab"] {
        let (v, _) = json(&["closure-g", "--regex", "(ab)^+", "--member", m, "--json"]);
        assert_eq!(v["member"]["inClosure"], true, "{m}");
    }
    let o = pwb(&["closure-g", "--regex", "ab", "--format", "dot"]);
    assert!(stdout(&o).starts_with("digraph"));
}

#[test]
fn output_is_deterministic() {
    let args = ["separate", "--class", "A", "--k", "a^+", "--l", "b^+", "--json"];
    assert_eq!(pwb(&args).stdout, pwb(&args).stdout);
    let args = ["graph", "--term", "(ab)^w", "--lang", "(ab)^+", "--json"];
    assert_eq!(pwb(&args).stdout, pwb(&args).stdout);
}

#[test]
fn small_verbs() {
    let o = pwb(&["thue-morse", "--k", "4"]);
    assert_eq!(stdout(&o).lines().next(), Some("abbabaabbaababba"));
    let o = pwb(&["wordproblem-g", "--left", "a^w", "--right", "a^(w+1)"]);
    assert_eq!(o.status.code(), Some(1));
    let o = pwb(&["syntactic", "--regex", "(aa)^+", "--format", "dot"]);
    assert_eq!(stdout(&o).matches("circle").count(), 3);
}
