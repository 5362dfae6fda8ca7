use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use limavg_core::game::{GameBuilder, StochasticGame};
use limavg_core::ratio::{frac, int, Rational};
use serde_json::Value;
use tempfile::TempDir;

fn big_match() -> StochasticGame {
    GameBuilder::new(3)
        .moves(0, &["stay", "quit"], &["left", "right"])
        .moves(1, &["-"], &["-"])
        .moves(2, &["-"], &["-"])
        .entry(0, "stay", "left", int(1), &[(0, int(1))])
        .entry(0, "stay", "right", int(0), &[(0, int(1))])
        .entry(0, "quit", "left", int(0), &[(1, int(1))])
        .entry(0, "quit", "right", int(1), &[(2, int(1))])
        .entry(1, "-", "-", int(0), &[(1, int(1))])
        .entry(2, "-", "-", int(1), &[(2, int(1))])
        .build()
        .unwrap()
}

fn constant(c: Rational) -> StochasticGame {
    GameBuilder::new(1)
        .moves(0, &["a"], &["b"])
        .entry(0, "a", "b", c, &[(0, int(1))])
        .build()
        .unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_limavg")).args(args).output().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn value_brackets_big_match() {
    let dir = TempDir::new().unwrap();
    let game = write(&dir, "bm.json", &big_match().to_json());
    let out = run(&["value", "--game", p(&game), "--state", "1", "--epsilon", "1/64", "--json"]);
    let v = json(&out);
    let lo = limavg_core::ratio::parse_rational(v["interval"][0].as_str().unwrap()).unwrap();
    let hi = limavg_core::ratio::parse_rational(v["interval"][1].as_str().unwrap()).unwrap();
    assert!(lo <= frac(1, 2) && frac(1, 2) <= hi);
    assert_eq!(v["iterations"], 7);
    assert_eq!(v["transcript"].as_array().unwrap().len(), 7);
    assert_eq!(v["diagnostics"]["heuristic"], true);

    let text = run(&["value", "--game", p(&game), "--state", "1", "--epsilon", "1/4"]);
    assert!(text.status.success());
    assert!(String::from_utf8_lossy(&text.stdout).starts_with("interval ["));
}

#[test]
fn value_export_backend_writes_script() {
    let dir = TempDir::new().unwrap();
    let game = write(&dir, "bm.json", &big_match().to_json());
    let out = dir.path().join("q.smt2");
    let status = run(&["value", "--game", p(&game), "--state", "1", "--epsilon", "1/8", "--backend", "export", "--out", p(&out)]);
    assert!(status.status.success());
    let script = std::fs::read_to_string(out).unwrap();
    assert!(script.contains("(set-logic NRA)"));
    assert!(script.contains("(check-sat)"));
}

#[test]
fn decide_exit_codes() {
    let dir = TempDir::new().unwrap();
    let game = write(&dir, "bm.json", &big_match().to_json());
    let sure = run(&["decide", "--game", p(&game), "--state", "1", "--alpha", "-1/2"]);
    assert_eq!(sure.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&sure.stdout).trim(), "true");
    let no = run(&["decide", "--game", p(&game), "--state", "1", "--alpha", "3/4", "--json"]);
    assert_eq!(json(&no)["verdict"], false);
    // The value itself cannot be separated from the threshold.
    let unsure = run(&["decide", "--game", p(&game), "--state", "1", "--alpha", "1/2"]);
    assert_eq!(unsure.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&unsure.stdout).contains("uncertain"));
}

#[test]
fn invalid_inputs_exit_two() {
    let dir = TempDir::new().unwrap();
    let game = write(&dir, "bm.json", &big_match().to_json());
    let bad = write(&dir, "bad.json", &big_match().to_json().replacen("\"1\"", "\"1/2\"", 1));
    for args in [
        vec!["value", "--game", p(&game), "--state", "4", "--epsilon", "1/8"],
        vec!["value", "--game", p(&game), "--state", "1", "--epsilon", "0"],
        vec!["value", "--game", p(&game), "--state", "1", "--epsilon", "1/8", "--beta-schedule", "1/2,3/4"],
        vec!["decide", "--game", p(&game), "--state", "1", "--alpha", "half"],
        vec!["census", "--game", "/nonexistent.json", "--state", "1", "--alpha", "0"],
        vec!["census", "--game", p(&bad), "--state", "1", "--alpha", "0"],
        vec!["frobnicate"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn sentence_export_round_trips() {
    let dir = TempDir::new().unwrap();
    let game = write(&dir, "c.json", &constant(frac(1, 3)).to_json());
    for (format, name) in [("smtlib", "s.smt2"), ("json", "s.json")] {
        let out = dir.path().join(name);
        let status = run(&["sentence", "--game", p(&game), "--state", "1", "--alpha", "1/4", "--rationalize", "--format", format, "--out", p(&out)]);
        assert!(status.status.success());
        let text = std::fs::read_to_string(&out).unwrap();
        let fmt = if format == "json" { limavg_core::ExportFormat::Json } else { limavg_core::ExportFormat::SmtLib };
        let parsed = limavg_core::formula::parse_sentence(&text, fmt).unwrap();
        assert_eq!(limavg_core::formula::export_sentence(&parsed, fmt).unwrap(), text);
    }
}

#[test]
fn census_reports_atoms() {
    let dir = TempDir::new().unwrap();
    let game = write(&dir, "c.json", &constant(int(1)).to_json());
    let v = json(&run(&["census", "--game", p(&game), "--state", "1", "--alpha", "0", "--discounted", "--json"]));
    // 1 + (3 + 3 + 2) atoms for one state with one move each.
    assert_eq!(v["m"], 9);
    assert_eq!(v["d"], 3);
    let v = json(&run(&["census", "--game", p(&game), "--state", "1", "--alpha", "0", "--json"]));
    assert_eq!(v["m"], 13);
}

#[test]
fn eval_with_simulation_trace() {
    let dir = TempDir::new().unwrap();
    let game = write(&dir, "bm.json", &big_match().to_json());
    let x = write(&dir, "x.json", r#"[{"stay": "1/2", "quit": "1/2"}, {"-": "1"}, {"-": "1"}]"#);
    let y = write(&dir, "y.json", r#"[{"left": "1/2", "right": "1/2"}, {"-": "1"}, {"-": "1"}]"#);
    let trace = dir.path().join("trace.csv");
    let v = json(&run(&[
        "eval", "--game", p(&game), "--state", "1", "--strategy1", p(&x), "--strategy2", p(&y),
        "--beta", "1/10", "--simulate", "500", "--seed", "7", "--trace", p(&trace), "--json",
    ]));
    assert_eq!(v["long_run_average"], "1/2");
    assert_eq!(v["simulation"]["horizon"], 500);
    let csv = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(csv.lines().count(), 501);
    assert!(csv.starts_with("step,state,action1,action2,reward,running_average\n"));

    let again = dir.path().join("again.csv");
    run(&[
        "eval", "--game", p(&game), "--state", "1", "--strategy1", p(&x), "--strategy2", p(&y),
        "--simulate", "500", "--seed", "7", "--trace", p(&again),
    ]);
    assert_eq!(std::fs::read_to_string(again).unwrap(), csv);
}

#[test]
fn perturb_reports_rho() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "g.json", &constant(int(1)).to_json());
    let h = write(&dir, "h.json", &constant(frac(11, 10)).to_json());
    let v = json(&run(&["perturb", "--game", p(&g), "--game2", p(&h), "--json"]));
    assert_eq!(v["eta"], "0");
    assert_eq!(v["gamma"], "1/10");
    assert_eq!(v["rho"], "1/10");
}
