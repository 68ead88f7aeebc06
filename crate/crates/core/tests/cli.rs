use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dnp-soco"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn out_arg(dir: &Path) -> &str {
    dir.to_str().unwrap()
}

#[test]
fn bitpred_writes_rounds_and_intervals() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&[
        "bitpred",
        "--env",
        "blocks",
        "--mu",
        "0.5",
        "--horizon",
        "3000",
        "--out",
        out_arg(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rounds = fs::read_to_string(dir.path().join("bitpred_rounds.csv")).unwrap();
    let mut lines = rounds.lines();
    assert_eq!(lines.next(), Some("t,b_t,x_t,g_t,reward_t"));
    assert_eq!(lines.count(), 3000);
    let intervals = fs::read_to_string(dir.path().join("bitpred_intervals.csv")).unwrap();
    assert_eq!(
        intervals.lines().next(),
        Some("r,s,tau,reward,bound,margin")
    );
    assert_eq!(intervals.lines().count(), 1001);
}

#[test]
fn bitpred_rejects_empty_stream() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&[
        "bitpred",
        "--env",
        "alternating",
        "--horizon",
        "0",
        "--out",
        out_arg(dir.path()),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn soco_echoes_k_and_writes_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&[
        "soco",
        "--horizon",
        "4096",
        "--lambda",
        "0",
        "--out",
        out_arg(dir.path()),
    ]);
    assert_eq!(code(&o), 0);
    let stdout = String::from_utf8_lossy(&o.stdout);
    // 4096 / (32 ln 4096) = 15.4, so K = 4
    assert!(stdout.contains("K = 4"), "{stdout}");
    let schedule = fs::read_to_string(dir.path().join("schedule.csv")).unwrap();
    assert_eq!(schedule.lines().count(), 5);
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(trace.lines().next(), Some("t,w_1,loss,switch"));
    assert_eq!(trace.lines().count(), 4098);
}

#[test]
fn soco_short_horizon_names_minimum() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["soco", "--horizon", "64", "--out", out_arg(dir.path())]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("minimum admissible T"));
}

#[test]
fn bad_flag_is_config_error() {
    assert_eq!(code(&cli(&["soco", "--env", "nowhere"])), 2);
    assert_eq!(code(&cli(&["eval", "--windows", "8,x"])), 2);
}

#[test]
fn eval_stationary_run_has_positive_margins() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    assert_eq!(
        code(&cli(&[
            "soco",
            "--segments",
            "1",
            "--horizon",
            "2048",
            "--out",
            out
        ])),
        0
    );
    let o = cli(&[
        "eval",
        "--horizon",
        "2048",
        "--windows",
        "2048,512",
        "--out",
        out,
    ]);
    assert_eq!(code(&o), 0);
    let report = fs::read_to_string(dir.path().join("report_adaptive.csv")).unwrap();
    let rows: Vec<&str> = report.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    for row in rows {
        let cols: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        assert!(cols[4] > 0.0 && cols[2] < cols[3] / 10.0);
    }
}

#[test]
fn eval_rejects_malformed_trace_with_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    assert_eq!(code(&cli(&["soco", "--horizon", "1024", "--out", out])), 0);
    let path = dir.path().join("trace.csv");
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    lines[3] = "3,oops,0,0".into();
    fs::write(&path, lines.join("\n")).unwrap();
    let o = cli(&["eval", "--out", out]);
    assert_eq!(code(&o), 2);
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("row 3"), "{stderr}");
}

#[test]
fn eval_flags_violation_with_exit_one() {
    // a trace that jumps between the ball's poles every round
    let dir = tempfile::tempdir().unwrap();
    let horizon = 256;
    let mut targets = String::from("t,c_1\n");
    let mut trace = String::from("t,w_1,loss,switch\n");
    for t in 1..=horizon {
        targets.push_str(&format!("{t},0.5\n"));
        let w = if t % 2 == 0 { 0.5 } else { -0.5 };
        trace.push_str(&format!("{t},{w},{},1\n", (w - 0.5f64).abs()));
    }
    trace.push_str(&format!("{},0.5,,\n", horizon + 1));
    fs::write(dir.path().join("targets.csv"), targets).unwrap();
    fs::write(dir.path().join("trace.csv"), trace).unwrap();
    // with lambda = 1e4 the switching cost dwarfs the bound
    let o = cli(&[
        "eval",
        "--lambda",
        "10000",
        "--windows",
        "256",
        "--out",
        out_arg(dir.path()),
    ]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn rerun_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [a.path(), b.path()] {
        let args = [
            "--horizon",
            "4096",
            "--lambda",
            "1",
            "--segments",
            "4",
            "--seed",
            "7",
            "--out",
            out_arg(d),
        ];
        let soco: Vec<&str> = std::iter::once("soco").chain(args).collect();
        let eval: Vec<&str> = std::iter::once("eval").chain(args).collect();
        assert_eq!(code(&cli(&soco)), 0);
        assert_eq!(code(&cli(&eval)), 0);
    }
    for f in [
        "trace.csv",
        "targets.csv",
        "schedule.csv",
        "report_adaptive.csv",
        "report_dynamic.csv",
    ] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}
