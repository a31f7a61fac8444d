use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dopf_cli::args::{CaseArgs, SolveArgs};
use dopf_cli::{resolve_solve, SolveSummary};
use dopf_core::admm::{NetUpdateMode, StopRule};

fn cases() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../cases")
}

fn dopf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dopf"))
        .args(args)
        .output()
        .expect("spawn dopf")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn missing_file_is_an_input_error() {
    let out = dopf(&["validate", "/nonexistent/case.m"]);
    assert_eq!(code(&out), 2);
    let out = dopf(&["solve", "--case", "/nonexistent/case.m", "--iters", "1"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn corrupted_file_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(cases().join("case9.m")).unwrap();
    let cut = dir.path().join("broken.m");
    std::fs::write(&cut, &text[..text.len() / 2]).unwrap();
    assert_eq!(code(&dopf(&["validate", s(&cut)])), 2);
    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "{\"buses\": [1, 2").unwrap();
    assert_eq!(code(&dopf(&["validate", s(&garbage)])), 2);
}

#[test]
fn inverted_voltage_bounds_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(cases().join("case9.m")).unwrap();
    let row = "\t2\t2\t0\t0\t0\t0\t1\t1\t0\t345\t1\t1.1\t0.9;";
    assert!(text.contains(row));
    let bad = text.replace(row, "\t2\t2\t0\t0\t0\t0\t1\t1\t0\t345\t1\t0.9\t1.1;");
    let path = dir.path().join("inverted.m");
    std::fs::write(&path, bad).unwrap();
    let out = dopf(&["validate", s(&path)]);
    assert_eq!(code(&out), 1);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("1 violation(s)"), "{stdout}");
    assert!(stdout.starts_with("bus 1:"), "{stdout}");
    // the solver refuses it as well
    let out = dopf(&["solve", "--case", s(&path), "--iters", "1"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn bundled_cases_validate() {
    for name in ["twobus.m", "case9.m", "case30.m"] {
        let out = dopf(&["validate", s(&cases().join(name))]);
        assert_eq!(code(&out), 0, "{name}");
    }
    // case14 carries transformer taps
    let c14 = cases().join("case14.m");
    assert_eq!(code(&dopf(&["validate", s(&c14)])), 2);
    assert_eq!(code(&dopf(&["validate", s(&c14), "--ignore-taps"])), 0);
}

#[test]
fn no_case_and_bad_options_are_input_errors() {
    assert_eq!(code(&dopf(&["solve"])), 2);
    let c9 = cases().join("case9.m");
    assert_eq!(code(&dopf(&["solve", "--case", s(&c9), "--rho", "-1"])), 2);
    assert_eq!(code(&dopf(&["solve", "--case", s(&c9), "--stop", "sometimes"])), 2);
    assert_eq!(code(&dopf(&["solve", "--case", s(&c9), "--iters", "0"])), 2);
}

#[test]
fn same_spec_and_seed_give_identical_traces() {
    let dir = tempfile::tempdir().unwrap();
    let preset = cases().join("presets/case9.toml");
    let mut files = Vec::new();
    for run in 0..2 {
        let trace = dir.path().join(format!("t{run}.csv"));
        let out = dopf(&[
            "solve",
            "--preset",
            s(&preset),
            "--iters",
            "30",
            "--net-update",
            "gossip",
            "--gossip-rounds",
            "50",
            "--seed",
            "7",
            "--trace-out",
            s(&trace),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        files.push(std::fs::read(&trace).unwrap());
    }
    assert_eq!(files[0], files[1]);
    let text = String::from_utf8(files[0].clone()).unwrap();
    assert_eq!(text.lines().count(), 31);
    assert!(text.starts_with("iter,objective,delta"));
}

#[test]
fn jsonl_trace_matches_csv() {
    let dir = tempfile::tempdir().unwrap();
    let c9 = cases().join("case9.m");
    let csv = dir.path().join("t.csv");
    let jsonl = dir.path().join("t.jsonl");
    for t in [&csv, &jsonl] {
        let out = dopf(&["solve", "--case", s(&c9), "--iters", "5", "--trace-out", s(t)]);
        assert_eq!(code(&out), 0);
    }
    let csv = std::fs::read_to_string(csv).unwrap();
    let jsonl = std::fs::read_to_string(jsonl).unwrap();
    for (row, line) in csv.lines().skip(1).zip(jsonl.lines()) {
        let rec: dopf_core::admm::TraceRecord = serde_json::from_str(line).unwrap();
        assert_eq!(rec.csv_row(), row);
    }
    assert_eq!(jsonl.lines().count(), 5);
}

#[test]
fn report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let out = dopf(&[
        "solve",
        "--case",
        s(&cases().join("twobus.m")),
        "--iters",
        "40",
        "--report-out",
        s(&report),
    ]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&report).unwrap();
    let a: SolveSummary = serde_json::from_str(&text).unwrap();
    let b: SolveSummary = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
    let nums = |s: &SolveSummary| {
        let mut v = vec![s.objective, s.delta, s.epsilon, s.delta_bar, s.worst_df];
        for bus in &s.buses {
            v.extend([bus.pg_mw, bus.qg_mvar, bus.v_re, bus.v_im, bus.v_mag, bus.v_ang_deg]);
        }
        v
    };
    for (x, y) in nums(&a).iter().zip(nums(&b)) {
        assert!((x - y).abs() <= 1e-15 * x.abs().max(1.0));
    }
    assert_eq!(a.iterations, 40);
    assert_eq!(a.buses.len(), 2);
    // spot-check the derived per-bus fields
    for bus in &a.buses {
        assert!((bus.v_mag - bus.v_re.hypot(bus.v_im)).abs() < 1e-15);
    }
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    for key in ["objective", "delta", "epsilon", "a", "b", "totals", "feasibility", "buses"] {
        assert!(value.get(key).is_some(), "{key}");
    }
}

#[test]
fn oracle_rejects_large_networks() {
    let out = dopf(&["oracle", "--case", s(&cases().join("case9.m"))]);
    assert_eq!(code(&out), 3);
}

#[test]
fn oracle_runs_on_two_buses() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("o.json");
    let out = dopf(&[
        "oracle",
        "--case",
        s(&cases().join("twobus.m")),
        "--points",
        "60",
        "--report-out",
        s(&report),
    ]);
    assert_eq!(code(&out), 0);
    let rep: dopf_cli::OracleReport =
        serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(rep.result.points_per_axis, 60);
    assert!(rep.result.objective > 0.0);
}

#[test]
fn preset_values_and_precedence() {
    let preset = cases().join("presets/case9.toml");
    let mut args = SolveArgs {
        case: CaseArgs {
            preset: Some(preset.clone()),
            ..Default::default()
        },
        ..Default::default()
    };
    let spec = resolve_solve(&args).unwrap();
    assert!(spec.case.path.ends_with("case9.m"));
    assert!(spec.case.path.exists());
    assert_eq!(spec.case.overrides.scale_pd, 1.1);
    assert_eq!(spec.case.overrides.qg_min_mvar, Some(10.0));
    assert_eq!(spec.config.rho, 1e6);
    assert!(!spec.config.timing);
    assert_eq!(spec.config.stop_rule, StopRule::FixedIters);

    args.case.scale_pd = Some(1.0);
    args.rho = Some(50.0);
    args.stop = Some(StopRule::Consensus(1e-5));
    args.net_update = Some(dopf_cli::args::NetUpdateArg::Gossip);
    let spec = resolve_solve(&args).unwrap();
    assert_eq!(spec.case.overrides.scale_pd, 1.0);
    assert_eq!(spec.case.overrides.qg_min_mvar, Some(10.0));
    assert_eq!(spec.config.rho, 50.0);
    assert_eq!(spec.config.stop_rule, StopRule::Consensus(1e-5));
    assert_eq!(spec.config.net_update, NetUpdateMode::Gossip(200));
}

#[test]
fn preset_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    std::fs::write(&p, "case = \"x.m\"\nrhoo = 3.0\n").unwrap();
    let out = dopf(&["solve", "--preset", s(&p)]);
    assert_eq!(code(&out), 2);
    let stop = dir.path().join("stop.toml");
    std::fs::write(&stop, "stop = \"objective:1e-3\"\n").unwrap();
    let args = SolveArgs {
        case: CaseArgs {
            preset: Some(stop),
            case: Some(cases().join("case9.m")),
            ..Default::default()
        },
        ..Default::default()
    };
    assert_eq!(
        resolve_solve(&args).unwrap().config.stop_rule,
        StopRule::ObjectiveDecrement(1e-3)
    );
}

#[test]
fn every_preset_loads() {
    for name in ["case9", "case14", "case30", "twobus"] {
        let preset = cases().join(format!("presets/{name}.toml"));
        let args = SolveArgs {
            case: CaseArgs {
                preset: Some(preset),
                ..Default::default()
            },
            ..Default::default()
        };
        let spec = resolve_solve(&args).unwrap();
        let net = dopf_cli::load_case(&spec.case).unwrap();
        assert!(dopf_core::network::validate(&net).is_empty(), "{name}");
    }
}
