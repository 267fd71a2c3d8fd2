use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use figeight::io::{read_orbit, write_orbit, EventsFile};
use figeight::loop_space::Series;
use figeight::solver::seed_figure_eight;
use figeight::Potential;
use serde_json::Value;
use tempfile::TempDir;

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_figeight"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

/// Scans shared by several tests: `[0.8, 1.5]` (V, VI) and `[-0.3, 0]` (IV).
fn scans() -> &'static (TempDir, TempDir) {
    static SCANS: OnceLock<(TempDir, TempDir)> = OnceLock::new();
    SCANS.get_or_init(|| {
        let high = TempDir::new().unwrap();
        let o = run(high.path(), &["scan", "--from", "0.8", "--to", "1.5"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let low = TempDir::new().unwrap();
        let o = run(low.path(), &["scan", "--from", "-0.3", "--to", "0"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        (high, low)
    })
}

fn events(dir: &Path) -> (PathBuf, EventsFile) {
    let file = dir.join("events.json");
    let events = EventsFile::read(&file).unwrap();
    (file, events)
}

#[test]
fn find_writes_symmetric_orbit() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["--modes", "16", "find", "--potential", "homogeneous", "--a", "1.0"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    for name in ["B", "S"] {
        let line = text.lines().find(|l| l.starts_with(&format!("residual {name} "))).unwrap();
        let residual: f64 = line.split_whitespace().last().unwrap().parse().unwrap();
        assert!(residual <= 1e-8, "{line}");
    }
    let (q, pot) = read_orbit(&dir.path().join("orbit.json")).unwrap();
    assert_eq!(q.n_modes(), 16);
    assert_eq!(pot, Potential::homogeneous(1.0).unwrap());

    let o = run(dir.path(), &["verify", "--orbit", dir.path().join("orbit.json").to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("12 of 12"));
}

#[test]
fn lennard_jones_minimiser_has_morse_index_zero() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["find", "--potential", "lennard_jones", "--T", "20", "--minimize"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).lines().any(|l| l.split_whitespace().collect::<Vec<_>>() == ["Morse", "index", "0"]));
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["find", "--a", "0"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("nonzero"), "{}", stderr(&o));

    let o = run(dir.path(), &["--modes", "4", "find"]);
    assert_eq!(code(&o), 2);

    let o = run(dir.path(), &["scan", "--from", "1.0", "--to", "1.0"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("empty parameter range"));

    let o = run(dir.path(), &["find", "--projector", "P_X"]);
    assert_eq!(code(&o), 2);

    let o = run(dir.path(), &["spectrum", "--orbit", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn non_stationary_orbit_fails_verification() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("seed.json");
    write_orbit(&file, &seed_figure_eight(8), &Potential::homogeneous(1.0).unwrap()).unwrap();
    let o = run(dir.path(), &["verify", "--orbit", file.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("not stationary"));
}

#[test]
fn scan_locates_v_and_vi() {
    let (high, _) = scans();
    let (_, file) = events(high.path());
    assert_eq!(file.param_name, "a");
    let labels: Vec<_> = file.events.iter().map(|e| (e.irrep.as_str(), e.d)).collect();
    assert_eq!(labels, [("V", 2), ("VI", 2)]);
    assert!((file.events[0].xi0 - 0.9966).abs() <= 0.005);
    assert!((file.events[1].xi0 - 1.3424).abs() <= 0.005);
    for e in &file.events {
        let (q, _) = read_orbit(&high.path().join(e.orbit.as_ref().unwrap())).unwrap();
        assert_eq!(q.n_modes(), 32);
    }
    let csv = std::fs::read_to_string(high.path().join("branch_up.csv")).unwrap();
    assert!(csv.starts_with("param,action,morse_index,kappa_I,"));
}

#[test]
fn scan_locates_iv() {
    let (_, low) = scans();
    let (_, file) = events(low.path());
    assert_eq!(file.events.len(), 1);
    assert_eq!(file.events[0].irrep, "IV");
    assert!((file.events[0].xi0 + 0.2142).abs() <= 0.005);
}

#[test]
fn reduce_v_reports_passing_identities() {
    let (high, _) = scans();
    let (file, _) = events(high.path());
    let out = TempDir::new().unwrap();
    let o = run(out.path(), &["reduce", "--events", file.to_str().unwrap(), "--event", "0"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.path().join("reduction_0.json")).unwrap()).unwrap();
    assert_eq!(report["irrep"], "V");
    let ids = report["identities"].as_array().unwrap();
    assert!(!ids.is_empty());
    assert!(ids.iter().all(|c| c["pass"] == true));
    assert_eq!(report["predictions"][0]["order"], 1);

    let o = run(out.path(), &["reduce", "--events", file.to_str().unwrap(), "--event", "7"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn reduce_iv_is_order_two_and_rejects_sixth_order() {
    let (_, low) = scans();
    let (file, _) = events(low.path());
    let out = TempDir::new().unwrap();
    let o = run(out.path(), &["reduce", "--events", file.to_str().unwrap(), "--event", "0"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("(vanishes)"));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.path().join("reduction_0.json")).unwrap()).unwrap();
    assert_eq!(report["predictions"][0]["order"], 2);

    let o = run(out.path(), &["reduce", "--events", file.to_str().unwrap(), "--event", "0", "--sixth-order"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("unsupported option"));
}

#[test]
fn trace_v_writes_both_sides() {
    let (high, _) = scans();
    let (file, _) = events(high.path());
    let out = TempDir::new().unwrap();
    let o = run(out.path(), &["trace", "--events", file.to_str().unwrap(), "--event", "0", "--samples", "16"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for side in ["above", "below"] {
        let csv = std::fs::read_to_string(out.path().join(format!("trace_0_pmps_{side}.csv"))).unwrap();
        assert!(csv.lines().count() > 2);
        let plot = std::fs::read_to_string(out.path().join(format!("trace_0_pmps_{side}_000_plot.csv"))).unwrap();
        assert!(plot.starts_with("t,x0,y0,x1,y1,x2,y2,angular_momentum"));
        assert_eq!(plot.lines().count(), 17);
    }
}

#[test]
fn trace_vi_records_angular_momentum_and_rejects_wrong_side() {
    let (high, _) = scans();
    let (file, _) = events(high.path());
    let out = TempDir::new().unwrap();
    let events = file.to_str().unwrap();
    let o = run(out.path(), &["trace", "--events", events, "--event", "1", "--projector", "PMS", "--samples", "8"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut reader = csv::Reader::from_path(out.path().join("trace_1_pms_above.csv")).unwrap();
    let column = reader.headers().unwrap().iter().position(|h| h == "angular_momentum").unwrap();
    let c_max = reader
        .records()
        .map(|r| r.unwrap()[column].parse::<f64>().unwrap().abs())
        .fold(0.0, f64::max);
    assert!(c_max > 0.0);

    let o = run(out.path(), &["trace", "--events", events, "--event", "1", "--side", "below"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("no branch on this side"));
}

#[test]
fn repeated_runs_write_identical_files() {
    let (high, _) = scans();
    let (file, _) = events(high.path());
    let texts: Vec<(String, String)> = (0..2)
        .map(|_| {
            let out = TempDir::new().unwrap();
            assert_eq!(code(&run(out.path(), &["find"])), 0);
            assert_eq!(code(&run(out.path(), &["reduce", "--events", file.to_str().unwrap(), "--event", "1"])), 0);
            let read = |name: &str| std::fs::read_to_string(out.path().join(name)).unwrap();
            (read("orbit.json"), read("reduction_1.json"))
        })
        .collect();
    assert_eq!(texts[0], texts[1]);
}
