use std::path::Path;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

use bubble_cli::config::{parse_config_str, KEYS};
use bubble_cli::output::Manifest;

const SMALL: &str = "xi_max = 16\ncells = 256\nt_end = 2\nsnapshot_dt = 1\n";

fn bubble(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bubble")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.cfg");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn simulate(dir: &Path, text: &str, out: &str) -> Output {
    let cfg = write_config(dir, text);
    let out = dir.join(out);
    bubble(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()])
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let k = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(k).unwrap().parse().unwrap()).collect()
}

fn read_manifest(dir: &Path) -> Manifest {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn equilibrium_keeps_the_radius_at_one() {
    let dir = tempfile::tempdir().unwrap();
    let res = simulate(dir.path(), SMALL, "out");
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let series = std::fs::read_to_string(dir.path().join("out/series.csv")).unwrap();
    let r = column(&series, "R");
    assert!(r.len() > 10);
    assert!(r.iter().all(|&v| v == 1.0));
}

#[test]
fn reruns_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SMALL}init.kind = q_bump\ninit.amplitude = 1e-2\ninit.center = 6\ninit.width = 1\n");
    let hash = |out: &str| {
        assert!(simulate(dir.path(), &text, out).status.success());
        Sha256::digest(std::fs::read(dir.path().join(out).join("series.csv")).unwrap())
    };
    assert_eq!(hash("a"), hash("b"));
}

#[test]
fn resolution_changes_the_series() {
    let dir = tempfile::tempdir().unwrap();
    let bump = "init.kind = q_bump\ninit.amplitude = 1e-2\ninit.center = 6\ninit.width = 1\n";
    let base = format!("{SMALL}{bump}");
    let fine = base.replace("cells = 256", "cells = 512");
    assert!(simulate(dir.path(), &base, "coarse").status.success());
    assert!(simulate(dir.path(), &fine, "fine").status.success());
    let last_r = |out: &str| {
        let series = std::fs::read_to_string(dir.path().join(out).join("series.csv")).unwrap();
        *column(&series, "R").last().unwrap()
    };
    let (a, b) = (last_r("coarse"), last_r("fine"));
    assert_ne!(a, b);
    assert!((a - b).abs() < 1e-4, "{a} vs {b}");
}

#[test]
fn manifest_lists_every_key_and_existing_outputs() {
    let dir = tempfile::tempdir().unwrap();
    assert!(simulate(dir.path(), SMALL, "out").status.success());
    let out = dir.path().join("out");
    let m = read_manifest(&out);
    for k in KEYS {
        assert!(m.config.contains_key(k), "missing {k}");
    }
    assert_eq!(m.status, "ok");
    assert_eq!(m.grid_nodes, 257);
    assert!(m.outputs.contains(&"series.csv".to_string()));
    assert!(m.outputs.contains(&"snapshots/000002.csv".to_string()));
    for name in &m.outputs {
        assert!(out.join(name).is_file(), "{name} listed but absent");
    }
    let snap = std::fs::read_to_string(out.join("snapshots/000001.csv")).unwrap();
    let mut lines = snap.lines();
    assert!(lines.next().unwrap().starts_with("# t=1."));
    assert_eq!(lines.next().unwrap(), "xi,x,u,q,r,c,phi,psi,wB,wF");
    assert_eq!(lines.count(), 257);
}

#[test]
fn linear_mode_round_trips_through_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SMALL}mode = linear\nca = 3\ncfl = 0.3\ninit.kind = outgoing_pulse\ninit.center = 1\n");
    assert!(simulate(dir.path(), &text, "out").status.success());
    let m = read_manifest(&dir.path().join("out"));
    assert_eq!(m.config["mode"], "linear");
    let echoed: String = m
        .config
        .iter()
        .filter(|(_, v)| !v.is_empty())
        .map(|(k, v)| format!("{k} = {v}\n"))
        .collect();
    let original = parse_config_str(&text, dir.path()).unwrap();
    assert_eq!(parse_config_str(&echoed, dir.path()).unwrap(), original);
}

#[test]
fn bad_initial_data_exits_nonzero_and_records_the_failure() {
    let dir = tempfile::tempdir().unwrap();
    // the bump reaches the bubble surface
    let text = format!("{SMALL}init.kind = q_bump\ninit.center = 2\ninit.width = 1\n");
    let res = simulate(dir.path(), &text, "out");
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("bubble surface"));
    assert!(read_manifest(&dir.path().join("out")).status.starts_with("failed"));
}

#[test]
fn unknown_key_is_reported_with_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let res = simulate(dir.path(), "cells = 256\nbogus = 1\n", "out");
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("line 2: unknown key `bogus`"));
}

#[test]
fn sweep_writes_one_directory_and_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let text =
        SMALL.replace("t_end = 2", "t_end = 4") + "init.kind = outgoing_pulse\ninit.center = 1\ninit.width = 1\n";
    let cfg = write_config(dir.path(), &text);
    let out = dir.path().join("sweep");
    let res = bubble(&[
        "sweep",
        "--config",
        &cfg,
        "--param",
        "init.amplitude",
        "--values",
        "1e-3,5e-4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(out.join("run_000/series.csv").is_file());
    assert!(out.join("run_001/series.csv").is_file());
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.split(',').nth(2) == Some("ok")), "{summary}");
    assert_eq!(read_manifest(&out.join("run_001")).config["init.amplitude"], "0.0005");
}

#[test]
fn sweep_rejects_an_empty_value_list() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("sweep");
    let res = bubble(&[
        "sweep",
        "--config",
        &cfg,
        "--param",
        "cfl",
        "--values",
        "",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("at least one value"));
}

#[test]
fn sweep_rejects_other_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let res = bubble(&[
        "sweep", "--config", &cfg, "--param", "gamma", "--values", "3", "--out", "unused",
    ]);
    assert!(!res.status.success());
    assert!(!Path::new("unused").exists());
}
