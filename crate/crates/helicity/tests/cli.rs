use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn helicity(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_helicity")).args(args).output().unwrap()
}

fn run_ok(args: &[&str]) -> Output {
    let out = helicity(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn circle_frenet_report_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run_ok(&["gen", "circle", "--radius", "1", "--n", "64", "--out", s(d)]);
    let out = d.join("topo");
    run_ok(&["topo", s(&d.join("circle.json")), "--framing", "frenet", "--out", s(&out)]);
    let r = json(&out.join("report.json"));
    assert!(r["wr"][0].as_f64().unwrap().abs() < 1e-10);
    assert!(r["tw"][0].as_f64().unwrap().abs() < 1e-10);
    assert_eq!(r["sl"][0], 0);
    assert!(r["total"].as_f64().unwrap().abs() < 1e-10);
    assert_eq!(r["tolerances"]["integer"], 5e-3);
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["files"][0]["path"], "report.json");
}

#[test]
fn hopf_seifert_report_balances_linking_and_self_linking() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run_ok(&["gen", "hopf-rings", "--n", "256", "--out", s(d)]);
    run_ok(&["topo", s(&d.join("hopf-rings.json")), "--framing", "seifert", "--out", s(d)]);
    let r = json(&d.join("report.json"));
    assert_eq!(r["lk_sum"].as_i64().unwrap().abs(), 2);
    assert_eq!(r["sl_sum"], -r["lk_sum"].as_i64().unwrap());
    assert_eq!(r["lk_plus_sl"], 0);
    assert!(r["total"].as_f64().unwrap().abs() < 5e-3);
}

#[test]
fn identical_invocations_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run_ok(&["gen", "trefoil", "--n", "1024", "--out", s(d)]);
    let f = d.join("trefoil.json");
    for sub in ["a", "b"] {
        run_ok(&["topo", s(&f), "--framing", "random", "--seed", "11", "--out", s(&d.join(sub))]);
    }
    let a = std::fs::read(d.join("a/report.json")).unwrap();
    let b = std::fs::read(d.join("b/report.json")).unwrap();
    assert_eq!(a, b);
    assert_eq!(std::fs::read(d.join("a/manifest.json")).unwrap(), std::fs::read(d.join("b/manifest.json")).unwrap());
    // the seed changes the framing
    run_ok(&["topo", s(&f), "--framing", "random", "--seed", "12", "--out", s(&d.join("c"))]);
    assert_ne!(a, std::fs::read(d.join("c/report.json")).unwrap());
    // and the thread count does not
    run_ok(&["topo", s(&f), "--framing", "random", "--seed", "11", "--threads", "1", "--out", s(&d.join("e"))]);
    assert_eq!(a, std::fs::read(d.join("e/report.json")).unwrap());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(helicity(&["topo", "x.json", "--framing", "bogus"]).status.code(), Some(2));
    assert_eq!(helicity(&["gen", "circle", "--radius", "-1", "--out", s(d)]).status.code(), Some(2));
    assert_eq!(helicity(&["topo", s(&d.join("missing.json")), "--out", s(d)]).status.code(), Some(4));

    let cfg = d.join("cfg.json");
    std::fs::write(&cfg, r#"{"n": 32, "colour": "red"}"#).unwrap();
    assert_eq!(helicity(&["gen", "circle", "--config", s(&cfg), "--out", s(d)]).status.code(), Some(2));

    // a coarse trefoil cannot meet a very tight helicity bound
    run_ok(&["gen", "trefoil", "--n", "128", "--out", s(d)]);
    let code = helicity(&["topo", s(&d.join("trefoil.json")), "--framing", "seifert", "--helicity-tol", "1e-12", "--out", s(d)]);
    assert_eq!(code.status.code(), Some(3));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = d.join("cfg.json");
    std::fs::write(&cfg, r#"{"n": 32, "radius": 3.0}"#).unwrap();
    run_ok(&["gen", "circle", "--config", s(&cfg), "--radius", "2", "--out", s(d)]);
    let f = helicity::io::read_filaments(&d.join("circle.json")).unwrap();
    assert_eq!(f[0].len(), 32);
    assert!((f[0].points()[0].norm() - 2.0).abs() < 1e-12);
}

#[test]
fn bundles_scene_has_fourteen_filaments() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run_ok(&["gen", "hopf-bundles", "--satellites", "6", "--offset", "4", "--n", "128", "--out", s(d)]);
    let f = helicity::io::read_filaments(&d.join("hopf-bundles.json")).unwrap();
    assert_eq!(f.len(), 14);
    let ids: Vec<i64> = f.iter().map(|x| x.id()).collect();
    assert_eq!(ids, (0..14).collect::<Vec<_>>());
}

#[test]
fn coarse_reports_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("empty.json"), r#"{"filaments": []}"#).unwrap();
    run_ok(&["coarse", s(&d.join("empty.json")), "--out", s(d)]);
    let r = json(&d.join("coarse.json"));
    assert_eq!(r["h_cl"], 0.0);
    assert_eq!(r["oracle"], 0.0);

    run_ok(&["gen", "hopf-rings", "--n", "256", "--out", s(d)]);
    run_ok(&["coarse", s(&d.join("hopf-rings.json")), "--write-grids", "--out", s(d)]);
    let r = json(&d.join("coarse.json"));
    assert_eq!(r["oracle"].as_f64().unwrap().abs(), 2.0);
    assert!(r["relative_error"].as_f64().unwrap() < 0.1);
    assert!(helicity::io::read_vector_grid(&d.join("omega.grid")).is_ok());
}

#[test]
fn gpe_zero_steps_round_trips_the_imprint() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run_ok(&["gpe", "run", "--scene", "hopf-single", "--grid", "48", "--steps", "0", "--out", s(d)]);
    let r = json(&d.join("run.json"));
    assert_eq!(r["round_trip"]["pass"], true);
    assert!(r["round_trip"]["max_hausdorff_cells"].as_f64().unwrap() < 1.0);
    assert_eq!(r["snapshots"].as_array().unwrap().len(), 1);
    let csv = std::fs::read_to_string(d.join("diagnostics.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("t,norm,energy,total_length,lk_sum"));
    assert_eq!(csv.lines().count(), 2);
    let lines = helicity::io::read_filaments(&d.join("snapshots/filaments_000000.json")).unwrap();
    assert_eq!(lines.len(), 2);
    let psi = helicity::io::read_complex_field(&d.join("snapshots/psi_000000.grid")).unwrap();
    assert_eq!(psi.shape(), [48; 3]);
}

#[test]
fn gpe_ring_run_writes_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run_ok(&["gpe", "run", "--scene", "ring", "--grid", "48", "--steps", "20", "--stride", "10", "--fields", "none", "--out", s(d)]);
    let r = json(&d.join("run.json"));
    let snaps = r["snapshots"].as_array().unwrap();
    assert_eq!(snaps.len(), 3);
    assert!(snaps.iter().all(|x| x["lines"] == 1 && x["lk_sum"] == 0));
    let m = json(&d.join("manifest.json"));
    let paths: Vec<&str> = m["files"].as_array().unwrap().iter().map(|e| e["path"].as_str().unwrap()).collect();
    assert!(paths.contains(&"snapshots/filaments_000020.json"));
    assert!(!paths.iter().any(|p| p.ends_with(".grid")));
}
