use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use emhydro::field::{EMFieldGrid, GridSpec, SpinorField};
use emhydro::io::{FieldSnapshot, RunConfig};
use emhydro::PhysicalConstants;
use nalgebra::Vector3;

const SENTINEL: &str = "_INCOMPLETE";

fn emhydro(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_emhydro")).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// A small plane-wave run: 8 cells, 54 labels kept off the nodes of psi.
fn small_config(dir: &Path, hbar: f64) -> String {
    let mut cfg = RunConfig::plane_wave_demo();
    cfg.constants.hbar = hbar;
    cfg.grid.dims = [1, 1, 8];
    let ens = cfg.ensemble.as_mut().unwrap();
    ens.counts = [1, 1, 3, 2, 3, 3];
    ens.t_final = 0.5;
    cfg.times = vec![0.25, 0.5];
    let path = dir.join(format!("config_{hbar}.toml"));
    fs::write(&path, cfg.to_toml()).unwrap();
    path.to_str().unwrap().to_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn evolve_writes_snapshots_and_clears_sentinel() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 1.0);
    let out = dir.path().join("evolve");
    let o = emhydro(&["evolve", "--config", &cfg, "--out", path(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(!out.join(SENTINEL).exists());
    let s = FieldSnapshot::read(&out.join("field_001.emh")).unwrap();
    assert_eq!(s.t, 0.5);
    assert_eq!(s.grid().dims, [1, 1, 8]);
    let index = fs::read_to_string(out.join("snapshots.csv")).unwrap();
    assert_eq!(index.lines().count(), 3);
}

#[test]
fn times_flag_accepts_period_multiples() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 1.0);
    let out = dir.path().join("evolve");
    let o = emhydro(&["evolve", "--config", &cfg, "--out", path(&out), "--times", "0.5T,1T"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(FieldSnapshot::read(&out.join("field_000.emh")).unwrap().t, 0.5);
    assert_eq!(FieldSnapshot::read(&out.join("field_001.emh")).unwrap().t, 1.0);
}

#[test]
fn trace_table_has_one_row_per_label_and_record() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 1.0);
    let out = dir.path().join("trace");
    let o = emhydro(&["trace", "--config", &cfg, "--out", path(&out), "--times", "0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(out.join("trajectories.csv")).unwrap();
    let mut lines = table.lines();
    assert!(lines.next().unwrap().starts_with("label,t,q1,q2,q3"));
    assert_eq!(lines.count(), 54);
}

#[test]
fn trace_is_independent_of_hbar_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let run = |hbar: f64, workers: &str, name: &str| {
        let cfg = small_config(dir.path(), hbar);
        let out = dir.path().join(name);
        let o = emhydro(&["--workers", workers, "trace", "--config", &cfg, "--out", path(&out)]);
        assert!(o.status.success(), "{}", stderr(&o));
        fs::read_to_string(out.join("trajectories.csv")).unwrap()
    };
    let base = run(1.0, "1", "a");
    assert!(base.lines().count() > 17);
    assert_eq!(base, run(1.0, "3", "b"));
    assert_eq!(base, run(2.0, "2", "c"));
}

#[test]
fn reconstruct_and_compare() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 1.0);
    let out = dir.path().join("rec");
    let o = emhydro(&["reconstruct", "--config", &cfg, "--out", path(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    for line in report.lines().filter(|l| l.starts_with("spinor_l2")) {
        let v: f64 = line.split('=').nth(1).unwrap().trim().parse().unwrap();
        assert!(v < 1e-9, "{line}");
    }
    let o = emhydro(&[
        "compare",
        path(&out.join("reference_001.emh")),
        path(&out.join("reconstructed_001.emh")),
        "--tolerance",
        "1e-9",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("spinor_l2"));
}

#[test]
fn corrupted_snapshot_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 1.0);
    let out = dir.path().join("evolve");
    assert!(emhydro(&["evolve", "--config", &cfg, "--out", path(&out)])
        .status
        .success());
    let file = out.join("field_000.emh");
    let mut bytes = fs::read(&file).unwrap();
    bytes[0] ^= 0xff;
    fs::write(&file, bytes).unwrap();
    let o = emhydro(&["verify", "--snapshot", path(&file)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("magic"), "{}", stderr(&o));
    let o = emhydro(&["compare", path(&file), path(&out.join("field_001.emh"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_config_exits_2_and_leaves_no_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    let text = RunConfig::plane_wave_demo()
        .to_toml()
        .replace("eps0 = 2.0", "eps0 = -1.0");
    fs::write(&cfg, text).unwrap();
    let out = dir.path().join("out");
    let o = emhydro(&["evolve", "--config", path(&cfg), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("eps0"), "{}", stderr(&o));
    assert!(!out.join("field_000.emh").exists());

    fs::write(&cfg, "times = [1.0]\nbogus = 3\n").unwrap();
    let o = emhydro(&["trace", "--config", path(&cfg), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn longitudinal_snapshot_is_a_constraint_violation() {
    let dir = tempfile::tempdir().unwrap();
    let grid = GridSpec::line_z(8, 1.0);
    // E along z varying with z has nonzero divergence.
    let e = (0..8)
        .map(|p| Vector3::new(0.0, 0.0, (std::f64::consts::TAU * p as f64 / 8.0).sin()))
        .collect();
    let em = EMFieldGrid::new(grid, e, vec![Vector3::zeros(); 8]).unwrap();
    let snap = FieldSnapshot {
        t: 0.0,
        consts: PhysicalConstants::default(),
        spinor: SpinorField::from_em(&em, &PhysicalConstants::default()),
    };
    let file = dir.path().join("long.emh");
    snap.write(&file).unwrap();
    let o = emhydro(&["verify", "--snapshot", path(&file)]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn verify_passes_on_small_plane_wave() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 1.0);
    let out = dir.path().join("verify");
    let o = emhydro(&["verify", "--config", &cfg, "--out", path(&out)]);
    assert!(
        o.status.success(),
        "{}\n{}",
        String::from_utf8_lossy(&o.stdout),
        stderr(&o)
    );
    assert!(!out.join(SENTINEL).exists());
    let text = fs::read_to_string(out.join("verify.txt")).unwrap();
    assert!(!text.contains("FAIL"));
}

#[test]
fn labels_on_a_node_exit_4_and_keep_the_sentinel() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::plane_wave_demo();
    cfg.grid.dims = [1, 1, 8];
    // z = 0.25 and 0.75 are zeros of the linearly polarized wave at t = 0.
    cfg.ensemble.as_mut().unwrap().counts = [1, 1, 2, 2, 2, 2];
    let file = dir.path().join("node.toml");
    fs::write(&file, cfg.to_toml()).unwrap();
    let out = dir.path().join("trace");
    let o = emhydro(&["trace", "--config", path(&file), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("node"), "{}", stderr(&o));
    assert!(out.join(SENTINEL).exists());
}
