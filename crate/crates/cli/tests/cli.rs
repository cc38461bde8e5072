use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use boot3d::geometry::{mesh_area, sphere_grid};
use boot3d::io::{read_obj_file, read_vxg_file};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_boot3d"))
}

fn asset(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("assets").join(name)
}

fn run(args: &[&str]) -> Output {
    let out = bin().args(args).output().unwrap();
    assert!(
        out.status.success(),
        "boot3d {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stderr_line(out: &Output) -> String {
    let text = String::from_utf8_lossy(&out.stderr).into_owned();
    let lines: Vec<&str> = text.lines().filter(|l| l.starts_with("error: ")).collect();
    assert_eq!(lines.len(), 1, "stderr: {text}");
    lines[0].to_string()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut rd = csv::Reader::from_path(path).unwrap();
    rd.records().map(|r| r.unwrap().iter().map(str::to_string).collect()).collect()
}

#[test]
fn bundled_sphere_grid_matches_generator() {
    let stored = read_vxg_file(&asset("sphere64.vxg")).unwrap();
    let fresh = sphere_grid(64, 0.75, 1.0).unwrap();
    assert_eq!(stored.dims(), fresh.dims());
    assert_eq!(stored.origin(), fresh.origin());
    assert_eq!(stored.spacing(), fresh.spacing());
    assert!(stored.values().iter().zip(fresh.values()).all(|(a, b)| *a == *b as f32 as f64));
}

#[test]
fn extract_mesh_on_bundled_sphere() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sphere.obj");
    run(&["extract-mesh", asset("sphere64.vxg").to_str().unwrap(), "-o", out.to_str().unwrap()]);
    let mesh = read_obj_file(&out).unwrap();
    let exact = 4.0 * PI * 0.75 * 0.75;
    let area = mesh_area(&mesh).unwrap();
    assert!((area - exact).abs() / exact < 0.02, "area {area} vs {exact}");
    assert!(dir.path().join("sphere.obj.manifest.csv").is_file());
}

#[test]
fn gen_pairs_with_oracle_counts_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let faces = dir.path().join("faces");
    let pairs = dir.path().join("pairs");
    let cfg = dir.path().join("small.toml");
    std::fs::write(&cfg, "[camera]\nsize = 48\n[grid]\nn = 24\n").unwrap();
    let c = cfg.to_str().unwrap();
    run(&["--config", c, "synth-faces", "--count", "3", "-o", faces.to_str().unwrap()]);
    run(&[
        "--config",
        c,
        "gen-pairs",
        "--recon",
        "oracle",
        "--images",
        faces.to_str().unwrap(),
        "--yaw-set=-20,20",
        "--pitch-limit",
        "0",
        "-o",
        pairs.to_str().unwrap(),
    ]);
    let rows = csv_rows(&pairs.join("manifest.csv"));
    assert_eq!(rows.len(), 6);
    let yaws: Vec<&str> = rows.iter().map(|r| r[4].as_str()).collect();
    assert_eq!(yaws, ["-20", "20", "-20", "20", "-20", "20"]);
    assert!(rows.iter().all(|r| r[5] == "0"));
    for r in &rows {
        assert!(pairs.join(&r[0]).is_file() && pairs.join(&r[1]).is_file());
    }
    let manifest = csv_rows(&pairs.join("run_manifest.csv"));
    let outputs = manifest.iter().filter(|r| r[0] == "output").count();
    // Six images, six grids, the pair manifest and the skipped list.
    assert_eq!(outputs, 14);
}

#[test]
fn missing_input_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["extract-mesh", "/nonexistent/grid.vxg", "-o"])
        .arg(dir.path().join("x.obj"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_line(&out).starts_with("error: io: "));
}

#[test]
fn bad_config_and_usage_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[bootstrap]\nsplit_ratio = 1.5\n").unwrap();
    let out = bin()
        .args(["--config", cfg.to_str().unwrap(), "bootstrap-run", "-o"])
        .arg(dir.path().join("run"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_line(&out).starts_with("error: invalid_config: "));

    let out = bin().args(["extract-mesh"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_line(&out).starts_with("error: usage: "));
}

#[test]
fn corrupt_grid_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("bad.vxg");
    std::fs::write(&grid, b"VXG9 not a grid").unwrap();
    let out = bin()
        .args(["extract-mesh", grid.to_str().unwrap(), "-o"])
        .arg(dir.path().join("x.obj"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_line(&out).starts_with("error: format: "));
}

#[test]
fn demo_bootstrap_reduces_profile_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("demo");
    run(&["--config", asset("demo.toml").to_str().unwrap(), "bootstrap-run", "-o", out.to_str().unwrap()]);
    let rows = csv_rows(&out.join("summary.csv"));
    assert_eq!(rows.len(), 2);
    let (before, after) = (&rows[0], &rows[1]);
    assert_eq!(before[0], "before");
    let num = |r: &Vec<String>, i: usize| r[i].parse::<f64>().unwrap();
    // Columns: model, yaw_set, pairs, best_epoch, mean, 0-20, 20-40, 40-60, ratio.
    assert!(num(after, 7) < num(before, 7), "40-60: {} -> {}", before[7], after[7]);
    assert!(num(after, 8) < num(before, 8));
    for f in ["config.toml", "fit_log.csv", "model_base.toy", "run_manifest.csv", "run.log"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    assert!(out.join("bootstrap_0").join("model_best.toy").is_file());
}
