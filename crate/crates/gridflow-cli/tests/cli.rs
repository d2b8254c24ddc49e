use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gridflow"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../gridflow/tests/fixtures")
        .join(name)
}

#[test]
fn gen_is_deterministic_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.pogf");
    let b = dir.path().join("b.pogf");
    for out in [&a, &b] {
        let st = bin()
            .args(["gen"])
            .arg(out)
            .args(["--dims", "3x4x2", "--edge-interval", "1", "--seed", "9"])
            .status()
            .unwrap();
        assert!(st.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn solve_dimacs_with_oracle() {
    let out = bin()
        .arg("solve")
        .arg(fixture("diamond.dimacs"))
        .args(["--backend", "oracle"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let row = stdout.lines().nth(1).unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields[11], "2", "flow column");
    assert_eq!(fields[12], "2", "cut column");
}

#[test]
fn dimacs_rejects_structured_backends() {
    let out = bin()
        .arg("solve")
        .arg(fixture("diamond.dimacs"))
        .args(["--backend", "pr-serial"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solve_pogf_parallel_reports_flow_equal_cut() {
    let dir = tempfile::tempdir().unwrap();
    let vol = dir.path().join("v.pogf");
    assert!(bin()
        .arg("gen")
        .arg(&vol)
        .args(["--dims", "3x6x2", "--edge-interval", "1", "--seed", "4"])
        .status()
        .unwrap()
        .success());
    let out = bin()
        .arg("solve")
        .arg(&vol)
        .args(["--backend", "pr-parallel", "--segments", "3", "--verify-with-oracle"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let fields: Vec<&str> = stdout.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(fields[11], fields[12], "flow must equal cut");
}

#[test]
fn solve_all_zero_instance_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let vol = dir.path().join("empty.pogf");
    assert!(bin()
        .arg("gen")
        .arg(&vol)
        .args(["--dims", "2x2x1", "--edge-interval", "1", "--seed", "1", "--max-cap", "0"])
        .status()
        .unwrap()
        .success());
    let out = bin().arg("solve").arg(&vol).output().unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let fields: Vec<&str> = stdout.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(fields[11], "0");
}

#[test]
fn verify_passes_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let vol = dir.path().join("v.pogf");
    assert!(bin()
        .arg("gen")
        .arg(&vol)
        .args(["--dims", "2x4x1", "--edge-interval", "1", "--seed", "5"])
        .status()
        .unwrap()
        .success());
    let out = bin()
        .arg("verify")
        .arg(&vol)
        .args(["--segments", "2", "--tiles", "2x1"])
        .output()
        .unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(out.status.success(), "{}", stdout);
    assert!(stdout.lines().all(|l| l.starts_with("PASS")), "{}", stdout);
    assert!(stdout.contains("value-agreement"));
}

#[test]
fn weight_volume_solve_prints_surface() {
    let dir = tempfile::tempdir().unwrap();
    let vol = dir.path().join("w.pogw");
    assert!(bin()
        .arg("gen")
        .arg(&vol)
        .args(["--dims", "4x3x1", "--edge-interval", "1", "--seed", "2", "--weights"])
        .status()
        .unwrap()
        .success());
    let out = bin().arg("solve").arg(&vol).output().unwrap();
    assert!(out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("surface objective"), "{}", stderr);
}

#[test]
fn missing_file_exits_3() {
    let out = bin().arg("solve").arg("/nonexistent.pogf").output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn bench_writes_csv_with_memory_columns() {
    let dir = tempfile::tempdir().unwrap();
    let vol = dir.path().join("v.pogf");
    assert!(bin()
        .arg("gen")
        .arg(&vol)
        .args(["--dims", "2x8x1", "--edge-interval", "1", "--seed", "3"])
        .status()
        .unwrap()
        .success());
    let csv_path = dir.path().join("bench.csv");
    let out = bin()
        .arg("bench")
        .arg(&vol)
        .args(["--backend", "pr-parallel", "--segment-counts", "1,2,4", "--reps", "2"])
        .arg("--out")
        .arg(&csv_path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert!(header.contains("baseline_edge_bytes"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 6, "3 segment counts x 2 reps");
    // structured vs explicit baseline: 4 bytes/half-edge vs 32 + node bytes
    let f: Vec<&str> = rows[0].split(',').collect();
    let edge: u64 = f[13].parse().unwrap();
    let baseline: u64 = f[16].parse().unwrap();
    assert_eq!(baseline, edge * 8);
}

#[test]
fn thread_cap_env_limits_segments() {
    let dir = tempfile::tempdir().unwrap();
    let vol = dir.path().join("v.pogf");
    assert!(bin()
        .arg("gen")
        .arg(&vol)
        .args(["--dims", "2x8x1", "--edge-interval", "1", "--seed", "6"])
        .status()
        .unwrap()
        .success());
    let out = bin()
        .arg("solve")
        .arg(&vol)
        .args(["--backend", "pr-parallel", "--segments", "8"])
        .env("GRIDFLOW_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let fields: Vec<&str> = stdout.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(fields[6], "2", "segments column reflects the cap");
}
