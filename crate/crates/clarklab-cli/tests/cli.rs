use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_clarklab"))
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn validate_exit_codes() {
    let ok = run(&["validate", scenario("s2.json").to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0));

    let bad = run(&["validate", scenario("non_isometric.json").to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).contains("\"isometry_residual\": 0.375"));

    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("broken.json");
    std::fs::write(&p, "{\n  \"d\": 1,\n  \"atoms\": [ nope ]\n}\n").unwrap();
    let broken = run(&["validate", p.to_str().unwrap()]);
    assert_eq!(broken.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&broken.stderr).contains("line 3"));

    let missing = run(&["validate", dir.path().join("absent.json").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn charfn_writes_flagged_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("theta.csv");
    let o = run(&[
        "charfn",
        scenario("s3.json").to_str().unwrap(),
        "--points",
        "list:0,0;1,0;0.3,-0.2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let mut r = csv::Reader::from_path(&out).unwrap();
    let header = r.headers().unwrap().clone();
    let rows: Vec<csv::StringRecord> = r.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 3);
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    // θ(0) = −Γ.
    let t00: f64 = rows[0][col("theta_00_re")].parse().unwrap();
    let t01_im: f64 = rows[0][col("theta_01_im")].parse().unwrap();
    assert!((t00 + 0.3).abs() < 1e-15 && (t01_im + 0.1).abs() < 1e-15);
    assert_eq!(&rows[1][col("status")], "too_close_to_atom");
    let cross: f64 = rows[2][col("cross_residual")].parse().unwrap();
    assert!(cross < 1e-9);
}

#[test]
fn charfn_ray_approaches_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ray.csv");
    let o = run(&["charfn", scenario("s2.json").to_str().unwrap(), "--points", "ray:0:8", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let mut r = csv::Reader::from_path(&out).unwrap();
    let vals: Vec<(f64, f64)> = r
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse().unwrap(), r[3].parse().unwrap())
        })
        .collect();
    for w in vals.windows(2) {
        assert!(w[1].1 > w[0].1);
    }
    for (x, t) in vals {
        assert!((t - x * x).abs() < 1e-12);
    }
}

#[test]
fn bad_point_spec_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let o = run(&["charfn", scenario("s2.json").to_str().unwrap(), "--points", "spiral:3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn clark_round_trip_s2() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.csv");
    std::fs::write(&f, "atom,component,re,im\n0,0,1,0\n").unwrap();
    let o = run(&["clark", scenario("s2.json").to_str().unwrap(), "--f", f.to_str().unwrap(), "--direction", "adjoint"]);
    assert_eq!(o.status.code(), Some(0));
    let coeffs: Vec<f64> = stdout(&o).lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(coeffs.len(), 2);
    assert!(coeffs.iter().all(|c| (c - 0.5).abs() < 1e-12));

    let h = dir.path().join("h.csv");
    std::fs::write(&h, "power,component,re,im\n0,0,0.5,0\n1,0,0.5,0\n").unwrap();
    let o = run(&["clark", scenario("s2.json").to_str().unwrap(), "--f", h.to_str().unwrap(), "--direction", "direct"]);
    assert_eq!(o.status.code(), Some(0));
    let vals: Vec<f64> = stdout(&o).lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert!((vals[0] - 1.0).abs() < 1e-6 && vals[1].abs() < 1e-6);
}

#[test]
fn clark_zero_input() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.csv");
    std::fs::write(&f, "atom,component,re,im\n").unwrap();
    let o = run(&["clark", scenario("s3.json").to_str().unwrap(), "--f", f.to_str().unwrap(), "--direction", "adjoint"]);
    assert_eq!(o.status.code(), Some(0));
    for line in stdout(&o).lines().skip(1) {
        let v: Vec<f64> = line.split(',').skip(2).map(|x| x.parse().unwrap()).collect();
        assert!(v.iter().all(|x| *x == 0.0));
    }
}

#[test]
fn verify_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let o = run(&["verify", scenario("s1.json").to_str().unwrap(), "--suite", "all", "--seed", "5", "--out", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(&a).unwrap()).unwrap();
    assert_eq!(report["pass"], serde_json::Value::Bool(true));
    assert!(report["records"].as_array().unwrap().len() > 30);
}

#[test]
fn verify_clark_suite_lists_checks() {
    let o = run(&["verify", scenario("s2.json").to_str().unwrap(), "--suite", "clark"]);
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let ids: Vec<&str> = report["records"].as_array().unwrap().iter().map(|r| r["check_id"].as_str().unwrap()).collect();
    for id in ["clark.unitarity", "clark.intertwining", "clark.agreement_c", "clark.agreement_c_star"] {
        assert!(ids.contains(&id));
    }
}

#[test]
fn tolerance_env_can_force_failure() {
    let o = bin()
        .args(["verify", scenario("s1.json").to_str().unwrap(), "--suite", "charfn"])
        .env("CLARKLAB_TOL", "1e-12")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unknown_suite_is_input_error() {
    let o = run(&["verify", scenario("s1.json").to_str().unwrap(), "--suite", "everything"]);
    assert_eq!(o.status.code(), Some(2));
}
