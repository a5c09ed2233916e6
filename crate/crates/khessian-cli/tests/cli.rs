//! End-to-end tests of the command-line interface.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_khessian"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn khessian")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "exit {:?}, stderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout JSON")
}

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("khessian-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn ko_power_two_matches_oracle() {
    let out = run(&[
        "ko",
        "--nl",
        r#"{"kind":"power","p":2}"#,
        "--k",
        "1",
        "--beta",
        "1",
    ]);
    let doc = stdout_json(&out);
    assert_eq!(doc["verdict"], "converges");
    let value = doc["value"].as_f64().unwrap();
    assert!((value - 2.9744774254021755).abs() < 1e-7, "{value}");
}

#[test]
fn ko_linear_diverges() {
    let doc = stdout_json(&run(&[
        "ko",
        "--nl",
        r#"{"kind":"power","p":1,"k":1}"#,
        "--beta",
        "1",
    ]));
    assert_eq!(doc["verdict"], "diverges");
    assert_eq!(doc["reason"], "tail");
}

#[test]
fn blowup_linear_reports_no_blowup() {
    let doc = stdout_json(&run(&[
        "blowup",
        "--nl",
        r#"{"kind":"power","p":1}"#,
        "--k",
        "1",
        "--N",
        "3",
        "--beta",
        "1",
        "--rmax",
        "50",
    ]));
    assert_eq!(doc["verdict"], "no_blowup_up_to");
    assert_eq!(doc["r_max"].as_f64().unwrap(), 50.0);
}

#[test]
fn blowup_square_brackets_oracle_radius() {
    let doc = stdout_json(&run(&[
        "blowup",
        "--nl",
        r#"{"kind":"power","p":2}"#,
        "--k",
        "1",
        "--N",
        "3",
        "--beta",
        "1",
    ]));
    assert_eq!(doc["verdict"], "blowup");
    let lo = doc["rho_low"].as_f64().unwrap();
    let hi = doc["rho_high"].as_f64().unwrap();
    assert!(hi - lo <= 1e-4);
    assert!(lo <= 3.9645862 && hi >= 3.9645833, "[{lo}, {hi}]");
}

#[test]
fn dirichlet_constant_recovers_quadratic_center() {
    let doc = stdout_json(&run(&[
        "dirichlet",
        "--nl",
        r#"{"kind":"constant","c":1.7320508}"#,
        "--k",
        "2",
        "--N",
        "3",
        "--R",
        "2",
        "--c",
        "5",
        "--method",
        "shooting",
    ]));
    let beta = doc["beta_star"].as_f64().unwrap();
    assert!((beta - 3.0).abs() < 1e-5, "beta* {beta}");
}

#[test]
fn scan_is_monotone_for_square() {
    let doc = stdout_json(&run(&[
        "scan",
        "--nl",
        r#"{"kind":"power","p":2,"k":1}"#,
        "--betas",
        "1,10,100",
    ]));
    let vals: Vec<f64> = doc
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["value"].as_f64().unwrap())
        .collect();
    assert!(vals[0] > vals[1] && vals[1] > vals[2], "{vals:?}");
}

#[test]
fn domain_error_exits_one() {
    let out = run(&[
        "ko",
        "--nl",
        r#"{"kind":"power","p":2,"k":1}"#,
        "--beta",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value =
        serde_json::from_slice(&out.stderr).expect("stderr carries a JSON error object");
    assert_eq!(err["error"]["kind"], "domain");
}

#[test]
fn unparseable_nl_exits_one_naming_field() {
    let out = run(&[
        "ko",
        "--nl",
        r#"{"kind":"power"}"#,
        "--k",
        "1",
        "--beta",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&out.stderr).to_string();
    assert!(msg.contains("p"), "error does not name the field: {msg}");
}

#[test]
fn sweep_is_deterministic() {
    let dir = scratch_dir("sweep");
    let out1 = dir.join("s1.csv");
    let out2 = dir.join("s2.csv");
    for out in [&out1, &out2] {
        let st = run(&[
            "sweep",
            "--p",
            "1,2",
            "--k",
            "1,2",
            "--N",
            "3,4",
            "--beta",
            "1",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    }
    let b1 = std::fs::read(&out1).unwrap();
    let b2 = std::fs::read(&out2).unwrap();
    assert_eq!(b1, b2, "sweep output not byte-identical");
    let text = String::from_utf8(b1).unwrap();
    assert!(text.starts_with("beta,p,k,N,rho_low,rho_high,K_beta,verdict\n"));
    // 2 p's x 2 k's x 2 N's = 8 cells.
    assert_eq!(text.lines().count(), 9);
    assert!(text.contains("no_blowup"));
    assert!(text.contains("blowup"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn trajectory_round_trip_through_verify() {
    let dir = scratch_dir("verify");
    let traj = dir.join("traj.json");
    let csv_a = dir.join("a.csv");
    let csv_b = dir.join("b.csv");
    let st = run(&[
        "ivp",
        "--nl",
        r#"{"kind":"power","p":2,"k":1}"#,
        "--N",
        "3",
        "--beta",
        "1",
        "--rmax",
        "50",
        "--out",
        traj.to_str().unwrap(),
    ]);
    assert!(st.status.success());
    let st = run(&[
        "verify",
        "--traj",
        traj.to_str().unwrap(),
        "--out-csv",
        csv_a.to_str().unwrap(),
    ]);
    assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    let st = run(&[
        "verify",
        "--nl",
        r#"{"kind":"power","p":2,"k":1}"#,
        "--N",
        "3",
        "--beta",
        "1",
        "--rmax",
        "50",
        "--out-csv",
        csv_b.to_str().unwrap(),
    ]);
    assert!(st.status.success());
    let a = std::fs::read(&csv_a).unwrap();
    let b = std::fs::read(&csv_b).unwrap();
    assert_eq!(a, b, "file-based and in-process verify disagree");
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("inequality,lhs,rhs,slack,pass\n"));
    for line in text.lines().skip(1) {
        assert!(line.ends_with(",true"), "estimate failed: {line}");
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn config_file_drives_a_run() {
    let dir = scratch_dir("config");
    let cfg = dir.join("ko.json");
    std::fs::write(
        &cfg,
        r#"{"command":"ko","nl":"{\"kind\":\"power\",\"p\":2}","k":1,"beta":1.0}"#,
    )
    .unwrap();
    let doc = stdout_json(&run(&["run", "--config", cfg.to_str().unwrap()]));
    assert_eq!(doc["verdict"], "converges");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn out_dir_env_var_resolves_relative_paths() {
    let dir = scratch_dir("envout");
    let out = bin()
        .env("KHESSIAN_OUT_DIR", &dir)
        .args([
            "ko",
            "--nl",
            r#"{"kind":"power","p":2,"k":1}"#,
            "--beta",
            "1",
            "--out",
            "report.json",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.join("report.json").exists());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn seed_fixtures_writes_fixture_files() {
    let dir = scratch_dir("seed");
    let st = run(&["seed-fixtures", "--out-dir", dir.to_str().unwrap()]);
    assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    for name in ["ko_values.json", "blowup_brackets.json", "shooting_betas.json"] {
        let path = dir.join(name);
        assert!(path.exists(), "{name} missing");
        let doc: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert!(doc.as_array().map_or(false, |a| !a.is_empty()));
    }
    std::fs::remove_dir_all(&dir).ok();
}
