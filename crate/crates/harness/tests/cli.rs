use std::fs;
use std::process::Command;

fn heatnev() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_heatnev"));
    c.env_remove("HEATNEV_REGISTRY");
    c
}

const SMALL: &str = r#"
name = "tiny-identity"
description = "small identity run"

[manifold]
kind = "flat"

[map]
components = ["1", "z"]
origin = [[0.0, 0.0]]

[simulation]
t_grid = [1.0, 2.0]
dt_base = 0.05
n_paths = 20
seed = 3

[experiment]
checks = ["characteristic"]
"#;

#[test]
fn validate_accepts_builtins_and_rejects_bad_files() {
    let ok = heatnev().args(["validate", "flat-identity"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("config hash"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, SMALL.replace("origin = [[0.0, 0.0]]", "origin = [[0.0, 0.0]]\nbogus = 1")).unwrap();
    let out = heatnev().arg("validate").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));

    let unknown = heatnev().args(["validate", "no-such-scenario"]).output().unwrap();
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn unknown_check_and_origin_on_divisor_are_config_errors() {
    let out = heatnev().args(["run", "flat-identity", "--checks", "fmt,nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("on.toml");
    let text = SMALL.replace("[simulation]", "[[divisors]]\nlabel = \"zero\"\npoint = [0.0, 0.0]\n\n[simulation]");
    fs::write(&p, text).unwrap();
    let out = heatnev().arg("validate").arg(&p).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("origin on divisor zero"));
}

#[test]
fn registry_scenarios_are_listed_and_runnable() {
    let reg = tempfile::tempdir().unwrap();
    fs::write(reg.path().join("tiny.toml"), SMALL).unwrap();
    fs::write(reg.path().join("notes.txt"), "ignored").unwrap();
    let out = heatnev().arg("--registry").arg(reg.path()).arg("list").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let listing = String::from_utf8_lossy(&out.stdout).to_string();
    assert!(listing.contains("tiny-identity"));
    assert!(listing.contains("flat-exp-defect"));

    let dest = tempfile::tempdir().unwrap();
    let out = heatnev()
        .env("HEATNEV_REGISTRY", reg.path())
        .args(["run", "tiny-identity", "--workers", "2", "--out"])
        .arg(dest.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dest.path().join("characteristic.csv")).unwrap();
    assert!(csv.starts_with("t,estimate,std_error,n_retained,n_clamped\n"));
    assert_eq!(csv.lines().count(), 3);
    assert!(dest.path().join("summary.csv").is_file());
}

#[test]
fn oracle_subcommand_prints_tables() {
    let out = heatnev().args(["oracle", "identity-characteristic", "--times", "10"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    let row = text.lines().last().unwrap();
    let v: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!((v - 1.2972151748803067).abs() < 1e-9, "{row}");
    let bad = heatnev().args(["oracle", "nothing"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
