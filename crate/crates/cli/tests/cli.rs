use std::path::PathBuf;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_haarfact")).args(args).output().expect("spawn haarfact")
}

fn out_dir(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn status_line(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).lines().last().unwrap_or_default().to_string()
}

#[test]
fn build_writes_all_outputs() {
    let dir = out_dir("build");
    let out = run(&["fhs-build", "--resolution", "6", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", status_line(&out));
    assert!(status_line(&out).starts_with("haarfact: status=ok exit=0 command=fhs-build"));
    for file in ["system.json", "certificates.csv", "run.json"] {
        assert!(dir.join(file).exists(), "{file} missing");
    }
    let record: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.join("run.json")).unwrap()).unwrap();
    assert_eq!(record["exit_status"], 0);
    assert_eq!(record["command"], "fhs-build");
}

#[test]
fn exit_codes_follow_the_failure_kind() {
    let dir = out_dir("codes");
    let d = dir.to_str().unwrap();
    let cases: [(&[&str], i32, &str); 4] = [
        (&["fhs-build", "--operator", "cond-exp", "--resolution", "6", "--out", d], 3, "no-large-diagonal"),
        (&["factor-identity", "--space", "lp:p=1", "--resolution", "6", "--out", d], 4, "refused"),
        (&["fhs-build", "--operator", "no-such-operator", "--out", d], 1, ""),
        (&["no-such-command"], 1, "usage"),
    ];
    for (args, code, status) in cases {
        let out = run(args);
        assert_eq!(out.status.code(), Some(code), "{args:?}: {}", status_line(&out));
        assert!(status_line(&out).contains(&format!("exit={code}")), "{args:?}");
        assert!(status_line(&out).contains(status), "{args:?}: {}", status_line(&out));
    }
}

#[test]
fn failed_runs_still_write_a_record() {
    let dir = out_dir("failed");
    let out = run(&["fhs-build", "--operator", "cond-exp", "--resolution", "6", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let record: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.join("run.json")).unwrap()).unwrap();
    assert_eq!(record["exit_status"], 3);
    assert!(record["reason"].as_str().unwrap().contains("large diagonal"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = out_dir("config");
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, "[space]\nspace = lp:p=3\n[params]\nresolution = 5\nseed = 7\n").unwrap();
    let out = run(&["fhs-build", "--config", cfg.to_str().unwrap(), "--seed", "9", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", status_line(&out));
    let record: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.join("run.json")).unwrap()).unwrap();
    assert_eq!(record["config"]["space"], "lp:p=3");
    assert_eq!(record["config"]["resolution"], 5);
    assert_eq!(record["seed"], 9);
}

#[test]
fn norm_reports_exact_dual_for_lp() {
    let dir = out_dir("norm");
    let file = dir.join("f.json");
    std::fs::write(&file, r#"{"resolution": 1, "values": [1.0, -2.0]}"#).unwrap();
    let out = run(&["norm", "--space", "lp:p=2", "--dual", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let expected = (2.5f64).sqrt();
    let first: f64 = stdout.lines().next().unwrap().trim().parse().unwrap();
    assert!((first - expected).abs() < 1e-15);
    assert!(stdout.lines().nth(1).unwrap().ends_with("exact"));
}

#[test]
fn decay_table_is_csv() {
    let out = run(&["diagnose", "decay", "--resolution", "8", "--haar", "3", "--from", "2", "--to", "7"]);
    assert_eq!(out.status.code(), Some(0), "{}", status_line(&out));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("n,value,exact_zero"));
    assert_eq!(lines.count(), 6);
}
