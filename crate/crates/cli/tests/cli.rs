use std::process::{Command, Output};

fn glacier(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glacier"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn estimate_prints_one_json_record() {
    let o = glacier(&["estimate", "pi", "--n", "1", "--trials", "20000", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["params"]["quantity"], "pi");
    assert_eq!(v["trials"], 20000);
    assert!((v["value"].as_f64().unwrap() - 0.9375).abs() < 0.01);

    let o = glacier(&["estimate", "F", "--N", "1", "--n", "4", "--trials", "30"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["value"], 1.0);
}

#[test]
fn exit_codes() {
    assert_eq!(glacier(&["--help"]).status.code(), Some(0));
    assert_eq!(glacier(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(glacier(&["estimate", "pi", "--n", "x"]).status.code(), Some(1));
    // validation: L at criticality, empty grid, unknown key
    assert_eq!(glacier(&["estimate", "L", "--p", "0.5"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(glacier(&["prop1", "--C", "", "--out", out]).status.code(), Some(1));
    assert_eq!(glacier(&["prop1", "--set", "colour=blue", "--out", out]).status.code(), Some(1));
    // runtime: the scale recursion needs a box above the memory cap
    let o = glacier(&["scales", "--N", "10000", "--radius-cap", "50", "--out", out]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out = dir.path().join("out");
    std::fs::write(
        &cfg,
        format!("# prop1 grid\nN = 400\nC = 0.45, 1\ntrials = 50\nseed = 4\nout = {}\n", out.display()),
    )
    .unwrap();
    let o = glacier(&["prop1", "--config", cfg.to_str().unwrap(), "--trials", "80"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("prop1.csv")).unwrap();
    assert_eq!(stdout(&o), csv);
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.ends_with(",80,4,")), "{rows:?}");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("prop1.manifest.json")).unwrap()).unwrap();
    assert!(manifest["config"].as_str().unwrap().contains("trials=80"));
}

#[test]
fn scales_prints_level_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = glacier(&["scales", "--N", "10000", "--depth", "1", "--exact-pi1", "--seed", "2", "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,m_k,pi_hat,pi_stderr,m_lo,m_hi"));
    assert_eq!(lines.nth(1).map(|l| l.split(',').take(2).collect::<Vec<_>>()), Some(vec!["1", "104"]));
}

#[test]
fn timings_fill_wall_ms_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = glacier(&["prop1", "--N", "100", "--C", "1", "--trials", "20", "--record-timings", "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    let row = stdout(&o).lines().nth(1).unwrap().to_string();
    assert!(!row.ends_with(','), "{row}");
}
