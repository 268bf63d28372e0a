use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const MODEL: &str = "omega_d = 0.05\ngamma2 = 0.05\nspin = \"3/2\"\n";

fn qgyro(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qgyro"))
        .args(args)
        .arg("--out")
        .arg(dir.join("out"))
        .env_remove("QGYRO_THREADS")
        .output()
        .expect("spawn qgyro")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("config.toml");
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn malformed_config_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[model]\nno_such_key = 1\n");
    let out = qgyro(&["kcurves", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));

    let cfg = write_config(dir.path(), &format!("[model]\n{MODEL}gamma_p = 0.02\ngamma1 = -1.0\n"));
    assert_eq!(qgyro(&["kcurves", "--config", &cfg], dir.path()).status.code(), Some(2));

    let missing = dir.path().join("missing.toml");
    assert_eq!(qgyro(&["kcurves", "--config", missing.to_str().unwrap()], dir.path()).status.code(), Some(2));
}

#[test]
fn solver_failure_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    // Pumping beyond gamma1 / 2 has no positive steady state.
    let cfg = write_config(
        dir.path(),
        r#"
[model]
omega_d = 0.05
gamma1 = 0.05
gamma2 = 0.05
gamma_p = 0.05
spin = "3/2"

[[shift_sweep.sweeps]]
name = "cq"
axis = "c_q"
grid = { start = 0.0, stop = 0.02, points = 3 }
"#,
    );
    let out = qgyro(&["shift-sweep", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    // Failed points are still tabulated.
    let csv = fs::read_to_string(dir.path().join("out/shift-sweep/cq.csv")).unwrap();
    assert!(csv.contains("not positive") || csv.contains("NotPositive") || csv.contains("negative"), "{csv}");
}

#[test]
fn empty_property_suite_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[properties]\ncount = 0\n");
    let out = qgyro(&["properties", "--config", &cfg, "--seed", "7", "--threads", "2"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(dir.path().join("out/properties/summary.csv")).unwrap();
    assert!(summary.contains("# seed = 7"));
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/properties/metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["threads"], 2);
    assert_eq!(meta["seed"], 7);
}

#[test]
fn kcurves_writes_csv_dialect() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[kcurves]\nc_q = [0.02]\nomega = { start = -0.1, stop = 0.1, points = 5 }\n",
    );
    let out = qgyro(&["kcurves", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let entries: Vec<_> = fs::read_dir(dir.path().join("out/kcurves")).unwrap().map(|e| e.unwrap().file_name()).collect();
    let csv_name = entries.iter().find(|n| n.to_string_lossy().ends_with(".csv")).expect("a table");
    let text = fs::read_to_string(dir.path().join("out/kcurves").join(csv_name)).unwrap();
    let mut lines = text.lines().skip_while(|l| l.starts_with('#'));
    assert_eq!(lines.next(), Some("omega,k_x,k_y,status"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "-1.0000000000000001e-1");
    assert!(text.contains("# gamma_p = 2.0000000000000000e-2"));
}

#[test]
fn thread_env_var_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[properties]\ncount = 2\n");
    let out = Command::new(env!("CARGO_BIN_EXE_qgyro"))
        .args(["properties", "--config", &cfg, "--out"])
        .arg(dir.path().join("out"))
        .env("QGYRO_THREADS", "3")
        .output()
        .unwrap();
    assert!(out.status.success());
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/properties/metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["threads"], 3);
}
