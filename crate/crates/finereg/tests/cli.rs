use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_finereg");

const DISK: &str = r#"
schema_version = 1
name = "cli-disk"

[domain]
kind = "disk"

[grid]
cells = 128

[operator.potential]
kind = "cone-power-law"
s = 1.0
vertex = [0.0, -1.0]
aperture = 0.5
height = 0.5

[[points]]
y = [0.0, -1.0]

[thresholds]
resolution_cells = 8
"#;

fn finereg(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).args(["--threads", "1"]).args(args).output().unwrap()
}

fn scenario(dir: &Path, text: &str) -> String {
    let path = dir.join("scenario.toml");
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn run_writes_all_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let s = scenario(tmp.path(), DISK);
    let out = finereg(tmp.path(), &["--out", "o", "run", &s]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["report.json", "summary.csv", "shells.csv", "samples.csv"] {
        assert!(tmp.path().join("o").join(f).is_file(), "{f}");
    }
    let summary = fs::read_to_string(tmp.path().join("o/summary.csv")).unwrap();
    assert!(summary.starts_with("point,criterion,verdict,q,value,resolved_total,unresolved,extrapolated_total,layer\n"));
    assert!(summary.lines().any(|l| l.starts_with("0,consolidated,")));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("o/report.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["scenario"], "cli-disk");
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let s = scenario(tmp.path(), DISK);
    assert!(finereg(tmp.path(), &["--out", "a", "run", &s]).status.success());
    let out = Command::new(BIN).current_dir(tmp.path()).args(["--threads", "3", "--out", "b", "run", &s]).output().unwrap();
    assert!(out.status.success());
    for f in ["report.json", "summary.csv", "shells.csv", "samples.csv"] {
        let a = fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = fs::read(tmp.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs");
    }
}

#[test]
fn malformed_potential_exits_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let s = scenario(tmp.path(), &DISK.replace("s = 1.0", "s = \"one\""));
    let out = finereg(tmp.path(), &["run", &s]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    assert!(!tmp.path().join("finereg-out").exists());
}

#[test]
fn missing_file_exits_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = finereg(tmp.path(), &["run", "nope.toml"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(finereg(tmp.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(finereg(tmp.path(), &["--threads", "0", "run", "x.toml"]).status.code(), Some(1));
    assert_eq!(finereg(tmp.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn empty_sweep_values_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let s = scenario(tmp.path(), DISK);
    let out = finereg(tmp.path(), &["sweep", &s, "--param", "s", "--values", ""]);
    assert_eq!(out.status.code(), Some(1));
    let out = finereg(tmp.path(), &["sweep", &s, "--param", "mass", "--values", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_writes_per_value_directories_and_merged_table() {
    let tmp = tempfile::tempdir().unwrap();
    let s = scenario(tmp.path(), DISK);
    let out = finereg(tmp.path(), &["--out", "o", "sweep", &s, "--param", "s", "--values", "1.0,1.5,2.0"]);
    assert!(out.status.code() == Some(0) || out.status.code() == Some(2));
    for v in ["s=1.0", "s=1.5", "s=2.0"] {
        assert!(tmp.path().join("o").join(v).join("summary.csv").is_file(), "{v}");
    }
    let mut rdr = csv::Reader::from_path(tmp.path().join("o/sweep.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(headers.iter().next(), Some("parameter"));
    let qi = headers.iter().position(|h| h == "q_integral_ky").unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    let values: Vec<&str> = rows.iter().map(|r| &r[1]).collect();
    assert_eq!(values, ["1.0", "1.5", "2.0"]);
    let q: Vec<f64> = rows.iter().map(|r| r[qi].parse().unwrap()).collect();
    assert!(q.windows(2).all(|w| w[1] > w[0]), "{q:?}");
}
