//! End-to-end runs of the `optoheat` binary at small excitation caps.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use optoheat::runner::RESULT_COLUMNS;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_optoheat"))
}

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn header(csv: &str) -> Vec<String> {
    csv.lines().next().unwrap().split(',').map(str::to_owned).collect()
}

#[test]
fn steady_writes_one_annotated_row() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("nested/steady.csv");
    let o = run(&["steady", path(&config("paper_default.json")), "--cap", "2", "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(header(&text), RESULT_COLUMNS);
    assert_eq!(text.lines().count(), 2);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[3], "full");
    assert!(row[6].parse::<f64>().unwrap() > 77.0);
}

#[test]
fn sweep_output_does_not_depend_on_thread_count() {
    let dir = TempDir::new().unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "2"] {
        let out = dir.path().join(format!("sweep_{threads}.csv"));
        let o = run(&[
            "sweep",
            path(&config("fig3_single_mode.json")),
            "--cap",
            "2",
            "--threads",
            threads,
            "--out",
            path(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs.remove(0)).unwrap();
    assert_eq!(text.lines().count(), 9);
    assert!(text.lines().skip(1).all(|l| l.starts_with("drive.Omega,") && l.contains(",meV,single-mode,")));
}

#[test]
fn psd_writes_one_column_per_mode() {
    let dir = TempDir::new().unwrap();
    let text = std::fs::read_to_string(config("fig6a_psd.json")).unwrap();
    let mut json: serde_json::Value = serde_json::from_str(&text).unwrap();
    json["cap"] = 2.into();
    json["psd"]["points"] = 5.into();
    json["output"] = path(&dir.path().join("psd.csv")).into();
    let cfg = dir.path().join("psd.json");
    std::fs::write(&cfg, json.to_string()).unwrap();
    let o = run(&["psd", path(&cfg)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("psd.csv")).unwrap();
    let cols = header(&csv);
    assert_eq!(cols[0], "omega_meV");
    assert_eq!(cols.iter().filter(|c| c.starts_with("S_")).count(), 3);
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn hybridize_prints_the_parameter_table() {
    let o = run(&["hybridize", path(&config("paper_default.json"))]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("quantity,value"));
    assert_eq!(text.lines().count(), 15);
    let theta: f64 = text.lines().nth(1).unwrap().strip_prefix("theta_rad,").unwrap().parse().unwrap();
    assert!((theta - 0.3822).abs() < 1e-3);
}

#[test]
fn malformed_config_exits_with_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"cavity": {"omega": "1.61 eV"}}"#).unwrap();
    let o = run(&["steady", path(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());

    let text = std::fs::read_to_string(config("paper_default.json")).unwrap();
    std::fs::write(&cfg, text.replace("\"77 K\"", "\"77 eV\"")).unwrap();
    assert_eq!(run(&["steady", path(&cfg)]).status.code(), Some(2));

    assert_eq!(run(&["steady", path(&dir.path().join("missing.json"))]).status.code(), Some(2));
}

#[test]
fn steady_rejects_sweep_configs() {
    assert_eq!(run(&["steady", path(&config("fig3_full.json")), "--cap", "1"]).status.code(), Some(2));
}

#[test]
fn quick_validation_passes() {
    let o = run(&["validate", "--quick"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().all(|l| l.starts_with("PASS")));
}
