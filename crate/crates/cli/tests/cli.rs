use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bogofluct(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bogofluct")).args(args).output().expect("binary runs")
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bogofluct-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn verify_algebra_passes_on_small_sizes() {
    let out = bogofluct(&["verify-algebra", "--sizes", "2x2,3x2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("master_identity"));
}

#[test]
fn free_run_writes_every_table_and_refits() {
    let dir = scratch("free");
    let cfg = configs().join("free.json");
    let out = bogofluct(&["run", arg(&cfg), "--output-dir", arg(&dir), "--single", "4"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    for f in ["config.resolved.json", "report.csv", "rates.csv", "hartree.csv", "bogoliubov.csv", "gates.csv", "single_n4.csv"] {
        assert!(dir.join(f).is_file(), "missing {f}");
    }
    let refit = bogofluct(&["rate", arg(&dir.join("report.csv"))]);
    assert_eq!(refit.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&refit.stdout).starts_with("time,"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn bad_input_exits_with_two() {
    let out = bogofluct(&["run", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(2));
}
