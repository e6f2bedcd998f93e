use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn tieflex(args: &[&str], out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tieflex"));
    cmd.args(args).env_remove("TIEFLEX_OUT_DIR");
    if let Some(dir) = out {
        cmd.env("TIEFLEX_OUT_DIR", dir);
    }
    cmd.output().unwrap()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn validate_reports_the_case() {
    let case = fixture("rts96_2area.json");
    let o = tieflex(&["validate", "--case", case.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("buses            48"));
    assert!(text.contains("tie-lines        3"));
    assert!(text.contains("schedule feasible (n) yes"));
}

#[test]
fn usage_and_input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(tieflex(&["build", "--bogus"], None).status.code(), Some(2));
    let missing = dir.path().join("nope.json");
    let o = tieflex(&["validate", "--case", missing.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"name\": 3}").unwrap();
    assert_eq!(tieflex(&["validate", "--case", bad.to_str().unwrap()], None).status.code(), Some(2));
    let case = fixture("hexagon_toy.json");
    let o = tieflex(&["validate", "--case", case.to_str().unwrap(), "--scale", "0"], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let case = fixture("hexagon_toy.json");
    let o = tieflex(&["build", "--case", case.to_str().unwrap(), "--security", "n"], Some(dir.path()));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let names: Vec<String> = files(dir.path()).into_iter().map(|(n, _)| n).collect();
    assert_eq!(names, ["external_active_n.json", "flexibility_set_active_n.json"]);
    let doc: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("external_active_n.json")).unwrap()).unwrap();
    assert_eq!(doc["meta"]["command"], "build");
    assert_eq!(doc["meta"]["case_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn flag_overrides_environment() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    let case = fixture("hexagon_toy.json");
    let o = tieflex(
        &["plotdata", "--case", case.to_str().unwrap(), "--out", flag_dir.path().to_str().unwrap()],
        Some(env_dir.path()),
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(files(env_dir.path()).is_empty());
    let names: Vec<String> = files(flag_dir.path()).into_iter().map(|(n, _)| n).collect();
    assert!(names.iter().all(|n| n.starts_with("pair_") && n.ends_with(".csv")));
    assert!(!names.is_empty());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let case = fixture("rts96_2area.json");
    let case = case.to_str().unwrap();
    let runs: Vec<_> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            for args in [
                vec!["metrics", "--case", case],
                vec!["atc", "--case", case, "--reserves", "full"],
                vec!["maxdev", "--case", case, "--reserve-pct", "0.05"],
            ] {
                let o = tieflex(&args, Some(dir.path()));
                assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
            }
            files(dir.path())
        })
        .collect();
    assert_eq!(runs[0].len(), 5);
    assert_eq!(runs[0], runs[1]);
}
