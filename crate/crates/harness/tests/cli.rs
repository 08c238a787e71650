use std::fs;
use std::path::Path;
use std::process::Command;

fn clqg(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_clqg")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into(), String::from_utf8_lossy(&out.stderr).into())
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.cfg");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const HAUSDORFF: &str = "version = 1
experiment = hausdorff-fixture
N = 64
level_min = 2
level_max = 6
cantor_depth = 4
points = 10
";

#[test]
fn successful_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), HAUSDORFF);
    let out = dir.path().join("out");
    let (code, stdout, _) = clqg(&["hausdorff-fixture", "--config", &cfg, "--seed", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.contains("hausdorff-fixture"));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 3);
    assert!(fs::read_to_string(out.join("rows.csv")).unwrap().starts_with("fixture,estimate,reference\n"));
}

#[test]
fn replicas_override_reaches_the_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "version = 1\nexperiment = motoo\nhorizons = 20, 30\n");
    let out = dir.path().join("o");
    let (code, _, _) = clqg(&["motoo", "--config", &cfg, "--replicas", "25", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["replicas"], 25);
    assert_eq!(summary["results"]["report"]["n_paths"], 25);
}

#[test]
fn config_problems_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "version = 1\nexperiment = spine\nbogus = 2\n");
    let (code, _, err) = clqg(&["spine", "--config", &cfg]);
    assert_eq!(code, 1);
    assert!(err.contains("unknown key `bogus`"), "{err}");

    let cfg = write_config(dir.path(), HAUSDORFF);
    let (code, _, err) = clqg(&["spine", "--config", &cfg]);
    assert_eq!(code, 1);
    assert!(err.contains("not `spine`"), "{err}");

    let (code, _, _) = clqg(&["spine", "--config", "/nonexistent/file.cfg"]);
    assert_eq!(code, 1);
    let (code, _, _) = clqg(&["spine"]);
    assert_eq!(code, 1);
    let (code, _, _) = clqg(&["spine", "--config", &cfg, "--replicas", "0"]);
    assert_eq!(code, 1);
}

#[test]
fn model_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    // the L-shape is not a rectangle, so the sine-basis spine operator refuses it
    let cfg = write_config(
        dir.path(),
        "version = 1\nexperiment = spine\nN = 64\ndomain = union 0 0 1 0.5; 0 0.5 0.5 0.5\n",
    );
    let out = dir.path().join("o");
    let (code, _, err) = clqg(&["spine", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 2, "{err}");
    assert!(err.starts_with("clqg: "));
}

#[test]
fn help_exits_cleanly() {
    let (code, stdout, _) = clqg(&["--help"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("--config"));
}
