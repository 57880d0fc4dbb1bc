use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::thread::sleep;
use std::time::{Duration, Instant};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_riemflow"));
    c.env_remove("RIEMFLOW_OUTPUT_DIR").env_remove("RUST_LOG");
    c
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = r#"
name = "small"
log_level = "error"

[manifold]
kind = "euclidean"
extents = [[-1.0, 1.0], [-1.0, 1.0]]

[grid]
resolution = [48, 48]

[initial]
kind = "circle"
center = [0.0, 0.0]
radius = 0.5

[operator]
kind = "mce"

[solver]
t_end_seconds = 0.02
snapshot_every = 0.005
"#;

#[test]
fn list_prints_registry() {
    let o = bin().arg("list").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.lines().count() >= 8);
    assert!(out.contains("euclid_shrinking_circle"));
}

#[test]
fn shipped_configs_validate() {
    for entry in fs::read_dir(configs()).unwrap() {
        let p = entry.unwrap().path();
        let o = bin().arg("validate").arg(&p).output().unwrap();
        assert_eq!(o.status.code(), Some(0), "{}: {}", p.display(), stderr(&o));
    }
}

#[test]
fn run_shrinking_circle_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .arg("run")
        .arg(configs().join("euclid_shrinking_circle.cfg"))
        .arg("--output-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    for rel in ["report.json", "checkpoint.rfld", "fields/snap_00000.rfld", "contours/contour_00010.json", "series/radius.csv"]
    {
        assert!(dir.path().join(rel).exists(), "{rel}");
    }
    assert!(stdout(&o).contains("PASS extinction_time"));
}

#[test]
fn broken_config_names_bad_key() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("broken.cfg");
    fs::write(&p, SMALL.replace("kind = \"mce\"", "kind = \"mean_curvature\"")).unwrap();
    for sub in ["run", "validate"] {
        let o = bin().arg(sub).arg(&p).output().unwrap();
        assert_eq!(o.status.code(), Some(1));
        let err = stderr(&o);
        assert!(err.contains("`operator.kind`") && err.contains("mean_curvature"), "{err}");
        assert!(err.contains("broken.cfg:18:8"), "{err}");
    }
}

#[test]
fn failing_check_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("wrong.cfg");
    let text = format!("{SMALL}\n[[checks]]\ncheck = \"extinction_time\"\nexpected = 0.5\nrel_tol = 0.01\n");
    fs::write(&p, text).unwrap();
    let o = bin().arg("run").arg(&p).arg("--output-dir").arg(dir.path().join("out")).output().unwrap();
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stdout(&o).contains("FAIL extinction_time"));
}

#[test]
fn environment_overrides_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("small.cfg");
    fs::write(&p, format!("output_dir = \"{}\"\n{SMALL}", dir.path().join("from_config").display())).unwrap();
    let o = bin().arg("run").arg(&p).env("RIEMFLOW_OUTPUT_DIR", dir.path().join("from_env")).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("from_env/report.json").exists());
    assert!(!dir.path().join("from_config").exists());
}

#[test]
fn resume_without_checkpoint_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("small.cfg");
    fs::write(&p, SMALL).unwrap();
    let o = bin().arg("run").arg(&p).arg("--resume").arg("--output-dir").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn interrupt_then_resume_matches_uninterrupted_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("long.cfg");
    let long = SMALL
        .replace("resolution = [48, 48]", "resolution = [128, 128]")
        .replace("t_end_seconds = 0.02", "t_end_seconds = 0.1");
    fs::write(&cfg, long).unwrap();

    let reference = dir.path().join("reference");
    let o = bin().arg("run").arg(&cfg).arg("--output-dir").arg(&reference).output().unwrap();
    assert_eq!(o.status.code(), Some(0));

    let resumed = dir.path().join("resumed");
    let mut child = bin().arg("run").arg(&cfg).arg("--output-dir").arg(&resumed).spawn().unwrap();
    let start = Instant::now();
    while !resumed.join("fields/snap_00001.rfld").exists() && start.elapsed() < Duration::from_secs(30) {
        sleep(Duration::from_millis(5));
    }
    Command::new("kill").arg("-INT").arg(child.id().to_string()).status().unwrap();
    let status = child.wait().unwrap();
    assert_eq!(status.code(), Some(1), "run finished before the interrupt landed");
    assert!(resumed.join("checkpoint.rfld").exists());

    let o = bin().arg("run").arg(&cfg).arg("--resume").arg("--output-dir").arg(&resumed).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let names: Vec<_> = fs::read_dir(reference.join("fields")).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names.len(), 21);
    for n in names {
        let a = fs::read(reference.join("fields").join(&n)).unwrap();
        let b = fs::read(resumed.join("fields").join(&n)).unwrap();
        assert!(a == b, "{n:?} differs");
    }
}

#[test]
fn props_with_seed_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("props.json");
    let o = bin().args(["props", "--seed", "11", "--trials", "200", "--transport-trials", "40", "--output"]).arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["format"], "riemflow-props");
    assert_eq!(v["seed"], 11);
    assert!(v["passed"].as_bool().unwrap());
}
