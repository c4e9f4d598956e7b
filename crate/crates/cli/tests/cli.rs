use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL: &str = r#"
schema_version = 1

[grid]
nx = 128
ny = 64
lx = 16.0
ly = 16.0
x_min = -8.0
y_min = -8.0

[physics]
p0 = 2.0
x0 = 3.0
t0 = 0.75
T = 0.25
x1 = 1.0

[slits]
mode = "single"
d = 2.0

[regularization]
kind = "mollified"
alpha = 0.4
eps = 0.5
packet_width_x = 1.0
packet_width_y = 3.0

[solver]
dt = 0.005
absorb_strength = 20.0
absorb_width = 12
boundary_threshold = 0.01
"#;

const DECAY: &str = r#"
schema_version = 1

[experiment]
study = "decay"
t_end = 0.05

[grid]
nx = 512
ny = 64
lx = 4.0
ly = 16.0
x_min = -2.0
y_min = -8.0

[physics]
p0 = 4.0
x0 = 1.45
t0 = 0.18
T = 0.5
x1 = 1.0

[slits]
mode = "single"
d = 1.0

[regularization]
kind = "mollified"
alpha = 0.4
schedule_k = [2, 6]
packet_width_x = 0.45
packet_width_y = 4.0

[solver]
dt = 0.001
"#;

fn slitlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slitlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run_in(config: &Path, out: &Path, study: &str, extra: &[&str]) -> Output {
    let mut args = vec![
        study,
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--threads",
        "1",
    ];
    args.extend_from_slice(extra);
    slitlab(&args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn simulate_writes_intensity_and_metadata() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL);
    let o = run_in(&cfg, &tmp.path().join("out"), "simulate", &["--check"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let dir = tmp.path().join("out/simulate");
    let csv = fs::read_to_string(dir.join("intensity.csv")).unwrap();
    assert!(csv.starts_with("# slitlab"));
    assert!(csv.contains("#   schema_version = 1"));
    let lines = data_lines(&csv);
    assert_eq!(lines[0], "y,intensity");
    assert_eq!(lines.len(), 1 + 64);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 2));
    assert!(!csv.contains('\r'));

    let meta: toml::Table = fs::read_to_string(dir.join("metadata.toml"))
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(meta["schema_version"].as_integer(), Some(1));
    assert_eq!(meta["results"]["valid"].as_bool(), Some(true));
    assert!(meta["results"]["steps"].as_integer() == Some(200));
    assert!(dir.join("traces.csv").exists());
}

#[test]
fn resolved_config_in_metadata_reproduces_the_run() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL);
    assert!(run_in(&cfg, &tmp.path().join("a"), "simulate", &[])
        .status
        .success());

    let mut meta: toml::Table = fs::read_to_string(tmp.path().join("a/simulate/metadata.toml"))
        .unwrap()
        .parse()
        .unwrap();
    meta.remove("results");
    meta.remove("run");
    let again = write_config(tmp.path(), "again.toml", &toml::to_string(&meta).unwrap());
    assert!(run_in(&again, &tmp.path().join("b"), "simulate", &[])
        .status
        .success());
    let a = fs::read_to_string(tmp.path().join("a/simulate/intensity.csv")).unwrap();
    let b = fs::read_to_string(tmp.path().join("b/simulate/intensity.csv")).unwrap();
    assert_eq!(data_lines(&a), data_lines(&b));
}

#[test]
fn reruns_are_bitwise_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL);
    for out in ["a", "b"] {
        let o = run_in(&cfg, &tmp.path().join(out), "simulate", &[]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["intensity.csv", "traces.csv", "metadata.toml"] {
        let a = fs::read(tmp.path().join("a/simulate").join(f)).unwrap();
        let b = fs::read(tmp.path().join("b/simulate").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs between runs");
    }
}

#[test]
fn existing_output_is_never_overwritten() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL);
    let out = tmp.path().join("out");
    fs::create_dir_all(out.join("simulate")).unwrap();
    fs::write(out.join("simulate/keep.txt"), "mine").unwrap();
    let o = run_in(&cfg, &out, "simulate", &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("already exists"));
    assert_eq!(
        fs::read_to_string(out.join("simulate/keep.txt")).unwrap(),
        "mine"
    );
    assert!(!out.join("simulate/intensity.csv").exists());
}

#[test]
fn unknown_keys_are_all_listed() {
    let tmp = TempDir::new().unwrap();
    let text = SMALL
        .replace("dt = 0.005", "dt = 0.005\ndtt = 0.1")
        .replace(
            "kind = \"mollified\"",
            "kind = \"mollified\"\nshedule = [0.5]",
        );
    let cfg = write_config(tmp.path(), "c.toml", &text);
    let o = run_in(&cfg, &tmp.path().join("out"), "simulate", &[]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(
        e.contains("solver.dtt") && e.contains("regularization.shedule"),
        "{e}"
    );
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn cross_field_violations_are_all_listed() {
    let tmp = TempDir::new().unwrap();
    let text = SMALL
        .replace("x1 = 1.0", "x1 = 9.0\nt1 = 0.5")
        .replace("nx = 128", "nx = 100");
    let cfg = write_config(tmp.path(), "c.toml", &text);
    let o = run_in(&cfg, &tmp.path().join("out"), "simulate", &[]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("physics.t0") && e.contains("physics.t1"), "{e}");
    assert!(e.contains("grid"), "{e}");
}

#[test]
fn short_decay_schedule_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        &DECAY.replace("schedule_k = [2, 6]", "schedule = [0.25, 0.125]"),
    );
    let o = run_in(&cfg, &tmp.path().join("out"), "decay", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("schedule"));
}

#[test]
fn under_resolved_schedule_is_a_validation_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        &DECAY.replace("schedule_k = [2, 6]", "schedule_k = [2, 9]"),
    );
    let o = run_in(&cfg, &tmp.path().join("out"), "decay", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("under-resolved"));
}

#[test]
fn missing_config_flag() {
    let o = slitlab(&["simulate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn check_mode_turns_thresholds_into_exit_code() {
    let tmp = TempDir::new().unwrap();
    let text = format!("{SMALL}\n[experiment]\ncorrelation_min = 0.9999\n");
    let cfg = write_config(tmp.path(), "c.toml", &text);
    let o = run_in(&cfg, &tmp.path().join("a"), "compare", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run_in(&cfg, &tmp.path().join("b"), "compare", &["--check"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("correlation"));
    let csv = fs::read_to_string(tmp.path().join("b/compare/compare.csv")).unwrap();
    assert_eq!(
        data_lines(&csv)[0],
        "y,simulated,analytic,scattered,filtered"
    );
}

#[test]
fn decay_study_reports_slopes() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", DECAY);
    let o = run_in(&cfg, &tmp.path().join("out"), "decay", &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let dir = tmp.path().join("out/decay");
    let csv = fs::read_to_string(dir.join("decay.csv")).unwrap();
    assert_eq!(data_lines(&csv).len(), 1 + 3 * 5);
    let meta: toml::Table = fs::read_to_string(dir.join("metadata.toml"))
        .unwrap()
        .parse()
        .unwrap();
    let slopes = meta["results"]["slopes"].as_array().unwrap();
    assert_eq!(slopes.len(), 3);
    assert!(slopes.iter().all(|s| s.as_float().unwrap().is_finite()));
    assert_eq!(
        meta["results"]["hypothesis_satisfied"].as_bool(),
        Some(true)
    );
}

#[test]
fn born_study_outputs() {
    let tmp = TempDir::new().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/born_single_slit.toml");
    let o = run_in(&cfg, &tmp.path().join("out"), "born", &["--check"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let dir = tmp.path().join("out/born");
    let csv = fs::read_to_string(dir.join("born.csv")).unwrap();
    let lines = data_lines(&csv);
    assert_eq!(lines[0], "n,residual");
    assert_eq!(lines.len(), 4);
    assert!(dir.join("timing.csv").exists());
}

#[test]
fn validate_prints_resolved_config() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL);
    let o = slitlab(&["validate", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains("t1 = 1.0"));
    assert!(out.contains("packet_center = -3.0"));
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        let doc: toml::Table = fs::read_to_string(&p).unwrap().parse().unwrap();
        let study = doc["experiment"]["study"].as_str().unwrap().to_string();
        let o = slitlab(&[
            "validate",
            "--config",
            p.to_str().unwrap(),
            "--study",
            &study,
        ]);
        assert!(o.status.success(), "{}: {}", p.display(), stderr(&o));
        n += 1;
    }
    assert!(n >= 5);
}
