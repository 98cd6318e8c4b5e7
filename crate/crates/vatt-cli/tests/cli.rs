//! End-to-end checks of the `vatt` binary surface: subcommands, flags, exit
//! codes and emitted files.

use std::path::{Path, PathBuf};
use std::process::Command;

fn vatt() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vatt"))
}

fn temp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("vatt_cli_it").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

/// A short scenario config so the CLI tests stay fast.
fn short_config(dir: &Path) -> PathBuf {
    let out = vatt()
        .args(["preset", "paper_fig123"])
        .output()
        .expect("preset runs");
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let text = text.replacen("duration = 40.0", "duration = 2.0", 1);
    let path = dir.join("short.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn preset_writes_parseable_config() {
    let dir = temp_dir("preset");
    let path = dir.join("cfg.toml");
    let out = vatt()
        .args(["preset", "paper_fig123", "--out"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("duration = 40.0"));
    assert!(text.contains("[gains]"));
}

#[test]
fn preset_unknown_name_fails() {
    let out = vatt().args(["preset", "nonsense"]).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("unknown preset"));
}

#[test]
fn run_emits_csv_and_plots() {
    let dir = temp_dir("run");
    let cfg = short_config(&dir);
    let out_dir = dir.join("results");
    let out = vatt()
        .args(["run"])
        .arg(&cfg)
        .args(["--out"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = out_dir.join("trace.csv");
    assert!(csv.exists());
    // 2 s at h = 0.01: header + 201 rows
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 202);
    for fig in [
        "fig1_principal_angle.svg",
        "fig2_angular_velocity_error.svg",
        "fig3_bias_error.svg",
    ] {
        assert!(out_dir.join(fig).exists(), "{fig} missing");
    }
}

#[test]
fn run_no_plots_skips_svgs() {
    let dir = temp_dir("noplots");
    let cfg = short_config(&dir);
    let out_dir = dir.join("results");
    let out = vatt()
        .args(["run"])
        .arg(&cfg)
        .args(["--out"])
        .arg(&out_dir)
        .args(["--no-plots"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(out_dir.join("trace.csv").exists());
    assert!(!out_dir.join("fig1_principal_angle.svg").exists());
}

#[test]
fn run_is_bit_deterministic() {
    let dir = temp_dir("determinism");
    let cfg = short_config(&dir);
    let bytes = |name: &str, seed: &str| {
        let out_dir = dir.join(name);
        let out = vatt()
            .args(["run"])
            .arg(&cfg)
            .args(["--out"])
            .arg(&out_dir)
            .args(["--no-plots", "--seed", seed])
            .output()
            .unwrap();
        assert!(out.status.success());
        std::fs::read(out_dir.join("trace.csv")).unwrap()
    };
    assert_eq!(
        bytes("a", "42"),
        bytes("b", "42"),
        "same seed: CSV must be bit-identical"
    );
    assert_ne!(
        bytes("c", "43"),
        bytes("a2", "42"),
        "different seed: phases differ"
    );
}

#[test]
fn zero_noise_changes_trace() {
    let dir = temp_dir("zeronoise");
    let cfg = short_config(&dir);
    let run = |extra: &[&str]| {
        let out_dir = dir.join(extra.join("_").replace('-', "x"));
        let mut cmd = vatt();
        cmd.args(["run"]).arg(&cfg).args(["--out"]).arg(&out_dir).args(["--no-plots"]);
        cmd.args(extra);
        let out = cmd.output().unwrap();
        assert!(out.status.success());
        std::fs::read(out_dir.join("trace.csv")).unwrap()
    };
    assert_ne!(run(&[]), run(&["--zero-noise"]));
}

#[test]
fn run_bad_config_reports_field_and_fails() {
    let dir = temp_dir("badcfg");
    let cfg = short_config(&dir);
    let text = std::fs::read_to_string(&cfg)
        .unwrap()
        .replacen("m = 5.0", "m = 0.01", 1);
    let bad = dir.join("bad.toml");
    std::fs::write(&bad, text).unwrap();
    let out = vatt().args(["run"]).arg(&bad).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("gains"), "stderr: {err}");
}

#[test]
fn run_missing_config_fails() {
    let out = vatt().args(["run", "/nonexistent/config.toml"]).output().unwrap();
    assert!(!out.status.success());
}
