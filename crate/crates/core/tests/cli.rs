use bsgs::cli::RunConfig;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn examples() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/examples")
}

fn bsgs(args: &[&str], env: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bsgs"));
    cmd.args(args).env_remove("BSGS_OUT").env_remove("BSGS_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> =
        std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    names.sort();
    names
}

fn short_estimate(dir: &Path, extra: &str) -> PathBuf {
    let panel = examples().join("panel.csv").canonicalize().unwrap();
    let text = format!(
        "seed = 2\n[mcmc]\nsweeps = 500\nburn_in = 100\n[model]\np_x = 5\n[data]\npath = {:?}\ntarget = \"gdp\"\n[data.series.gdp]\nfrequency = \"quarterly\"\n{extra}",
        panel.display().to_string()
    );
    let p = dir.join("estimate.toml");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn every_example_config_parses() {
    for verb in ["simulate-grouped", "simulate-midas", "estimate", "tune", "nowcast"] {
        let cfg = RunConfig::load(&examples().join(format!("{verb}.toml"))).unwrap();
        if let Some(d) = &cfg.data {
            assert!(d.path.exists(), "{verb}: {}", d.path.display());
        }
    }
}

#[test]
fn estimate_example_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = examples().join("estimate.toml");
    let out = bsgs(&["estimate", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let names = listing(tmp.path());
    for f in ["estimate_coefficients.csv", "estimate.json", "manifest.csv"] {
        assert!(names.iter().any(|n| n == f), "{f} missing from {names:?}");
    }
    assert!(names.iter().any(|n| n.ends_with(".svg")));
    // stdout lists what was written
    let printed = String::from_utf8_lossy(&out.stdout);
    assert!(printed.lines().count() >= names.len() - 1);
}

#[test]
fn csv_only_writes_no_svg_or_json() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = short_estimate(tmp.path(), "");
    let out_dir = tmp.path().join("out");
    let out = bsgs(
        &["estimate", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--format", "csv"],
        &[],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let names = listing(&out_dir);
    assert!(names.iter().all(|n| n.ends_with(".csv")), "{names:?}");
}

#[test]
fn json_output_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = short_estimate(tmp.path(), "");
    let out_dir = tmp.path().join("out");
    let out = bsgs(
        &["estimate", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--format", "json"],
        &[],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(out_dir.join("estimate.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let again: serde_json::Value = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
    assert_eq!(v, again);
}

#[test]
fn unknown_series_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = short_estimate(tmp.path(), "[data.groups]\nreal = [\"ip\", \"bogus\"]\n");
    let out_dir = tmp.path().join("out");
    let out = bsgs(&["estimate", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()], &[]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown series `bogus`"));
    assert!(!out_dir.join("estimate.json").exists());
}

#[test]
fn env_sets_output_dir_and_flag_wins() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = short_estimate(tmp.path(), "");
    let (env_dir, flag_dir) = (tmp.path().join("env"), tmp.path().join("flag"));
    let c = cfg.to_str().unwrap();
    let out = bsgs(&["estimate", "--config", c, "--format", "csv"], &[("BSGS_OUT", &env_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(env_dir.join("manifest.csv").exists());
    let out = bsgs(
        &["estimate", "--config", c, "--format", "csv", "--out", flag_dir.to_str().unwrap()],
        &[("BSGS_OUT", &env_dir.join("unused"))],
    );
    assert!(out.status.success());
    assert!(flag_dir.join("manifest.csv").exists());
    assert!(!env_dir.join("unused").exists());
}

#[test]
fn missing_config_fails_cleanly() {
    let out = bsgs(&["tune", "--config", "/nonexistent/run.toml"], &[]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot read config /nonexistent/run.toml"));
}

#[test]
fn seed_flag_changes_draws() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = short_estimate(tmp.path(), "");
    let c = cfg.to_str().unwrap();
    let mut files = Vec::new();
    for seed in ["1", "2"] {
        let dir = tmp.path().join(seed);
        let out = bsgs(&["estimate", "--config", c, "--seed", seed, "--out", dir.to_str().unwrap(), "--format", "csv"], &[]);
        assert!(out.status.success());
        files.push(std::fs::read(dir.join("estimate_coefficients.csv")).unwrap());
    }
    assert_ne!(files[0], files[1]);
}
