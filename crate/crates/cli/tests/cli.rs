//! End-to-end tests of the `spincorr` binary: exit codes, artifact
//! layout, determinism and the optical-depth sweep.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn spincorr(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spincorr"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

/// Small, fast configuration used by most tests.
const SMALL_CONFIG: &str = r#"
n_s = 48
n_a = 10
j = 1.0
d = inf
target = "exponential"
xi = 4.0
c_max = 0.95
witness_n = 16
witness_dr_max = 8
phi_grid = 32
"#;

fn write_small_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, SMALL_CONFIG).unwrap();
    path
}

#[test]
fn small_run_produces_all_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_small_config(tmp.path());
    let out = spincorr(
        &["--config", config.to_str().unwrap(), "--out", "artifacts"],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let dir = tmp.path().join("artifacts");
    for name in [
        "correlation.csv",
        "spectrum.csv",
        "witness.csv",
        "witness_min.csv",
        "fits.json",
        "trace.json",
    ] {
        assert!(dir.join(name).exists(), "missing {name}");
    }
    let correlation = fs::read_to_string(dir.join("correlation.csv")).unwrap();
    let mut lines = correlation.lines();
    assert_eq!(lines.next().unwrap(), "# spincorr run artifact");
    assert!(lines.next().unwrap().starts_with("# config_hash: "));
    assert_eq!(lines.next().unwrap(), "delta_r,C,abs_C_minus_Cinf");
    // dr = 0 .. n_s/2 inclusive.
    assert_eq!(correlation.lines().count(), 3 + 25);

    let fits: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("fits.json")).unwrap()).unwrap();
    assert_eq!(fits["ensemble"]["n_s"], 48);
    assert_eq!(fits["ensemble"]["d"], "inf");
    assert_eq!(fits["pulses"], fits["feedback_events"]);
    let xi = fits["fit"]["parameter"].as_f64().unwrap();
    assert!(xi > 2.0 && xi < 6.0, "xi = {xi}");
}

#[test]
fn identical_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_small_config(tmp.path());
    for out_dir in ["first", "second"] {
        let out = spincorr(
            &["--config", config.to_str().unwrap(), "--out", out_dir],
            tmp.path(),
        );
        assert!(out.status.success());
    }
    for name in [
        "correlation.csv",
        "spectrum.csv",
        "witness.csv",
        "witness_min.csv",
        "trace.json",
    ] {
        let a = fs::read(tmp.path().join("first").join(name)).unwrap();
        let b = fs::read(tmp.path().join("second").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
    }
    // fits.json differs only in wall time; compare with it masked.
    let mask = |path: &Path| -> serde_json::Value {
        let mut v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
        v["wall_time_ms"] = serde_json::Value::Null;
        v
    };
    assert_eq!(
        mask(&tmp.path().join("first/fits.json")),
        mask(&tmp.path().join("second/fits.json"))
    );
}

#[test]
fn missing_config_is_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = spincorr(&["--config", "nowhere.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.toml"));
}

#[test]
fn unknown_preset_is_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = spincorr(&["--preset", "paper-z"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tabulated_target_with_gap_is_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_small_config(tmp.path());
    // Rows for 1..=24 except 13.
    let mut table = String::from("# dr value\n0 1.0\n");
    for dr in 1..=24usize {
        if dr != 13 {
            table.push_str(&format!("{dr}, {}\n", (-(dr as f64) / 4.0).exp()));
        }
    }
    let target = tmp.path().join("target.tsv");
    fs::write(&target, table).unwrap();
    let out = spincorr(
        &[
            "--config",
            config.to_str().unwrap(),
            "--target-file",
            target.to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("13"));
}

#[test]
fn tabulated_target_runs_when_complete() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_small_config(tmp.path());
    let mut table = String::from("0 1.0\n");
    for dr in 1..=24usize {
        table.push_str(&format!("{dr} {}\n", (-(dr as f64) / 4.0).exp()));
    }
    let target = tmp.path().join("target.tsv");
    fs::write(&target, table).unwrap();
    let out = spincorr(
        &[
            "--config",
            config.to_str().unwrap(),
            "--target-file",
            target.to_str().unwrap(),
            "--out",
            "tab",
        ],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(tmp.path().join("tab/fits.json").exists());
}

#[test]
fn unphysical_depth_is_exit_three() {
    // d = 1 demands a spontaneous-emission probability above 1/2 for the
    // configured coupling budget: infeasible, not a config error.
    let tmp = tempfile::tempdir().unwrap();
    let config = write_small_config(tmp.path());
    let out = spincorr(
        &["--config", config.to_str().unwrap(), "--d", "1"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("spontaneous-emission"));
}

#[test]
fn finite_depth_override_shrinks_correlations() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_small_config(tmp.path());
    for (d, dir) in [("inf", "deep"), ("33", "shallow")] {
        let out = spincorr(
            &["--config", config.to_str().unwrap(), "--d", d, "--out", dir],
            tmp.path(),
        );
        assert!(out.status.success());
    }
    let read_c = |dir: &str| -> Vec<f64> {
        fs::read_to_string(tmp.path().join(dir).join("correlation.csv"))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#') && !l.starts_with("delta_r"))
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect()
    };
    let deep = read_c("deep");
    let shallow = read_c("shallow");
    for dr in 1..=10 {
        assert!(shallow[dr].abs() <= deep[dr].abs() + 1e-6);
    }
}

#[test]
fn sweep_merges_members_and_reports_monotonicity() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_small_config(tmp.path());
    let out = spincorr(
        &[
            "--config",
            config.to_str().unwrap(),
            "--sweep",
            "inf,99",
            "--out",
            "sweep",
        ],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let base = tmp.path().join("sweep");
    assert!(base.join("d_inf/fits.json").exists());
    assert!(base.join("d_99/fits.json").exists());
    assert!(base.join("sweep_correlation.csv").exists());
    let sweep: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(base.join("sweep.json")).unwrap()).unwrap();
    assert_eq!(sweep["monotonicity"]["pass"], true);
    assert_eq!(sweep["depths"][0], "99");
    assert_eq!(sweep["depths"][1], "inf");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("sweep monotonicity"));
}

#[test]
fn empty_sweep_is_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = spincorr(&["--sweep", " , "], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn out_dir_env_override_below_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_small_config(tmp.path());
    let out = Command::new(env!("CARGO_BIN_EXE_spincorr"))
        .args(["--config", config.to_str().unwrap()])
        .env("SPINCORR_OUT", "from_env")
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(tmp.path().join("from_env/fits.json").exists());

    let out = Command::new(env!("CARGO_BIN_EXE_spincorr"))
        .args(["--config", config.to_str().unwrap(), "--out", "from_flag"])
        .env("SPINCORR_OUT", "ignored_env")
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(tmp.path().join("from_flag/fits.json").exists());
    assert!(!tmp.path().join("ignored_env").exists());
}

#[test]
fn order_policy_flag_is_honored() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_small_config(tmp.path());
    let out = spincorr(
        &[
            "--config",
            config.to_str().unwrap(),
            "--order-policy",
            "descending-coupling",
            "--out",
            "policy",
        ],
        tmp.path(),
    );
    assert!(out.status.success());
    let fits: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(tmp.path().join("policy/fits.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(fits["order_policy"], "descending-coupling");
    let bad = spincorr(
        &[
            "--config",
            config.to_str().unwrap(),
            "--order-policy",
            "sideways",
        ],
        tmp.path(),
    );
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn paper_a_preset_reproduces_target_correlation_length() {
    let tmp = tempfile::tempdir().unwrap();
    let out = spincorr(&["--preset", "paper-a", "--out", "full"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let fits: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("full/fits.json")).unwrap())
            .unwrap();
    let xi = fits["fit"]["parameter"].as_f64().unwrap();
    assert!((4.0..=6.0).contains(&xi), "xi = {xi}");
    assert_eq!(fits["pulses"], 303);
    assert_eq!(fits["active_wavevectors"], 101);
    assert!(fits["spectrum_match"].as_f64().unwrap() >= 0.95);
}
