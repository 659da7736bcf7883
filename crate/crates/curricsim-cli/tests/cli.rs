//! End-to-end tests of the command-line interface: artifacts, exit codes,
//! determinism, and the documented output schemas.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_curricsim"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn small_config(rounds: u64, seed: u64) -> String {
    format!(
        r#"{{
            "tasks": [
                {{"id": 0, "prerequisites": [], "group": "a"}},
                {{"id": 1, "prerequisites": [0], "group": "a"}},
                {{"id": 2, "prerequisites": [1], "group": "b"}}
            ],
            "treatment": {{"sampler": "lp_bidirectional", "bonus_mode": "dynamic", "bonus_coefficient": 0.5}},
            "params": {{"ema_time_scale": 50.0, "learning_rate": 0.1}},
            "rounds": {rounds},
            "seed": {seed}
        }}"#
    )
}

fn assert_exit(output: &Output, code: i32) {
    assert_eq!(
        output.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

#[test]
fn run_writes_three_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "demo.json", &small_config(50, 7));
    let out = bin()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("runs"))
        .output()
        .unwrap();
    assert_exit(&out, 0);
    let run_dir = dir.path().join("runs/demo");
    for file in ["manifest.json", "series.csv", "summary.csv"] {
        assert!(run_dir.join(file).exists(), "{file} missing");
    }
    let series = std::fs::read_to_string(run_dir.join("series.csv")).unwrap();
    assert!(series.starts_with(
        "round,task_id,skill,p_true,p_fast,p_slow,lp_bi,lp_uni,pi,in_exploration_set\n"
    ));
    let summary = std::fs::read_to_string(run_dir.join("summary.csv")).unwrap();
    assert!(summary.starts_with("round,discovered_count\n"));
}

#[test]
fn run_missing_sampler_exits_2_naming_field() {
    let dir = tempfile::tempdir().unwrap();
    let body = small_config(10, 1).replace(r#""sampler": "lp_bidirectional", "#, "");
    let config = write_config(dir.path(), "broken.json", &body);
    let out = bin()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("runs"))
        .output()
        .unwrap();
    assert_exit(&out, 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("sampler"), "diagnostic names the field: {stderr}");
}

#[test]
fn run_same_seed_twice_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "det.json", &small_config(300, 11));
    for name in ["a", "b"] {
        let out = bin()
            .args(["run", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(dir.path().join("runs"))
            .args(["--name", name])
            .output()
            .unwrap();
        assert_exit(&out, 0);
    }
    let a = std::fs::read(dir.path().join("runs/a/series.csv")).unwrap();
    let b = std::fs::read(dir.path().join("runs/b/series.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn run_rerun_from_manifest_reproduces_series() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "orig.json", &small_config(200, 3));
    let out = bin()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("runs"))
        .output()
        .unwrap();
    assert_exit(&out, 0);
    let out = bin()
        .args(["run", "--config"])
        .arg(dir.path().join("runs/orig/manifest.json"))
        .arg("--out")
        .arg(dir.path().join("runs"))
        .args(["--name", "replay"])
        .output()
        .unwrap();
    assert_exit(&out, 0);
    let a = std::fs::read(dir.path().join("runs/orig/series.csv")).unwrap();
    let b = std::fs::read(dir.path().join("runs/replay/series.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn run_unwritable_out_dir_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "demo.json", &small_config(10, 1));
    let blocked = dir.path().join("blocked");
    std::fs::write(&blocked, "a file, not a directory").unwrap();
    let out = bin()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&blocked)
        .output()
        .unwrap();
    assert_exit(&out, 3);
}

#[test]
fn compare_reports_and_rejects_mismatched_graphs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "world.json", &small_config(100, 5));
    for (name, seed) in [("one", "5"), ("two", "6")] {
        let out = bin()
            .args(["run", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(dir.path().join("runs"))
            .args(["--name", name, "--seed", seed])
            .output()
            .unwrap();
        assert_exit(&out, 0);
    }
    let out = bin()
        .arg("compare")
        .arg(dir.path().join("runs/one"))
        .arg(dir.path().join("runs/two"))
        .arg("--out")
        .arg(dir.path().join("cmp"))
        .output()
        .unwrap();
    assert_exit(&out, 0);
    let compare = std::fs::read_to_string(dir.path().join("cmp/compare.csv")).unwrap();
    assert!(compare.starts_with("round,one,two\n"));
    assert!(dir.path().join("cmp/final_success.csv").exists());
    assert!(dir.path().join("cmp/sampling_one.csv").exists());
    assert!(dir.path().join("cmp/sampling_two.csv").exists());
    assert!(dir.path().join("cmp/report.txt").exists());

    // a run over a different graph is rejected with exit 4
    let other = small_config(100, 5).replace(
        r#"{"id": 2, "prerequisites": [1], "group": "b"}"#,
        r#"{"id": 2, "prerequisites": [], "group": "b"}"#,
    );
    let other = write_config(dir.path(), "other.json", &other);
    let out = bin()
        .args(["run", "--config"])
        .arg(&other)
        .arg("--out")
        .arg(dir.path().join("runs"))
        .args(["--name", "three"])
        .output()
        .unwrap();
    assert_exit(&out, 0);
    let out = bin()
        .arg("compare")
        .arg(dir.path().join("runs/one"))
        .arg(dir.path().join("runs/three"))
        .arg("--out")
        .arg(dir.path().join("cmp2"))
        .output()
        .unwrap();
    assert_exit(&out, 4);
}

#[test]
fn compare_orders_treatments_on_reference_world() {
    let dir = tempfile::tempdir().unwrap();
    let reference = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/reference40.json");
    let treatments = [
        "uniform-off",
        "uniform-fixed",
        "uniform-dynamic",
        "lp-bidirectional-dynamic",
        "lp-unidirectional-dynamic",
    ];
    for name in treatments {
        let out = bin()
            .args(["run", "--config"])
            .arg(&reference)
            .arg("--out")
            .arg(dir.path().join("runs"))
            .args(["--treatment", name, "--seed", "7"])
            .output()
            .unwrap();
        assert_exit(&out, 0);
    }
    let out = bin()
        .arg("compare")
        .args(treatments.map(|t| dir.path().join("runs").join(t)))
        .arg("--out")
        .arg(dir.path().join("cmp"))
        .output()
        .unwrap();
    assert_exit(&out, 0);
    let report = std::fs::read_to_string(dir.path().join("cmp/report.txt")).unwrap();
    let first = report
        .lines()
        .find(|l| l.starts_with("  "))
        .expect("report lists finals");
    assert!(
        first.trim_start().starts_with("lp-bidirectional-dynamic"),
        "best treatment leads the report: {report}"
    );
}

#[test]
fn dtopt_writes_study_and_agrees_with_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "dtopt",
            "--trials",
            "2000",
            "--grid",
            "1:5",
            "--seed",
            "9",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_exit(&out, 0);
    let study = std::fs::read_to_string(dir.path().join("dt_study.csv")).unwrap();
    assert!(study.starts_with("delta_t,analytic_err2,empirical_err2,empirical_stderr\n"));
    assert_eq!(study.lines().count(), 7); // header + 1*5+1 grid points
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("dt_summary.json")).unwrap())
            .unwrap();
    let closed = summary["delta_t_opt_closed_form"].as_f64().unwrap();
    let numeric = summary["delta_t_opt_numeric"].as_f64().unwrap();
    assert!((closed - numeric).abs() <= 1e-6 * closed);
}

#[test]
fn dtopt_linear_curve_has_no_optimum() {
    let out = bin()
        .args(["dtopt", "--curve", "linear", "--closed-form"])
        .output()
        .unwrap();
    assert_exit(&out, 5);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("if and only if"),
        "diagnostic cites the existence condition: {stderr}"
    );
}

#[test]
fn dtopt_single_trial_warns_about_standard_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["dtopt", "--trials", "1", "--grid", "1:2", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_exit(&out, 0);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("standard error"), "stderr: {stderr}");
}

#[test]
fn sweep_is_thread_count_invariant_and_ordered() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "world.json", &small_config(150, 0));
    for (out_name, jobs) in [("s1", "1"), ("s4", "4")] {
        let out = bin()
            .args(["sweep", "--config"])
            .arg(&config)
            .args([
                "--seeds",
                "1,2",
                "--treatments",
                "uniform-dynamic,lp-bidirectional-dynamic",
                "--jobs",
                jobs,
                "--out",
            ])
            .arg(dir.path().join(out_name))
            .output()
            .unwrap();
        assert_exit(&out, 0);
    }
    let a = std::fs::read_to_string(dir.path().join("s1/sweep_summary.csv")).unwrap();
    let b = std::fs::read_to_string(dir.path().join("s4/sweep_summary.csv")).unwrap();
    assert_eq!(a, b, "summary must not depend on the worker count");
    let names: Vec<&str> = a.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(
        names,
        vec![
            "uniform-dynamic-seed1",
            "uniform-dynamic-seed2",
            "lp-bidirectional-dynamic-seed1",
            "lp-bidirectional-dynamic-seed2"
        ],
        "jobs are reported in fixed (treatment, seed) order"
    );
    for name in names {
        let a = std::fs::read(dir.path().join("s1").join(name).join("series.csv")).unwrap();
        let b = std::fs::read(dir.path().join("s4").join(name).join("series.csv")).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn out_root_env_var_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "env.json", &small_config(20, 2));
    let out = bin()
        .args(["run", "--config"])
        .arg(&config)
        .env("CURRICSIM_OUT", dir.path())
        .output()
        .unwrap();
    assert_exit(&out, 0);
    assert!(dir.path().join("runs/env/manifest.json").exists());
}
