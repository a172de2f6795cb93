use std::path::Path;
use std::process::{Command, Output};

const TOY: &str = r#"
solvers = ["basic", "adaptive"]
n_list = [1000, 10000]
seeds = { base = 0, count = 3 }

[problem]
kind = "toy"

[schedule]
preset = "theory"
"#;

fn cspd(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cspd"))
        .args(args)
        .current_dir(dir)
        .env_remove("CSPD_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn run_writes_one_row_per_evaluated_checkpoint() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "toy.toml", TOY);
    let out = cspd(&["run", &cfg, "--out", "res"], tmp.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let csv = std::fs::read_to_string(tmp.path().join("res/results.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "run_id,solver,problem,seed,n,obj_gap,abs_obj_gap,feas_x,feas_y,duality_gap,\
         max_gamma_norm,max_lambda_norm,wall_ms"
    );
    // Basic: 2 horizons x 3 seeds; adaptive: 2 checkpoints x 3 seeds.
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 12);
    assert_eq!(rows.iter().filter(|r| r[1] == "basic").count(), 6);
    assert!(rows
        .iter()
        .all(|r| r.len() == 13 && r[9].is_empty() && r[12].is_empty()));

    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("res/summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["complete"], true);
    let solvers = summary["solvers"].as_array().unwrap();
    assert_eq!(solvers.len(), 2);
    for s in solvers {
        assert_eq!(s["n"], serde_json::json!([1000, 10000]));
        assert!(s["mean_abs_obj_gap"].as_array().unwrap().len() == 2);
        assert!(s.get("obj_gap_fit").is_some());
    }
}

#[test]
fn invalid_config_exits_with_two_and_names_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "toy.toml", TOY);
    let out = cspd(&["run", &cfg, "--set", "n_list=[]"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_list"));

    let out = cspd(
        &["check", &cfg, "--set", "schedule.dual_scale=0"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("schedule.dual_scale"));

    let out = cspd(&["run", "missing.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fixed_seed_reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "toy.toml", TOY);
    for (dir, jobs) in [("a", "1"), ("b", "4")] {
        let out = cspd(
            &["run", &cfg, "--seed", "42", "--out", dir, "--jobs", jobs],
            tmp.path(),
        );
        assert!(out.status.success());
    }
    let a = std::fs::read(tmp.path().join("a/results.csv")).unwrap();
    let b = std::fs::read(tmp.path().join("b/results.csv")).unwrap();
    assert_eq!(a, b);
    assert!(String::from_utf8_lossy(&a).contains(",42,"));
}

#[test]
fn absurd_step_multipliers_fail_the_rate_check() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "qcqp.toml",
        r#"
n_list = [1000, 3000, 10000]
seeds = { base = 0, count = 3 }
[problem]
kind = "qcqp"
d = 10
m = 5
seed = 1
theta_mode = "boundary"
[schedule]
dual_scale = 1e6
primal_scale = 1e6
[check]
criteria = [5]
"#,
    );
    let out = cspd(&["check", &cfg], tmp.path());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(1), "{stdout}");
    assert!(stdout.contains("FAIL [ 5]"), "{stdout}");
}

#[test]
fn reference_prints_the_saddle_point() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "toy.toml", TOY);
    let out = cspd(&["reference", &cfg], tmp.path());
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["problem"], "toy");
    let x = json["x_star"].as_array().unwrap();
    assert!((x[0].as_f64().unwrap() - 0.4641509434).abs() < 1e-6);
}
