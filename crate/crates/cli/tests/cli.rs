use std::path::Path;
use std::process::{Command, Output};

use oldroyd_cli::experiments::{linear_verify, LinearRegime};
use oldroyd_cli::RunConfig;
use oldroyd_core::initial::Recipe;
use serde_json::{json, Value};

fn oldroyd(args: &[&str], env_root: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_oldroyd"));
    cmd.args(args).env_remove("OLDROYD_OUTPUT_ROOT");
    if let Some(root) = env_root {
        cmd.env("OLDROYD_OUTPUT_ROOT", root);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, v: &Value) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, serde_json::to_vec(v).unwrap()).unwrap();
    p.to_str().unwrap().to_string()
}

fn small() -> Value {
    json!({"grid": {"d": 2, "n": 16}, "stepper": {"t_end": 0.2, "dt": 0.01}, "diagnostics": {"interval": 0.05}})
}

#[test]
fn check_config_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = oldroyd(&["check-config", "--config", &write_config(dir.path(), &small())], None);
    assert_eq!(ok.status.code(), Some(0));
    let printed: Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(printed["grid"]["n"], 16);

    let bad = oldroyd(&["check-config", "--config", &write_config(dir.path(), &json!({"model": {"eta": 0.0}}))], None);
    assert_eq!(bad.status.code(), Some(2));
    let typo = oldroyd(&["check-config", "--override", "model.nuu=1"], None);
    assert_eq!(typo.status.code(), Some(2));
    let warn = oldroyd(&["check-config", "--override", "diagnostics.s=1.9"], None);
    assert_eq!(warn.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&warn.stderr).contains("warning"));
}

#[test]
fn zero_horizon_run_writes_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let cfg = write_config(dir.path(), &small());
    let o =
        oldroyd(&["run", "--config", &cfg, "--override", "stepper.t_end=0", "--output", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with(
        "t,u_hs,tau_hs,u_l2,tau_l2,diss_tau,diss_u,visc_u,cross,E,L,q_work,identity_residual,min_eig_sigma"
    ));
    let summary: Value = serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["steps"], 0);
    assert_eq!(summary["status"], "completed");
}

#[test]
fn identical_runs_give_identical_bytes_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = small();
    v["output"] = json!({"formats": ["csv", "json", "snapshot"], "snapshot_interval": 0.1});
    let cfg = write_config(dir.path(), &v);
    let mut csvs = Vec::new();
    for tag in ["a", "b"] {
        let out = dir.path().join(tag);
        let o = oldroyd(&["run", "--config", &cfg, "--output", out.to_str().unwrap()], None);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        csvs.push(std::fs::read(out.join("diagnostics.csv")).unwrap());
        let snaps = std::fs::read_dir(out.join("snapshots")).unwrap().count();
        assert_eq!(snaps, 3);
        let bytes = std::fs::read(out.join("final.obsf")).unwrap();
        assert_eq!(&bytes[..4], b"OBSF");
        assert_eq!(bytes.len(), 32 + 8 * 5 * 16 * 16);
    }
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn output_root_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small());
    let o = oldroyd(&["dispersion", "--config", &cfg, "--k-max", "5"], Some(dir.path()));
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("dispersion/dispersion.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "k,re_lambda_plus,im_lambda_plus,re_lambda_minus,im_lambda_minus,regime");
    assert_eq!(lines.len(), 6);
    assert!(lines[1].ends_with("overdamped") || lines[1].ends_with("underdamped"));
}

#[test]
fn blow_up_exits_with_marker_and_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let v = json!({
        "grid": {"d": 2, "n": 16},
        "model": {"eta": 1e-3, "beta": 0.5},
        "stepper": {"t_end": 50.0, "dt": 0.5},
        "diagnostics": {"interval": 0.5},
        "initial": {"epsilon": 1e4, "band": 5.0}
    });
    let out = dir.path().join("boom");
    let o = oldroyd(&["run", "--config", &write_config(dir.path(), &v), "--output", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: Value = serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "blow-up");
    assert!(summary["blow_up"]["t"].as_f64().unwrap() > 0.0);
    assert!(std::fs::read_to_string(out.join("diagnostics.csv")).unwrap().lines().count() >= 2);
}

#[test]
fn sweep_rejects_bad_lists() {
    for list in ["1e-2,1e-3,0", "1e-2,1e-3", "1e-3,1e-2,1e-4", "1e-2,5e-3,1e-3"] {
        let o = oldroyd(&["sweep-nu", "--nu", list], None);
        assert_eq!(o.status.code(), Some(2), "{list}");
    }
}

#[test]
fn sweep_writes_results() {
    let dir = tempfile::tempdir().unwrap();
    let v = json!({"grid": {"d": 2, "n": 16}, "stepper": {"t_end": 1.0}, "diagnostics": {"interval": 0.1}});
    let out = dir.path().join("sweep");
    let o = oldroyd(
        &[
            "sweep-nu",
            "--config",
            &write_config(dir.path(), &v),
            "--nu",
            "1e-2,1e-3,1e-4",
            "--threads",
            "2",
            "--output",
            out.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s: Value = serde_json::from_slice(&std::fs::read(out.join("sweep_summary.json")).unwrap()).unwrap();
    let slope = s["slope"].as_f64().unwrap();
    assert!((0.9..=1.1).contains(&slope), "{slope}");
    assert!(s["distances"].as_array().unwrap().iter().all(|d| d.as_f64().unwrap() > 0.0));
    assert!(s["uniform_bound"].as_bool().unwrap());
    assert_eq!(std::fs::read_to_string(out.join("sweep.csv")).unwrap().lines().count(), 4);
}

fn linear_cfg(v: Value) -> RunConfig {
    oldroyd_cli::validate_config(&v).unwrap().config
}

#[test]
fn linear_verify_cli_and_preconditions() {
    let dir = tempfile::tempdir().unwrap();
    let v = json!({
        "grid": {"d": 2, "n": 16},
        "model": {"toggles": {"advection_u": false, "advection_tau": false, "q_term": false}},
        "stepper": {"t_end": 2.0, "dt": 1e-3},
        "initial": {"type": "single-mode", "epsilon": 1.0}
    });
    let out = dir.path().join("lin");
    let o =
        oldroyd(&["linear-verify", "--config", &write_config(dir.path(), &v), "--output", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_slice(&std::fs::read(out.join("linear_report.json")).unwrap()).unwrap();
    assert_eq!(r["regime"], "toggles-off");
    assert!(r["max_deviation"].as_f64().unwrap() < 1e-10);

    let coarse = oldroyd(
        &[
            "linear-verify",
            "--config",
            &write_config(dir.path(), &v),
            "--override",
            "stepper.dt=0.2",
            "--output",
            out.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(coarse.status.code(), Some(4));

    let full = json!({"grid": {"d": 2, "n": 16}, "initial": {"epsilon": 1e-2}});
    assert!(linear_verify(&linear_cfg(full)).is_err());
    let viscous = json!({"grid": {"d": 2, "n": 16}, "model": {"nu": 1e-3}, "initial": {"epsilon": 1e-7}});
    assert!(linear_verify(&linear_cfg(viscous)).is_err());
}

#[test]
fn zero_data_gives_zero_deviation() {
    let mut c = RunConfig::default();
    c.grid.n = 16;
    c.initial.epsilon = 0.0;
    c.initial.recipe = Recipe::SingleMode;
    c.stepper.t_end = 0.5;
    let r = linear_verify(&c).unwrap();
    assert_eq!(r.regime, LinearRegime::TinyAmplitude);
    assert_eq!(r.max_deviation, 0.0);
    assert!(r.modes.is_empty());
}

#[test]
fn tiny_amplitude_contamination_is_quadratic() {
    let dev = |eps: f64| {
        let mut c = RunConfig::default();
        c.grid.n = 16;
        c.initial.epsilon = eps;
        c.initial.band = 2.0;
        c.stepper.t_end = 1.0;
        c.stepper.dt = oldroyd_core::integrator::TimeStep::Fixed(1e-2);
        linear_verify(&c).unwrap()
    };
    let (a, b) = (dev(1e-6), dev(5e-7));
    let ratio = a.max_deviation / b.max_deviation;
    assert!((3.6..=4.4).contains(&ratio), "ratio {ratio}");
    assert!(a.deviation_over_epsilon.unwrap() < 1e-3);
    let q = a.deviation_over_epsilon_sq.unwrap() / b.deviation_over_epsilon_sq.unwrap();
    assert!((q - 1.0).abs() < 0.1);
}
