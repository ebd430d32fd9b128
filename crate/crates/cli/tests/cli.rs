use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn ice(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ice"));
    cmd.args(args).env_remove("ICE_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// fig2c with a short GA, written into `dir`.
fn short_config(dir: &Path) -> PathBuf {
    let text = fs::read_to_string(configs().join("fig2c.toml"))
        .unwrap()
        .replace("generations = 100", "generations = 8");
    let path = dir.join("short.toml");
    fs::write(&path, text).unwrap();
    path
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn steady_prints_the_thermal_state() {
    let out = ice(&["steady", path_str(&configs().join("planck.toml"))], &[]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("null-space dimension: 1"));
    assert!(text.contains("+0.5895806374"), "{text}");
}

#[test]
fn steady_reports_ambiguity_as_numerical_failure() {
    let out = ice(
        &["steady", path_str(&configs().join("vacuum-gas.toml"))],
        &[],
    );
    assert_eq!(code(&out), 3);
    assert!(stdout(&out).contains("null-space dimension: 4"));
    assert!(stderr(&out).contains("not unique"));
}

#[test]
fn optimize_threshold_controls_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path());
    let out_dir = dir.path().join("run");
    let loose = ice(
        &[
            "optimize",
            path_str(&cfg),
            "--success-threshold",
            "10",
            "--out",
            path_str(&out_dir),
        ],
        &[],
    );
    assert_eq!(code(&loose), 0, "{}", stderr(&loose));
    for name in [
        "generations.csv",
        "distribution.csv",
        "trajectory.csv",
        "best_params.csv",
        "summary.json",
    ] {
        assert!(out_dir.join(name).exists(), "{name}");
    }
    let strict = ice(
        &[
            "optimize",
            path_str(&cfg),
            "--success-threshold",
            "1e-12",
            "--out",
            path_str(&out_dir),
        ],
        &[],
    );
    assert_eq!(code(&strict), 1);
    assert!(stderr(&strict).contains("did not reach"));
}

#[test]
fn seed_flag_and_thread_cap_keep_runs_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path());
    let run = |sub: &str, threads: &str| {
        let out_dir = dir.path().join(sub);
        let out = ice(
            &[
                "optimize",
                path_str(&cfg),
                "--seed",
                "7",
                "--success-threshold",
                "10",
                "--out",
                path_str(&out_dir),
            ],
            &[("ICE_THREADS", threads)],
        );
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        fs::read(out_dir.join("generations.csv")).unwrap()
    };
    assert_eq!(run("one", "1"), run("three", "3"));
    let summary = fs::read_to_string(dir.path().join("one/summary.json")).unwrap();
    assert!(summary.contains("\"seed\": 7"));
}

#[test]
fn bad_thread_cap_is_a_validation_error() {
    let out = ice(
        &["steady", path_str(&configs().join("planck.toml"))],
        &[("ICE_THREADS", "zero")],
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn invalid_configs_exit_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(configs().join("fig2a.toml"))
        .unwrap()
        .replace("population_size = 14", "population_size = 2");
    let path = dir.path().join("bad.toml");
    fs::write(&path, text).unwrap();
    let out = ice(&["optimize", path_str(&path)], &[]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("population_size"));

    fs::write(&path, "seed = \n").unwrap();
    let out = ice(&["steady", path_str(&path)], &[]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 1"));

    let out = ice(&["steady", path_str(&dir.path().join("missing.toml"))], &[]);
    assert_eq!(code(&out), 2);

    let out = ice(&["simulate", path_str(&configs().join("fig2a.toml"))], &[]);
    assert_eq!(code(&out), 2);
}

#[test]
fn simulate_and_sample_dist_write_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let sim_dir = dir.path().join("sim");
    let out = ice(
        &[
            "simulate",
            path_str(&configs().join("planck.toml")),
            "--out",
            path_str(&sim_dir),
        ],
        &[],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("final J vs target"));
    let traj = fs::read_to_string(sim_dir.join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,rho_11,rho_22,rho_33,rho_44,max_offdiag\n"));

    let dist_dir = dir.path().join("dist");
    let out = ice(
        &[
            "sample-dist",
            path_str(&configs().join("three-peaks.toml")),
            "--out",
            path_str(&dist_dir),
        ],
        &[],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = fs::read_to_string(dist_dir.join("distribution.csv")).unwrap();
    assert_eq!(csv.lines().count(), 402);
}
