use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn spinv(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinv"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn read_matrix(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn predict_limits() {
    let dir = TempDir::new().unwrap();
    let out = spinv(&["predict", "--p", "2", "--delta", "0.5"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v = stdout_json(&out);
    assert_eq!(v["alpha_star_sq"].as_f64().unwrap(), 2.0);
    assert_eq!(v["regime"], "limiting");
    for key in ["p", "delta", "n", "regime", "t_star", "D_at_tstar", "alpha_star", "alpha_star_sq"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    let out = spinv(&["predict", "--p", "1", "--delta", "0.5"], dir.path());
    let a = stdout_json(&out)["alpha_star_sq"].as_f64().unwrap();
    assert!((a - 2.9704).abs() < 1e-3, "{a}");
}

#[test]
fn predict_finite_regimes() {
    let dir = TempDir::new().unwrap();
    let out = spinv(&["predict", "--p", "2", "--delta", "0.5", "--n", "10000"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v = stdout_json(&out);
    assert_eq!(v["regime"], "finite_quadrature");
    assert!((v["t_star"].as_f64().unwrap() / 100.0 - 0.5).abs() < 0.01);
    let args = ["predict", "--p", "1.5", "--delta", "0.5", "--n", "200", "--samples", "400", "--seed", "3"];
    let a = spinv(&args, dir.path());
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(stdout_json(&a)["regime"], "finite_mc");
    assert_eq!(a.stdout, spinv(&args, dir.path()).stdout);
}

#[test]
fn invert_row_vector() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("A.csv"), "2,1\n").unwrap();
    let out = spinv(&["invert", "--input", "A.csv", "--p", "1", "--out", "X.csv"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let x = read_matrix(&dir.path().join("X.csv"));
    assert_eq!(x.len(), 2);
    assert!((x[0][0] - 0.5).abs() < 1e-12 && x[1][0].abs() < 1e-12);
    let meta = read_json(&dir.path().join("X.csv.json"));
    assert_eq!(meta["command"], "invert");
    assert_eq!(meta["config"]["solver"]["max_iter"], 50_000);
    assert_eq!(meta["config"]["solver"]["backend"], "admm");
}

#[test]
fn invert_then_check_round_trips() {
    let dir = TempDir::new().unwrap();
    let rows = [
        "0.3,-1.2,0.8,2.0,-0.4,1.1",
        "1.5,0.2,-0.7,0.1,0.9,-2.2",
        "-0.6,0.4,1.3,-1.0,0.5,0.7",
    ];
    std::fs::write(dir.path().join("A.csv"), rows.join("\n") + "\n").unwrap();
    for (p, backend) in [("1", "admm"), ("1", "lp"), ("1.5", "admm"), ("2", "admm")] {
        let out = spinv(
            &["invert", "--input", "A.csv", "--p", p, "--backend", backend, "--out", "X.csv"],
            dir.path(),
        );
        assert_eq!(code(&out), 0, "p {p} {backend}: {}", stderr(&out));
        let chk = spinv(&["check", "--matrix", "A.csv", "--inverse", "X.csv"], dir.path());
        assert_eq!(code(&chk), 0, "p {p} {backend}: {}", stderr(&chk));
        assert_eq!(stdout_json(&chk)["passed"], true);
    }
}

#[test]
fn check_rejects_a_wrong_inverse() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("A.csv"), "2,1\n").unwrap();
    std::fs::write(dir.path().join("X.csv"), "1\n1\n").unwrap();
    let out = spinv(&["check", "--matrix", "A.csv", "--inverse", "X.csv"], dir.path());
    assert_eq!(code(&out), 2);
    assert_eq!(stdout_json(&out)["passed"], false);
    std::fs::write(dir.path().join("X.csv"), "1,2\n").unwrap();
    let out = spinv(&["check", "--matrix", "A.csv", "--inverse", "X.csv"], dir.path());
    assert_eq!(code(&out), 2);
}

#[test]
fn usage_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    for args in [
        vec!["predict", "--p", "2", "--delta", "0.5", "--bogus"],
        vec!["predict", "--p", "2"],
        vec!["predict", "--p", "2", "--delta", "half"],
        vec!["frobnicate"],
        vec!["predict", "--p", "2", "--delta", "0.5", "--regime", "finite"],
        vec!["predict", "--p", "2", "--delta", "0.5", "--n", "100", "--regime", "limit"],
        vec!["experiment", "--n", "10", "--delta", "0.5", "--p", "1", "--trials", "1", "--ensemble", "cauchy", "--seed", "0"],
    ] {
        let out = spinv(&args, dir.path());
        assert_eq!(code(&out), 1, "{args:?}: {}", stderr(&out));
    }
    let out = spinv(&["predict", "--p", "2", "--delta", "half"], dir.path());
    assert!(stderr(&out).contains("--delta"));
    assert_eq!(code(&spinv(&["--help"], dir.path())), 0);
}

#[test]
fn domain_errors_exit_two_and_name_the_flag() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("A.csv"), "2,1\n").unwrap();
    for (args, flag) in [
        (vec!["predict", "--p", "2", "--delta", "1.5"], "--delta"),
        (vec!["predict", "--p", "3", "--delta", "0.5"], "--p"),
        (vec!["predict", "--p", "1.5", "--delta", "0.5"], "--p"),
        (vec!["invert", "--input", "A.csv", "--p", "2", "--backend", "lp"], "--backend"),
        (vec!["invert", "--input", "A.csv", "--p", "1", "--tol", "0"], "--tol"),
        (vec!["experiment", "--n", "10", "--delta", "0.5", "--p", "1", "--trials", "0", "--ensemble", "gaussian", "--seed", "0"], "--trials"),
        (vec!["tomo-table", "--deltas", "0.5,1.0", "--trials", "1", "--seed", "0"], "--deltas"),
        (vec!["baseline", "--m", "5", "--n", "5", "--experiments", "1", "--trials", "1", "--seed", "0"], "--n"),
        (vec!["--threads", "0", "predict", "--p", "2", "--delta", "0.5"], "--threads"),
    ] {
        let out = spinv(&args, dir.path());
        assert_eq!(code(&out), 2, "{args:?}");
        assert!(stderr(&out).contains(flag), "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn file_errors_name_the_path() {
    let dir = TempDir::new().unwrap();
    let out = spinv(&["invert", "--input", "missing.csv", "--p", "1"], dir.path());
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("missing.csv"));
    std::fs::write(dir.path().join("bad.csv"), "1,x\n").unwrap();
    let out = spinv(&["invert", "--input", "bad.csv", "--p", "1"], dir.path());
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("bad.csv") && stderr(&out).contains("not a number"));
    std::fs::write(dir.path().join("tall.csv"), "1\n2\n").unwrap();
    assert_eq!(code(&spinv(&["invert", "--input", "tall.csv", "--p", "1"], dir.path())), 2);
}

#[test]
fn experiment_output_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let args = |out: &'static str| {
        vec![
            "experiment", "--n", "40", "--delta", "0.5", "--p", "1", "--trials", "3", "--ensemble", "gaussian",
            "--seed", "9", "--out", out,
        ]
    };
    assert_eq!(code(&spinv(&args("a.csv"), dir.path())), 0);
    assert_eq!(code(&spinv(&args("b.csv"), dir.path())), 0);
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.csv")).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().next().unwrap(), "seed,trial,n,m,delta_nominal,p,ensemble,normalized_frob,nnz_total");
    assert_eq!(text.lines().count(), 4);
    let meta = read_json(&dir.path().join("a.csv.json"));
    assert_eq!(meta["command"], "experiment");
    assert_eq!(meta["config"]["experiment"]["solver"]["eps_rel"], 1e-6);
    assert_eq!(meta["report"]["m"], 21);
    assert_eq!(meta["report"]["summary"]["count"], 3);

    // Same argv, same bytes, including the sidecar.
    let again = spinv(&args("a.csv"), dir.path());
    assert_eq!(code(&again), 0);
    assert_eq!(read_json(&dir.path().join("a.csv.json")), meta);

    let timed = spinv(
        &["experiment", "--n", "20", "--delta", "0.5", "--p", "2", "--trials", "2", "--ensemble", "uniform", "--seed", "1", "--timing"],
        dir.path(),
    );
    assert_eq!(code(&timed), 0);
    assert!(String::from_utf8_lossy(&timed.stdout).lines().next().unwrap().ends_with(",wall_ms"));
}

#[test]
fn radon_matrix_file() {
    let dir = TempDir::new().unwrap();
    let out = spinv(&["radon", "--panel", "6", "--delta", "0.5", "--seed", "4", "--out", "R.csv"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let r = read_matrix(&dir.path().join("R.csv"));
    assert_eq!((r.len(), r[0].len()), (72, 36));
    assert!(r.iter().flatten().all(|v| *v >= 0.0));
    let meta = read_json(&dir.path().join("R.csv.json"));
    assert_eq!(meta["geometry"]["panel"], 6);
    assert_eq!(meta["geometry"]["angles"], 12);
    let first = std::fs::read(dir.path().join("R.csv")).unwrap();
    spinv(&["radon", "--panel", "6", "--delta", "0.5", "--seed", "4", "--out", "R.csv"], dir.path());
    assert_eq!(first, std::fs::read(dir.path().join("R.csv")).unwrap());
}

#[test]
fn table_subcommands() {
    let dir = TempDir::new().unwrap();
    let out = spinv(
        &["--threads", "2", "baseline", "--m", "4", "--n", "8", "--experiments", "2", "--trials", "10", "--seed", "1"],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    assert!(text.starts_with("experiment,spinv_frob,"));
    assert_eq!(text.lines().count(), 3);
    assert!(stderr(&out).contains("\"threads\": 2"));

    let out = spinv(&["tomo-table", "--deltas", "0.5,0.8", "--trials", "1", "--seed", "1", "--panel", "5"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    assert!(text.starts_with("delta,rays,pixels,angles,offsets,tomo_ratio_mean,"));
    assert_eq!(text.lines().count(), 3);

    let out = spinv(&["ensembles", "--n", "20", "--deltas", "0.5", "--trials", "2", "--seed", "1", "--out", "e.csv"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("e.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 8);
    assert!(text.contains("rademacher"));
}
