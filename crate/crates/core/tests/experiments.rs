use spinv_core::experiments::*;
use spinv_core::{mpp, EnsembleKind, Error};

mod common;

const SEED: u64 = 2026;

fn gaussian(n: usize, delta: f64, p: f64, trials: usize) -> ConcentrationConfig {
    ConcentrationConfig::new(n, delta, p, trials, EnsembleKind::Gaussian, SEED)
}

fn without_timing(run: &ConcentrationRun) -> Vec<ExperimentRecord> {
    run.records.iter().cloned().map(|r| ExperimentRecord { wall_ms: 0.0, ..r }).collect()
}

#[test]
fn m_follows_delta() {
    let cfg = gaussian(200, 0.5, 2.0, 1);
    assert_eq!(cfg.m(), 101);
    assert_eq!(cfg.delta_effective(), 0.5);
    assert_eq!(gaussian(30, 0.3, 2.0, 1).m(), 10);
}

#[test]
fn replay_is_byte_identical() {
    let cfg = gaussian(40, 0.5, 1.0, 4);
    let a = run_concentration(&cfg).unwrap();
    let b = run_concentration(&cfg).unwrap();
    assert_eq!(without_timing(&a), without_timing(&b));
    assert_eq!(a.report, b.report);
    assert_eq!(records_csv(&a.records, false).unwrap(), records_csv(&b.records, false).unwrap());
    let other = run_concentration(&ConcentrationConfig { seed: SEED + 1, ..cfg }).unwrap();
    assert_ne!(a.report.summary, other.report.summary);
}

#[test]
fn csv_header_names_every_field() {
    let run = run_concentration(&gaussian(20, 0.5, 2.0, 2)).unwrap();
    let timed = records_csv(&run.records, true).unwrap();
    assert_eq!(
        timed.lines().next().unwrap(),
        "seed,trial,n,m,delta_nominal,p,ensemble,normalized_frob,nnz_total,wall_ms"
    );
    assert_eq!(timed.lines().count(), 3);
    let plain = records_csv(&run.records, false).unwrap();
    assert!(!plain.lines().next().unwrap().contains("wall_ms"));
    assert!(plain.lines().nth(1).unwrap().starts_with("2026,0,20,11,0.5,2.0,gaussian,"));
}

#[test]
fn pool_size_does_not_change_results() {
    let cfg = gaussian(50, 0.4, 1.0, 6);
    let run_in = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_concentration(&cfg).unwrap())
    };
    let seq = run_in(1);
    let par = run_in(4);
    assert_eq!(without_timing(&seq), without_timing(&par));
    assert!((seq.report.summary.mean - par.report.summary.mean).abs() <= 1e-12);
    assert!((seq.report.summary.sd - par.report.summary.sd).abs() <= 1e-12);
}

#[test]
fn summary_matches_records() {
    let run = run_concentration(&gaussian(30, 0.5, 2.0, 9)).unwrap();
    let vals: Vec<f64> = run.records.iter().map(|r| r.normalized_frob).collect();
    let mean = vals.iter().sum::<f64>() / 9.0;
    assert!((run.report.summary.mean - mean).abs() < 1e-12);
    assert_eq!(run.report.summary.count, 9);
    assert!(vals.iter().all(|v| *v > 0.0));
    assert_eq!(run.report.theory_alpha_star_sq, Some(2.0));
    assert_eq!(run.records.iter().map(|r| r.trial).collect::<Vec<_>>(), (0..9).collect::<Vec<_>>());
}

#[test]
fn invalid_configs_are_rejected() {
    assert!(run_concentration(&gaussian(100, 0.5, 1.0, 0)).is_err());
    assert!(run_concentration(&gaussian(100, 0.0, 1.0, 1)).is_err());
    assert!(run_concentration(&gaussian(100, 1.0, 1.0, 1)).is_err());
    // round(0.995 * 100) + 1 = 101 > n.
    assert!(run_concentration(&gaussian(100, 0.995, 1.0, 1)).is_err());
    let mut cfg = gaussian(100, 0.5, 1.0, 1);
    cfg.solver.p = 2.0;
    assert!(run_concentration(&cfg).is_err());
}

#[test]
fn solver_errors_carry_the_trial() {
    let mut cfg = gaussian(30, 0.5, 1.0, 3);
    cfg.solver.max_iter = 1;
    match run_concentration(&cfg) {
        Err(Error::Trial { trial, source }) => {
            assert_eq!(trial, 0);
            assert!(matches!(*source, Error::Convergence { .. }));
        }
        other => panic!("expected a trial error, got {other:?}"),
    }
}

#[test]
fn spinv_dominates_mpp_and_is_m_squared_sparse() {
    let cfg = gaussian(60, 0.5, 1.0, 8);
    let run = run_concentration(&cfg).unwrap();
    let m = cfg.m();
    for r in &run.records {
        let a = trial_matrix(&cfg, r.trial).unwrap();
        let mpp_frob = (cfg.n as f64 / m as f64) * mpp(&a).unwrap().frob_norm_sq();
        assert!(r.normalized_frob >= mpp_frob * (1.0 - 1e-9), "trial {}", r.trial);
        assert!(r.nnz_total <= m * m, "trial {}: nnz {}", r.trial, r.nnz_total);
    }
}

#[test]
fn mpp_mean_near_limit() {
    let run = run_concentration(&gaussian(200, 0.5, 2.0, 20)).unwrap();
    let mean = run.report.summary.mean;
    assert!((mean / 2.0 - 1.0).abs() < 0.05, "mean {mean}");
}

#[test]
fn spinv_mean_near_limit() {
    let run = run_concentration(&gaussian(200, 0.5, 1.0, 20)).unwrap();
    let mean = run.report.summary.mean;
    assert!((mean / common::alpha_sq_p1(0.5) - 1.0).abs() < 0.07, "mean {mean}");
}

#[test]
fn spread_shrinks_with_n() {
    for p in [1.0, 2.0] {
        let small = run_concentration(&gaussian(100, 0.5, p, 20)).unwrap().report.summary.sd;
        let large = run_concentration(&gaussian(400, 0.5, p, 20)).unwrap().report.summary.sd;
        assert!(large < small, "p = {p}: sd {large} at n = 400 vs {small} at n = 100");
    }
}

#[test]
fn baseline_medians_exceed_spinv() {
    let cfg = BaselineConfig::new(20, 30, 5, 100, SEED);
    let report = baseline_comparison(&cfg).unwrap();
    assert_eq!(report.rows.len(), 5);
    assert!((report.theory_alpha_star_sq - common::alpha_sq_p1(19.0 / 30.0)).abs() < 1e-9);
    for row in &report.rows {
        assert!(row.median_exceeds_spinv(), "{row:?}");
        assert!(row.baseline_min <= row.baseline_q1 && row.baseline_q3 <= row.baseline_max);
    }
    assert!(report.rows.iter().any(|r| r.max_over_median > 2.0));
    // At n = 30 single realizations scatter widely around the limit: check
    // one realization and the average of five against a loose band.
    let rel = |v: f64| (v / report.theory_alpha_star_sq - 1.0).abs();
    assert!(rel(report.rows[0].spinv_normalized_frob) < 0.4, "{:?}", report.rows[0]);
    let mean = report.rows.iter().map(|r| r.spinv_normalized_frob).sum::<f64>() / 5.0;
    assert!(rel(mean) < 0.4, "mean {mean}");
    assert_eq!(report, baseline_comparison(&cfg).unwrap());
}

#[test]
fn baseline_rejects_square_or_tall() {
    assert!(baseline_comparison(&BaselineConfig::new(30, 30, 1, 1, 0)).is_err());
    assert!(baseline_comparison(&BaselineConfig::new(5, 30, 0, 1, 0)).is_err());
}

#[test]
fn gauss_column_matches_table() {
    assert!((gauss_ratio(0.5).unwrap() - common::alpha_sq_p1(0.5) / 2.0).abs() < 1e-9);
    assert!((gauss_ratio(0.5).unwrap() - 1.49).abs() <= 0.005);
    assert!((gauss_ratio(0.2).unwrap() - 2.59).abs() <= 0.005);
}

#[test]
fn tomo_table_on_a_small_panel() {
    let mut cfg = TomoConfig::new(vec![0.5, 0.8], 2, SEED);
    cfg.panel = 6;
    let report = tomo_ratio_experiment(&cfg).unwrap();
    assert_eq!(report.rows.len(), 2);
    assert_eq!(report.geometry.len(), 2);
    for (row, spec) in report.rows.iter().zip(&report.geometry) {
        assert_eq!(row.pixels, 36);
        assert_eq!(row.rays, spec.n_rows());
        // The sparse pseudoinverse can never beat the Frobenius-minimal one.
        assert!(row.tomo_ratio_mean >= 1.0 - 1e-9, "{row:?}");
        assert_eq!(row.gauss_ratio, gauss_ratio(row.delta).unwrap());
    }
    assert_eq!(report, tomo_ratio_experiment(&cfg).unwrap());
    assert!(tomo_ratio_experiment(&TomoConfig::new(vec![1.0], 1, 0)).is_err());
}

#[test]
fn ensemble_sweep_covers_the_grid() {
    let cfg = EnsembleConfig { n: 40, deltas: vec![0.5], trials: 3, seed: SEED };
    let report = ensemble_sweep(&cfg).unwrap();
    assert_eq!(report.rows.len(), 4 * 2);
    for kind in EnsembleKind::ALL {
        assert!(report.rows.iter().any(|r| r.ensemble == kind && r.p == 1.0));
    }
    for row in &report.rows {
        assert_eq!(row.flagged, row.p == 1.0 && row.rel_deviation.abs() > FLAG_DEVIATION);
    }
    let direct = run_concentration(&ConcentrationConfig::new(40, 0.5, 2.0, 3, EnsembleKind::Uniform, SEED)).unwrap();
    let row = report.rows.iter().find(|r| r.ensemble == EnsembleKind::Uniform && r.p == 2.0).unwrap();
    assert_eq!(row.mean, direct.report.summary.mean);
    assert_eq!(report, ensemble_sweep(&cfg).unwrap());
}

#[test]
fn gaussian_mpp_means_across_delta() {
    for delta in [0.3, 0.5, 0.7] {
        let run = run_concentration(&gaussian(200, delta, 2.0, 25)).unwrap();
        let limit = 1.0 / (1.0 - delta);
        let mean = run.report.summary.mean;
        assert!((mean / limit - 1.0).abs() < 0.05, "delta {delta}: mean {mean} vs {limit}");
    }
}
