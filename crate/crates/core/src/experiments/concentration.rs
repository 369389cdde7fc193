use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::output::csv_string;
use super::summary::Summary;
use crate::dense::{sample_matrix, EnsembleKind, RngStream};
use crate::error::{Error, Result};
use crate::ginv::{lp_min_ginv, SolverOptions};
use crate::theory::alpha_star_limit;

/// One trial of a concentration run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub seed: u64,
    pub trial: usize,
    pub n: usize,
    pub m: usize,
    pub delta_nominal: f64,
    pub p: f64,
    pub ensemble: EnsembleKind,
    /// `(n/m) ‖X‖_F²`
    pub normalized_frob: f64,
    pub nnz_total: usize,
    pub wall_ms: f64,
}

/// The timing-free projection of [`ExperimentRecord`], so repeated runs
/// produce identical bytes.
#[derive(Serialize)]
struct DeterministicRecord<'a> {
    seed: u64,
    trial: usize,
    n: usize,
    m: usize,
    delta_nominal: f64,
    p: f64,
    ensemble: &'a EnsembleKind,
    normalized_frob: f64,
    nnz_total: usize,
}

/// CSV of `records`; the `wall_ms` column is written only with `timing`.
pub fn records_csv(records: &[ExperimentRecord], timing: bool) -> Result<String> {
    if timing {
        return csv_string(records);
    }
    let rows: Vec<DeterministicRecord> = records
        .iter()
        .map(|r| DeterministicRecord {
            seed: r.seed,
            trial: r.trial,
            n: r.n,
            m: r.m,
            delta_nominal: r.delta_nominal,
            p: r.p,
            ensemble: &r.ensemble,
            normalized_frob: r.normalized_frob,
            nnz_total: r.nnz_total,
        })
        .collect();
    csv_string(&rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationConfig {
    pub n: usize,
    pub delta: f64,
    pub p: f64,
    pub trials: usize,
    pub ensemble: EnsembleKind,
    pub seed: u64,
    pub solver: SolverOptions,
}

impl ConcentrationConfig {
    pub fn new(n: usize, delta: f64, p: f64, trials: usize, ensemble: EnsembleKind, seed: u64) -> Self {
        Self { n, delta, p, trials, ensemble, seed, solver: SolverOptions::with_p(p) }
    }

    /// `round(δ n) + 1`, so that `(m - 1)/n = δ` whenever `δ n` is integral.
    pub fn m(&self) -> usize {
        (self.delta * self.n as f64).round() as usize + 1
    }

    pub fn delta_effective(&self) -> f64 {
        (self.m() - 1) as f64 / self.n as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::domain("trials must be at least 1"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::domain(format!("delta = {} is outside (0, 1)", self.delta)));
        }
        let m = self.m();
        if m < 2 || m > self.n {
            return Err(Error::domain(format!(
                "m = round(delta n) + 1 = {m} must satisfy 1 < m <= n = {}",
                self.n
            )));
        }
        if self.solver.p != self.p {
            return Err(Error::InvalidOptions(format!(
                "solver p = {} differs from experiment p = {}",
                self.solver.p, self.p
            )));
        }
        self.solver.validate()
    }
}

/// Everything about a run except the per-trial records.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub config: ConcentrationConfig,
    pub m: usize,
    /// `(m - 1)/n`, the finite-size aspect ratio.
    pub delta_effective: f64,
    pub summary: Summary,
    /// Limiting `α*²` at the nominal δ, when a closed form exists.
    pub theory_alpha_star_sq: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationRun {
    pub report: ConcentrationReport,
    pub records: Vec<ExperimentRecord>,
}

/// The matrix of one trial: stream id = trial index.
pub fn trial_matrix(cfg: &ConcentrationConfig, trial: usize) -> Result<crate::dense::DenseMatrix> {
    sample_matrix(cfg.ensemble, cfg.m(), cfg.n, RngStream::new(cfg.seed, trial as u64))
}

fn run_trial(cfg: &ConcentrationConfig, trial: usize) -> Result<ExperimentRecord> {
    let start = Instant::now();
    let a = trial_matrix(cfg, trial)?;
    let res = lp_min_ginv(&a, &cfg.solver)?;
    Ok(ExperimentRecord {
        seed: cfg.seed,
        trial,
        n: cfg.n,
        m: cfg.m(),
        delta_nominal: cfg.delta,
        p: cfg.p,
        ensemble: cfg.ensemble,
        normalized_frob: res.normalized_frob,
        nnz_total: res.nnz_total(),
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Runs the trials in parallel on the current rayon pool. Records come back
/// in trial order, so the output does not depend on the pool size.
pub fn run_concentration(cfg: &ConcentrationConfig) -> Result<ConcentrationRun> {
    cfg.validate()?;
    let records: Vec<ExperimentRecord> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, t).map_err(|e| e.in_trial(t)))
        .collect::<Result<_>>()?;
    let values: Vec<f64> = records.iter().map(|r| r.normalized_frob).collect();
    let theory_alpha_star_sq = if cfg.p == 1.0 || cfg.p == 2.0 {
        Some(alpha_star_limit(cfg.p, cfg.delta)?.alpha_star_sq)
    } else {
        None
    };
    Ok(ConcentrationRun {
        report: ConcentrationReport {
            config: cfg.clone(),
            m: cfg.m(),
            delta_effective: cfg.delta_effective(),
            summary: Summary::of(&values)?,
            theory_alpha_star_sq,
        },
        records,
    })
}
