use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::summary::Summary;
use crate::dense::{sample_matrix, EnsembleKind, RngStream};
use crate::error::{Error, Result};
use crate::ginv::{ginv0_random_submatrix, lp_min_ginv, SolverOptions};
use crate::theory::alpha_star_limit;

/// Stream ids at and above this value drive the column selections; those
/// below it are the matrices, one per experiment.
pub const SELECTION_STREAM_BASE: u64 = 1 << 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub m: usize,
    pub n: usize,
    pub experiments: usize,
    pub trials: usize,
    pub seed: u64,
    pub solver: SolverOptions,
}

impl BaselineConfig {
    pub fn new(m: usize, n: usize, experiments: usize, trials: usize, seed: u64) -> Self {
        Self { m, n, experiments, trials, seed, solver: SolverOptions::with_p(1.0) }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m >= 2 && self.m < self.n) {
            return Err(Error::domain(format!("need 2 <= m < n, got m = {}, n = {}", self.m, self.n)));
        }
        if self.experiments == 0 || self.trials == 0 {
            return Err(Error::domain("experiments and trials must be at least 1"));
        }
        if self.solver.p != 1.0 {
            return Err(Error::InvalidOptions("the baseline compares against p = 1".into()));
        }
        self.solver.validate()
    }
}

/// Frobenius norms of one matrix's random-submatrix inverses next to its
/// sparse pseudoinverse.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineRow {
    pub experiment: usize,
    pub spinv_frob: f64,
    /// `(n/m) ‖X‖_F²` of the sparse pseudoinverse.
    pub spinv_normalized_frob: f64,
    pub baseline_min: f64,
    pub baseline_q1: f64,
    pub baseline_median: f64,
    pub baseline_q3: f64,
    pub baseline_max: f64,
    pub max_over_median: f64,
}

impl BaselineRow {
    pub fn median_exceeds_spinv(&self) -> bool {
        self.baseline_median > self.spinv_frob
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub config: BaselineConfig,
    /// Limiting `α*²` for p = 1 at `δ = (m - 1)/n`.
    pub theory_alpha_star_sq: f64,
    pub rows: Vec<BaselineRow>,
}

fn run_experiment(cfg: &BaselineConfig, e: usize) -> Result<BaselineRow> {
    let a = sample_matrix(EnsembleKind::Gaussian, cfg.m, cfg.n, RngStream::new(cfg.seed, e as u64))?;
    let spinv = lp_min_ginv(&a, &cfg.solver)?;
    let norms = (0..cfg.trials)
        .map(|k| {
            let id = SELECTION_STREAM_BASE + (e * cfg.trials + k) as u64;
            Ok(ginv0_random_submatrix(&a, RngStream::new(cfg.seed, id))?.frob_norm())
        })
        .collect::<Result<Vec<f64>>>()?;
    let s = Summary::of(&norms)?;
    Ok(BaselineRow {
        experiment: e,
        spinv_frob: spinv.x.frob_norm(),
        spinv_normalized_frob: spinv.normalized_frob,
        baseline_min: s.min,
        baseline_q1: s.q1,
        baseline_median: s.median,
        baseline_q3: s.q3,
        baseline_max: s.max,
        max_over_median: s.max / s.median,
    })
}

/// Repeats, on independent Gaussian matrices: invert `trials` random
/// `m x m` column subsets, and compute the sparse pseudoinverse once.
pub fn baseline_comparison(cfg: &BaselineConfig) -> Result<BaselineReport> {
    cfg.validate()?;
    let rows = (0..cfg.experiments)
        .into_par_iter()
        .map(|e| run_experiment(cfg, e).map_err(|err| err.in_trial(e)))
        .collect::<Result<Vec<_>>>()?;
    let delta = (cfg.m - 1) as f64 / cfg.n as f64;
    Ok(BaselineReport {
        config: cfg.clone(),
        theory_alpha_star_sq: alpha_star_limit(1.0, delta)?.alpha_star_sq,
        rows,
    })
}
