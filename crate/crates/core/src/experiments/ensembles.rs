use serde::{Deserialize, Serialize};

use super::concentration::{run_concentration, ConcentrationConfig};
use crate::dense::EnsembleKind;
use crate::error::{Error, Result};

/// Relative deviation from the Gaussian limit above which a p = 1 mean is
/// flagged.
pub const FLAG_DEVIATION: f64 = 0.10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n: usize,
    pub deltas: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.deltas.is_empty() {
            return Err(Error::domain("at least one delta is required"));
        }
        for &d in &self.deltas {
            ConcentrationConfig::new(self.n, d, 1.0, self.trials, EnsembleKind::Gaussian, self.seed).validate()?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRow {
    pub ensemble: EnsembleKind,
    pub delta: f64,
    pub p: f64,
    pub mean: f64,
    pub sd: f64,
    /// Limiting Gaussian `α*²`.
    pub theory: f64,
    /// `(mean - theory) / theory`
    pub rel_deviation: f64,
    /// Set for p = 1 rows deviating more than [`FLAG_DEVIATION`].
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub config: EnsembleConfig,
    pub rows: Vec<EnsembleRow>,
}

/// Concentration runs for every ensemble, δ and p ∈ {1, 2}, each with the
/// same seed so the ensembles share stream ids.
pub fn ensemble_sweep(cfg: &EnsembleConfig) -> Result<EnsembleReport> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for kind in EnsembleKind::ALL {
        for &delta in &cfg.deltas {
            for p in [1.0, 2.0] {
                let run = run_concentration(&ConcentrationConfig::new(cfg.n, delta, p, cfg.trials, kind, cfg.seed))?;
                let theory = run.report.theory_alpha_star_sq.expect("closed form exists for p = 1, 2");
                let mean = run.report.summary.mean;
                let rel_deviation = (mean - theory) / theory;
                rows.push(EnsembleRow {
                    ensemble: kind,
                    delta,
                    p,
                    mean,
                    sd: run.report.summary.sd,
                    theory,
                    rel_deviation,
                    flagged: p == 1.0 && rel_deviation.abs() > FLAG_DEVIATION,
                });
            }
        }
    }
    Ok(EnsembleReport { config: cfg.clone(), rows })
}
