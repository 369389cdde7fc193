use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::radon::{radon_matrix, RadonSpec};
use super::summary::Summary;
use crate::dense::{mpp, RngStream};
use crate::error::{Error, Result};
use crate::ginv::{lp_min_ginv, SolverOptions};
use crate::theory::alpha_star_limit;

pub const DEFAULT_PANEL: usize = 15;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TomoConfig {
    pub deltas: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub panel: usize,
    pub solver: SolverOptions,
}

impl TomoConfig {
    pub fn new(deltas: Vec<f64>, trials: usize, seed: u64) -> Self {
        Self { deltas, trials, seed, panel: DEFAULT_PANEL, solver: SolverOptions::with_p(1.0) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.deltas.is_empty() {
            return Err(Error::domain("at least one delta is required"));
        }
        if let Some(d) = self.deltas.iter().find(|d| !(**d > 0.0 && **d < 1.0)) {
            return Err(Error::domain(format!("delta = {d} is outside (0, 1)")));
        }
        if self.trials == 0 {
            return Err(Error::domain("trials must be at least 1"));
        }
        if self.solver.p != 1.0 {
            return Err(Error::InvalidOptions("the tomography table uses p = 1".into()));
        }
        self.solver.validate()
    }
}

/// `‖ginv₁‖_F² / ‖A⁺‖_F²` over subsampled Radon systems at one δ, beside
/// the Gaussian limit `α*₁² / α*₂²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TomoRow {
    pub delta: f64,
    pub rays: usize,
    pub pixels: usize,
    pub angles: usize,
    pub offsets: usize,
    pub tomo_ratio_mean: f64,
    pub tomo_ratio_sd: f64,
    pub gauss_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TomoReport {
    pub config: TomoConfig,
    /// The wide `pixels x rays` transpose of each forward matrix is inverted.
    pub orientation: String,
    pub geometry: Vec<RadonSpec>,
    pub rows: Vec<TomoRow>,
}

pub fn gauss_ratio(delta: f64) -> Result<f64> {
    Ok(alpha_star_limit(1.0, delta)?.alpha_star_sq / alpha_star_limit(2.0, delta)?.alpha_star_sq)
}

/// Ratio for one subsampled system; stream id = trial.
pub fn tomo_ratio(spec: &RadonSpec, seed: u64, trial: usize, solver: &SolverOptions) -> Result<f64> {
    let wide = radon_matrix(spec, RngStream::new(seed, trial as u64))?.transpose();
    let sparse = lp_min_ginv(&wide, solver)?;
    Ok(sparse.x.frob_norm_sq() / mpp(&wide)?.frob_norm_sq())
}

pub fn tomo_ratio_experiment(cfg: &TomoConfig) -> Result<TomoReport> {
    cfg.validate()?;
    let geometry = cfg
        .deltas
        .iter()
        .map(|&d| RadonSpec::new(cfg.panel, d))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..geometry.len())
        .flat_map(|i| (0..cfg.trials).map(move |t| (i, t)))
        .collect();
    let ratios = jobs
        .par_iter()
        .map(|&(i, t)| tomo_ratio(&geometry[i], cfg.seed, t, &cfg.solver).map_err(|e| e.in_trial(t)))
        .collect::<Result<Vec<f64>>>()?;
    let rows = geometry
        .iter()
        .zip(ratios.chunks(cfg.trials))
        .map(|(spec, r)| {
            let s = Summary::of(r)?;
            Ok(TomoRow {
                delta: spec.delta,
                rays: spec.n_rows(),
                pixels: spec.n_cols(),
                angles: spec.angles,
                offsets: spec.offsets,
                tomo_ratio_mean: s.mean,
                tomo_ratio_sd: s.sd,
                gauss_ratio: gauss_ratio(spec.delta)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TomoReport {
        config: cfg.clone(),
        orientation: "wide transpose, pixels x rays".into(),
        geometry,
        rows,
    })
}
