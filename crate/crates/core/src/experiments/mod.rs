//! Monte Carlo harness: concentration runs, the random-submatrix baseline,
//! the Radon tomography table and the ensemble sweep.
//!
//! Every experiment is a pure function of its config. Trials run on the
//! current rayon pool and are reduced in trial order.

mod baseline;
mod concentration;
mod ensembles;
pub mod output;
mod radon;
mod summary;
mod tomo;

pub use baseline::{baseline_comparison, BaselineConfig, BaselineReport, BaselineRow, SELECTION_STREAM_BASE};
pub use concentration::{
    records_csv, run_concentration, trial_matrix, ConcentrationConfig, ConcentrationReport, ConcentrationRun,
    ExperimentRecord,
};
pub use ensembles::{ensemble_sweep, EnsembleConfig, EnsembleReport, EnsembleRow, FLAG_DEVIATION};
pub use radon::{radon_matrix, RadonSpec, RADON_RETRIES};
pub use summary::{pairwise_sum, quantile_sorted, Summary};
pub use tomo::{gauss_ratio, tomo_ratio, tomo_ratio_experiment, TomoConfig, TomoReport, TomoRow, DEFAULT_PANEL};
