use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Admm,
    /// Dense simplex; only valid for `p = 1`.
    Lp,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Admm => "admm",
            Backend::Lp => "lp",
        })
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "admm" => Ok(Backend::Admm),
            "lp" => Ok(Backend::Lp),
            other => Err(Error::InvalidOptions(format!(
                "unknown backend '{other}' (expected admm or lp)"
            ))),
        }
    }
}

/// Options for [`lp_min_ginv`](super::lp_min_ginv).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub p: f64,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub max_iter: usize,
    /// ADMM penalty, relative to the problem scale: the solver uses
    /// `rho * ‖A‖_F^(2-p)`, which makes the iterates invariant under `A -> cA`.
    pub rho: f64,
    pub backend: Backend,
    /// Entries at or below `sparsity_threshold * max |column|` count as zero.
    pub sparsity_threshold: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            p: 1.0,
            eps_abs: 1e-8,
            eps_rel: 1e-6,
            max_iter: 50_000,
            rho: 1.0,
            backend: Backend::Admm,
            sparsity_threshold: 1e-6,
        }
    }
}

impl SolverOptions {
    pub fn with_p(p: f64) -> Self {
        Self {
            p,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidOptions(msg));
        if !(1.0..=2.0).contains(&self.p) {
            return bad(format!("p = {} is outside [1, 2]", self.p));
        }
        if !(self.eps_abs > 0.0 && self.eps_abs.is_finite()) {
            return bad(format!("eps_abs = {} must be positive", self.eps_abs));
        }
        if !(self.eps_rel > 0.0 && self.eps_rel.is_finite()) {
            return bad(format!("eps_rel = {} must be positive", self.eps_rel));
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1".into());
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return bad(format!("rho = {} must be positive", self.rho));
        }
        if !(self.sparsity_threshold >= 0.0 && self.sparsity_threshold.is_finite()) {
            return bad(format!(
                "sparsity_threshold = {} must be nonnegative",
                self.sparsity_threshold
            ));
        }
        if self.backend == Backend::Lp && self.p != 1.0 {
            return bad(format!("the lp backend only solves p = 1 (got p = {})", self.p));
        }
        Ok(())
    }
}
