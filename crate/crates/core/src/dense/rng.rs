use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use super::DenseMatrix;
use crate::error::{Error, Result};

/// A reproducible random stream identified by `(seed, stream_id)`.
///
/// Backed by ChaCha12, whose output is platform independent; the stream id
/// selects one of 2^64 independent keystreams under the same seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    pub fn gaussian(&self) -> GaussianStream {
        GaussianStream::new(self.rng())
    }
}

/// Standard normal variates by the Box–Muller transform.
pub struct GaussianStream {
    rng: ChaCha12Rng,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn new(rng: ChaCha12Rng) -> Self {
        Self { rng, spare: None }
    }

    pub fn next(&mut self) -> f64 {
        if let Some(v) = self.spare.take() {
            return v;
        }
        // u1 in (0, 1] keeps the logarithm finite.
        let u1 = 1.0 - self.rng.gen::<f64>();
        let u2: f64 = self.rng.gen();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }

    pub fn fill(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.next();
        }
    }
}

/// Zero-mean, unit-variance entry laws.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleKind {
    Gaussian,
    Rademacher,
    /// Uniform on [-√3, √3].
    Uniform,
    /// Laplace with scale 1/√2.
    Laplace,
}

impl EnsembleKind {
    pub const ALL: [EnsembleKind; 4] = [
        EnsembleKind::Gaussian,
        EnsembleKind::Rademacher,
        EnsembleKind::Uniform,
        EnsembleKind::Laplace,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            EnsembleKind::Gaussian => "gaussian",
            EnsembleKind::Rademacher => "rademacher",
            EnsembleKind::Uniform => "uniform",
            EnsembleKind::Laplace => "laplace",
        }
    }
}

impl fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnsembleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "gauss" | "normal" => Ok(EnsembleKind::Gaussian),
            "rademacher" => Ok(EnsembleKind::Rademacher),
            "uniform" => Ok(EnsembleKind::Uniform),
            "laplace" => Ok(EnsembleKind::Laplace),
            other => Err(Error::domain(format!(
                "unknown ensemble '{other}' (expected gaussian, rademacher, uniform or laplace)"
            ))),
        }
    }
}

/// Samples an `m x n` matrix with iid entries from `kind`, filled row by row.
pub fn sample_matrix(kind: EnsembleKind, m: usize, n: usize, stream: RngStream) -> Result<DenseMatrix> {
    if m == 0 || n == 0 {
        return Err(Error::dim(format!("cannot sample a {m}x{n} matrix")));
    }
    let len = m * n;
    let data: Vec<f64> = match kind {
        EnsembleKind::Gaussian => {
            let mut g = stream.gaussian();
            (0..len).map(|_| g.next()).collect()
        }
        EnsembleKind::Rademacher => {
            let mut rng = stream.rng();
            (0..len)
                .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
                .collect()
        }
        EnsembleKind::Uniform => {
            let mut rng = stream.rng();
            let half = 3f64.sqrt();
            (0..len).map(|_| (2.0 * rng.gen::<f64>() - 1.0) * half).collect()
        }
        EnsembleKind::Laplace => {
            let mut rng = stream.rng();
            let scale = std::f64::consts::FRAC_1_SQRT_2;
            (0..len)
                .map(|_| {
                    // Inverse CDF; u in (-1/2, 1/2].
                    let u = 0.5 - rng.gen::<f64>();
                    let mag = -scale * (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln();
                    mag.copysign(u)
                })
                .collect()
        }
    };
    DenseMatrix::new(m, n, data)
}
