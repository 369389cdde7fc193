//! Subsampled parallel-beam Radon transform on a square pixel panel.

use std::f64::consts::PI;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::dense::{DenseMatrix, HouseholderQr, RngStream};
use crate::error::{Error, Result};

/// Row subsets drawn before a rank-deficient sample is reported.
pub const RADON_RETRIES: usize = 20;

/// Geometry of a subsampled Radon system. The forward matrix is
/// `n_rows x panel²` with `n_rows = round(panel² / delta)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadonSpec {
    pub panel: usize,
    pub delta: f64,
    /// Equispaced angles in `[0, π)`.
    pub angles: usize,
    /// Equispaced offsets per angle across the panel diagonal.
    pub offsets: usize,
}

impl RadonSpec {
    /// `2·panel` angles and offsets, with the angle count doubled until the
    /// rays that hit the panel outnumber the requested rows.
    pub fn new(panel: usize, delta: f64) -> Result<Self> {
        let mut spec = Self { panel, delta, angles: 2 * panel, offsets: 2 * panel };
        spec.validate()?;
        while spec.dictionary_size() < spec.n_rows() {
            spec.angles *= 2;
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.panel < 2 {
            return Err(Error::domain(format!("panel = {} must be at least 2", self.panel)));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::domain(format!("delta = {} is outside (0, 1]", self.delta)));
        }
        if self.angles == 0 || self.offsets == 0 {
            return Err(Error::domain("angle and offset counts must be positive"));
        }
        Ok(())
    }

    pub fn n_cols(&self) -> usize {
        self.panel * self.panel
    }

    pub fn n_rows(&self) -> usize {
        (self.n_cols() as f64 / self.delta).round() as usize
    }

    /// Number of rays in the dictionary with a nonempty intersection.
    pub fn dictionary_size(&self) -> usize {
        ray_dictionary(self).len()
    }
}

/// Pixel-intersection lengths of the ray `{c + s ν + τ d}` with
/// `d = (cos φ, sin φ)`, `ν = (-sin φ, cos φ)` and `c` the panel center.
/// Pixel `(ix, iy)` covers `[ix, ix+1] x [iy, iy+1]` and has column index
/// `iy·panel + ix`.
fn trace_ray(panel: usize, phi: f64, s: f64, out: &mut Vec<(usize, f64)>) {
    out.clear();
    let size = panel as f64;
    let c = 0.5 * size;
    let (dx, dy) = (phi.cos(), phi.sin());
    let (ox, oy) = (c - s * dy, c + s * dx);

    // Parameter interval inside the panel, per axis.
    let clip = |o: f64, d: f64| -> Option<(f64, f64)> {
        if d.abs() < 1e-15 {
            (o > 0.0 && o < size).then_some((f64::NEG_INFINITY, f64::INFINITY))
        } else {
            let (a, b) = ((0.0 - o) / d, (size - o) / d);
            Some((a.min(b), a.max(b)))
        }
    };
    let (Some((ax, bx)), Some((ay, by))) = (clip(ox, dx), clip(oy, dy)) else {
        return;
    };
    let (t0, t1) = (ax.max(ay), bx.min(by));
    if t1 - t0 <= 1e-12 {
        return;
    }

    let mut ts = vec![t0, t1];
    for (o, d) in [(ox, dx), (oy, dy)] {
        if d.abs() >= 1e-15 {
            for k in 1..panel {
                let t = (k as f64 - o) / d;
                if t > t0 && t < t1 {
                    ts.push(t);
                }
            }
        }
    }
    ts.sort_by(f64::total_cmp);
    for w in ts.windows(2) {
        let len = w[1] - w[0];
        if len <= 1e-12 {
            continue;
        }
        let mid = 0.5 * (w[0] + w[1]);
        let ix = ((ox + mid * dx).floor() as usize).min(panel - 1);
        let iy = ((oy + mid * dy).floor() as usize).min(panel - 1);
        out.push((iy * panel + ix, len));
    }
}

/// All rays of the geometry that cross the panel, as sparse rows.
fn ray_dictionary(spec: &RadonSpec) -> Vec<Vec<(usize, f64)>> {
    let diag = spec.panel as f64 * std::f64::consts::SQRT_2;
    let mut rays = Vec::with_capacity(spec.angles * spec.offsets);
    let mut buf = Vec::new();
    for a in 0..spec.angles {
        let phi = PI * a as f64 / spec.angles as f64;
        for k in 0..spec.offsets {
            let s = -0.5 * diag + diag * (k as f64 + 0.5) / spec.offsets as f64;
            trace_ray(spec.panel, phi, s, &mut buf);
            if !buf.is_empty() {
                rays.push(buf.clone());
            }
        }
    }
    rays
}

/// A tall `n_rows x panel²` forward matrix: `n_rows` rays drawn uniformly
/// without replacement from the dictionary, redrawn until the matrix has
/// full column rank.
pub fn radon_matrix(spec: &RadonSpec, stream: RngStream) -> Result<DenseMatrix> {
    spec.validate()?;
    let dict = ray_dictionary(spec);
    let (rows, cols) = (spec.n_rows(), spec.n_cols());
    if rows > dict.len() {
        return Err(Error::domain(format!(
            "{rows} rows requested but the geometry has only {} rays crossing the panel",
            dict.len()
        )));
    }
    let mut rng = stream.rng();
    for _ in 0..RADON_RETRIES {
        let mut pick = index::sample(&mut rng, dict.len(), rows).into_vec();
        pick.sort_unstable();
        let mut a = DenseMatrix::zeros(rows, cols);
        for (r, &ray) in pick.iter().enumerate() {
            let row = a.row_mut(r);
            for &(j, len) in &dict[ray] {
                row[j] += len;
            }
        }
        match HouseholderQr::of_transpose(&a.transpose()) {
            Ok(_) => return Ok(a),
            Err(Error::Rank { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Singular(format!(
        "no full-column-rank row subset found in {RADON_RETRIES} draws"
    )))
}
