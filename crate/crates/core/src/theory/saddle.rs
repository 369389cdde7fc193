//! The scalar saddle equation `D(t) - (t/2) D′(t) = δ`, the predicted
//! concentration point `α*`, and the auxiliary function `κ(α, β)`.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use super::dfunc::{theta, ChiQuadrature, DFunctional, MonteCarloD};
use super::roots::brent;
use super::special::erfc_inv;
use crate::dense::RngStream;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Limiting,
    FiniteMc,
    FiniteQuadrature,
}

/// Predicted threshold and concentration point.
///
/// In the limiting regime `t_star` is absolute for `p = 1` and normalized by
/// `√n` for `p = 2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryPrediction {
    pub p: f64,
    pub delta: f64,
    pub n: Option<usize>,
    pub regime: Regime,
    pub t_star: f64,
    #[serde(rename = "D_at_tstar")]
    pub d_at_tstar: f64,
    pub alpha_star: f64,
    pub alpha_star_sq: f64,
}

impl TheoryPrediction {
    fn new(p: f64, delta: f64, n: Option<usize>, regime: Regime, t_star: f64, d: f64) -> Result<Self> {
        if !(d < delta) {
            return Err(Error::Precision(format!(
                "D(t*) = {d} is not below delta = {delta}; the saddle solution is unreliable"
            )));
        }
        let alpha_star_sq = d / (delta * (delta - d));
        Ok(Self {
            p,
            delta,
            n,
            regime,
            t_star,
            d_at_tstar: d,
            alpha_star: alpha_star_sq.sqrt(),
            alpha_star_sq,
        })
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("delta = {delta} is outside (0, 1)")));
    }
    Ok(())
}

fn check_limit_p(p: f64) -> Result<()> {
    if p != 1.0 && p != 2.0 {
        return Err(Error::domain(format!("closed-form limits exist for p = 1 or 2, got {p}")));
    }
    Ok(())
}

/// Limiting threshold: `√2 erfc⁻¹(δ)` for `p = 1`, and `t*/√n → 1 - δ`
/// for `p = 2`.
pub fn t_star_limit(p: f64, delta: f64) -> Result<f64> {
    check_limit_p(p)?;
    check_delta(delta)?;
    if p == 1.0 {
        Ok(SQRT_2 * erfc_inv(delta)?)
    } else {
        Ok(1.0 - delta)
    }
}

/// Limiting prediction. For `p = 1`, `D = θ(t*)`; for `p = 2`, `D = δ²`,
/// which gives `α*² = 1 / (1 - δ)`.
pub fn alpha_star_limit(p: f64, delta: f64) -> Result<TheoryPrediction> {
    let t = t_star_limit(p, delta)?;
    let d = if p == 1.0 { theta(t)?.0 } else { delta * delta };
    TheoryPrediction::new(p, delta, None, Regime::Limiting, t, d)
}

/// Controls for the finite-`n` saddle solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaddleOptions {
    /// Gaussian draws behind the Monte Carlo functional.
    pub samples: usize,
    pub seed: u64,
    /// Relative tolerance on `t*` for the root finder.
    pub root_tol: f64,
    /// Largest acceptable standard error of `t*`, relative to `t*`.
    pub mc_rel_tol: f64,
}

impl Default for SaddleOptions {
    fn default() -> Self {
        Self { samples: 2000, seed: 0, root_tol: 1e-10, mc_rel_tol: 1e-2 }
    }
}

/// Solves `D(t) - (t/2) D′(t) = δ` at finite `n`: chi quadrature for
/// `p = 2`, Monte Carlo with common random numbers otherwise.
pub fn solve_t_star_finite(p: f64, delta: f64, n: usize, opts: &SaddleOptions) -> Result<TheoryPrediction> {
    if !(1.0..=2.0).contains(&p) {
        return Err(Error::domain(format!("p = {p} is outside [1, 2]")));
    }
    if n < 2 {
        return Err(Error::domain(format!("n = {n} must be at least 2")));
    }
    let nf = n as f64;
    if !(delta > 0.0 && delta < nf / (nf + 1.0)) {
        return Err(Error::domain(format!("delta = {delta} must lie in (0, n/(n+1))")));
    }
    if p == 2.0 {
        let source = ChiQuadrature::new(n)?;
        let s = solve_saddle(&source, delta, opts)?;
        TheoryPrediction::new(p, delta, Some(n), Regime::FiniteQuadrature, s.t_star, s.d_at_tstar)
    } else {
        let source = MonteCarloD::new(p, n, opts.samples, RngStream::new(opts.seed, 0))?;
        let s = solve_saddle(&source, delta, opts)?;
        TheoryPrediction::new(p, delta, Some(n), Regime::FiniteMc, s.t_star, s.d_at_tstar)
    }
}

/// Root of the saddle equation for an arbitrary `D` source.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaddleSolution {
    pub t_star: f64,
    pub d_at_tstar: f64,
    /// Standard error of `t*` from sampling noise; zero for quadrature.
    pub t_star_stderr: f64,
}

const MAX_DOUBLINGS: usize = 80;

pub fn solve_saddle(source: &dyn DFunctional, delta: f64, opts: &SaddleOptions) -> Result<SaddleSolution> {
    let g = |t: f64| -> Result<f64> {
        let e = source.eval(t)?;
        Ok(e.value - 0.5 * t * e.slope - delta)
    };
    let g0 = g(0.0)?;
    if !(g0 > 0.0) {
        return Err(Error::domain(format!(
            "saddle equation has no root: D(0) - delta = {g0:e} is not positive"
        )));
    }
    let mut hi = if source.p() == 2.0 { (source.n() as f64).sqrt() } else { 1.0 };
    let mut doublings = 0;
    while g(hi)? > 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS {
            return Err(Error::domain("could not bracket the saddle root"));
        }
    }
    let t_star = brent(g, 0.0, hi, 1e-14 * hi, opts.root_tol, 200)?;
    let at = source.eval(t_star)?;
    let mut t_star_stderr = 0.0;
    if !source.is_exact() {
        let h = 0.05 * t_star;
        let slope = (g(t_star + h)? - g(t_star - h)?) / (2.0 * h);
        t_star_stderr = at.saddle_stderr / slope.abs();
        if t_star_stderr > opts.mc_rel_tol * t_star {
            return Err(Error::Precision(format!(
                "Monte Carlo standard error of t* is {:.2e} relative to t* = {t_star:.4}, above {:.1e}; \
                 increase the sample count",
                t_star_stderr / t_star,
                opts.mc_rel_tol
            )));
        }
    }
    Ok(SaddleSolution { t_star, d_at_tstar: at.value, t_star_stderr })
}

/// `κ(α, β) = β √(δα² + 1) - α β √D(λ/β)`, with `κ(α, 0) = 0`.
pub fn kappa(alpha: f64, beta: f64, delta: f64, lambda: f64, source: &dyn DFunctional) -> Result<f64> {
    check_kappa_args(alpha, beta, lambda)?;
    if beta == 0.0 {
        return Ok(0.0);
    }
    let d = source.eval(lambda / beta)?.value;
    Ok(kappa_with(alpha, beta, delta, d))
}

fn check_kappa_args(alpha: f64, beta: f64, lambda: f64) -> Result<()> {
    if !(alpha >= 0.0) {
        return Err(Error::domain(format!("alpha = {alpha} must be nonnegative")));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::domain(format!("beta = {beta} is outside [0, 1]")));
    }
    if !(lambda > 0.0) {
        return Err(Error::domain(format!("lambda = {lambda} must be positive")));
    }
    Ok(())
}

fn kappa_with(alpha: f64, beta: f64, delta: f64, d: f64) -> f64 {
    beta * (delta * alpha * alpha + 1.0).sqrt() - alpha * beta * d.sqrt()
}

/// Grid estimate of the saddle point of `κ`.
///
/// `κ` is convex in `α` and concave in `β`, so the saddle is
/// `(argmin_α max_β κ, argmax_β min_α κ)`. Each coordinate is read from its
/// own outer problem: near the saddle `κ` is almost linear in `β`, and the
/// `β` maximizer at a grid `α` half a cell off `α*` can sit far from `β*`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaddleGrid {
    pub alpha: f64,
    pub beta: f64,
    /// `min_α max_β κ` on the grid.
    pub value: f64,
    pub alpha_step: f64,
    pub beta_step: f64,
}

/// Searches `α` on `n_alpha` uniform points of `[0, alpha_max]` and `β` on
/// `n_beta` uniform points of `(0, 1]`, with `D(λ/β)` evaluated once per `β`.
pub fn saddle_grid(
    delta: f64,
    lambda: f64,
    alpha_max: f64,
    n_alpha: usize,
    n_beta: usize,
    source: &dyn DFunctional,
) -> Result<SaddleGrid> {
    if n_alpha < 2 || n_beta < 1 {
        return Err(Error::domain("saddle grid needs at least 2 alpha and 1 beta points"));
    }
    check_kappa_args(alpha_max, 1.0, lambda)?;
    let beta_step = 1.0 / n_beta as f64;
    let alpha_step = alpha_max / (n_alpha - 1) as f64;
    let betas: Vec<f64> = (1..=n_beta).map(|j| j as f64 * beta_step).collect();
    let alphas: Vec<f64> = (0..n_alpha).map(|i| i as f64 * alpha_step).collect();
    let ds = betas
        .iter()
        .map(|b| source.eval(lambda / b).map(|e| e.value))
        .collect::<Result<Vec<f64>>>()?;
    let table: Vec<Vec<f64>> = alphas
        .iter()
        .map(|&a| betas.iter().zip(&ds).map(|(&b, &d)| kappa_with(a, b, delta, d)).collect())
        .collect();

    let (ia, value) = table
        .iter()
        .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let ib = (0..n_beta)
        .map(|j| table.iter().map(|row| row[j]).fold(f64::INFINITY, f64::min))
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (j, v)| if v > acc.1 { (j, v) } else { acc })
        .0;
    Ok(SaddleGrid { alpha: alphas[ia], beta: betas[ib], value, alpha_step, beta_step })
}
