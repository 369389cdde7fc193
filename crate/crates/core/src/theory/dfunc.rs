//! The distance functional `D_p(t; n) = (1/n) (E dist(h, {‖u‖_q <= t}))²`
//! for `h ~ N(0, I_n)`, and its scalar limit `θ`.

use std::f64::consts::{FRAC_2_PI, SQRT_2};

use serde::{Deserialize, Serialize};

use super::ball::dist_dual_ball;
use super::quadrature::integrate;
use super::special::{erfc, ln_gamma};
use crate::dense::RngStream;
use crate::error::{Error, Result};

/// `θ(t) = E (|h| - t)₊²` for scalar standard normal `h`, with `θ′(t)`.
pub fn theta(t: f64) -> Result<(f64, f64)> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("theta needs t >= 0, got {t}")));
    }
    let tail = erfc(t / SQRT_2);
    let bump = FRAC_2_PI.sqrt() * (-0.5 * t * t).exp();
    let value = (t * t + 1.0) * tail - bump * t;
    let derivative = 2.0 * t * tail - 2.0 * bump;
    Ok((value, derivative))
}

/// A Monte Carlo or quadrature value of `D_p(t; n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DpEstimate {
    pub value: f64,
    /// Zero for quadrature.
    pub stderr: f64,
    pub samples: usize,
    pub t: f64,
    pub n: usize,
    pub p: f64,
}

fn check_args(p: f64, t: f64, n: usize) -> Result<()> {
    if !(1.0..=2.0).contains(&p) {
        return Err(Error::domain(format!("p = {p} is outside [1, 2]")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::domain(format!("t = {t} must be finite and nonnegative")));
    }
    if n == 0 {
        return Err(Error::domain("n must be positive"));
    }
    Ok(())
}

/// Monte Carlo estimate of `D_p(t; n)` from `samples` Gaussian vectors drawn
/// from `stream`. The standard error is carried through the square by the
/// delta method.
pub fn estimate_dp(p: f64, t: f64, n: usize, samples: usize, stream: RngStream) -> Result<DpEstimate> {
    check_args(p, t, n)?;
    if samples < 2 {
        return Err(Error::domain(format!("need at least 2 samples, got {samples}")));
    }
    let mut g = stream.gaussian();
    let mut h = vec![0.0; n];
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        g.fill(&mut h);
        let d = dist_dual_ball(&h, p, t);
        sum += d;
        sum_sq += d * d;
    }
    let s = samples as f64;
    let mean = sum / s;
    let var = ((sum_sq - s * mean * mean) / (s - 1.0)).max(0.0);
    Ok(DpEstimate {
        value: mean * mean / n as f64,
        stderr: 2.0 * mean * (var / s).sqrt() / n as f64,
        samples,
        t,
        n,
        p,
    })
}

/// Half-width of the integration window around the chi mode. The chi
/// density is below `e^-800` outside it for every `n`.
const CHI_WINDOW: f64 = 40.0;
const CHI_TOL: f64 = 1e-14;

/// `D_2(t; n)` and its derivative by quadrature against the chi(n) density:
/// `d(t) = E(‖h‖ - t)₊ / √n`, `d′(t) = -P(‖h‖ > t) / √n`, `D = d²`,
/// `D′ = 2 d d′`.
pub fn d2_quadrature(t: f64, n: usize) -> Result<(f64, f64)> {
    check_args(2.0, t, n)?;
    let (tail_mean, tail_prob) = chi_tail(t, n);
    let sn = (n as f64).sqrt();
    let d = tail_mean / sn;
    let dd = -tail_prob / sn;
    Ok((d * d, 2.0 * d * dd))
}

/// `(E(R - t)₊, P(R > t))` for `R ~ chi(n)`.
fn chi_tail(t: f64, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let log_norm = (0.5 * nf - 1.0) * 2f64.ln() + ln_gamma(0.5 * nf);
    let pdf = move |r: f64| {
        if r <= 0.0 {
            return if n == 1 { (-log_norm).exp() } else { 0.0 };
        }
        ((nf - 1.0) * r.ln() - 0.5 * r * r - log_norm).exp()
    };
    let mode = (nf - 1.0).sqrt();
    let lo = (mode - CHI_WINDOW).max(0.0).max(t);
    let hi = mode + CHI_WINDOW;
    let (mut mean, mut prob) = (0.0, 0.0);
    let mut a = lo;
    while a < hi {
        let b = (a + 1.0).min(hi);
        mean += integrate(&|r| (r - t) * pdf(r), a, b, CHI_TOL).0;
        prob += integrate(&pdf, a, b, CHI_TOL).0;
        a = b;
    }
    (mean, prob)
}

/// `D(t)` with its derivative, plus the standard error of the saddle
/// function `g(t) = D(t) - (t/2) D′(t)` when the source is random.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DEval {
    pub value: f64,
    pub slope: f64,
    pub saddle_stderr: f64,
}

/// A way of evaluating `D_p(·; n)`.
pub trait DFunctional: Sync {
    fn p(&self) -> f64;
    fn n(&self) -> usize;
    fn eval(&self, t: f64) -> Result<DEval>;
    fn is_exact(&self) -> bool;
}

/// `D_2` by chi quadrature.
#[derive(Clone, Copy, Debug)]
pub struct ChiQuadrature {
    n: usize,
}

impl ChiQuadrature {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("n must be positive"));
        }
        Ok(Self { n })
    }
}

impl DFunctional for ChiQuadrature {
    fn p(&self) -> f64 {
        2.0
    }

    fn n(&self) -> usize {
        self.n
    }

    fn eval(&self, t: f64) -> Result<DEval> {
        let (value, slope) = d2_quadrature(t, self.n)?;
        Ok(DEval { value, slope, saddle_stderr: 0.0 })
    }

    fn is_exact(&self) -> bool {
        true
    }
}

/// `D_p` over a fixed set of Gaussian draws. Every evaluation reuses the
/// same draws, so differences in `t` are free of sampling noise between
/// them; `D′` is a central difference with step `10⁻³ t`.
#[derive(Clone, Debug)]
pub struct MonteCarloD {
    p: f64,
    n: usize,
    draws: Vec<f64>,
}

/// Relative finite-difference step for `D′`.
const FD_STEP: f64 = 1e-3;

impl MonteCarloD {
    pub fn new(p: f64, n: usize, samples: usize, stream: RngStream) -> Result<Self> {
        check_args(p, 0.0, n)?;
        if samples < 2 {
            return Err(Error::domain(format!("need at least 2 samples, got {samples}")));
        }
        let mut draws = vec![0.0; n * samples];
        stream.gaussian().fill(&mut draws);
        Ok(Self { p, n, draws })
    }

    pub fn samples(&self) -> usize {
        self.draws.len() / self.n
    }

    fn dist(&self, s: usize, t: f64) -> f64 {
        dist_dual_ball(&self.draws[s * self.n..(s + 1) * self.n], self.p, t)
    }
}

impl DFunctional for MonteCarloD {
    fn p(&self) -> f64 {
        self.p
    }

    fn n(&self) -> usize {
        self.n
    }

    fn eval(&self, t: f64) -> Result<DEval> {
        check_args(self.p, t, self.n)?;
        let (lo, hi) = if t > 0.0 { (t * (1.0 - FD_STEP), t * (1.0 + FD_STEP)) } else { (0.0, 1e-6) };
        let s = self.samples();
        let (mut ma, mut mb) = (0.0, 0.0);
        let mut per_sample = Vec::with_capacity(s);
        for k in 0..s {
            let a = self.dist(k, t);
            let b = (self.dist(k, hi) - self.dist(k, lo)) / (hi - lo);
            ma += a;
            mb += b;
            per_sample.push((a, b));
        }
        let sf = s as f64;
        ma /= sf;
        mb /= sf;
        let (mut caa, mut cab, mut cbb) = (0.0, 0.0, 0.0);
        for (a, b) in &per_sample {
            caa += (a - ma) * (a - ma);
            cab += (a - ma) * (b - mb);
            cbb += (b - mb) * (b - mb);
        }
        let nf = self.n as f64;
        // g = (ma² - t ma mb) / n, linearized in the two sample means.
        let ga = (2.0 * ma - t * mb) / nf;
        let gb = -t * ma / nf;
        let var_g = (ga * ga * caa + 2.0 * ga * gb * cab + gb * gb * cbb) / (sf - 1.0) / sf;
        Ok(DEval {
            value: ma * ma / nf,
            slope: 2.0 * ma * mb / nf,
            saddle_stderr: var_g.max(0.0).sqrt(),
        })
    }

    fn is_exact(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_endpoints() {
        assert!((theta(0.0).unwrap().0 - 1.0).abs() < 1e-15);
        assert!(theta(50.0).unwrap().0 < 1e-100);
        assert!(matches!(theta(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn theta_at_one_matches_monte_carlo() {
        // E(|h| - 1)₊² from 10⁷ draws, accepted at 3 sigma.
        let mut g = RngStream::new(2024, 0).gaussian();
        let k = 10_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..k {
            let v = (g.next().abs() - 1.0).max(0.0).powi(2);
            s += v;
            s2 += v * v;
        }
        let mean = s / k as f64;
        let se = ((s2 / k as f64 - mean * mean) / k as f64).sqrt();
        let th = theta(1.0).unwrap().0;
        assert!((th - mean).abs() <= 3.0 * se, "{th} vs {mean} ± {se}");
        assert!((th - 0.150_679_566_687_541_6).abs() < 1e-14);
    }

    #[test]
    fn theta_derivative_matches_finite_differences() {
        for k in 1..100 {
            let t = 0.1 * k as f64;
            let h = 1e-5;
            let fd = (theta(t + h).unwrap().0 - theta(t - h).unwrap().0) / (2.0 * h);
            assert!((fd - theta(t).unwrap().1).abs() < 1e-6, "t = {t}");
        }
    }

    #[test]
    fn chi_density_is_normalized() {
        for n in [1, 2, 5, 200, 10_000] {
            let (mean, prob) = chi_tail(0.0, n);
            assert!((prob - 1.0).abs() < 1e-12, "n = {n}");
            let nf = n as f64;
            let want = SQRT_2 * (ln_gamma(0.5 * (nf + 1.0)) - ln_gamma(0.5 * nf)).exp();
            assert!((mean - want).abs() < 1e-10 * want, "n = {n}");
        }
    }

    #[test]
    fn d2_examples() {
        let (v, _) = d2_quadrature(0.0, 200).unwrap();
        assert!((v - 0.997_50).abs() < 5e-6, "{v}");
        assert!(d2_quadrature(10.0 * 200f64.sqrt(), 200).unwrap().0 < 1e-12);
        // chi(1) is the half-normal: d(t) = E(|h| - t)₊.
        let t = 0.7;
        let (v, _) = d2_quadrature(t, 1).unwrap();
        let e = FRAC_2_PI.sqrt() * (-0.5 * t * t).exp() - t * erfc(t / SQRT_2);
        assert!((v - e * e).abs() < 1e-12);
    }

    #[test]
    fn d2_at_zero_matches_monte_carlo() {
        let mut g = RngStream::new(7, 3).gaussian();
        let n = 200;
        let k = 50_000;
        let mut h = vec![0.0; n];
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..k {
            g.fill(&mut h);
            let r = h.iter().map(|x| x * x).sum::<f64>().sqrt();
            s += r;
            s2 += r * r;
        }
        let mean = s / k as f64;
        let se = ((s2 / k as f64 - mean * mean) / k as f64).sqrt();
        let d = (d2_quadrature(0.0, n).unwrap().0 * n as f64).sqrt();
        assert!((d - mean).abs() <= 3.0 * se);
    }

    #[test]
    fn d2_decreasing_and_convex() {
        let n = 100;
        let ts: Vec<f64> = (0..=300).map(|k| 0.05 * k as f64).collect();
        let vals: Vec<(f64, f64)> = ts.iter().map(|&t| d2_quadrature(t, n).unwrap()).collect();
        for w in vals.windows(3) {
            assert!(w[1].0 < w[0].0 || w[0].0 < 1e-300);
            assert!(w[0].0 - 2.0 * w[1].0 + w[2].0 >= -1e-8);
        }
        assert!(vals.iter().all(|v| v.1 <= 0.0));
        for (i, &t) in ts.iter().enumerate().skip(1).step_by(17) {
            let h = 1e-5;
            let fd = (d2_quadrature(t + h, n).unwrap().0 - d2_quadrature(t - h, n).unwrap().0) / (2.0 * h);
            assert!((fd - vals[i].1).abs() < 1e-6, "t = {t}");
        }
    }

    #[test]
    fn estimate_matches_quadrature_p2() {
        let est = estimate_dp(2.0, 5.0, 100, 20_000, RngStream::new(9, 0)).unwrap();
        let (q, _) = d2_quadrature(5.0, 100).unwrap();
        assert!((est.value - q).abs() <= 3.0 * est.stderr, "{est:?} vs {q}");
    }

    #[test]
    fn monte_carlo_functional_tracks_quadrature() {
        let n = 50;
        let mc = MonteCarloD::new(2.0, n, 20_000, RngStream::new(4, 0)).unwrap();
        let quad = ChiQuadrature::new(n).unwrap();
        for t in [1.0, 3.0, 6.0] {
            let a = mc.eval(t).unwrap();
            let b = quad.eval(t).unwrap();
            assert!((a.value - b.value).abs() < 0.02 * b.value);
            assert!((a.slope - b.slope).abs() < 0.03 * b.slope.abs());
            assert!(a.saddle_stderr > 0.0);
        }
    }

    #[test]
    fn estimate_rejects_bad_input() {
        assert!(estimate_dp(1.0, 0.5, 10, 1, RngStream::new(0, 0)).is_err());
        assert!(estimate_dp(1.0, -0.5, 10, 10, RngStream::new(0, 0)).is_err());
        assert!(estimate_dp(2.5, 0.5, 10, 10, RngStream::new(0, 0)).is_err());
    }
}
