//! Independent reference values, computed without the library's special
//! functions.
#![allow(dead_code)]

use std::f64::consts::PI;

/// `erfc(x) = (2/√π) ∫_x^∞ e^{-u²} du` by composite Simpson on `[x, x + 12]`.
pub fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    let steps = 20_000;
    let h = 12.0 / steps as f64;
    let f = |u: f64| (-u * u).exp();
    let mut s = f(x) + f(x + 12.0);
    for k in 1..steps {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(x + k as f64 * h);
    }
    2.0 / PI.sqrt() * s * h / 3.0
}

/// Inverse of [`erfc`] on (0, 1] by bisection.
pub fn erfc_inv(y: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 6.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if erfc(mid) > y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `E (|h| - t)₊²` for `h ~ N(0, 1)`, from its closed form.
pub fn theta(t: f64) -> f64 {
    (t * t + 1.0) * erfc(t / 2f64.sqrt()) - (2.0 / PI).sqrt() * t * (-t * t / 2.0).exp()
}

/// Limiting `α*²` for p = 1.
pub fn alpha_sq_p1(delta: f64) -> f64 {
    let d = theta(2f64.sqrt() * erfc_inv(delta));
    d / (delta * (delta - d))
}

/// Limiting `α*²` for p = 2.
pub fn alpha_sq_p2(delta: f64) -> f64 {
    1.0 / (1.0 - delta)
}
