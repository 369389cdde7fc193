//! Euclidean projection onto the dual-norm ball `{u : ‖u‖_q <= t}`, where
//! `1/p + 1/q = 1` and `1 <= p <= 2`.

/// Tolerance on `Σ u_i^q - 1` and on the inner scalar equations.
const BALL_TOL: f64 = 1e-12;
const MAX_ITER: usize = 200;

/// The dual exponent `q = p / (p - 1)`, infinite at `p = 1`.
pub fn dual_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else {
        p / (p - 1.0)
    }
}

/// Projects `v` onto the `ℓ_q` ball of radius `t` with `q` dual to `p`.
pub fn project_dual_ball(v: &[f64], p: f64, t: f64) -> Vec<f64> {
    let q = dual_exponent(p);
    if t <= 0.0 {
        return vec![0.0; v.len()];
    }
    if q.is_infinite() {
        return v.iter().map(|x| x.clamp(-t, t)).collect();
    }
    if q == 2.0 {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        return if norm <= t { v.to_vec() } else { v.iter().map(|x| x * t / norm).collect() };
    }
    let a: Vec<f64> = v.iter().map(|x| x.abs() / t).collect();
    if a.iter().map(|x| x.powf(q)).sum::<f64>() <= 1.0 {
        return v.to_vec();
    }
    let u = project_positive(&a, q);
    v.iter().zip(&u).map(|(x, ui)| (ui * t).copysign(*x)).collect()
}

/// `‖v - project_dual_ball(v, p, t)‖₂`.
pub fn dist_dual_ball(v: &[f64], p: f64, t: f64) -> f64 {
    let q = dual_exponent(p);
    if q.is_infinite() {
        return v.iter().map(|x| (x.abs() - t).max(0.0).powi(2)).sum::<f64>().sqrt();
    }
    if q == 2.0 {
        return (v.iter().map(|x| x * x).sum::<f64>().sqrt() - t).max(0.0);
    }
    let u = project_dual_ball(v, p, t);
    v.iter().zip(&u).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Projects a nonnegative `a` with `Σ a_i^q > 1` onto `Σ u_i^q <= 1`.
///
/// Optimality gives `u_i + μ q u_i^(q-1) = a_i` for a multiplier `μ > 0`
/// fixed by `S(μ) = Σ u_i(μ)^q = 1`. `S` is decreasing and close to a power
/// of `μ`, so Newton runs on `ln S` against `ln μ`, safeguarded by a
/// bisection bracket.
fn project_positive(a: &[f64], q: f64) -> Vec<f64> {
    let mut u = a.to_vec();
    let eval = |mu: f64, u: &mut [f64]| -> (f64, f64) {
        let mut s = 0.0;
        let mut ds = 0.0;
        for (ui, &ai) in u.iter_mut().zip(a) {
            *ui = inner_root(ai, mu * q, q - 1.0);
            if *ui > 0.0 {
                let w = ui.powf(q - 1.0);
                s += w * *ui;
                // du/dμ from implicit differentiation of the inner equation.
                let du = -q * w / (1.0 + mu * q * (q - 1.0) * w / *ui);
                ds += q * w * du;
            }
        }
        (s, ds)
    };
    // u_i <= (a_i / (μq))^(1/(q-1)) gives S <= (μq)^(-p) Σ a_i^p with
    // p = q/(q-1), so S <= 1 at μ = ‖a‖_p / q.
    let p = q / (q - 1.0);
    let mut hi = a.iter().map(|x| x.powf(p)).sum::<f64>().powf(1.0 / p) / q;
    let mut lo = 0.0f64;
    let mut mu = hi;
    for _ in 0..MAX_ITER {
        let (s, ds) = eval(mu, &mut u);
        if (s - 1.0).abs() <= BALL_TOL {
            break;
        }
        if s > 1.0 {
            lo = mu;
        } else {
            hi = mu;
        }
        // d ln S / d ln μ = μ S' / S.
        let next = mu * (-s.ln() * s / (mu * ds)).exp();
        mu = if next.is_finite() && next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        if hi - lo <= 1e-16 * hi {
            break;
        }
    }
    eval(mu, &mut u);
    u
}

/// Solves `u + k u^r = a` for `u >= 0` with `r > 1`. The left side is convex
/// in `u`, so Newton started right of the root decreases monotonically onto
/// it. Both `a` and `(a/k)^(1/r)` bound the root from above.
fn inner_root(a: f64, k: f64, r: f64) -> f64 {
    if a == 0.0 || k == 0.0 {
        return a;
    }
    let tol = BALL_TOL * a.max(1e-300);
    let mut u = a.min((a / k).powf(1.0 / r));
    for _ in 0..MAX_ITER {
        let w = u.powf(r - 1.0);
        let f = u + k * w * u - a;
        if f <= tol {
            break;
        }
        u -= f / (1.0 + k * r * w);
    }
    u.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qnorm(u: &[f64], q: f64) -> f64 {
        u.iter().map(|x| x.abs().powf(q)).sum::<f64>().powf(1.0 / q)
    }

    #[test]
    fn endpoint_examples() {
        assert_eq!(project_dual_ball(&[2.0, -0.5], 1.0, 1.0), vec![1.0, -0.5]);
        let v = [3.0, 4.0];
        let u = project_dual_ball(&v, 2.0, 1.0);
        assert!((u[0] - 0.6).abs() < 1e-15 && (u[1] - 0.8).abs() < 1e-15);
        assert!((dist_dual_ball(&[3.0, 0.0, 0.0], 2.0, 1.0) - 2.0).abs() < 1e-15);
        assert!((dist_dual_ball(&[2.0, 0.5, -3.0], 1.0, 1.0) - 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn interior_points_are_fixed() {
        let v = [0.3, -0.2, 0.1];
        for p in [1.0, 1.2, 1.5, 1.8, 2.0] {
            assert_eq!(project_dual_ball(&v, p, 1.0), v.to_vec());
            assert_eq!(dist_dual_ball(&v, p, 1.0), 0.0);
        }
    }

    #[test]
    fn projection_is_optimal() {
        // Boundary point with v - u along the normal of the q-ball at u.
        let v = [1.5, -0.7, 0.2, 2.4, 0.0];
        for p in [1.1, 1.3, 1.5, 1.7, 1.9] {
            let q = dual_exponent(p);
            let t = 0.8;
            let u = project_dual_ball(&v, p, t);
            assert!((qnorm(&u, q) - t).abs() < 1e-10, "p = {p}");
            // v - u = c ∇‖u‖_q with c >= 0, ∇ ∝ sign(u) |u|^(q-1).
            let g: Vec<f64> = u.iter().map(|x| x.signum() * x.abs().powf(q - 1.0)).collect();
            let c = (v[3] - u[3]) / g[3];
            assert!(c > 0.0);
            for i in 0..v.len() {
                assert!((v[i] - u[i] - c * g[i]).abs() < 1e-9, "p = {p}, i = {i}");
            }
        }
    }

    #[test]
    fn projection_beats_random_ball_points() {
        let v = [1.0, 2.0, -1.5];
        let p = 1.4;
        let q = dual_exponent(p);
        let d = dist_dual_ball(&v, p, 1.0);
        for k in 0..2000 {
            let a = k as f64 * 0.618_033_988_7 * std::f64::consts::TAU;
            let b = k as f64 * 0.414_213_562_3 * std::f64::consts::TAU;
            let w = [a.cos() * b.sin(), a.sin() * b.sin(), b.cos()];
            let n = qnorm(&w, q);
            let w: Vec<f64> = w.iter().map(|x| x / n).collect();
            let dw = v.iter().zip(&w).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            assert!(d <= dw + 1e-12);
        }
    }
}
