//! Proximal map of `z -> c Σ |z_i|^p` for `1 <= p <= 2`.

/// Residual target for the scalar Newton solve.
const NEWTON_TOL: f64 = 1e-12;
pub(crate) const NEWTON_MAX_ITER: usize = 30;

/// Applies the proximal map of `c ‖·‖_p^p` to `w` in place of `out`.
///
/// `out` doubles as the warm start for `1 < p < 2`.
pub(crate) fn prox_pow(p: f64, c: f64, w: &[f64], out: &mut [f64]) {
    debug_assert_eq!(w.len(), out.len());
    if p == 1.0 {
        for (o, &v) in out.iter_mut().zip(w) {
            *o = soft_threshold(v, c);
        }
    } else if p == 2.0 {
        let s = 1.0 / (1.0 + 2.0 * c);
        for (o, &v) in out.iter_mut().zip(w) {
            *o = v * s;
        }
    } else {
        for (o, &v) in out.iter_mut().zip(w) {
            let a = solve_scalar(v.abs(), c * p, p - 1.0, o.abs()).0;
            *o = a.copysign(v);
        }
    }
}

#[inline]
pub(crate) fn soft_threshold(v: f64, c: f64) -> f64 {
    if v > c {
        v - c
    } else if v < -c {
        v + c
    } else {
        0.0
    }
}

/// Solves `a + kappa a^r = b` for `a >= 0` with `0 < r < 1`, `b >= 0`.
///
/// Returns the root and the Newton iterations spent. When the linear term
/// dominates the equation is concave in `a` and Newton runs upward from the
/// lower bound `b - kappa b^r`; otherwise it runs in `y = a^r`, where it is
/// convex, downward from the upper bound `min(b / kappa, b^r)`. Both sweeps
/// are monotone.
pub(crate) fn solve_scalar(b: f64, kappa: f64, r: f64, warm: f64) -> (f64, usize) {
    if b == 0.0 {
        return (0.0, 0);
    }
    let tol = NEWTON_TOL * b.max(1.0);
    let lower = b - kappa * b.powf(r);
    if lower >= 0.5 * b {
        let f = |a: f64| a + kappa * a.powf(r) - b;
        // Warm start is usable if it lies left of the root.
        let mut a = if warm > lower && warm <= b && f(warm) <= 0.0 {
            warm
        } else {
            lower
        };
        for it in 0..NEWTON_MAX_ITER {
            let fa = f(a);
            if fa.abs() <= tol {
                return (a, it);
            }
            let d = 1.0 + kappa * r * a.powf(r - 1.0);
            a = (a - fa / d).min(b);
        }
        (a, NEWTON_MAX_ITER)
    } else {
        let inv_r = 1.0 / r;
        let f = |y: f64| y.powf(inv_r) + kappa * y - b;
        let upper = (b / kappa).min(b.powf(r));
        let wy = warm.powf(r);
        let mut y = if warm > 0.0 && wy < upper && f(wy) >= 0.0 {
            wy
        } else {
            upper
        };
        for it in 0..NEWTON_MAX_ITER {
            let fy = f(y);
            if fy.abs() <= tol {
                return (y.powf(inv_r), it);
            }
            let d = inv_r * y.powf(inv_r - 1.0) + kappa;
            y = (y - fy / d).max(0.0);
        }
        (y.powf(inv_r), NEWTON_MAX_ITER)
    }
}
