//! Column-decoupled ADMM for `min ‖x‖_p^p  s.t.  A x = e_i`.
//!
//! Splitting `x = z` with over-relaxation: the x-update projects onto the affine set using one
//! QR of `Aᵀ` shared by all columns, the z-update is the separable proximal
//! map. Active columns are advanced together so the projection runs as two
//! matrix products; each column's arithmetic does not depend on which other
//! columns are in the batch.
//!
//! For `p = 1` the iterate is polished once it converges. The pre-prox vector
//! `v = z + u` carries both the primal iterate and the scaled dual
//! (`ρu ∈ ∂‖z‖₁`), so ranking columns by `|v_j|` and taking `sign(v_j)`
//! yields a candidate basis with signs consistent with the dual. Its basic
//! solution is computed exactly and accepted only if an LP dual certificate
//! proves it optimal. Columns that converge without a certificate, or are
//! still running after a fixed budget, finish with the simplex
//! warm-started from that basis.

use super::options::SolverOptions;
use super::prox::prox_pow;
use super::simplex::basis_pursuit_from;
use crate::dense::{gemm, norm2, DenseMatrix, HouseholderQr, Lu, MatRef};
use crate::error::{Error, Result};

/// Slack allowed on the dual constraint `‖Aᵀ y‖_∞ <= 1`.
const CERT_DUAL_TOL: f64 = 1e-9;
/// Iterations after which a still-active p = 1 column is handed to the
/// simplex, warm-started from its current support.
const CROSSOVER_AFTER: usize = 500;
/// Over-relaxation factor applied to the x-iterate before the z-update.
const RELAXATION: f64 = 1.6;
/// A column joins a candidate basis if its component orthogonal to those
/// already chosen exceeds this fraction of its norm.
const INDEPENDENCE_TOL: f64 = 1e-8;
/// Basic values below this fraction of the largest are treated as zero.
const ZERO_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub(crate) struct ColumnSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
}

struct ColumnState {
    z: Vec<f64>,
    u: Vec<f64>,
    primal: f64,
    dual: f64,
}

pub(crate) fn solve(
    a: &DenseMatrix,
    qr: &HouseholderQr,
    opts: &SolverOptions,
) -> Result<Vec<ColumnSolution>> {
    let (m, n) = a.shape();
    let p = opts.p;
    let rho = opts.rho * a.frob_norm().powf(2.0 - p);
    let c = 1.0 / rho;
    let q_t = qr.q_t();
    let pinv_rows = qr.pinv_rows();
    let sqrt_n = (n as f64).sqrt();

    let mut states: Vec<ColumnState> = (0..m)
        .map(|_| ColumnState {
            z: vec![0.0; n],
            u: vec![0.0; n],
            primal: f64::INFINITY,
            dual: f64::INFINITY,
        })
        .collect();
    let mut done: Vec<Option<ColumnSolution>> = vec![None; m];
    let mut active: Vec<usize> = (0..m).collect();

    let mut xbuf = vec![0.0; m * n];
    let mut wbuf = vec![0.0; m * m];
    let mut vrow = vec![0.0; n];
    let mut z_prev = vec![0.0; n];

    for iter in 1..=opts.max_iter {
        if active.is_empty() {
            break;
        }
        let k = active.len();
        let v = &mut xbuf[..k * n];
        for (r, &col) in active.iter().enumerate() {
            let st = &states[col];
            for ((vi, zi), ui) in v[r * n..(r + 1) * n].iter_mut().zip(&st.z).zip(&st.u) {
                *vi = zi - ui;
            }
        }
        // W = V Q  (k x m)
        let w = &mut wbuf[..k * m];
        gemm(
            1.0,
            MatRef::row_major(v, k, n),
            MatRef::row_major(q_t.as_slice(), m, n).t(),
            0.0,
            w,
        );
        // X = V - W Qᵀ + rows of A⁺
        for (r, &col) in active.iter().enumerate() {
            for (xi, bi) in v[r * n..(r + 1) * n].iter_mut().zip(pinv_rows.row(col)) {
                *xi += bi;
            }
        }
        gemm(
            -1.0,
            MatRef::row_major(w, k, m),
            MatRef::row_major(q_t.as_slice(), m, n),
            1.0,
            v,
        );

        let mut finished = Vec::new();
        for (r, &col) in active.iter().enumerate() {
            let x = &v[r * n..(r + 1) * n];
            let st = &mut states[col];
            for (((wi, xi), ui), zi) in vrow.iter_mut().zip(x).zip(&st.u).zip(&st.z) {
                *wi = RELAXATION * xi + (1.0 - RELAXATION) * zi + ui;
            }
            z_prev.copy_from_slice(&st.z);
            prox_pow(p, c, &vrow, &mut st.z);
            let mut r_sq = 0.0;
            let mut s_sq = 0.0;
            for i in 0..n {
                st.u[i] = vrow[i] - st.z[i];
                let d = x[i] - st.z[i];
                r_sq += d * d;
                let dz = st.z[i] - z_prev[i];
                s_sq += dz * dz;
            }
            st.primal = r_sq.sqrt();
            st.dual = rho * s_sq.sqrt();
            let eps_pri = sqrt_n * opts.eps_abs + opts.eps_rel * norm2(x).max(norm2(&st.z));
            let eps_dual = sqrt_n * opts.eps_abs + opts.eps_rel * rho * norm2(&st.u);
            let converged = st.primal <= eps_pri && st.dual <= eps_dual;

            if p == 1.0 && (converged || iter == CROSSOVER_AFTER) {
                let (support, hint) = ranked_basis(a, &vrow);
                let xs = certify_l1(a, col, &support, &hint)
                    .or_else(|| crossover(a, col, &support, &hint));
                if let Some(xs) = xs {
                    done[col] = Some(ColumnSolution { x: xs, iterations: iter });
                    finished.push(r);
                    continue;
                }
            }
            if converged {
                done[col] = Some(ColumnSolution { x: x.to_vec(), iterations: iter });
                finished.push(r);
            }
        }
        for r in finished.into_iter().rev() {
            active.remove(r);
        }
    }

    if let Some(&worst) = active.iter().max_by(|&&i, &&j| {
        states[i].primal.total_cmp(&states[j].primal)
    }) {
        let dual = active.iter().map(|&c| states[c].dual).fold(0.0, f64::max);
        return Err(Error::Convergence {
            column: worst,
            iterations: opts.max_iter,
            primal: states[worst].primal,
            dual,
        });
    }
    Ok(done.into_iter().map(|s| s.expect("every column finished")).collect())
}

/// Exact vertex solution for a column whose converged iterate could not be
/// certified, which happens when the optimum is nearly degenerate.
fn crossover(a: &DenseMatrix, col: usize, support: &[usize], hint: &[f64]) -> Option<Vec<f64>> {
    let mut e = vec![0.0; a.rows()];
    e[col] = 1.0;
    basis_pursuit_from(a, &e, support, Some(hint)).ok().map(|s| s.x)
}

/// Linearly independent columns of `A`, taken greedily in decreasing
/// `|v_j|` (ties by index) until `m` are found, each with `sign(v_j)`.
/// Sorted by column index.
fn ranked_basis(a: &DenseMatrix, v: &[f64]) -> (Vec<usize>, Vec<f64>) {
    let m = a.rows();
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&i, &j| v[j].abs().total_cmp(&v[i].abs()).then(i.cmp(&j)));
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut chosen = Vec::with_capacity(m);
    for j in order {
        if chosen.len() == m {
            break;
        }
        let mut r = a.column(j);
        let norm = norm2(&r);
        if norm == 0.0 {
            continue;
        }
        // Two passes of Gram-Schmidt keep the test reliable near dependence.
        for _ in 0..2 {
            for qk in &q {
                let c: f64 = r.iter().zip(qk).map(|(x, y)| x * y).sum();
                r.iter_mut().zip(qk).for_each(|(x, y)| *x -= c * y);
            }
        }
        let rn = norm2(&r);
        if rn > INDEPENDENCE_TOL * norm {
            r.iter_mut().for_each(|x| *x /= rn);
            q.push(r);
            chosen.push(j);
        }
    }
    chosen.sort_unstable();
    let hint = chosen.iter().map(|&j| if v[j] < 0.0 { -1.0 } else { 1.0 }).collect();
    (chosen, hint)
}

/// Basic solution on `support` for `A x = e_col`, returned only when it is
/// provably ℓ¹-optimal. With `y` solving `A_Sᵀ y = s`, where `s` is the sign
/// of each basic value and `hint` for those that vanish, optimality holds
/// iff `|a_jᵀ y| <= 1` for every column `j`.
pub(crate) fn certify_l1(a: &DenseMatrix, col: usize, support: &[usize], hint: &[f64]) -> Option<Vec<f64>> {
    let (m, n) = a.shape();
    if support.len() != m || hint.len() != m {
        return None;
    }
    let a_s = a.select_columns(support);
    let lu = Lu::new(&a_s).ok()?;
    let mut e = vec![0.0; m];
    e[col] = 1.0;
    let x_s = lu.solve(&e);
    let resid: f64 = a_s
        .matvec(&x_s)
        .iter()
        .zip(&e)
        .map(|(u, v)| (u - v) * (u - v))
        .sum::<f64>()
        .sqrt();
    if !(resid <= 1e-10) {
        return None;
    }
    let xmax = x_s.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let signs: Vec<f64> = x_s
        .iter()
        .zip(hint)
        .map(|(v, h)| if v.abs() > ZERO_TOL * xmax { v.signum() } else { *h })
        .collect();
    let y = lu.solve_t(&signs);
    let aty = a.matvec_t(&y);
    if aty.iter().any(|g| !(g.abs() <= 1.0 + CERT_DUAL_TOL)) {
        return None;
    }
    let mut x = vec![0.0; n];
    for (j, &s) in support.iter().enumerate() {
        x[s] = if x_s[j].abs() > ZERO_TOL * xmax { x_s[j] } else { 0.0 };
    }
    Some(x)
}
