//! Revised simplex for basis pursuit, `min ‖x‖₁ s.t. A x = b`.
//!
//! Works on the split `x = x⁺ - x⁻` without materializing it: a basis is a
//! set of `m` columns of `A`, each carried with the sign of its value, so
//! the basic matrix is `A_S diag(s)` and the basic solution is nonnegative.
//! Signs belong to basis slots and change only when a column enters.
//!
//! Degenerate vertices are common for structured `A`, so the first phase
//! runs on a right-hand side perturbed inside the starting basis, where
//! every basic value is nonzero and each pivot strictly decreases the
//! objective. Basic values that are zero for the true right-hand side take
//! the sign of an optional hint, typically a dual estimate. The basis the
//! first phase ends on is dual feasible for the true problem as well; if it
//! is not also primal feasible there, a second phase continues on the true
//! right-hand side. The entering column is the most violated dual
//! constraint, ties broken by lowest index; after a run of degenerate
//! pivots the rule switches to Bland's, which rules out cycling.
//!
//! The basis inverse is kept as an LU factorization followed by a product
//! of elementary column transforms, refactored periodically.

use crate::dense::{DenseMatrix, Lu};
use crate::error::{Error, Result};

/// Slack on the dual constraint `|a_jᵀ y| <= 1` before a column may enter.
const DUAL_TOL: f64 = 1e-9;
/// Direction entries at or below this (relative to the largest) are not
/// eligible as pivots.
const PIVOT_TOL: f64 = 1e-9;
/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_STREAK: usize = 50;
/// Elementary transforms accumulated before the basis is refactored.
const REFACTOR_EVERY: usize = 64;
/// Size of the right-hand-side perturbation relative to `max |b_i|`.
const PERTURBATION: f64 = 1e-7;
/// Basic values below `-FEAS_TOL · max |x_B|` count as infeasible.
const FEAS_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
    /// Optimal basis: column indices with the sign each carries.
    pub basis: Vec<usize>,
    pub signs: Vec<f64>,
}

/// Solves basis pursuit from a greedily chosen well-conditioned basis.
pub fn basis_pursuit(a: &DenseMatrix, b: &[f64]) -> Result<LpSolution> {
    check_sizes(a, b)?;
    let start = greedy_basis(a)?;
    run(a, b, start, None)
}

/// Solves basis pursuit starting from `support`, which must name `m`
/// linearly independent columns. Falls back to the greedy start otherwise.
/// `sign_hint[k]` is the sign used for `support[k]` if its basic value is
/// zero.
pub fn basis_pursuit_from(
    a: &DenseMatrix,
    b: &[f64],
    support: &[usize],
    sign_hint: Option<&[f64]>,
) -> Result<LpSolution> {
    check_sizes(a, b)?;
    let (m, n) = a.shape();
    let mut distinct = support.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let usable = support.len() == m
        && distinct.len() == m
        && support.iter().all(|&j| j < n)
        && Lu::new(&a.select_columns(support)).is_ok();
    if usable {
        let hint = sign_hint.filter(|h| h.len() == m).map(|h| h.to_vec());
        run(a, b, support.to_vec(), hint)
    } else {
        basis_pursuit(a, b)
    }
}

fn check_sizes(a: &DenseMatrix, b: &[f64]) -> Result<()> {
    let (m, n) = a.shape();
    if b.len() != m {
        return Err(Error::dim(format!("right-hand side has length {}, expected {m}", b.len())));
    }
    if m > n {
        return Err(Error::dim(format!("expected rows <= cols, got {m}x{n}")));
    }
    Ok(())
}

/// `B⁻¹ = E_k⁻¹ ⋯ E_1⁻¹ (LU)⁻¹` for the signed basis `B`.
struct BasisInverse {
    lu: Lu,
    /// `(slot, d)`: the basis after the transform is the previous one with
    /// column `slot` replaced by `B d`.
    etas: Vec<(usize, Vec<f64>)>,
}

impl BasisInverse {
    fn factor(a: &DenseMatrix, cols: &[usize], signs: &[f64]) -> Result<Self> {
        let mut b = a.select_columns(cols);
        let m = cols.len();
        for i in 0..m {
            for (k, s) in signs.iter().enumerate() {
                b.row_mut(i)[k] *= s;
            }
        }
        let lu = Lu::new(&b).map_err(|_| Error::Lp("basis became singular".into()))?;
        Ok(Self { lu, etas: Vec::new() })
    }

    /// `B⁻¹ v`
    fn ftran(&self, v: &[f64]) -> Vec<f64> {
        let mut x = self.lu.solve(v);
        for (k, d) in &self.etas {
            let xk = x[*k] / d[*k];
            for (xi, di) in x.iter_mut().zip(d) {
                *xi -= di * xk;
            }
            x[*k] = xk;
        }
        x
    }

    /// `B⁻ᵀ v`
    fn btran(&self, v: &[f64]) -> Vec<f64> {
        let mut c = v.to_vec();
        for (k, d) in self.etas.iter().rev() {
            // Row k of E⁻¹ᵀ: (c_k - Σ_{i≠k} d_i c_i) / d_k.
            let s: f64 = c.iter().zip(d).map(|(ci, di)| ci * di).sum::<f64>() - c[*k] * d[*k];
            c[*k] = (c[*k] - s) / d[*k];
        }
        self.lu.solve_t(&c)
    }
}

fn run(a: &DenseMatrix, b: &[f64], mut basis: Vec<usize>, hint: Option<Vec<f64>>) -> Result<LpSolution> {
    let (m, n) = a.shape();
    let max_pivots = 50 * n.max(10);
    let bmax = b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if bmax == 0.0 {
        let signs = vec![1.0; basis.len()];
        return Ok(LpSolution { x: vec![0.0; n], objective: 0.0, pivots: 0, basis, signs });
    }

    let mut in_basis = vec![false; n];
    basis.iter().for_each(|&j| in_basis[j] = true);
    let x0 = BasisInverse::factor(a, &basis, &vec![1.0; m])?.ftran(b);
    let x0max = x0.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let mut signs: Vec<f64> = x0
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let s = if v.abs() > FEAS_TOL * x0max { *v } else { hint.as_ref().map_or(1.0, |h| h[k]) };
            if s < 0.0 { -1.0 } else { 1.0 }
        })
        .collect();
    let mut inv = BasisInverse::factor(a, &basis, &signs)?;
    // b + c B_s w with w > 0 moves every basic value away from zero on the
    // side of its sign; distinct weights break ties in the ratio test.
    let w: Vec<f64> = (0..m).map(|k| 1.0 + ((k + 1) as f64 * 0.618_033_988_749_895).fract()).collect();
    let mut shift = vec![0.0; m];
    for (k, &col) in basis.iter().enumerate() {
        for (i, si) in shift.iter_mut().enumerate() {
            *si += signs[k] * w[k] * a[(i, col)];
        }
    }
    let smax = shift.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let c = PERTURBATION * bmax / smax;
    let perturbed: Vec<f64> = b.iter().zip(&shift).map(|(bi, si)| bi + c * si).collect();

    let mut pivots = 0;
    let mut degenerate = 0;
    let mut rhs: &[f64] = &perturbed;
    let mut perturbed_phase = true;
    loop {
        let x_b = inv.ftran(rhs);
        let y = inv.btran(&vec![1.0; m]);
        let aty = a.matvec_t(&y);

        let violated = (0..n).filter(|&j| !in_basis[j] && aty[j].abs() > 1.0 + DUAL_TOL);
        let entering = if degenerate >= DEGENERATE_STREAK {
            violated.min()
        } else {
            violated.fold(None, |best: Option<usize>, j| match best {
                Some(b) if aty[b].abs() >= aty[j].abs() => Some(b),
                _ => Some(j),
            })
        };
        let Some(j) = entering else {
            if perturbed_phase {
                // Dual feasibility does not depend on the right-hand side.
                perturbed_phase = false;
                rhs = b;
                let x_true = inv.ftran(b);
                let scale = x_true.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
                if x_true.iter().all(|v| *v >= -FEAS_TOL * scale) {
                    return Ok(finish(&basis, &signs, &x_true, n, pivots));
                }
                // Flip the slots whose value changed sign; the basis stays
                // primal feasible but may lose dual feasibility.
                for (s, v) in signs.iter_mut().zip(&x_true) {
                    if *v < -FEAS_TOL * scale {
                        *s = -*s;
                    }
                }
                inv = BasisInverse::factor(a, &basis, &signs)?;
                degenerate = 0;
                continue;
            }
            return Ok(finish(&basis, &signs, &x_b, n, pivots));
        };
        if pivots >= max_pivots {
            return Err(Error::Lp(format!("pivot limit {max_pivots} reached")));
        }

        let sigma = aty[j].signum();
        let col: Vec<f64> = (0..m).map(|i| sigma * a[(i, j)]).collect();
        let d = inv.ftran(&col);
        let scale = d.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let mut leave: Option<(usize, f64)> = None;
        for k in 0..m {
            if d[k] > PIVOT_TOL * scale {
                let ratio = x_b[k].max(0.0) / d[k];
                leave = match leave {
                    None => Some((k, ratio)),
                    Some((bk, br)) => {
                        let tie = (ratio - br).abs() <= 1e-12 * br.max(1e-300);
                        if ratio < br && !tie || tie && basis[k] < basis[bk] {
                            Some((k, ratio))
                        } else {
                            Some((bk, br))
                        }
                    }
                };
            }
        }
        let Some((k, step)) = leave else {
            return Err(Error::Lp("no admissible pivot (numerically unbounded)".into()));
        };
        degenerate = if step <= 1e-14 * bmax { degenerate + 1 } else { 0 };
        in_basis[basis[k]] = false;
        in_basis[j] = true;
        basis[k] = j;
        signs[k] = sigma;
        pivots += 1;
        if inv.etas.len() + 1 >= REFACTOR_EVERY {
            inv = BasisInverse::factor(a, &basis, &signs)?;
        } else {
            inv.etas.push((k, d));
        }
    }
}

fn finish(basis: &[usize], signs: &[f64], x_b: &[f64], n: usize, pivots: usize) -> LpSolution {
    let mut x = vec![0.0; n];
    for ((&col, s), v) in basis.iter().zip(signs).zip(x_b) {
        x[col] = s * v;
    }
    let objective = x.iter().map(|v| v.abs()).sum();
    LpSolution { x, objective, pivots, basis: basis.to_vec(), signs: signs.to_vec() }
}

/// Solves basis pursuit with the dual simplex from a basis that is dual
/// feasible, `|a_jᵀ y| <= 1` for `y = B⁻ᵀ 1`. Dual feasibility does not
/// involve `b`, so the optimal basis of one right-hand side is a valid
/// start for any other. Falls back to the primal method from the same basis
/// if the start is not dual feasible or the dual method stalls.
pub fn basis_pursuit_dual(a: &DenseMatrix, b: &[f64], basis: &[usize], signs: &[f64]) -> Result<LpSolution> {
    check_sizes(a, b)?;
    let m = a.rows();
    if basis.len() != m || signs.len() != m {
        return Err(Error::dim(format!("a basis needs {m} columns and signs")));
    }
    let mut weights = None;
    solve_dual_or_primal(a, b, basis, signs, &mut weights)
}

fn solve_dual_or_primal(
    a: &DenseMatrix,
    b: &[f64],
    basis: &[usize],
    signs: &[f64],
    weights: &mut Option<Vec<f64>>,
) -> Result<LpSolution> {
    let rd = run_dual(a, b, basis.to_vec(), signs.to_vec(), weights);
    match rd {
        Ok(Some(sol)) => Ok(sol),
        Ok(None) | Err(Error::Lp(_)) => {
            *weights = None;
            basis_pursuit_from(a, b, basis, Some(signs))
        }
        Err(e) => Err(e),
    }
}

/// Solves `A x = e_i` for every `i`: the first from the greedy start, each
/// later one with the dual simplex from the previous optimal basis.
pub fn basis_pursuit_identity(a: &DenseMatrix) -> Result<Vec<LpSolution>> {
    let m = a.rows();
    let mut out: Vec<LpSolution> = Vec::with_capacity(m);
    // Steepest-edge weights belong to the basis and carry over with it.
    let mut weights = None;
    for i in 0..m {
        let mut e = vec![0.0; m];
        e[i] = 1.0;
        let sol = match out.last() {
            None => basis_pursuit(a, &e)?,
            Some(prev) => solve_dual_or_primal(a, &e, &prev.basis, &prev.signs, &mut weights)?,
        };
        out.push(sol);
    }
    Ok(out)
}

/// Squared row norms of `B⁻¹`, the exact dual steepest-edge weights.
fn exact_weights(inv: &BasisInverse, m: usize) -> Vec<f64> {
    (0..m)
        .map(|k| {
            let mut e = vec![0.0; m];
            e[k] = 1.0;
            inv.btran(&e).iter().map(|v| v * v).sum()
        })
        .collect()
}

/// Dual simplex with steepest-edge row selection. `Ok(None)` when the
/// start is not dual feasible or the pivot budget runs out. `weights` is
/// read as the weights of the starting basis if present and left holding
/// those of the final basis.
fn run_dual(
    a: &DenseMatrix,
    b: &[f64],
    mut basis: Vec<usize>,
    mut signs: Vec<f64>,
    weights: &mut Option<Vec<f64>>,
) -> Result<Option<LpSolution>> {
    let (m, n) = a.shape();
    let max_pivots = 20 * m.max(10);
    let mut in_basis = vec![false; n];
    for &j in &basis {
        if in_basis[j] {
            return Ok(None);
        }
        in_basis[j] = true;
    }
    let Ok(mut inv) = BasisInverse::factor(a, &basis, &signs) else {
        return Ok(None);
    };
    let mut beta = match weights.take() {
        Some(w) if w.len() == m => w,
        _ => exact_weights(&inv, m),
    };
    let ones = vec![1.0; m];
    let mut aty = a.matvec_t(&inv.btran(&ones));
    if (0..n).any(|j| !in_basis[j] && aty[j].abs() > 1.0 + DUAL_TOL) {
        return Ok(None);
    }
    let mut x_b = inv.ftran(b);
    let mut pivots = 0;
    let mut degenerate = 0;
    loop {
        let scale = x_b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let leaving = (0..m)
            .filter(|&k| x_b[k] < -FEAS_TOL * scale)
            .map(|k| (k, x_b[k] * x_b[k] / beta[k].max(1e-300)))
            .fold(None, |best: Option<(usize, f64)>, c| match best {
                Some(b) if b.1 >= c.1 => Some(b),
                _ => Some(c),
            });
        let Some((r, _)) = leaving else {
            // Confirm on fresh solves before declaring optimality.
            let x_fresh = inv.ftran(b);
            let fresh_scale = x_fresh.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            if x_fresh.iter().all(|v| *v >= -FEAS_TOL * fresh_scale) {
                // The incremental duals drift; a basis that is not dual
                // feasible on a fresh solve is finished by the primal method.
                let aty_fresh = a.matvec_t(&inv.btran(&ones));
                if (0..n).any(|j| !in_basis[j] && aty_fresh[j].abs() > 1.0 + DUAL_TOL) {
                    let mut sol = run(a, b, basis, Some(signs))?;
                    sol.pivots += pivots;
                    return Ok(Some(sol));
                }
                *weights = Some(beta);
                return Ok(Some(finish(&basis, &signs, &x_fresh, n, pivots)));
            }
            x_b = x_fresh;
            continue;
        };
        if pivots >= max_pivots {
            return Ok(None);
        }

        // Row r of B⁻¹A: alpha_j = ρᵀ a_j with ρ = B⁻ᵀ e_r.
        let mut er = vec![0.0; m];
        er[r] = 1.0;
        let rho = inv.btran(&er);
        let alpha = a.matvec_t(&rho);
        let amax = alpha.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
        let tol = PIVOT_TOL * amax;

        // Entering candidates (column, sign): +a_j with reduced cost
        // 1 - a_jᵀy and row entry alpha_j, -a_j with 1 + a_jᵀy and -alpha_j.
        // The leaving column's own twin has row entry -1 and cost 2.
        let mut best: Option<(usize, f64, f64, f64)> = None;
        let mut consider = |j: usize, sigma: f64, cost: f64, entry: f64| {
            if entry >= -tol {
                return;
            }
            let ratio = cost.max(0.0) / -entry;
            best = match best {
                None => Some((j, sigma, ratio, entry)),
                Some(cur) => {
                    let tie = (ratio - cur.2).abs() <= 1e-12 * cur.2.max(1e-300);
                    let better = if tie {
                        if degenerate >= DEGENERATE_STREAK { j < cur.0 } else { entry.abs() > cur.3.abs() }
                    } else {
                        ratio < cur.2
                    };
                    Some(if better { (j, sigma, ratio, entry) } else { cur })
                }
            };
        };
        for j in 0..n {
            if !in_basis[j] {
                consider(j, 1.0, 1.0 - aty[j], alpha[j]);
                consider(j, -1.0, 1.0 + aty[j], -alpha[j]);
            }
        }
        consider(basis[r], -signs[r], 2.0, -1.0);
        let Some((q, sigma, step, _)) = best else {
            return Err(Error::Lp("infeasible right-hand side".into()));
        };
        degenerate = if step <= 1e-14 { degenerate + 1 } else { 0 };

        let col: Vec<f64> = (0..m).map(|i| sigma * a[(i, q)]).collect();
        let d = inv.ftran(&col);
        let dr = d[r];
        let tau = inv.ftran(&rho);

        // Primal step: the entering value is x_r / d_r.
        let theta = x_b[r] / dr;
        for (xi, di) in x_b.iter_mut().zip(&d) {
            *xi -= theta * di;
        }
        x_b[r] = theta;
        // Dual step along ρ keeps the entering column tight.
        for (v, al) in aty.iter_mut().zip(&alpha) {
            *v -= step * al;
        }
        // Steepest-edge weight update.
        let beta_r = beta[r];
        for k in 0..m {
            if k != r {
                let ratio = d[k] / dr;
                beta[k] = (beta[k] - 2.0 * ratio * tau[k] + ratio * ratio * beta_r).max(ratio * ratio);
            }
        }
        beta[r] = beta_r / (dr * dr);

        in_basis[basis[r]] = false;
        in_basis[q] = true;
        basis[r] = q;
        signs[r] = sigma;
        pivots += 1;
        if inv.etas.len() + 1 >= REFACTOR_EVERY || dr.abs() < 1e-11 {
            let Ok(fresh) = BasisInverse::factor(a, &basis, &signs) else {
                return Ok(None);
            };
            inv = fresh;
            aty = a.matvec_t(&inv.btran(&ones));
            x_b = inv.ftran(b);
        } else {
            inv.etas.push((r, d));
        }
    }
}

/// `m` columns picked by pivoted Gram-Schmidt: at each step the column with
/// the largest component orthogonal to those already chosen.
fn greedy_basis(a: &DenseMatrix) -> Result<Vec<usize>> {
    let (m, n) = a.shape();
    let mut resid: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut chosen = Vec::with_capacity(m);
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    for _ in 0..m {
        let (best, norm) = (0..n)
            .filter(|j| !chosen.contains(j))
            .map(|j| (j, resid[j].iter().map(|v| v * v).sum::<f64>().sqrt()))
            .fold((usize::MAX, -1.0), |acc, c| if c.1 > acc.1 { c } else { acc });
        if best == usize::MAX || norm <= 1e-12 * scale {
            return Err(Error::Singular("matrix does not have full row rank".into()));
        }
        let q: Vec<f64> = resid[best].iter().map(|v| v / norm).collect();
        chosen.push(best);
        for r in resid.iter_mut() {
            let c: f64 = r.iter().zip(&q).map(|(u, v)| u * v).sum();
            r.iter_mut().zip(&q).for_each(|(u, v)| *u -= c * v);
        }
    }
    chosen.sort_unstable();
    Ok(chosen)
}
