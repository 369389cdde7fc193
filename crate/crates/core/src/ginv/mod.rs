//! ℓᵖ-minimal generalized inverses.
//!
//! `min Σ_ij |x_ij|^p  s.t.  A X = I` splits into one problem per column of
//! `X`, `min ‖x‖_p s.t. A x = e_i`, all sharing the factorization of `A`.

mod admm;
mod options;
mod prox;
pub mod simplex;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::dense::{DenseMatrix, HouseholderQr, Lu, RngStream};
use crate::error::{Error, Result};

pub use options::{Backend, SolverOptions};

/// A generalized inverse together with solver diagnostics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GinvResult {
    #[serde(rename = "X")]
    pub x: DenseMatrix,
    pub p: f64,
    pub per_column_iterations: Vec<usize>,
    /// `‖A X - I‖_F`
    pub constraint_residual: f64,
    pub per_column_nnz: Vec<usize>,
    /// `(n/m) ‖X‖_F²`
    pub normalized_frob: f64,
}

impl GinvResult {
    fn assemble(a: &DenseMatrix, x: DenseMatrix, iterations: Vec<usize>, opts: &SolverOptions) -> Self {
        let (m, n) = a.shape();
        let ax = a.matmul(&x).expect("shapes agree");
        let constraint_residual = ax.sub(&DenseMatrix::identity(m)).expect("square").frob_norm();
        let per_column_nnz = column_sparsity(&x, opts.sparsity_threshold);
        let normalized_frob = (n as f64 / m as f64) * x.frob_norm_sq();
        Self {
            x,
            p: opts.p,
            per_column_iterations: iterations,
            constraint_residual,
            per_column_nnz,
            normalized_frob,
        }
    }

    pub fn nnz_total(&self) -> usize {
        self.per_column_nnz.iter().sum()
    }
}

/// Computes `argmin ‖vec(X)‖_p` over the generalized inverses of a wide,
/// full-row-rank `A`.
pub fn lp_min_ginv(a: &DenseMatrix, opts: &SolverOptions) -> Result<GinvResult> {
    opts.validate()?;
    let (m, n) = a.shape();
    if m > n {
        return Err(Error::dim(format!("expected rows <= cols, got {m}x{n}")));
    }
    if !a.is_finite() {
        return Err(Error::domain("matrix has non-finite entries"));
    }
    let qr = HouseholderQr::of_transpose(a)?;
    let mut x = DenseMatrix::zeros(n, m);
    let mut iterations = Vec::with_capacity(m);
    match opts.backend {
        Backend::Admm => {
            for (i, col) in admm::solve(a, &qr, opts)?.into_iter().enumerate() {
                x.set_column(i, &col.x);
                iterations.push(col.iterations);
            }
        }
        Backend::Lp => {
            for (i, sol) in simplex::basis_pursuit_identity(a)?.into_iter().enumerate() {
                x.set_column(i, &sol.x);
                iterations.push(sol.pivots);
            }
        }
    }
    Ok(GinvResult::assemble(a, x, iterations, opts))
}

/// Attempts at drawing an invertible column subset before giving up.
pub const SUBMATRIX_RETRIES: usize = 100;
/// Selections whose LU pivot ratio falls below this are treated as singular.
const SUBMATRIX_PIVOT_RATIO: f64 = 1e-12;

/// A sparsest generalized inverse: invert `m` randomly chosen columns of `A`
/// and place the result in the matching rows of an otherwise zero `X`.
pub fn ginv0_random_submatrix(a: &DenseMatrix, stream: RngStream) -> Result<DenseMatrix> {
    let (m, n) = a.shape();
    if m > n {
        return Err(Error::dim(format!("expected rows <= cols, got {m}x{n}")));
    }
    let mut rng = stream.rng();
    for _ in 0..SUBMATRIX_RETRIES {
        let mut sel = index::sample(&mut rng, n, m).into_vec();
        sel.sort_unstable();
        match ginv0_from_selection(a, &sel) {
            Ok(x) => return Ok(x),
            Err(Error::Singular(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Singular(format!(
        "no invertible {m}x{m} column subset found in {SUBMATRIX_RETRIES} draws"
    )))
}

/// The ℓ⁰ inverse for a given column selection.
pub fn ginv0_from_selection(a: &DenseMatrix, selection: &[usize]) -> Result<DenseMatrix> {
    let (m, n) = a.shape();
    if selection.len() != m || selection.iter().any(|&j| j >= n) {
        return Err(Error::dim(format!(
            "selection must hold {m} column indices below {n}"
        )));
    }
    let lu = Lu::new(&a.select_columns(selection))?;
    if lu.pivot_ratio() < SUBMATRIX_PIVOT_RATIO {
        return Err(Error::Singular("selected submatrix is numerically singular".into()));
    }
    let inv = lu.inverse();
    let mut x = DenseMatrix::zeros(n, m);
    for (k, &row) in selection.iter().enumerate() {
        x.row_mut(row).copy_from_slice(inv.row(k));
    }
    Ok(x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GinvCheck {
    /// `‖A X A - A‖_F`
    pub axa_residual: f64,
    /// `‖A X - I‖_F`
    pub ax_residual: f64,
    pub tol: f64,
    pub axa_ok: bool,
    pub ax_ok: bool,
    pub passed: bool,
}

pub fn check_generalized_inverse(a: &DenseMatrix, x: &DenseMatrix, tol: f64) -> Result<GinvCheck> {
    let (m, n) = a.shape();
    if x.shape() != (n, m) {
        return Err(Error::dim(format!(
            "A is {m}x{n}, so X must be {n}x{m}, got {:?}",
            x.shape()
        )));
    }
    let ax = a.matmul(x)?;
    let axa_residual = ax.matmul(a)?.sub(a)?.frob_norm();
    let ax_residual = ax.sub(&DenseMatrix::identity(m))?.frob_norm();
    let axa_ok = axa_residual <= tol;
    let ax_ok = ax_residual <= tol;
    Ok(GinvCheck {
        axa_residual,
        ax_residual,
        tol,
        axa_ok,
        ax_ok,
        passed: axa_ok && ax_ok,
    })
}

/// Per column, the number of entries above `threshold` times the column's
/// largest magnitude. All-zero columns count 0.
pub fn column_sparsity(x: &DenseMatrix, threshold: f64) -> Vec<usize> {
    (0..x.cols())
        .map(|j| {
            let col = x.column(j);
            let peak = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if peak == 0.0 {
                return 0;
            }
            let cut = threshold * peak;
            col.iter().filter(|v| v.abs() > cut).count()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{mpp, sample_matrix, EnsembleKind};

    fn gaussian(m: usize, n: usize, seed: u64) -> DenseMatrix {
        sample_matrix(EnsembleKind::Gaussian, m, n, RngStream::new(seed, 0)).unwrap()
    }

    #[test]
    fn spinv_of_row_vector() {
        let a = DenseMatrix::from_rows(&[vec![2.0, 1.0]]).unwrap();
        for backend in [Backend::Admm, Backend::Lp] {
            let opts = SolverOptions {
                backend,
                ..SolverOptions::with_p(1.0)
            };
            let r = lp_min_ginv(&a, &opts).unwrap();
            assert!((r.x[(0, 0)] - 0.5).abs() < 1e-12, "{backend}");
            assert!(r.x[(1, 0)].abs() < 1e-12, "{backend}");
            assert_eq!(r.per_column_nnz, vec![1]);
        }
    }

    #[test]
    fn p2_matches_mpp() {
        let a = gaussian(4, 9, 3);
        let r = lp_min_ginv(&a, &SolverOptions::with_p(2.0)).unwrap();
        let p = mpp(&a).unwrap();
        assert!(r.x.sub(&p).unwrap().frob_norm() <= 1e-5 * p.frob_norm());
    }

    #[test]
    fn spinv_columns_are_m_sparse() {
        let a = gaussian(3, 5, 17);
        let r = lp_min_ginv(&a, &SolverOptions::with_p(1.0)).unwrap();
        assert_eq!(r.per_column_nnz, vec![3, 3, 3]);
        assert!(r.constraint_residual <= 1e-12);
    }

    #[test]
    fn rejects_tall_and_bad_options() {
        let tall = gaussian(5, 3, 1);
        assert!(matches!(
            lp_min_ginv(&tall, &SolverOptions::default()),
            Err(Error::Dimension(_))
        ));
        let a = gaussian(2, 4, 1);
        assert!(matches!(
            lp_min_ginv(&a, &SolverOptions::with_p(2.5)),
            Err(Error::InvalidOptions(_))
        ));
    }

    #[test]
    fn rank_error_propagates() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]]).unwrap();
        assert!(matches!(
            lp_min_ginv(&a, &SolverOptions::default()),
            Err(Error::Rank { index: 1, .. })
        ));
    }

    #[test]
    fn iteration_cap_reports_convergence_error() {
        let a = gaussian(6, 15, 2);
        let opts = SolverOptions {
            max_iter: 2,
            ..SolverOptions::with_p(1.5)
        };
        match lp_min_ginv(&a, &opts) {
            Err(Error::Convergence {
                iterations,
                primal,
                dual,
                ..
            }) => {
                assert_eq!(iterations, 2);
                assert!(primal.is_finite() && dual.is_finite());
            }
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn ginv0_identity_block() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 0.0, 3.0, -1.0], vec![0.0, 1.0, 0.5, 2.0]])
            .unwrap();
        let x = ginv0_from_selection(&a, &[0, 1]).unwrap();
        let mut want = DenseMatrix::zeros(4, 2);
        want[(0, 0)] = 1.0;
        want[(1, 1)] = 1.0;
        assert_eq!(x, want);
    }

    #[test]
    fn ginv0_random_is_generalized_inverse() {
        let a = gaussian(6, 10, 4);
        for t in 0..10 {
            let x = ginv0_random_submatrix(&a, RngStream::new(1, t)).unwrap();
            let check = check_generalized_inverse(&a, &x, 1e-8).unwrap();
            assert!(check.passed, "{check:?}");
            let nonzero_rows = (0..10).filter(|&r| x.row(r).iter().any(|v| *v != 0.0)).count();
            assert_eq!(nonzero_rows, 6);
        }
    }

    #[test]
    fn ginv0_singular_selection() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0, 0.0], vec![2.0, 4.0, 0.0]]).unwrap();
        assert!(matches!(
            ginv0_random_submatrix(&a, RngStream::new(0, 0)),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn check_examples() {
        let a = gaussian(3, 6, 8);
        let p = mpp(&a).unwrap();
        assert!(check_generalized_inverse(&a, &p, 1e-8).unwrap().passed);

        let zero = DenseMatrix::zeros(6, 3);
        let c = check_generalized_inverse(&a, &zero, 1e-8).unwrap();
        assert!(!c.passed);
        assert!((c.axa_residual - a.frob_norm()).abs() < 1e-12);

        let mut bumped = p.clone();
        bumped[(2, 1)] += 1e-3;
        assert!(!check_generalized_inverse(&a, &bumped, 1e-8).unwrap().passed);

        assert!(matches!(
            check_generalized_inverse(&a, &DenseMatrix::zeros(3, 6), 1e-8),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn sparsity_counts() {
        assert_eq!(column_sparsity(&DenseMatrix::identity(3), 1e-6), vec![1, 1, 1]);
        let mut x = DenseMatrix::zeros(3, 2);
        x[(0, 0)] = 1.0;
        x[(1, 0)] = 1e-9;
        assert_eq!(column_sparsity(&x, 1e-6), vec![1, 0]);
        assert_eq!(column_sparsity(&x, 0.0), vec![2, 0]);
    }
}
