use super::{axpy, dot, gemm, DenseMatrix, MatRef};
use crate::error::{Error, Result};

/// Relative threshold on the diagonal of `R` below which a factor is
/// declared rank deficient.
pub const RANK_TOL: f64 = 1e-10;

/// Thin Householder QR of a tall matrix `M = Q R` (`M` is `n x m`, `n >= m`).
///
/// `Q` is kept transposed (`m x n`) so that each orthonormal column is a
/// contiguous row.
#[derive(Clone, Debug)]
pub struct HouseholderQr {
    q_t: DenseMatrix,
    r: DenseMatrix,
}

impl HouseholderQr {
    /// Factors `Aᵀ` for a wide `m x n` matrix `A` (`m <= n`).
    pub fn of_transpose(a: &DenseMatrix) -> Result<Self> {
        let (m, n) = a.shape();
        if m > n {
            return Err(Error::dim(format!(
                "expected a wide matrix (rows <= cols), got {m}x{n}"
            )));
        }
        // Row j of `w` is column j of Aᵀ.
        let mut w = a.clone();
        let mut taus = vec![0.0; m];
        let mut r = DenseMatrix::zeros(m, m);

        for k in 0..m {
            let (head, tail) = w.as_mut_slice().split_at_mut((k + 1) * n);
            let col = &mut head[k * n..];
            let x = &mut col[k..];
            let alpha = x[0];
            let norm = dot(x, x).sqrt();
            if norm == 0.0 {
                taus[k] = 0.0;
                r[(k, k)] = 0.0;
            } else {
                // v = x - beta e1 with beta = -sign(alpha) |x|; stored with v[0] = 1.
                let beta = if alpha >= 0.0 { -norm } else { norm };
                let v0 = alpha - beta;
                for xi in x.iter_mut().skip(1) {
                    *xi /= v0;
                }
                x[0] = 1.0;
                taus[k] = (beta - alpha) / beta;
                r[(k, k)] = beta;
                let v = &col[k..];
                for j in 0..(m - k - 1) {
                    let other = &mut tail[j * n + k..(j + 1) * n];
                    let s = taus[k] * dot(v, other);
                    axpy(-s, v, other);
                }
            }
            for j in (k + 1)..m {
                r[(k, j)] = w[(j, k)];
            }
        }

        let max_diag = (0..m).fold(0.0f64, |acc, k| acc.max(r[(k, k)].abs()));
        let tol = RANK_TOL * max_diag;
        for k in 0..m {
            if r[(k, k)].abs() <= tol || max_diag == 0.0 {
                return Err(Error::Rank {
                    index: k,
                    value: r[(k, k)].abs(),
                    tol,
                });
            }
        }

        // Accumulate Q = H_0 ... H_{m-1} [I; 0], one column per row of q_t.
        let mut q_t = DenseMatrix::zeros(m, n);
        for c in 0..m {
            let q = q_t.row_mut(c);
            q[c] = 1.0;
            for k in (0..=c).rev() {
                if taus[k] == 0.0 {
                    continue;
                }
                let v = &w.row(k)[k..];
                let s = taus[k] * dot(v, &q[k..]);
                axpy(-s, v, &mut q[k..]);
            }
        }
        Ok(Self { q_t, r })
    }

    /// Factors a tall `n x m` matrix directly.
    pub fn factor(tall: &DenseMatrix) -> Result<Self> {
        Self::of_transpose(&tall.transpose())
    }

    /// `Qᵀ`, shape `m x n`.
    pub fn q_t(&self) -> &DenseMatrix {
        &self.q_t
    }

    /// `Q`, shape `n x m`.
    pub fn q(&self) -> DenseMatrix {
        self.q_t.transpose()
    }

    /// Upper triangular factor, `m x m`.
    pub fn r(&self) -> &DenseMatrix {
        &self.r
    }

    /// Solves `Rᵀ y = b` by forward substitution.
    pub fn solve_r_t(&self, b: &[f64]) -> Vec<f64> {
        let m = self.r.rows();
        let mut y = b.to_vec();
        for i in 0..m {
            let mut s = y[i];
            for k in 0..i {
                s -= self.r[(k, i)] * y[k];
            }
            y[i] = s / self.r[(i, i)];
        }
        y
    }

    /// Rows of `(Aᵀ(AAᵀ)⁻¹)ᵀ = R⁻¹ Qᵀ`: row `i` is the minimum-norm solution
    /// of `A x = e_i`.
    pub fn pinv_rows(&self) -> DenseMatrix {
        let m = self.r.rows();
        // Y = R⁻ᵀ, so Yᵀ = R⁻¹ and the rows we want are (R⁻¹ Qᵀ).
        let mut y = DenseMatrix::zeros(m, m);
        for i in 0..m {
            let mut e = vec![0.0; m];
            e[i] = 1.0;
            y.set_column(i, &self.solve_r_t(&e));
        }
        let mut out = DenseMatrix::zeros(m, self.q_t.cols());
        gemm(
            1.0,
            MatRef::row_major(y.as_slice(), m, m).t(),
            MatRef::row_major(self.q_t.as_slice(), m, self.q_t.cols()),
            0.0,
            out.as_mut_slice(),
        );
        out
    }
}

/// Moore-Penrose pseudoinverse `Aᵀ(AAᵀ)⁻¹` of a full-row-rank wide matrix,
/// computed from a Householder QR of `Aᵀ`.
pub fn mpp(a: &DenseMatrix) -> Result<DenseMatrix> {
    Ok(HouseholderQr::of_transpose(a)?.pinv_rows().transpose())
}

/// LU factorization with partial pivoting of a square matrix.
#[derive(Clone, Debug)]
pub struct Lu {
    lu: DenseMatrix,
    /// Transposed copy so that `solve_t` reads rows.
    lu_t: DenseMatrix,
    perm: Vec<usize>,
}

impl Lu {
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::dim(format!("LU needs a square matrix, got {:?}", a.shape())));
        }
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs();
        let tol = (n as f64) * f64::EPSILON * scale;
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax <= tol || scale == 0.0 {
                return Err(Error::Singular(format!("zero pivot in column {k}")));
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
            }
            let pivot = lu[(k, k)];
            let (top, bottom) = lu.as_mut_slice().split_at_mut((k + 1) * n);
            let prow = &top[k * n..];
            for i in (k + 1)..n {
                let row = &mut bottom[(i - k - 1) * n..(i - k) * n];
                let f = row[k] / pivot;
                row[k] = f;
                if f != 0.0 {
                    for j in (k + 1)..n {
                        row[j] -= f * prow[j];
                    }
                }
            }
        }
        let lu_t = lu.transpose();
        Ok(Self { lu, lu_t, perm })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    /// min |U_kk| / max |U_kk|, a cheap conditioning indicator.
    pub fn pivot_ratio(&self) -> f64 {
        let n = self.dim();
        let (lo, hi) = (0..n).fold((f64::INFINITY, 0.0f64), |(lo, hi), k| {
            let v = self.lu[(k, k)].abs();
            (lo.min(v), hi.max(v))
        });
        lo / hi
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            x[i] -= dot(&row[..i], &x[..i]);
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s = x[i] - dot(&row[i + 1..], &x[i + 1..]);
            x[i] = s / row[i];
        }
        x
    }

    /// Solves `Aᵀ y = b`.
    pub fn solve_t(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        // Aᵀ = Uᵀ Lᵀ P, so solve Uᵀ w = b, Lᵀ z = w, then y = Pᵀ z.
        let mut w = b.to_vec();
        for i in 0..n {
            let row = self.lu_t.row(i);
            w[i] = (w[i] - dot(&row[..i], &w[..i])) / row[i];
        }
        for i in (0..n).rev() {
            let row = self.lu_t.row(i);
            w[i] -= dot(&row[i + 1..], &w[i + 1..]);
        }
        let mut y = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            y[p] = w[i];
        }
        y
    }

    pub fn inverse(&self) -> DenseMatrix {
        let n = self.dim();
        let mut inv = DenseMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            inv.set_column(j, &self.solve(&e));
        }
        inv
    }
}
