//! Dense real matrices, random ensembles, and the QR-based Moore-Penrose
//! pseudoinverse.

mod linalg;
mod rng;

use std::fs::File;
use std::io::{Read, Write};
use std::ops::{Index, IndexMut};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use linalg::{mpp, HouseholderQr, Lu};
pub use rng::{sample_matrix, EnsembleKind, GaussianStream, RngStream};

/// Row-major dense real matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim(format!(
                "data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from a list of equally long rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::dim("ragged rows"));
        }
        let data = rows.iter().flatten().copied().collect();
        Self::new(rows.len(), cols, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Copies column `j` out.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[f64]) {
        assert_eq!(values.len(), self.rows);
        for (i, v) in values.iter().enumerate() {
            self[(i, j)] = *v;
        }
    }

    /// Copies the listed columns, in order, into a new matrix.
    pub fn select_columns(&self, cols: &[usize]) -> DenseMatrix {
        DenseMatrix::from_fn(self.rows, cols.len(), |i, k| self[(i, cols[k])])
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::dim(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, rhs.cols);
        gemm(
            1.0,
            MatRef::row_major(&self.data, self.rows, self.cols),
            MatRef::row_major(&rhs.data, rhs.rows, rhs.cols),
            0.0,
            &mut out.data,
        );
        Ok(out)
    }

    /// Matrix-vector product.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// Transposed matrix-vector product, `selfᵀ y`.
    pub fn matvec_t(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, yi) in y.iter().enumerate() {
            if *yi != 0.0 {
                axpy(*yi, self.row(i), &mut out);
            }
        }
        out
    }

    pub fn sub(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        self.zip_with(rhs, |a, b| a - b)
    }

    pub fn add(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        self.zip_with(rhs, |a, b| a + b)
    }

    fn zip_with(&self, rhs: &DenseMatrix, f: impl Fn(f64, f64) -> f64) -> Result<DenseMatrix> {
        if self.shape() != rhs.shape() {
            return Err(Error::dim(format!(
                "shape mismatch {:?} vs {:?}",
                self.shape(),
                rhs.shape()
            )));
        }
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| f(*a, *b)).collect();
        Ok(DenseMatrix { data, ..*self })
    }

    pub fn scaled(&self, c: f64) -> DenseMatrix {
        DenseMatrix {
            data: self.data.iter().map(|v| v * c).collect(),
            ..*self
        }
    }

    pub fn frob_norm_sq(&self) -> f64 {
        frob_norm_sq(self)
    }

    pub fn frob_norm(&self) -> f64 {
        self.frob_norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Reads a headerless CSV matrix, one row per line.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<DenseMatrix> {
        let path = path.as_ref();
        let mut text = String::new();
        File::open(path)
            .and_then(|mut f| f.read_to_string(&mut text))
            .map_err(|source| Error::Io {
                path: path.to_path_buf(),
                source,
            })?;
        Self::parse_csv(&text).map_err(|message| Error::Parse {
            path: path.to_path_buf(),
            message,
        })
    }

    pub fn parse_csv(text: &str) -> std::result::Result<DenseMatrix, String> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| e.to_string())?;
            let row = record
                .iter()
                .enumerate()
                .map(|(col, field)| {
                    let v: f64 = field.parse().map_err(|_| {
                        format!("row {}, column {}: '{field}' is not a number", line + 1, col + 1)
                    })?;
                    if v.is_finite() {
                        Ok(v)
                    } else {
                        Err(format!("row {}, column {}: non-finite entry", line + 1, col + 1))
                    }
                })
                .collect::<std::result::Result<Vec<f64>, String>>()?;
            rows.push(row);
        }
        if rows.is_empty() || rows[0].is_empty() {
            return Err("empty matrix".into());
        }
        DenseMatrix::from_rows(&rows).map_err(|e| e.to_string())
    }

    /// Serializes with 17 significant digits per entry.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(self.data.len() * 24);
        for i in 0..self.rows {
            let line: Vec<String> = self.row(i).iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        File::create(path)
            .and_then(|mut f| f.write_all(self.to_csv_string().as_bytes()))
            .map_err(|source| Error::Io {
                path: path.to_path_buf(),
                source,
            })
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Sum of squared entries.
pub fn frob_norm_sq(m: &DenseMatrix) -> f64 {
    m.data.iter().map(|v| v * v).sum()
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Independent partial sums so the loop is not bound by add latency.
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 8];
    let mut ca = a.chunks_exact(8);
    let mut cb = b.chunks_exact(8);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub(crate) fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Strided read-only view used by [`gemm`].
#[derive(Clone, Copy)]
pub(crate) struct MatRef<'a> {
    data: &'a [f64],
    rows: usize,
    cols: usize,
    row_stride: usize,
    col_stride: usize,
}

impl<'a> MatRef<'a> {
    pub(crate) fn row_major(data: &'a [f64], rows: usize, cols: usize) -> Self {
        assert!(data.len() >= rows * cols);
        Self {
            data,
            rows,
            cols,
            row_stride: cols,
            col_stride: 1,
        }
    }

    pub(crate) fn t(self) -> Self {
        Self {
            data: self.data,
            rows: self.cols,
            cols: self.rows,
            row_stride: self.col_stride,
            col_stride: self.row_stride,
        }
    }
}

/// `c = alpha * a * b + beta * c` with `c` row-major.
pub(crate) fn gemm(alpha: f64, a: MatRef<'_>, b: MatRef<'_>, beta: f64, c: &mut [f64]) {
    assert_eq!(a.cols, b.rows);
    assert!(c.len() >= a.rows * b.cols);
    if a.rows == 0 || b.cols == 0 {
        return;
    }
    // SAFETY: every view was bounds-checked against its backing slice on
    // construction and the output slice holds a.rows * b.cols entries.
    unsafe {
        matrixmultiply::dgemm(
            a.rows,
            a.cols,
            b.cols,
            alpha,
            a.data.as_ptr(),
            a.row_stride as isize,
            a.col_stride as isize,
            b.data.as_ptr(),
            b.row_stride as isize,
            b.col_stride as isize,
            beta,
            c.as_mut_ptr(),
            b.cols as isize,
            1,
        );
    }
}
