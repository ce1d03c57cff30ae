//! Dense real linear algebra with deterministic conventions.
//!
//! Every decomposition in this module fixes its output ordering and the sign
//! of each vector, so that two runs on identical input agree bit for bit and
//! downstream quantities (state indices, golden files) are stable.
//!
//! - Eigenvalues are ascending; the eigenvector's largest-magnitude entry is
//!   positive. Within a cluster of degenerate eigenvalues the sign-fixed
//!   vectors are ordered lexicographically, largest first.
//! - Singular values are descending; the left singular vector's
//!   largest-magnitude entry is positive and the right vector follows it.

mod eigen;
mod svd;

use std::ops::{Index, IndexMut};

use thiserror::Error;

pub use eigen::{sym_eig, EigDecomposition};
pub use svd::{svd, truncated_svd, SvdDecomposition, TruncatedSvd};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric (max asymmetry {defect:e})")]
    NotSymmetric { defect: f64 },

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    /// A truncation rule discarded every singular value.
    #[error("truncation discarded every singular value")]
    RankZero,

    #[error("eigensolver failed to converge")]
    NoConvergence,
}

/// Real matrix stored in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Wraps row-major `data`, rejecting wrong lengths and non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::Dimension(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(LinalgError::NonFinite {
                row: pos / cols.max(1),
                col: pos % cols.max(1),
            });
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

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
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

    /// Builds a matrix whose columns are the given vectors.
    ///
    /// # Panics
    ///
    /// Panics if the columns have different lengths.
    pub fn from_columns(columns: &[Vec<f64>]) -> Self {
        let rows = columns.first().map_or(0, Vec::len);
        assert!(
            columns.iter().all(|c| c.len() == rows),
            "columns must share one length"
        );
        Self::from_fn(rows, columns.len(), |i, j| columns[j][i])
    }

    /// Internal constructor for buffers already known to be well formed.
    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.data[i * self.cols + j]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// Matrix product `self · rhs`.
    ///
    /// # Panics
    ///
    /// Panics if the inner dimensions disagree.
    pub fn matmul(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(
            self.cols, rhs.rows,
            "matmul: {}x{} times {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = vec![0.0; self.rows * rhs.cols];
        for i in 0..self.rows {
            let out_row = &mut out[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Self::from_raw(self.rows, rhs.cols, out)
    }

    /// Product `selfᵀ · rhs` without materializing the transpose.
    ///
    /// # Panics
    ///
    /// Panics if the row counts disagree.
    pub fn t_matmul(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.rows, rhs.rows, "t_matmul: row counts differ");
        let mut out = vec![0.0; self.cols * rhs.cols];
        for k in 0..self.rows {
            let b_row = rhs.row(k);
            for (i, &a) in self.row(k).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out[i * rhs.cols..(i + 1) * rhs.cols].iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Self::from_raw(self.cols, rhs.cols, out)
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "matvec: length mismatch");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_raw(
            self.rows,
            self.cols,
            self.data.iter().map(|x| x * factor).collect(),
        )
    }

    /// Entry-wise difference `self − rhs`.
    pub fn sub(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "sub: shapes differ");
        Self::from_raw(
            self.rows,
            self.cols,
            self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        )
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Largest entry-wise deviation between two equally shaped matrices.
    pub fn max_abs_diff(&self, rhs: &DenseMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shapes differ");
        self.data
            .iter()
            .zip(&rhs.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// `max |A_ij − A_ji|`; infinite for non-square input.
    pub fn symmetry_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.data[i * n + j] - self.data[j * n + i]).abs());
            }
        }
        worst
    }

    /// `‖AᵀA − I‖_max`, the column-orthonormality defect.
    pub fn orthonormality_defect(&self) -> f64 {
        self.t_matmul(self)
            .max_abs_diff(&DenseMatrix::identity(self.cols))
    }

    /// Copies the leading `cols` columns.
    pub fn leading_columns(&self, cols: usize) -> DenseMatrix {
        assert!(cols <= self.cols);
        Self::from_fn(self.rows, cols, |i, j| self[(i, j)])
    }

    pub(crate) fn check_finite(&self) -> Result<(), LinalgError> {
        match self.data.iter().position(|x| !x.is_finite()) {
            Some(pos) => Err(LinalgError::NonFinite {
                row: pos / self.cols.max(1),
                col: pos % self.cols.max(1),
            }),
            None => Ok(()),
        }
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Index of the entry that decides a vector's sign: the first entry whose
/// magnitude is within a relative `1e-10` of the largest magnitude.
///
/// The relative window keeps analytically tied entries, such as those of
/// `(1, −1)/√2`, from flipping on rounding noise.
pub(crate) fn sign_pivot(v: impl Iterator<Item = f64> + Clone) -> Option<usize> {
    let largest = v.clone().fold(0.0f64, |m, x| m.max(x.abs()));
    if largest == 0.0 {
        return None;
    }
    v.enumerate()
        .find(|(_, x)| x.abs() >= largest * (1.0 - 1e-10))
        .map(|(i, _)| i)
}
