use std::cmp::Ordering;

use super::{sign_pivot, DenseMatrix, LinalgError};

/// Relative symmetry tolerance accepted by [`sym_eig`].
const SYMMETRY_TOL: f64 = 1e-12;

/// Eigenvalues closer than this (relative to `max(1, ‖A‖_F)`) are treated as
/// one degenerate cluster for ordering purposes.
const DEGENERACY_TOL: f64 = 1e-12;

/// Eigendecomposition `A = V Λ Vᵀ` of a real symmetric matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct EigDecomposition {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, in eigenvalue order.
    pub eigenvectors: DenseMatrix,
}

impl EigDecomposition {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Eigenvector `k` (0-based).
    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.eigenvectors.column(k)
    }

    /// `V Λ Vᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let v = &self.eigenvectors;
        let scaled = DenseMatrix::from_fn(v.rows(), v.cols(), |i, j| v[(i, j)] * self.eigenvalues[j]);
        scaled.matmul(&v.transpose())
    }
}

/// Full eigendecomposition of a real symmetric matrix.
///
/// The dense solve is delegated to `faer` (blocked tridiagonalization with a
/// divide-and-conquer tridiagonal solver, run sequentially so results are
/// reproducible); ordering and sign conventions are applied here.
pub fn sym_eig(a: &DenseMatrix) -> Result<EigDecomposition, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    a.check_finite()?;
    let n = a.rows();
    if n == 0 {
        return Err(LinalgError::Dimension("empty matrix".into()));
    }
    let defect = a.symmetry_defect();
    if defect > SYMMETRY_TOL * a.max_abs().max(f64::MIN_POSITIVE) {
        return Err(LinalgError::NotSymmetric { defect });
    }

    let mat = faer::Mat::<f64>::from_fn(n, n, |i, j| a[(i, j)]);
    let evd = mat
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|_| LinalgError::NoConvergence)?;
    let values = evd.S().column_vector();
    let vectors = evd.U();

    let mut pairs: Vec<(f64, Vec<f64>)> = (0..n)
        .map(|k| {
            let mut v: Vec<f64> = (0..n).map(|i| vectors[(i, k)]).collect();
            fix_sign(&mut v);
            (values[k], v)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    order_degenerate_clusters(&mut pairs, DEGENERACY_TOL * a.frobenius_norm().max(1.0));

    let eigenvalues = pairs.iter().map(|p| p.0).collect();
    let mut eigenvectors = DenseMatrix::zeros(n, n);
    for (k, (_, v)) in pairs.iter().enumerate() {
        for (i, &x) in v.iter().enumerate() {
            eigenvectors[(i, k)] = x;
        }
    }
    Ok(EigDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

fn fix_sign(v: &mut [f64]) {
    if let Some(p) = sign_pivot(v.iter().copied()) {
        if v[p] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Within each run of eigenvalues spaced by at most `tol`, reorders the
/// vectors lexicographically (largest first) while keeping the eigenvalue list
/// itself ascending.
fn order_degenerate_clusters(pairs: &mut [(f64, Vec<f64>)], tol: f64) {
    let mut start = 0;
    while start < pairs.len() {
        let mut end = start + 1;
        while end < pairs.len() && pairs[end].0 - pairs[end - 1].0 <= tol {
            end += 1;
        }
        if end - start > 1 {
            let cluster = &mut pairs[start..end];
            let mut values: Vec<f64> = cluster.iter().map(|p| p.0).collect();
            cluster.sort_by(|x, y| lexicographic_desc(&x.1, &y.1));
            values.sort_by(f64::total_cmp);
            for (p, v) in cluster.iter_mut().zip(values) {
                p.0 = v;
            }
        }
        start = end;
    }
}

fn lexicographic_desc(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| y.total_cmp(x))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}
