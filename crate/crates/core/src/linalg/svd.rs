//! One-sided (Hestenes) Jacobi SVD.
//!
//! The columns of a tall matrix are rotated pairwise until they are mutually
//! orthogonal; the column norms are then the singular values. Orthogonality is
//! enforced relative to the column norms, so small singular values keep full
//! relative accuracy instead of drowning in `ε·σ₁` noise as they would if
//! `AᵀA` were formed. Wide matrices are handled through their transpose.

use super::{dot, sign_pivot, DenseMatrix, LinalgError};

const MAX_SWEEPS: usize = 80;

/// Thin SVD `A = U diag(s) Vᵀ` with `min(rows, cols)` singular triplets.
#[derive(Clone, Debug, PartialEq)]
pub struct SvdDecomposition {
    /// `rows × r`, orthonormal columns.
    pub u: DenseMatrix,
    /// Descending, nonnegative.
    pub s: Vec<f64>,
    /// `cols × r`, orthonormal columns.
    pub v: DenseMatrix,
}

impl SvdDecomposition {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// `U diag(s) Vᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let us = DenseMatrix::from_fn(self.u.rows(), self.u.cols(), |i, j| self.u[(i, j)] * self.s[j]);
        us.matmul(&self.v.transpose())
    }

    /// Keeps the leading `k` triplets.
    pub fn truncate(&self, k: usize) -> SvdDecomposition {
        let k = k.min(self.rank());
        SvdDecomposition {
            u: self.u.leading_columns(k),
            s: self.s[..k].to_vec(),
            v: self.v.leading_columns(k),
        }
    }

    /// `diag(s) Vᵀ`, the `r × cols` factor carried forward in sweeps.
    pub fn s_vt(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.rank(), self.v.rows(), |i, j| self.s[i] * self.v[(j, i)])
    }

    /// `U diag(s)`, the `rows × r` factor carried backward in sweeps.
    pub fn u_s(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.u.rows(), self.rank(), |i, j| self.u[(i, j)] * self.s[j])
    }
}

/// Result of [`truncated_svd`].
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedSvd {
    pub svd: SvdDecomposition,
    /// Sum of the squared discarded singular values.
    pub discarded_weight: f64,
}

/// Full thin SVD.
pub fn svd(a: &DenseMatrix) -> Result<SvdDecomposition, LinalgError> {
    a.check_finite()?;
    let (rows, cols) = (a.rows(), a.cols());
    if rows >= cols {
        let (u, s, v) = jacobi_tall(rows, cols, |i, j| a[(i, j)]);
        Ok(finish(u, s, v))
    } else {
        let (v, s, u) = jacobi_tall(cols, rows, |i, j| a[(j, i)]);
        Ok(finish(u, s, v))
    }
}

/// SVD keeping the singular values `s_k > cutoff · s_1`, at most `max_rank`
/// of them. A zero cutoff keeps every singular value, zeros included.
pub fn truncated_svd(
    a: &DenseMatrix,
    cutoff: f64,
    max_rank: Option<usize>,
) -> Result<TruncatedSvd, LinalgError> {
    assert!(cutoff >= 0.0, "cutoff must be nonnegative");
    let full = svd(a)?;
    let largest = full.s.first().copied().unwrap_or(0.0);
    let mut keep = if cutoff == 0.0 {
        full.rank()
    } else {
        full.s.iter().take_while(|&&s| s > cutoff * largest).count()
    };
    if let Some(cap) = max_rank {
        keep = keep.min(cap);
    }
    if keep == 0 {
        return Err(LinalgError::RankZero);
    }
    let discarded_weight = full.s[keep..].iter().map(|s| s * s).sum();
    Ok(TruncatedSvd {
        svd: full.truncate(keep),
        discarded_weight,
    })
}

/// Column-major working storage for a `rows × cols` matrix, `rows ≥ cols`.
/// Returns (U columns, singular values, V columns), unsorted.
fn jacobi_tall(
    rows: usize,
    cols: usize,
    entry: impl Fn(usize, usize) -> f64,
) -> (Vec<Vec<f64>>, Vec<f64>, Vec<Vec<f64>>) {
    let mut a: Vec<Vec<f64>> = (0..cols)
        .map(|j| (0..rows).map(|i| entry(i, j)).collect())
        .collect();
    let mut v: Vec<Vec<f64>> = (0..cols)
        .map(|j| (0..cols).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let tol = f64::EPSILON * (rows as f64).sqrt();
    let mut norms: Vec<f64> = a.iter().map(|c| dot(c, c)).collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let alpha = norms[p];
                let beta = norms[q];
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = dot(&a[p], &a[q]);
                if gamma.abs() <= tol * (alpha.sqrt() * beta.sqrt()) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + 1f64.hypot(zeta));
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = a.split_at_mut(q);
                rotate(&mut lo[p], &mut hi[0], c, s);
                let (lo, hi) = v.split_at_mut(q);
                rotate(&mut lo[p], &mut hi[0], c, s);
                norms[p] = dot(&a[p], &a[p]);
                norms[q] = dot(&a[q], &a[q]);
            }
        }
        if !rotated {
            break;
        }
    }

    let sigma: Vec<f64> = norms.iter().map(|x| x.sqrt()).collect();
    for (col, &s) in a.iter_mut().zip(&sigma) {
        if s > 0.0 {
            col.iter_mut().for_each(|x| *x /= s);
        }
    }
    (a, sigma, v)
}

fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (xi, yi) in x.iter_mut().zip(y.iter_mut()) {
        let (a, b) = (*xi, *yi);
        *xi = c * a - s * b;
        *yi = s * a + c * b;
    }
}

/// Sorts descending, completes null vectors, fixes signs, packs.
fn finish(mut u: Vec<Vec<f64>>, s: Vec<f64>, mut v: Vec<Vec<f64>>) -> SvdDecomposition {
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]).then(i.cmp(&j)));
    let s: Vec<f64> = order.iter().map(|&k| s[k]).collect();
    let mut u: Vec<Vec<f64>> = order.iter().map(|&k| std::mem::take(&mut u[k])).collect();
    let mut v: Vec<Vec<f64>> = order.iter().map(|&k| std::mem::take(&mut v[k])).collect();

    complete_null_columns(&mut u);
    complete_null_columns(&mut v);
    for (uc, vc) in u.iter_mut().zip(v.iter_mut()) {
        if let Some(p) = sign_pivot(uc.iter().copied()) {
            if uc[p] < 0.0 {
                uc.iter_mut().for_each(|x| *x = -*x);
                vc.iter_mut().for_each(|x| *x = -*x);
            }
        }
    }
    SvdDecomposition {
        u: DenseMatrix::from_columns(&u),
        s,
        v: DenseMatrix::from_columns(&v),
    }
}

/// Replaces all-zero singular vectors (those of exactly-zero singular values)
/// by unit vectors orthogonal to all others, via Gram–Schmidt on the standard
/// basis.
fn complete_null_columns(u: &mut [Vec<f64>]) {
    let rows = u.first().map_or(0, Vec::len);
    let is_zero = |c: &[f64]| c.iter().all(|&x| x == 0.0);
    let mut candidate = 0;
    for k in 0..u.len() {
        if !is_zero(&u[k]) {
            continue;
        }
        loop {
            assert!(candidate < rows, "ran out of completion vectors");
            let mut e = vec![0.0; rows];
            e[candidate] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for (j, other) in u.iter().enumerate() {
                    if j == k || (j > k && is_zero(other)) {
                        continue;
                    }
                    let proj = dot(&e, other);
                    e.iter_mut().zip(other).for_each(|(x, o)| *x -= proj * o);
                }
            }
            let n = dot(&e, &e).sqrt();
            if n > 0.5 {
                e.iter_mut().for_each(|x| *x /= n);
                u[k] = e;
                break;
            }
        }
    }
}
