//! Matrix product states built by sequential reshape + SVD, and bundled MPS
//! whose orthogonality center carries an extra excitation index `ξ`.
//!
//! Site tensors are stored with index order `(a_left, σ, ξ, a_right)`,
//! row-major; `ξ` has dimension 1 on every tensor except the center. Sites are
//! numbered from 1, bonds from 1 (bond `i` joins sites `i` and `i + 1`).
//!
//! A bundle of `g` states is scaled by `1/√g` before decomposition, so the
//! squared singular values at every bond sum to one; [`BundledMPS::reconstruct`]
//! undoes the scaling.

use crate::linalg::{sign_pivot, svd, truncated_svd, DenseMatrix};
use crate::spin::sites_for_len;
use crate::{Error, Result};

const PHYS_DIM: usize = 2;
const NORM_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct SiteTensor {
    left: usize,
    phys: usize,
    bundle: usize,
    right: usize,
    data: Vec<f64>,
}

impl SiteTensor {
    pub fn new(left: usize, phys: usize, bundle: usize, right: usize, data: Vec<f64>) -> Result<Self> {
        if left == 0 || phys == 0 || bundle == 0 || right == 0 {
            return Err(Error::validation("site tensor dimensions must be positive"));
        }
        if data.len() != left * phys * bundle * right {
            return Err(Error::validation(format!(
                "site tensor {left}x{phys}x{bundle}x{right} given {} entries",
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::validation("site tensor has non-finite entries"));
        }
        Ok(Self {
            left,
            phys,
            bundle,
            right,
            data,
        })
    }

    pub fn left_dim(&self) -> usize {
        self.left
    }

    pub fn phys_dim(&self) -> usize {
        self.phys
    }

    pub fn bundle_dim(&self) -> usize {
        self.bundle
    }

    pub fn right_dim(&self) -> usize {
        self.right
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, l: usize, s: usize, x: usize, r: usize) -> f64 {
        self.data[((l * self.phys + s) * self.bundle + x) * self.right + r]
    }

    /// `‖Σ_{a,σ} A[a,σ,·]ᵀ A[a,σ,·] − I‖_max`, for tensors without a `ξ` leg.
    pub fn left_normalization_defect(&self) -> f64 {
        self.as_matrix(self.left * self.phys * self.bundle, self.right)
            .orthonormality_defect()
    }

    /// `‖Σ_{σ,a} B[·,σ,a] B[·,σ,a]ᵀ − I‖_max`, for tensors without a `ξ` leg.
    pub fn right_normalization_defect(&self) -> f64 {
        self.as_matrix(self.left, self.phys * self.bundle * self.right)
            .transpose()
            .orthonormality_defect()
    }

    fn as_matrix(&self, rows: usize, cols: usize) -> DenseMatrix {
        DenseMatrix::from_raw(rows, cols, self.data.clone())
    }

    fn from_matrix(left: usize, phys: usize, bundle: usize, right: usize, m: DenseMatrix) -> Self {
        debug_assert_eq!(m.rows() * m.cols(), left * phys * bundle * right);
        Self {
            left,
            phys,
            bundle,
            right,
            data: m.into_vec(),
        }
    }
}

/// An MPS over `N` sites whose center tensor carries a bundle index of size
/// `g`; `g = 1` is an ordinary MPS.
#[derive(Clone, Debug, PartialEq)]
pub struct BundledMPS {
    tensors: Vec<SiteTensor>,
    center: usize,
    g: usize,
    state_indices: Vec<usize>,
    discarded: Vec<f64>,
}

impl BundledMPS {
    /// Reassembles an MPS from stored tensors, checking that bonds chain up
    /// and that only the center carries a bundle leg.
    pub fn from_parts(
        tensors: Vec<SiteTensor>,
        center: usize,
        g: usize,
        state_indices: Vec<usize>,
    ) -> Result<Self> {
        let n = tensors.len();
        if n == 0 {
            return Err(Error::validation("an MPS needs at least one site"));
        }
        if center == 0 || center > n {
            return Err(Error::validation(format!("center {center} outside 1..={n}")));
        }
        if tensors[0].left != 1 || tensors[n - 1].right != 1 {
            return Err(Error::validation("boundary bonds must have dimension 1"));
        }
        for (i, w) in tensors.windows(2).enumerate() {
            if w[0].right != w[1].left {
                return Err(Error::validation(format!("bond {} dimensions disagree", i + 1)));
            }
        }
        for (i, t) in tensors.iter().enumerate() {
            let expected = if i + 1 == center { g } else { 1 };
            if t.bundle != expected {
                return Err(Error::validation(format!(
                    "site {} has bundle dimension {}, expected {expected}",
                    i + 1,
                    t.bundle
                )));
            }
        }
        if !state_indices.is_empty() && state_indices.len() != g {
            return Err(Error::validation("state labels do not match the bundle size"));
        }
        Ok(Self {
            tensors,
            center,
            g,
            state_indices,
            discarded: vec![0.0; n - 1],
        })
    }

    pub fn sites(&self) -> usize {
        self.tensors.len()
    }

    pub fn center(&self) -> usize {
        self.center
    }

    pub fn g(&self) -> usize {
        self.g
    }

    pub fn tensors(&self) -> &[SiteTensor] {
        &self.tensors
    }

    pub fn state_indices(&self) -> &[usize] {
        &self.state_indices
    }

    pub fn with_state_indices(mut self, indices: Vec<usize>) -> Result<Self> {
        if indices.len() != self.g {
            return Err(Error::validation("state labels do not match the bundle size"));
        }
        self.state_indices = indices;
        Ok(self)
    }

    /// Dimension of each bond `1..N−1`.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.sites() - 1].iter().map(|t| t.right).collect()
    }

    /// Squared singular values dropped at each bond during construction.
    pub fn discarded_weights(&self) -> &[f64] {
        &self.discarded
    }

    /// Largest normalization defect over all non-center tensors.
    pub fn normalization_defect(&self) -> f64 {
        self.tensors
            .iter()
            .enumerate()
            .map(|(i, t)| match (i + 1).cmp(&self.center) {
                std::cmp::Ordering::Less => t.left_normalization_defect(),
                std::cmp::Ordering::Greater => t.right_normalization_defect(),
                std::cmp::Ordering::Equal => 0.0,
            })
            .fold(0.0, f64::max)
    }

    /// Contracts the chain into the `2ᴺ × g` coefficient matrix, undoing the
    /// `1/√g` bundle scaling.
    pub fn reconstruct(&self) -> DenseMatrix {
        // Running tensor (configurations, bundle, bond), row-major.
        let (mut p, mut gx, mut a) = (1usize, 1usize, 1usize);
        let mut run = vec![1.0];
        for t in &self.tensors {
            let (d, x, r) = (t.phys, t.bundle, t.right);
            let mut next = vec![0.0; p * d * gx * x * r];
            for pi in 0..p {
                for gi in 0..gx {
                    for ai in 0..a {
                        let w = run[(pi * gx + gi) * a + ai];
                        if w == 0.0 {
                            continue;
                        }
                        for s in 0..d {
                            for xi in 0..x {
                                let src = &t.data[((ai * d + s) * x + xi) * r..][..r];
                                let row = ((pi * d + s) * gx * x + gi * x + xi) * r;
                                for (o, v) in next[row..row + r].iter_mut().zip(src) {
                                    *o += w * v;
                                }
                            }
                        }
                    }
                }
            }
            run = next;
            p *= d;
            gx *= x;
            a = r;
        }
        let scale = (self.g as f64).sqrt();
        DenseMatrix::from_raw(p, gx, run.into_iter().map(|v| v * scale).collect())
    }

    fn move_right(&mut self) -> Result<()> {
        let c = self.center - 1;
        let t = &self.tensors[c];
        let (l, d, x, a) = (t.left, t.phys, t.bundle, t.right);
        let dec = svd(&t.as_matrix(l * d, x * a))?;
        let r = dec.rank();
        let rest = DenseMatrix::from_raw(r * x, a, dec.s_vt().into_vec());
        let next = &self.tensors[c + 1];
        let (d2, a2) = (next.phys, next.right);
        let merged = rest.matmul(&next.as_matrix(a, d2 * a2)).into_vec();
        // (r, x, σ, a') → (r, σ, x, a')
        let mut data = vec![0.0; merged.len()];
        for k in 0..r {
            for xi in 0..x {
                for s in 0..d2 {
                    let src = ((k * x + xi) * d2 + s) * a2;
                    let dst = ((k * d2 + s) * x + xi) * a2;
                    data[dst..dst + a2].copy_from_slice(&merged[src..src + a2]);
                }
            }
        }
        self.tensors[c] = SiteTensor::from_matrix(l, d, 1, r, dec.u);
        self.tensors[c + 1] = SiteTensor {
            left: r,
            phys: d2,
            bundle: x,
            right: a2,
            data,
        };
        self.center += 1;
        Ok(())
    }

    fn move_left(&mut self) -> Result<()> {
        let c = self.center - 1;
        let t = &self.tensors[c];
        let (l, d, x, a) = (t.left, t.phys, t.bundle, t.right);
        // (l, σ, x, a) → (l, x, σ, a)
        let mut perm = vec![0.0; t.data.len()];
        for li in 0..l {
            for s in 0..d {
                for xi in 0..x {
                    let src = ((li * d + s) * x + xi) * a;
                    let dst = ((li * x + xi) * d + s) * a;
                    perm[dst..dst + a].copy_from_slice(&t.data[src..src + a]);
                }
            }
        }
        let dec = svd(&DenseMatrix::from_raw(l * x, d * a, perm))?;
        let r = dec.rank();
        let rest = DenseMatrix::from_raw(l, x * r, dec.u_s().into_vec());
        let prev = &self.tensors[c - 1];
        let (l0, d0) = (prev.left, prev.phys);
        let merged = prev.as_matrix(l0 * d0, l).matmul(&rest);
        self.tensors[c] = SiteTensor::from_matrix(r, d, 1, a, dec.v.transpose());
        self.tensors[c - 1] = SiteTensor::from_matrix(l0, d0, x, r, merged);
        self.center -= 1;
        Ok(())
    }
}

/// Ordinary MPS of a normalized state vector, built left to right; every
/// tensor is left-normalized except the last, which holds the center.
pub fn mps_from_vector(c: &[f64], cutoff: f64) -> Result<BundledMPS> {
    let sites = sites_for_len(c.len())?;
    let m = DenseMatrix::new(c.len(), 1, c.to_vec())?;
    bundled_mps_at(&m, cutoff, sites)
}

/// Bundled MPS of the columns of a `2ᴺ × g` matrix with the center on site
/// `⌈N/2⌉`.
pub fn bundled_mps_from_vectors(c: &DenseMatrix, cutoff: f64) -> Result<BundledMPS> {
    let sites = sites_for_len(c.rows())?;
    bundled_mps_at(c, cutoff, sites.div_ceil(2))
}

/// Bundled MPS with an explicit center site.
///
/// Sites left of the center are split off left to right with `ξ` grouped
/// with the right-hand indices; sites right of the center are then split off
/// right to left, so `ξ` ends on the center tensor.
pub fn bundled_mps_at(c: &DenseMatrix, cutoff: f64, center: usize) -> Result<BundledMPS> {
    if cutoff.is_nan() || cutoff < 0.0 {
        return Err(Error::validation("cutoff must be nonnegative"));
    }
    let sites = sites_for_len(c.rows())?;
    let g = c.cols();
    if g == 0 {
        return Err(Error::validation("a bundle needs at least one state"));
    }
    if center == 0 || center > sites {
        return Err(Error::validation(format!("center {center} outside 1..={sites}")));
    }
    c.check_finite()?;
    for j in 0..g {
        let nrm = crate::linalg::norm(&c.column(j));
        if (nrm - 1.0).abs() > NORM_TOL {
            return Err(Error::validation(format!(
                "bundle column {} has norm {nrm}",
                j + 1
            )));
        }
    }

    let d = PHYS_DIM;
    let scale = 1.0 / (g as f64).sqrt();
    let mut rem: Vec<f64> = c.as_slice().iter().map(|v| v * scale).collect();
    let mut tensors: Vec<Option<SiteTensor>> = vec![None; sites];
    let mut discarded = vec![0.0; sites - 1];

    let mut a = 1;
    for i in 1..center {
        let cols = rem.len() / (a * d);
        let t = truncated_svd(&DenseMatrix::from_raw(a * d, cols, rem), cutoff, None)?;
        discarded[i - 1] = t.discarded_weight;
        let r = t.svd.rank();
        rem = t.svd.s_vt().into_vec();
        tensors[i - 1] = Some(SiteTensor::from_matrix(a, d, 1, r, t.svd.u));
        a = r;
    }

    // (a, σ_c, σ_{c+1..N}, ξ) → (a, σ_c, ξ, σ_{c+1..N})
    let tail = rem.len() / (a * d * g);
    let mut perm = vec![0.0; rem.len()];
    for head in 0..a * d {
        for rest in 0..tail {
            for xi in 0..g {
                perm[(head * g + xi) * tail + rest] = rem[(head * tail + rest) * g + xi];
            }
        }
    }
    rem = perm;

    let mut b = 1;
    for i in (center + 1..=sites).rev() {
        let rows = rem.len() / (d * b);
        let t = truncated_svd(&DenseMatrix::from_raw(rows, d * b, rem), cutoff, None)?;
        discarded[i - 2] = t.discarded_weight;
        let r = t.svd.rank();
        rem = t.svd.u_s().into_vec();
        tensors[i - 1] = Some(SiteTensor::from_matrix(r, d, 1, b, t.svd.v.transpose()));
        b = r;
    }
    tensors[center - 1] = Some(SiteTensor {
        left: a,
        phys: d,
        bundle: g,
        right: b,
        data: rem,
    });

    Ok(BundledMPS {
        tensors: tensors.into_iter().map(|t| t.expect("every site filled")).collect(),
        center,
        g,
        state_indices: Vec::new(),
        discarded,
    })
}

/// Largest bond dimensions an exact decomposition can need: bond `i` gets
/// `min(Π_{x≤i} d'_x, Π_{x>i} d'_x)` where `d'_x = g·d` on the center site.
pub fn max_bond_dimension(sites: usize, d: usize, g: usize, center: usize) -> Result<Vec<usize>> {
    if center == 0 || center > sites {
        return Err(Error::validation(format!("center {center} outside 1..={sites}")));
    }
    let local = |x: usize| if x == center { g * d } else { d };
    let product = |range: std::ops::RangeInclusive<usize>| {
        range.fold(1u128, |p, x| p.saturating_mul(local(x) as u128))
    };
    Ok((1..sites)
        .map(|i| product(1..=i).min(product(i + 1..=sites)) as usize)
        .collect())
}

/// Moves the center (and its `ξ` leg) to `target` by exact SVDs.
pub fn gauge_center(mps: &BundledMPS, target: usize) -> Result<BundledMPS> {
    if target == 0 || target > mps.sites() {
        return Err(Error::validation(format!(
            "gauge target {target} outside 1..={}",
            mps.sites()
        )));
    }
    let mut out = mps.clone();
    while out.center < target {
        out.move_right()?;
    }
    while out.center > target {
        out.move_left()?;
    }
    Ok(out)
}

/// Schmidt decomposition of a (bundled) MPS at one bond.
#[derive(Clone, Debug, PartialEq)]
pub struct BondData {
    pub bond: usize,
    pub sites: usize,
    pub g: usize,
    /// `2^bond × r`, orthonormal columns; row = left configuration.
    pub left_basis: DenseMatrix,
    /// Descending.
    pub singular_values: Vec<f64>,
    /// `(2^{N−bond}·g) × r`, orthonormal columns; row = right configuration
    /// times `g` plus `ξ`.
    pub right_basis: DenseMatrix,
}

impl BondData {
    /// `U diag(s) Vᵀ`, the `2^bond × (2^{N−bond}·g)` scaled coefficient matrix.
    pub fn reconstruct(&self) -> DenseMatrix {
        let us = DenseMatrix::from_fn(self.left_basis.rows(), self.singular_values.len(), |i, k| {
            self.left_basis[(i, k)] * self.singular_values[k]
        });
        us.matmul(&self.right_basis.transpose())
    }

    /// Number of singular values strictly above `threshold`.
    pub fn count_above(&self, threshold: f64) -> usize {
        self.singular_values.iter().filter(|&&s| s > threshold).count()
    }
}

/// Gauges the center onto site `bond` and splits its tensor across the bond,
/// with `ξ` folded into the right-hand group.
pub fn bond_decomposition(mps: &BundledMPS, bond: usize) -> Result<BondData> {
    let n = mps.sites();
    if bond == 0 || bond >= n {
        return Err(Error::validation(format!("bond {bond} outside 1..{n}")));
    }
    let gauged = gauge_center(mps, bond)?;
    let t = &gauged.tensors[bond - 1];
    let (l, d, x, a) = (t.left, t.phys, t.bundle, t.right);
    let dec = svd(&t.as_matrix(l * d, x * a))?;
    let r = dec.rank();

    // Left configurations of sites 1..bond−1 mapped onto bond dimension l.
    let left_env = contract_left(&gauged.tensors[..bond - 1]);
    let left_basis = left_env
        .matmul(&DenseMatrix::from_raw(l, d * r, dec.u.into_vec()))
        .into_vec();
    let mut left_basis = DenseMatrix::from_raw(left_env.rows() * d, r, left_basis);

    // Right configurations of sites bond+1..N mapped from bond dimension a.
    let right_env = contract_right(&gauged.tensors[bond..]);
    let configs = right_env.cols();
    let mut right_basis = DenseMatrix::zeros(configs * x, r);
    for xi in 0..x {
        for ai in 0..a {
            let env_row = right_env.row(ai);
            for k in 0..r {
                let w = dec.v[(xi * a + ai, k)];
                if w == 0.0 {
                    continue;
                }
                for (conf, e) in env_row.iter().enumerate() {
                    right_basis[(conf * x + xi, k)] += w * e;
                }
            }
        }
    }

    // The local SVD fixes signs on U_loc; re-fix them on the full left
    // vectors so Γ entries do not depend on the gauge history.
    for k in 0..r {
        let col = left_basis.column(k);
        if let Some(p) = sign_pivot(col.iter().copied()) {
            if col[p] < 0.0 {
                for i in 0..left_basis.rows() {
                    left_basis[(i, k)] = -left_basis[(i, k)];
                }
                for i in 0..right_basis.rows() {
                    right_basis[(i, k)] = -right_basis[(i, k)];
                }
            }
        }
    }

    Ok(BondData {
        bond,
        sites: n,
        g: gauged.g,
        left_basis,
        singular_values: dec.s,
        right_basis,
    })
}

/// `2^k × a` matrix of left-normalized tensors contracted over their bonds.
fn contract_left(tensors: &[SiteTensor]) -> DenseMatrix {
    let mut env = DenseMatrix::identity(1);
    for t in tensors {
        let next = env.matmul(&t.as_matrix(t.left, t.phys * t.right));
        env = DenseMatrix::from_raw(env.rows() * t.phys, t.right, next.into_vec());
    }
    env
}

/// `a × 2^k` matrix of right-normalized tensors contracted over their bonds.
fn contract_right(tensors: &[SiteTensor]) -> DenseMatrix {
    let mut env = DenseMatrix::identity(1);
    for t in tensors.iter().rev() {
        // (a, σ, b) · (b, configs) → (a, σ, configs)
        let next = t
            .as_matrix(t.left * t.phys, t.right)
            .matmul(&env);
        env = DenseMatrix::from_raw(t.left, t.phys * env.cols(), next.into_vec());
    }
    env
}
