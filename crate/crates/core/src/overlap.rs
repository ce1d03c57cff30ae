//! Overlaps of the left Schmidt bases of two bundles at a bond, weighted by
//! their singular values (the Γ matrix), and the truncation bookkeeping read
//! off from it.

use crate::linalg::DenseMatrix;
use crate::mps::{bond_decomposition, BondData, BundledMPS};
use crate::{Error, Result};

/// Singular values below this fraction of the largest are treated as zero.
pub const ZERO_SINGULAR_REL: f64 = 1e-14;
pub const DEFAULT_FLOOR_LOG10: f64 = -16.0;
pub const DEFAULT_THRESHOLD_LOG10: f64 = -8.0;
pub const DEFAULT_ROW_CUTOFF: f64 = 1e-8;

fn check_compatible(a: &BondData, b: &BondData) -> Result<()> {
    if a.sites != b.sites || a.bond != b.bond {
        return Err(Error::validation(format!(
            "bond {} of {} sites cannot be compared with bond {} of {} sites",
            a.bond, a.sites, b.bond, b.sites
        )));
    }
    if a.left_basis.rows() != b.left_basis.rows() {
        return Err(Error::validation("left configuration counts differ"));
    }
    Ok(())
}

/// `ρ^(L)_kl = ⟨u_k^A | u_l^B⟩` over all left configurations.
pub fn left_overlap(a: &BondData, b: &BondData) -> Result<DenseMatrix> {
    check_compatible(a, b)?;
    Ok(a.left_basis.t_matmul(&b.left_basis))
}

/// `ρ^(R)_kl = ⟨v_k^A | v_l^B⟩`; needs equal bundle sizes.
pub fn right_overlap(a: &BondData, b: &BondData) -> Result<DenseMatrix> {
    check_compatible(a, b)?;
    if a.right_basis.rows() != b.right_basis.rows() {
        return Err(Error::validation("right configuration counts differ"));
    }
    Ok(a.right_basis.t_matmul(&b.right_basis))
}

/// Γ for two bundles at one bond, together with what it was built from.
#[derive(Clone, Debug, PartialEq)]
pub struct OverlapMatrix {
    /// `m_A × m_B`
    pub entries: DenseMatrix,
    pub bond: usize,
    pub bundle_a: Vec<usize>,
    pub bundle_b: Vec<usize>,
    /// `1/√g` applied to each bundle's coefficients before decomposition.
    pub scale_a: f64,
    pub scale_b: f64,
    pub singular_values_a: Vec<f64>,
    pub singular_values_b: Vec<f64>,
}

impl OverlapMatrix {
    pub fn rows(&self) -> usize {
        self.entries.rows()
    }

    pub fn cols(&self) -> usize {
        self.entries.cols()
    }
}

fn nonzero_rank(s: &[f64]) -> usize {
    let largest = s.first().copied().unwrap_or(0.0);
    s.iter().take_while(|&&x| x >= ZERO_SINGULAR_REL * largest && x > 0.0).count()
}

/// `Γ_kl = s_k^A ⟨u_k^A|u_l^B⟩ s_l^B` over the non-zero singular values of
/// two precomputed bond decompositions.
pub fn weighted_overlap_from_bonds(a: &BondData, b: &BondData) -> Result<DenseMatrix> {
    let rho = left_overlap(a, b)?;
    let (ma, mb) = (nonzero_rank(&a.singular_values), nonzero_rank(&b.singular_values));
    Ok(DenseMatrix::from_fn(ma, mb, |k, l| {
        a.singular_values[k] * rho[(k, l)] * b.singular_values[l]
    }))
}

/// Γ between two bundles at `bond`.
pub fn weighted_overlap(a: &BundledMPS, b: &BundledMPS, bond: usize) -> Result<OverlapMatrix> {
    if a.sites() != b.sites() {
        return Err(Error::validation("bundles live on chains of different length"));
    }
    let da = bond_decomposition(a, bond)?;
    let db = bond_decomposition(b, bond)?;
    let entries = weighted_overlap_from_bonds(&da, &db)?;
    let ma = entries.rows();
    let mb = entries.cols();
    Ok(OverlapMatrix {
        entries,
        bond,
        bundle_a: a.state_indices().to_vec(),
        bundle_b: b.state_indices().to_vec(),
        scale_a: 1.0 / (a.g() as f64).sqrt(),
        scale_b: 1.0 / (b.g() as f64).sqrt(),
        singular_values_a: da.singular_values[..ma].to_vec(),
        singular_values_b: db.singular_values[..mb].to_vec(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TruncatabilityReport {
    pub cutoff: f64,
    pub threshold_log10: f64,
    pub rows: usize,
    pub cols: usize,
    pub kept_rows: usize,
    pub kept_cols: usize,
    /// Row-major; true where `|Γ_kl| ≥ cutoff`.
    pub mask: Vec<bool>,
    /// Entries with `log10|Γ_kl| > threshold_log10`.
    pub high_weight_count: usize,
}

impl TruncatabilityReport {
    pub fn truncatable_rows(&self) -> usize {
        self.rows - self.kept_rows
    }

    pub fn truncatable_cols(&self) -> usize {
        self.cols - self.kept_cols
    }

    pub fn row_kept(&self, k: usize) -> bool {
        self.mask[k * self.cols..(k + 1) * self.cols].iter().any(|&b| b)
    }

    pub fn col_kept(&self, l: usize) -> bool {
        (0..self.rows).any(|k| self.mask[k * self.cols + l])
    }
}

/// A row (column) of Γ can be dropped when every entry in it is below
/// `cutoff` in magnitude.
pub fn truncatability_report(
    gamma: &OverlapMatrix,
    cutoff: f64,
    threshold_log10: f64,
) -> Result<TruncatabilityReport> {
    if cutoff.is_nan() || cutoff <= 0.0 {
        return Err(Error::validation("truncation cutoff must be positive"));
    }
    let e = &gamma.entries;
    let (rows, cols) = (e.rows(), e.cols());
    let mask: Vec<bool> = e.as_slice().iter().map(|x| x.abs() >= cutoff).collect();
    let high_weight_count = e
        .as_slice()
        .iter()
        .filter(|x| x.abs().log10() > threshold_log10)
        .count();
    let mut report = TruncatabilityReport {
        cutoff,
        threshold_log10,
        rows,
        cols,
        kept_rows: 0,
        kept_cols: 0,
        mask,
        high_weight_count,
    };
    report.kept_rows = (0..rows).filter(|&k| report.row_kept(k)).count();
    report.kept_cols = (0..cols).filter(|&l| report.col_kept(l)).count();
    Ok(report)
}

/// `max(log10|Γ_kl|, floor_log10)`; zeros map to the floor.
pub fn log_abs_matrix(gamma: &DenseMatrix, floor_log10: f64) -> DenseMatrix {
    DenseMatrix::from_fn(gamma.rows(), gamma.cols(), |i, j| {
        let v = gamma[(i, j)].abs();
        if v == 0.0 {
            floor_log10
        } else {
            v.log10().max(floor_log10)
        }
    })
}
