//! One-body reduced density matrices of spin chains and the quantities built
//! on their eigenbases (natural orbitals).
//!
//! For spin-½ chains the one-body density matrix is `ρ_ij = ⟨ψ|S⁺ᵢ S⁻ⱼ|ψ⟩`.
//! It can be evaluated either by applying the operators to the state or by
//! contracting amplitudes over every spectator site; both routes are offered
//! and must agree.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use crate::linalg::{dot, norm, sym_eig, DenseMatrix};
use crate::spin::{apply_pauli_string, sites_for_len, PauliOp};
use crate::{Error, Result};

const NORM_TOL: f64 = 1e-10;

/// Default tolerance of [`similarity_classifier`].
pub const DEFAULT_SIMILARITY_TOL: f64 = 0.1;

/// Own-basis truncation error below which an orbital basis is considered
/// sufficient when choosing `m` automatically.
pub const DEFAULT_TRUNCATION_TARGET: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RdmMethod {
    /// `⟨ψ|S⁺ᵢ S⁻ⱼ|ψ⟩` by applying both operators to the state vector.
    OperatorForm,
    /// Two-site amplitude products summed over all spectator sites.
    ContractionForm,
}

/// Real symmetric positive-semidefinite density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: DenseMatrix,
    trace: f64,
    basis_label: String,
}

impl DensityMatrix {
    /// Validates symmetry (1e-12 relative) and positivity (eigenvalues ≥ −1e-10).
    pub fn new(matrix: DenseMatrix, basis_label: impl Into<String>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::validation("density matrix must be square"));
        }
        let scale = matrix.max_abs().max(1.0);
        if matrix.symmetry_defect() > 1e-12 * scale {
            return Err(Error::validation("density matrix is not symmetric"));
        }
        let lowest = sym_eig(&matrix)?.eigenvalues[0];
        if lowest < -1e-10 {
            return Err(Error::validation(format!(
                "density matrix has negative eigenvalue {lowest:e}"
            )));
        }
        let trace = matrix.trace();
        Ok(Self {
            matrix,
            trace,
            basis_label: basis_label.into(),
        })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.trace
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn basis_label(&self) -> &str {
        &self.basis_label
    }

    /// `Φᵀ ρ Φ`, this density matrix expressed in an orbital basis.
    pub fn rotated(&self, basis: &NaturalOrbitalSet) -> Result<DenseMatrix> {
        basis.check_dim(self.dim())?;
        let phi = &basis.orbitals;
        Ok(phi.t_matmul(&self.matrix.matmul(phi)))
    }
}

/// Computes the N × N one-body reduced density matrix of a normalized state.
pub fn one_body_rdm(state: &[f64], method: RdmMethod) -> Result<DensityMatrix> {
    let n = sites_for_len(state.len())?;
    let nrm = norm(state);
    if (nrm - 1.0).abs() > NORM_TOL {
        return Err(Error::validation(format!(
            "state norm {nrm} differs from 1"
        )));
    }
    let matrix = match method {
        RdmMethod::OperatorForm => operator_form(state, n)?,
        RdmMethod::ContractionForm => contraction_form(state, n),
    };
    let trace = matrix.trace();
    Ok(DensityMatrix {
        matrix,
        trace,
        basis_label: "site".into(),
    })
}

fn operator_form(state: &[f64], n: usize) -> Result<DenseMatrix> {
    let mut rho = DenseMatrix::zeros(n, n);
    for j in 1..=n {
        let lowered = apply_pauli_string(&[(j, PauliOp::Minus)], state)?;
        for i in 1..=n {
            let raised = apply_pauli_string(&[(i, PauliOp::Plus)], &lowered)?;
            rho[(i - 1, j - 1)] = dot(state, &raised);
        }
    }
    Ok(rho)
}

fn contraction_form(state: &[f64], n: usize) -> DenseMatrix {
    let mut rho = DenseMatrix::zeros(n, n);
    let bit = |site: usize| 1usize << (n - site);
    for i in 1..=n {
        // One-site block W[σ, σ'] summed over the other sites; keep W[↑, ↑].
        let bi = bit(i);
        rho[(i - 1, i - 1)] = (0..state.len())
            .filter(|c| c & bi == 0)
            .map(|c| state[c] * state[c])
            .sum();
        for j in (i + 1)..=n {
            // Two-site block W[σᵢσⱼ, σᵢ'σⱼ'] summed over spectators; the
            // S⁺ᵢS⁻ⱼ element pairs (↑ᵢ ↓ⱼ) with (↓ᵢ ↑ⱼ).
            let bj = bit(j);
            let mut w = 0.0;
            for rest in 0..state.len() {
                if rest & (bi | bj) != 0 {
                    continue;
                }
                w += state[rest | bj] * state[rest | bi];
            }
            rho[(i - 1, j - 1)] = w;
            rho[(j - 1, i - 1)] = w;
        }
    }
    rho
}

/// Eigenvectors of a density matrix ordered by descending occupation.
#[derive(Clone, Debug, PartialEq)]
pub struct NaturalOrbitalSet {
    /// Descending.
    pub occupations: Vec<f64>,
    /// Orthonormal columns, one per occupation.
    pub orbitals: DenseMatrix,
    /// Eigenstate the density matrix came from, when known (1-based).
    pub source_state: Option<usize>,
    /// Trace of the density matrix that produced this basis.
    pub source_trace: f64,
    fingerprint: u64,
}

impl NaturalOrbitalSet {
    pub fn dim(&self) -> usize {
        self.occupations.len()
    }

    pub fn with_source(mut self, state: usize) -> Self {
        self.source_state = Some(state);
        self
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::validation(format!(
                "orbital basis has dimension {}, density matrix {dim}",
                self.dim()
            )));
        }
        Ok(())
    }

    fn check_rank(&self, m: usize) -> Result<()> {
        if m == 0 || m > self.dim() {
            return Err(Error::validation(format!(
                "truncation rank {m} outside 1..={}",
                self.dim()
            )));
        }
        Ok(())
    }

    /// Number of occupations strictly above `threshold`.
    pub fn count_above(&self, threshold: f64) -> usize {
        self.occupations.iter().filter(|&&x| x > threshold).count()
    }

    /// Smallest `m` whose own-basis truncation error is below `target`.
    pub fn rank_for_target(&self, target: f64) -> usize {
        let total: f64 = self.occupations.iter().sum();
        let mut kept = 0.0;
        for (k, occ) in self.occupations.iter().enumerate() {
            kept += occ;
            if total - kept < target {
                return k + 1;
            }
        }
        self.dim()
    }
}

pub fn natural_orbitals(rho: &DensityMatrix) -> Result<NaturalOrbitalSet> {
    let eig = sym_eig(rho.matrix())?;
    let n = eig.len();
    let occupations: Vec<f64> = eig.eigenvalues.iter().rev().copied().collect();
    let orbitals = DenseMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, n - 1 - j)]);
    let mut hasher = DefaultHasher::new();
    for x in occupations.iter().chain(orbitals.as_slice()) {
        x.to_bits().hash(&mut hasher);
    }
    Ok(NaturalOrbitalSet {
        occupations,
        orbitals,
        source_state: None,
        source_trace: rho.trace(),
        fingerprint: hasher.finish(),
    })
}

/// `Σ_{k ≤ m} ⟨Φ_k| ρ |Φ_k⟩` over the `m` leading orbitals of `basis`.
pub fn truncated_trace(rho: &DensityMatrix, basis: &NaturalOrbitalSet, m: usize) -> Result<f64> {
    basis.check_dim(rho.dim())?;
    basis.check_rank(m)?;
    Ok((0..m)
        .map(|k| {
            let phi = basis.orbitals.column(k);
            dot(&phi, &rho.matrix().matvec(&phi))
        })
        .sum())
}

/// Identifies the (orbital basis, rank) a truncation error was computed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BasisHandle {
    fingerprint: u64,
    pub m: usize,
}

/// A truncation error tagged with the basis it was evaluated in.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationError {
    pub value: f64,
    pub basis: BasisHandle,
}

/// `δ = Tr ρ − Tr_m ρ` in the leading `m` orbitals of `basis`.
pub fn truncation_error(
    rho: &DensityMatrix,
    basis: &NaturalOrbitalSet,
    m: usize,
) -> Result<TruncationError> {
    let kept = truncated_trace(rho, basis, m)?;
    Ok(TruncationError {
        value: rho.trace() - kept,
        basis: BasisHandle {
            fingerprint: basis.fingerprint,
            m,
        },
    })
}

/// `r = |δ_α − δ_β|`; both errors must come from the same basis and rank.
pub fn relative_truncation(a: &TruncationError, b: &TruncationError) -> Result<f64> {
    if a.basis != b.basis {
        return Err(Error::BasisMismatch);
    }
    Ok((a.value - b.value).abs())
}

/// `U = Φ_αᵀ Φ_β`, the orthogonal map between two natural-orbital sets of
/// density matrices with equal trace.
pub fn connecting_unitary(a: &NaturalOrbitalSet, b: &NaturalOrbitalSet) -> Result<DenseMatrix> {
    if a.dim() != b.dim() {
        return Err(Error::validation("orbital sets have different dimensions"));
    }
    if (a.source_trace - b.source_trace).abs() > 1e-8 {
        return Err(Error::TraceMismatch {
            left: a.source_trace,
            right: b.source_trace,
        });
    }
    Ok(a.orbitals.t_matmul(&b.orbitals))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Similarity {
    Similar,
    Dissimilar,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimilarityVerdict {
    pub verdict: Similarity,
    /// `‖U[..m, m..]‖²_F + ‖U[m.., ..m]‖²_F`
    pub off_block_mass: f64,
    pub m: usize,
    pub tolerance: f64,
}

/// Tests whether `U` is close to a direct sum `W ⊕ P` with `W` of size m × m.
pub fn similarity_classifier(u: &DenseMatrix, m: usize, tol: f64) -> Result<SimilarityVerdict> {
    if !u.is_square() {
        return Err(Error::validation("connecting unitary must be square"));
    }
    let n = u.rows();
    if m == 0 || m >= n {
        return Err(Error::validation(format!("block size {m} outside 1..{n}")));
    }
    let defect = u.orthonormality_defect();
    if defect > 1e-8 {
        return Err(Error::validation(format!(
            "matrix is not orthogonal (defect {defect:e})"
        )));
    }
    let mut mass = 0.0;
    for i in 0..n {
        for j in 0..n {
            if (i < m) != (j < m) {
                mass += u[(i, j)] * u[(i, j)];
            }
        }
    }
    Ok(SimilarityVerdict {
        verdict: if mass < tol {
            Similarity::Similar
        } else {
            Similarity::Dissimilar
        },
        off_block_mass: mass,
        m,
        tolerance: tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::random_state;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dm(d: &[f64]) -> DensityMatrix {
        DensityMatrix::new(DenseMatrix::from_diag(d), "site").unwrap()
    }

    #[test]
    fn triplet_state_rdm() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // basis order ↑↑, ↑↓, ↓↑, ↓↓
        let psi = [0.0, s, s, 0.0];
        for method in [RdmMethod::OperatorForm, RdmMethod::ContractionForm] {
            let rho = one_body_rdm(&psi, method).unwrap();
            assert!(rho.matrix().max_abs_diff(&DenseMatrix::from_fn(2, 2, |_, _| 0.5)) < 1e-15);
            let no = natural_orbitals(&rho).unwrap();
            assert!((no.occupations[0] - 1.0).abs() < 1e-15);
            assert!(no.occupations[1].abs() < 1e-15);
        }
    }

    #[test]
    fn polarized_state_rdm_is_identity() {
        let psi = [1.0, 0.0, 0.0, 0.0];
        for method in [RdmMethod::OperatorForm, RdmMethod::ContractionForm] {
            let rho = one_body_rdm(&psi, method).unwrap();
            assert_eq!(rho.matrix(), &DenseMatrix::identity(2));
        }
    }

    #[test]
    fn two_forms_agree_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for n in [3, 5, 8] {
            let psi = random_state(n, &mut rng);
            let a = one_body_rdm(&psi, RdmMethod::OperatorForm).unwrap();
            let b = one_body_rdm(&psi, RdmMethod::ContractionForm).unwrap();
            assert!(a.matrix().max_abs_diff(b.matrix()) <= 1e-12);
        }
    }

    #[test]
    fn unnormalized_state_is_rejected() {
        assert!(one_body_rdm(&[1.0, 1.0], RdmMethod::OperatorForm).is_err());
        assert!(one_body_rdm(&[1.0, 0.0, 0.0], RdmMethod::OperatorForm).is_err());
    }

    #[test]
    fn diagonal_natural_orbitals() {
        let no = natural_orbitals(&dm(&[0.2, 0.7, 0.1])).unwrap();
        assert_eq!(no.occupations, vec![0.7, 0.2, 0.1]);
        let perm = DenseMatrix::new(3, 3, vec![0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(no.orbitals, perm);
    }

    #[test]
    fn truncated_traces_and_errors() {
        let rho = dm(&[0.9, 0.09, 0.01]);
        let own = natural_orbitals(&rho).unwrap();
        assert!((truncated_trace(&rho, &own, 2).unwrap() - 0.99).abs() < 1e-15);
        assert!((truncated_trace(&rho, &own, 3).unwrap() - rho.trace()).abs() < 1e-15);
        let d = truncation_error(&rho, &own, 2).unwrap();
        assert!((d.value - 0.01).abs() < 1e-15);
        assert!(truncation_error(&rho, &own, 3).unwrap().value.abs() < 1e-10);
        assert!(truncated_trace(&rho, &own, 0).is_err());
        assert!(truncated_trace(&rho, &own, 4).is_err());
    }

    #[test]
    fn relative_truncation_requires_a_shared_basis() {
        let a = dm(&[0.9, 0.09, 0.01]);
        let b = dm(&[0.6, 0.396, 0.004]);
        let basis = natural_orbitals(&a).unwrap();
        let other = natural_orbitals(&dm(&[0.1, 0.2, 0.7])).unwrap();
        let da = truncation_error(&a, &basis, 2).unwrap();
        let db = truncation_error(&b, &basis, 2).unwrap();
        assert!((relative_truncation(&da, &db).unwrap() - 0.006).abs() < 1e-15);
        assert_eq!(relative_truncation(&da, &da).unwrap(), 0.0);
        assert_eq!(
            relative_truncation(&da, &db).unwrap(),
            relative_truncation(&db, &da).unwrap()
        );
        let elsewhere = truncation_error(&b, &other, 2).unwrap();
        assert!(matches!(relative_truncation(&da, &elsewhere), Err(Error::BasisMismatch)));
        let other_rank = truncation_error(&b, &basis, 1).unwrap();
        assert!(matches!(relative_truncation(&da, &other_rank), Err(Error::BasisMismatch)));
    }

    #[test]
    fn connecting_unitary_cases() {
        let a = natural_orbitals(&dm(&[0.5, 0.3, 0.2])).unwrap();
        assert_eq!(connecting_unitary(&a, &a).unwrap(), DenseMatrix::identity(3));
        // Same trace, first two orbitals swapped.
        let b = natural_orbitals(&dm(&[0.3, 0.5, 0.2])).unwrap();
        let u = connecting_unitary(&a, &b).unwrap();
        let swap = DenseMatrix::new(3, 3, vec![0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(u, swap);
        let c = natural_orbitals(&dm(&[0.3, 0.5, 0.3])).unwrap();
        assert!(matches!(connecting_unitary(&a, &c), Err(Error::TraceMismatch { .. })));
    }

    #[test]
    fn classifier_cases() {
        let v = similarity_classifier(&DenseMatrix::identity(4), 2, 0.1).unwrap();
        assert_eq!(v.verdict, Similarity::Similar);
        assert_eq!(v.off_block_mass, 0.0);
        let mut swap = DenseMatrix::identity(4);
        swap[(0, 0)] = 0.0;
        swap[(3, 3)] = 0.0;
        swap[(0, 3)] = 1.0;
        swap[(3, 0)] = 1.0;
        let v = similarity_classifier(&swap, 1, 0.1).unwrap();
        assert_eq!(v.verdict, Similarity::Dissimilar);
        assert_eq!(v.off_block_mass, 2.0);
        assert!(similarity_classifier(&DenseMatrix::identity(4), 4, 0.1).is_err());
        assert!(similarity_classifier(&DenseMatrix::identity(4).scaled(2.0), 1, 0.1).is_err());
    }

    #[test]
    fn rank_selection() {
        let no = natural_orbitals(&dm(&[0.9, 0.0995, 0.0005])).unwrap();
        assert_eq!(no.rank_for_target(1e-3), 2);
        assert_eq!(no.count_above(1e-3), 2);
        assert_eq!(no.rank_for_target(1e-4), 3);
    }
}
