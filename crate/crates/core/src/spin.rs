//! Spin-½ chain Hamiltonians built from Pauli strings.
//!
//! Basis conventions: site 1 is the leftmost Kronecker factor and the most
//! significant bit of a basis index; bit value 0 is spin up (σᶻ = +1).
//! Boundaries are open.

use std::fmt;

use crate::linalg::{sym_eig, DenseMatrix};
use crate::{Error, Result};

/// Largest chain length accepted; the dense 2ᴺ × 2ᴺ matrix must fit in memory.
pub const MAX_SITES: usize = 14;

/// Single-site operator in a Pauli string.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PauliOp {
    Identity,
    X,
    Y,
    Z,
    /// S⁺ = (σˣ + iσʸ)/2, raises ↓ to ↑.
    Plus,
    /// S⁻ = (σˣ − iσʸ)/2, lowers ↑ to ↓.
    Minus,
}

impl PauliOp {
    /// Image of basis bit `bit` with its coefficient, or `None` when the
    /// operator annihilates it. σʸ is returned as the real matrix −iσʸ; the
    /// caller accounts for the dropped factor of i.
    fn act(self, bit: usize) -> Option<(usize, f64)> {
        match (self, bit) {
            (PauliOp::Identity, b) => Some((b, 1.0)),
            (PauliOp::X, b) => Some((b ^ 1, 1.0)),
            (PauliOp::Y, 0) => Some((1, 1.0)),
            (PauliOp::Y, _) => Some((0, -1.0)),
            (PauliOp::Z, 0) => Some((0, 1.0)),
            (PauliOp::Z, _) => Some((1, -1.0)),
            (PauliOp::Plus, 0) | (PauliOp::Minus, 1) => None,
            (PauliOp::Plus, _) => Some((0, 1.0)),
            (PauliOp::Minus, _) => Some((1, 1.0)),
        }
    }
}

/// A validated Pauli string: `(site, operator)` factors with 1-based sites and
/// the real sign produced by an even number of σʸ factors.
#[derive(Clone, Debug)]
struct PauliString {
    /// (bit shift, operator)
    factors: Vec<(usize, PauliOp)>,
    sign: f64,
}

impl PauliString {
    fn new(factors: &[(usize, PauliOp)], sites: usize) -> Result<Self> {
        check_sites(sites)?;
        let mut seen = vec![false; sites + 1];
        for &(site, _) in factors {
            if site == 0 || site > sites {
                return Err(Error::validation(format!(
                    "site {site} outside 1..={sites}"
                )));
            }
            if std::mem::replace(&mut seen[site], true) {
                return Err(Error::validation(format!("site {site} appears twice")));
            }
        }
        let y_count = factors.iter().filter(|f| f.1 == PauliOp::Y).count();
        if y_count % 2 == 1 {
            return Err(Error::Phase { y_count });
        }
        // σʸ = i·(−iσʸ); an even number of factors contributes i^y = ±1.
        let sign = if (y_count / 2) % 2 == 1 { -1.0 } else { 1.0 };
        Ok(Self {
            factors: factors
                .iter()
                .map(|&(site, op)| (sites - site, op))
                .collect(),
            sign,
        })
    }

    /// Image of basis state `col` as (row, amplitude).
    fn apply_to_basis(&self, col: usize) -> Option<(usize, f64)> {
        let mut row = col;
        let mut amp = self.sign;
        for &(shift, op) in &self.factors {
            let (bit, c) = op.act((col >> shift) & 1)?;
            row = (row & !(1 << shift)) | (bit << shift);
            amp *= c;
        }
        Some((row, amp))
    }
}

fn check_sites(sites: usize) -> Result<()> {
    if sites == 0 {
        return Err(Error::validation("a chain needs at least one site"));
    }
    if sites > MAX_SITES {
        return Err(Error::Resource(format!(
            "{sites} sites exceeds the dense limit of {MAX_SITES} (2^{sites} x 2^{sites} matrix)"
        )));
    }
    Ok(())
}

/// Dense 2ᴺ × 2ᴺ Kronecker product of the given factors, identity elsewhere.
pub fn pauli_string(factors: &[(usize, PauliOp)], sites: usize) -> Result<DenseMatrix> {
    let string = PauliString::new(factors, sites)?;
    let dim = 1usize << sites;
    let mut m = DenseMatrix::zeros(dim, dim);
    for col in 0..dim {
        if let Some((row, amp)) = string.apply_to_basis(col) {
            m[(row, col)] = amp;
        }
    }
    Ok(m)
}

/// Applies a Pauli string to a state vector of length 2ᴺ.
pub fn apply_pauli_string(factors: &[(usize, PauliOp)], state: &[f64]) -> Result<Vec<f64>> {
    let sites = sites_for_len(state.len())?;
    let string = PauliString::new(factors, sites)?;
    let mut out = vec![0.0; state.len()];
    for (col, &amp) in state.iter().enumerate() {
        if amp == 0.0 {
            continue;
        }
        if let Some((row, c)) = string.apply_to_basis(col) {
            out[row] += c * amp;
        }
    }
    Ok(out)
}

/// Number of sites for a state vector of length 2ᴺ.
pub fn sites_for_len(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::validation(format!(
            "state length {len} is not 2^N with N >= 1"
        )));
    }
    Ok(len.trailing_zeros() as usize)
}

fn add_pauli_term(
    m: &mut DenseMatrix,
    coeff: f64,
    factors: &[(usize, PauliOp)],
    sites: usize,
) -> Result<()> {
    let string = PauliString::new(factors, sites)?;
    for col in 0..(1usize << sites) {
        if let Some((row, amp)) = string.apply_to_basis(col) {
            m[(row, col)] += coeff * amp;
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModelKind {
    /// H = Σ σᶻᵢσᶻᵢ₊₁ + h_x Σ σˣᵢ
    Tfim { hx: f64 },
    /// H = Σ SˣSˣ + SʸSʸ + Δ SᶻSᶻ on neighbouring sites, S = σ/2.
    Xxz { delta: f64 },
}

/// Model parameters; boundaries are always open.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub sites: usize,
}

impl ModelSpec {
    pub fn tfim(sites: usize, hx: f64) -> Result<Self> {
        Self::new(ModelKind::Tfim { hx }, sites)
    }

    pub fn xxz(sites: usize, delta: f64) -> Result<Self> {
        Self::new(ModelKind::Xxz { delta }, sites)
    }

    pub fn new(kind: ModelKind, sites: usize) -> Result<Self> {
        check_sites(sites)?;
        let param = match kind {
            ModelKind::Tfim { hx } => hx,
            ModelKind::Xxz { delta } => delta,
        };
        if !param.is_finite() {
            return Err(Error::validation("model parameter must be finite"));
        }
        Ok(Self { kind, sites })
    }

    /// Hilbert-space dimension M = 2ᴺ.
    pub fn dimension(&self) -> usize {
        1 << self.sites
    }

    pub fn build(&self) -> Result<Hamiltonian> {
        match self.kind {
            ModelKind::Tfim { hx } => build_tfim(self.sites, hx),
            ModelKind::Xxz { delta } => build_xxz(self.sites, delta),
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ModelKind::Tfim { hx } => write!(f, "TFIM N={} h_x={hx}", self.sites),
            ModelKind::Xxz { delta } => write!(f, "XXZ N={} Delta={delta}", self.sites),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hamiltonian {
    pub spec: ModelSpec,
    pub matrix: DenseMatrix,
}

pub fn build_tfim(sites: usize, hx: f64) -> Result<Hamiltonian> {
    let spec = ModelSpec::tfim(sites, hx)?;
    let dim = spec.dimension();
    let mut h = DenseMatrix::zeros(dim, dim);
    for i in 1..sites {
        add_pauli_term(&mut h, 1.0, &[(i, PauliOp::Z), (i + 1, PauliOp::Z)], sites)?;
    }
    if hx != 0.0 {
        for i in 1..=sites {
            add_pauli_term(&mut h, hx, &[(i, PauliOp::X)], sites)?;
        }
    }
    Ok(Hamiltonian { spec, matrix: h })
}

/// Heisenberg-type chain with SˣSˣ + SʸSʸ written as ½(S⁺S⁻ + S⁻S⁺) so every
/// term is real.
pub fn build_xxz(sites: usize, delta: f64) -> Result<Hamiltonian> {
    let spec = ModelSpec::xxz(sites, delta)?;
    let dim = spec.dimension();
    let mut h = DenseMatrix::zeros(dim, dim);
    for i in 1..sites {
        add_pauli_term(&mut h, 0.5, &[(i, PauliOp::Plus), (i + 1, PauliOp::Minus)], sites)?;
        add_pauli_term(&mut h, 0.5, &[(i, PauliOp::Minus), (i + 1, PauliOp::Plus)], sites)?;
        add_pauli_term(&mut h, 0.25 * delta, &[(i, PauliOp::Z), (i + 1, PauliOp::Z)], sites)?;
    }
    Ok(Hamiltonian { spec, matrix: h })
}

/// Complete spectrum, ascending. State `k` (1-based) is the k-th lowest.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub model: ModelSpec,
    pub energies: Vec<f64>,
    /// Orthonormal eigenvectors as columns.
    pub states: DenseMatrix,
}

pub fn full_spectrum(h: &Hamiltonian) -> Result<Spectrum> {
    let eig = sym_eig(&h.matrix)?;
    Ok(Spectrum {
        model: h.spec,
        energies: eig.eigenvalues,
        states: eig.eigenvectors,
    })
}

impl Spectrum {
    /// Reassembles a spectrum from stored parts, checking shapes.
    pub fn from_parts(model: ModelSpec, energies: Vec<f64>, states: DenseMatrix) -> Result<Self> {
        let m = model.dimension();
        if energies.len() != m || states.rows() != m || states.cols() != m {
            return Err(Error::validation(format!(
                "spectrum parts do not match dimension {m}"
            )));
        }
        Ok(Self {
            model,
            energies,
            states,
        })
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.len() {
            return Err(Error::validation(format!(
                "state index {k} outside 1..={}",
                self.len()
            )));
        }
        Ok(())
    }

    /// Energy of state `k` (1-based).
    pub fn energy(&self, k: usize) -> Result<f64> {
        self.check_index(k)?;
        Ok(self.energies[k - 1])
    }

    /// Amplitudes of state `k` (1-based).
    pub fn state(&self, k: usize) -> Result<Vec<f64>> {
        self.check_index(k)?;
        Ok(self.states.column(k - 1))
    }

    /// The `2ᴺ × g` coefficient matrix of the listed states (1-based).
    pub fn bundle_matrix(&self, indices: &[usize]) -> Result<DenseMatrix> {
        if indices.is_empty() {
            return Err(Error::validation("a bundle needs at least one state"));
        }
        for &k in indices {
            self.check_index(k)?;
        }
        let m = self.len();
        Ok(DenseMatrix::from_fn(m, indices.len(), |i, j| {
            self.states[(i, indices[j] - 1)]
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Explicit Kronecker products of 2×2 matrices, the textbook construction.
    fn kron(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
        DenseMatrix::from_fn(a.rows() * b.rows(), a.cols() * b.cols(), |i, j| {
            a[(i / b.rows(), j / b.cols())] * b[(i % b.rows(), j % b.cols())]
        })
    }

    fn single(op: PauliOp) -> DenseMatrix {
        let d = match op {
            PauliOp::Identity => [1.0, 0.0, 0.0, 1.0],
            PauliOp::X => [0.0, 1.0, 1.0, 0.0],
            // −iσʸ
            PauliOp::Y => [0.0, -1.0, 1.0, 0.0],
            PauliOp::Z => [1.0, 0.0, 0.0, -1.0],
            PauliOp::Plus => [0.0, 1.0, 0.0, 0.0],
            PauliOp::Minus => [0.0, 0.0, 1.0, 0.0],
        };
        DenseMatrix::new(2, 2, d.to_vec()).unwrap()
    }

    fn kron_oracle(factors: &[(usize, PauliOp)], n: usize) -> DenseMatrix {
        let mut m = DenseMatrix::identity(1);
        let mut ys = 0;
        for site in 1..=n {
            let op = factors
                .iter()
                .find(|f| f.0 == site)
                .map_or(PauliOp::Identity, |f| f.1);
            if op == PauliOp::Y {
                ys += 1;
            }
            m = kron(&m, &single(op));
        }
        // (i)^ys with ys even
        m.scaled(if (ys / 2) % 2 == 1 { -1.0 } else { 1.0 })
    }

    #[test]
    fn single_site_sigma_x() {
        let m = pauli_string(&[(1, PauliOp::X)], 1).unwrap();
        assert_eq!(m.as_slice(), &[0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn zz_on_two_sites() {
        let m = pauli_string(&[(1, PauliOp::Z), (2, PauliOp::Z)], 2).unwrap();
        assert_eq!(m, DenseMatrix::from_diag(&[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn commutator_of_x_and_z() {
        let x = pauli_string(&[(1, PauliOp::X)], 1).unwrap();
        let z = pauli_string(&[(1, PauliOp::Z)], 1).unwrap();
        let comm = x.matmul(&z).sub(&z.matmul(&x));
        // −2iσʸ = −2i [[0,−i],[i,0]] = [[0,−2],[2,0]]
        assert_eq!(comm.as_slice(), &[0.0, -2.0, 2.0, 0.0]);
        // the stored real form of σʸ is −iσʸ = [[0,−1],[1,0]]
        assert_eq!(comm, single(PauliOp::Y).scaled(2.0));
    }

    #[test]
    fn strings_match_explicit_kronecker_products() {
        use PauliOp::*;
        let cases: Vec<(Vec<(usize, PauliOp)>, usize)> = vec![
            (vec![(2, X)], 3),
            (vec![(1, Z), (3, X)], 3),
            (vec![(1, Y), (2, Y)], 2),
            (vec![(1, Y), (2, Y), (3, Y), (4, Y)], 4),
            (vec![(2, Plus), (3, Minus)], 4),
            (vec![(1, Minus), (4, Plus), (2, Z)], 4),
            (vec![], 3),
        ];
        for (f, n) in cases {
            assert_eq!(pauli_string(&f, n).unwrap(), kron_oracle(&f, n), "{f:?}");
        }
    }

    #[test]
    fn invalid_strings() {
        assert!(matches!(
            pauli_string(&[(1, PauliOp::X), (1, PauliOp::Z)], 2),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            pauli_string(&[(3, PauliOp::X)], 2),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            pauli_string(&[(1, PauliOp::Y)], 2),
            Err(Error::Phase { y_count: 1 })
        ));
        assert!(matches!(
            pauli_string(&[], MAX_SITES + 1),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn apply_matches_dense_action() {
        let f = [(1, PauliOp::Plus), (3, PauliOp::Minus)];
        let m = pauli_string(&f, 3).unwrap();
        let psi: Vec<f64> = (0..8).map(|k| (k as f64 * 0.37).sin()).collect();
        assert_eq!(apply_pauli_string(&f, &psi).unwrap(), m.matvec(&psi));
    }

    fn energies(h: &Hamiltonian) -> Vec<f64> {
        full_spectrum(h).unwrap().energies
    }

    #[test]
    fn tfim_two_site_anchors() {
        let e = energies(&build_tfim(2, 0.0).unwrap());
        assert_eq!(e, vec![-1.0, -1.0, 1.0, 1.0]);
        let e = energies(&build_tfim(2, 1.0).unwrap());
        let s5 = 5f64.sqrt();
        for (got, want) in e.iter().zip([-s5, -1.0, 1.0, s5]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn single_site_models() {
        assert_eq!(energies(&build_tfim(1, 0.5).unwrap()), vec![-0.5, 0.5]);
        assert_eq!(energies(&build_xxz(1, 1.0).unwrap()), vec![0.0, 0.0]);
        assert!(matches!(build_tfim(0, 0.5), Err(Error::Validation(_))));
    }

    #[test]
    fn xxz_small_chains() {
        let e = energies(&build_xxz(2, 1.0).unwrap());
        for (got, want) in e.iter().zip([-0.75, 0.25, 0.25, 0.25]) {
            assert!((got - want).abs() < 1e-14);
        }
        let e = energies(&build_xxz(3, 1.0).unwrap());
        assert!((e[0] + 1.0).abs() < 1e-13);
    }

    #[test]
    fn xxz_transverse_part_matches_sigma_y_route() {
        // ½(S⁺S⁻ + S⁻S⁺) = ¼(σˣσˣ + σʸσʸ)
        let n = 4;
        let h = build_xxz(n, 0.0).unwrap().matrix;
        let mut alt = DenseMatrix::zeros(16, 16);
        for i in 1..n {
            alt = DenseMatrix::from_fn(16, 16, |r, c| {
                alt[(r, c)]
                    + 0.25 * pauli_string(&[(i, PauliOp::X), (i + 1, PauliOp::X)], n).unwrap()[(r, c)]
                    + 0.25 * pauli_string(&[(i, PauliOp::Y), (i + 1, PauliOp::Y)], n).unwrap()[(r, c)]
            });
        }
        assert!(h.max_abs_diff(&alt) < 1e-15);
    }

    #[test]
    fn energy_sum_rule_and_orthonormal_states() {
        for h in [build_tfim(6, 0.7).unwrap(), build_xxz(6, 1.0).unwrap()] {
            let s = full_spectrum(&h).unwrap();
            let sum: f64 = s.energies.iter().sum();
            let tr = h.matrix.trace();
            assert!((sum - tr).abs() <= 1e-8 * tr.abs().max(1.0));
            assert!(s.states.orthonormality_defect() <= 1e-10);
            let fro = h.matrix.frobenius_norm();
            for k in 1..=s.len() {
                let v = s.state(k).unwrap();
                let hv = h.matrix.matvec(&v);
                let e = s.energy(k).unwrap();
                let res = hv.iter().zip(&v).map(|(a, b)| (a - e * b).powi(2)).sum::<f64>().sqrt();
                assert!(res <= 1e-9 * fro);
            }
        }
    }

    #[test]
    fn tfim_field_sign_is_a_unitary_equivalence() {
        for n in 2..=8 {
            let a = energies(&build_tfim(n, 0.37).unwrap());
            let b = energies(&build_tfim(n, -0.37).unwrap());
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn xxz_conserves_total_sz() {
        let n = 8;
        let h = build_xxz(n, 1.0).unwrap().matrix;
        let sz: Vec<f64> = (0..(1usize << n))
            .map(|b| 0.5 * (n as f64 - 2.0 * b.count_ones() as f64))
            .collect();
        // [H, Sz] = H Sz − Sz H with Sz diagonal
        let comm = DenseMatrix::from_fn(h.rows(), h.cols(), |i, j| h[(i, j)] * (sz[j] - sz[i]));
        assert!(comm.max_abs() <= 1e-12);
    }

    #[test]
    fn spectrum_indexing_is_one_based() {
        let s = full_spectrum(&build_tfim(2, 1.0).unwrap()).unwrap();
        assert!(s.state(0).is_err());
        assert!(s.state(5).is_err());
        assert_eq!(s.energy(1).unwrap(), s.energies[0]);
        let c = s.bundle_matrix(&[1, 4]).unwrap();
        assert_eq!((c.rows(), c.cols()), (4, 2));
        assert!(s.bundle_matrix(&[]).is_err());
    }
}
