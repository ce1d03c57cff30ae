//! Energy differences expressed through density matrices in a truncated
//! orbital basis, the element-wise bound they obey, and a harness that checks
//! the metric axioms for an arbitrary distance function.

use std::fmt;

use crate::density::{DensityMatrix, NaturalOrbitalSet};
use crate::linalg::DenseMatrix;
use crate::{Error, Result};

/// Slack allowed by [`metric_axiom_suite`] before an axiom counts as violated.
pub const AXIOM_TOL: f64 = 1e-10;

/// On-site coefficients `C_i` of an ultra-local Hamiltonian.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalCouplings {
    values: Vec<f64>,
    c_max: f64,
}

impl LocalCouplings {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::validation("couplings must not be empty"));
        }
        if values.iter().any(|c| !c.is_finite()) {
            return Err(Error::validation("couplings must be finite"));
        }
        let c_max = values.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        Ok(Self { values, c_max })
    }

    /// `C_i = 1` on every site.
    pub fn uniform(sites: usize) -> Self {
        Self {
            values: vec![1.0; sites],
            c_max: if sites == 0 { 0.0 } else { 1.0 },
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn c_max(&self) -> f64 {
        self.c_max
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EnergyForm {
    /// Only diagonal entries of the rotated density matrices contribute.
    #[default]
    UltraLocal,
    /// Keeps the off-diagonal `k ≠ ℓ` terms inside the truncated block.
    Full,
}

/// Rotates both density matrices into `basis` and returns the difference
/// `ρ̃_α − ρ̃_β` restricted to the leading `m` orbitals.
fn rotated_difference(
    rho_a: &DensityMatrix,
    rho_b: &DensityMatrix,
    basis: &NaturalOrbitalSet,
    m: usize,
) -> Result<DenseMatrix> {
    if rho_a.dim() != rho_b.dim() {
        return Err(Error::validation("density matrices have different dimensions"));
    }
    if m == 0 || m > rho_a.dim() {
        return Err(Error::validation(format!(
            "truncation rank {m} outside 1..={}",
            rho_a.dim()
        )));
    }
    let ra = rho_a.rotated(basis)?;
    let rb = rho_b.rotated(basis)?;
    Ok(DenseMatrix::from_fn(m, m, |k, l| ra[(k, l)] - rb[(k, l)]))
}

/// `ΔE^{(m)}_{αβ;γ}` for couplings `C`, in the ultra-local or full form.
///
/// Ultra-local: `Σ_i Σ_{k≤m} C_i (ρ̃_α − ρ̃_β)_kk |Φ_k(i)|²`.
/// Full: `Σ_i Σ_{k,ℓ≤m} C_i (ρ̃_α − ρ̃_β)_kℓ Φ_k(i) Φ_ℓ(i)`.
pub fn energy_difference_truncated(
    rho_a: &DensityMatrix,
    rho_b: &DensityMatrix,
    basis: &NaturalOrbitalSet,
    m: usize,
    couplings: &LocalCouplings,
    form: EnergyForm,
) -> Result<f64> {
    let diff = rotated_difference(rho_a, rho_b, basis, m)?;
    if couplings.len() != rho_a.dim() {
        return Err(Error::validation(format!(
            "{} couplings for {} sites",
            couplings.len(),
            rho_a.dim()
        )));
    }
    let phi = &basis.orbitals;
    let c = couplings.values();
    let mut total = 0.0;
    for k in 0..m {
        let ls = match form {
            EnergyForm::UltraLocal => k..k + 1,
            EnergyForm::Full => 0..m,
        };
        for l in ls {
            let weight: f64 = (0..c.len()).map(|i| c[i] * phi[(i, k)] * phi[(i, l)]).sum();
            total += diff[(k, l)] * weight;
        }
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrobeniusBound {
    /// `|ΔE^{(m)}| / c_max`
    pub lhs: f64,
    /// `Σ_{k,ℓ≤m} |ρ̃_α − ρ̃_β|_kℓ`
    pub rhs: f64,
    pub holds: bool,
}

/// Checks `|ΔE^{(m)}| / c_max ≤ Σ_{k,ℓ≤m} |(ρ̃_α − ρ̃_β)_kℓ|`.
pub fn frobenius_bound_check(
    rho_a: &DensityMatrix,
    rho_b: &DensityMatrix,
    basis: &NaturalOrbitalSet,
    m: usize,
    couplings: &LocalCouplings,
    form: EnergyForm,
) -> Result<FrobeniusBound> {
    if couplings.c_max() == 0.0 {
        return Err(Error::ZeroNormalization);
    }
    let de = energy_difference_truncated(rho_a, rho_b, basis, m, couplings, form)?;
    let diff = rotated_difference(rho_a, rho_b, basis, m)?;
    let lhs = de.abs() / couplings.c_max();
    let rhs: f64 = diff.as_slice().iter().map(|x| x.abs()).sum();
    Ok(FrobeniusBound {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-10,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Axiom {
    Identity,
    NonNegativity,
    Symmetry,
    Triangle,
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axiom::Identity => "identity",
            Axiom::NonNegativity => "non-negativity",
            Axiom::Symmetry => "symmetry",
            Axiom::Triangle => "triangle inequality",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub axiom: Axiom,
    /// Point labels involved: one for identity, two for non-negativity and
    /// symmetry, `(x, y, z)` for `d(x,z) ≤ d(x,y) + d(y,z)`.
    pub points: Vec<usize>,
    pub magnitude: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport {
    pub points: Vec<usize>,
    /// Sorted by axiom, then by point labels.
    pub violations: Vec<Violation>,
    /// Largest `d(x,z) − d(x,y) − d(y,z)` over all ordered triples; negative
    /// when every triangle holds strictly.
    pub max_triangle_slack: f64,
    pub tolerance: f64,
}

impl MetricReport {
    pub fn is_metric(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, axiom: Axiom) -> usize {
        self.violations.iter().filter(|v| v.axiom == axiom).count()
    }
}

impl fmt::Display for MetricReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "points: {:?}", self.points)?;
        for axiom in [Axiom::Identity, Axiom::NonNegativity, Axiom::Symmetry, Axiom::Triangle] {
            writeln!(f, "{axiom}: {} violation(s)", self.count(axiom))?;
        }
        writeln!(f, "max triangle slack: {:e}", self.max_triangle_slack)?;
        for v in &self.violations {
            writeln!(f, "  {} at {:?}: {:e}", v.axiom, v.points, v.magnitude)?;
        }
        Ok(())
    }
}

/// Exhaustively checks the four metric axioms for `distance` on `points`
/// with slack `tol`.
pub fn metric_axiom_suite<F>(points: &[usize], mut distance: F, tol: f64) -> Result<MetricReport>
where
    F: FnMut(usize, usize) -> Result<f64>,
{
    let n = points.len();
    if n < 3 {
        return Err(Error::validation(format!(
            "metric axiom suite needs at least 3 points, got {n}"
        )));
    }
    let mut d = vec![0.0; n * n];
    for (a, &x) in points.iter().enumerate() {
        for (b, &y) in points.iter().enumerate() {
            let v = distance(x, y)?;
            if v.is_nan() {
                return Err(Error::NanDistance(x, y));
            }
            d[a * n + b] = v;
        }
    }

    let mut violations = Vec::new();
    for (a, &x) in points.iter().enumerate() {
        let self_d = d[a * n + a];
        if self_d.abs() > tol {
            violations.push(Violation {
                axiom: Axiom::Identity,
                points: vec![x],
                magnitude: self_d.abs(),
            });
        }
        for (b, &y) in points.iter().enumerate() {
            let dxy = d[a * n + b];
            if dxy < -tol {
                violations.push(Violation {
                    axiom: Axiom::NonNegativity,
                    points: vec![x, y],
                    magnitude: -dxy,
                });
            }
            let asym = (dxy - d[b * n + a]).abs();
            if a < b && asym > tol {
                violations.push(Violation {
                    axiom: Axiom::Symmetry,
                    points: vec![x, y],
                    magnitude: asym,
                });
            }
        }
    }

    let mut max_slack = f64::NEG_INFINITY;
    for (a, &x) in points.iter().enumerate() {
        for (b, &y) in points.iter().enumerate() {
            for (c, &z) in points.iter().enumerate() {
                let slack = d[a * n + c] - d[a * n + b] - d[b * n + c];
                max_slack = max_slack.max(slack);
                if slack > tol {
                    violations.push(Violation {
                        axiom: Axiom::Triangle,
                        points: vec![x, y, z],
                        magnitude: slack,
                    });
                }
            }
        }
    }
    violations.sort_by(|p, q| p.axiom.cmp(&q.axiom).then_with(|| p.points.cmp(&q.points)));

    Ok(MetricReport {
        points: points.to_vec(),
        violations,
        max_triangle_slack: max_slack,
        tolerance: tol,
    })
}
