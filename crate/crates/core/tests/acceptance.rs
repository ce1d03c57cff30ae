//! Acceptance criteria 1–10. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod common;

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bundlemps::density::{natural_orbitals, one_body_rdm, DensityMatrix, RdmMethod};
use bundlemps::energy::{frobenius_bound_check, EnergyForm, LocalCouplings, AXIOM_TOL};
use bundlemps::experiment::{compute_metrics, compute_overlap, preset, state_orbitals, ExperimentConfig};
use bundlemps::io::{matrix_to_csv, pgm_bytes};
use bundlemps::mps::{bond_decomposition, bundled_mps_from_vectors, gauge_center, max_bond_dimension, mps_from_vector};
use bundlemps::spin::{build_tfim, full_spectrum, Spectrum};
use bundlemps::verify::{random_psd, random_state};
use bundlemps::DenseMatrix;

use common::{config, range, spectra};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn within_budget(elapsed: Duration, budget: Duration) -> String {
    format!("{:.1}s of {}s budget", elapsed.as_secs_f64(), budget.as_secs())
}

/// Operator-form and contraction-form one-body RDMs agree entrywise to 1e-12
/// on 100 random states per N in 2..=8, within 30 s.
fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for n in 2..=8 {
        for _ in 0..100 {
            let psi = random_state(n, &mut rng);
            let a = one_body_rdm(&psi, RdmMethod::OperatorForm).expect("operator form");
            let b = one_body_rdm(&psi, RdmMethod::ContractionForm).expect("contraction form");
            worst = worst.max(a.matrix().max_abs_diff(b.matrix()));
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-12 && elapsed < Duration::from_secs(30),
        format!("max entry gap {worst:.2e}; {}", within_budget(elapsed, Duration::from_secs(30))),
    )
}

fn reconstruction_error(c: &[f64]) -> (f64, Vec<usize>) {
    let mps = mps_from_vector(c, 0.0).expect("mps");
    let back = mps.reconstruct().column(0);
    let err = back.iter().zip(c).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    (err, mps.bond_dims())
}

/// Zero-cutoff MPS of 50 random 10-site states and 20 sampled 12-site TFIM
/// eigenstates reconstruct to 1e-10 with maximal bond dimensions.
fn criterion_2(spec: &Spectrum) -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut worst = 0.0f64;
    let mut bad_dims = Vec::new();
    let expect10 = max_bond_dimension(10, 2, 1, 10).expect("prediction");
    for t in 0..50 {
        let (err, dims) = reconstruction_error(&random_state(10, &mut rng));
        worst = worst.max(err);
        if dims != expect10 {
            bad_dims.push(format!("random #{t}: {dims:?}"));
        }
    }
    let expect12 = max_bond_dimension(12, 2, 1, 12).expect("prediction");
    for i in 0..20 {
        let k = 1 + i * (spec.len() - 1) / 19;
        let (err, dims) = reconstruction_error(&spec.state(k).expect("state"));
        worst = worst.max(err);
        if dims != expect12 {
            bad_dims.push(format!("eigenstate {k}: {dims:?}"));
        }
    }
    let elapsed = start.elapsed();
    let budget = Duration::from_secs(120);
    outcome(
        worst <= 1e-10 && bad_dims.is_empty() && elapsed < budget,
        format!(
            "max reconstruction error {worst:.2e}, {} bond-dimension mismatches; {}",
            bad_dims.len(),
            within_budget(elapsed, budget)
        ),
    )
}

/// Bundles of g ∈ {1,2,4,10} from TFIM and XXZ spectra survive a full gauge
/// sweep to 1e-9, and their left-half bonds match the single-state MPS.
fn criterion_3(all: &common::Spectra) -> Outcome {
    let mut worst = 0.0f64;
    let mut problems = Vec::new();
    for (name, spec) in [("TFIM", &all.tfim_weak), ("XXZ", &all.xxz)] {
        let single = mps_from_vector(&spec.state(1).expect("state"), 0.0).expect("mps");
        for g in [1, 2, 4, 10] {
            for first in [1, 2048] {
                let c = spec.bundle_matrix(&range(first, first + g - 1)).expect("bundle");
                let mps = bundled_mps_from_vectors(&c, 0.0).expect("bundled mps");
                let center = mps.center();
                let left = &mps.bond_dims()[..center - 1];
                if left != &single.bond_dims()[..center - 1] {
                    problems.push(format!("{name} g={g}: left bonds {left:?}"));
                }
                let mut moved = mps.clone();
                for target in [1, mps.sites(), center] {
                    moved = gauge_center(&moved, target).expect("gauge");
                    worst = worst.max(moved.reconstruct().max_abs_diff(&c));
                }
            }
        }
    }
    outcome(
        worst <= 1e-9 && problems.is_empty(),
        format!("max member drift {worst:.2e} over sweep 1 -> N -> center; {} bond mismatches", problems.len()),
    )
}

/// r over TFIM states {1,2,3,29,30} (basis of state 1, m = 6) and |ΔE| over
/// the same set pass all four metric axioms with zero violations.
fn criterion_4(spec: &Spectrum) -> Outcome {
    let cfg = ExperimentConfig {
        states: vec![1, 2, 3, 29, 30],
        basis_state: Some(1),
        m: Some(6),
        ..config()
    };
    let out = compute_metrics(spec, &cfg).expect("metrics");
    let (Some(r), Some(e)) = (&out.r_report, &out.energy_report) else {
        return outcome(false, "axiom reports missing");
    };
    outcome(
        r.is_metric() && e.is_metric() && r.tolerance <= AXIOM_TOL && e.tolerance <= AXIOM_TOL,
        format!(
            "r: {} violations (max triangle slack {:.2e}); |dE|: {} violations",
            r.violations.len(),
            r.max_triangle_slack,
            e.violations.len()
        ),
    )
}

/// lhs ≤ rhs + 1e-10 for 1000+ random PSD pairs and every TFIM pair from
/// {1, 2, 30, 4096}.
fn criterion_5(spec: &Spectrum) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut checked = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for t in 0..1200 {
        let n = 2 + t % 7;
        let a = DensityMatrix::new(random_psd(n, &mut rng), "random").expect("psd");
        let b = DensityMatrix::new(random_psd(n, &mut rng), "random").expect("psd");
        let basis = natural_orbitals(if t % 2 == 0 { &a } else { &b }).expect("orbitals");
        let c = LocalCouplings::new((0..n).map(|_| rng.random_range(-2.0..2.0)).collect()).expect("couplings");
        let form = if t % 3 == 0 { EnergyForm::Full } else { EnergyForm::UltraLocal };
        let bound = frobenius_bound_check(&a, &b, &basis, 1 + t % n, &c, form).expect("bound");
        worst = worst.max(bound.lhs - bound.rhs);
        checked += 1;
    }
    let states = [1, 2, 30, 4096];
    let orbitals: Vec<_> = states.iter().map(|&k| state_orbitals(spec, k).expect("orbitals")).collect();
    let couplings = LocalCouplings::uniform(12);
    for i in 0..states.len() {
        for j in 0..states.len() {
            if i == j {
                continue;
            }
            for m in 1..=12 {
                for form in [EnergyForm::UltraLocal, EnergyForm::Full] {
                    let bound = frobenius_bound_check(&orbitals[i].0, &orbitals[j].0, &orbitals[i].1, m, &couplings, form)
                        .expect("bound");
                    worst = worst.max(bound.lhs - bound.rhs);
                    checked += 1;
                }
            }
        }
    }
    outcome(worst <= 1e-10, format!("{checked} checks, max lhs - rhs = {worst:.2e}"))
}

fn high_weight_counts(spec: &Spectrum) -> Vec<usize> {
    let cfg = config();
    [vec![1, 3], vec![29, 30], vec![4095, 4096]]
        .iter()
        .map(|b| compute_overlap(spec, &[1, 2], b, &cfg, None).expect("overlap").report.high_weight_count)
        .collect()
}

/// high_weight_count is weakly increasing over (1,2)×(1,3), (1,2)×(29,30),
/// (1,2)×(4095,4096) at h_x = 0.01 and h_x = 1.
fn criterion_6(all: &common::Spectra, solve_time: Duration) -> Outcome {
    let weak = high_weight_counts(&all.tfim_weak);
    let critical = high_weight_counts(&all.tfim_critical);
    let increasing = |c: &[usize]| c.windows(2).all(|w| w[0] <= w[1]);
    let budget = Duration::from_secs(3 * 300);
    outcome(
        increasing(&weak) && increasing(&critical) && solve_time < budget,
        format!(
            "counts h_x=0.01 {weak:?}, h_x=1 {critical:?}; spectra ready in {}",
            within_budget(solve_time, budget)
        ),
    )
}

fn ground_middle_rank(spec: &Spectrum) -> usize {
    let mps = mps_from_vector(&spec.state(1).expect("ground state"), 0.0).expect("mps");
    bond_decomposition(&mps, 6).expect("bond").count_above(1e-12)
}

/// More middle-bond singular values above 1e-12 at h_x = 1 than at 0.01.
fn criterion_7(all: &common::Spectra) -> Outcome {
    let weak = ground_middle_rank(&all.tfim_weak);
    let critical = ground_middle_rank(&all.tfim_critical);
    outcome(critical > weak, format!("h_x=0.01: {weak}, h_x=1: {critical}"))
}

/// (1–10)×(11–20) has strictly more truncatable rows than (2048–2058)×(1–10).
fn criterion_8(spec: &Spectrum) -> Outcome {
    let cfg = config();
    let small = compute_overlap(spec, &range(1, 10), &range(11, 20), &cfg, None).expect("overlap");
    let large = compute_overlap(spec, &range(2048, 2058), &range(1, 10), &cfg, None).expect("overlap");
    let (a, b) = (small.report.truncatable_rows(), large.report.truncatable_rows());
    outcome(a > b, format!("truncatable rows at cutoff 1e-8: {a} vs {b}"))
}

/// gamma.csv and gamma.pgm of fig3a match the frozen files byte for byte.
fn criterion_9(spec: &Spectrum) -> Outcome {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let fig3 = preset("fig3").expect("preset");
    let pair = &fig3.pairs[0];
    let cfg = config();
    let render = || {
        let o = compute_overlap(spec, &pair.bundle_a, &pair.bundle_b, &cfg, fig3.note.as_deref()).expect("overlap");
        (matrix_to_csv(&o.gamma.entries).expect("csv"), pgm_bytes(&o.image))
    };
    let (csv, pgm) = render();
    let (csv2, pgm2) = render();
    let stable = csv == csv2 && pgm == pgm2;
    let want_csv = std::fs::read(golden.join("fig3a_gamma.csv")).unwrap_or_default();
    let want_pgm = std::fs::read(golden.join("fig3a_gamma.pgm")).unwrap_or_default();
    outcome(
        stable && csv == want_csv && pgm == want_pgm,
        format!(
            "{}: repeat {}, csv {}, pgm {}",
            pair.label,
            if stable { "identical" } else { "differs" },
            if csv == want_csv { "matches" } else { "drifted" },
            if pgm == want_pgm { "matches" } else { "drifted" }
        ),
    )
}

/// N = 2 TFIM: exact (−1,−1,1,1) at h_x = 0; ground energy −√5 at h_x = 1,
/// with the Hamiltonian checked against a hand-written 4×4 matrix.
fn criterion_10() -> Outcome {
    let zero = full_spectrum(&build_tfim(2, 0.0).expect("model")).expect("spectrum");
    let exact = zero.energies == [-1.0, -1.0, 1.0, 1.0];
    let h = build_tfim(2, 1.0).expect("model");
    #[rustfmt::skip]
    let hand = DenseMatrix::new(4, 4, vec![
        1.0, 1.0, 1.0, 0.0,
        1.0, -1.0, 0.0, 1.0,
        1.0, 0.0, -1.0, 1.0,
        0.0, 1.0, 1.0, 1.0,
    ])
    .expect("4x4");
    let matrix_ok = h.matrix.max_abs_diff(&hand) == 0.0;
    let e0 = full_spectrum(&h).expect("spectrum").energies[0];
    let gap = (e0 + 5f64.sqrt()).abs();
    outcome(
        exact && matrix_ok && gap <= 1e-12,
        format!("h_x=0 spectrum {:?}; h_x=1 E0 + sqrt(5) = {gap:.2e}", zero.energies),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let all = spectra();
    let solve_time = start.elapsed();
    let results = [
        criterion_1(),
        criterion_2(&all.tfim_weak),
        criterion_3(all),
        criterion_4(&all.tfim_weak),
        criterion_5(&all.tfim_weak),
        criterion_6(all, solve_time),
        criterion_7(all),
        criterion_8(&all.xxz),
        criterion_9(&all.tfim_weak),
        criterion_10(),
    ];
    let mut failed = 0;
    for (i, r) in results.iter().enumerate() {
        println!("criterion {:>2}: {} {}", i + 1, if r.passed { "PASS" } else { "FAIL" }, r.detail);
        failed += usize::from(!r.passed);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
