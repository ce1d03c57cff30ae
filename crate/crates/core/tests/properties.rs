use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bundlemps::density::{
    connecting_unitary, natural_orbitals, one_body_rdm, relative_truncation, truncation_error,
    DensityMatrix, RdmMethod,
};
use bundlemps::energy::{frobenius_bound_check, metric_axiom_suite, EnergyForm, LocalCouplings, AXIOM_TOL};
use bundlemps::io::{matrix_to_csv, parse_pgm, pgm_bytes, quantize};
use bundlemps::linalg::{svd, sym_eig};
use bundlemps::mps::{bond_decomposition, bundled_mps_at, gauge_center, max_bond_dimension, mps_from_vector};
use bundlemps::overlap::{log_abs_matrix, weighted_overlap};
use bundlemps::spin::{build_tfim, build_xxz, full_spectrum};
use bundlemps::verify::{random_psd, random_state, random_symmetric};
use bundlemps::DenseMatrix;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn bundle(sites: usize, g: usize, seed: u64) -> DenseMatrix {
    let mut r = rng(seed);
    DenseMatrix::from_columns(&(0..g).map(|_| random_state(sites, &mut r)).collect::<Vec<_>>())
}

/// `⟨ψ| S⁺ᵢ S⁻ⱼ |ψ⟩` by walking configurations bit by bit; bit 0 of a site
/// means spin up and site 1 is the most significant bit.
fn rdm_by_bits(psi: &[f64], n: usize) -> DenseMatrix {
    let up = |c: usize, site: usize| c >> (n - site) & 1 == 0;
    DenseMatrix::from_fn(n, n, |i, j| {
        let (i, j) = (i + 1, j + 1);
        let mut acc = 0.0;
        for c in 0..psi.len() {
            // S⁻ⱼ needs j up; S⁺ᵢ then needs i down.
            if !up(c, j) {
                continue;
            }
            let lowered = c ^ 1 << (n - j);
            if up(lowered, i) {
                continue;
            }
            acc += psi[lowered ^ 1 << (n - i)] * psi[c];
        }
        acc
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rdm_forms_agree_with_bitwise_oracle(n in 1usize..=7, seed in any::<u64>()) {
        let psi = random_state(n, &mut rng(seed));
        let oracle = rdm_by_bits(&psi, n);
        for method in [RdmMethod::OperatorForm, RdmMethod::ContractionForm] {
            let rho = one_body_rdm(&psi, method).unwrap();
            prop_assert!(rho.matrix().max_abs_diff(&oracle) <= 1e-12);
        }
    }

    #[test]
    fn rdm_trace_counts_up_spins(n in 1usize..=7, seed in any::<u64>()) {
        let psi = random_state(n, &mut rng(seed));
        let ups: f64 = psi
            .iter()
            .enumerate()
            .map(|(c, a)| a * a * (n as u32 - (c as u64).count_ones()) as f64)
            .sum();
        let rho = one_body_rdm(&psi, RdmMethod::ContractionForm).unwrap();
        prop_assert!((rho.trace() - ups).abs() <= 1e-12);
        // Hard-core boson occupations: nonnegative but not capped at 1.
        let occ = natural_orbitals(&rho).unwrap().occupations;
        prop_assert!(occ.iter().all(|&e| e >= -1e-12 && e <= ups + 1e-12));
    }

    #[test]
    fn psd_spectrum_is_nonnegative(n in 1usize..=24, seed in any::<u64>()) {
        let a = random_psd(n, &mut rng(seed));
        let e = sym_eig(&a).unwrap();
        let floor = -1e-12 * a.frobenius_norm();
        prop_assert!(e.eigenvalues.iter().all(|&x| x >= floor));
        prop_assert!(e.reconstruct().max_abs_diff(&a) <= 1e-12 * a.frobenius_norm().max(1.0));
    }

    #[test]
    fn svd_factors_and_transpose(rows in 1usize..=20, cols in 1usize..=20, seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = DenseMatrix::from_fn(rows, cols, |_, _| r.random_range(-1.0..1.0));
        let d = svd(&a).unwrap();
        let dt = svd(&a.transpose()).unwrap();
        let scale = a.frobenius_norm().max(1.0);
        prop_assert!(d.reconstruct().max_abs_diff(&a) <= 1e-12 * scale);
        prop_assert!(d.u.orthonormality_defect() <= 1e-12);
        prop_assert!(d.v.orthonormality_defect() <= 1e-12);
        prop_assert!(d.s.windows(2).all(|w| w[0] >= w[1]));
        for (x, y) in d.s.iter().zip(&dt.s) {
            prop_assert!((x - y).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn orthogonal_input_has_unit_singular_values(n in 1usize..=16, seed in any::<u64>()) {
        let q = sym_eig(&random_symmetric(n, &mut rng(seed))).unwrap().eigenvectors;
        let d = svd(&q).unwrap();
        prop_assert!(d.s.iter().all(|s| (s - 1.0).abs() <= 1e-12));
    }

    #[test]
    fn truncation_error_is_monotone(n in 2usize..=7, seed in any::<u64>(), gamma_seed in any::<u64>()) {
        let rho = one_body_rdm(&random_state(n, &mut rng(seed)), RdmMethod::OperatorForm).unwrap();
        let other = one_body_rdm(&random_state(n, &mut rng(gamma_seed)), RdmMethod::OperatorForm).unwrap();
        for basis in [natural_orbitals(&rho).unwrap(), natural_orbitals(&other).unwrap()] {
            let deltas: Vec<f64> = (1..=n).map(|m| truncation_error(&rho, &basis, m).unwrap().value).collect();
            prop_assert!(deltas.iter().all(|&d| d >= -1e-12));
            prop_assert!(deltas.windows(2).all(|w| w[1] <= w[0] + 1e-12));
            prop_assert!(deltas[n - 1].abs() <= 1e-12);
        }
    }

    #[test]
    fn relative_truncation_is_a_metric(n in 3usize..=6, count in 3usize..=7, m_frac in 0.0f64..1.0, seed in any::<u64>()) {
        let mut r = rng(seed);
        let rhos: Vec<_> = (0..count)
            .map(|_| one_body_rdm(&random_state(n, &mut r), RdmMethod::OperatorForm).unwrap())
            .collect();
        let basis = natural_orbitals(&rhos[0]).unwrap();
        let m = 1 + (m_frac * n as f64) as usize % n;
        let deltas: Vec<_> = rhos.iter().map(|rho| truncation_error(rho, &basis, m).unwrap()).collect();
        let points: Vec<usize> = (0..count).collect();
        let report = metric_axiom_suite(&points, |a, b| relative_truncation(&deltas[a], &deltas[b]), AXIOM_TOL).unwrap();
        prop_assert!(report.is_metric(), "{}", report);
    }

    #[test]
    fn connecting_unitary_maps_orbitals(n in 2usize..=6, seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = DensityMatrix::new(random_psd(n, &mut r), "random").unwrap();
        let b0 = random_psd(n, &mut r);
        let b = DensityMatrix::new(b0.scaled(a.trace() / b0.trace()), "random").unwrap();
        let (pa, pb) = (natural_orbitals(&a).unwrap(), natural_orbitals(&b).unwrap());
        let u = connecting_unitary(&pa, &pb).unwrap();
        prop_assert!(u.orthonormality_defect() <= 1e-10);
        prop_assert!(pa.orbitals.matmul(&u).max_abs_diff(&pb.orbitals) <= 1e-9);
    }

    #[test]
    fn frobenius_bound_holds(n in 1usize..=8, m_frac in 0.0f64..1.0, full in any::<bool>(), seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = DensityMatrix::new(random_psd(n, &mut r), "random").unwrap();
        let b = DensityMatrix::new(random_psd(n, &mut r), "random").unwrap();
        let basis = natural_orbitals(&a).unwrap();
        let c = LocalCouplings::new(random_state(3, &mut r).into_iter().cycle().take(n).map(|x| x + 0.1).collect()).unwrap();
        let m = 1 + (m_frac * n as f64) as usize % n;
        let form = if full { EnergyForm::Full } else { EnergyForm::UltraLocal };
        let bound = frobenius_bound_check(&a, &b, &basis, m, &c, form).unwrap();
        prop_assert!(bound.holds && bound.lhs <= bound.rhs + 1e-10, "{:?}", bound);
    }

    #[test]
    fn exact_mps_reconstructs(n in 1usize..=9, seed in any::<u64>()) {
        let psi = random_state(n, &mut rng(seed));
        let mps = mps_from_vector(&psi, 0.0).unwrap();
        let back = mps.reconstruct().column(0);
        prop_assert!(back.iter().zip(&psi).all(|(a, b)| (a - b).abs() <= 1e-10));
        prop_assert_eq!(mps.bond_dims(), max_bond_dimension(n, 2, 1, n).unwrap());
        for bond in 1..n {
            let s = bond_decomposition(&mps, bond).unwrap().singular_values;
            prop_assert!((s.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn bundles_survive_gauge_moves(n in 2usize..=8, g in 1usize..=4, center_frac in 0.0f64..1.0, seed in any::<u64>()) {
        let c = bundle(n, g, seed);
        let center = 1 + (center_frac * n as f64) as usize % n;
        let mps = bundled_mps_at(&c, 0.0, center).unwrap();
        for target in [1, n, center, 1 + n / 2] {
            let moved = gauge_center(&mps, target).unwrap();
            prop_assert!(moved.normalization_defect() <= 1e-10);
            prop_assert!(moved.reconstruct().max_abs_diff(&c) <= 1e-10);
            let limit = max_bond_dimension(n, 2, g, target).unwrap();
            prop_assert!(moved.bond_dims().iter().zip(&limit).all(|(d, l)| d <= l));
        }
    }

    #[test]
    fn truncation_bookkeeping_bounds_error(n in 2usize..=8, cutoff_exp in -4.0f64..-0.5, seed in any::<u64>()) {
        let psi = random_state(n, &mut rng(seed));
        let mps = mps_from_vector(&psi, 10f64.powf(cutoff_exp)).unwrap();
        let back = mps.reconstruct().column(0);
        let err2: f64 = back.iter().zip(&psi).map(|(a, b)| (a - b).powi(2)).sum();
        let discarded: f64 = mps.discarded_weights().iter().sum();
        prop_assert!(err2 <= discarded + 1e-12, "{err2} > {discarded}");
    }

    #[test]
    fn gamma_self_overlap_and_gauge_invariance(n in 2usize..=7, ga in 1usize..=3, gb in 1usize..=3, seed in any::<u64>()) {
        let (ca, cb) = (bundle(n, ga, seed), bundle(n, gb, seed ^ 0x9e37));
        let a = bundled_mps_at(&ca, 0.0, 1 + (seed as usize) % n).unwrap();
        let b = bundled_mps_at(&cb, 0.0, n.div_ceil(2)).unwrap();
        for bond in 1..n {
            let own = weighted_overlap(&a, &a, bond).unwrap();
            prop_assert!((own.entries.trace() - 1.0).abs() <= 1e-10);
            prop_assert!(own.entries.symmetry_defect() <= 1e-10);
            prop_assert!(sym_eig(&own.entries).unwrap().eigenvalues.iter().all(|&x| x >= -1e-10));

            let gamma = weighted_overlap(&a, &b, bond).unwrap();
            for k in 0..gamma.rows() {
                for l in 0..gamma.cols() {
                    let cs = gamma.singular_values_a[k] * gamma.singular_values_b[l];
                    prop_assert!(gamma.entries[(k, l)].abs() <= cs + 1e-12);
                }
            }
            let a2 = gauge_center(&gauge_center(&a, n).unwrap(), 1).unwrap();
            let b2 = gauge_center(&gauge_center(&b, 1).unwrap(), n).unwrap();
            let moved = weighted_overlap(&a2, &b2, bond).unwrap();
            prop_assert_eq!((moved.rows(), moved.cols()), (gamma.rows(), gamma.cols()));
            prop_assert!(moved.entries.max_abs_diff(&gamma.entries) <= 1e-9);
        }
    }

    #[test]
    fn pgm_round_trip_is_exact(rows in 1usize..=12, cols in 1usize..=12, seed in any::<u64>()) {
        let m = random_symmetric(rows.max(cols), &mut rng(seed));
        let m = DenseMatrix::from_fn(rows, cols, |i, j| m[(i, j)] * 1e-3);
        let img = quantize(&log_abs_matrix(&m, -16.0), -16.0);
        let text = String::from_utf8(pgm_bytes(&img)).unwrap();
        prop_assert_eq!(parse_pgm(&text).unwrap(), img);
        prop_assert_eq!(matrix_to_csv(&m).unwrap(), matrix_to_csv(&m.clone()).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn tfim_spectrum_is_field_sign_symmetric(n in 2usize..=7, h in -2.0f64..2.0) {
        let plus = full_spectrum(&build_tfim(n, h).unwrap()).unwrap();
        let minus = full_spectrum(&build_tfim(n, -h).unwrap()).unwrap();
        for (a, b) in plus.energies.iter().zip(&minus.energies) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn energy_sum_rule_and_orthonormal_states(n in 1usize..=7, h in -2.0f64..2.0, delta in -2.0f64..2.0) {
        for ham in [build_tfim(n, h).unwrap(), build_xxz(n, delta).unwrap()] {
            let spec = full_spectrum(&ham).unwrap();
            let tr = ham.matrix.trace();
            let sum: f64 = spec.energies.iter().sum();
            prop_assert!((sum - tr).abs() <= 1e-8 * tr.abs().max(1.0));
            prop_assert!(spec.states.orthonormality_defect() <= 1e-10);
        }
    }
}
