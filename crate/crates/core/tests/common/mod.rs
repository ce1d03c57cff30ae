#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::OnceLock;

use bundlemps::experiment::{load_or_solve, ExperimentConfig};
use bundlemps::spin::{ModelSpec, Spectrum};

/// Spectra persist here between test runs.
pub fn cache_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("spectra")
}

pub fn config() -> ExperimentConfig {
    ExperimentConfig {
        cache_dir: Some(cache_dir()),
        ..ExperimentConfig::default()
    }
}

pub struct Spectra {
    pub tfim_weak: Spectrum,
    pub tfim_critical: Spectrum,
    pub xxz: Spectrum,
}

/// The three 12-site spectra, solved concurrently on first use.
pub fn spectra() -> &'static Spectra {
    static CELL: OnceLock<Spectra> = OnceLock::new();
    CELL.get_or_init(|| {
        let cfg = config();
        let solve = |spec: bundlemps::Result<ModelSpec>| {
            let spec = spec.expect("valid model");
            load_or_solve(&spec, &cfg).expect("12-site spectrum").spectrum
        };
        std::thread::scope(|s| {
            let a = s.spawn(|| solve(ModelSpec::tfim(12, 0.01)));
            let b = s.spawn(|| solve(ModelSpec::tfim(12, 1.0)));
            let c = s.spawn(|| solve(ModelSpec::xxz(12, 1.0)));
            Spectra {
                tfim_weak: a.join().expect("solver thread"),
                tfim_critical: b.join().expect("solver thread"),
                xxz: c.join().expect("solver thread"),
            }
        })
    })
}

pub fn range(lo: usize, hi: usize) -> Vec<usize> {
    (lo..=hi).collect()
}
