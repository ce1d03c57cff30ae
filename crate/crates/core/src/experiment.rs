//! Experiment drivers behind the command-line tool: configuration, figure
//! presets, the spectrum cache, and the overlap and metrics runs with their
//! file outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::density::{
    connecting_unitary, natural_orbitals, one_body_rdm, relative_truncation,
    similarity_classifier, truncation_error, DensityMatrix, NaturalOrbitalSet, RdmMethod,
    Similarity, DEFAULT_SIMILARITY_TOL, DEFAULT_TRUNCATION_TARGET,
};
use crate::energy::{
    energy_difference_truncated, frobenius_bound_check, metric_axiom_suite, EnergyForm,
    LocalCouplings, MetricReport, AXIOM_TOL,
};
use crate::io::{
    atomic_write, matrix_to_csv, pgm_bytes, quantize, read_spectrum, spectrum_cache_name,
    write_spectrum, GrayImage,
};
use crate::linalg::DenseMatrix;
use crate::mps::bundled_mps_from_vectors;
use crate::overlap::{
    log_abs_matrix, truncatability_report, weighted_overlap, OverlapMatrix, TruncatabilityReport,
    DEFAULT_FLOOR_LOG10, DEFAULT_ROW_CUTOFF, DEFAULT_THRESHOLD_LOG10,
};
use crate::spin::{full_spectrum, ModelKind, ModelSpec, Spectrum};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelName {
    Tfim,
    Xxz,
}

impl std::str::FromStr for ModelName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tfim" | "ising" => Ok(ModelName::Tfim),
            "xxz" | "heisenberg" => Ok(ModelName::Xxz),
            other => Err(Error::validation(format!("unknown model '{other}'"))),
        }
    }
}

/// Everything a `solve`, `overlap` or `metrics` run needs.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelName,
    pub sites: usize,
    pub hx: f64,
    pub delta: f64,
    pub bundle_a: Vec<usize>,
    pub bundle_b: Vec<usize>,
    /// Defaults to the middle bond `⌊N/2⌋`.
    pub bond: Option<usize>,
    /// Relative singular-value cutoff used while building bundles.
    pub cutoff: f64,
    /// Γ rows/columns whose entries all fall below this are truncatable.
    pub row_cutoff: f64,
    pub threshold_log10: f64,
    pub floor_log10: f64,
    pub output_dir: PathBuf,
    pub cache_dir: Option<PathBuf>,
    pub use_cache: bool,
    /// States compared pairwise by the metrics run.
    pub states: Vec<usize>,
    /// Orbital rank for the truncated metrics; chosen automatically if unset.
    pub m: Option<usize>,
    /// State whose natural orbitals form the common basis; defaults to the
    /// first entry of `states`.
    pub basis_state: Option<usize>,
    pub couplings: Option<Vec<f64>>,
    pub energy_form: EnergyForm,
    pub similarity_tol: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelName::Tfim,
            sites: 12,
            hx: 0.01,
            delta: 1.0,
            bundle_a: vec![1, 2],
            bundle_b: vec![1, 3],
            bond: None,
            cutoff: 0.0,
            row_cutoff: DEFAULT_ROW_CUTOFF,
            threshold_log10: DEFAULT_THRESHOLD_LOG10,
            floor_log10: DEFAULT_FLOOR_LOG10,
            output_dir: PathBuf::from("out"),
            cache_dir: None,
            use_cache: true,
            states: vec![1, 2, 3, 29, 30],
            m: None,
            basis_state: None,
            couplings: None,
            energy_form: EnergyForm::UltraLocal,
            similarity_tol: DEFAULT_SIMILARITY_TOL,
        }
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::validation(format!("{key}: '{value}' is not a number")))
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::validation(format!("{key}: '{value}' is not a non-negative integer")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::validation(format!("{key}: '{value}' is not a boolean"))),
    }
}

/// Parses `"1,2,5-7"` into `[1, 2, 5, 6, 7]`.
pub fn parse_index_list(text: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((lo, hi)) => {
                let lo = parse_usize("range", lo)?;
                let hi = parse_usize("range", hi)?;
                if lo > hi {
                    return Err(Error::validation(format!("empty range '{part}'")));
                }
                out.extend(lo..=hi);
            }
            None => out.push(parse_usize("index", part)?),
        }
    }
    Ok(out)
}

fn format_index_list(indices: &[usize]) -> String {
    let mut parts = Vec::new();
    let mut i = 0;
    while i < indices.len() {
        let mut j = i;
        while j + 1 < indices.len() && indices[j + 1] == indices[j] + 1 {
            j += 1;
        }
        if j - i >= 2 {
            parts.push(format!("{}-{}", indices[i], indices[j]));
        } else {
            parts.extend(indices[i..=j].iter().map(usize::to_string));
        }
        i = j + 1;
    }
    parts.join(",")
}

/// Splits `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::validation(format!("line {}: expected key = value", n + 1)))?;
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

impl ExperimentConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key.replace('-', "_").as_str() {
            "model" => self.model = value.parse()?,
            "sites" => self.sites = parse_usize(key, value)?,
            "hx" => self.hx = parse_f64(key, value)?,
            "delta" => self.delta = parse_f64(key, value)?,
            "bundle_a" => self.bundle_a = parse_index_list(value)?,
            "bundle_b" => self.bundle_b = parse_index_list(value)?,
            "bond" => self.bond = Some(parse_usize(key, value)?),
            "cutoff" => self.cutoff = parse_f64(key, value)?,
            "row_cutoff" => self.row_cutoff = parse_f64(key, value)?,
            "threshold" | "threshold_log10" => self.threshold_log10 = parse_f64(key, value)?,
            "floor" | "floor_log10" => self.floor_log10 = parse_f64(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "cache_dir" => self.cache_dir = Some(PathBuf::from(value)),
            "cache" => self.use_cache = parse_bool(key, value)?,
            "states" => self.states = parse_index_list(value)?,
            "m" => self.m = Some(parse_usize(key, value)?),
            "basis_state" | "gamma" => self.basis_state = Some(parse_usize(key, value)?),
            "couplings" => {
                self.couplings = Some(
                    value
                        .split(',')
                        .map(|c| parse_f64(key, c))
                        .collect::<Result<_>>()?,
                )
            }
            "ultralocal" => {
                self.energy_form = if parse_bool(key, value)? {
                    EnergyForm::UltraLocal
                } else {
                    EnergyForm::Full
                }
            }
            "tol" | "similarity_tol" => self.similarity_tol = parse_f64(key, value)?,
            other => return Err(Error::validation(format!("unknown setting '{other}'"))),
        }
        Ok(())
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (k, v) in parse_config_text(text)? {
            self.set(&k, &v)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(&fs::read_to_string(path)?)?;
        Ok(cfg)
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        match self.model {
            ModelName::Tfim => ModelSpec::tfim(self.sites, self.hx),
            ModelName::Xxz => ModelSpec::xxz(self.sites, self.delta),
        }
    }

    pub fn with_model(mut self, spec: ModelSpec) -> Self {
        self.sites = spec.sites;
        match spec.kind {
            ModelKind::Tfim { hx } => {
                self.model = ModelName::Tfim;
                self.hx = hx;
            }
            ModelKind::Xxz { delta } => {
                self.model = ModelName::Xxz;
                self.delta = delta;
            }
        }
        self
    }

    fn cache_path(&self, spec: &ModelSpec) -> Option<PathBuf> {
        if !self.use_cache {
            return None;
        }
        self.cache_dir.as_ref().map(|d| d.join(spectrum_cache_name(spec)))
    }
}

/// One Γ comparison within a preset.
#[derive(Clone, Debug, PartialEq)]
pub struct PresetPair {
    pub label: String,
    pub bundle_a: Vec<usize>,
    pub bundle_b: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Preset {
    pub name: String,
    pub model: ModelSpec,
    pub pairs: Vec<PresetPair>,
    /// Written into each report header.
    pub note: Option<String>,
}

fn pair(label: &str, bundle_a: impl IntoIterator<Item = usize>, bundle_b: impl IntoIterator<Item = usize>) -> PresetPair {
    PresetPair {
        label: label.to_string(),
        bundle_a: bundle_a.into_iter().collect(),
        bundle_b: bundle_b.into_iter().collect(),
    }
}

fn ising_pairs(prefix: &str) -> Vec<PresetPair> {
    vec![
        pair(&format!("{prefix}a"), [1, 2], [1, 3]),
        pair(&format!("{prefix}b"), [1, 2], [29, 30]),
        pair(&format!("{prefix}c"), [1, 2], [4095, 4096]),
        pair(&format!("{prefix}d"), [28, 29], [29, 30]),
        pair(&format!("{prefix}e"), [4095, 4096], [4093, 4094]),
    ]
}

/// The bundle choices of the figure sets `fig3` (TFIM h_x=0.01), `fig4`
/// (TFIM h_x=1) and `fig5` (XXZ Δ=1), all at 12 sites.
pub fn preset(name: &str) -> Result<Preset> {
    match name {
        "fig3" => Ok(Preset {
            name: name.into(),
            model: ModelSpec::tfim(12, 0.01)?,
            pairs: ising_pairs("fig3"),
            note: None,
        }),
        "fig4" => Ok(Preset {
            name: name.into(),
            model: ModelSpec::tfim(12, 1.0)?,
            pairs: ising_pairs("fig4"),
            note: None,
        }),
        "fig5" => Ok(Preset {
            name: name.into(),
            model: ModelSpec::xxz(12, 1.0)?,
            pairs: vec![
                pair("fig5a", 1..=10, 11..=20),
                pair("fig5b", 2048..=2058, 1..=10),
                pair("fig5c", 2048..=2058, 2059..=2068),
                pair("fig5d", 4086..=4096, 4076..=4085),
            ],
            note: Some(
                "ranges 2048-2058 and 4086-4096 hold 11 states although the groups are \
                 described as ten states; the ranges are used as written"
                    .into(),
            ),
        }),
        other => Err(Error::validation(format!(
            "unknown preset '{other}' (expected fig3, fig4 or fig5)"
        ))),
    }
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub spectrum: Spectrum,
    pub cache_path: Option<PathBuf>,
    pub from_cache: bool,
}

/// Full spectrum of `spec`, read from or written to the cache directory when
/// one is configured.
pub fn load_or_solve(spec: &ModelSpec, cfg: &ExperimentConfig) -> Result<SolveOutcome> {
    let cache_path = cfg.cache_path(spec);
    if let Some(path) = &cache_path {
        if path.exists() {
            let spectrum = read_spectrum(path)?;
            if spectrum.model != *spec {
                return Err(Error::Integrity {
                    path: path.clone(),
                    reason: format!("cache holds {}, expected {spec}", spectrum.model),
                });
            }
            return Ok(SolveOutcome {
                spectrum,
                cache_path,
                from_cache: true,
            });
        }
    }
    let spectrum = full_spectrum(&spec.build()?)?;
    if let Some(path) = &cache_path {
        write_spectrum(path, &spectrum)?;
    }
    Ok(SolveOutcome {
        spectrum,
        cache_path,
        from_cache: false,
    })
}

pub fn run_solve(cfg: &ExperimentConfig) -> Result<SolveOutcome> {
    load_or_solve(&cfg.model_spec()?, cfg)
}

#[derive(Clone, Debug)]
pub struct OverlapOutcome {
    pub gamma: OverlapMatrix,
    pub log_gamma: DenseMatrix,
    pub image: GrayImage,
    pub report: TruncatabilityReport,
    pub report_text: String,
    pub files: Vec<PathBuf>,
}

fn check_bundle(spectrum: &Spectrum, bundle: &[usize], name: &str) -> Result<()> {
    if bundle.is_empty() {
        return Err(Error::validation(format!("{name} is empty")));
    }
    if let Some(&k) = bundle.iter().find(|&&k| k == 0 || k > spectrum.len()) {
        return Err(Error::validation(format!(
            "{name}: state index {k} outside 1..={}",
            spectrum.len()
        )));
    }
    Ok(())
}

/// Γ between two bundles of `spectrum`, without touching the file system.
pub fn compute_overlap(
    spectrum: &Spectrum,
    bundle_a: &[usize],
    bundle_b: &[usize],
    cfg: &ExperimentConfig,
    note: Option<&str>,
) -> Result<OverlapOutcome> {
    check_bundle(spectrum, bundle_a, "bundle A")?;
    check_bundle(spectrum, bundle_b, "bundle B")?;
    let sites = spectrum.model.sites;
    let bond = cfg.bond.unwrap_or(sites / 2);
    let build = |bundle: &[usize]| {
        bundled_mps_from_vectors(&spectrum.bundle_matrix(bundle)?, cfg.cutoff)?
            .with_state_indices(bundle.to_vec())
    };
    let a = build(bundle_a)?;
    let b = build(bundle_b)?;
    let gamma = weighted_overlap(&a, &b, bond)?;
    let report = truncatability_report(&gamma, cfg.row_cutoff, cfg.threshold_log10)?;
    let log_gamma = log_abs_matrix(&gamma.entries, cfg.floor_log10);
    let image = quantize(&log_gamma, cfg.floor_log10);

    let mut text = String::new();
    writeln!(text, "model: {}", spectrum.model).ok();
    if let Some(note) = note {
        writeln!(text, "note: {note}").ok();
    }
    writeln!(text, "bond: {bond}").ok();
    for (name, bundle) in [("A", bundle_a), ("B", bundle_b)] {
        writeln!(text, "bundle {name}: {} (g={})", format_index_list(bundle), bundle.len()).ok();
    }
    writeln!(text, "construction cutoff: {:e}", cfg.cutoff).ok();
    writeln!(text, "gamma: {} x {}", report.rows, report.cols).ok();
    writeln!(text, "row/column cutoff: {:e}", report.cutoff).ok();
    writeln!(
        text,
        "kept rows: {} of {} ({} truncatable)",
        report.kept_rows,
        report.rows,
        report.truncatable_rows()
    )
    .ok();
    writeln!(
        text,
        "kept columns: {} of {} ({} truncatable)",
        report.kept_cols,
        report.cols,
        report.truncatable_cols()
    )
    .ok();
    writeln!(
        text,
        "high-weight entries (log10|gamma| > {}): {}",
        report.threshold_log10, report.high_weight_count
    )
    .ok();
    for (name, bundle) in [("A", bundle_a), ("B", bundle_b)] {
        writeln!(text, "energies {name}:").ok();
        for &k in bundle {
            writeln!(text, "  {k:>5} {:+.15e}", spectrum.energy(k)?).ok();
        }
    }

    Ok(OverlapOutcome {
        gamma,
        log_gamma,
        image,
        report,
        report_text: text,
        files: Vec::new(),
    })
}

/// Writes `gamma.csv`, `gamma_log10.csv`, `gamma.pgm` and `report.txt`.
pub fn write_overlap_outputs(outcome: &mut OverlapOutcome, dir: &Path) -> Result<()> {
    let files = [
        ("gamma.csv", matrix_to_csv(&outcome.gamma.entries)?),
        ("gamma_log10.csv", matrix_to_csv(&outcome.log_gamma)?),
        ("gamma.pgm", pgm_bytes(&outcome.image)),
        ("report.txt", outcome.report_text.clone().into_bytes()),
    ];
    outcome.files.clear();
    for (name, bytes) in files {
        let path = dir.join(name);
        atomic_write(&path, &bytes)?;
        outcome.files.push(path);
    }
    Ok(())
}

pub fn run_overlap(cfg: &ExperimentConfig) -> Result<OverlapOutcome> {
    let solved = run_solve(cfg)?;
    let mut outcome = compute_overlap(&solved.spectrum, &cfg.bundle_a, &cfg.bundle_b, cfg, None)?;
    write_overlap_outputs(&mut outcome, &cfg.output_dir)?;
    Ok(outcome)
}

/// Runs every pair of a preset, writing each into `output_dir/<label>/`.
pub fn run_preset(preset: &Preset, cfg: &ExperimentConfig) -> Result<Vec<(String, OverlapOutcome)>> {
    let solved = load_or_solve(&preset.model, cfg)?;
    let mut out = Vec::new();
    for p in &preset.pairs {
        let mut outcome = compute_overlap(
            &solved.spectrum,
            &p.bundle_a,
            &p.bundle_b,
            cfg,
            preset.note.as_deref(),
        )?;
        write_overlap_outputs(&mut outcome, &cfg.output_dir.join(&p.label))?;
        out.push((p.label.clone(), outcome));
    }
    Ok(out)
}

/// Pairwise quantities for two states `α < β`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairMetrics {
    pub alpha: usize,
    pub beta: usize,
    pub delta_alpha: f64,
    pub delta_beta: f64,
    pub r: f64,
    pub energy_gap: f64,
    pub energy_truncated: f64,
    pub frobenius_lhs: f64,
    pub frobenius_rhs: f64,
    pub frobenius_holds: bool,
    /// `None` when the one-body density matrices have different traces.
    pub similarity: Option<(Similarity, f64)>,
}

#[derive(Clone, Debug)]
pub struct MetricsOutcome {
    pub basis_state: usize,
    pub m: usize,
    pub similarity_m: usize,
    pub pairs: Vec<PairMetrics>,
    pub r_report: Option<MetricReport>,
    pub energy_report: Option<MetricReport>,
    pub csv: Vec<u8>,
    pub report_text: String,
    pub files: Vec<PathBuf>,
}

/// One-body density matrix and natural orbitals of state `k`.
pub fn state_orbitals(spectrum: &Spectrum, k: usize) -> Result<(DensityMatrix, NaturalOrbitalSet)> {
    let rho = one_body_rdm(&spectrum.state(k)?, RdmMethod::OperatorForm)?;
    let orbitals = natural_orbitals(&rho)?.with_source(k);
    Ok((rho, orbitals))
}

/// Block size for the similarity test: orbitals with occupation above the
/// truncation target, kept strictly inside `1..N`.
pub fn similarity_rank(basis: &NaturalOrbitalSet) -> usize {
    basis
        .count_above(DEFAULT_TRUNCATION_TARGET)
        .clamp(1, basis.dim().saturating_sub(1).max(1))
}

pub fn compute_metrics(spectrum: &Spectrum, cfg: &ExperimentConfig) -> Result<MetricsOutcome> {
    let states = &cfg.states;
    check_bundle(spectrum, states, "state set")?;
    let sites = spectrum.model.sites;
    let basis_state = cfg.basis_state.unwrap_or(states[0]);
    let (_, basis) = state_orbitals(spectrum, basis_state)?;
    let m = match cfg.m {
        Some(m) if m == 0 || m > sites => {
            return Err(Error::validation(format!("m = {m} outside 1..={sites}")))
        }
        Some(m) => m,
        None => basis.rank_for_target(DEFAULT_TRUNCATION_TARGET),
    };
    let couplings = match &cfg.couplings {
        Some(c) => LocalCouplings::new(c.clone())?,
        None => LocalCouplings::uniform(sites),
    };
    if couplings.len() != sites {
        return Err(Error::validation(format!(
            "{} couplings given for {sites} sites",
            couplings.len()
        )));
    }

    let per_state = states
        .iter()
        .map(|&k| state_orbitals(spectrum, k))
        .collect::<Result<Vec<_>>>()?;
    let deltas = per_state
        .iter()
        .map(|(rho, _)| truncation_error(rho, &basis, m))
        .collect::<Result<Vec<_>>>()?;

    let mut pairs = Vec::new();
    let mut similarity_m = 0;
    for a in 0..states.len() {
        for b in (a + 1)..states.len() {
            let (rho_a, orb_a) = &per_state[a];
            let (rho_b, orb_b) = &per_state[b];
            let de = energy_difference_truncated(rho_a, rho_b, &basis, m, &couplings, cfg.energy_form)?;
            let bound = frobenius_bound_check(rho_a, rho_b, &basis, m, &couplings, cfg.energy_form)?;
            similarity_m = similarity_rank(orb_a);
            let similarity = match connecting_unitary(orb_a, orb_b) {
                Ok(u) => {
                    let v = similarity_classifier(&u, similarity_m, cfg.similarity_tol)?;
                    Some((v.verdict, v.off_block_mass))
                }
                Err(Error::TraceMismatch { .. }) => None,
                Err(e) => return Err(e),
            };
            pairs.push(PairMetrics {
                alpha: states[a],
                beta: states[b],
                delta_alpha: deltas[a].value,
                delta_beta: deltas[b].value,
                r: relative_truncation(&deltas[a], &deltas[b])?,
                energy_gap: (spectrum.energy(states[a])? - spectrum.energy(states[b])?).abs(),
                energy_truncated: de,
                frobenius_lhs: bound.lhs,
                frobenius_rhs: bound.rhs,
                frobenius_holds: bound.holds,
                similarity,
            });
        }
    }

    let (r_report, energy_report) = if states.len() >= 3 {
        let index_of = |k: usize| states.iter().position(|&s| s == k).expect("listed state");
        let r = metric_axiom_suite(
            states,
            |x, y| relative_truncation(&deltas[index_of(x)], &deltas[index_of(y)]),
            AXIOM_TOL,
        )?;
        let e = metric_axiom_suite(
            states,
            |x, y| Ok((spectrum.energy(x)? - spectrum.energy(y)?).abs()),
            AXIOM_TOL,
        )?;
        (Some(r), Some(e))
    } else {
        (None, None)
    };

    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record([
        "alpha",
        "beta",
        "delta_alpha",
        "delta_beta",
        "r",
        "abs_energy_gap",
        "energy_truncated",
        "frobenius_lhs",
        "frobenius_rhs",
        "frobenius_holds",
        "off_block_mass",
        "similarity",
    ])?;
    for p in &pairs {
        let (verdict, mass) = match p.similarity {
            Some((Similarity::Similar, mass)) => ("similar".to_string(), format!("{mass:.16e}")),
            Some((Similarity::Dissimilar, mass)) => ("dissimilar".to_string(), format!("{mass:.16e}")),
            None => ("trace-mismatch".to_string(), String::new()),
        };
        w.write_record([
            p.alpha.to_string(),
            p.beta.to_string(),
            format!("{:.16e}", p.delta_alpha),
            format!("{:.16e}", p.delta_beta),
            format!("{:.16e}", p.r),
            format!("{:.16e}", p.energy_gap),
            format!("{:.16e}", p.energy_truncated),
            format!("{:.16e}", p.frobenius_lhs),
            format!("{:.16e}", p.frobenius_rhs),
            p.frobenius_holds.to_string(),
            mass,
            verdict,
        ])?;
    }
    let csv = w
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;

    let mut text = String::new();
    writeln!(text, "model: {}", spectrum.model).ok();
    writeln!(text, "states: {}", format_index_list(states)).ok();
    writeln!(text, "basis state: {basis_state}").ok();
    writeln!(text, "m: {m}").ok();
    writeln!(text, "energy form: {:?}", cfg.energy_form).ok();
    writeln!(text, "pairs: {}", pairs.len()).ok();
    let failed = pairs.iter().filter(|p| !p.frobenius_holds).count();
    writeln!(text, "frobenius bound failures: {failed}").ok();
    match (&r_report, &energy_report) {
        (Some(r), Some(e)) => {
            writeln!(text, "\n[relative truncation r]").ok();
            write!(text, "{r}").ok();
            writeln!(text, "\n[|E_alpha - E_beta|]").ok();
            write!(text, "{e}").ok();
        }
        _ => {
            writeln!(text, "axiom suite skipped: fewer than 3 states").ok();
        }
    }

    Ok(MetricsOutcome {
        basis_state,
        m,
        similarity_m,
        pairs,
        r_report,
        energy_report,
        csv,
        report_text: text,
        files: Vec::new(),
    })
}

/// Writes `metrics.csv` and `metrics_report.txt` into the output directory.
pub fn run_metrics(cfg: &ExperimentConfig) -> Result<MetricsOutcome> {
    let solved = run_solve(cfg)?;
    let mut outcome = compute_metrics(&solved.spectrum, cfg)?;
    for (name, bytes) in [
        ("metrics.csv", outcome.csv.clone()),
        ("metrics_report.txt", outcome.report_text.clone().into_bytes()),
    ] {
        let path = cfg.output_dir.join(name);
        atomic_write(&path, &bytes)?;
        outcome.files.push(path);
    }
    Ok(outcome)
}
