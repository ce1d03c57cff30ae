//! `bundlemps`: exact spectra, bundled-MPS overlap maps and density-matrix
//! metrics for small spin chains.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bundlemps::experiment::{preset, run_metrics, run_overlap, run_preset, run_solve, ExperimentConfig};
use bundlemps::verify::{run_all, VerifyOptions};

#[derive(Parser)]
#[command(name = "bundlemps", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Diagonalize the model and store the full spectrum in the cache.
    Solve(Common),
    /// Γ overlap matrix, heatmap and truncation report for two bundles.
    Overlap {
        #[command(flatten)]
        common: Common,
        /// Run a figure set (fig3, fig4 or fig5) instead of a single pair.
        #[arg(long)]
        preset: Option<String>,
    },
    /// Pairwise truncation errors, energy differences and metric-axiom checks.
    Metrics(Common),
    /// Run every invariant suite.
    Verify {
        /// Chains of at most 8 sites only.
        #[arg(long)]
        quick: bool,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
}

#[derive(Args)]
struct Common {
    /// `key = value` file applied before the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// tfim or xxz
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    sites: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    hx: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<String>,
    /// 1-based state indices, e.g. `1,2` or `1-10`.
    #[arg(long)]
    bundle_a: Option<String>,
    #[arg(long)]
    bundle_b: Option<String>,
    /// Bond to examine; defaults to the middle bond.
    #[arg(long)]
    bond: Option<String>,
    /// Relative singular-value cutoff while building bundles.
    #[arg(long)]
    cutoff: Option<String>,
    /// Γ rows/columns entirely below this are truncatable.
    #[arg(long)]
    row_cutoff: Option<String>,
    /// log10 threshold for high-weight Γ entries.
    #[arg(long, allow_hyphen_values = true)]
    threshold: Option<String>,
    /// log10 floor of the heatmap.
    #[arg(long, allow_hyphen_values = true)]
    floor: Option<String>,
    #[arg(long)]
    output_dir: Option<String>,
    #[arg(long)]
    cache_dir: Option<String>,
    /// Always diagonalize; never read or write the cache.
    #[arg(long)]
    no_cache: bool,
    /// States compared by `metrics`.
    #[arg(long)]
    states: Option<String>,
    /// Orbital rank of the truncated metrics.
    #[arg(long)]
    m: Option<String>,
    /// State whose natural orbitals form the common basis.
    #[arg(long)]
    basis_state: Option<String>,
    /// Comma-separated local couplings.
    #[arg(long, allow_hyphen_values = true)]
    couplings: Option<String>,
    /// Keep off-diagonal terms in the truncated energy difference.
    #[arg(long)]
    no_ultralocal: bool,
    /// Off-block mass tolerance of the similarity classifier.
    #[arg(long)]
    tol: Option<String>,
}

impl Common {
    fn config(&self) -> bundlemps::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        let flags = [
            ("model", &self.model),
            ("sites", &self.sites),
            ("hx", &self.hx),
            ("delta", &self.delta),
            ("bundle_a", &self.bundle_a),
            ("bundle_b", &self.bundle_b),
            ("bond", &self.bond),
            ("cutoff", &self.cutoff),
            ("row_cutoff", &self.row_cutoff),
            ("threshold", &self.threshold),
            ("floor", &self.floor),
            ("output_dir", &self.output_dir),
            ("cache_dir", &self.cache_dir),
            ("states", &self.states),
            ("m", &self.m),
            ("basis_state", &self.basis_state),
            ("couplings", &self.couplings),
            ("similarity_tol", &self.tol),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        if self.no_cache {
            cfg.use_cache = false;
        }
        if self.no_ultralocal {
            cfg.set("ultralocal", "false")?;
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> bundlemps::Result<bool> {
    match cli.command {
        Command::Solve(common) => {
            let cfg = common.config()?;
            let out = run_solve(&cfg)?;
            let spectrum = &out.spectrum;
            println!("{}: {} energies", spectrum.model, spectrum.len());
            if spectrum.len() <= 64 {
                for e in &spectrum.energies {
                    println!("{e:+.15e}");
                }
            } else {
                let lo = &spectrum.energies[..3];
                let hi = &spectrum.energies[spectrum.len() - 3..];
                println!("lowest: {lo:?}");
                println!("highest: {hi:?}");
            }
            match (&out.cache_path, out.from_cache) {
                (Some(p), true) => println!("read from cache {}", p.display()),
                (Some(p), false) => println!("cached at {}", p.display()),
                (None, _) => {}
            }
        }
        Command::Overlap { common, preset: name } => {
            let cfg = common.config()?;
            match name {
                Some(name) => {
                    let p = preset(&name)?;
                    for (label, outcome) in run_preset(&p, &cfg)? {
                        let r = &outcome.report;
                        println!(
                            "{label}: {}x{} gamma, {} truncatable rows, {} high-weight entries",
                            r.rows,
                            r.cols,
                            r.truncatable_rows(),
                            r.high_weight_count
                        );
                    }
                }
                None => {
                    let outcome = run_overlap(&cfg)?;
                    print!("{}", outcome.report_text);
                    for f in &outcome.files {
                        println!("wrote {}", f.display());
                    }
                }
            }
        }
        Command::Metrics(common) => {
            let cfg = common.config()?;
            let outcome = run_metrics(&cfg)?;
            print!("{}", outcome.report_text);
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Verify { quick, cache_dir, seed } => {
            let results = run_all(&VerifyOptions { quick, cache_dir, seed });
            let mut ok = true;
            for r in &results {
                println!("{r}");
                ok &= r.passed();
            }
            return Ok(ok);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
