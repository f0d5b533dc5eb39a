//! Command-line experiments for the asymmetric multibaker maps.

pub mod config;
mod error;
pub mod experiments;
pub mod output;
pub mod svg;

use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

pub use config::{Experiment, ExperimentConfig, RunSpec};
pub use error::{CliError, CliResult};
use output::{write_outputs, OutputFile, RunManifest};

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "MULTIBAKER_THREADS";

#[derive(Debug, Parser)]
#[command(name = "multibaker", version, about = "Classical and quantum asymmetric multibaker experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Asymptotic current J∞ over D1 (and D, Δp).
    CurrentSweep(CommonArgs),
    /// Eigenphases of the Bloch operators over the k-grid.
    Spectrum(CommonArgs),
    /// Cumulative level-spacing distribution against Poisson and CUE.
    LevelStats(CommonArgs),
    /// Quantum vs classical p(x, t) and Husimi panels.
    Evolve(CommonArgs),
}

impl Command {
    pub fn split(self) -> (Experiment, CommonArgs) {
        match self {
            Self::CurrentSweep(a) => (Experiment::CurrentSweep, a),
            Self::Spectrum(a) => (Experiment::Spectrum, a),
            Self::LevelStats(a) => (Experiment::LevelStats, a),
            Self::Evolve(a) => (Experiment::Evolve, a),
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Flat `key = value` config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Cell dimension(s) D (comma-separated for current-sweep).
    #[arg(long = "D", value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    /// Branch dimension(s) D1 (comma-separated).
    #[arg(long = "D1", value_delimiter = ',')]
    pub d1: Option<Vec<usize>>,
    /// Inclusive D1 range, `lo..=hi` or `lo:hi`.
    #[arg(long = "D1-range", value_parser = config::parse_range)]
    pub d1_range: Option<(usize, usize)>,
    /// Momentum strip width(s) Δp in states (comma-separated).
    #[arg(long = "delta-p", value_delimiter = ',')]
    pub delta_p: Option<Vec<usize>>,
    /// Momentum strip width δp as a fraction; Δp = round(D·δp).
    #[arg(long = "delta-p-width")]
    pub delta_p_width: Option<f64>,
    #[arg(long = "n-k")]
    pub n_k: Option<usize>,
    #[arg(long = "t-max")]
    pub t_max: Option<usize>,
    /// Monte Carlo particles for the classical cross-check (0 = off).
    #[arg(long = "mc-samples")]
    pub mc_samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write SVG plots.
    #[arg(long)]
    pub svg: bool,
    /// Allow D above the desk-scale cap.
    #[arg(long = "large-d")]
    pub large_d: bool,
    #[arg(long = "husimi-t")]
    pub husimi_t: Option<usize>,
    #[arg(long = "husimi-cells", value_delimiter = ',', allow_hyphen_values = true)]
    pub husimi_cells: Option<Vec<i64>>,
    #[arg(long = "husimi-resolution")]
    pub husimi_resolution: Option<usize>,
}

impl CommonArgs {
    fn overrides(&self) -> ExperimentConfig {
        ExperimentConfig {
            experiment: None,
            dims: self.dims.clone(),
            d1: self.d1.clone(),
            d1_range: self.d1_range,
            delta_p: self.delta_p.clone(),
            delta_p_width: self.delta_p_width,
            n_k: self.n_k,
            t_max: self.t_max,
            mc_samples: self.mc_samples,
            seed: self.seed,
            out: self.out.clone(),
            svg: self.svg.then_some(true),
            large_d: self.large_d.then_some(true),
            husimi_t: self.husimi_t,
            husimi_cells: self.husimi_cells.clone(),
            husimi_resolution: self.husimi_resolution,
        }
    }

    /// Reads the config file (if any), applies flags and validates.
    pub fn resolve(&self, experiment: Experiment) -> CliResult<RunSpec> {
        let base = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                ExperimentConfig::parse(&text)?
            }
            None => ExperimentConfig::default(),
        };
        base.overridden_by(self.overrides()).validate(experiment)
    }
}

/// Worker count from `MULTIBAKER_THREADS`, if set.
pub fn thread_cap() -> CliResult<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::usage(format!("{THREADS_ENV}='{v}' must be a positive integer"))),
        },
        Err(_) => Ok(None),
    }
}

/// Validated spec -> computed outputs -> files on disk plus manifest.
pub fn execute(spec: &RunSpec) -> CliResult<Vec<OutputFile>> {
    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let clock = Instant::now();
    let files = experiments::run(spec)?;
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        experiment: spec.experiment.to_string(),
        config: spec.snapshot.to_text(),
        threads: rayon::current_num_threads(),
        started_unix_seconds: started,
        wall_clock_seconds: clock.elapsed().as_secs_f64(),
        outputs: RunManifest::entries(&files),
    };
    write_outputs(&spec.out, &files, &manifest)?;
    Ok(files)
}

/// Full command-line entry point. Everything is validated before any compute.
pub fn run_cli(cli: Cli) -> CliResult<Vec<OutputFile>> {
    let (experiment, args) = cli.command.split();
    let spec = args.resolve(experiment)?;
    let threads = thread_cap()?;
    if let Some(n) = threads {
        // a pool that already exists (e.g. in tests) is simply reused
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    execute(&spec)
}
