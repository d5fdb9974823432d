//! Run settings merged from command-line flags and an optional JSON file.
//! A flag given on the command line always wins over the file.

use crate::error::{CliError, CliResult};
use clap::{Args, ValueEnum};
use ridge_tucker::als::{AlsConfig, CoreUpdate};
use ridge_tucker::sketch::SketchConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const DEFAULT_LAMBDA: f64 = 0.001;
pub const DEFAULT_EPSILON: f64 = 0.1;
pub const DEFAULT_DELTA: f64 = 0.1;
pub const DEFAULT_NOISE_FRACTION: f64 = 0.01;
pub const DEFAULT_NOISE_SIGMA: f64 = 1.0;
pub const DEFAULT_PLANTED_RANK: usize = 8;

/// Tensors above this many entries get a memory estimate before allocation.
pub const LARGE_TENSOR_ENTRIES: usize = 64 * 64 * 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Sketched,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Input tensor: DTEN binary, or `.csv` with `i,j,...,value` lines
    #[arg(long)]
    pub input: Option<PathBuf>,

    /// Tensor shape, e.g. 32,32,32 or 32x32x32
    #[arg(long)]
    pub shape: Option<String>,

    /// Learned Tucker ranks (generate: planted ranks)
    #[arg(long)]
    pub ranks: Option<String>,

    /// Ranks of the planted model for synthetic inputs
    #[arg(long)]
    pub planted_ranks: Option<String>,

    /// Ridge regularization strength [default: 0.001]
    #[arg(long)]
    pub lambda: Option<f64>,

    /// Sketch accuracy [default: 0.1]
    #[arg(long)]
    pub epsilon: Option<f64>,

    /// Sketch failure probability [default: 0.1]
    #[arg(long)]
    pub delta: Option<f64>,

    /// Core update [default: exact]
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,

    /// Seed for initialization, synthetic data and sketching [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,

    /// Maximum ALS sweeps [default: 50]
    #[arg(long)]
    pub max_iters: Option<usize>,

    /// Relative loss change that stops ALS [default: 1e-6]
    #[arg(long)]
    pub tol: Option<f64>,

    /// Existing directory that receives the outputs [default: .]
    #[arg(long)]
    pub out_dir: Option<PathBuf>,

    /// Fixed number of sampled rows per sketched core update
    #[arg(long)]
    pub sample_override: Option<usize>,

    /// Fraction of entries perturbed in synthetic inputs [default: 0.01]
    #[arg(long)]
    pub noise_fraction: Option<f64>,

    /// Standard deviation of the synthetic noise [default: 1.0]
    #[arg(long)]
    pub noise_sigma: Option<f64>,

    /// JSON file with any of the settings above (snake_case keys)
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// JSON counterpart of [`CommonArgs`].
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub input: Option<PathBuf>,
    pub shape: Option<Vec<usize>>,
    pub ranks: Option<Vec<usize>>,
    pub planted_ranks: Option<Vec<usize>>,
    pub lambda: Option<f64>,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub mode: Option<Mode>,
    pub seed: Option<u64>,
    pub max_iters: Option<usize>,
    pub tol: Option<f64>,
    pub out_dir: Option<PathBuf>,
    pub sample_override: Option<usize>,
    pub noise_fraction: Option<f64>,
    pub noise_sigma: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| CliError::Config {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub input: Option<PathBuf>,
    pub shape: Option<Vec<usize>>,
    pub ranks: Option<Vec<usize>>,
    pub planted_ranks: Option<Vec<usize>>,
    pub lambda: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub mode: Mode,
    pub seed: u64,
    pub max_iters: usize,
    pub tol: f64,
    pub out_dir: PathBuf,
    pub sample_override: Option<usize>,
    pub noise_fraction: f64,
    pub noise_sigma: f64,
}

impl Settings {
    pub fn resolve(args: &CommonArgs) -> CliResult<Self> {
        let file = match &args.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let dims = |flag: &Option<String>, file: &Option<Vec<usize>>| -> CliResult<Option<Vec<usize>>> {
            match flag {
                Some(s) => parse_dims(s).map(Some),
                None => Ok(file.clone()),
            }
        };
        let defaults = AlsConfig::default();
        let settings = Self {
            input: args.input.clone().or(file.input),
            shape: dims(&args.shape, &file.shape)?,
            ranks: dims(&args.ranks, &file.ranks)?,
            planted_ranks: dims(&args.planted_ranks, &file.planted_ranks)?,
            lambda: args.lambda.or(file.lambda).unwrap_or(DEFAULT_LAMBDA),
            epsilon: args.epsilon.or(file.epsilon).unwrap_or(DEFAULT_EPSILON),
            delta: args.delta.or(file.delta).unwrap_or(DEFAULT_DELTA),
            mode: args.mode.or(file.mode).unwrap_or(Mode::Exact),
            seed: args.seed.or(file.seed).unwrap_or(0),
            max_iters: args.max_iters.or(file.max_iters).unwrap_or(defaults.max_iterations),
            tol: args.tol.or(file.tol).unwrap_or(defaults.convergence_tol),
            out_dir: args.out_dir.clone().or(file.out_dir).unwrap_or_else(|| PathBuf::from(".")),
            sample_override: args.sample_override.or(file.sample_override),
            noise_fraction: args.noise_fraction.or(file.noise_fraction).unwrap_or(DEFAULT_NOISE_FRACTION),
            noise_sigma: args.noise_sigma.or(file.noise_sigma).unwrap_or(DEFAULT_NOISE_SIGMA),
        };
        if !settings.out_dir.is_dir() {
            return Err(CliError::Usage(format!(
                "output directory {} does not exist",
                settings.out_dir.display()
            )));
        }
        Ok(settings)
    }

    pub fn sketch_config(&self) -> CliResult<SketchConfig> {
        let mut cfg = SketchConfig::new(self.epsilon, self.delta, self.seed)?;
        if let Some(s) = self.sample_override {
            if s == 0 {
                return Err(CliError::Usage("--sample-override must be positive".into()));
            }
            cfg = cfg.with_sample_override(s);
        }
        Ok(cfg)
    }

    pub fn als_config(&self, mode: Mode) -> CliResult<AlsConfig> {
        let core_update = match mode {
            Mode::Exact => CoreUpdate::Exact,
            Mode::Sketched => CoreUpdate::Sketched(self.sketch_config()?),
        };
        let cfg = AlsConfig {
            lambda: self.lambda,
            max_iterations: self.max_iters,
            convergence_tol: self.tol,
            core_update,
            seed: self.seed,
            record_history: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Planted ranks, defaulting to 8 per mode clipped to the shape.
    pub fn planted_ranks_for(&self, shape: &[usize]) -> Vec<usize> {
        self.planted_ranks
            .clone()
            .unwrap_or_else(|| shape.iter().map(|&i| i.min(DEFAULT_PLANTED_RANK)).collect())
    }

    pub fn out_path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

/// Parses `32,32,32`, `32x32x32` or `(32, 32, 32)`.
pub fn parse_dims(s: &str) -> CliResult<Vec<usize>> {
    let trimmed = s.trim().trim_start_matches('(').trim_end_matches(')');
    let dims = trimmed
        .split([',', 'x', 'X'])
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("cannot parse {s:?} as a list of dimensions")))
        })
        .collect::<CliResult<Vec<_>>>()?;
    if dims.is_empty() || dims.contains(&0) {
        return Err(CliError::Usage(format!("dimensions in {s:?} must be positive")));
    }
    Ok(dims)
}

pub fn format_dims(d: &[usize]) -> String {
    d.iter().map(usize::to_string).collect::<Vec<_>>().join("x")
}

/// Bytes needed for a dense tensor of this shape plus one working copy.
pub fn memory_estimate(shape: &[usize]) -> Option<u128> {
    shape
        .iter()
        .try_fold(1u128, |acc, &i| acc.checked_mul(i as u128))
        .map(|n| n * 8 * 2)
}

pub fn warn_if_large(shape: &[usize]) {
    let numel: u128 = shape.iter().map(|&i| i as u128).product();
    if numel > LARGE_TENSOR_ENTRIES as u128 {
        match memory_estimate(shape) {
            Some(bytes) => eprintln!(
                "note: shape {} has {numel} entries; expect about {:.2} GiB of memory",
                format_dims(shape),
                bytes as f64 / (1u64 << 30) as f64
            ),
            None => eprintln!("note: shape {} overflows the addressable size", format_dims(shape)),
        }
    }
}
