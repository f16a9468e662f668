use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "eprlab", version, about = "Simulate, reconstruct and analyse two-mode squeezed states")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand. Precedence: built-in defaults, then
/// the preset, then the config file, then explicit flags.
#[derive(Debug, Args)]
pub struct Common {
    /// Master seed; every random stream derives from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = one per core). Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,
    /// Named parameter set: fig3, fig_s2 or fig_s3.
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// JSON file with subcommand parameters; unknown keys are rejected.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Run directory; defaults to runs/<command>-seed<seed>.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Log progress to stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw quadrature samples and the matching atom-count shots.
    Simulate(SimulateArgs),
    /// Maximum-likelihood reconstruction from a sample file.
    Tomo(TomoArgs),
    /// EPR and inseparability report from a sample file.
    Criteria(CriteriaArgs),
    /// Entanglement and sensitivity metrics of a density-matrix file.
    Metrics(MetricsArgs),
    /// Regenerate the tables behind one figure.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Squeezing parameter.
    #[arg(long)]
    pub xi: Option<f64>,
    /// Samples per phase.
    #[arg(long)]
    pub p: Option<usize>,
    /// Explicit phases in radians, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "n_theta")]
    pub thetas: Option<Vec<f64>>,
    /// Use the phases j*pi/n, j = 0..n.
    #[arg(long)]
    pub n_theta: Option<usize>,
    /// Pair-phase jitter width, rad.
    #[arg(long)]
    pub sigma_phase: Option<f64>,
    /// Relative shot-to-shot fluctuation of the transfer fraction.
    #[arg(long)]
    pub rf_noise: Option<f64>,
    /// Extra variance of the sum quadrature.
    #[arg(long)]
    pub sum_shift: Option<f64>,
    /// Gaussian noise on each detected count, in atoms.
    #[arg(long)]
    pub detection_noise: Option<f64>,
    /// Transfer fraction s^2 of the homodyne pulse.
    #[arg(long)]
    pub transfer: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TomoArgs {
    /// Sample CSV (theta_rad,x_a,x_b).
    pub samples: PathBuf,
    /// Histogram bin width
    #[arg(long)]
    pub dx: Option<f64>,
    /// Fock cutoff per mode
    #[arg(long)]
    pub n_cut: Option<usize>,
    /// Iteration cap
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Fixed-point residual for convergence
    #[arg(long)]
    pub tol: Option<f64>,
    /// Record the smallest eigenvalue of every iterate.
    #[arg(long)]
    pub record_spectrum: bool,
}

#[derive(Debug, Args)]
pub struct CriteriaArgs {
    /// Sample CSV (theta_rad,x_a,x_b).
    pub samples: PathBuf,
    /// Mean occupation of mode A.
    #[arg(long)]
    pub n_a: Option<f64>,
    /// Mean occupation of mode B.
    #[arg(long)]
    pub n_b: Option<f64>,
    /// Local-oscillator atom number.
    #[arg(long)]
    pub n0: Option<f64>,
    /// Bootstrap resamples for the standard errors.
    #[arg(long)]
    pub bootstrap: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Density-matrix JSON file.
    pub rho: PathBuf,
    /// Squeezing parameter of the reference state.
    #[arg(long)]
    pub target_xi: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Figure {
    Fig3,
    FigS2,
    FigS3,
}

impl Figure {
    pub fn id(self) -> &'static str {
        match self {
            Figure::Fig3 => "fig3",
            Figure::FigS2 => "fig_s2",
            Figure::FigS3 => "fig_s3",
        }
    }
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// Figure id; may be given through --preset instead.
    pub figure: Option<Figure>,
}
