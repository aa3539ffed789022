use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "gradfit",
    version,
    about = "Gradient-enhanced polynomial surrogates and their experiments",
    args_override_self = true
)]
pub struct Cli {
    /// Plain-text `key = value` file; keys are long flag names. Flags given
    /// on the command line take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep the basis size and compare fits with and without gradients.
    Compare(CompareArgs),
    /// Fit a surrogate to a function or to sample data.
    Fit(FitArgs),
    /// Evaluate a surrogate and its gradient at points from a CSV file.
    Eval(EvalArgs),
    /// Draw a point set.
    Sample(SampleArgs),
    /// Draw a lognormal random field snapshot.
    Field(FieldArgs),
    /// DC solve of a netlist with parameter sensitivities.
    Dc(DcArgs),
    /// Backward-Euler transient of a netlist with parameter sensitivities.
    Dae(DaeArgs),
    /// Moments and CDF of a surrogate under its input distribution.
    Stats(StatsArgs),
}

#[derive(Debug, Clone, Args)]
pub struct FunctionArgs {
    /// `model`, `sine`, or an expression in x1, x2, …
    #[arg(long, default_value = "model")]
    pub function: String,
    /// Input dimension when it exceeds the highest variable used.
    #[arg(long)]
    pub dim: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct DomainArgs {
    /// Lower box corner, comma-separated; a single value applies to all axes.
    #[arg(long, default_value = "-2", allow_hyphen_values = true)]
    pub lower: String,
    #[arg(long, default_value = "2", allow_hyphen_values = true)]
    pub upper: String,
}

#[derive(Debug, Clone, Args)]
pub struct BasisArgs {
    /// chebyshev, hermite, hermite-raw or monomial.
    #[arg(long, default_value = "chebyshev")]
    pub family: String,
    /// Degree bound of the index set.
    #[arg(long, default_value_t = 14.0)]
    pub q: f64,
    /// Hyperbolic exponent in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SamplingArgs {
    /// Points kept for evaluation.
    #[arg(long, default_value_t = 50)]
    pub m: usize,
    /// Candidates drawn before maxvol reduction.
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    /// uniform, lhs or normal.
    #[arg(long, default_value = "uniform")]
    pub sampler: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub function: FunctionArgs,
    #[command(flatten)]
    pub domain: DomainArgs,
    #[command(flatten)]
    pub basis: BasisArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// Basis sizes to sweep; defaults to the complete degree levels.
    #[arg(long)]
    pub sizes: Option<String>,
    /// Test grid points per axis.
    #[arg(long, default_value_t = 100)]
    pub test_grid: usize,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub function: FunctionArgs,
    #[command(flatten)]
    pub domain: DomainArgs,
    #[command(flatten)]
    pub basis: BasisArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// Fit to `x, f[, df]` rows from this CSV instead of sampling a function.
    #[arg(long, value_name = "PATH")]
    pub samples: Option<PathBuf>,
    /// Input map: box, standardize or identity.
    #[arg(long, default_value = "box")]
    pub map: String,
    /// Means for the standardize map and the normal sampler.
    #[arg(long, allow_hyphen_values = true)]
    pub mean: Option<String>,
    /// Standard deviations for the standardize map and the normal sampler.
    #[arg(long)]
    pub std: Option<String>,
    /// Fit function values only.
    #[arg(long)]
    pub no_derivatives: bool,
    /// Surrogate output file.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Write `x, f̂` at the fit points.
    #[arg(long, value_name = "PATH")]
    pub predictions: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long, value_name = "PATH")]
    pub surrogate: PathBuf,
    /// CSV whose leading columns are the input coordinates.
    #[arg(long, value_name = "PATH")]
    pub points: PathBuf,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    /// uniform, lhs or maxvol.
    #[arg(long, default_value = "uniform")]
    pub sampler: String,
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    /// Points kept by maxvol.
    #[arg(long, default_value_t = 50)]
    pub m: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[command(flatten)]
    pub domain: DomainArgs,
    #[command(flatten)]
    pub basis: BasisArgs,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FieldArgs {
    /// EOLE nodes per axis on [-1, 1]².
    #[arg(long, default_value_t = 8)]
    pub grid: usize,
    #[arg(long, default_value_t = 0.2)]
    pub sigma: f64,
    /// Truncation order N.
    #[arg(long, default_value_t = 40)]
    pub terms: usize,
    #[arg(long, default_value_t = -0.0430888, allow_hyphen_values = true)]
    pub a: f64,
    #[arg(long, default_value_t = 0.29356)]
    pub b: f64,
    /// Snapshot points per axis.
    #[arg(long, default_value_t = 50)]
    pub resolution: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DcArgs {
    #[arg(long, value_name = "PATH")]
    pub netlist: PathBuf,
    /// Parameter values, comma-separated; defaults to zeros.
    #[arg(long, allow_hyphen_values = true)]
    pub xi: Option<String>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DaeArgs {
    #[arg(long, value_name = "PATH")]
    pub netlist: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub xi: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub h: f64,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct StatsArgs {
    #[arg(long, value_name = "PATH")]
    pub surrogate: PathBuf,
    /// Monte Carlo sample count.
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the empirical CDF as `value, probability`.
    #[arg(long, value_name = "PATH")]
    pub cdf: Option<PathBuf>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}
