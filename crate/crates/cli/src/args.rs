use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "urt", version, about = "SINR and rate utility-region analysis")]
pub struct Cli {
    /// Worker threads for parallel sections.
    #[arg(long, global = true, env = "URT_THREADS", value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate or reduce cell-less scenarios.
    #[command(subcommand)]
    Scenario(ScenarioCommand),
    /// Inverse Z-matrix convexity certificate.
    CheckZcompat(CheckZcompatArgs),
    /// Spectral radius of diag(s)T under a norm, or of diag(s)T∞ without one.
    Radius(RadiusArgs),
    /// Feasibility of an SINR or rate target under the power budget.
    Feasible(FeasibleArgs),
    /// Sample weak-Pareto boundary points from random full-budget powers.
    ParetoSample(ParetoSampleArgs),
    /// Classify a rate vector against the rate region.
    RateMember(RateMemberArgs),
    /// Maximize a weighted sum rate.
    Sumrate(SumrateArgs),
    /// Smallest self-interference shift that certifies convexity.
    ShiftMin(ShiftMinArgs),
    /// Quasiconvexity test of l_M(x) = ρ(diag(x)M).
    Conjecture(ConjectureArgs),
}

#[derive(Debug, Subcommand)]
pub enum ScenarioCommand {
    Gen(ScenarioGenArgs),
    Reduce(ScenarioReduceArgs),
}

#[derive(Debug, Args)]
pub struct ScenarioGenArgs {
    /// Scenario configuration; omitted fields take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Keep every channel and beamformer realization.
    #[arg(long)]
    pub store_channels: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScenarioReduceArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the per-user power-limit norm.
    #[arg(long)]
    pub norm_out: Option<PathBuf>,
}

/// Built-in matrices from the worked examples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Builtin {
    /// Three-user counterexample to quasiconvexity of l_M.
    Conjecture,
    /// Two-user strongly coupled inverse Z-matrix.
    Remark,
    /// Three-user cell-less matrix failing the 2×2 screen on users 1 and 3.
    Scenario,
}

#[derive(Debug, Args)]
pub struct CheckZcompatArgs {
    #[arg(long, required_unless_present = "builtin_paper", conflicts_with = "builtin_paper")]
    pub model: Option<PathBuf>,
    /// Test a built-in interference matrix (matrix only, no norm).
    #[arg(long, num_args = 0..=1, default_missing_value = "scenario", value_enum)]
    pub builtin_paper: Option<Builtin>,
    #[arg(long, conflicts_with = "builtin_paper")]
    pub norm: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(id = "target", required = true, multiple = false, args = ["sinr", "rates"])]
pub struct Target {
    /// SINR target, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub sinr: Option<Vec<f64>>,
    /// Rate target in nats, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub rates: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct RadiusArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub norm: Option<PathBuf>,
    #[command(flatten)]
    pub target: Target,
    /// Eigen-iteration tolerance.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_iter: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FeasibleArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub norm: PathBuf,
    #[command(flatten)]
    pub target: Target,
    /// Classification band around one.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ParetoSampleArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub norm: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV destination; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RateMemberArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Without a norm the unconstrained region is used.
    #[arg(long)]
    pub norm: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    pub rates: Vec<f64>,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SumrateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub norm: PathBuf,
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    pub weights: Vec<f64>,
    /// Relative agreement required between starts.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ShiftMinArgs {
    #[arg(long, required_unless_present = "builtin_paper", conflicts_with = "builtin_paper")]
    pub model: Option<PathBuf>,
    #[arg(long, num_args = 0..=1, default_missing_value = "scenario", value_enum)]
    pub builtin_paper: Option<Builtin>,
    #[arg(long, conflicts_with = "builtin_paper")]
    pub norm: Option<PathBuf>,
    /// Relative bisection accuracy.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConjectureArgs {
    /// Run the built-in counterexample.
    #[arg(long, conflicts_with_all = ["matrix", "x1", "x2", "alpha"])]
    pub builtin_paper: bool,
    /// JSON file holding a square matrix as nested rows, or an object with
    /// an "M" field.
    #[arg(long, required_unless_present = "builtin_paper", requires_all = ["x1", "x2", "alpha"])]
    pub matrix: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub x1: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub x2: Option<Vec<f64>>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Band for the positive semidefiniteness test.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
