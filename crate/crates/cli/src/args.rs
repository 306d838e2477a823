use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tripwave::waves_analytic::ULCase;

#[derive(Debug, Parser)]
#[command(name = "tripwave", version, about = "Invasion waves in a two-prey, one-predator system")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Derived quantities, hypothesis flags and equilibrium stability.
    Analyze(AnalyzeArgs),
    /// Check an explicit upper/lower solution pair on a grid.
    VerifyUl(VerifyArgs),
    /// Signs of the contracting-rectangle quantities over a theta grid.
    Rect(RectArgs),
    /// Decrease of the Lyapunov function along kinetic trajectories.
    Lyapunov(LyapunovArgs),
    /// Run the reaction-diffusion system and write fronts and fields.
    Simulate(SimArgs),
    /// Run the reaction-diffusion system and report the front speed.
    Speed(SimArgs),
    /// Solve for a wave profile at one speed.
    Bvp(BvpArgs),
    /// Follow a wave profile through a range of speeds.
    Continue(ContinueArgs),
    /// Run another command over a grid of parameter values.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Configuration file (`key = value` lines).
    #[arg(long)]
    pub config: PathBuf,
    /// Directory for output files.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub common: Common,
    /// Wave speed used for the speed-dependent hypotheses.
    #[arg(long)]
    pub s: Option<f64>,
}

fn parse_case(s: &str) -> Result<ULCase, String> {
    s.parse().map_err(|e: tripwave::Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
    /// estar-super, estar-critical, elow-super or elow-critical.
    #[arg(long, value_parser = parse_case)]
    pub case: ULCase,
    /// Wave speed; defaults to the minimal speed in the critical cases.
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct RectArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub delta3: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Number of theta values `0, 1/n, ..., (n-1)/n`.
    #[arg(long, default_value_t = 10)]
    pub thetas: usize,
}

#[derive(Debug, Args)]
pub struct LyapunovArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 100)]
    pub starts: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 5000.0)]
    pub t_end: f64,
    /// Allowed increase of the Lyapunov function per step.
    #[arg(long, default_value_t = 1e-12)]
    pub slack: f64,
    /// Required distance of the terminal state from the co-existence state.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[command(flatten)]
    pub common: Common,
    /// invade-estar or invade-elow; overrides the config key.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Write the fields at every sample time.
    #[arg(long)]
    pub snapshots: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Init {
    Tanh,
    FromPde,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    /// invade-estar or invade-elow; selects the two tail states.
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long, value_enum, default_value_t = Init::Tanh)]
    pub init: Init,
    /// Width of the tanh starting profile.
    #[arg(long, default_value_t = 5.0)]
    pub width: f64,
    #[arg(long, default_value_t = tripwave::bvp::DEFAULT_Z_MIN, allow_hyphen_values = true)]
    pub z_min: f64,
    #[arg(long, default_value_t = tripwave::bvp::DEFAULT_Z_MAX, allow_hyphen_values = true)]
    pub z_max: f64,
    #[arg(long, default_value_t = tripwave::bvp::DEFAULT_NODES)]
    pub nodes: usize,
}

#[derive(Debug, Args)]
pub struct BvpArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub s: f64,
    #[command(flatten)]
    pub profile: ProfileArgs,
}

#[derive(Debug, Args)]
pub struct ContinueArgs {
    #[command(flatten)]
    pub common: Common,
    /// Starting speed.
    #[arg(long)]
    pub s: f64,
    #[arg(long)]
    pub s_to: f64,
    #[arg(long, default_value_t = 20)]
    pub steps: usize,
    #[command(flatten)]
    pub profile: ProfileArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Base configuration file.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// `key:min:max:n:lin|log`; repeat for a product grid. The key `s`
    /// is passed as `--s`.
    #[arg(long, required = true)]
    pub axis: Vec<String>,
    /// Command run at every point.
    #[arg(long)]
    pub command: String,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Further arguments for the command, after `--`.
    #[arg(last = true, allow_hyphen_values = true)]
    pub rest: Vec<String>,
}
