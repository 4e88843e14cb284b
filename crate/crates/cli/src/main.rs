mod commands;
mod output;

use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dtraj_core::Error;

#[derive(Debug, Parser, Serialize)]
#[command(name = "dtraj", version, about = "Discrete trajectory spaces of quantized robots")]
pub struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Write the primary output here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<String>,

    /// Write the run manifest to this file instead of standard error.
    #[arg(long, global = true)]
    pub manifest: Option<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Discover atomic transitions reachable from a start state.
    Transitions(TransitionsArgs),
    /// Enumerate or count fixed-length trajectories over a transition table.
    Enumerate(EnumerateArgs),
    /// Greedy action sequence for a desired joint trajectory.
    Plan(PlanArgs),
    /// Lattice path counts.
    #[command(subcommand)]
    Count(CountCommand),
}

#[derive(Debug, Args, Serialize)]
pub struct TransitionsArgs {
    #[arg(long)]
    pub config: String,
    /// Start state as "pos,vel" (joints separated by spaces within each part).
    #[arg(long, default_value = "0,0")]
    pub start: String,
    #[arg(long, default_value_t = dtraj_core::transitions::DEFAULT_NAL)]
    pub nal: usize,
    /// Also write the transition map in DOT syntax.
    #[arg(long)]
    pub dot: Option<String>,
    #[arg(long, value_enum, default_value_t = DedupArg::All)]
    pub dedup: DedupArg,
    #[arg(long, default_value_t = dtraj_core::transitions::DEFAULT_MAX_STATES)]
    pub max_states: usize,
    #[arg(long, default_value_t = dtraj_core::transitions::DEFAULT_MAX_SEQUENCES)]
    pub max_sequences: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DedupArg {
    All,
    Shortest,
}

#[derive(Debug, Args, Serialize)]
pub struct EnumerateArgs {
    #[arg(long)]
    pub transitions: String,
    #[arg(long)]
    pub steps: usize,
    /// Print counts only.
    #[arg(long)]
    pub count_only: bool,
    /// Restrict to one start state; default is every state in the table.
    #[arg(long)]
    pub start: Option<String>,
    #[arg(long, default_value_t = dtraj_core::trajectory::DEFAULT_MAX_TRAJECTORIES)]
    pub max_trajectories: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct PlanArgs {
    #[arg(long)]
    pub transitions: String,
    #[arg(long)]
    pub config: String,
    /// CSV with header t_s,q1_deg[,q2_deg,...].
    #[arg(long)]
    pub desired: String,
    /// Explicit start state; default is the table state at the first waypoint.
    #[arg(long)]
    pub start: Option<String>,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum CountCommand {
    /// 1-D 3-way corridor count.
    Corridor(CorridorArgs),
    /// n-D corridor count with the full diagonal move set.
    Ndim(NdimArgs),
    /// State, action and trajectory-space sizes of a robot.
    Bounds(BoundsArgs),
    /// Path count versus steps and degrees of freedom as CSV.
    Scaling(ScalingArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct CorridorArgs {
    #[arg(long)]
    pub d: i64,
    #[arg(long, allow_hyphen_values = true)]
    pub from: i64,
    #[arg(long, allow_hyphen_values = true)]
    pub to: i64,
    #[arg(long)]
    pub steps: u32,
    /// Exact count by dynamic programming instead of the closed form.
    #[arg(long)]
    pub exact: bool,
    #[arg(long, default_value = "full1")]
    pub move_set: String,
}

#[derive(Debug, Args, Serialize)]
pub struct NdimArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub d: Vec<i64>,
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub from: Vec<i64>,
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub to: Vec<i64>,
    #[arg(long)]
    pub steps: u32,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    pub method: MethodArg,
    /// Exact product of per-axis DP counts.
    #[arg(long)]
    pub exact: bool,
    /// Term budget of the direct spectral sum.
    #[arg(long, default_value_t = dtraj_core::lattice::ndim::MAX_DIRECT_TERMS)]
    pub max_terms: u64,
    /// Print a JSON object with value, error bound and method.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Auto,
    Factorized,
    Direct,
}

#[derive(Debug, Args, Serialize)]
pub struct BoundsArgs {
    #[arg(long)]
    pub config: String,
    #[arg(long)]
    pub steps: u32,
}

#[derive(Debug, Args, Serialize)]
pub struct ScalingArgs {
    #[arg(long)]
    pub config: String,
    /// Degrees of freedom, e.g. "1-6" or "1,2,6".
    #[arg(long, default_value = "1-6")]
    pub dof: String,
    /// Step counts, e.g. "1-100".
    #[arg(long, default_value = "1-100")]
    pub steps: String,
    #[arg(long, default_value_t = 20.0)]
    pub separation_deg: f64,
    /// Joint of the config used for every degree of freedom.
    #[arg(long, default_value_t = 0)]
    pub joint: usize,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    tool: &'static str,
    version: &'static str,
    config_hash: Option<String>,
    subcommand: &'static str,
    flags: &'a Cli,
    exit_code: u8,
    duration_s: f64,
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse(_) | Error::Io(_) => 2,
        Error::InvalidSpec(_)
        | Error::OutOfRange(_)
        | Error::Domain(_)
        | Error::UnknownState(_)
        | Error::NoFeasibleTransition { .. } => 3,
        Error::BudgetExceeded(_) | Error::ResourceLimit(_) => 4,
        Error::NumericalOverflow(_) => 5,
    }
}

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::Transitions(_) => "transitions",
        Command::Enumerate(_) => "enumerate",
        Command::Plan(_) => "plan",
        Command::Count(CountCommand::Corridor(_)) => "count corridor",
        Command::Count(CountCommand::Ndim(_)) => "count ndim",
        Command::Count(CountCommand::Bounds(_)) => "count bounds",
        Command::Count(CountCommand::Scaling(_)) => "count scaling",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: cannot start {n} workers: {e}");
            return ExitCode::from(4);
        }
    }
    let (code, config_hash) = match commands::run(&cli) {
        Ok(hash) => (0, hash),
        Err(e) => {
            eprintln!("error: {e}");
            (exit_code(&e), None)
        }
    };
    let manifest = RunManifest {
        tool: "dtraj",
        version: env!("CARGO_PKG_VERSION"),
        config_hash,
        subcommand: subcommand_name(&cli.command),
        flags: &cli,
        exit_code: code,
        duration_s: started.elapsed().as_secs_f64(),
    };
    let line = serde_json::to_string(&manifest).expect("manifest serializes");
    match &cli.manifest {
        Some(path) => {
            if let Err(e) = output::write_atomic(path, format!("{line}\n").as_bytes()) {
                eprintln!("error: cannot write manifest: {e}");
                return ExitCode::from(2);
            }
        }
        None => eprintln!("{line}"),
    }
    ExitCode::from(code)
}
