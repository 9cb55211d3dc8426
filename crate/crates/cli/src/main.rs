//! `riskplan`: grid model generation, policy synthesis, Monte Carlo
//! simulation and product inspection.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod cmd;

#[derive(Debug, Parser)]
#[command(
    name = "riskplan",
    version,
    about = "Risk-bounded policy synthesis for labeled MDPs under LTL tasks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a grid-world model as JSON.
    GenGrid(GenGridArgs),
    /// Synthesize a policy for a model and a Rabin automaton.
    Synth(SynthArgs),
    /// Evaluate a policy by Monte Carlo simulation.
    Simulate(SimulateArgs),
    /// Print product sizes and components, optionally exporting files.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
struct GenGridArgs {
    /// Named workspace (reach, surveillance, supply, clustered, lab, single, toy).
    #[arg(long, conflicts_with_all = ["width", "height"])]
    preset: Option<String>,
    /// Blank grid width in cells.
    #[arg(long, requires = "height")]
    width: Option<usize>,
    #[arg(long, requires = "width")]
    height: Option<usize>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct TaskArgs {
    /// Model JSON.
    #[arg(long)]
    model: PathBuf,
    /// Rabin automaton in ltl2dstar v2 explicit format.
    #[arg(long)]
    dra: PathBuf,
}

#[derive(Debug, Args, Clone, Copy)]
struct ParamArgs {
    /// Allowed risk γ of the prefix.
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    /// Weight β of the prefix cost against the suffix cost.
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    /// Penalty d on mass leaving an accepting SCC.
    #[arg(long = "penalty-d", default_value_t = 300.0)]
    penalty_d: f64,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[command(flatten)]
    task: TaskArgs,
    #[command(flatten)]
    params: ParamArgs,
    /// Policy JSON output.
    #[arg(short, long)]
    output: PathBuf,
    /// Report JSON output (stdout when absent).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BaselineArg {
    Optimal,
    RoundRobin,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    task: TaskArgs,
    /// Policy JSON written by `synth`.
    #[arg(long)]
    policy: PathBuf,
    #[arg(long, default_value_t = 1000)]
    runs: usize,
    #[arg(long, default_value_t = 500)]
    steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = BaselineArg::Optimal)]
    baseline: BaselineArg,
    /// Stats JSON output.
    #[arg(short, long)]
    output: PathBuf,
    /// Cycle cost histogram CSV output.
    #[arg(long)]
    histogram: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    bins: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExportArg {
    Dot,
    Prism,
    Lp,
}

#[derive(Debug, Args)]
struct InspectArgs {
    #[command(flatten)]
    task: TaskArgs,
    /// Files to write into `--out-dir`; repeatable.
    #[arg(long, value_enum)]
    export: Vec<ExportArg>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Parameters of the exported program.
    #[command(flatten)]
    params: ParamArgs,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::GenGrid(a) => cmd::gen_grid(a),
        Command::Synth(a) => cmd::synth(a),
        Command::Simulate(a) => cmd::simulate(a),
        Command::Inspect(a) => cmd::inspect(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f:#}");
            ExitCode::from(f.code())
        }
    }
}
