use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wfp_core::analyzer::DEFAULT_MAX_STATES;
use wfp_core::cli::{self, Command, RunConfig, EXIT_UNREADABLE};
use wfp_core::engine::{DEFAULT_OR_JOIN_BOUND, DEFAULT_STEP_LIMIT};

/// Workflow-pattern engine and analyzer.
#[derive(Parser)]
#[command(name = "wfp", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
enum Commands {
    /// Parse and structurally validate a process file
    Validate(CommonArgs),
    /// Execute one case to termination and emit its JSONL event log
    Run(CommonArgs),
    /// Explore the state space and report soundness as JSON
    Explore(CommonArgs),
    /// Render the process as Graphviz DOT
    Dot(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the process file (.wfp)
    file: PathBuf,

    /// Seed for the scheduler and branch decider
    #[arg(long)]
    seed: Option<u64>,

    /// Scripted decisions, one `<node> <label-or-index>[,...]` per line
    #[arg(long, conflicts_with = "seed")]
    script: Option<PathBuf>,

    /// Bound on stored states during exploration
    #[arg(long, default_value_t = DEFAULT_MAX_STATES)]
    max_states: usize,

    /// Bound on each or-join reachability search
    #[arg(long, default_value_t = DEFAULT_OR_JOIN_BOUND)]
    or_join_bound: usize,

    /// Bound on firings in one run
    #[arg(long, default_value_t = DEFAULT_STEP_LIMIT)]
    step_limit: usize,

    /// Write output to this path instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let parsed = Cli::parse();
    let (command, args) = match parsed.command {
        Commands::Validate(args) => (Command::Validate, args),
        Commands::Run(args) => (Command::Run, args),
        Commands::Explore(args) => (Command::Explore, args),
        Commands::Dot(args) => (Command::Dot, args),
    };
    let cfg = RunConfig {
        input_path: args.file,
        command,
        seed: args.seed,
        decider_script: args.script,
        max_states: args.max_states,
        or_join_bound: args.or_join_bound,
        step_limit: args.step_limit,
        output_path: args.out,
    };

    let result = cli::execute(&cfg);
    eprint!("{}", result.stderr);
    match &cfg.output_path {
        Some(path) => {
            if let Err(err) = fs::write(path, &result.stdout) {
                eprintln!("error: cannot write {}: {err}", path.display());
                return ExitCode::from(EXIT_UNREADABLE as u8);
            }
        }
        None => print!("{}", result.stdout),
    }
    ExitCode::from(result.exit_code as u8)
}
