//! `hidfact`: factorize deterministic nodes, search minimal bases, run
//! inference and compare junction-tree clique sizes from the command line.

mod commands;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hidfact_core::bench::Orderings;
use hidfact_core::Error;

#[derive(Parser, Debug)]
#[command(
    name = "hidfact",
    version,
    about = "Hidden-variable factorization of deterministic CPTs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Replace deterministic nodes by a hidden variable and two-dimensional potentials.
    Factorize(FactorizeArgs),
    /// Check every factorized node of a network against the original functions.
    Verify(VerifyArgs),
    /// Search a minimal base of hyperrectangles for one deterministic node.
    Mbh(MbhArgs),
    /// Marginal of the query variables given evidence.
    Infer(InferArgs),
    /// Triangulate the moral graph and report cliques and total clique size.
    Cliques(CliquesArgs),
    /// Benchmarks.
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Subcommand, Debug)]
enum BenchCommand {
    /// Adaptive-testing clique-size comparison of the three methods.
    Cat(CatArgs),
}

#[derive(Args, Debug, Clone)]
struct BudgetArgs {
    /// Largest number of candidate rectangles to enumerate.
    #[arg(long, default_value_t = 100_000)]
    max_rects: u128,
    /// Largest base size to try.
    #[arg(long, default_value_t = 16)]
    max_base_size: usize,
    /// Largest closure per generation check.
    #[arg(long, default_value_t = 50_000)]
    max_closure: usize,
    /// Search nodes to expand before giving up (unlimited by default).
    #[arg(long)]
    max_nodes: Option<u64>,
    /// Wall-clock limit in seconds.
    #[arg(long, default_value_t = 60.0)]
    time_limit: f64,
}

#[derive(Args, Debug)]
struct FactorizeArgs {
    #[arg(long)]
    net: String,
    /// Only this deterministic node (default: all of them).
    #[arg(long)]
    node: Option<String>,
    /// Base file to use for `--node` instead of searching.
    #[arg(long, requires = "node")]
    base: Option<String>,
    /// Use one hidden state per parent configuration.
    #[arg(long, conflicts_with = "base")]
    trivial: bool,
    #[arg(long)]
    out: Option<String>,
    #[command(flatten)]
    budget: BudgetArgs,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Network holding the deterministic functions.
    #[arg(long)]
    net: String,
    /// Network produced by `factorize`.
    #[arg(long)]
    factorized: String,
}

#[derive(Args, Debug)]
struct MbhArgs {
    /// Network file holding the function as a deterministic node.
    #[arg(long)]
    function: String,
    /// Deterministic node to solve (required when there are several).
    #[arg(long)]
    node: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[command(flatten)]
    budget: BudgetArgs,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Transform {
    None,
    Factorize,
    Divorce,
}

#[derive(Args, Debug)]
struct InferArgs {
    #[arg(long)]
    net: String,
    #[arg(long)]
    evidence: Option<String>,
    /// Comma-separated variable names.
    #[arg(long, value_delimiter = ',', required = true)]
    query: Vec<String>,
    #[arg(long, value_enum, default_value_t = Transform::None)]
    transform: Transform,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args, Debug)]
struct CliquesArgs {
    #[arg(long)]
    net: String,
    #[arg(long, value_enum, default_value_t = Transform::None)]
    transform: Transform,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args, Debug)]
struct CatArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    tasks: usize,
    /// `all` or `sample:M`.
    #[arg(long, default_value = "all", value_parser = parse_orderings)]
    orderings: Orderings,
    #[arg(long)]
    out: Option<String>,
}

fn parse_orderings(s: &str) -> Result<Orderings, String> {
    match s {
        "all" => Ok(Orderings::All),
        _ => s
            .strip_prefix("sample:")
            .and_then(|m| m.parse().ok())
            .filter(|&m: &usize| m > 0)
            .map(Orderings::Sample)
            .ok_or_else(|| format!("expected `all` or `sample:M` with M > 0, got `{s}`")),
    }
}

/// Error plus the exit status it maps to.
#[derive(Debug)]
pub(crate) enum Failure {
    Core(Error),
    /// A factorization failed its own self-check.
    Internal(String),
    Invalid(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Core(e) if e.is_budget() => 3,
            Failure::Core(e) if e.is_internal() => 4,
            Failure::Core(_) | Failure::Invalid(_) => 2,
            Failure::Internal(_) => 4,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Core(e @ Error::BudgetExceeded { .. }) => write!(f, "BUDGET_EXCEEDED: {e}"),
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Internal(m) => write!(f, "internal consistency failure: {m}"),
            Failure::Invalid(m) => write!(f, "{m}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Factorize(a) => commands::factorize(a),
        Command::Verify(a) => commands::verify(a),
        Command::Mbh(a) => commands::mbh(a),
        Command::Infer(a) => commands::infer(a),
        Command::Cliques(a) => commands::cliques(a),
        Command::Bench(BenchCommand::Cat(a)) => commands::bench_cat(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
