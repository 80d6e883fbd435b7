mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qpi_core::qram::LogBase;
use qpi_core::vqls::Entangler;
use qpi_core::Error;

#[derive(Debug, Parser)]
#[command(name = "qpi", version, about = "Policy iteration for inventory control with simulated quantum linear solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Output {
    /// Directory for written artifacts.
    #[arg(short, long, default_value = ".")]
    out_dir: PathBuf,
    /// Table format for the main artifact.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Overrides the seed in the instance file; `QPI_SEED` overrides both.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Backend {
    Exact,
    Hhl,
    Vqls,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EntanglerArg {
    Chain,
    Alternating,
}

impl From<EntanglerArg> for Entangler {
    fn from(e: EntanglerArg) -> Self {
        match e {
            EntanglerArg::Chain => Entangler::Chain,
            EntanglerArg::Alternating => Entangler::Alternating,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run policy iteration and write `policy.json` and `trace.jsonl`.
    Solve {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = Backend::Exact)]
        evaluator: Backend,
        /// Discount factor; defaults to the instance value.
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(short = 'K', long, default_value_t = qpi_core::policy_iteration::DEFAULT_MAX_ITERS)]
        max_iters: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Pauli decomposition of the embedded Bellman matrix.
    Lcu {
        instance: Option<PathBuf>,
        /// Comma-separated order quantities or a `policy.json`; order-nothing by default.
        #[arg(long)]
        policy: Option<String>,
        /// Keep only the largest `L` terms.
        #[arg(short = 'L', long = "terms")]
        terms: Option<usize>,
        /// `row,col,value` CSV used instead of an instance.
        #[arg(long, conflicts_with_all = ["instance", "policy"])]
        matrix: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Gate counts for qubit number `N` against LCU length `L`.
    Gates {
        #[arg(long, default_value_t = 6)]
        n_max: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,4,9,16")]
        l_list: Vec<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Error-rate and decoherence budgets for a bucket-brigade QRAM.
    Qram {
        /// `lo:hi:count`, log-spaced.
        #[arg(long, default_value = "10:1e9:9")]
        n_range: String,
        /// `lo:hi:count` over `1 - F`, log-spaced.
        #[arg(long, default_value = "1e-9:1e-1:9")]
        fidelity_range: String,
        /// Direct coupling: rad/s, or with units such as `1kHz*2pi`.
        #[arg(long, default_value = "1kHz*2pi")]
        gd: String,
        /// Free spectral range, same syntax as `--gd`.
        #[arg(long, default_value = "10MHz*2pi")]
        nu: String,
        #[arg(long, default_value_t = 4.5)]
        cd: f64,
        #[arg(long, default_value = "2")]
        log_base: String,
        #[command(flatten)]
        output: Output,
    },
    /// Train the variational solver and write `trace.csv`.
    Vqls {
        instance: Option<PathBuf>,
        #[arg(long)]
        policy: Option<String>,
        #[arg(long, conflicts_with_all = ["instance", "policy"], requires = "rhs")]
        matrix: Option<PathBuf>,
        /// Comma-separated right-hand side for `--matrix`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        rhs: Option<Vec<f64>>,
        #[arg(long)]
        layers: Option<usize>,
        #[arg(short = 'L', long = "terms")]
        terms: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        target_cost: Option<f64>,
        #[arg(long, value_enum, default_value_t = EntanglerArg::Chain)]
        entangler: EntanglerArg,
        /// Depolarizing probability; adds a noisy run next to the noiseless one.
        #[arg(long)]
        noise: Option<f64>,
        #[arg(long)]
        trajectories: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
}

/// Failure classes and their exit codes.
#[derive(Debug)]
enum Failure {
    Config(String),
    Evaluator(String),
    Infeasible(String),
    Diverged(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Evaluator(_) => 2,
            Failure::Infeasible(_) => 3,
            Failure::Diverged(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Evaluator(m) | Failure::Infeasible(m) | Failure::Diverged(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Infeasible { .. } => Failure::Infeasible(msg),
            Error::Diverged(_) => Failure::Diverged(msg),
            Error::Evaluation { .. }
            | Error::SingularMatrix { .. }
            | Error::IterationCap(_)
            | Error::PostSelectionStarved(_)
            | Error::ZeroDenominator => Failure::Evaluator(msg),
            _ => Failure::Config(msg),
        }
    }
}

fn parse_log_base(text: &str) -> Result<LogBase, Failure> {
    text.parse().map_err(Failure::from)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("qpi: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
