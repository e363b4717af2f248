use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use killed_walk::{ArithmeticMode, BarrierKind};
use killed_walk_cli::commands::{self, CliError, Outcome, RunOptions};
use killed_walk_cli::experiment::{default_n_list, ExperimentConfig, DEFAULT_NMAX, DEFAULT_RATIOS};

#[derive(Parser)]
#[command(name = "killed-walk", version, about = "Asymptotic expansions for killed lattice walks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate θ₀, θ₁ and the b-constants.
    Constants(WalkArgs),
    /// Assemble the correction polynomials P_ν.
    Polys(WalkArgs),
    /// Compare the expansion with the exact oracle.
    Verify(WalkArgs),
    /// Check the Gaussian-moment integral against quadrature.
    IntegralCheck {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write plot-ready CSV files.
    Report(WalkArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Barrier {
    Strict,
    Weak,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Float,
}

#[derive(clap::Args)]
struct WalkArgs {
    /// Increment distribution (JSON).
    #[arg(long)]
    dist: PathBuf,
    #[arg(long, default_value_t = 2)]
    r: usize,
    #[arg(long, value_enum, default_value_t = Barrier::Strict)]
    barrier: Barrier,
    /// Largest n; ignored when --n-list is given.
    #[arg(long, default_value_t = DEFAULT_NMAX)]
    nmax: usize,
    /// Horizon for the constant estimates.
    #[arg(long, default_value_t = killed_walk::constants::DEFAULT_KMAX)]
    kmax: usize,
    #[arg(long, value_enum, default_value_t = Mode::Float)]
    mode: Mode,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    ratios: Option<Vec<f64>>,
    /// Directory for cached oracle tables.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

impl WalkArgs {
    fn options(self) -> RunOptions {
        RunOptions {
            config: ExperimentConfig {
                dist_path: self.dist,
                r: self.r,
                barrier: match self.barrier {
                    Barrier::Strict => BarrierKind::Strict,
                    Barrier::Weak => BarrierKind::Weak,
                },
                n_list: self.n_list.unwrap_or_else(|| default_n_list(self.nmax)),
                ratios: self.ratios.unwrap_or_else(|| DEFAULT_RATIOS.to_vec()),
                kmax: self.kmax,
                mode: match self.mode {
                    Mode::Exact => ArithmeticMode::Exact,
                    Mode::Float => ArithmeticMode::Float,
                },
                out_dir: self.out,
            },
            cache_dir: self.cache_dir,
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("KILLED_WALK_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Constants(a) => commands::cmd_constants(&a.options()),
        Command::Polys(a) => commands::cmd_polys(&a.options()),
        Command::Verify(a) => commands::cmd_verify(&a.options()),
        Command::IntegralCheck { out } => commands::cmd_integral_check(out.as_deref()),
        Command::Report(a) => commands::cmd_report(&a.options()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    match run(cli).and_then(Outcome::into_result) {
        Ok(report) => {
            print!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
