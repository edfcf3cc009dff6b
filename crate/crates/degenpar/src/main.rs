//! Thin subcommand front end over [`degenpar::harness`].

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use degenpar::config::RunConfig;
use degenpar::harness::{self, SolveMode};

#[derive(Parser)]
#[command(
    name = "degenpar",
    about = "Degenerate parabolic control experiments: hypothesis checks, solvers, weighted-estimate studies and penalized-HUM controls",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Path to the run configuration JSON.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override for seeded studies.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Forward,
    Adjoint,
}

#[derive(Subcommand)]
enum Command {
    /// Check the structural hypotheses; exit 0 iff all flags pass.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Solve the forward or adjoint problem and export the trajectory.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Initial datum (forward) or terminal datum (adjoint), slice CSV.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Source field CSV (control f, or adjoint right side h).
        #[arg(long)]
        source: Option<PathBuf>,
    },
    /// Ratio study of the weighted estimate over the (s, lambda) grid.
    Carleman {
        #[command(flatten)]
        common: Common,
    },
    /// Seeded observability-quotient study.
    Observability {
        #[command(flatten)]
        common: Common,
    },
    /// One penalized-HUM solve (smallest configured eps unless --eps).
    Hum {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Full eps sweep with warm-started conjugate gradients.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Transformed-equation identity residuals across refinement levels.
    #[command(name = "identity-check")]
    IdentityCheck {
        #[command(flatten)]
        common: Common,
    },
}

fn load_config(common: &Common) -> Result<RunConfig, ExitCode> {
    RunConfig::from_path(&common.config).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}

fn run(cli: Cli) -> ExitCode {
    match cli.command {
        Command::Validate { common } => {
            let config = match load_config(&common) {
                Ok(c) => c,
                Err(code) => return code,
            };
            match harness::cmd_validate(&config, common.out.as_deref()) {
                Ok(report) if report.all_ok() => ExitCode::SUCCESS,
                Ok(_) => ExitCode::FAILURE,
                Err(e) => fail(e),
            }
        }
        Command::Solve {
            common,
            mode,
            data,
            source,
        } => {
            let config = match load_config(&common) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let mode = match mode {
                Mode::Forward => SolveMode::Forward,
                Mode::Adjoint => SolveMode::Adjoint,
            };
            match harness::cmd_solve(
                &config,
                mode,
                data.as_deref(),
                source.as_deref(),
                common.out.as_deref(),
            ) {
                Ok(_) => ExitCode::SUCCESS,
                Err(e) => fail(e),
            }
        }
        Command::Carleman { common } => {
            let config = match load_config(&common) {
                Ok(c) => c,
                Err(code) => return code,
            };
            match harness::cmd_carleman(&config, common.seed, common.out.as_deref()) {
                Ok(_) => ExitCode::SUCCESS,
                Err(e) => fail(e),
            }
        }
        Command::Observability { common } => {
            let config = match load_config(&common) {
                Ok(c) => c,
                Err(code) => return code,
            };
            match harness::cmd_observability(&config, common.seed, common.out.as_deref()) {
                Ok(_) => ExitCode::SUCCESS,
                Err(e) => fail(e),
            }
        }
        Command::Hum { common, eps } => {
            let config = match load_config(&common) {
                Ok(c) => c,
                Err(code) => return code,
            };
            match harness::cmd_hum(&config, eps, common.out.as_deref()) {
                Ok(summary) if summary.converged => ExitCode::SUCCESS,
                Ok(_) => ExitCode::FAILURE,
                Err(e) => fail(e),
            }
        }
        Command::Sweep { common } => {
            let config = match load_config(&common) {
                Ok(c) => c,
                Err(code) => return code,
            };
            match harness::cmd_sweep(&config, common.out.as_deref()) {
                Ok(summary) if summary.all_converged => ExitCode::SUCCESS,
                Ok(_) => ExitCode::FAILURE,
                Err(e) => fail(e),
            }
        }
        Command::IdentityCheck { common } => {
            let config = match load_config(&common) {
                Ok(c) => c,
                Err(code) => return code,
            };
            match harness::cmd_identity_check(&config, common.out.as_deref()) {
                Ok(_) => ExitCode::SUCCESS,
                Err(e) => fail(e),
            }
        }
    }
}

fn fail(e: harness::HarnessError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    env_logger::init();
    run(Cli::parse())
}
