use clap::{Parser, Subcommand};
use softwrist_cli::commands::{self, CliError};
use softwrist_cli::config::RunConfig;
use std::path::PathBuf;

/// Simulation and control toolkit for a tendon-driven soft wrist.
#[derive(Parser)]
#[command(name = "softwrist", version, about)]
struct Cli {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Directory for CSV artifacts (falls back to the config file, then the
    /// SOFTWRIST_OUT_DIR environment variable, then the working directory).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one closed-loop scenario; writes trajectory.csv and metrics.csv.
    Simulate {
        /// Scenario preset: flexion-step, extension-step, radial-step,
        /// ulnar-step, or flexion-disturbance.
        #[arg(long, value_name = "NAME")]
        scenario: Option<String>,
    },
    /// Tabulate the energy-factor polynomials; writes factors.csv.
    Factors {
        /// Lower end of the bending range, radians.
        #[arg(long, default_value_t = 0.0, value_name = "RAD")]
        alpha_min: f64,
        /// Upper end of the bending range, radians (must stay below pi/2).
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4, value_name = "RAD")]
        alpha_max: f64,
        /// Number of evenly spaced samples.
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Cross-check the QP solver against exhaustive enumeration on random
    /// problems; writes qp_selftest.csv.
    QpSelftest {
        /// Seed for problem generation; defaults to the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Number of random problems.
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Run the full experiment suite (four direction steps plus disturbance
    /// rejection) and check every metric against its target.
    Reproduce,
    /// Print the effective configuration as TOML.
    DumpConfig,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = RunConfig::load(cli.config.as_deref()).map_err(CliError::Usage)?;
    let out_dir = commands::resolve_out_dir(cli.out.as_deref(), &cfg);
    match cli.command {
        Command::Simulate { scenario } => {
            commands::cmd_simulate(&cfg, scenario.as_deref(), &out_dir)
        }
        Command::Factors { alpha_min, alpha_max, samples } => {
            commands::cmd_factors(alpha_min, alpha_max, samples, &out_dir)
        }
        Command::QpSelftest { seed, samples } => {
            commands::cmd_qp_selftest(seed.unwrap_or(cfg.seed), samples, &out_dir)
        }
        Command::Reproduce => commands::cmd_reproduce(&cfg, &out_dir),
        Command::DumpConfig => {
            print!("{}", cfg.dump());
            Ok(())
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version are not errors; bad flags exit 1.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
