use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cnlse_cli::commands;
use cnlse_cli::config::RunConfig;
use cnlse_cli::error::{CliError, EXIT_CONFIG};
use cnlse_cli::output::ensure_dir;
use cnlse_cli::report::{parse_sweep, sweep, write_sweep};
use cnlse_core::classify::DEFAULT_CLASSIFY_TOLERANCE;

#[derive(Debug, Parser)]
#[command(name = "cnlse", version, about = "Coupled NLS systems with complex nonlinearities and their gauge transformation")]
struct Cli {
    /// Directory for CSV tables and snapshots (overrides `output.dir`).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Tolerance for `verify` (overrides `verify.tolerance`) or `classify`.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Print the effective configuration as TOML and exit.
    #[arg(long, global = true)]
    dump_config: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolve the original system and record conservation diagnostics.
    Simulate { config: PathBuf },
    /// Write the transformed coefficients and the transformed initial fields.
    Transform { config: PathBuf },
    /// Name the special cases of a single-species derivative nonlinearity.
    Classify {
        #[arg(long, allow_negative_numbers = true)]
        beta: f64,
        #[arg(long, allow_negative_numbers = true)]
        gamma: f64,
        #[arg(long, allow_negative_numbers = true)]
        delta: f64,
        #[arg(long, allow_negative_numbers = true)]
        lambda: f64,
    },
    /// Evolve both systems from gauge-related data and compare them.
    Verify {
        config: PathBuf,
        /// Repeat over values of one numeric key, e.g. `time.dt=1e-3,5e-4`.
        #[arg(long)]
        sweep: Option<String>,
    },
    /// Time-step self-convergence study at dt, dt/2, dt/4.
    Convergence { config: PathBuf },
}

fn load(cli: &Cli, path: &PathBuf) -> Result<RunConfig, CliError> {
    let mut config = RunConfig::load(path)?;
    if let Some(dir) = &cli.output_dir {
        config.output.dir = dir.clone();
    }
    if let Some(tol) = cli.tolerance {
        config.verify.tolerance = tol;
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: &Cli) -> Result<Vec<String>, CliError> {
    let path = match &cli.command {
        Command::Classify { beta, gamma, delta, lambda } => {
            if cli.dump_config {
                return Err(CliError::new(EXIT_CONFIG, "classify takes no configuration file"));
            }
            let tol = cli.tolerance.unwrap_or(DEFAULT_CLASSIFY_TOLERANCE);
            if !(tol > 0.0) {
                return Err(CliError::new(EXIT_CONFIG, "--tolerance must be positive"));
            }
            let labels = commands::classify(*beta, *gamma, *delta, *lambda, tol);
            return Ok(labels.iter().map(|l| l.to_string()).collect());
        }
        Command::Simulate { config } | Command::Transform { config } | Command::Convergence { config } => config,
        Command::Verify { config, .. } => config,
    };
    let config = load(cli, path)?;
    if cli.dump_config {
        return Ok(vec![config.to_toml_string()]);
    }
    match &cli.command {
        Command::Simulate { .. } => commands::simulate(&config),
        Command::Transform { .. } => commands::transform(&config),
        Command::Convergence { .. } => commands::convergence(&config),
        Command::Verify { sweep: None, .. } => commands::verify(&config),
        Command::Verify { sweep: Some(arg), .. } => {
            let (axis, values) = parse_sweep(arg)?;
            let result = sweep(&config, &axis, &values)?;
            ensure_dir(&config.output.dir)?;
            write_sweep(&config.output.dir, &result)?;
            Ok(vec![format!(
                "sweep over {axis}: {} rows, {} failed",
                result.rows.len(),
                result.failed()
            )])
        }
        Command::Classify { .. } => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
