use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use oldroyd_cli::config::{self, output_dir};
use oldroyd_cli::experiments::{self, SLOPE_RANGE};
use oldroyd_cli::output;
use oldroyd_cli::{CliError, Result, Validated};
use oldroyd_core::linear::dispersion_table;
use serde_json::Value;

#[derive(Parser)]
#[command(name = "oldroyd", version, about = "Pseudo-spectral Oldroyd-B experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; defaults apply to every missing key.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.directory`).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads for concurrent runs.
    #[arg(long)]
    threads: Option<usize>,
    /// Dotted-path override, e.g. `--override model.nu=1e-3`. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and write diagnostics.
    Run(Common),
    /// Compare a linear or tiny-amplitude run with the closed-form mode solution.
    LinearVerify {
        #[command(flatten)]
        common: Common,
        /// Largest acceptable deviation.
        #[arg(long, default_value_t = 1e-10)]
        tolerance: f64,
    },
    /// Vanishing-viscosity sweep against the inviscid baseline.
    SweepNu {
        #[command(flatten)]
        common: Common,
        /// Strictly decreasing viscosities, e.g. `--nu 1e-2,1e-3,1e-4`.
        #[arg(long, value_delimiter = ',', required = true)]
        nu: Vec<f64>,
    },
    /// Tabulate the linear dispersion roots for the configured eta and beta.
    Dispersion {
        #[command(flatten)]
        common: Common,
        /// Largest integer wavenumber (default n/2).
        #[arg(long)]
        k_max: Option<usize>,
    },
    /// Validate a configuration and print it with defaults filled in.
    CheckConfig(Common),
}

fn load(common: &Common) -> Result<Validated> {
    let mut doc: Value = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(vec![format!("{} is not valid JSON: {e}", path.display())]))?
        }
        None => Value::Object(Default::default()),
    };
    for o in &common.overrides {
        config::apply_override(&mut doc, o)?;
    }
    let v = config::validate_config(&doc)?;
    for w in &v.warnings {
        eprintln!("warning: {w}");
    }
    Ok(v)
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run(common) => {
            let v = load(&common)?;
            let dir = output_dir(common.output, &v.config, "run");
            let summary = experiments::run(&v.config, v.warnings, &dir)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
            if let Some(b) = summary.blow_up {
                return Err(CliError::BlowUp { t: b.t, steps: b.steps });
            }
            if !summary.checks_pass() {
                return Err(CliError::CheckFailed("boundedness or Lyapunov equivalence".into()));
            }
        }
        Command::LinearVerify { common, tolerance } => {
            let v = load(&common)?;
            let dir = output_dir(common.output, &v.config, "linear-verify");
            let report = experiments::linear_verify(&v.config)?;
            output::write_json(&dir.join("linear_report.json"), &report)?;
            println!("max deviation {:e} over {} modes", report.max_deviation, report.modes.len());
            if report.max_deviation > tolerance {
                return Err(CliError::CheckFailed(format!(
                    "deviation {:e} exceeds tolerance {tolerance:e}",
                    report.max_deviation
                )));
            }
        }
        Command::SweepNu { common, nu } => {
            let v = load(&common)?;
            let dir = output_dir(common.output, &v.config, "sweep-nu");
            let outcome = experiments::sweep_viscosity(&v.config, &nu, common.threads)?;
            experiments::write_sweep(&outcome, &dir)?;
            let r = &outcome.result;
            println!("slope {:.4}, intercept {:.4}, uniform bound {}", r.slope, r.intercept, r.uniform_bound);
            if !r.checks_pass() {
                return Err(CliError::CheckFailed(format!(
                    "slope {:.4} outside [{}, {}] or uniform bound violated",
                    r.slope, SLOPE_RANGE.0, SLOPE_RANGE.1
                )));
            }
        }
        Command::Dispersion { common, k_max } => {
            let v = load(&common)?;
            let dir = output_dir(common.output, &v.config, "dispersion");
            let k_max = k_max.unwrap_or(v.config.grid.n / 2);
            let table = dispersion_table(v.config.model.eta, v.config.model.beta, k_max)?;
            output::atomic_write(&dir.join("dispersion.csv"), &output::csv_bytes(&table)?)?;
        }
        Command::CheckConfig(common) => {
            let v = load(&common)?;
            println!("{}", serde_json::to_string_pretty(&v.config)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
