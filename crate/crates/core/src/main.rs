use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wgsr::harness::{self, HarnessError, Overrides};
use wgsr::model::Fidelity;

#[derive(Parser)]
#[command(
    name = "wgsr",
    version,
    about = "Simulate collective photon emission in coupled waveguide arrays"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SharedFlags {
    /// Output directory (overrides OUTPUT_DIR and the config file)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the coupling fidelity of the spec
    #[arg(long, value_parser = ["full", "ideal"])]
    fidelity: Option<String>,
    /// Override the thermal occupation of the bath
    #[arg(long)]
    nbar: Option<f64>,
    /// Suppress informational output
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config: closed forms vs coupled-mode propagation
    Run {
        config: PathBuf,
        #[command(flatten)]
        flags: SharedFlags,
    },
    /// Produce the standard bright/normal/dark comparison bundle
    Fig3 {
        #[command(flatten)]
        flags: SharedFlags,
    },
    /// Search for the smallest converged bath size for a config
    Converge {
        config: PathBuf,
        /// Convergence tolerance on the total-quanta series
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[command(flatten)]
        flags: SharedFlags,
    },
    /// Parse and validate a config, printing the spec diagnostics
    Validate {
        config: PathBuf,
        #[command(flatten)]
        flags: SharedFlags,
    },
}

fn overrides(flags: &SharedFlags) -> Result<Overrides, HarnessError> {
    let fidelity = match flags.fidelity.as_deref() {
        None => None,
        Some("full") => Some(Fidelity::Full),
        Some("ideal") => Some(Fidelity::Ideal),
        Some(other) => {
            return Err(HarnessError::Config(format!(
                "--fidelity must be full or ideal, got {other}"
            )))
        }
    };
    Ok(Overrides {
        out: flags.out.clone(),
        fidelity,
        nbar: flags.nbar,
    })
}

fn dispatch(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run { config, flags } => {
            let resolved = harness::load_config_with(&config, &overrides(&flags)?)?;
            let artifacts = harness::run(&resolved)?;
            if !flags.quiet {
                println!(
                    "class = {}  (correlated part {:.6e})",
                    artifacts.report.classification_class,
                    artifacts.report.classification_correlated_part
                );
                println!(
                    "max |m_analytic - m_numeric| / m(0) = {:.3e}",
                    artifacts.report.deviation_m_total.max_abs
                );
                if artifacts.report.flags.trapped {
                    println!("flag: trapped (total quanta constant over the grid)");
                }
                if artifacts.report.flags.horizon_exceeded {
                    println!("warning: grid extends beyond the bath reflection horizon");
                }
                println!("series: {}", artifacts.series_path.display());
                println!("report: {}", artifacts.report_path.display());
            }
            Ok(())
        }
        Command::Fig3 { flags } => {
            let out = flags
                .out
                .clone()
                .or_else(|| std::env::var_os(harness::OUTPUT_DIR_ENV).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("out"));
            let bundle = harness::reproduce_fig3(&out)?;
            if !flags.quiet {
                println!("intensity:    {}", bundle.intensity_path.display());
                println!("correlations: {}", bundle.correlations_path.display());
                for path in &bundle.report_paths {
                    println!("report:       {}", path.display());
                }
            }
            Ok(())
        }
        Command::Converge { config, tol, flags } => {
            let resolved = harness::load_config_with(&config, &overrides(&flags)?)?;
            let m_star = harness::converge(&resolved, tol)?;
            if flags.quiet {
                println!("{m_star}");
            } else {
                println!("converged bath size: {m_star} (tol {tol:e})");
            }
            Ok(())
        }
        Command::Validate { config, flags } => {
            let resolved = harness::load_config_with(&config, &overrides(&flags)?)?;
            let diag = resolved.spec.diagnostics();
            if !flags.quiet {
                println!(
                    "spec ok: {} system guides, {} bath guides",
                    resolved.spec.n_system, resolved.spec.n_bath
                );
                println!("collective coupling / delta = {:.6}", diag.coupling_ratio);
                println!("max omega / min g = {:.3e}", diag.omega_to_g);
                println!("max j / min g = {:.3e}", diag.j_to_g);
                for warning in &diag.warnings {
                    println!("warning: {warning}");
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
