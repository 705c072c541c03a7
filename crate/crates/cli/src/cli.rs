use std::io::Write;
use std::path::PathBuf;

use ambient_attitude::controllers::Variant;
use ambient_attitude::so3::Mat3;
use clap::{Parser, Subcommand};

use crate::commands::{self, GainArgs, SummaryFormat};
use crate::config::ScenarioName;
use crate::error::CliResult;
use crate::matrix_arg::parse_matrix;

#[derive(Debug, Parser)]
#[command(name = "ambient-attitude", version, about = "Rigid-body attitude control designed in the ambient space of SO(3)")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a stabilization scenario file.
    Stabilize(RunArgs),
    /// Run a tracking (or open-loop) scenario file.
    Track(RunArgs),
    /// Print the linearized state and input matrices as CSV.
    Linearize(LinearizeArgs),
    /// Check controller gains against their validity conditions.
    CheckGains(CheckGainsArgs),
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    /// Scenario JSON file.
    #[arg(long)]
    pub config: PathBuf,
    /// CSV destination; overrides `output_csv` in the config. Without either,
    /// the CSV goes to stdout and the summary to stderr.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub summary: SummaryFormat,
}

#[derive(Debug, clap::Args)]
pub struct LinearizeArgs {
    /// Equilibrium attitude: `identity`, `diag(a,b,c)` or nine row-major entries.
    #[arg(long = "R0", default_value = "identity", allow_hyphen_values = true, value_parser = parse_matrix)]
    pub r0: Mat3,
    #[arg(long = "ke", default_value_t = 1.0)]
    pub k_e: f64,
    /// Linearize along a reference trajectory instead (`paper_fig2`).
    #[arg(long)]
    pub reference: Option<String>,
    /// Time on the reference.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true, requires = "reference")]
    pub t: f64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct CheckGainsArgs {
    /// Gain variant; inferred from the flags when omitted.
    #[arg(long)]
    pub variant: Option<Variant>,
    /// Matrix K_P: `4I`, `diag(a,b,c)` or nine row-major entries.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_matrix)]
    pub kp: Option<Mat3>,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_matrix)]
    pub kd: Mat3,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_matrix)]
    pub ki: Option<Mat3>,
    /// Scalar k_P of the TRACK_PD variants.
    #[arg(long, allow_hyphen_values = true)]
    pub kp_scalar: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub eps: Option<f64>,
    #[arg(long, value_enum, default_value_t)]
    pub summary: SummaryFormat,
}

/// Executes a parsed command line and returns the process exit code.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    match dispatch(cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Stabilize(a) => {
            commands::simulate(&[ScenarioName::Stabilize], &a.config, a.output, a.summary, out, err)
        }
        Command::Track(a) => commands::simulate(
            &[ScenarioName::Track, ScenarioName::OpenLoop],
            &a.config,
            a.output,
            a.summary,
            out,
            err,
        ),
        Command::Linearize(a) => {
            commands::linearize(&a.r0, a.k_e, a.reference.as_deref(), a.t, a.output.as_deref(), out)
        }
        Command::CheckGains(a) => {
            let gains = GainArgs {
                variant: a.variant,
                kp: a.kp,
                kd: a.kd,
                ki: a.ki,
                kp_scalar: a.kp_scalar,
                eps: a.eps,
            };
            commands::check_gains(&gains, a.summary, out)
        }
    }
}
