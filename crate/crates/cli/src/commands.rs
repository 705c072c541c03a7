//! Subcommand implementations. Each writes its primary output to `out` and
//! diagnostics to `err`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ambient_attitude::controllers::{GainSet, GateReport, Variant};
use ambient_attitude::dynamics::AmbientParams;
use ambient_attitude::linearization::{linearize_along_trajectory, linearize_at_equilibrium, LinearizedOperator};
use ambient_attitude::reference::{reference_consistency_check, TumblingReference, CONSISTENCY_WARN_THRESHOLD};
use ambient_attitude::simulate::{run_scenario, Column};
use ambient_attitude::so3::Mat3;
use clap::ValueEnum;
use serde::Serialize;

use crate::config::{parse_config, ScenarioName, TUMBLING_REFERENCE};
use crate::csv::{write_csv, write_csv_file};
use crate::error::{CliError, CliResult};
use crate::summary::{decay_fits, RunSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum SummaryFormat {
    #[default]
    Text,
    Json,
}

const CONSISTENCY_SAMPLES: usize = 201;
const CONSISTENCY_STEP: f64 = 1e-5;

fn io_err(what: &str) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{what}: {e}"))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("summary types serialize")
}

/// Runs a scenario file. `accepted` lists the `scenario` values this
/// subcommand will run.
pub fn simulate(
    accepted: &[ScenarioName],
    config: &Path,
    output: Option<PathBuf>,
    format: SummaryFormat,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CliResult<()> {
    let parsed = parse_config(config)?;
    let file_scenario = match parsed.sim.scenario {
        ambient_attitude::Scenario::Stabilize => ScenarioName::Stabilize,
        ambient_attitude::Scenario::Track => ScenarioName::Track,
        ambient_attitude::Scenario::OpenLoop => ScenarioName::OpenLoop,
    };
    if !accepted.contains(&file_scenario) {
        return Err(CliError::Schema(format!(
            "scenario: `{}` cannot be run by this subcommand",
            parsed.sim.scenario
        )));
    }
    let sim = &parsed.sim;
    let csv_path = output.or(parsed.output_csv.clone());

    let residuals = reference_consistency_check(sim.reference.as_ref(), CONSISTENCY_SAMPLES, CONSISTENCY_STEP)?;
    if residuals.max() > CONSISTENCY_WARN_THRESHOLD {
        writeln!(
            err,
            "warning: reference is inconsistent (attitude residual {:e}, velocity residual {:e})",
            residuals.attitude, residuals.velocity
        )
        .map_err(io_err("stderr"))?;
    }

    let start = Instant::now();
    let log = run_scenario(sim)?;
    let wall_time_s = start.elapsed().as_secs_f64();
    let (first, last) = match (log.first(), log.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(CliError::Schema("t_final: run produced no log rows".to_owned())),
    };

    let summary = RunSummary {
        scenario: sim.scenario.to_string(),
        reference: parsed.reference_name.clone(),
        dt: sim.dt,
        t_final: sim.t_final,
        k_e: sim.k_e,
        rows: log.rows.len(),
        initial: first.into(),
        last: last.into(),
        max_defect: log.max_of(Column::Defect),
        decay_fits: decay_fits(&log, sim.t_final),
        gate: sim.controller.as_ref().map(|c| c.report().into()),
        reference_consistency: Some(residuals.into()),
        output_csv: csv_path.as_ref().map(|p| p.display().to_string()),
        wall_time_s,
    };
    let rendered = match format {
        SummaryFormat::Json => to_json(&summary) + "\n",
        SummaryFormat::Text => summary.to_text(),
    };

    match csv_path {
        Some(path) => {
            write_csv_file(&log, &path)?;
            out.write_all(rendered.as_bytes()).map_err(io_err("stdout"))?;
        }
        None => {
            write_csv(&log, &mut *out).map_err(io_err("stdout"))?;
            err.write_all(rendered.as_bytes()).map_err(io_err("stderr"))?;
        }
    }
    Ok(())
}

/// `[A | B]` as CSV: a header naming the 15 columns, then 12 rows in the
/// row-major `[R, Ω]` state layout.
pub fn operator_csv(op: &LinearizedOperator) -> String {
    let mut names: Vec<String> = Vec::with_capacity(15);
    for i in 1..=3 {
        for j in 1..=3 {
            names.push(format!("dR{i}{j}"));
        }
    }
    names.extend((1..=3).map(|i| format!("dw{i}")));
    names.extend((1..=3).map(|i| format!("du{i}")));
    let (a, b) = (op.state_matrix(), op.input_matrix());
    let mut s = names.join(",") + "\n";
    for i in 0..a.nrows() {
        let row: Vec<String> = a
            .row(i)
            .iter()
            .chain(b.row(i).iter())
            .map(|v| format!("{v:.16e}"))
            .collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Emits the linearization at the equilibrium `r0`, or along the named
/// reference at time `t` when `reference` is given.
pub fn linearize(
    r0: &Mat3,
    k_e: f64,
    reference: Option<&str>,
    t: f64,
    output: Option<&Path>,
    out: &mut dyn Write,
) -> CliResult<()> {
    let params = AmbientParams::new(k_e).map_err(|e| CliError::Schema(format!("--ke: {e}")))?;
    let op = match reference {
        None => linearize_at_equilibrium(r0, &params).map_err(|e| CliError::Schema(format!("--R0: {e}")))?,
        Some(TUMBLING_REFERENCE) => linearize_along_trajectory(&TumblingReference::default(), t, &params)?,
        Some(other) => {
            return Err(CliError::Schema(format!(
                "--reference: unknown reference `{other}` (expected `{TUMBLING_REFERENCE}`)"
            )))
        }
    };
    let text = operator_csv(&op);
    match output {
        Some(path) => std::fs::write(path, text).map_err(io_err(&path.display().to_string())),
        None => out.write_all(text.as_bytes()).map_err(io_err("stdout")),
    }
}

/// Gains as given on the command line.
#[derive(Debug, Clone, Default)]
pub struct GainArgs {
    pub variant: Option<Variant>,
    pub kp: Option<Mat3>,
    pub kd: Mat3,
    pub ki: Option<Mat3>,
    pub kp_scalar: Option<f64>,
    pub eps: Option<f64>,
}

impl GainArgs {
    /// Infers the variant from which gains are present unless one is given.
    pub fn to_gain_set(&self) -> CliResult<GainSet> {
        let schema = |msg: &str| CliError::Schema(msg.to_owned());
        let inferred = match (self.kp, self.kp_scalar, self.ki, self.eps) {
            (Some(_), None, None, None) => Variant::Pd,
            (Some(_), None, Some(_), None) => Variant::Pid,
            (None, Some(_), None, None) => Variant::TrackPd,
            (None, Some(_), None, Some(_)) => Variant::TrackPdEps,
            (Some(_), Some(_), _, _) => return Err(schema("give either --kp or --kp-scalar, not both")),
            (None, None, _, _) => return Err(schema("one of --kp or --kp-scalar is required")),
            _ => return Err(schema("--ki needs --kp; --eps needs --kp-scalar")),
        };
        let variant = self.variant.unwrap_or(inferred);
        let kd = self.kd;
        let missing = |flag: &str| CliError::Schema(format!("{flag} is required for {variant}"));
        let gains = match variant {
            Variant::Pd => GainSet::Pd { kp: self.kp.ok_or_else(|| missing("--kp"))?, kd },
            Variant::TrackFull => GainSet::TrackFull { kp: self.kp.ok_or_else(|| missing("--kp"))?, kd },
            Variant::Pid => GainSet::Pid {
                kp: self.kp.ok_or_else(|| missing("--kp"))?,
                kd,
                ki: self.ki.ok_or_else(|| missing("--ki"))?,
            },
            Variant::TrackPid => GainSet::TrackPid {
                kp: self.kp.ok_or_else(|| missing("--kp"))?,
                kd,
                ki: self.ki.ok_or_else(|| missing("--ki"))?,
            },
            Variant::TrackPd => GainSet::TrackPd { kp: self.kp_scalar.ok_or_else(|| missing("--kp-scalar"))?, kd },
            Variant::TrackPdEps => GainSet::TrackPdEps {
                kp: self.kp_scalar.ok_or_else(|| missing("--kp-scalar"))?,
                kd,
                eps: self.eps.ok_or_else(|| missing("--eps"))?,
            },
        };
        if gains.variant() != inferred
            && !matches!((inferred, variant), (Variant::Pd, Variant::TrackFull) | (Variant::Pid, Variant::TrackPid))
        {
            return Err(CliError::Schema(format!("the given gains do not match {variant}")));
        }
        Ok(gains)
    }
}

#[derive(Debug, Serialize)]
struct GateJson {
    variant: &'static str,
    passed: bool,
    spectral_abscissa: Option<f64>,
    eigenvalues: Option<Vec<[f64; 2]>>,
    epsilon_bound: Option<f64>,
    reason: Option<String>,
}

fn gate_text(report: &GateReport) -> String {
    let mut s = format!("{}: {}", report.variant, if report.passed { "PASS" } else { "FAIL" });
    if let Some(h) = &report.hurwitz {
        s += &format!("\nspectral abscissa {}", h.spectral_abscissa);
        let mut eig: Vec<_> = h.eigenvalues.clone();
        eig.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
        for z in eig {
            s += &format!("\n  eigenvalue {:+.12} {:+.12}i", z.re, z.im);
        }
    }
    if let Some(b) = report.epsilon_bound {
        s += &format!("\nepsilon bound {b}");
    }
    if let Some(r) = &report.reason {
        s += &format!("\nreason: {r}");
    }
    s + "\n"
}

/// Evaluates the gain gate. The report is written even when the gate fails,
/// which is then signalled by [`CliError::Gate`].
pub fn check_gains(gains: &GainArgs, format: SummaryFormat, out: &mut dyn Write) -> CliResult<()> {
    let report = gains.to_gain_set()?.gate()?;
    let text = match format {
        SummaryFormat::Text => gate_text(&report),
        SummaryFormat::Json => {
            let json = GateJson {
                variant: report.variant.name(),
                passed: report.passed,
                spectral_abscissa: report.hurwitz.as_ref().map(|h| h.spectral_abscissa),
                eigenvalues: report
                    .hurwitz
                    .as_ref()
                    .map(|h| h.eigenvalues.iter().map(|z| [z.re, z.im]).collect()),
                epsilon_bound: report.epsilon_bound,
                reason: report.reason.clone(),
            };
            to_json(&json) + "\n"
        }
    };
    out.write_all(text.as_bytes()).map_err(io_err("stdout"))?;
    if report.passed {
        Ok(())
    } else {
        Err(CliError::Gate(report.reason.unwrap_or_else(|| format!("{} gains rejected", report.variant))))
    }
}
