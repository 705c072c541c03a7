//! Run summaries.

use std::fmt::Write as _;

use ambient_attitude::controllers::GateReport;
use ambient_attitude::reference::ConsistencyResiduals;
use ambient_attitude::simulate::{exp_envelope_fit, Column, LogRow, TrajectoryLog};
use serde::Serialize;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Snapshot {
    pub t: f64,
    #[serde(rename = "err_R")]
    pub err_r: f64,
    #[serde(rename = "err_W")]
    pub err_omega: f64,
    pub defect: f64,
}

impl From<&LogRow> for Snapshot {
    fn from(row: &LogRow) -> Self {
        Self {
            t: row.t,
            err_r: row.err_r,
            err_omega: row.err_omega,
            defect: row.defect,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    pub column: &'static str,
    pub window: [f64; 2],
    pub rate: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GateSummary {
    pub variant: String,
    pub passed: bool,
    pub spectral_abscissa: Option<f64>,
    pub epsilon_bound: Option<f64>,
    pub reason: Option<String>,
}

impl From<&GateReport> for GateSummary {
    fn from(r: &GateReport) -> Self {
        Self {
            variant: r.variant.name().to_owned(),
            passed: r.passed,
            spectral_abscissa: r.hurwitz.as_ref().map(|h| h.spectral_abscissa),
            epsilon_bound: r.epsilon_bound,
            reason: r.reason.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Consistency {
    pub attitude: f64,
    pub velocity: f64,
}

impl From<ConsistencyResiduals> for Consistency {
    fn from(r: ConsistencyResiduals) -> Self {
        Self {
            attitude: r.attitude,
            velocity: r.velocity,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub reference: String,
    pub dt: f64,
    pub t_final: f64,
    pub k_e: f64,
    pub rows: usize,
    pub initial: Snapshot,
    #[serde(rename = "final")]
    pub last: Snapshot,
    pub max_defect: f64,
    pub decay_fits: Vec<DecayFit>,
    pub gate: Option<GateSummary>,
    pub reference_consistency: Option<Consistency>,
    pub output_csv: Option<String>,
    pub wall_time_s: f64,
}

/// Envelope fits of the error columns over the middle of the run. Columns
/// whose window holds too few samples are skipped.
pub fn decay_fits(log: &TrajectoryLog, t_final: f64) -> Vec<DecayFit> {
    let window = (0.2 * t_final, 0.8 * t_final);
    [(Column::ErrR, "err_R"), (Column::ErrOmega, "err_W"), (Column::ErrSum, "err_R+err_W")]
        .into_iter()
        .filter_map(|(column, name)| {
            exp_envelope_fit(log, column, window).ok().map(|fit| DecayFit {
                column: name,
                window: [window.0, window.1],
                rate: fit.rate,
                r_squared: fit.r_squared,
            })
        })
        .collect()
}

impl RunSummary {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario   {} (reference {})", self.scenario, self.reference);
        if let Some(g) = &self.gate {
            let _ = write!(s, "gains      {} {}", g.variant, if g.passed { "pass" } else { "FAIL" });
            if let Some(a) = g.spectral_abscissa {
                let _ = write!(s, ", spectral abscissa {a:.6}");
            }
            if let Some(b) = g.epsilon_bound {
                let _ = write!(s, ", eps bound {b:.6}");
            }
            s.push('\n');
        }
        let _ = writeln!(s, "steps      dt {} to t = {}, {} rows logged", self.dt, self.t_final, self.rows);
        for (label, snap) in [("initial", &self.initial), ("final", &self.last)] {
            let _ = writeln!(
                s,
                "{label:<10} t = {:<8} err_R {:.6e}  err_W {:.6e}  defect {:.3e}",
                snap.t, snap.err_r, snap.err_omega, snap.defect
            );
        }
        let _ = writeln!(s, "max defect {:.3e}", self.max_defect);
        for fit in &self.decay_fits {
            let _ = writeln!(
                s,
                "decay      {} over [{}, {}]: rate {:.4}, r^2 {:.4}",
                fit.column, fit.window[0], fit.window[1], fit.rate, fit.r_squared
            );
        }
        if let Some(c) = &self.reference_consistency {
            let _ = writeln!(s, "reference  residuals {:.2e} (attitude), {:.2e} (velocity)", c.attitude, c.velocity);
        }
        if let Some(p) = &self.output_csv {
            let _ = writeln!(s, "csv        {p}");
        }
        let _ = writeln!(s, "wall time  {:.3} s", self.wall_time_s);
        s
    }
}
