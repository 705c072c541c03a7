//! Stabilizing and tracking control laws with their gain gates.
//!
//! All laws act on the attitude error `Z_k^∨ = vee(Skew(R₀ᵀR))` and the
//! velocity error `ΔΩ = Ω − Ω₀`:
//!
//! | variant        | `Δu`                                                              | gate                      |
//! |----------------|-------------------------------------------------------------------|---------------------------|
//! | `PD`           | `−K_P Z − K_D Ω`                                                  | `[[0, I], [−K_P, −K_D]]` Hurwitz |
//! | `PID`          | `−K_P Z − K_D Ω − K_I ∫Z`                                         | `det(λ³I + λ²K_D + λK_P + K_I)` Hurwitz |
//! | `TRACK_FULL`   | `−K_P Z − K_D Ż − Ż × Ω₀ − Z × u₀`, `Ż = Z × Ω₀ + ΔΩ`              | matrix Hurwitz            |
//! | `TRACK_PID`    | `TRACK_FULL` − `K_I ∫Z`                                           | polynomial Hurwitz        |
//! | `TRACK_PD`     | `−k_P Z − K_D ΔΩ`                                                 | `k_P > 0`, `K_D ≻ 0`      |
//! | `TRACK_PD_EPS` | `−k_P Z − K_D ΔΩ − ε (Z × Ω₀)`                                    | also `0 < ε <` [`epsilon_bound`] |
//!
//! Tracking variants return `u = u₀ + Δu`. Gates run once, in [`Controller::new`].

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::dynamics::is_symmetric_positive_definite;
use crate::error::{Error, Result};
use crate::so3::{Mat3, Vec3};

/// Margin on the spectral abscissa: Hurwitz iff `max Re λ < −HURWITZ_TOL`.
pub const HURWITZ_TOL: f64 = 1e-9;

const SCHUR_EPS: f64 = 1e-15;
const SCHUR_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Pd,
    Pid,
    TrackFull,
    TrackPid,
    TrackPd,
    TrackPdEps,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::Pd,
        Variant::Pid,
        Variant::TrackFull,
        Variant::TrackPid,
        Variant::TrackPd,
        Variant::TrackPdEps,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Pd => "PD",
            Variant::Pid => "PID",
            Variant::TrackFull => "TRACK_FULL",
            Variant::TrackPid => "TRACK_PID",
            Variant::TrackPd => "TRACK_PD",
            Variant::TrackPdEps => "TRACK_PD_EPS",
        }
    }

    pub fn is_tracking(self) -> bool {
        !matches!(self, Variant::Pd | Variant::Pid)
    }

    pub fn uses_integral(self) -> bool {
        matches!(self, Variant::Pid | Variant::TrackPid)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown controller variant `{s}`")))
    }
}

/// Controller gains, one shape per variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GainSet {
    Pd { kp: Mat3, kd: Mat3 },
    Pid { kp: Mat3, kd: Mat3, ki: Mat3 },
    TrackFull { kp: Mat3, kd: Mat3 },
    TrackPid { kp: Mat3, kd: Mat3, ki: Mat3 },
    TrackPd { kp: f64, kd: Mat3 },
    TrackPdEps { kp: f64, kd: Mat3, eps: f64 },
}

impl GainSet {
    pub fn variant(&self) -> Variant {
        match self {
            GainSet::Pd { .. } => Variant::Pd,
            GainSet::Pid { .. } => Variant::Pid,
            GainSet::TrackFull { .. } => Variant::TrackFull,
            GainSet::TrackPid { .. } => Variant::TrackPid,
            GainSet::TrackPd { .. } => Variant::TrackPd,
            GainSet::TrackPdEps { .. } => Variant::TrackPdEps,
        }
    }

    /// Evaluates the variant's validity conditions without rejecting anything.
    ///
    /// Errors only when a verdict cannot be reached (non-convergent eigenvalue
    /// iteration, or `K_D` not SPD where an ε-bound is needed).
    pub fn gate(&self) -> Result<GateReport> {
        let variant = self.variant();
        let mut report = GateReport {
            variant,
            hurwitz: None,
            epsilon_bound: None,
            passed: false,
            reason: None,
        };
        match self {
            GainSet::Pd { kp, kd } | GainSet::TrackFull { kp, kd } => {
                let verdict = check_hurwitz_matrix(kp, kd)?;
                report.passed = verdict.is_hurwitz;
                if !verdict.is_hurwitz {
                    report.reason = Some(format!(
                        "[[0, I], [-K_P, -K_D]] is not Hurwitz (spectral abscissa {})",
                        verdict.spectral_abscissa
                    ));
                }
                report.hurwitz = Some(verdict);
            }
            GainSet::Pid { kp, kd, ki } | GainSet::TrackPid { kp, kd, ki } => {
                let verdict = check_hurwitz_poly(kp, kd, ki)?;
                report.passed = verdict.is_hurwitz;
                if !verdict.is_hurwitz {
                    report.reason = Some(format!(
                        "det(λ³I + λ²K_D + λK_P + K_I) is not Hurwitz (spectral abscissa {})",
                        verdict.spectral_abscissa
                    ));
                }
                report.hurwitz = Some(verdict);
            }
            GainSet::TrackPd { kp, kd } => {
                report.reason = scalar_pd_failure(*kp, kd);
                report.passed = report.reason.is_none();
            }
            GainSet::TrackPdEps { kp, kd, eps } => {
                report.reason = scalar_pd_failure(*kp, kd);
                if report.reason.is_none() {
                    let bound = epsilon_bound(*kp, kd)?;
                    report.epsilon_bound = Some(bound);
                    if !(*eps > 0.0 && *eps < bound) {
                        report.reason = Some(format!("ε = {eps} is not in (0, {bound})"));
                    }
                }
                report.passed = report.reason.is_none();
            }
        }
        Ok(report)
    }
}

fn scalar_pd_failure(kp: f64, kd: &Mat3) -> Option<String> {
    if !(kp > 0.0 && kp.is_finite()) {
        Some(format!("k_P = {kp} must be positive"))
    } else if !is_symmetric_positive_definite(kd) {
        Some("K_D must be symmetric positive definite".to_owned())
    } else {
        None
    }
}

/// Eigen-based Hurwitz verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct HurwitzVerdict {
    pub is_hurwitz: bool,
    /// `max Re λ` over the spectrum.
    pub spectral_abscissa: f64,
    pub eigenvalues: Vec<Complex<f64>>,
}

impl HurwitzVerdict {
    fn from_spectrum(eigenvalues: Vec<Complex<f64>>) -> Self {
        let spectral_abscissa = eigenvalues
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        Self {
            is_hurwitz: spectral_abscissa < -HURWITZ_TOL,
            spectral_abscissa,
            eigenvalues,
        }
    }
}

/// Outcome of [`GainSet::gate`].
#[derive(Debug, Clone, PartialEq)]
pub struct GateReport {
    pub variant: Variant,
    pub hurwitz: Option<HurwitzVerdict>,
    pub epsilon_bound: Option<f64>,
    pub passed: bool,
    pub reason: Option<String>,
}

/// Eigenvalues of a dense real matrix via real Schur decomposition.
pub fn spectrum(m: DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::EigenNotConverged);
    }
    let schur = m.try_schur(SCHUR_EPS, SCHUR_MAX_ITER).ok_or(Error::EigenNotConverged)?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

fn put_block(m: &mut DMatrix<f64>, row: usize, col: usize, block: &Mat3) {
    m.view_mut((row, col), (3, 3)).copy_from(block);
}

/// Hurwitz check of the 6×6 closed-loop matrix `[[0, I], [−K_P, −K_D]]`.
pub fn check_hurwitz_matrix(kp: &Mat3, kd: &Mat3) -> Result<HurwitzVerdict> {
    let mut m = DMatrix::zeros(6, 6);
    put_block(&mut m, 0, 3, &Mat3::identity());
    put_block(&mut m, 3, 0, &-kp);
    put_block(&mut m, 3, 3, &-kd);
    Ok(HurwitzVerdict::from_spectrum(spectrum(m)?))
}

/// Hurwitz check of `det(λ³I + λ²K_D + λK_P + K_I)` through its 9×9 block
/// companion matrix `[[0, I, 0], [0, 0, I], [−K_I, −K_P, −K_D]]`.
pub fn check_hurwitz_poly(kp: &Mat3, kd: &Mat3, ki: &Mat3) -> Result<HurwitzVerdict> {
    let mut m = DMatrix::zeros(9, 9);
    put_block(&mut m, 0, 3, &Mat3::identity());
    put_block(&mut m, 3, 6, &Mat3::identity());
    put_block(&mut m, 6, 0, &-ki);
    put_block(&mut m, 6, 3, &-kp);
    put_block(&mut m, 6, 6, &-kd);
    Ok(HurwitzVerdict::from_spectrum(spectrum(m)?))
}

/// Upper bound on ε for `TRACK_PD_EPS`:
/// `min{√k_P, 4k_P λ_min(K_D) / (4k_P + λ_max(K_D)²)}`.
pub fn epsilon_bound(kp: f64, kd: &Mat3) -> Result<f64> {
    if !(kp > 0.0 && kp.is_finite()) {
        return Err(Error::InvalidConfig(format!("k_P = {kp} must be positive")));
    }
    if !is_symmetric_positive_definite(kd) {
        return Err(Error::NotPositiveDefinite { what: "K_D" });
    }
    let ev = kd.symmetric_eigenvalues();
    let (lo, hi) = (ev.min(), ev.max());
    Ok(kp.sqrt().min(4.0 * kp * lo / (4.0 * kp + hi * hi)))
}

/// Integral of `Z_k^∨`, carried as three extra ODE components by the simulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerState {
    pub integral_acc: Vec3,
    pub t_last: f64,
}

impl Default for ControllerState {
    fn default() -> Self {
        Self {
            integral_acc: Vec3::zeros(),
            t_last: 0.0,
        }
    }
}

/// Gains that passed their gate.
#[derive(Debug, Clone, PartialEq)]
pub struct Controller {
    gains: GainSet,
    report: GateReport,
}

impl Controller {
    pub fn new(gains: GainSet) -> Result<Self> {
        let report = gains.gate()?;
        if !report.passed {
            return Err(Error::GainGate {
                variant: report.variant.name(),
                reason: report.reason.clone().unwrap_or_default(),
                spectral_abscissa: report.hurwitz.as_ref().map(|h| h.spectral_abscissa),
                bound: report.epsilon_bound,
            });
        }
        Ok(Self { gains, report })
    }

    pub fn gains(&self) -> &GainSet {
        &self.gains
    }

    pub fn report(&self) -> &GateReport {
        &self.report
    }

    pub fn variant(&self) -> Variant {
        self.gains.variant()
    }

    fn wrong_variant(&self, op: &str) -> Error {
        Error::InvalidConfig(format!("{op} is not defined for a {} controller", self.variant()))
    }

    /// `u = −K_P Z_k^∨ − K_D Ω`.
    pub fn pd_stabilizer(&self, z_k_vee: &Vec3, omega: &Vec3) -> Result<Vec3> {
        match &self.gains {
            GainSet::Pd { kp, kd } => Ok(-(kp * z_k_vee) - kd * omega),
            _ => Err(self.wrong_variant("pd_stabilizer")),
        }
    }

    /// `u = −K_P Z_k^∨ − K_D Ω − K_I ∫Z_k^∨`, with the integral read from `state`.
    pub fn pid_stabilizer(
        &self,
        state: &ControllerState,
        z_k_vee: &Vec3,
        omega: &Vec3,
        t: f64,
    ) -> Result<(Vec3, ControllerState)> {
        match &self.gains {
            GainSet::Pid { kp, kd, ki } => {
                let u = -(kp * z_k_vee) - kd * omega - ki * state.integral_acc;
                Ok((u, ControllerState { t_last: t, ..*state }))
            }
            _ => Err(self.wrong_variant("pid_stabilizer")),
        }
    }

    /// Tracking input `u = u₀ + Δu` for the four tracking variants.
    pub fn tracking_control(
        &self,
        z_k_vee: &Vec3,
        delta_omega: &Vec3,
        omega0: &Vec3,
        u0: &Vec3,
        state: &ControllerState,
    ) -> Result<Vec3> {
        if !self.variant().is_tracking() {
            return Err(self.wrong_variant("tracking_control"));
        }
        Ok(u0 + self.delta_u(z_k_vee, delta_omega, omega0, u0, &state.integral_acc))
    }

    /// Feedback used by the simulator: `Δu` for stabilizers (where `Ω₀ = u₀ = 0`),
    /// `u₀ + Δu` for trackers.
    pub fn feedback(
        &self,
        z_k_vee: &Vec3,
        delta_omega: &Vec3,
        omega0: &Vec3,
        u0: &Vec3,
        integral: &Vec3,
    ) -> Vec3 {
        let du = self.delta_u(z_k_vee, delta_omega, omega0, u0, integral);
        if self.variant().is_tracking() {
            u0 + du
        } else {
            du
        }
    }

    fn delta_u(&self, z: &Vec3, dw: &Vec3, omega0: &Vec3, u0: &Vec3, integral: &Vec3) -> Vec3 {
        match &self.gains {
            GainSet::Pd { kp, kd } => -(kp * z) - kd * dw,
            GainSet::Pid { kp, kd, ki } => -(kp * z) - kd * dw - ki * integral,
            GainSet::TrackFull { kp, kd } => {
                let z_dot = z.cross(omega0) + dw;
                -(kp * z) - kd * z_dot - z_dot.cross(omega0) - z.cross(u0)
            }
            GainSet::TrackPid { kp, kd, ki } => {
                let z_dot = z.cross(omega0) + dw;
                -(kp * z) - kd * z_dot - ki * integral - z_dot.cross(omega0) - z.cross(u0)
            }
            GainSet::TrackPd { kp, kd } => -(z * *kp) - kd * dw,
            GainSet::TrackPdEps { kp, kd, eps } => -(z * *kp) - kd * dw - z.cross(omega0) * *eps,
        }
    }
}
