//! Fixed-step closed-loop simulation of the modified rigid-body system.
//!
//! The integrated state is laid out as `[R (row-major, 9), Ω (3)]`, followed by
//! `∫Z_k^∨ (3)` when the controller has an integral term.

use std::fmt;
use std::sync::Arc;

use crate::controllers::Controller;
use crate::dynamics::{
    cancel_gyroscopic_torque, euler_angular_acceleration, modified_vector_field, AmbientParams,
    InertiaMatrix, RigidState, STATE_DIM,
};
use crate::error::{Error, Result};
use crate::linearization::z_transform;
use crate::reference::{Equilibrium, ReferenceTrajectory, TumblingReference};
use crate::so3::{orthogonality_defect, to_row_major, Mat3, Vec3};

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_STABILIZE_T_FINAL: f64 = 10.0;
pub const DEFAULT_TRACK_T_FINAL: f64 = 20.0;
pub const DEFAULT_LOG_STRIDE: usize = 10;

/// Values at or below this are clamped before taking logarithms.
pub const LOG_FLOOR: f64 = 1e-14;
/// Minimum number of samples accepted by [`fit_exponential`].
pub const MIN_FIT_SAMPLES: usize = 10;

/// One classical fourth-order Runge–Kutta step.
///
/// Fails if any stage derivative is not finite.
pub fn rk4_step<F>(mut field: F, t: f64, x: &[f64], dt: f64) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64]) -> Vec<f64>,
{
    let mut eval = |t: f64, x: &[f64]| {
        let d = field(t, x);
        if d.iter().all(|v| v.is_finite()) {
            Ok(d)
        } else {
            Err(Error::NonFinite { t })
        }
    };
    let offset = |k: &[f64], h: f64| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + h * b).collect() };

    let k1 = eval(t, x)?;
    let k2 = eval(t + 0.5 * dt, &offset(&k1, 0.5 * dt))?;
    let k3 = eval(t + 0.5 * dt, &offset(&k2, 0.5 * dt))?;
    let k4 = eval(t + dt, &offset(&k3, dt))?;
    Ok((0..x.len())
        .map(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Integrates `n_steps` RK4 steps from `t = 0`, calling `observe(k, t, x)` before
/// each step and once more at the end. Times are computed as `k·dt`.
pub fn integrate<F, O>(mut field: F, x0: &[f64], dt: f64, n_steps: usize, mut observe: O) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64]) -> Vec<f64>,
    O: FnMut(usize, f64, &[f64]),
{
    let mut x = x0.to_vec();
    for k in 0..n_steps {
        let t = k as f64 * dt;
        observe(k, t, &x);
        x = rk4_step(&mut field, t, &x, dt)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { t: (k + 1) as f64 * dt });
        }
    }
    observe(n_steps, n_steps as f64 * dt, &x);
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Stabilize,
    Track,
    /// Applies only the reference feedforward `u₀(t)`.
    OpenLoop,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Stabilize => "stabilize",
            Scenario::Track => "track",
            Scenario::OpenLoop => "open_loop",
        })
    }
}

#[derive(Clone)]
pub struct SimConfig {
    pub dt: f64,
    pub t_final: f64,
    pub k_e: f64,
    pub scenario: Scenario,
    /// Required for `Stabilize` and `Track`; ignored for `OpenLoop`.
    pub controller: Option<Controller>,
    pub initial: RigidState,
    pub reference: Arc<dyn ReferenceTrajectory>,
    pub log_stride: usize,
    /// When set, the input is realized as a torque on the Euler equation
    /// through gyroscopic cancellation instead of driving `Ω̇` directly.
    pub inertia: Option<InertiaMatrix>,
}

impl fmt::Debug for SimConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SimConfig")
            .field("dt", &self.dt)
            .field("t_final", &self.t_final)
            .field("k_e", &self.k_e)
            .field("scenario", &self.scenario)
            .field("variant", &self.controller.as_ref().map(|c| c.variant()))
            .field("initial", &self.initial)
            .field("log_stride", &self.log_stride)
            .finish_non_exhaustive()
    }
}

impl SimConfig {
    /// Stabilization of `(r0, 0)` with the default step, horizon and `k_e = 1`.
    pub fn stabilize(controller: Controller, r0: Mat3, initial: RigidState) -> Result<Self> {
        Ok(Self {
            dt: DEFAULT_DT,
            t_final: DEFAULT_STABILIZE_T_FINAL,
            k_e: 1.0,
            scenario: Scenario::Stabilize,
            controller: Some(controller),
            initial,
            reference: Arc::new(Equilibrium::new(r0)?),
            log_stride: DEFAULT_LOG_STRIDE,
            inertia: None,
        })
    }

    /// Tracking of `reference` with the default step, horizon and `k_e = 1`.
    pub fn track(controller: Controller, reference: Arc<dyn ReferenceTrajectory>, initial: RigidState) -> Self {
        Self {
            dt: DEFAULT_DT,
            t_final: DEFAULT_TRACK_T_FINAL,
            k_e: 1.0,
            scenario: Scenario::Track,
            controller: Some(controller),
            initial,
            reference,
            log_stride: DEFAULT_LOG_STRIDE,
            inertia: None,
        }
    }

    /// The stabilization benchmark: `R₀ = diag(−1, −1, 1)`, `R(0) = exp((2π/3) ê₂)`,
    /// `Ω(0) = (0, 1, 1)`, `K_P = 4I`, `K_D = 2I`.
    pub fn benchmark_stabilize() -> Self {
        use crate::controllers::GainSet;
        let controller = Controller::new(GainSet::Pd {
            kp: Mat3::identity() * 4.0,
            kd: Mat3::identity() * 2.0,
        })
        .expect("benchmark gains pass the gate");
        let initial = RigidState::new(
            crate::so3::exp_so3(&Vec3::new(0.0, 2.0 * std::f64::consts::PI / 3.0, 0.0)),
            Vec3::new(0.0, 1.0, 1.0),
        );
        Self::stabilize(controller, Mat3::from_diagonal(&Vec3::new(-1.0, -1.0, 1.0)), initial)
            .expect("diag(-1, -1, 1) is a rotation")
    }

    /// The tracking benchmark: tumbling reference, `R(0) = exp(0.99π ê₂)`,
    /// `Ω(0) = (1, 1, 1)`, `k_P = 4`, `K_D = 2I`, `ε = 1`.
    pub fn benchmark_track() -> Self {
        use crate::controllers::GainSet;
        let controller = Controller::new(GainSet::TrackPdEps {
            kp: 4.0,
            kd: Mat3::identity() * 2.0,
            eps: 1.0,
        })
        .expect("benchmark gains pass the gate");
        let initial = RigidState::new(
            crate::so3::exp_so3(&Vec3::new(0.0, 0.99 * std::f64::consts::PI, 0.0)),
            Vec3::new(1.0, 1.0, 1.0),
        );
        Self::track(controller, Arc::new(TumblingReference::default()), initial)
    }

    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt + 1e-9).floor() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_final.is_finite() && self.t_final >= self.dt) {
            return bad(format!("t_final must be at least dt, got {}", self.t_final));
        }
        if self.log_stride == 0 {
            return bad("log_stride must be at least 1".to_owned());
        }
        AmbientParams::new(self.k_e)?;
        if self.initial.r.iter().chain(self.initial.omega.iter()).any(|v| !v.is_finite()) {
            return bad("initial state must be finite".to_owned());
        }
        match (self.scenario, &self.controller) {
            (Scenario::OpenLoop, _) => {}
            (_, None) => return bad(format!("scenario {} requires a controller", self.scenario)),
            (Scenario::Stabilize, Some(c)) if c.variant().is_tracking() => {
                return bad(format!("{} is a tracking controller; stabilize needs PD or PID", c.variant()))
            }
            (Scenario::Track, Some(c)) if !c.variant().is_tracking() => {
                return bad(format!("{} is a stabilizing controller; track needs a TRACK_* variant", c.variant()))
            }
            _ => {}
        }
        let horizon = self.reference.horizon();
        if !(horizon.contains(0.0) && horizon.contains(self.n_steps() as f64 * self.dt)) {
            return bad(format!(
                "reference horizon [{}, {}] does not cover [0, {}]",
                horizon.start, horizon.end, self.t_final
            ));
        }
        Ok(())
    }

    fn uses_integral(&self) -> bool {
        self.scenario != Scenario::OpenLoop
            && self.controller.as_ref().is_some_and(|c| c.variant().uses_integral())
    }

    /// Control input applied at `(t, x)` in the flat layout.
    fn control(&self, t: f64, state: &RigidState, integral: &Vec3) -> Vec3 {
        let u0 = self.reference.feedforward(t);
        match (&self.controller, self.scenario) {
            (Some(c), Scenario::Stabilize | Scenario::Track) => {
                let r0 = self.reference.attitude(t);
                let omega0 = self.reference.angular_velocity(t);
                let (_, z_k_vee) = z_transform(&state.r, &r0);
                c.feedback(&z_k_vee, &(state.omega - omega0), &omega0, &u0, integral)
            }
            _ => u0,
        }
    }

    fn derivative(&self, params: &AmbientParams, t: f64, x: &[f64]) -> Vec<f64> {
        let state = RigidState::from_flat(x);
        let integral = integral_of(x);
        let u = self.control(t, &state, &integral);
        let (r_dot, mut omega_dot) = modified_vector_field(&state, &u, params);
        if let Some(inertia) = &self.inertia {
            let tau = cancel_gyroscopic_torque(inertia, &state.omega, &u);
            omega_dot = euler_angular_acceleration(inertia, &state.omega, &tau);
        }
        let mut out = RigidState::new(r_dot, omega_dot).to_flat().to_vec();
        if x.len() > STATE_DIM {
            let (_, z_k_vee) = z_transform(&state.r, &self.reference.attitude(t));
            out.extend_from_slice(z_k_vee.as_slice());
        }
        out
    }
}

fn integral_of(x: &[f64]) -> Vec3 {
    if x.len() > STATE_DIM {
        Vec3::new(x[12], x[13], x[14])
    } else {
        Vec3::zeros()
    }
}

/// `‖R − R₀‖`, `‖Ω − Ω₀‖` and `‖RᵀR − I‖`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorMetrics {
    pub err_r: f64,
    pub err_omega: f64,
    pub defect: f64,
}

pub fn error_metrics(state: &RigidState, ref_r: &Mat3, ref_omega: &Vec3) -> ErrorMetrics {
    ErrorMetrics {
        err_r: (state.r - ref_r).norm(),
        err_omega: (state.omega - ref_omega).norm(),
        defect: orthogonality_defect(&state.r),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    pub t: f64,
    pub r: Mat3,
    pub omega: Vec3,
    pub u: Vec3,
    pub err_r: f64,
    pub err_omega: f64,
    pub defect: f64,
}

impl LogRow {
    /// Number of scalar columns in a CSV row.
    pub const COLUMNS: usize = 19;

    /// `t, R11..R33, w1..w3, u1..u3, err_R, err_W, defect`.
    pub fn to_values(&self) -> [f64; Self::COLUMNS] {
        let mut out = [0.0; Self::COLUMNS];
        out[0] = self.t;
        out[1..10].copy_from_slice(&to_row_major(&self.r));
        out[10..13].copy_from_slice(self.omega.as_slice());
        out[13..16].copy_from_slice(self.u.as_slice());
        out[16] = self.err_r;
        out[17] = self.err_omega;
        out[18] = self.defect;
        out
    }
}

/// Error column selector for [`exp_envelope_fit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    ErrR,
    ErrOmega,
    /// `err_R + err_Ω`.
    ErrSum,
    Defect,
}

impl Column {
    pub fn read(self, row: &LogRow) -> f64 {
        match self {
            Column::ErrR => row.err_r,
            Column::ErrOmega => row.err_omega,
            Column::ErrSum => row.err_r + row.err_omega,
            Column::Defect => row.defect,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrajectoryLog {
    pub rows: Vec<LogRow>,
}

impl TrajectoryLog {
    pub fn first(&self) -> Option<&LogRow> {
        self.rows.first()
    }

    pub fn last(&self) -> Option<&LogRow> {
        self.rows.last()
    }

    pub fn max_of(&self, column: Column) -> f64 {
        self.rows.iter().map(|r| column.read(r)).fold(0.0, f64::max)
    }

    pub fn column(&self, column: Column) -> Vec<f64> {
        self.rows.iter().map(|r| column.read(r)).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }
}

/// Integrates the modified system under the configured feedback.
pub fn run_scenario(cfg: &SimConfig) -> Result<TrajectoryLog> {
    cfg.validate()?;
    let params = AmbientParams::new(cfg.k_e)?;
    let mut x0 = cfg.initial.to_flat().to_vec();
    if cfg.uses_integral() {
        x0.extend_from_slice(&[0.0; 3]);
    }
    let n_steps = cfg.n_steps();
    let mut log = TrajectoryLog {
        rows: Vec::with_capacity(n_steps / cfg.log_stride + 1),
    };
    integrate(
        |t, x| cfg.derivative(&params, t, x),
        &x0,
        cfg.dt,
        n_steps,
        |k, t, x| {
            if k % cfg.log_stride != 0 {
                return;
            }
            let state = RigidState::from_flat(x);
            let u = cfg.control(t, &state, &integral_of(x));
            let m = error_metrics(&state, &cfg.reference.attitude(t), &cfg.reference.angular_velocity(t));
            log.rows.push(LogRow {
                t,
                r: state.r,
                omega: state.omega,
                u,
                err_r: m.err_r,
                err_omega: m.err_omega,
                defect: m.defect,
            });
        },
    )?;
    Ok(log)
}

/// Least-squares fit of `ln y = c − rate·t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpFit {
    pub rate: f64,
    pub r_squared: f64,
    pub samples: usize,
}

/// Fits an exponential envelope to `values` over `times ∈ [window.0, window.1]`.
pub fn fit_exponential(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<ExpFit> {
    let (ts, ys): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= window.0 && **t <= window.1)
        .map(|(t, y)| (*t, y.max(LOG_FLOOR).ln()))
        .unzip();
    let n = ts.len();
    if n < MIN_FIT_SAMPLES {
        return Err(Error::TooFewSamples {
            required: MIN_FIT_SAMPLES,
            actual: n,
        });
    }
    let nf = n as f64;
    let t_mean = ts.iter().sum::<f64>() / nf;
    let y_mean = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (t, y) in ts.iter().zip(&ys) {
        let (dt, dy) = (t - t_mean, y - y_mean);
        sxx += dt * dt;
        sxy += dt * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    // A perfectly flat series is fit exactly.
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(ExpFit {
        rate: -slope,
        r_squared,
        samples: n,
    })
}

pub fn exp_envelope_fit(log: &TrajectoryLog, column: Column, window: (f64, f64)) -> Result<ExpFit> {
    fit_exponential(&log.times(), &log.column(column), window)
}
