//! Jacobian linearization of the modified rigid-body system in ambient coordinates.
//!
//! At an equilibrium `(R₀, 0)` and along a reference `(R₀(t), Ω₀(t), u₀(t))`
//! the linearized attitude equation is
//!
//! ```text
//! ΔṘ = ΔR Ω̂₀ + R₀ ΔΩ̂ − 2k_e R₀ Sym(R₀ᵀΔR),    ΔΩ̇ = Δu,
//! ```
//!
//! where `ΔR = R − R₀` is an ordinary matrix difference in `ℝ^{3×3}`. With
//! `Z = R₀ᵀΔR = Z_s + Z_k` the system separates into a symmetric part that
//! decays on its own and a skew part that carries the attitude error.

use nalgebra::DMatrix;

use crate::dynamics::{modified_vector_field_flat, AmbientParams, RigidState, STATE_DIM};
use crate::error::Result;
use crate::reference::{ReferenceTrajectory, REFERENCE_ROTATION_TOL};
use crate::so3::{
    commutator, ensure_rotation, from_row_major, hat, sym, to_row_major, vee_of_skew_part, Mat3,
    Vec3,
};

/// Default central-difference step for Jacobian oracles.
pub const DEFAULT_FD_STEP: f64 = 1e-5;
/// Default max-entry tolerance when comparing against the oracle.
pub const DEFAULT_FD_TOL: f64 = 1e-6;

/// Number of inputs of the rigid-body system.
pub const INPUT_DIM: usize = 3;

/// Transformed linear state `(Z_s, Z_k^∨, ω)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZState {
    pub z_s: Mat3,
    pub z_k_vee: Vec3,
    /// `Ω` at an equilibrium, `ΔΩ` along a trajectory.
    pub omega_var: Vec3,
}

impl ZState {
    pub const FLAT_DIM: usize = 15;

    pub fn zeros() -> Self {
        Self {
            z_s: Mat3::zeros(),
            z_k_vee: Vec3::zeros(),
            omega_var: Vec3::zeros(),
        }
    }

    /// Builds the state from a plant state and the reference point it is compared with.
    pub fn from_states(state: &RigidState, r0: &Mat3, omega0: &Vec3) -> Self {
        let (z_s, z_k_vee) = z_transform(&state.r, r0);
        Self {
            z_s,
            z_k_vee,
            omega_var: state.omega - omega0,
        }
    }

    pub fn to_flat(&self) -> [f64; Self::FLAT_DIM] {
        let mut out = [0.0; Self::FLAT_DIM];
        out[..9].copy_from_slice(&to_row_major(&self.z_s));
        out[9..12].copy_from_slice(self.z_k_vee.as_slice());
        out[12..].copy_from_slice(self.omega_var.as_slice());
        out
    }

    pub fn from_flat(x: &[f64]) -> Self {
        Self {
            z_s: from_row_major(&x[..9]),
            z_k_vee: Vec3::new(x[9], x[10], x[11]),
            omega_var: Vec3::new(x[12], x[13], x[14]),
        }
    }
}

/// Linearization of the modified system about `(R₀, Ω₀, u₀)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizedOperator {
    pub r0: Mat3,
    pub omega0: Vec3,
    pub u0: Vec3,
    pub k_e: f64,
}

impl LinearizedOperator {
    /// Maps a perturbation `(ΔR, ΔΩ, Δu)` to `(ΔṘ, ΔΩ̇)`.
    pub fn apply(&self, delta_r: &Mat3, delta_omega: &Vec3, delta_u: &Vec3) -> (Mat3, Vec3) {
        let r0 = &self.r0;
        let delta_r_dot = delta_r * hat(&self.omega0) + r0 * hat(delta_omega)
            - r0 * sym(&(r0.transpose() * delta_r)) * (2.0 * self.k_e);
        (delta_r_dot, *delta_u)
    }

    /// Dense 12×12 state matrix in the row-major `[R, Ω]` layout.
    pub fn state_matrix(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(STATE_DIM, STATE_DIM);
        for j in 0..STATE_DIM {
            let mut e = [0.0; STATE_DIM];
            e[j] = 1.0;
            let dx = RigidState::from_flat(&e);
            let (dr, dw) = self.apply(&dx.r, &dx.omega, &Vec3::zeros());
            let col = RigidState::new(dr, dw).to_flat();
            for (i, v) in col.iter().enumerate() {
                a[(i, j)] = *v;
            }
        }
        a
    }

    /// Dense 12×3 input matrix.
    pub fn input_matrix(&self) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(STATE_DIM, INPUT_DIM);
        for j in 0..INPUT_DIM {
            let mut du = Vec3::zeros();
            du[j] = 1.0;
            let (dr, dw) = self.apply(&Mat3::zeros(), &Vec3::zeros(), &du);
            let col = RigidState::new(dr, dw).to_flat();
            for (i, v) in col.iter().enumerate() {
                b[(i, j)] = *v;
            }
        }
        b
    }
}

/// Linearization at the equilibrium `(R₀, 0)` with `u₀ = 0`.
pub fn linearize_at_equilibrium(r0: &Mat3, params: &AmbientParams) -> Result<LinearizedOperator> {
    ensure_rotation(r0, REFERENCE_ROTATION_TOL)?;
    Ok(LinearizedOperator {
        r0: *r0,
        omega0: Vec3::zeros(),
        u0: Vec3::zeros(),
        k_e: params.k_e,
    })
}

/// Linearization along `reference` at time `t`.
pub fn linearize_along_trajectory(
    reference: &dyn ReferenceTrajectory,
    t: f64,
    params: &AmbientParams,
) -> Result<LinearizedOperator> {
    reference.horizon().ensure_contains(t)?;
    let r0 = reference.attitude(t);
    ensure_rotation(&r0, REFERENCE_ROTATION_TOL)?;
    Ok(LinearizedOperator {
        r0,
        omega0: reference.angular_velocity(t),
        u0: reference.feedforward(t),
        k_e: params.k_e,
    })
}

/// Returns `(Z_s, Z_k^∨)` for `Z = R₀ᵀ(R − R₀)`.
///
/// The skew part is taken from `Skew(R₀ᵀR)` and the symmetric part from
/// `Sym(R₀ᵀR − I)`, so `R − R₀` is never formed.
pub fn z_transform(r: &Mat3, r0: &Mat3) -> (Mat3, Vec3) {
    let m = r0.transpose() * r;
    (sym(&(m - Mat3::identity())), vee_of_skew_part(&m))
}

/// Right-hand side of the transformed linear dynamics
///
/// ```text
/// Ż_s = [Z_s, Ω̂₀] − 2k_e Z_s,   Ż_k^∨ = Z_k^∨ × Ω₀ + ω,   ω̇ = u.
/// ```
pub fn z_dynamics(z: &ZState, u_var: &Vec3, omega0: &Vec3, params: &AmbientParams) -> ZState {
    ZState {
        z_s: commutator(&z.z_s, &hat(omega0)) - z.z_s * (2.0 * params.k_e),
        z_k_vee: z.z_k_vee.cross(omega0) + z.omega_var,
        omega_var: *u_var,
    }
}

/// Central-difference Jacobian, entry `(i, j) = (Xᵢ(x + h eⱼ) − Xᵢ(x − h eⱼ)) / 2h`.
pub fn finite_difference_jacobian<F>(mut field: F, point: &[f64], h: f64) -> DMatrix<f64>
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    let mut x = point.to_vec();
    let mut columns = Vec::with_capacity(point.len());
    for j in 0..point.len() {
        x[j] = point[j] + h;
        let plus = field(&x);
        x[j] = point[j] - h;
        let minus = field(&x);
        x[j] = point[j];
        columns.push(
            plus.iter()
                .zip(&minus)
                .map(|(p, m)| (p - m) / (2.0 * h))
                .collect::<Vec<_>>(),
        );
    }
    let rows = columns.first().map_or(0, Vec::len);
    DMatrix::from_fn(rows, point.len(), |i, j| columns[j][i])
}

/// Finite-difference state and input Jacobians of the modified rigid field at
/// `(R₀, Ω₀, u₀)`.
pub fn rigid_jacobians_fd(
    base: &RigidState,
    u0: &Vec3,
    params: &AmbientParams,
    h: f64,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let a = finite_difference_jacobian(
        |x| modified_vector_field_flat(x, u0, params).to_vec(),
        &base.to_flat(),
        h,
    );
    let x0 = base.to_flat();
    let b = finite_difference_jacobian(
        |u| modified_vector_field_flat(&x0, &Vec3::new(u[0], u[1], u[2]), params).to_vec(),
        u0.as_slice(),
        h,
    );
    (a, b)
}
