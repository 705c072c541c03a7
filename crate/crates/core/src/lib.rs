//! Attitude stabilization and tracking for the fully actuated rigid body,
//! designed by Jacobian linearization in the ambient space `ℝ^{3×3} × ℝ³`
//! rather than in local charts of SO(3).
//!
//! The plant is first feedback-transformed to `Ṙ = RΩ̂, Ω̇ = u` and then
//! modified off the manifold so that SO(3) becomes attractive
//! ([`dynamics`]). Linearizing the modified system ([`linearization`])
//! yields simple PD/PID stabilizers and tracking laws ([`controllers`]),
//! which [`simulate`] runs on the nonlinear system.

pub mod controllers;
pub mod dynamics;
pub mod error;
pub mod linearization;
pub mod reference;
pub mod simulate;
pub mod so3;

pub use controllers::{Controller, ControllerState, GainSet, Variant};
pub use dynamics::{AmbientParams, InertiaMatrix, RigidState};
pub use error::{Error, Result};
pub use reference::{Equilibrium, ReferenceTrajectory, TumblingReference};
pub use simulate::{run_scenario, Scenario, SimConfig, TrajectoryLog};
pub use so3::{Mat3, Vec3};
