//! Reference trajectories `(R₀(t), Ω₀(t), u₀(t))` with `Ṙ₀ = R₀Ω̂₀` and `Ω̇₀ = u₀`.

use crate::error::{Error, Result};
use crate::so3::{ensure_rotation, vee_of_skew_part, Mat3, Vec3};

/// Defect tolerance for references that must lie on SO(3).
pub const REFERENCE_ROTATION_TOL: f64 = 1e-8;

/// Residual above which a reference is reported as inconsistent.
pub const CONSISTENCY_WARN_THRESHOLD: f64 = 1e-4;

/// Span sampled by [`reference_consistency_check`] when the horizon is unbounded.
const UNBOUNDED_CHECK_SPAN: f64 = 10.0;

/// Closed time interval on which a reference is defined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Horizon {
    pub start: f64,
    pub end: f64,
}

impl Horizon {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if start.is_finite() && !end.is_nan() && start <= end {
            Ok(Self { start, end })
        } else {
            Err(Error::InvalidConfig(format!("invalid horizon [{start}, {end}]")))
        }
    }

    pub fn unbounded() -> Self {
        Self {
            start: 0.0,
            end: f64::INFINITY,
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t <= self.end
    }

    pub fn ensure_contains(&self, t: f64) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(Error::OutsideHorizon {
                t,
                start: self.start,
                end: self.end,
            })
        }
    }
}

/// A closed-form reference. Implementations must be re-entrant.
pub trait ReferenceTrajectory: Send + Sync {
    fn attitude(&self, t: f64) -> Mat3;
    fn angular_velocity(&self, t: f64) -> Vec3;
    /// Reference input `u₀(t) = Ω̇₀(t)`.
    fn feedforward(&self, t: f64) -> Vec3;

    fn horizon(&self) -> Horizon {
        Horizon::unbounded()
    }
}

/// The rest configuration `(R₀, 0)` with `u₀ = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    r0: Mat3,
}

impl Equilibrium {
    pub fn new(r0: Mat3) -> Result<Self> {
        ensure_rotation(&r0, REFERENCE_ROTATION_TOL)?;
        Ok(Self { r0 })
    }

    pub fn r0(&self) -> &Mat3 {
        &self.r0
    }
}

impl ReferenceTrajectory for Equilibrium {
    fn attitude(&self, _t: f64) -> Mat3 {
        self.r0
    }

    fn angular_velocity(&self, _t: f64) -> Vec3 {
        Vec3::zeros()
    }

    fn feedforward(&self, _t: f64) -> Vec3 {
        Vec3::zeros()
    }
}

/// Trigonometric tumbling motion used for the tracking benchmark.
///
/// `R₀(0) = I`, `Ω₀(0) = (1, 1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TumblingReference {
    horizon: Horizon,
}

impl TumblingReference {
    pub fn new(horizon: Horizon) -> Self {
        Self { horizon }
    }
}

impl Default for TumblingReference {
    fn default() -> Self {
        Self::new(Horizon::unbounded())
    }
}

impl ReferenceTrajectory for TumblingReference {
    fn attitude(&self, t: f64) -> Mat3 {
        let (s, c) = t.sin_cos();
        Mat3::new(
            c * c,
            -s,
            c * s,
            s * s + c * c * s,
            c * c,
            c * s * s - c * s,
            c * s * s - c * s,
            c * s,
            c * c + s * s * s,
        )
    }

    fn angular_velocity(&self, t: f64) -> Vec3 {
        let (s, c) = t.sin_cos();
        Vec3::new(c * c - s, 1.0 - s, c * (1.0 + s))
    }

    fn feedforward(&self, t: f64) -> Vec3 {
        let (s, c) = t.sin_cos();
        Vec3::new(-2.0 * c * s - c, -c, -s * (1.0 + s) + c * c)
    }

    fn horizon(&self) -> Horizon {
        self.horizon
    }
}

/// Reference assembled from three closures.
pub struct FnReference<A, W, U> {
    attitude: A,
    angular_velocity: W,
    feedforward: U,
    horizon: Horizon,
}

impl<A, W, U> FnReference<A, W, U>
where
    A: Fn(f64) -> Mat3 + Send + Sync,
    W: Fn(f64) -> Vec3 + Send + Sync,
    U: Fn(f64) -> Vec3 + Send + Sync,
{
    pub fn new(attitude: A, angular_velocity: W, feedforward: U, horizon: Horizon) -> Self {
        Self {
            attitude,
            angular_velocity,
            feedforward,
            horizon,
        }
    }
}

impl<A, W, U> ReferenceTrajectory for FnReference<A, W, U>
where
    A: Fn(f64) -> Mat3 + Send + Sync,
    W: Fn(f64) -> Vec3 + Send + Sync,
    U: Fn(f64) -> Vec3 + Send + Sync,
{
    fn attitude(&self, t: f64) -> Mat3 {
        (self.attitude)(t)
    }

    fn angular_velocity(&self, t: f64) -> Vec3 {
        (self.angular_velocity)(t)
    }

    fn feedforward(&self, t: f64) -> Vec3 {
        (self.feedforward)(t)
    }

    fn horizon(&self) -> Horizon {
        self.horizon
    }
}

/// Maximum residuals of the reference equations over the sampled times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistencyResiduals {
    /// `max ‖vee(Skew(R₀ᵀ Ṙ₀)) − Ω₀‖`.
    pub attitude: f64,
    /// `max ‖Ω̇₀ − u₀‖`.
    pub velocity: f64,
}

impl ConsistencyResiduals {
    pub fn max(&self) -> f64 {
        self.attitude.max(self.velocity)
    }

    pub fn is_consistent(&self) -> bool {
        self.max() <= CONSISTENCY_WARN_THRESHOLD
    }
}

/// Checks `Ṙ₀ = R₀Ω̂₀` and `Ω̇₀ = u₀` with central differences of step `h` at
/// `samples` evenly spaced times across the horizon (the first
/// ten seconds when the horizon is unbounded).
pub fn reference_consistency_check(
    reference: &dyn ReferenceTrajectory,
    samples: usize,
    h: f64,
) -> Result<ConsistencyResiduals> {
    if !(h > 0.0) || samples < 2 {
        return Err(Error::InvalidConfig(format!(
            "consistency check needs h > 0 and at least 2 samples (h = {h}, samples = {samples})"
        )));
    }
    let horizon = reference.horizon();
    let end = if horizon.end.is_finite() {
        horizon.end
    } else {
        horizon.start + UNBOUNDED_CHECK_SPAN
    };
    let step = (end - horizon.start) / (samples - 1) as f64;
    let mut residuals = ConsistencyResiduals {
        attitude: 0.0,
        velocity: 0.0,
    };
    for i in 0..samples {
        let t = horizon.start + step * i as f64;
        let r_dot = (reference.attitude(t + h) - reference.attitude(t - h)) / (2.0 * h);
        let omega_fd = vee_of_skew_part(&(reference.attitude(t).transpose() * r_dot));
        let omega_dot =
            (reference.angular_velocity(t + h) - reference.angular_velocity(t - h)) / (2.0 * h);
        residuals.attitude = residuals
            .attitude
            .max((omega_fd - reference.angular_velocity(t)).norm());
        residuals.velocity = residuals
            .velocity
            .max((omega_dot - reference.feedforward(t)).norm());
    }
    Ok(residuals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::{exp_so3, orthogonality_defect};

    #[test]
    fn constant_reference_is_consistent() {
        let eq = Equilibrium::new(Mat3::from_diagonal(&Vec3::new(-1.0, -1.0, 1.0))).unwrap();
        let res = reference_consistency_check(&eq, 50, 1e-4).unwrap();
        assert_eq!(res.attitude, 0.0);
        assert_eq!(res.velocity, 0.0);
    }

    #[test]
    fn equilibrium_rejects_non_rotation() {
        assert!(Equilibrium::new(Mat3::identity() * 1.1).is_err());
        assert!(Equilibrium::new(Mat3::from_diagonal(&Vec3::new(-1.0, 1.0, 1.0))).is_err());
    }

    #[test]
    fn uniform_spin_is_consistent() {
        let spin = FnReference::new(
            |t| exp_so3(&(Vec3::z() * t)),
            |_| Vec3::z(),
            |_| Vec3::zeros(),
            Horizon::new(0.0, 5.0).unwrap(),
        );
        let res = reference_consistency_check(&spin, 101, 1e-4).unwrap();
        assert!(res.attitude <= 1e-6, "{res:?}");
        assert!(res.velocity <= 1e-6, "{res:?}");
    }

    #[test]
    fn inconsistent_reference_is_flagged() {
        let wrong = FnReference::new(
            |t| exp_so3(&(Vec3::z() * t)),
            |_| Vec3::x(),
            |_| Vec3::zeros(),
            Horizon::unbounded(),
        );
        let res = reference_consistency_check(&wrong, 20, 1e-4).unwrap();
        assert!(!res.is_consistent());
    }

    #[test]
    fn tumbling_reference_stays_on_so3_and_is_consistent() {
        let reference = TumblingReference::new(Horizon::new(0.0, 20.0).unwrap());
        for i in 0..=200 {
            let t = 0.1 * i as f64;
            let r = reference.attitude(t);
            assert!(orthogonality_defect(&r) <= 1e-8);
            assert!(r.determinant() > 0.0);
        }
        assert_eq!(reference.attitude(0.0), Mat3::identity());
        let res = reference_consistency_check(&reference, 401, 1e-4).unwrap();
        assert!(res.attitude <= 1e-4 && res.velocity <= 1e-4, "{res:?}");
    }

    #[test]
    fn consistency_check_rejects_bad_arguments() {
        let reference = TumblingReference::default();
        assert!(reference_consistency_check(&reference, 1, 1e-4).is_err());
        assert!(reference_consistency_check(&reference, 10, 0.0).is_err());
    }

    #[test]
    fn horizon_bounds() {
        let h = Horizon::new(0.0, 2.0).unwrap();
        assert!(h.contains(0.0) && h.contains(2.0) && !h.contains(2.1));
        assert!(h.ensure_contains(-0.1).is_err());
        assert!(Horizon::new(1.0, 0.0).is_err());
    }
}
