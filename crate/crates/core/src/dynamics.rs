//! Rigid-body vector fields on the ambient space `ℝ^{3×3} × ℝ³`.
//!
//! The torque-driven body `Ṙ = RΩ̂, 𝕀Ω̇ = 𝕀Ω×Ω + τ` is first reduced to
//! `Ω̇ = u` by cancelling the gyroscopic torque. The ambient system is then
//! modified off SO(3) by subtracting the gradient of
//! `Ṽ(R) = (k_e/4)‖RᵀR − I‖²`, which leaves the dynamics on the manifold
//! untouched and pulls nearby states back onto it.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linearization::finite_difference_jacobian;
use crate::so3::{from_row_major, hat, to_row_major, Mat3, Vec3};

/// Length of a flattened rigid state: row-major `R` followed by `Ω`.
pub const STATE_DIM: usize = 12;

/// Orientation and body angular velocity. `r` need not be a rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidState {
    pub r: Mat3,
    pub omega: Vec3,
}

impl RigidState {
    pub fn new(r: Mat3, omega: Vec3) -> Self {
        Self { r, omega }
    }

    pub fn to_flat(&self) -> [f64; STATE_DIM] {
        let mut out = [0.0; STATE_DIM];
        out[..9].copy_from_slice(&to_row_major(&self.r));
        out[9..].copy_from_slice(self.omega.as_slice());
        out
    }

    /// Reads the first twelve entries of `x`.
    pub fn from_flat(x: &[f64]) -> Self {
        Self {
            r: from_row_major(&x[..9]),
            omega: Vec3::new(x[9], x[10], x[11]),
        }
    }
}

/// Symmetric positive definite moment of inertia, stored with its inverse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InertiaMatrix {
    matrix: Mat3,
    inverse: Mat3,
}

impl InertiaMatrix {
    pub fn new(matrix: Mat3) -> Result<Self> {
        let not_pd = Error::NotPositiveDefinite { what: "inertia" };
        if !is_symmetric_positive_definite(&matrix) {
            return Err(not_pd);
        }
        let inverse = matrix.try_inverse().ok_or(not_pd)?;
        Ok(Self { matrix, inverse })
    }

    pub fn diagonal(d1: f64, d2: f64, d3: f64) -> Result<Self> {
        Self::new(Mat3::from_diagonal(&Vec3::new(d1, d2, d3)))
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.matrix
    }

    pub fn inverse(&self) -> &Mat3 {
        &self.inverse
    }
}

pub(crate) fn is_symmetric_positive_definite(m: &Mat3) -> bool {
    let scale = m.norm().max(1.0);
    m.iter().all(|x| x.is_finite())
        && (m - m.transpose()).norm() <= 1e-12 * scale
        && m.symmetric_eigenvalues().iter().all(|&ev| ev > 0.0)
}

/// Attractiveness gain of the modified system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmbientParams {
    pub k_e: f64,
}

impl AmbientParams {
    /// `k_e = 0` is accepted and yields the unmodified system.
    pub fn new(k_e: f64) -> Result<Self> {
        if k_e.is_finite() && k_e >= 0.0 {
            Ok(Self { k_e })
        } else {
            Err(Error::InvalidConfig(format!("k_e must be finite and nonnegative, got {k_e}")))
        }
    }
}

/// Torque that turns Euler's equation into `Ω̇ = u`: `τ = 𝕀u − (𝕀Ω) × Ω`.
pub fn cancel_gyroscopic_torque(inertia: &InertiaMatrix, omega: &Vec3, u: &Vec3) -> Vec3 {
    inertia.matrix * u - (inertia.matrix * omega).cross(omega)
}

/// Angular acceleration of the torque-driven body, `𝕀⁻¹(𝕀Ω × Ω + τ)`.
pub fn euler_angular_acceleration(inertia: &InertiaMatrix, omega: &Vec3, tau: &Vec3) -> Vec3 {
    inertia.inverse * ((inertia.matrix * omega).cross(omega) + tau)
}

/// Returns `(Ṽ(R), ∇_R Ṽ)` with `Ṽ = (k_e/4)‖RᵀR − I‖²` and
/// `∇_R Ṽ = k_e R(RᵀR − I)`.
///
/// Only defined on `det R > 0`, where the zero set of `Ṽ` is exactly SO(3).
pub fn manifold_potential_and_gradient(r: &Mat3, params: &AmbientParams) -> Result<(f64, Mat3)> {
    let det = r.determinant();
    if !(det > 0.0) {
        return Err(Error::NonPositiveDeterminant { det });
    }
    let residual = r.transpose() * r - Mat3::identity();
    let potential = 0.25 * params.k_e * residual.norm_squared();
    let gradient = r * residual * params.k_e;
    Ok((potential, gradient))
}

/// Modified rigid-body field `(Ṙ, Ω̇) = (RΩ̂ − k_e R(RᵀR − I), u)`.
pub fn modified_vector_field(state: &RigidState, u: &Vec3, params: &AmbientParams) -> (Mat3, Vec3) {
    let r = &state.r;
    let correction = r * (r.transpose() * r - Mat3::identity()) * params.k_e;
    (r * hat(&state.omega) - correction, *u)
}

/// Flat-array form of [`modified_vector_field`], in the [`RigidState::to_flat`] layout.
pub fn modified_vector_field_flat(x: &[f64], u: &Vec3, params: &AmbientParams) -> [f64; STATE_DIM] {
    let (r_dot, omega_dot) = modified_vector_field(&RigidState::from_flat(x), u, params);
    RigidState::new(r_dot, omega_dot).to_flat()
}

type VectorMap = Box<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
type JacobianMap = Box<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// A constraint map `f` with `M = f⁻¹(0)` and a positive definite weight `S`,
/// defining the potential `Ṽ(x) = ½ f(x)ᵀ S f(x)`.
pub struct ConstraintSpec {
    constraint: VectorMap,
    jacobian: Option<JacobianMap>,
    weight: DMatrix<f64>,
    fd_step: f64,
}

impl ConstraintSpec {
    pub fn new<F>(constraint: F, weight: DMatrix<f64>) -> Result<Self>
    where
        F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        if !weight.is_square() {
            return Err(Error::DimensionMismatch {
                expected: weight.nrows(),
                actual: weight.ncols(),
            });
        }
        let symmetric = (&weight - weight.transpose()).norm() <= 1e-12 * weight.norm().max(1.0);
        if !symmetric || weight.clone().cholesky().is_none() {
            return Err(Error::NotPositiveDefinite { what: "constraint weight" });
        }
        Ok(Self {
            constraint: Box::new(constraint),
            jacobian: None,
            weight,
            fd_step: 1e-6,
        })
    }

    /// Supplies `∂f/∂x`; without it the Jacobian is taken by central differences.
    pub fn with_jacobian<J>(mut self, jacobian: J) -> Self
    where
        J: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.jacobian = Some(Box::new(jacobian));
        self
    }

    pub fn with_fd_step(mut self, h: f64) -> Self {
        self.fd_step = h;
        self
    }

    pub fn dim(&self) -> usize {
        self.weight.nrows()
    }

    fn evaluate(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let f = (self.constraint)(x);
        if f.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: f.len(),
            });
        }
        Ok(f)
    }

    pub fn potential(&self, x: &DVector<f64>) -> Result<f64> {
        let f = self.evaluate(x)?;
        Ok(0.5 * f.dot(&(&self.weight * &f)))
    }

    /// `∇Ṽ(x) = (∂f/∂x)ᵀ S f(x)`.
    pub fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let f = self.evaluate(x)?;
        let jac = match &self.jacobian {
            Some(j) => j(x),
            None => finite_difference_jacobian(
                |p: &[f64]| (self.constraint)(&DVector::from_column_slice(p)).as_slice().to_vec(),
                x.as_slice(),
                self.fd_step,
            ),
        };
        if jac.nrows() != self.dim() || jac.ncols() != x.len() {
            return Err(Error::DimensionMismatch {
                expected: self.dim() * x.len(),
                actual: jac.nrows() * jac.ncols(),
            });
        }
        Ok(jac.transpose() * (&self.weight * f))
    }
}

/// Turns a control field `X(x, u)` into `X(x, u) − ∇Ṽ(x)`.
///
/// The result coincides with `X` on `f⁻¹(0)`.
pub fn make_attractive<X>(
    field: X,
    spec: ConstraintSpec,
) -> impl Fn(&DVector<f64>, &DVector<f64>) -> Result<DVector<f64>>
where
    X: Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64>,
{
    move |x, u| {
        let base = field(x, u);
        let grad = spec.gradient(x)?;
        if base.len() != grad.len() {
            return Err(Error::DimensionMismatch {
                expected: grad.len(),
                actual: base.len(),
            });
        }
        Ok(base - grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::{exp_so3, orthogonality_defect};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(rng: &mut impl Rng, scale: f64) -> Vec3 {
        Vec3::from_fn(|_, _| rng.gen_range(-scale..scale))
    }

    #[test]
    fn gyroscopic_cancellation_examples() {
        let iso = InertiaMatrix::new(Mat3::identity()).unwrap();
        let omega = Vec3::new(0.3, -1.0, 2.0);
        let u = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(cancel_gyroscopic_torque(&iso, &omega, &u), u);

        let body = InertiaMatrix::diagonal(1.0, 2.0, 3.0).unwrap();
        assert_eq!(
            cancel_gyroscopic_torque(&body, &Vec3::zeros(), &u),
            body.matrix() * u
        );
        assert_eq!(
            cancel_gyroscopic_torque(&body, &Vec3::new(1.0, 1.0, 0.0), &Vec3::zeros()),
            Vec3::new(0.0, 0.0, 1.0)
        );
    }

    #[test]
    fn cancellation_reduces_euler_equation_to_double_integrator() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let a = Mat3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
            let inertia = InertiaMatrix::new(a * a.transpose() + Mat3::identity()).unwrap();
            let omega = random_vec(&mut rng, 3.0);
            let u = random_vec(&mut rng, 3.0);
            let tau = cancel_gyroscopic_torque(&inertia, &omega, &u);
            let omega_dot = euler_angular_acceleration(&inertia, &omega, &tau);
            assert!((omega_dot - u).norm() <= 1e-12);
        }
    }

    #[test]
    fn inertia_must_be_positive_definite() {
        assert!(InertiaMatrix::diagonal(1.0, 0.0, 1.0).is_err());
        assert!(InertiaMatrix::diagonal(1.0, -2.0, 1.0).is_err());
        let mut asym = Mat3::identity();
        asym[(0, 1)] = 0.5;
        assert!(InertiaMatrix::new(asym).is_err());
    }

    #[test]
    fn potential_vanishes_on_rotations() {
        let params = AmbientParams::new(1.0).unwrap();
        let r = exp_so3(&Vec3::new(0.4, -1.1, 2.0));
        let (v, g) = manifold_potential_and_gradient(&r, &params).unwrap();
        assert!(v < 1e-30);
        assert!(g.norm() < 1e-14);
    }

    #[test]
    fn potential_at_scaled_identity() {
        let params = AmbientParams::new(1.0).unwrap();
        let (v, g) = manifold_potential_and_gradient(&(Mat3::identity() * 2.0), &params).unwrap();
        assert_eq!(v, 27.0 / 4.0);
        assert_eq!(g, Mat3::identity() * 6.0);
    }

    #[test]
    fn potential_rejects_nonpositive_determinant() {
        let params = AmbientParams::new(1.0).unwrap();
        let reflection = Mat3::from_diagonal(&Vec3::new(-1.0, 1.0, 1.0));
        assert!(matches!(
            manifold_potential_and_gradient(&reflection, &params),
            Err(Error::NonPositiveDeterminant { .. })
        ));
        assert!(manifold_potential_and_gradient(&Mat3::zeros(), &params).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let params = AmbientParams::new(1.7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let r = exp_so3(&random_vec(&mut rng, 2.0)) * rng.gen_range(0.7..1.3)
                + Mat3::from_fn(|_, _| rng.gen_range(-0.1..0.1));
            let (_, grad) = manifold_potential_and_gradient(&r, &params).unwrap();
            let h = 1e-5;
            for i in 0..3 {
                for j in 0..3 {
                    let mut plus = r;
                    let mut minus = r;
                    plus[(i, j)] += h;
                    minus[(i, j)] -= h;
                    let vp = manifold_potential_and_gradient(&plus, &params).unwrap().0;
                    let vm = manifold_potential_and_gradient(&minus, &params).unwrap().0;
                    let fd = (vp - vm) / (2.0 * h);
                    assert!((fd - grad[(i, j)]).abs() <= 1e-6, "entry ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn modified_field_examples() {
        let params = AmbientParams::new(1.0).unwrap();
        let eq = RigidState::new(Mat3::identity(), Vec3::zeros());
        let (r_dot, w_dot) = modified_vector_field(&eq, &Vec3::zeros(), &params);
        assert_eq!(r_dot, Mat3::zeros());
        assert_eq!(w_dot, Vec3::zeros());

        let r = exp_so3(&Vec3::new(1.0, 0.5, -0.2));
        let omega = Vec3::new(0.1, 0.2, 0.3);
        let (r_dot, _) = modified_vector_field(&RigidState::new(r, omega), &Vec3::zeros(), &params);
        assert_abs_diff_eq!(r_dot, r * hat(&omega), epsilon = 1e-15);

        let scaled = RigidState::new(Mat3::identity() * 2.0, Vec3::zeros());
        let (r_dot, _) = modified_vector_field(&scaled, &Vec3::zeros(), &params);
        assert_eq!(r_dot, Mat3::identity() * -6.0);
    }

    #[test]
    fn zero_gain_recovers_kinematics() {
        let params = AmbientParams::new(0.0).unwrap();
        let state = RigidState::new(Mat3::identity() * 1.5, Vec3::new(1.0, 2.0, 3.0));
        let u = Vec3::new(-1.0, 0.0, 4.0);
        let (r_dot, w_dot) = modified_vector_field(&state, &u, &params);
        assert_eq!(r_dot, state.r * hat(&state.omega));
        assert_eq!(w_dot, u);
        assert!(AmbientParams::new(-1.0).is_err());
        assert!(AmbientParams::new(f64::NAN).is_err());
    }

    #[test]
    fn flat_layout_is_row_major_then_omega() {
        let r = Mat3::new(1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0);
        let s = RigidState::new(r, Vec3::new(10.0, 11.0, 12.0));
        let flat = s.to_flat();
        assert_eq!(flat, [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0]);
        assert_eq!(RigidState::from_flat(&flat), s);
    }

    #[test]
    fn make_attractive_scalar_case() {
        let spec = ConstraintSpec::new(|x: &DVector<f64>| x.clone(), DMatrix::identity(1, 1)).unwrap();
        let field = make_attractive(|x: &DVector<f64>, _u: &DVector<f64>| DVector::zeros(x.len()), spec);
        let u = DVector::zeros(0);
        for x in [-2.0, 0.0, 0.5, 3.0] {
            let out = field(&DVector::from_element(1, x), &u).unwrap();
            assert_abs_diff_eq!(out[0], -x, epsilon = 1e-9);
        }
    }

    /// `f(R) = RᵀR − I` in row-major order, on the 12-dimensional rigid state.
    fn orthogonality_constraint(x: &DVector<f64>) -> DVector<f64> {
        let r = from_row_major(&x.as_slice()[..9]);
        DVector::from_row_slice(&to_row_major(&(r.transpose() * r - Mat3::identity())))
    }

    fn orthogonality_jacobian(x: &DVector<f64>) -> DMatrix<f64> {
        // ∂(RᵀR)_{ij}/∂R_{kl} = δ_{jl} R_{ki} + δ_{il} R_{kj}
        let r = from_row_major(&x.as_slice()[..9]);
        let mut jac = DMatrix::zeros(9, STATE_DIM);
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let mut d = 0.0;
                        if j == l {
                            d += r[(k, i)];
                        }
                        if i == l {
                            d += r[(k, j)];
                        }
                        jac[(3 * i + j, 3 * k + l)] = d;
                    }
                }
            }
        }
        jac
    }

    fn unmodified_field(x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let params = AmbientParams::new(0.0).unwrap();
        let u = Vec3::new(u[0], u[1], u[2]);
        DVector::from_row_slice(&modified_vector_field_flat(x.as_slice(), &u, &params))
    }

    #[test]
    fn make_attractive_reproduces_rigid_body_modification() {
        let k_e = 1.3;
        let params = AmbientParams::new(k_e).unwrap();
        let weight = DMatrix::identity(9, 9) * (k_e / 2.0);
        let analytic = make_attractive(
            unmodified_field,
            ConstraintSpec::new(orthogonality_constraint, weight.clone())
                .unwrap()
                .with_jacobian(orthogonality_jacobian),
        );
        let numeric = make_attractive(
            unmodified_field,
            ConstraintSpec::new(orthogonality_constraint, weight).unwrap(),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let r = exp_so3(&random_vec(&mut rng, 3.0)) * rng.gen_range(0.5..1.5)
                + Mat3::from_fn(|_, _| rng.gen_range(-0.2..0.2));
            let state = RigidState::new(r, random_vec(&mut rng, 2.0));
            let u = random_vec(&mut rng, 2.0);
            let expected = modified_vector_field_flat(&state.to_flat(), &u, &params);
            let x = DVector::from_row_slice(&state.to_flat());
            let uu = DVector::from_row_slice(u.as_slice());
            let got = analytic(&x, &uu).unwrap();
            let got_fd = numeric(&x, &uu).unwrap();
            for i in 0..STATE_DIM {
                assert!((got[i] - expected[i]).abs() <= 1e-12, "analytic entry {i}");
                assert!((got_fd[i] - expected[i]).abs() <= 1e-8, "fd entry {i}");
            }
        }
    }

    #[test]
    fn make_attractive_is_identity_on_the_manifold() {
        let weight = DMatrix::identity(9, 9) * 3.0;
        let field = make_attractive(
            unmodified_field,
            ConstraintSpec::new(orthogonality_constraint, weight)
                .unwrap()
                .with_jacobian(orthogonality_jacobian),
        );
        let r = exp_so3(&Vec3::new(-0.3, 2.2, 0.9));
        assert!(orthogonality_defect(&r) < 1e-15);
        let x = DVector::from_row_slice(&RigidState::new(r, Vec3::new(1.0, -1.0, 0.5)).to_flat());
        let u = DVector::from_row_slice(&[0.2, 0.1, -0.4]);
        let out = field(&x, &u).unwrap();
        let base = unmodified_field(&x, &u);
        assert!((out - base).amax() <= 1e-14);
    }

    #[test]
    fn make_attractive_rejects_dimension_mismatch() {
        assert!(ConstraintSpec::new(|x: &DVector<f64>| x.clone(), DMatrix::identity(2, 3)).is_err());
        let not_pd = DMatrix::from_diagonal(&DVector::from_row_slice(&[1.0, -1.0]));
        assert!(ConstraintSpec::new(|x: &DVector<f64>| x.clone(), not_pd).is_err());

        let spec = ConstraintSpec::new(|x: &DVector<f64>| x.clone(), DMatrix::identity(2, 2)).unwrap();
        let field = make_attractive(|x: &DVector<f64>, _u: &DVector<f64>| x.clone(), spec);
        let err = field(&DVector::zeros(3), &DVector::zeros(0)).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 2, actual: 3 });
    }
}
