//! Small-matrix algebra for SO(3) embedded in the space of 3×3 real matrices.
//!
//! Every matrix norm in this crate is the Frobenius norm, induced by the
//! entrywise inner product `⟨A, B⟩ = tr(AᵀB)`. Flattening to and from plain
//! arrays is always row-major.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Largest symmetric-part norm accepted by [`vee`].
pub const VEE_TOLERANCE: f64 = 1e-9;

/// Below this angle [`exp_so3`] switches to truncated Taylor coefficients.
const SMALL_ANGLE: f64 = 1e-4;

/// Maps `v` to the skew-symmetric matrix `v̂` with `v̂ w = v × w`.
pub fn hat(v: &Vec3) -> Mat3 {
    Mat3::new(
        0.0, -v.z, v.y, //
        v.z, 0.0, -v.x, //
        -v.y, v.x, 0.0,
    )
}

/// Inverse of [`hat`].
///
/// The input must be skew-symmetric up to [`VEE_TOLERANCE`]; anything else is
/// rejected instead of silently projected. Off-diagonal pairs are averaged, so
/// `vee(hat(v)) == v` holds bit for bit.
pub fn vee(a: &Mat3) -> Result<Vec3> {
    let sym_norm = sym(a).norm();
    if !(sym_norm <= VEE_TOLERANCE) {
        return Err(Error::NotSkew { sym_norm });
    }
    Ok(vee_of_skew_part(a))
}

/// `vee(Skew(a))` for an arbitrary matrix; never fails.
pub fn vee_of_skew_part(a: &Mat3) -> Vec3 {
    Vec3::new(
        0.5 * (a[(2, 1)] - a[(1, 2)]),
        0.5 * (a[(0, 2)] - a[(2, 0)]),
        0.5 * (a[(1, 0)] - a[(0, 1)]),
    )
}

/// Symmetric part `(A + Aᵀ)/2`.
pub fn sym(a: &Mat3) -> Mat3 {
    (a + a.transpose()) * 0.5
}

/// Skew-symmetric part `(A − Aᵀ)/2`.
pub fn skew(a: &Mat3) -> Mat3 {
    (a - a.transpose()) * 0.5
}

/// Splits `a` into `(Sym(a), Skew(a))`.
pub fn sym_skew_split(a: &Mat3) -> (Mat3, Mat3) {
    (sym(a), skew(a))
}

/// Entrywise inner product `Σᵢⱼ AᵢⱼBᵢⱼ = tr(AᵀB)`.
pub fn frobenius_inner(a: &Mat3, b: &Mat3) -> f64 {
    a.dot(b)
}

/// Matrix commutator `[A, B] = AB − BA`.
pub fn commutator(a: &Mat3, b: &Mat3) -> Mat3 {
    a * b - b * a
}

/// Rotation by angle `|v|` about `v/|v|` (Rodrigues formula).
pub fn exp_so3(v: &Vec3) -> Mat3 {
    let theta2 = v.norm_squared();
    let theta = theta2.sqrt();
    let (a, b) = if theta < SMALL_ANGLE {
        (
            1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0,
            0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0,
        )
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    let k = hat(v);
    Mat3::identity() + k * a + k * k * b
}

/// Membership diagnostics for SO(3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationCheck {
    /// `‖RᵀR − I‖`.
    pub defect: f64,
    pub det: f64,
    pub tol: f64,
}

impl RotationCheck {
    pub fn det_sign(&self) -> f64 {
        if self.det > 0.0 {
            1.0
        } else if self.det < 0.0 {
            -1.0
        } else {
            0.0
        }
    }

    /// True when the defect is within tolerance and the determinant is positive.
    pub fn is_rotation(&self) -> bool {
        self.defect <= self.tol && self.det > 0.0
    }
}

/// Reports how far `r` is from SO(3).
pub fn rotation_check(r: &Mat3, tol: f64) -> RotationCheck {
    RotationCheck {
        defect: orthogonality_defect(r),
        det: r.determinant(),
        tol: tol.max(0.0),
    }
}

/// `‖RᵀR − I‖`, the distance-to-constraint used throughout.
pub fn orthogonality_defect(r: &Mat3) -> f64 {
    (r.transpose() * r - Mat3::identity()).norm()
}

/// Fails unless `r` is a rotation to within `tol`.
pub fn ensure_rotation(r: &Mat3, tol: f64) -> Result<()> {
    let check = rotation_check(r, tol);
    if check.is_rotation() {
        Ok(())
    } else {
        Err(Error::NotRotation {
            defect: check.defect,
            det: check.det,
        })
    }
}

pub fn to_row_major(m: &Mat3) -> [f64; 9] {
    [
        m[(0, 0)],
        m[(0, 1)],
        m[(0, 2)],
        m[(1, 0)],
        m[(1, 1)],
        m[(1, 2)],
        m[(2, 0)],
        m[(2, 1)],
        m[(2, 2)],
    ]
}

/// Builds a matrix from the first nine entries of `s`, read row by row.
pub fn from_row_major(s: &[f64]) -> Mat3 {
    Mat3::from_row_slice(&s[..9])
}
