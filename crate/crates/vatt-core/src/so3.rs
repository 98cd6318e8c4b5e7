//! SO(3) Lie group and so(3) Lie algebra primitives.
//!
//! Rotations are stored as plain 3x3 matrices wrapped in [`RotationMatrix`],
//! which enforces orthonormality and unit determinant on validated
//! construction. The hat map `(.)^x : R^3 -> so(3)` and its inverse `vex`
//! identify the Lie algebra with R^3; the exponential uses the Rodrigues
//! closed form and the logarithm returns the principal branch with dedicated
//! handling near 0 and near pi.

use core::ops::Mul;

use libm::{atan2, cos, sin, sqrt};
use thiserror::Error;

/// 3-vector of `f64` (angular velocities in rad/s, unit directions, biases).
pub type Vector3 = nalgebra::Vector3<f64>;
/// 3x3 matrix of `f64`.
pub type Matrix3 = nalgebra::Matrix3<f64>;

/// Below this angle the exponential/logarithm switch to series expansions to
/// avoid 0/0 in the Rodrigues coefficients.
pub const SMALL_ANGLE: f64 = 1e-6;
/// Above `pi - NEAR_PI` the logarithm recovers the axis from the symmetric
/// part of the rotation, where the skew part ~ sin(theta) loses the axis.
pub const NEAR_PI: f64 = 1e-6;
/// Frobenius-norm tolerance on `R^T R - I` for a valid rotation matrix.
pub const ORTHONORMALITY_TOL: f64 = 1e-9;
/// Tolerance on the symmetric part of a matrix passed to [`vex`].
pub const SKEW_TOL: f64 = 1e-9;

/// Errors from rotation-group operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum So3Error {
    /// [`vex`] received a matrix whose symmetric part is too large.
    #[error("matrix is not skew-symmetric (symmetric part norm {defect:.3e})")]
    NotSkewSymmetric { defect: f64 },
    /// [`project_to_so3`] received a matrix with non-positive determinant.
    #[error("matrix is degenerate (det = {det:.3e})")]
    Degenerate { det: f64 },
    /// A matrix failed the [`RotationMatrix`] invariants.
    #[error("not a rotation matrix (orthonormality defect {defect:.3e}, det {det})")]
    NotARotation { defect: f64, det: f64 },
    /// An operation received a non-finite input.
    #[error("non-finite input")]
    NonFinite,
}

/// An element of SO(3): orthonormal with determinant +1.
///
/// Validated construction ([`RotationMatrix::from_matrix`]) enforces
/// `||R^T R - I||_F <= 1e-9` and `|det R - 1| <= 1e-9`. Operations that
/// produce rotations by construction (the exponential, products of
/// rotations, polar projection) use the unchecked path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Matrix3);

impl RotationMatrix {
    pub fn identity() -> Self {
        RotationMatrix(Matrix3::identity())
    }

    /// Wraps a matrix after checking the rotation invariants.
    pub fn from_matrix(m: Matrix3) -> Result<Self, So3Error> {
        if !m.iter().all(|x| x.is_finite()) {
            return Err(So3Error::NonFinite);
        }
        let defect = (m.transpose() * m - Matrix3::identity()).norm();
        let det = m.determinant();
        if defect > ORTHONORMALITY_TOL || (det - 1.0).abs() > ORTHONORMALITY_TOL {
            return Err(So3Error::NotARotation { defect, det });
        }
        Ok(RotationMatrix(m))
    }

    /// Wraps a matrix that is known to be a rotation.
    pub fn from_matrix_unchecked(m: Matrix3) -> Self {
        RotationMatrix(m)
    }

    pub fn matrix(&self) -> &Matrix3 {
        &self.0
    }

    /// The inverse rotation, `R^T`.
    pub fn transpose(&self) -> Self {
        RotationMatrix(self.0.transpose())
    }

    /// `||R^T R - I||_F`, the group-closure defect.
    pub fn orthonormality_defect(&self) -> f64 {
        (self.0.transpose() * self.0 - Matrix3::identity()).norm()
    }

    /// Applies the rotation to a vector.
    pub fn rotate(&self, v: &Vector3) -> Vector3 {
        self.0 * v
    }
}

impl Mul for RotationMatrix {
    type Output = RotationMatrix;
    fn mul(self, rhs: RotationMatrix) -> RotationMatrix {
        RotationMatrix(self.0 * rhs.0)
    }
}

impl Mul<&RotationMatrix> for &RotationMatrix {
    type Output = RotationMatrix;
    fn mul(self, rhs: &RotationMatrix) -> RotationMatrix {
        RotationMatrix(self.0 * rhs.0)
    }
}

/// The skew-symmetric cross-product matrix `v^x`, with `v^x u = v x u`.
#[inline]
pub fn hat(v: &Vector3) -> Matrix3 {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of the hat map. Errors if the symmetric part of `m` exceeds
/// [`SKEW_TOL`]; the symmetric part is discarded after the check.
pub fn vex(m: &Matrix3) -> Result<Vector3, So3Error> {
    let sym = (m + m.transpose()) * 0.5;
    let defect = sym.norm();
    if defect > SKEW_TOL {
        return Err(So3Error::NotSkewSymmetric { defect });
    }
    Ok(vex_skew_part(m))
}

/// `vex` of the skew part of `m`, without the skewness check. Used where the
/// argument is skew by construction, e.g. `L^T R - R^T L`.
#[inline]
pub fn vex_skew_part(m: &Matrix3) -> Vector3 {
    Vector3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

/// Exponential map so(3) -> SO(3) in Rodrigues closed form:
/// `exp(v^x) = I + sin(t)/t v^x + (1-cos(t))/t^2 (v^x)^2`, `t = ||v||`.
///
/// For `t` below [`SMALL_ANGLE`] the coefficients use their second-order
/// series, which is exact to machine precision there.
pub fn exp_so3(v: &Vector3) -> RotationMatrix {
    let theta2 = v.norm_squared();
    let vx = hat(v);
    let (a, b) = if theta2 < SMALL_ANGLE * SMALL_ANGLE {
        // sin(t)/t = 1 - t^2/6, (1-cos(t))/t^2 = 1/2 - t^2/24
        (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
    } else {
        let theta = sqrt(theta2);
        (sin(theta) / theta, (1.0 - cos(theta)) / theta2)
    };
    RotationMatrix(Matrix3::identity() + a * vx + b * (vx * vx))
}

/// Logarithm map SO(3) -> so(3), principal branch with `||log|| in [0, pi]`.
///
/// The angle comes from `atan2(||skew part||, (tr - 1)/2)`, which stays well
/// conditioned away from pi. Within [`NEAR_PI`] of pi the axis is recovered
/// from the symmetric part `R + R^T`, whose diagonal dominates there.
pub fn log_so3(rot: &RotationMatrix) -> Vector3 {
    let r = rot.matrix();
    let s = vex_skew_part(r); // sin(theta) * axis
    let c = 0.5 * (r.trace() - 1.0); // cos(theta)
    let sin_theta = s.norm();
    let theta = atan2(sin_theta, c);

    if theta < SMALL_ANGLE {
        // theta/sin(theta) = 1 + theta^2/6 + O(theta^4)
        return s * (1.0 + theta * theta / 6.0);
    }
    if theta > core::f64::consts::PI - NEAR_PI {
        // R + R^T = 2 cos(theta) I + 2 (1 - cos(theta)) a a^T
        let b = (r + r.transpose()) * 0.5;
        let one_m_c = 1.0 - c;
        let diag = Vector3::new(
            (b[(0, 0)] - c) / one_m_c,
            (b[(1, 1)] - c) / one_m_c,
            (b[(2, 2)] - c) / one_m_c,
        );
        // Build the axis from the column of aa^T with the largest diagonal.
        let k = diag.imax();
        let ak = sqrt(diag[k].max(0.0));
        let mut axis = Vector3::new(
            (b[(0, k)] - c * ((k == 0) as u8 as f64)) / one_m_c,
            (b[(1, k)] - c * ((k == 1) as u8 as f64)) / one_m_c,
            (b[(2, k)] - c * ((k == 2) as u8 as f64)) / one_m_c,
        ) / ak.max(f64::MIN_POSITIVE);
        axis.normalize_mut();
        // The skew part fixes the sign while it is non-zero; at exactly pi
        // both signs describe the same rotation.
        if s.dot(&axis) < 0.0 {
            axis = -axis;
        }
        return axis * theta;
    }
    s * (theta / sin_theta)
}

/// Principal rotation angle `arccos(clamp((tr Q - 1)/2, -1, 1))` in `[0, pi]`.
///
/// Evaluated as `atan2(||skew part||, (tr - 1)/2)`, which is the same value
/// for a rotation matrix but avoids the `sqrt(ulp)`-level noise of `acos`
/// near zero; a bit-exact attitude match reports an angle at rounding level
/// instead of ~1e-8.
pub fn principal_angle(q: &RotationMatrix) -> f64 {
    let c = 0.5 * (q.matrix().trace() - 1.0);
    let s = vex_skew_part(q.matrix()).norm();
    atan2(s, c.clamp(-1.0, 1.0))
}

/// Nearest rotation to `m` in the Frobenius norm (polar decomposition via
/// SVD). Errors with [`So3Error::Degenerate`] when `det(m) <= 0`.
pub fn project_to_so3(m: &Matrix3) -> Result<RotationMatrix, So3Error> {
    let det = m.determinant();
    if !det.is_finite() || det <= 0.0 {
        return Err(So3Error::Degenerate { det });
    }
    let svd = m.svd(true, true);
    let u = svd.u.expect("svd with u requested");
    let v_t = svd.v_t.expect("svd with v_t requested");
    let mut r = u * v_t;
    // det(m) > 0 already forces det(u v_t) = +1; keep the reflection fix as
    // a guard against rounding on near-singular inputs.
    if r.determinant() < 0.0 {
        let mut u_fix = u;
        u_fix.column_mut(2).neg_mut();
        r = u_fix * v_t;
    }
    Ok(RotationMatrix(r))
}

/// Right Jacobian of SO(3):
/// `J_r(v) = I - (1-cos t)/t^2 v^x + (t - sin t)/t^3 (v^x)^2`, `t = ||v||`,
/// satisfying `d/de exp((v + e d)^x)|_0 = exp(v^x) (J_r(v) d)^x`.
pub fn right_jacobian(v: &Vector3) -> Matrix3 {
    let theta2 = v.norm_squared();
    let vx = hat(v);
    let (a, b) = if theta2 < SMALL_ANGLE * SMALL_ANGLE {
        (0.5 - theta2 / 24.0, 1.0 / 6.0 - theta2 / 120.0)
    } else {
        let theta = sqrt(theta2);
        (
            (1.0 - cos(theta)) / theta2,
            (theta - sin(theta)) / (theta2 * theta),
        )
    };
    Matrix3::identity() - a * vx + b * (vx * vx)
}
