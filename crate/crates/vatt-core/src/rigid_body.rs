//! Ground-truth rigid-body attitude motion.
//!
//! Truth trajectories come from the attitude kinematics `Rdot = R Omega^x`
//! coupled with Euler's equations `J Omegadot = (J Omega) x Omega + phi(t)`
//! under a sinusoidal external torque. The propagator is a Munthe-Kaas
//! 4th-order Runge-Kutta scheme: the angular velocity integrates classically
//! while the attitude advances by a single group exponential of an effective
//! rotation increment, so every emitted sample is a rotation matrix by
//! construction (with a polar re-projection per step against rounding
//! drift).
//!
//! The estimator never sees any of this: no inertia, no torque. Truth exists
//! only to generate measurements and reference errors.

use alloc::vec::Vec;

use libm::sin;
use thiserror::Error;

use crate::so3::{exp_so3, hat, project_to_so3, Matrix3, RotationMatrix, Vector3};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RigidBodyError {
    #[error("inertia matrix is not symmetric positive definite (symmetry defect {defect:.3e}, min eigenvalue {min_eig:.3e})")]
    InertiaNotSpd { defect: f64, min_eig: f64 },
    #[error("non-finite torque parameters")]
    NonFinite,
}

/// Ground-truth state sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthState {
    pub t: f64,
    pub r: RotationMatrix,
    pub omega: Vector3,
}

/// Symmetric positive-definite moment-of-inertia matrix (kg m^2), with its
/// inverse cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InertiaMatrix {
    j: Matrix3,
    j_inv: Matrix3,
}

impl InertiaMatrix {
    pub fn new(j: Matrix3) -> Result<Self, RigidBodyError> {
        let defect = (j - j.transpose()).norm();
        let eigs = (0.5 * (j + j.transpose())).symmetric_eigenvalues();
        let min_eig = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
        if defect > 1e-12 || min_eig <= 0.0 {
            return Err(RigidBodyError::InertiaNotSpd { defect, min_eig });
        }
        let j_inv = j.try_inverse().ok_or(RigidBodyError::InertiaNotSpd {
            defect,
            min_eig,
        })?;
        Ok(InertiaMatrix { j, j_inv })
    }

    pub fn diagonal(principal_moments: Vector3) -> Result<Self, RigidBodyError> {
        Self::new(Matrix3::from_diagonal(&principal_moments))
    }

    pub fn matrix(&self) -> &Matrix3 {
        &self.j
    }

    pub fn inverse(&self) -> &Matrix3 {
        &self.j_inv
    }

    /// Rotational kinetic energy `1/2 Omega^T J Omega`.
    pub fn kinetic_energy(&self, omega: &Vector3) -> f64 {
        0.5 * omega.dot(&(self.j * omega))
    }

    /// Body angular momentum `J Omega`.
    pub fn momentum(&self, omega: &Vector3) -> Vector3 {
        self.j * omega
    }
}

/// Single-axis sinusoidal external torque
/// `phi(t) = amplitude * sin(frequency t + phase) * e_axis` (N m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorqueProfile {
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
    pub axis: usize,
}

impl TorqueProfile {
    pub fn new(
        amplitude: f64,
        frequency: f64,
        phase: f64,
        axis: usize,
    ) -> Result<Self, RigidBodyError> {
        if !(amplitude.is_finite() && frequency.is_finite() && phase.is_finite()) || axis > 2 {
            return Err(RigidBodyError::NonFinite);
        }
        Ok(TorqueProfile {
            amplitude,
            frequency,
            phase,
            axis,
        })
    }

    pub fn zero() -> Self {
        TorqueProfile {
            amplitude: 0.0,
            frequency: 0.0,
            phase: 0.0,
            axis: 0,
        }
    }

    pub fn eval(&self, t: f64) -> Vector3 {
        let mut phi = Vector3::zeros();
        phi[self.axis] = self.amplitude * sin(self.frequency * t + self.phase);
        phi
    }
}

/// Right-hand side of the truth dynamics:
/// `(R Omega^x, J^-1 ((J Omega) x Omega + phi(t)))`.
pub fn dynamics_rhs(
    state: &TruthState,
    inertia: &InertiaMatrix,
    torque: &TorqueProfile,
) -> (Matrix3, Vector3) {
    let r_dot = state.r.matrix() * hat(&state.omega);
    let omega_dot = omega_dot(state.t, &state.omega, inertia, torque);
    (r_dot, omega_dot)
}

#[inline]
fn omega_dot(t: f64, omega: &Vector3, inertia: &InertiaMatrix, torque: &TorqueProfile) -> Vector3 {
    inertia.inverse() * ((inertia.matrix() * omega).cross(omega) + torque.eval(t))
}

/// Inverse right Jacobian applied to `v`, truncated after the second
/// bracket: `J_r(u)^-1 v = v + 1/2 u x v + 1/12 u x (u x v) + O(||u||^4)`.
///
/// For the right-multiplicative ansatz `R(t) = R_i exp(u(t)^x)` the
/// kinematics `Rdot = R Omega^x` pull back to `udot = J_r(u)^-1 Omega`;
/// the truncation error is below 4th-order accuracy for `u = O(h)`.
#[inline]
fn dexpinv(u: &Vector3, v: &Vector3) -> Vector3 {
    let uv = u.cross(v);
    v + 0.5 * uv + u.cross(&uv) / 12.0
}

/// One Munthe-Kaas RK4 step of the coupled (attitude, angular velocity)
/// system. Returns the next state at `t + h`.
pub fn truth_step(
    state: &TruthState,
    inertia: &InertiaMatrix,
    torque: &TorqueProfile,
    h: f64,
) -> TruthState {
    let t = state.t;
    let omega = state.omega;

    let k1_u = omega; // dexpinv(0, omega)
    let k1_w = omega_dot(t, &omega, inertia, torque);

    let u2 = 0.5 * h * k1_u;
    let w2 = omega + 0.5 * h * k1_w;
    let k2_u = dexpinv(&u2, &w2);
    let k2_w = omega_dot(t + 0.5 * h, &w2, inertia, torque);

    let u3 = 0.5 * h * k2_u;
    let w3 = omega + 0.5 * h * k2_w;
    let k3_u = dexpinv(&u3, &w3);
    let k3_w = omega_dot(t + 0.5 * h, &w3, inertia, torque);

    let u4 = h * k3_u;
    let w4 = omega + h * k3_w;
    let k4_u = dexpinv(&u4, &w4);
    let k4_w = omega_dot(t + h, &w4, inertia, torque);

    // Effective rotation increment h * Omega_eff.
    let u_next = (h / 6.0) * (k1_u + 2.0 * k2_u + 2.0 * k3_u + k4_u);
    let r_next = state.r * exp_so3(&u_next);
    // Drift repair; a no-op up to rounding for an orthonormal input.
    let r_next = project_to_so3(r_next.matrix()).expect("group update keeps det positive");

    TruthState {
        t: t + h,
        r: r_next,
        omega: omega + (h / 6.0) * (k1_w + 2.0 * k2_w + 2.0 * k3_w + k4_w),
    }
}

/// Propagates the truth from `s0` for `duration` seconds at fixed step `h`,
/// emitting every sample including the initial one (`n + 1` samples for
/// `n = round(duration / h)` steps).
pub fn propagate_truth(
    s0: &TruthState,
    inertia: &InertiaMatrix,
    torque: &TorqueProfile,
    h: f64,
    duration: f64,
) -> Vec<TruthState> {
    assert!(h > 0.0 && duration >= h, "require h > 0 and duration >= h");
    let steps = libm::round(duration / h) as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let mut s = *s0;
    out.push(s);
    for _ in 0..steps {
        s = truth_step(&s, inertia, torque, h);
        out.push(s);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::{exp_so3, principal_angle};
    use approx::assert_relative_eq;
    use core::f64::consts::PI;

    fn paper_inertia() -> InertiaMatrix {
        InertiaMatrix::diagonal(Vector3::new(2.56, 3.01, 2.98)).unwrap()
    }

    fn paper_torque() -> TorqueProfile {
        TorqueProfile::new(0.028, 2.7, -PI / 7.0, 1).unwrap()
    }

    fn paper_initial() -> TruthState {
        let axis = Vector3::new(3.0, 6.0, 2.0) / 7.0;
        TruthState {
            t: 0.0,
            r: exp_so3(&(axis * (PI / 4.0))),
            omega: Vector3::new(-2.1, 1.2, -1.1) * (PI / 60.0),
        }
    }

    #[test]
    fn equilibrium_has_zero_derivatives() {
        let s = TruthState {
            t: 0.0,
            r: RotationMatrix::identity(),
            omega: Vector3::zeros(),
        };
        let (r_dot, w_dot) = dynamics_rhs(&s, &paper_inertia(), &TorqueProfile::zero());
        assert_eq!(r_dot, Matrix3::zeros());
        assert_eq!(w_dot, Vector3::zeros());
    }

    #[test]
    fn spherical_body_coasts() {
        let j = InertiaMatrix::new(Matrix3::identity()).unwrap();
        let s = TruthState {
            t: 0.0,
            r: RotationMatrix::identity(),
            omega: Vector3::new(0.4, -0.2, 0.9),
        };
        let (_, w_dot) = dynamics_rhs(&s, &j, &TorqueProfile::zero());
        assert!(w_dot.norm() < 1e-16);
    }

    #[test]
    fn constant_omega_matches_analytic_rotation() {
        let j = InertiaMatrix::new(Matrix3::identity()).unwrap();
        let omega = Vector3::new(0.3, -0.5, 0.2);
        let s0 = TruthState {
            t: 0.0,
            r: RotationMatrix::identity(),
            omega,
        };
        let traj = propagate_truth(&s0, &j, &TorqueProfile::zero(), 1e-3, 1.0);
        let terminal = traj.last().unwrap();
        let expected = exp_so3(&omega);
        let err = principal_angle(&(terminal.r.transpose() * expected));
        assert!(err <= 1e-8, "attitude error {err}");
        assert_relative_eq!(terminal.omega, omega, epsilon = 1e-15);
    }

    #[test]
    fn torque_free_conservation_over_40s() {
        // Kinetic energy and momentum magnitude hold to 1e-8 relative at
        // h = 1e-3 over the full 40 s horizon.
        let j = paper_inertia();
        let s0 = paper_initial();
        let e0 = j.kinetic_energy(&s0.omega);
        let m0 = j.momentum(&s0.omega).norm();
        let traj = propagate_truth(&s0, &j, &TorqueProfile::zero(), 1e-3, 40.0);
        for s in traj.iter().step_by(100) {
            assert!((j.kinetic_energy(&s.omega) - e0).abs() / e0 <= 1e-8);
            assert!((j.momentum(&s.omega).norm() - m0).abs() / m0 <= 1e-8);
        }
        let terminal = traj.last().unwrap();
        assert!((j.kinetic_energy(&terminal.omega) - e0).abs() / e0 <= 1e-8);
    }

    #[test]
    fn reference_scenario_keeps_orthonormality() {
        let traj = propagate_truth(&paper_initial(), &paper_inertia(), &paper_torque(), 0.01, 40.0);
        assert_eq!(traj.len(), 4001);
        for s in &traj {
            assert!(s.r.orthonormality_defect() <= 1e-9);
        }
    }

    #[test]
    fn self_convergence_is_fourth_order() {
        // Terminal-state differences between successive step halvings shrink
        // by ~2^4; the observed ratio must land in [8, 32]. A fast tumble
        // keeps the h^4 signal far above rounding noise.
        let j = paper_inertia();
        let torque = TorqueProfile::new(1.0, 2.7, -PI / 7.0, 1).unwrap();
        let s0 = TruthState {
            omega: Vector3::new(1.3, -0.8, 1.7),
            ..paper_initial()
        };
        let horizon = 2.0;
        let term = |h: f64| {
            let traj = propagate_truth(&s0, &j, &torque, h, horizon);
            *traj.last().unwrap()
        };
        let t1 = term(0.04);
        let t2 = term(0.02);
        let t3 = term(0.01);
        let dist = |a: &TruthState, b: &TruthState| {
            principal_angle(&(a.r.transpose() * b.r)) + (a.omega - b.omega).norm()
        };
        let d12 = dist(&t1, &t2);
        let d23 = dist(&t2, &t3);
        let ratio = d12 / d23;
        assert!(
            (8.0..=32.0).contains(&ratio),
            "convergence ratio {ratio} (d12 {d12:.3e}, d23 {d23:.3e})"
        );
        // and for the angular-velocity component alone
        let omega_ratio = (t1.omega - t2.omega).norm() / (t2.omega - t3.omega).norm();
        assert!(
            (8.0..=32.0).contains(&omega_ratio),
            "omega convergence ratio {omega_ratio}"
        );
    }

    #[test]
    fn inertia_validation() {
        assert!(InertiaMatrix::diagonal(Vector3::new(1.0, 2.0, -0.5)).is_err());
        let mut asym = Matrix3::identity();
        asym[(0, 1)] = 1e-6;
        assert!(InertiaMatrix::new(asym).is_err());
    }
}
