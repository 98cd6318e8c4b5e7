//! Error metrics and energy bookkeeping between estimator output and truth.
//!
//! State estimation errors are `Q = R Rhat^T` and `betatilde = beta -
//! betahat`; the angular-velocity error is reported in the residual
//! convention `omega_err = Omega - Omegahat + betatilde`, which coincides
//! with the estimator-internal residual `omega` whenever the gyro noise is
//! zero (substitute `Omega^m = Omega + beta` into `omega = Omega^m -
//! Omegahat - betahat`). The true bias is available here and only here; the
//! estimator itself never sees it.

use thiserror::Error;

use crate::estimator::{error_potential, EstimatorGains, EstimatorState};
use crate::measurement::{BiasVector, MeasurementFrame};
use crate::rigid_body::TruthState;
use crate::so3::{principal_angle, Vector3};

/// Tolerance for matching truth and frame timestamps.
pub const TIMESTAMP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticsError {
    #[error("timestamp mismatch: truth at t = {truth_t}, frame at t = {frame_t}")]
    TimestampMismatch { truth_t: f64, frame_t: f64 },
}

/// One diagnostic row: attitude, velocity and bias errors plus the energy
/// split `V = T_kin + U_pot + 1/2 betatilde^T P betatilde`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSample {
    pub t: f64,
    /// Principal angle of `Q = R Rhat^T` (rad), in `[0, pi]`.
    pub principal_angle: f64,
    pub omega_err: Vector3,
    /// `betatilde = beta - betahat` (rad/s).
    pub beta_err: Vector3,
    /// Total energy in the estimation errors.
    pub v: f64,
    /// Attitude-error potential `Phi(<I - Q, K>)`.
    pub u_pot: f64,
    /// Velocity-error kinetic term `m/2 ||omega_err||^2`.
    pub t_kin: f64,
}

/// Compares an estimator state against the matching truth sample.
pub fn compute_errors(
    truth: &TruthState,
    est: &EstimatorState,
    beta_true: &BiasVector,
    gains: &EstimatorGains,
    frame: &MeasurementFrame,
) -> Result<ErrorSample, DiagnosticsError> {
    if (truth.t - frame.t).abs() > TIMESTAMP_TOL {
        return Err(DiagnosticsError::TimestampMismatch {
            truth_t: truth.t,
            frame_t: frame.t,
        });
    }
    let q = truth.r * est.r_hat.transpose();
    let beta_tilde = beta_true.vector() - est.beta_hat;
    let omega_hat = est.omega_hat(&frame.omega_m);
    let omega_err = truth.omega - omega_hat + beta_tilde;

    let t_kin = 0.5 * gains.m() * omega_err.norm_squared();
    let u_pot = gains.phi().value(error_potential(&q, frame.k_matrix()));
    let bias_quad = 0.5 * beta_tilde.dot(&(gains.p() * beta_tilde));

    Ok(ErrorSample {
        t: truth.t,
        principal_angle: principal_angle(&q),
        omega_err,
        beta_err: beta_tilde,
        v: t_kin + u_pot + bias_quad,
        u_pot,
        t_kin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::discrete_step;
    use crate::rigid_body::{propagate_truth, InertiaMatrix, TorqueProfile};
    use crate::rng::SplitMix64;
    use crate::so3::exp_so3;
    use crate::test_support::{noise_free_frame, paper_gains, random_rotation, random_vector};
    use approx::assert_relative_eq;
    use core::f64::consts::PI;

    #[test]
    fn zero_errors_for_exact_estimate() {
        let mut rng = SplitMix64::new(0xd1a6_0001);
        let r = random_rotation(&mut rng);
        let omega = Vector3::new(0.1, -0.2, 0.3);
        let beta = BiasVector::new(Vector3::new(-0.01, -0.005, 0.02));
        let frame = noise_free_frame(0.0, &r, &omega, &beta);
        let truth = TruthState { t: 0.0, r, omega };
        let est = EstimatorState::from_initial_estimates(
            r,
            omega,
            beta.vector(),
            &frame.omega_m,
        );
        let sample = compute_errors(&truth, &est, &beta, &paper_gains(0.01), &frame).unwrap();
        assert!(sample.principal_angle < 1e-12);
        assert!(sample.omega_err.norm() < 1e-15);
        assert!(sample.beta_err.norm() < 1e-15);
        assert!(sample.v < 1e-24);
    }

    #[test]
    fn initial_principal_angle_is_same_axis_difference() {
        // R0 and Rhat0 share the axis (3, 6, 2)/7 with angles pi/4 and
        // pi/2.5; same-axis rotations compose by angle subtraction, so the
        // initial attitude error is |pi/4 - 2 pi/5| = 3 pi/20.
        let axis = Vector3::new(3.0, 6.0, 2.0) / 7.0;
        let r0 = exp_so3(&(axis * (PI / 4.0)));
        let r_hat0 = exp_so3(&(axis * (PI / 2.5)));
        let q = r0 * r_hat0.transpose();
        let expected = (PI / 4.0 - PI / 2.5).abs();
        assert_relative_eq!(crate::so3::principal_angle(&q), expected, epsilon = 1e-12);
        assert_relative_eq!(expected, 3.0 * PI / 20.0, epsilon = 1e-15);
    }

    #[test]
    fn omega_err_matches_internal_residual_noise_free() {
        // Along a noise-free tumbling run the reported omega_err equals the
        // estimator-internal residual at every step.
        let inertia = InertiaMatrix::diagonal(Vector3::new(2.56, 3.01, 2.98)).unwrap();
        let torque = TorqueProfile::new(0.028, 2.7, -PI / 7.0, 1).unwrap();
        let axis = Vector3::new(3.0, 6.0, 2.0) / 7.0;
        let s0 = TruthState {
            t: 0.0,
            r: exp_so3(&(axis * (PI / 4.0))),
            omega: Vector3::new(-2.1, 1.2, -1.1) * (PI / 60.0),
        };
        let beta = BiasVector::new(Vector3::new(-0.01, -0.005, 0.02));
        let truth = propagate_truth(&s0, &inertia, &torque, 0.01, 2.0);
        let frames: Vec<_> = truth
            .iter()
            .map(|s| noise_free_frame(s.t, &s.r, &s.omega, &beta))
            .collect();
        let gains = paper_gains(0.01);
        let mut est = EstimatorState::from_initial_estimates(
            exp_so3(&(axis * (PI / 2.5))),
            Vector3::new(-0.26, 0.1725, -0.2446),
            Vector3::new(0.0, -0.01, 0.01),
            &frames[0].omega_m,
        );
        for i in 0..200 {
            let sample = compute_errors(&truth[i], &est, &beta, &gains, &frames[i]).unwrap();
            assert!(
                (sample.omega_err - est.omega).norm() <= 1e-12,
                "step {i}: reported {:?} internal {:?}",
                sample.omega_err,
                est.omega
            );
            est = discrete_step(&est, &frames[i], &frames[i + 1], &gains).unwrap();
        }
    }

    #[test]
    fn energy_decomposition_identity() {
        let mut rng = SplitMix64::new(0xd1a6_0002);
        let gains = paper_gains(0.01);
        for _ in 0..200 {
            let r = random_rotation(&mut rng);
            let r_hat = random_rotation(&mut rng);
            let omega = random_vector(&mut rng, 0.4);
            let beta = BiasVector::new(random_vector(&mut rng, 0.05));
            let frame = noise_free_frame(1.0, &r, &omega, &beta);
            let truth = TruthState { t: 1.0, r, omega };
            let est = EstimatorState::from_initial_estimates(
                r_hat,
                random_vector(&mut rng, 0.4),
                random_vector(&mut rng, 0.05),
                &frame.omega_m,
            );
            let s = compute_errors(&truth, &est, &beta, &gains, &frame).unwrap();
            assert!(s.principal_angle >= 0.0 && s.principal_angle <= PI);
            assert!(s.v >= 0.0);
            let bias_quad = 0.5 * s.beta_err.dot(&(gains.p() * s.beta_err));
            assert!(
                (s.v - (s.t_kin + s.u_pot + bias_quad)).abs() <= 1e-12 * (1.0 + s.v),
                "decomposition defect"
            );
        }
    }

    #[test]
    fn timestamp_mismatch_is_rejected() {
        let mut rng = SplitMix64::new(0xd1a6_0003);
        let r = random_rotation(&mut rng);
        let beta = BiasVector::zero();
        let frame = noise_free_frame(1.0, &r, &Vector3::zeros(), &beta);
        let truth = TruthState {
            t: 1.5,
            r,
            omega: Vector3::zeros(),
        };
        let est =
            EstimatorState::from_initial_estimates(r, Vector3::zeros(), Vector3::zeros(), &frame.omega_m);
        assert!(matches!(
            compute_errors(&truth, &est, &beta, &paper_gains(0.01), &frame),
            Err(DiagnosticsError::TimestampMismatch { .. })
        ));
    }
}
