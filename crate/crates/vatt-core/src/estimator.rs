//! The variational attitude and bias estimator.
//!
//! Continuous-time filter:
//!
//! ```text
//! Rhatdot = Rhat (Omega^m - omega - betahat)^x
//! m omegadot = -m Omegahat x omega + Phi'(U0) S_L(Rhat) - D omega
//! betahatdot = Phi'(U0) P^-1 S_L(Rhat)
//! ```
//!
//! with `omega = Omega^m - Omegahat - betahat` the angular-velocity
//! measurement residual and `U0` the Wahba potential. The discrete-time
//! estimator is the first-order Lie group variational integrator
//!
//! ```text
//! Rhat_{i+1}  = Rhat_i exp(h (Omega_i^m - omega_i - betahat_i)^x)
//! betahat_{i+1} = betahat_i + h Phi'(U0_i) P^-1 S_{L_i}(Rhat_i)
//! m omega_{i+1} = exp(-h Omegahat_{i+1}^x) { (m I - h D) omega_i
//!                   + h Phi'(U0_{i+1}) S_{L_{i+1}}(Rhat_{i+1}) }
//! ```
//!
//! where `Omegahat_{i+1} = Omega_{i+1}^m - omega_{i+1} - betahat_{i+1}`
//! makes the velocity update implicit; it is solved by Newton-Raphson with
//! an analytic Jacobian built from the right Jacobian of SO(3).
//!
//! The total energy (Lyapunov function) `V = m/2 omega^T omega + Phi(U0)
//! + 1/2 (beta - betahat)^T P (beta - betahat)` decays along trajectories:
//! `Vdot = -omega^T D omega` in the noise-free case.

use libm::sqrt;
use thiserror::Error;

use crate::measurement::{BiasVector, MeasurementFrame};
use crate::so3::{
    exp_so3, hat, project_to_so3, right_jacobian, Matrix3, RotationMatrix, Vector3,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error("Newton-Raphson did not converge: residual {residual:.3e} after {iterations} iterations")]
    NewtonDivergence { residual: f64, iterations: usize },
    #[error("invalid gains: {reason}")]
    InvalidGains { reason: &'static str },
}

/// Scalar reshaping of the attitude cost: `Phi` must vanish at zero with
/// `Phi' > 0` on `[0, inf)`. The default is the identity.
#[derive(Debug, Clone, Copy)]
pub struct PhiFunction {
    value: fn(f64) -> f64,
    derivative: fn(f64) -> f64,
}

impl PhiFunction {
    /// `Phi(x) = x`, the configuration used throughout the reference
    /// experiment.
    pub fn identity() -> Self {
        PhiFunction {
            value: |x| x,
            derivative: |_| 1.0,
        }
    }

    /// Validating constructor; spot-checks `Phi(0) = 0` and `Phi' > 0` on a
    /// grid over `[0, 10]`.
    pub fn new(value: fn(f64) -> f64, derivative: fn(f64) -> f64) -> Result<Self, EstimatorError> {
        if value(0.0).abs() > 1e-12 {
            return Err(EstimatorError::InvalidGains {
                reason: "Phi(0) must be 0",
            });
        }
        for i in 0..=40 {
            let x = 0.25 * i as f64;
            let d = derivative(x);
            if !d.is_finite() || d <= 0.0 || !value(x).is_finite() {
                return Err(EstimatorError::InvalidGains {
                    reason: "Phi' must be positive on [0, 10]",
                });
            }
        }
        Ok(PhiFunction { value, derivative })
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        (self.derivative)(x)
    }
}

/// How the Newton solver obtains the residual Jacobian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JacobianMode {
    /// Closed form via the right Jacobian of SO(3).
    #[default]
    Analytic,
    /// Central finite differences of the residual (fallback / cross-check).
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Convergence threshold on the residual norm.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub jacobian: JacobianMode,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tolerance: 1e-12,
            max_iterations: 100,
            jacobian: JacobianMode::Analytic,
        }
    }
}

/// Validated filter gains.
///
/// Construction enforces `m > 0`, symmetric positive-definite `D` and `P`,
/// and positive definiteness of `m I - h D`, without which the discrete
/// velocity update has a sign-indefinite effective inertia. `P^-1` is
/// computed once here (elementwise when `P` is diagonal).
#[derive(Debug, Clone)]
pub struct EstimatorGains {
    m: f64,
    d: Matrix3,
    p: Matrix3,
    p_inv: Matrix3,
    h: f64,
    phi: PhiFunction,
    newton: NewtonOptions,
}

impl EstimatorGains {
    pub fn new(
        m: f64,
        d: Matrix3,
        p: Matrix3,
        h: f64,
        phi: PhiFunction,
    ) -> Result<Self, EstimatorError> {
        if !m.is_finite() || m <= 0.0 {
            return Err(EstimatorError::InvalidGains {
                reason: "m must be a positive scalar",
            });
        }
        if !h.is_finite() || h < 0.0 {
            return Err(EstimatorError::InvalidGains {
                reason: "h must be finite and non-negative",
            });
        }
        check_spd(&d, "D must be symmetric positive definite")?;
        check_spd(&p, "P must be symmetric positive definite")?;
        let guard = m * Matrix3::identity() - h * d;
        check_spd(&guard, "m I - h D must be positive definite")?;

        let p_inv = invert_spd(&p).ok_or(EstimatorError::InvalidGains {
            reason: "P is numerically singular",
        })?;
        Ok(EstimatorGains {
            m,
            d,
            p,
            p_inv,
            h,
            phi,
            newton: NewtonOptions::default(),
        })
    }

    pub fn with_newton(mut self, newton: NewtonOptions) -> Self {
        self.newton = newton;
        self
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn d(&self) -> &Matrix3 {
        &self.d
    }

    pub fn p(&self) -> &Matrix3 {
        &self.p
    }

    pub fn p_inv(&self) -> &Matrix3 {
        &self.p_inv
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn phi(&self) -> &PhiFunction {
        &self.phi
    }

    pub fn newton(&self) -> &NewtonOptions {
        &self.newton
    }
}

fn check_spd(m: &Matrix3, reason: &'static str) -> Result<(), EstimatorError> {
    let defect = (m - m.transpose()).norm();
    if defect > 1e-9 * (1.0 + m.norm()) {
        return Err(EstimatorError::InvalidGains { reason });
    }
    let eigs = (0.5 * (m + m.transpose())).symmetric_eigenvalues();
    if !eigs.iter().all(|&x| x > 0.0 && x.is_finite()) {
        return Err(EstimatorError::InvalidGains { reason });
    }
    Ok(())
}

fn invert_spd(p: &Matrix3) -> Option<Matrix3> {
    let off_diagonal: f64 = (0..3)
        .flat_map(|i| (0..3).filter(move |&j| j != i).map(move |j| p[(i, j)].abs()))
        .sum();
    if off_diagonal == 0.0 {
        let mut inv = Matrix3::zeros();
        for i in 0..3 {
            if p[(i, i)] == 0.0 {
                return None;
            }
            inv[(i, i)] = 1.0 / p[(i, i)];
        }
        Some(inv)
    } else {
        p.try_inverse()
    }
}

/// Filter state `(Rhat, omega, betahat)`.
///
/// The angular velocity estimate is derived, never stored:
/// `Omegahat = Omega^m - omega - betahat`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorState {
    pub r_hat: RotationMatrix,
    /// Angular-velocity measurement residual (rad/s).
    pub omega: Vector3,
    /// Gyro-bias estimate (rad/s).
    pub beta_hat: Vector3,
}

impl EstimatorState {
    /// Builds the initial state from the configured estimates: the residual
    /// starts at `omega_0 = Omega_0^m - Omegahat_0 - betahat_0`.
    pub fn from_initial_estimates(
        r_hat0: RotationMatrix,
        omega_hat0: Vector3,
        beta_hat0: Vector3,
        omega_m0: &Vector3,
    ) -> Self {
        EstimatorState {
            r_hat: r_hat0,
            omega: omega_m0 - omega_hat0 - beta_hat0,
            beta_hat: beta_hat0,
        }
    }

    /// `Omegahat = Omega^m - omega - betahat` for the given gyro reading.
    pub fn omega_hat(&self, omega_m: &Vector3) -> Vector3 {
        omega_m - self.omega - self.beta_hat
    }
}

/// Wahba potential `U0(Rhat, U^m) = 1/2 <E - Rhat U^m, (E - Rhat U^m) W>`
/// with `<A, B> = tr(A^T B)`. Non-negative by positive definiteness of `W`.
pub fn potential_u0(r_hat: &RotationMatrix, frame: &MeasurementFrame) -> f64 {
    potential_u0_raw(r_hat.matrix(), frame)
}

fn potential_u0_raw(r_hat: &Matrix3, frame: &MeasurementFrame) -> f64 {
    let diff = &frame.e - r_hat * &frame.u_m;
    let dw = &diff * &frame.w;
    0.5 * diff.component_mul(&dw).sum()
}

fn sl_raw(r_hat: &Matrix3, l: &Matrix3) -> Vector3 {
    crate::so3::vex_skew_part(&(l.transpose() * r_hat - r_hat.transpose() * l))
}

/// Error-coordinate potential `<I - Q, K> = tr((I - Q)^T K)`; equals `U0` in
/// the noise-free case for `Q = R Rhat^T`.
pub fn error_potential(q: &RotationMatrix, k: &Matrix3) -> f64 {
    ((Matrix3::identity() - q.matrix()).transpose() * k).trace()
}

/// Time derivatives of the continuous filter at `state` under `frame`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousDerivative {
    /// `Rhatdot = Rhat Omegahat^x` (tangent matrix at `Rhat`).
    pub r_hat_dot: Matrix3,
    pub omega_dot: Vector3,
    pub beta_hat_dot: Vector3,
}

/// Right-hand side of the continuous filter equations.
pub fn continuous_rhs(
    state: &EstimatorState,
    frame: &MeasurementFrame,
    gains: &EstimatorGains,
) -> ContinuousDerivative {
    let (r_hat_dot, omega_dot, beta_hat_dot) = continuous_rhs_raw(
        state.r_hat.matrix(),
        &state.omega,
        &state.beta_hat,
        frame,
        gains,
    );
    ContinuousDerivative {
        r_hat_dot,
        omega_dot,
        beta_hat_dot,
    }
}

fn continuous_rhs_raw(
    r_hat: &Matrix3,
    omega: &Vector3,
    beta_hat: &Vector3,
    frame: &MeasurementFrame,
    gains: &EstimatorGains,
) -> (Matrix3, Vector3, Vector3) {
    let omega_hat = frame.omega_m - omega - beta_hat;
    let phi_prime = gains.phi.derivative(potential_u0_raw(r_hat, frame));
    let sl = sl_raw(r_hat, frame.l_matrix());

    let r_hat_dot = r_hat * hat(&omega_hat);
    let omega_dot =
        (-gains.m * omega_hat.cross(omega) + phi_prime * sl - gains.d * omega) / gains.m;
    let beta_hat_dot = phi_prime * (gains.p_inv * sl);
    (r_hat_dot, omega_dot, beta_hat_dot)
}

/// One classical RK4 step of the continuous filter, used as the
/// cross-validation oracle for the discrete integrator. The three frames
/// sample the measurements at `t`, `t + h/2` and `t + h`; the attitude is
/// integrated in the matrix embedding and polar-projected at the end of the
/// step.
pub fn rk4_filter_step(
    state: &EstimatorState,
    frame_start: &MeasurementFrame,
    frame_mid: &MeasurementFrame,
    frame_end: &MeasurementFrame,
    gains: &EstimatorGains,
) -> EstimatorState {
    let h = gains.h;
    let (r0, w0, b0) = (*state.r_hat.matrix(), state.omega, state.beta_hat);

    let k1 = continuous_rhs_raw(&r0, &w0, &b0, frame_start, gains);
    let k2 = continuous_rhs_raw(
        &(r0 + 0.5 * h * k1.0),
        &(w0 + 0.5 * h * k1.1),
        &(b0 + 0.5 * h * k1.2),
        frame_mid,
        gains,
    );
    let k3 = continuous_rhs_raw(
        &(r0 + 0.5 * h * k2.0),
        &(w0 + 0.5 * h * k2.1),
        &(b0 + 0.5 * h * k2.2),
        frame_mid,
        gains,
    );
    let k4 = continuous_rhs_raw(
        &(r0 + h * k3.0),
        &(w0 + h * k3.1),
        &(b0 + h * k3.2),
        frame_end,
        gains,
    );

    let r_next = r0 + (h / 6.0) * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
    EstimatorState {
        r_hat: project_to_so3(&r_next).expect("RK4 attitude update stays near SO(3)"),
        omega: w0 + (h / 6.0) * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        beta_hat: b0 + (h / 6.0) * (k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2),
    }
}

/// Solves the implicit velocity update
/// `m x = exp(-h (Omega^m - x - betahat)^x) c` for `x` by Newton-Raphson.
///
/// The residual is `F(x) = m x - exp(a(x)^x) c` with
/// `a(x) = -h (Omega^m - x - betahat)`; its analytic Jacobian is
/// `J_F = m I + h exp(a^x) c^x J_r(a)` using `d(exp(a^x) c) =
/// -exp(a^x) c^x J_r(a) da`. Returns the root and the iteration count.
pub fn newton_solve_omega(
    c: &Vector3,
    omega_guess: &Vector3,
    omega_m_next: &Vector3,
    beta_hat_next: &Vector3,
    gains: &EstimatorGains,
) -> Result<(Vector3, usize), EstimatorError> {
    let m = gains.m;
    let h = gains.h;
    let opts = gains.newton;

    let residual = |x: &Vector3| -> Vector3 {
        let a = -h * (omega_m_next - x - beta_hat_next);
        m * x - exp_so3(&a).matrix() * c
    };

    let mut x = *omega_guess;
    let mut f = residual(&x);
    let mut iterations = 0;
    while f.norm() > opts.tolerance {
        if iterations >= opts.max_iterations {
            return Err(EstimatorError::NewtonDivergence {
                residual: f.norm(),
                iterations,
            });
        }
        let jac = match opts.jacobian {
            JacobianMode::Analytic => {
                let a = -h * (omega_m_next - x - beta_hat_next);
                m * Matrix3::identity()
                    + h * (exp_so3(&a).matrix() * hat(c) * right_jacobian(&a))
            }
            JacobianMode::FiniteDifference => {
                let eps = 1e-7;
                let mut jac = Matrix3::zeros();
                for k in 0..3 {
                    let mut dx = Vector3::zeros();
                    dx[k] = eps;
                    let df = (residual(&(x + dx)) - residual(&(x - dx))) / (2.0 * eps);
                    jac.set_column(k, &df);
                }
                jac
            }
        };
        let step = jac.lu().solve(&f).ok_or(EstimatorError::NewtonDivergence {
            residual: f.norm(),
            iterations,
        })?;
        x -= step;
        f = residual(&x);
        iterations += 1;
    }
    Ok((x, iterations))
}

/// One step of the discrete variational estimator, consuming the frames at
/// steps `i` and `i + 1`. Errors only if the implicit velocity update fails
/// to converge, which signals a step-size/gain misconfiguration.
pub fn discrete_step(
    state: &EstimatorState,
    frame_i: &MeasurementFrame,
    frame_ip1: &MeasurementFrame,
    gains: &EstimatorGains,
) -> Result<EstimatorState, EstimatorError> {
    discrete_step_detailed(state, frame_i, frame_ip1, gains).map(|(s, _)| s)
}

/// [`discrete_step`] also reporting the Newton iteration count.
pub fn discrete_step_detailed(
    state: &EstimatorState,
    frame_i: &MeasurementFrame,
    frame_ip1: &MeasurementFrame,
    gains: &EstimatorGains,
) -> Result<(EstimatorState, usize), EstimatorError> {
    let h = gains.h;
    debug_assert!(
        (frame_ip1.t - frame_i.t - h).abs() <= 1e-9 * (1.0 + h),
        "frames must be one step h apart"
    );

    // Attitude update: Rhat_{i+1} = Rhat_i exp(h Omegahat_i^x).
    let omega_hat_i = state.omega_hat(&frame_i.omega_m);
    let r_next = state.r_hat * exp_so3(&(h * omega_hat_i));

    // Bias update from the frame at step i.
    let phi_prime_i = gains.phi.derivative(potential_u0(&state.r_hat, frame_i));
    let sl_i = sl_raw(state.r_hat.matrix(), frame_i.l_matrix());
    let beta_next = state.beta_hat + h * phi_prime_i * (gains.p_inv * sl_i);

    // Implicit velocity update from the frame at step i + 1.
    let phi_prime_next = gains.phi.derivative(potential_u0(&r_next, frame_ip1));
    let sl_next = sl_raw(r_next.matrix(), frame_ip1.l_matrix());
    let c = (gains.m * Matrix3::identity() - h * gains.d) * state.omega
        + h * phi_prime_next * sl_next;
    let (omega_next, iterations) =
        newton_solve_omega(&c, &state.omega, &frame_ip1.omega_m, &beta_next, gains)?;

    Ok((
        EstimatorState {
            r_hat: r_next,
            omega: omega_next,
            beta_hat: beta_next,
        },
        iterations,
    ))
}

/// Lyapunov function in measurement form:
/// `V = m/2 omega^T omega + Phi(U0(Rhat, U^m)) + 1/2 (beta - betahat)^T P
/// (beta - betahat)`.
pub fn lyapunov_v_measurement(
    state: &EstimatorState,
    frame: &MeasurementFrame,
    gains: &EstimatorGains,
    beta_true: &BiasVector,
) -> f64 {
    let beta_tilde = beta_true.vector() - state.beta_hat;
    0.5 * gains.m * state.omega.norm_squared()
        + gains.phi.value(potential_u0(&state.r_hat, frame))
        + 0.5 * beta_tilde.dot(&(gains.p * beta_tilde))
}

/// Lyapunov function in error form:
/// `V = m/2 omega^T omega + Phi(<I - Q, K>) + 1/2 betatilde^T P betatilde`.
pub fn lyapunov_v_error(
    q: &RotationMatrix,
    omega_err: &Vector3,
    beta_tilde: &Vector3,
    k: &Matrix3,
    gains: &EstimatorGains,
) -> f64 {
    0.5 * gains.m * omega_err.norm_squared()
        + gains.phi.value(error_potential(q, k))
        + 0.5 * beta_tilde.dot(&(gains.p * beta_tilde))
}

/// Residual norm of the implicit velocity equation at `x`; exposed for
/// solver audits.
pub fn velocity_update_residual(
    x: &Vector3,
    c: &Vector3,
    omega_m_next: &Vector3,
    beta_hat_next: &Vector3,
    gains: &EstimatorGains,
) -> f64 {
    let a = -gains.h * (omega_m_next - x - beta_hat_next);
    sqrt((gains.m * x - exp_so3(&a).matrix() * c).norm_squared())
}
