//! Variational attitude and gyro-bias estimation on SO(3).
//!
//! The estimator fuses body-frame measurements of known inertial directions
//! with biased rate-gyro readings. It is derived from the Lagrange-d'Alembert
//! principle applied to a Lagrangian built from the measurement residuals
//! (a Wahba-style attitude cost plus a kinetic term in the angular-velocity
//! residual) with dissipation linear in that residual. The discrete-time form
//! is a first-order Lie group variational integrator whose angular-velocity
//! update is implicit and solved by Newton-Raphson.
//!
//! The crate is `no_std` compatible (`alloc` required); all floating-point
//! transcendentals go through `libm` so results are identical with and
//! without `std`.
//!
//! Modules map one-to-one onto the moving parts of the problem:
//!
//! * [`so3`] — rotation-group primitives: hat/vex, exponential/logarithm,
//!   principal angle, polar projection.
//! * [`measurement`] — direction and gyro measurement synthesis, weight
//!   selection, and the Wahba-gradient quantities `L`, `K`, `S_L`.
//! * [`rigid_body`] — ground-truth rigid-body dynamics (Euler equations with
//!   external torque) and a 4th-order Lie-group propagator.
//! * [`estimator`] — the continuous filter, its discrete variational
//!   integrator, and the Lyapunov/energy functions.
//! * [`diagnostics`] — truth-vs-estimate error metrics and energy
//!   bookkeeping.

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod diagnostics;
pub mod estimator;
pub mod measurement;
pub mod rigid_body;
pub mod rng;
pub mod so3;

#[cfg(test)]
pub(crate) mod test_support;

pub use so3::{Matrix3, RotationMatrix, Vector3};
