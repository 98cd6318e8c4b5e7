//! Shared fixtures for the unit-test suites.

use std::sync::OnceLock;

use crate::estimator::{EstimatorGains, PhiFunction};
use crate::measurement::{
    choose_weights, BiasVector, DirectionMatrix, MeasurementFrame, WeightMatrix,
};
use crate::rng::SplitMix64;
use crate::so3::{exp_so3, RotationMatrix, Vector3};

/// Nine spread unit directions used across the test suites.
pub(crate) fn nine_directions() -> DirectionMatrix {
    let s2 = 1.0 / 2.0_f64.sqrt();
    let s3 = 1.0 / 3.0_f64.sqrt();
    let cols = [
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [s2, s2, 0.0],
        [0.0, s2, s2],
        [s2, 0.0, s2],
        [s3, s3, s3],
        [s2, -s2, 0.0],
        [0.0, s2, -s2],
    ];
    DirectionMatrix::from_columns(
        &cols
            .iter()
            .map(|c| Vector3::new(c[0], c[1], c[2]))
            .collect::<Vec<_>>(),
    )
}

/// Weights for [`nine_directions`] targeting `eig(K) = (3, 2, 1)`, computed
/// once.
pub(crate) fn reference_weights() -> &'static WeightMatrix {
    static W: OnceLock<WeightMatrix> = OnceLock::new();
    W.get_or_init(|| choose_weights(&nine_directions(), [3.0, 2.0, 1.0]).unwrap())
}

/// Noise-free measurement frame at time `t` for truth `(r, omega)` and gyro
/// bias `beta`: `U^m = R^T E`, `Omega^m = Omega + beta`.
pub(crate) fn noise_free_frame(
    t: f64,
    r: &RotationMatrix,
    omega: &Vector3,
    beta: &BiasVector,
) -> MeasurementFrame {
    let e = nine_directions();
    let u_m = r.matrix().transpose() * &e;
    MeasurementFrame::new(
        t,
        e,
        u_m,
        reference_weights().clone(),
        omega + beta.vector(),
    )
    .unwrap()
}

/// The reference gains: `m = 5`, `D = diag(17.4, 18.85, 20.3)`,
/// `P = 2e3 I`, identity `Phi`.
pub(crate) fn paper_gains(h: f64) -> EstimatorGains {
    EstimatorGains::new(
        5.0,
        crate::so3::Matrix3::from_diagonal(&Vector3::new(17.4, 18.85, 20.3)),
        crate::so3::Matrix3::identity() * 2e3,
        h,
        PhiFunction::identity(),
    )
    .unwrap()
}

pub(crate) fn random_vector(rng: &mut SplitMix64, scale: f64) -> Vector3 {
    Vector3::new(
        rng.uniform(-scale, scale),
        rng.uniform(-scale, scale),
        rng.uniform(-scale, scale),
    )
}

pub(crate) fn random_rotation(rng: &mut SplitMix64) -> RotationMatrix {
    let axis = random_vector(rng, 1.0).normalize();
    let angle = rng.uniform(0.0, core::f64::consts::PI - 0.01);
    exp_so3(&(axis * angle))
}
