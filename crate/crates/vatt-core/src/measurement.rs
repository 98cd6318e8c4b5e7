//! Measurement model: inertial/body direction matrices, sensor-noise
//! synthesis, and the Wahba-gradient quantities.
//!
//! `k >= 2` known inertial directions are stacked as columns of `E`; the
//! corresponding body-frame measurements are `U^m = R^T E + N(t)` with `N`
//! a bounded deterministic noise matrix. When only two directions are
//! measured, both matrices are augmented with the cross product of their
//! columns (noise enters before augmentation). Gyro readings are
//! `Omega^m = Omega + w(t) + beta` with sinusoidal noise `w` and a constant
//! bias `beta`.
//!
//! The attitude-error potential is driven through `L = E W (U^m)^T` and
//! `S_L(Rhat) = vex(L^T Rhat - Rhat^T L)`; the weight matrix `W` is chosen
//! so that `K = E W E^T` is positive definite with distinct eigenvalues.

use alloc::vec;
use alloc::vec::Vec;

use libm::{cos, sin, sqrt};
use nalgebra::{DMatrix, Matrix3xX};
use thiserror::Error;

use crate::rng::SplitMix64;
use crate::so3::{vex_skew_part, Matrix3, RotationMatrix, Vector3};

/// 3-row matrix with a run-time number of direction columns.
pub type DirectionMatrix = Matrix3xX<f64>;
/// Square weight matrix sized to the active direction count.
pub type WeightMatrix = DMatrix<f64>;

pub const DEG: f64 = core::f64::consts::PI / 180.0;

/// Worst-case per-direction noise norm, `2.4deg` (coarse sun sensors and
/// magnetometers).
pub const DIRECTION_NOISE_CAP: f64 = 2.4 * DEG;
/// Worst-case gyro noise norm, `0.97deg/s` (coarse rate gyro).
pub const GYRO_NOISE_CAP: f64 = 0.97 * DEG;
/// Per-column amplitude split across the 1/10/100 Hz direction sinusoids.
pub const DIRECTION_AMPLITUDES: [f64; 3] = [1.2 * DEG, 0.8 * DEG, 0.4 * DEG];
pub const DIRECTION_FREQUENCIES_HZ: [f64; 3] = [1.0, 10.0, 100.0];
/// Amplitude split across the 10/200 Hz gyro sinusoids.
pub const GYRO_AMPLITUDES: [f64; 2] = [0.6 * DEG, 0.37 * DEG];
pub const GYRO_FREQUENCIES_HZ: [f64; 2] = [10.0, 200.0];
/// Default phases spread across the sinusoids of one channel.
pub const DEFAULT_PHASES: [f64; 3] = [
    0.0,
    2.0 * core::f64::consts::FRAC_PI_3,
    4.0 * core::f64::consts::FRAC_PI_3,
];

/// Minimum angular separation between the two directions of an augmented
/// pair.
pub const MIN_DIRECTION_SEPARATION: f64 = 1e-3;
/// Minimum gap between eigenvalues of `K = E W E^T`.
pub const DEFAULT_EIG_GAP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasurementError {
    #[error("direction columns are nearly parallel (sin of separation {sin_sep:.3e})")]
    DegenerateDirections { sin_sep: f64 },
    #[error("E is not full row rank (eigenvalue ratio {ratio:.3e})")]
    RankDeficient { ratio: f64 },
    #[error("eigenvalues of K are not distinct to gap {gap:.3e} (min separation {min_sep:.3e})")]
    EigensNotDistinct { gap: f64, min_sep: f64 },
    #[error("weight matrix is not symmetric positive definite")]
    WeightNotPositiveDefinite,
    #[error("noise amplitude budget exceeded: channel bound {bound:.6} > cap {cap:.6}")]
    AmplitudeBudget { bound: f64, cap: f64 },
    #[error("negative noise amplitude {amplitude}")]
    NegativeAmplitude { amplitude: f64 },
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: &'static str },
    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },
}

/// One sinusoidal noise component: `amplitude * sin(2 pi f t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sinusoid {
    pub frequency_hz: f64,
    pub phase_rad: f64,
    pub amplitude: f64,
}

impl Sinusoid {
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        self.amplitude * sin(2.0 * core::f64::consts::PI * self.frequency_hz * t + self.phase_rad)
    }
}

/// Deterministic sensor-noise description.
///
/// Direction noise is stored per matrix entry: `direction[col][row]` holds
/// the sinusoids added to `U^m[(row, col)]`. Gyro noise is per component.
/// Construction enforces non-negative amplitudes and the worst-case noise
/// norms: for each direction column `j`,
/// `|| (sum_p amp[0][j][p], sum_p amp[1][j][p], sum_p amp[2][j][p]) || <=
/// direction_cap`, and likewise for the gyro vector.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    direction: Vec<[Vec<Sinusoid>; 3]>,
    gyro: [Vec<Sinusoid>; 3],
    /// Seed recorded for provenance when the phases were drawn randomly.
    pub rng_seed: Option<u64>,
}

impl NoiseModel {
    /// Noise-free model for `k` direction columns.
    pub fn quiet(k: usize) -> Self {
        NoiseModel {
            direction: vec![[Vec::new(), Vec::new(), Vec::new()]; k],
            gyro: [Vec::new(), Vec::new(), Vec::new()],
            rng_seed: None,
        }
    }

    /// Validating constructor from explicit channel lists.
    pub fn new(
        direction: Vec<[Vec<Sinusoid>; 3]>,
        gyro: [Vec<Sinusoid>; 3],
    ) -> Result<Self, MeasurementError> {
        Self::with_caps(direction, gyro, DIRECTION_NOISE_CAP, GYRO_NOISE_CAP)
    }

    pub fn with_caps(
        direction: Vec<[Vec<Sinusoid>; 3]>,
        gyro: [Vec<Sinusoid>; 3],
        direction_cap: f64,
        gyro_cap: f64,
    ) -> Result<Self, MeasurementError> {
        for column in &direction {
            check_channel_budget(column, direction_cap)?;
        }
        check_channel_budget(&gyro, gyro_cap)?;
        Ok(NoiseModel {
            direction,
            gyro,
            rng_seed: None,
        })
    }

    /// The reference noise configuration: three direction sinusoids at
    /// 1/10/100 Hz summing to 2.4deg per column and two gyro sinusoids at
    /// 10/200 Hz summing to 0.97deg/s, with fixed phases and deterministic
    /// per-column noise directions.
    pub fn reference(k: usize) -> Self {
        Self::reference_impl(k, None)
    }

    /// Same amplitude structure as [`NoiseModel::reference`] but with phases
    /// and noise directions drawn from a seeded generator.
    pub fn reference_seeded(k: usize, seed: u64) -> Self {
        Self::reference_impl(k, Some(seed))
    }

    fn reference_impl(k: usize, seed: Option<u64>) -> Self {
        let dirs: Vec<(f64, f64)> = DIRECTION_FREQUENCIES_HZ
            .iter()
            .zip(DIRECTION_AMPLITUDES.iter())
            .map(|(&f, &a)| (f, a))
            .collect();
        let gyro: Vec<(f64, f64)> = GYRO_FREQUENCIES_HZ
            .iter()
            .zip(GYRO_AMPLITUDES.iter())
            .map(|(&f, &a)| (f, a))
            .collect();
        Self::sinusoidal(k, &dirs, &gyro, seed).expect("reference allocation is within budget")
    }

    /// General sinusoidal noise builder.
    ///
    /// Each `(frequency_hz, amplitude)` component contributes one matrix
    /// sinusoid: column `j` of the noise matrix receives the component's
    /// amplitude along a fixed unit direction, so the worst-case per-column
    /// noise norm is the sum of the component amplitudes. With `seed = None`
    /// directions come from a Fibonacci sphere and phases cycle through
    /// [`DEFAULT_PHASES`]; with a seed both are drawn from a deterministic
    /// generator. Budgets are validated against the default caps.
    pub fn sinusoidal(
        k: usize,
        direction_components: &[(f64, f64)],
        gyro_components: &[(f64, f64)],
        seed: Option<u64>,
    ) -> Result<Self, MeasurementError> {
        Self::sinusoidal_with_caps(
            k,
            direction_components,
            gyro_components,
            seed,
            DIRECTION_NOISE_CAP,
            GYRO_NOISE_CAP,
        )
    }

    pub fn sinusoidal_with_caps(
        k: usize,
        direction_components: &[(f64, f64)],
        gyro_components: &[(f64, f64)],
        seed: Option<u64>,
        direction_cap: f64,
        gyro_cap: f64,
    ) -> Result<Self, MeasurementError> {
        let mut rng = seed.map(SplitMix64::new);
        let n_dir = direction_components.len().max(1);
        let mut direction = Vec::with_capacity(k);
        for col in 0..k {
            let mut channels: [Vec<Sinusoid>; 3] = [Vec::new(), Vec::new(), Vec::new()];
            for (p, &(freq, amp)) in direction_components.iter().enumerate() {
                let dir = match rng.as_mut() {
                    Some(rng) => random_unit_vector(rng),
                    None => fibonacci_sphere_point(col * n_dir + p, k * n_dir),
                };
                let phase = match rng.as_mut() {
                    Some(rng) => rng.uniform(0.0, 2.0 * core::f64::consts::PI),
                    None => DEFAULT_PHASES[p % DEFAULT_PHASES.len()],
                };
                push_component(&mut channels, freq, amp, &dir, phase);
            }
            direction.push(channels);
        }

        let mut gyro: [Vec<Sinusoid>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        for (p, &(freq, amp)) in gyro_components.iter().enumerate() {
            let dir = match rng.as_mut() {
                Some(rng) => random_unit_vector(rng),
                None => fibonacci_sphere_point(p, gyro_components.len().max(1)),
            };
            let phase = match rng.as_mut() {
                Some(rng) => rng.uniform(0.0, 2.0 * core::f64::consts::PI),
                None => DEFAULT_PHASES[p % DEFAULT_PHASES.len()],
            };
            push_component(&mut gyro, freq, amp, &dir, phase);
        }

        let mut model = Self::with_caps(direction, gyro, direction_cap, gyro_cap)?;
        model.rng_seed = seed;
        Ok(model)
    }

    pub fn direction_columns(&self) -> usize {
        self.direction.len()
    }

    /// Restriction of the model to the direction columns selected by `mask`.
    pub fn subset_columns(&self, mask: &[bool]) -> NoiseModel {
        let direction = self
            .direction
            .iter()
            .zip(mask.iter())
            .filter(|(_, &keep)| keep)
            .map(|(c, _)| c.clone())
            .collect();
        NoiseModel {
            direction,
            gyro: self.gyro.clone(),
            rng_seed: self.rng_seed,
        }
    }

    /// Direction-noise matrix `N(t)` for `k` columns.
    pub fn direction_noise_at(&self, t: f64, k: usize) -> DirectionMatrix {
        assert!(
            k <= self.direction.len(),
            "noise model covers {} columns, {k} requested",
            self.direction.len()
        );
        let mut n = DirectionMatrix::zeros(k);
        for (col, channels) in self.direction.iter().take(k).enumerate() {
            for (row, sins) in channels.iter().enumerate() {
                n[(row, col)] = sins.iter().map(|s| s.eval(t)).sum();
            }
        }
        n
    }

    /// Gyro-noise vector `w(t)`.
    pub fn gyro_noise_at(&self, t: f64) -> Vector3 {
        Vector3::from_fn(|row, _| self.gyro[row].iter().map(|s| s.eval(t)).sum())
    }

    /// Worst-case `||nu_j(t)||` bound for direction column `j`.
    pub fn direction_column_bound(&self, j: usize) -> f64 {
        channel_bound(&self.direction[j])
    }

    /// Worst-case `||w(t)||` bound.
    pub fn gyro_bound(&self) -> f64 {
        channel_bound(&self.gyro)
    }
}

/// Splits one vector-valued sinusoid `amp * dir * sin(2 pi f t + phase)`
/// into per-row channels, folding the direction sign into the phase so that
/// amplitudes stay non-negative.
fn push_component(
    channels: &mut [Vec<Sinusoid>; 3],
    frequency_hz: f64,
    amplitude: f64,
    dir: &Vector3,
    phase: f64,
) {
    for row in 0..3 {
        let (a, ph) = if dir[row] < 0.0 {
            (-amplitude * dir[row], phase + core::f64::consts::PI)
        } else {
            (amplitude * dir[row], phase)
        };
        if a > 0.0 {
            channels[row].push(Sinusoid {
                frequency_hz,
                phase_rad: ph,
                amplitude: a,
            });
        }
    }
}

fn check_channel_budget(channels: &[Vec<Sinusoid>; 3], cap: f64) -> Result<(), MeasurementError> {
    for sins in channels {
        for s in sins {
            if s.amplitude < 0.0 {
                return Err(MeasurementError::NegativeAmplitude {
                    amplitude: s.amplitude,
                });
            }
        }
    }
    let bound = channel_bound(channels);
    if bound > cap * (1.0 + 1e-9) {
        return Err(MeasurementError::AmplitudeBudget { bound, cap });
    }
    Ok(())
}

fn channel_bound(channels: &[Vec<Sinusoid>; 3]) -> f64 {
    let mut sum_sq = 0.0;
    for sins in channels {
        let s: f64 = sins.iter().map(|s| s.amplitude).sum();
        sum_sq += s * s;
    }
    sqrt(sum_sq)
}

fn random_unit_vector(rng: &mut SplitMix64) -> Vector3 {
    // Archimedes: uniform z and azimuth give a uniform sphere point.
    let z = rng.uniform(-1.0, 1.0);
    let phi = rng.uniform(0.0, 2.0 * core::f64::consts::PI);
    let r = sqrt((1.0 - z * z).max(0.0));
    Vector3::new(r * cos(phi), r * sin(phi), z)
}

fn fibonacci_sphere_point(i: usize, n: usize) -> Vector3 {
    let n = n.max(1);
    let golden = (1.0 + sqrt(5.0)) / 2.0;
    let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
    let phi = 2.0 * core::f64::consts::PI * (i as f64 / golden);
    let r = sqrt((1.0 - z * z).max(0.0));
    Vector3::new(r * cos(phi), r * sin(phi), z)
}

/// Constant rate-gyro bias (rad/s). Immutable for the life of a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasVector(Vector3);

impl BiasVector {
    pub fn new(beta: Vector3) -> Self {
        BiasVector(beta)
    }

    pub fn zero() -> Self {
        BiasVector(Vector3::zeros())
    }

    pub fn vector(&self) -> Vector3 {
        self.0
    }
}

/// One time-step of sensor data, with the Wahba quantities `L` and `K`
/// cached at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementFrame {
    pub t: f64,
    pub e: DirectionMatrix,
    pub u_m: DirectionMatrix,
    pub w: WeightMatrix,
    pub omega_m: Vector3,
    l: Matrix3,
    k: Matrix3,
}

impl MeasurementFrame {
    pub fn new(
        t: f64,
        e: DirectionMatrix,
        u_m: DirectionMatrix,
        w: WeightMatrix,
        omega_m: Vector3,
    ) -> Result<Self, MeasurementError> {
        Self::with_eig_gap(t, e, u_m, w, omega_m, DEFAULT_EIG_GAP)
    }

    pub fn with_eig_gap(
        t: f64,
        e: DirectionMatrix,
        u_m: DirectionMatrix,
        w: WeightMatrix,
        omega_m: Vector3,
        eig_gap: f64,
    ) -> Result<Self, MeasurementError> {
        let k_cols = e.ncols();
        if k_cols < 3 || u_m.ncols() != k_cols || w.nrows() != k_cols || w.ncols() != k_cols {
            return Err(MeasurementError::DimensionMismatch {
                context: "frame requires E, U_m 3xk and W kxk with k >= 3",
            });
        }
        let finite = e.iter().all(|x| x.is_finite())
            && u_m.iter().all(|x| x.is_finite())
            && w.iter().all(|x| x.is_finite())
            && omega_m.iter().all(|x| x.is_finite())
            && t.is_finite();
        if !finite {
            return Err(MeasurementError::NonFinite { context: "frame" });
        }
        if (&w - w.transpose()).norm() > 1e-9 * (1.0 + w.norm()) {
            return Err(MeasurementError::WeightNotPositiveDefinite);
        }
        let k_matrix = compute_k(&e, &w);
        let eigs = sorted_eigenvalues(&k_matrix);
        if eigs[2] <= 0.0 {
            return Err(MeasurementError::WeightNotPositiveDefinite);
        }
        let min_sep = (eigs[0] - eigs[1]).min(eigs[1] - eigs[2]);
        if min_sep < eig_gap {
            return Err(MeasurementError::EigensNotDistinct {
                gap: eig_gap,
                min_sep,
            });
        }
        let l = compute_l(&e, &w, &u_m);
        Ok(MeasurementFrame {
            t,
            e,
            u_m,
            w,
            omega_m,
            l,
            k: k_matrix,
        })
    }

    /// `L = E W (U^m)^T`.
    pub fn l_matrix(&self) -> &Matrix3 {
        &self.l
    }

    /// `K = E W E^T`.
    pub fn k_matrix(&self) -> &Matrix3 {
        &self.k
    }
}

/// Appends the cross product of the two measured directions to both the
/// inertial and the body matrix, as required when only `k = 2` directions
/// are available. Noise is expected to be already present in `u_raw`.
pub fn augment_two_vectors(
    e_raw: &DirectionMatrix,
    u_raw: &DirectionMatrix,
) -> Result<(DirectionMatrix, DirectionMatrix), MeasurementError> {
    if e_raw.ncols() != 2 || u_raw.ncols() != 2 {
        return Err(MeasurementError::DimensionMismatch {
            context: "augmentation takes exactly two columns",
        });
    }
    let e1 = Vector3::from(e_raw.column(0));
    let e2 = Vector3::from(e_raw.column(1));
    let cross = e1.cross(&e2);
    let sin_sep = cross.norm() / (e1.norm() * e2.norm()).max(f64::MIN_POSITIVE);
    if sin_sep < sin(MIN_DIRECTION_SEPARATION) {
        return Err(MeasurementError::DegenerateDirections { sin_sep });
    }
    let u1 = Vector3::from(u_raw.column(0));
    let u2 = Vector3::from(u_raw.column(1));
    let u_cross = u1.cross(&u2);

    let e = DirectionMatrix::from_columns(&[e1, e2, cross]);
    let u = DirectionMatrix::from_columns(&[u1, u2, u_cross]);
    Ok((e, u))
}

/// Noisy body-frame direction measurements `U^m = R^T E + N(t)`.
///
/// `e` holds the raw (pre-augmentation) inertial directions; the noise model
/// must cover at least `e.ncols()` columns.
pub fn synthesize_directions(
    r: &RotationMatrix,
    e: &DirectionMatrix,
    noise: &NoiseModel,
    t: f64,
) -> DirectionMatrix {
    r.matrix().transpose() * e + noise.direction_noise_at(t, e.ncols())
}

/// Biased, noisy gyro reading `Omega^m = Omega + w(t) + beta`.
pub fn synthesize_gyro(omega: &Vector3, bias: &BiasVector, noise: &NoiseModel, t: f64) -> Vector3 {
    omega + noise.gyro_noise_at(t) + bias.vector()
}

/// Chooses a symmetric positive-definite weight matrix `W` such that
/// `K = E W E^T` equals `diag(target_eigs)`.
///
/// Construction: `W = E+ K_target (E+)^T + mu (I - E+ E)` with `E+` the
/// right pseudoinverse. The null-space term does not change `K` (since
/// `E (I - E+ E) = 0`) and makes `W` strictly positive definite. The
/// eigenvalues of the resulting `K` are verified numerically.
pub fn choose_weights(
    e: &DirectionMatrix,
    target_eigs: [f64; 3],
) -> Result<WeightMatrix, MeasurementError> {
    let mut targets = target_eigs;
    targets.sort_by(|a, b| b.partial_cmp(a).expect("finite targets"));
    if targets[2] <= 0.0 {
        return Err(MeasurementError::EigensNotDistinct {
            gap: DEFAULT_EIG_GAP,
            min_sep: f64::NEG_INFINITY,
        });
    }
    let target_sep = (targets[0] - targets[1]).min(targets[1] - targets[2]);
    if target_sep < DEFAULT_EIG_GAP {
        return Err(MeasurementError::EigensNotDistinct {
            gap: DEFAULT_EIG_GAP,
            min_sep: target_sep,
        });
    }

    let k_cols = e.ncols();
    let ee_t: Matrix3 = e * e.transpose();
    let gram_eigs = sorted_eigenvalues(&ee_t);
    let ratio = gram_eigs[2] / gram_eigs[0].max(f64::MIN_POSITIVE);
    if k_cols < 3 || gram_eigs[2] <= 0.0 || ratio < 1e-10 {
        return Err(MeasurementError::RankDeficient { ratio });
    }

    let gram_inv = ee_t.try_inverse().ok_or(MeasurementError::RankDeficient { ratio })?;
    // E+ = E^T (E E^T)^-1, k x 3
    let e_pinv = e.transpose() * gram_inv;
    let k_target = Matrix3::from_diagonal(&Vector3::new(targets[0], targets[1], targets[2]));

    // mu only has to be positive; pick it on the scale of the row-space
    // block so W stays well conditioned.
    let mu = 0.1 * targets[2] / gram_eigs[0];
    let mut w = &e_pinv * k_target * e_pinv.transpose();
    let null_proj = WeightMatrix::identity(k_cols, k_cols) - &e_pinv * e;
    w += null_proj * mu;
    // Symmetrize away rounding.
    w = (&w + w.transpose()) * 0.5;

    // Verify the spectrum of E W E^T against the targets.
    let k_check = compute_k(e, &w);
    let achieved = sorted_eigenvalues(&k_check);
    for (a, t) in achieved.iter().zip(targets.iter()) {
        if (a - t).abs() > 1e-8 {
            return Err(MeasurementError::EigensNotDistinct {
                gap: DEFAULT_EIG_GAP,
                min_sep: (a - t).abs(),
            });
        }
    }
    let min_sep = (achieved[0] - achieved[1]).min(achieved[1] - achieved[2]);
    if min_sep < DEFAULT_EIG_GAP {
        return Err(MeasurementError::EigensNotDistinct {
            gap: DEFAULT_EIG_GAP,
            min_sep,
        });
    }
    Ok(w)
}

/// `L = E W (U^m)^T`. Noise-free this equals `K R`.
pub fn compute_l(e: &DirectionMatrix, w: &WeightMatrix, u_m: &DirectionMatrix) -> Matrix3 {
    let ew = e * w;
    let mut l = Matrix3::zeros();
    l.copy_from(&(ew * u_m.transpose()));
    l
}

/// `K = E W E^T`, the weighted Gram matrix of the inertial directions.
pub fn compute_k(e: &DirectionMatrix, w: &WeightMatrix) -> Matrix3 {
    let ew = e * w;
    let mut k = Matrix3::zeros();
    k.copy_from(&(ew * e.transpose()));
    k
}

/// `S_L(Rhat) = vex(L^T Rhat - Rhat^T L)`, the Wahba-cost gradient under
/// right-multiplicative perturbations of `Rhat`. The argument is exactly
/// skew, so no skewness check is needed.
pub fn compute_sl(r_hat: &RotationMatrix, l: &Matrix3) -> Vector3 {
    let r = r_hat.matrix();
    vex_skew_part(&(l.transpose() * r - r.transpose() * l))
}

/// Eigenvalues of a symmetric 3x3 matrix, sorted descending.
pub fn sorted_eigenvalues(m: &Matrix3) -> [f64; 3] {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigenvalues();
    let mut out = [eig[0], eig[1], eig[2]];
    out.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    out
}
