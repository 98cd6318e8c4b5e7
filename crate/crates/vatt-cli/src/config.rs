//! Scenario configuration: a single TOML file describes the truth dynamics,
//! the direction set and its availability schedule, the sensor noise, the
//! filter gains and the initial estimates.
//!
//! [`ScenarioConfig::paper_fig123`] is the canonical scenario of the
//! reference experiment; [`ScenarioConfig::fixed_point`] is its zero-error
//! companion on a constant-rate truth, for which the discrete estimator has
//! an exact fixed point.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use vatt_core::estimator::{
    EstimatorGains, EstimatorState, JacobianMode, NewtonOptions, PhiFunction,
};
use vatt_core::measurement::{BiasVector, DirectionMatrix, NoiseModel, DEG};
use vatt_core::rigid_body::{InertiaMatrix, TorqueProfile, TruthState};
use vatt_core::so3::{exp_so3, Matrix3, RotationMatrix, Vector3};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("failed to parse {path}: {source}")]
    Parse {
        path: String,
        source: Box<toml::de::Error>,
    },
    #[error("invalid config field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Simulated duration T (s).
    pub duration: f64,
    /// Sampling/integration step h (s).
    pub step: f64,
    /// Noise phase seed; omitted means the deterministic default phases.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub truth: TruthConfig,
    pub directions: DirectionsConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    pub gains: GainsConfig,
    pub estimator: EstimatorInitConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthConfig {
    /// Principal moments of inertia (kg m^2), i.e. diag(J).
    pub inertia_diag: [f64; 3],
    pub torque: TorqueConfig,
    pub initial_attitude: AxisAngle,
    /// Initial body angular velocity (rad/s).
    pub initial_omega: [f64; 3],
    /// Constant gyro bias (rad/s).
    pub bias: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorqueConfig {
    pub amplitude: f64,
    /// Angular frequency (rad/s).
    pub frequency: f64,
    pub phase: f64,
    /// Body axis index 0..=2.
    pub axis: usize,
}

/// Rotation given as an axis (normalized on load) and an angle in radians.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisAngle {
    pub axis: [f64; 3],
    pub angle: f64,
}

impl AxisAngle {
    pub fn to_rotation(&self, field: &'static str) -> Result<RotationMatrix, ConfigError> {
        let axis = Vector3::new(self.axis[0], self.axis[1], self.axis[2]);
        let norm = axis.norm();
        if !norm.is_finite() || norm <= 0.0 || !self.angle.is_finite() {
            return Err(invalid(field, "axis must be non-zero and finite"));
        }
        Ok(exp_so3(&(axis / norm * self.angle)))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectionsConfig {
    /// Unit inertial direction columns, 2 to 9 of them.
    pub inertial: Vec<[f64; 3]>,
    /// Target eigenvalues for K = E W E^T.
    pub w_target_eigs: [f64; 3],
    #[serde(default)]
    pub availability: AvailabilityConfig,
}

/// Which direction columns are measured when. `All` keeps every column for
/// the whole run; otherwise each segment's mask applies from its start time
/// until the next segment.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AvailabilityConfig {
    #[default]
    #[serde(with = "all_literal")]
    All,
    Segments(Vec<AvailabilitySegment>),
}

/// Serializes the `All` variant as the literal string "all".
mod all_literal {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("all")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let s = String::deserialize(d)?;
        if s == "all" {
            Ok(())
        } else {
            Err(D::Error::custom("expected the string \"all\""))
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AvailabilitySegment {
    /// Segment start time (s).
    pub start: f64,
    /// One flag per configured direction column.
    pub mask: Vec<bool>,
}

impl AvailabilityConfig {
    pub fn mask_at(&self, t: f64, k: usize) -> Vec<bool> {
        match self {
            AvailabilityConfig::All => vec![true; k],
            AvailabilityConfig::Segments(segments) => {
                let mut current = vec![true; k];
                for seg in segments {
                    if t >= seg.start - 1e-12 {
                        current = seg.mask.clone();
                    }
                }
                current
            }
        }
    }
}

/// One sinusoidal noise component.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseComponent {
    pub frequency_hz: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// Direction noise components; amplitudes in degrees (per column).
    pub direction_deg: Vec<NoiseComponent>,
    /// Gyro noise components; amplitudes in degrees per second.
    pub gyro_deg_s: Vec<NoiseComponent>,
    /// Worst-case per-column direction noise (degrees).
    pub direction_cap_deg: f64,
    /// Worst-case gyro noise norm (degrees per second).
    pub gyro_cap_deg_s: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            direction_deg: vec![
                NoiseComponent {
                    frequency_hz: 1.0,
                    amplitude: 1.2,
                },
                NoiseComponent {
                    frequency_hz: 10.0,
                    amplitude: 0.8,
                },
                NoiseComponent {
                    frequency_hz: 100.0,
                    amplitude: 0.4,
                },
            ],
            gyro_deg_s: vec![
                NoiseComponent {
                    frequency_hz: 10.0,
                    amplitude: 0.6,
                },
                NoiseComponent {
                    frequency_hz: 200.0,
                    amplitude: 0.37,
                },
            ],
            direction_cap_deg: 2.4,
            gyro_cap_deg_s: 0.97,
        }
    }
}

impl NoiseConfig {
    pub fn quiet() -> Self {
        NoiseConfig {
            direction_deg: Vec::new(),
            gyro_deg_s: Vec::new(),
            ..NoiseConfig::default()
        }
    }

    /// Drops every component, keeping caps; used by `--zero-noise`.
    pub fn zero(&mut self) {
        self.direction_deg.clear();
        self.gyro_deg_s.clear();
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsConfig {
    /// Inertia-like scalar gain.
    pub m: f64,
    /// Dissipation gain diag(D).
    pub d_diag: [f64; 3],
    /// Bias gain: P = p_scalar * I.
    pub p_scalar: f64,
    /// Attitude-cost reshaping; only "identity" is built in.
    #[serde(default = "default_phi")]
    pub phi: String,
    #[serde(default = "default_newton_tolerance")]
    pub newton_tolerance: f64,
    #[serde(default = "default_newton_max_iterations")]
    pub newton_max_iterations: usize,
    /// "analytic" or "finite-difference".
    #[serde(default = "default_newton_jacobian")]
    pub newton_jacobian: String,
}

fn default_phi() -> String {
    "identity".to_owned()
}

fn default_newton_tolerance() -> f64 {
    1e-12
}

fn default_newton_max_iterations() -> usize {
    100
}

fn default_newton_jacobian() -> String {
    "analytic".to_owned()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorInitConfig {
    pub initial_attitude: AxisAngle,
    /// Initial angular-velocity estimate (rad/s).
    pub initial_omega_hat: [f64; 3],
    /// Initial bias estimate (rad/s).
    pub initial_bias: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
    pub csv: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: "out".to_owned(),
            csv: "trace.csv".to_owned(),
        }
    }
}

/// Validated, ready-to-run scenario pieces.
pub struct Scenario {
    pub duration: f64,
    pub step: f64,
    pub steps: usize,
    pub inertia: InertiaMatrix,
    pub torque: TorqueProfile,
    pub truth0: TruthState,
    pub bias: BiasVector,
    pub directions: DirectionMatrix,
    pub w_targets: [f64; 3],
    pub availability: AvailabilityConfig,
    pub noise: NoiseModel,
    pub gains: EstimatorGains,
    pub estimator_init: (RotationMatrix, Vector3, Vector3),
}

impl Scenario {
    /// Initial estimator state given the first gyro reading.
    pub fn initial_state(&self, omega_m0: &Vector3) -> EstimatorState {
        let (r_hat0, omega_hat0, beta_hat0) = self.estimator_init;
        EstimatorState::from_initial_estimates(r_hat0, omega_hat0, beta_hat0, omega_m0)
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.display().to_string(),
            source: Box::new(source),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Validates every field and assembles the runnable scenario.
    pub fn build(&self) -> Result<Scenario, ConfigError> {
        if !self.step.is_finite() || self.step <= 0.0 {
            return Err(invalid("step", "must be positive"));
        }
        if !self.duration.is_finite() || self.duration < self.step {
            return Err(invalid("duration", "must be at least one step"));
        }
        let steps = (self.duration / self.step).round() as usize;

        let inertia = InertiaMatrix::diagonal(Vector3::new(
            self.truth.inertia_diag[0],
            self.truth.inertia_diag[1],
            self.truth.inertia_diag[2],
        ))
        .map_err(|e| invalid("truth.inertia_diag", e.to_string()))?;
        let torque = TorqueProfile::new(
            self.truth.torque.amplitude,
            self.truth.torque.frequency,
            self.truth.torque.phase,
            self.truth.torque.axis,
        )
        .map_err(|e| invalid("truth.torque", e.to_string()))?;
        let r0 = self.truth.initial_attitude.to_rotation("truth.initial_attitude")?;
        let truth0 = TruthState {
            t: 0.0,
            r: r0,
            omega: Vector3::from_column_slice(&self.truth.initial_omega),
        };
        let bias = BiasVector::new(Vector3::from_column_slice(&self.truth.bias));

        let k = self.directions.inertial.len();
        if !(2..=9).contains(&k) {
            return Err(invalid(
                "directions.inertial",
                format!("need 2 to 9 direction columns, got {k}"),
            ));
        }
        let cols: Vec<Vector3> = self
            .directions
            .inertial
            .iter()
            .map(|c| Vector3::new(c[0], c[1], c[2]))
            .collect();
        for (j, c) in cols.iter().enumerate() {
            if (c.norm() - 1.0).abs() > 1e-9 {
                return Err(invalid(
                    "directions.inertial",
                    format!("column {j} is not unit norm (|.| = {})", c.norm()),
                ));
            }
        }
        let directions = DirectionMatrix::from_columns(&cols);

        if let AvailabilityConfig::Segments(segments) = &self.directions.availability {
            if segments.is_empty() {
                return Err(invalid("directions.availability", "no segments"));
            }
            for (i, seg) in segments.iter().enumerate() {
                if seg.mask.len() != k {
                    return Err(invalid(
                        "directions.availability",
                        format!("segment {i} mask length {} != {k}", seg.mask.len()),
                    ));
                }
                let active = seg.mask.iter().filter(|&&b| b).count();
                if active < 2 {
                    return Err(invalid(
                        "directions.availability",
                        format!("segment {i} leaves {active} directions, need at least 2"),
                    ));
                }
                if i > 0 && seg.start <= segments[i - 1].start {
                    return Err(invalid(
                        "directions.availability",
                        format!("segment {i} start must increase"),
                    ));
                }
            }
            if segments[0].start > 0.0 {
                return Err(invalid(
                    "directions.availability",
                    "first segment must start at t = 0",
                ));
            }
        }

        let te = self.directions.w_target_eigs;
        if !(te[0] > 0.0 && te[1] > 0.0 && te[2] > 0.0) {
            return Err(invalid("directions.w_target_eigs", "must be positive"));
        }

        let dir_components: Vec<(f64, f64)> = self
            .noise
            .direction_deg
            .iter()
            .map(|c| (c.frequency_hz, c.amplitude * DEG))
            .collect();
        let gyro_components: Vec<(f64, f64)> = self
            .noise
            .gyro_deg_s
            .iter()
            .map(|c| (c.frequency_hz, c.amplitude * DEG))
            .collect();
        let noise = NoiseModel::sinusoidal_with_caps(
            k,
            &dir_components,
            &gyro_components,
            self.seed,
            self.noise.direction_cap_deg * DEG,
            self.noise.gyro_cap_deg_s * DEG,
        )
        .map_err(|e| invalid("noise", e.to_string()))?;

        let phi = match self.gains.phi.as_str() {
            "identity" => PhiFunction::identity(),
            other => {
                return Err(invalid(
                    "gains.phi",
                    format!("unknown Phi \"{other}\"; built in: \"identity\""),
                ))
            }
        };
        let jacobian = match self.gains.newton_jacobian.as_str() {
            "analytic" => JacobianMode::Analytic,
            "finite-difference" => JacobianMode::FiniteDifference,
            other => {
                return Err(invalid(
                    "gains.newton_jacobian",
                    format!("unknown mode \"{other}\""),
                ))
            }
        };
        if !self.gains.newton_tolerance.is_finite() || self.gains.newton_tolerance <= 0.0 {
            return Err(invalid("gains.newton_tolerance", "must be positive"));
        }
        let gains = EstimatorGains::new(
            self.gains.m,
            Matrix3::from_diagonal(&Vector3::from_column_slice(&self.gains.d_diag)),
            Matrix3::identity() * self.gains.p_scalar,
            self.step,
            phi,
        )
        .map_err(|e| invalid("gains", e.to_string()))?
        .with_newton(NewtonOptions {
            tolerance: self.gains.newton_tolerance,
            max_iterations: self.gains.newton_max_iterations,
            jacobian,
        });

        let r_hat0 = self
            .estimator
            .initial_attitude
            .to_rotation("estimator.initial_attitude")?;
        let estimator_init = (
            r_hat0,
            Vector3::from_column_slice(&self.estimator.initial_omega_hat),
            Vector3::from_column_slice(&self.estimator.initial_bias),
        );

        Ok(Scenario {
            duration: self.duration,
            step: self.step,
            steps,
            inertia,
            torque,
            truth0,
            bias,
            directions,
            w_targets: te,
            availability: self.directions.availability.clone(),
            noise,
            gains,
            estimator_init,
        })
    }

    /// The canonical reference scenario: tumbling rigid body under a
    /// sinusoidal torque, nine measured directions, full noise model,
    /// initial attitude/velocity/bias estimate errors.
    pub fn paper_fig123() -> Self {
        ScenarioConfig {
            duration: 40.0,
            step: 0.01,
            seed: None,
            truth: TruthConfig {
                inertia_diag: [2.56, 3.01, 2.98],
                torque: TorqueConfig {
                    amplitude: 0.028,
                    frequency: 2.7,
                    phase: -PI / 7.0,
                    axis: 1,
                },
                initial_attitude: AxisAngle {
                    axis: [3.0 / 7.0, 6.0 / 7.0, 2.0 / 7.0],
                    angle: PI / 4.0,
                },
                initial_omega: [
                    -2.1 * PI / 60.0,
                    1.2 * PI / 60.0,
                    -1.1 * PI / 60.0,
                ],
                bias: [-0.01, -0.005, 0.02],
            },
            directions: DirectionsConfig {
                inertial: nine_unit_directions(),
                w_target_eigs: [3.0, 2.0, 1.0],
                availability: AvailabilityConfig::All,
            },
            noise: NoiseConfig::default(),
            gains: GainsConfig {
                m: 5.0,
                d_diag: [17.4, 18.85, 20.3],
                p_scalar: 2e3,
                phi: default_phi(),
                newton_tolerance: default_newton_tolerance(),
                newton_max_iterations: default_newton_max_iterations(),
                newton_jacobian: default_newton_jacobian(),
            },
            estimator: EstimatorInitConfig {
                initial_attitude: AxisAngle {
                    axis: [3.0 / 7.0, 6.0 / 7.0, 2.0 / 7.0],
                    angle: PI / 2.5,
                },
                initial_omega_hat: [-0.26, 0.1725, -0.2446],
                initial_bias: [0.0, -0.01, 0.01],
            },
            output: OutputConfig::default(),
        }
    }

    /// Zero-error companion scenario: spherical inertia and no torque keep
    /// the body rate constant, so the truth increments match the estimator's
    /// group updates exactly and the zero-error state is a fixed point.
    pub fn fixed_point() -> Self {
        let mut cfg = Self::paper_fig123();
        cfg.truth.inertia_diag = [1.0, 1.0, 1.0];
        cfg.truth.torque = TorqueConfig {
            amplitude: 0.0,
            frequency: 0.0,
            phase: 0.0,
            axis: 0,
        };
        cfg.noise = NoiseConfig::quiet();
        // Exact initial estimates: Rhat0 = R0, betahat0 = beta and
        // Omegahat0 = Omega0 so that omega_0 = Omega_0^m - Omegahat0 -
        // betahat0 = 0.
        cfg.estimator = EstimatorInitConfig {
            initial_attitude: cfg.truth.initial_attitude.clone(),
            initial_omega_hat: cfg.truth.initial_omega,
            initial_bias: cfg.truth.bias,
        };
        cfg.output.csv = "fixed_point.csv".to_owned();
        cfg
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "paper_fig123" => Some(Self::paper_fig123()),
            "fixed_point" => Some(Self::fixed_point()),
            _ => None,
        }
    }

    pub const PRESET_NAMES: &'static [&'static str] = &["paper_fig123", "fixed_point"];
}

/// Nine spread unit directions for the reference scenario.
fn nine_unit_directions() -> Vec<[f64; 3]> {
    let s2 = 1.0 / 2.0_f64.sqrt();
    let s3 = 1.0 / 3.0_f64.sqrt();
    vec![
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [s2, s2, 0.0],
        [0.0, s2, s2],
        [s2, 0.0, s2],
        [s3, s3, s3],
        [s2, -s2, 0.0],
        [0.0, s2, -s2],
    ]
}
