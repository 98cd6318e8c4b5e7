//! End-to-end scenario driver: truth propagation, frame synthesis, discrete
//! estimation with one-frame lookahead, and per-step error recording.

use std::time::Instant;

use thiserror::Error;

use vatt_core::diagnostics::{compute_errors, DiagnosticsError, ErrorSample};
use vatt_core::estimator::{discrete_step_detailed, EstimatorError};
use vatt_core::measurement::{
    augment_two_vectors, choose_weights, synthesize_directions, synthesize_gyro, DirectionMatrix,
    MeasurementError, MeasurementFrame, WeightMatrix,
};
use vatt_core::rigid_body::{propagate_truth, TruthState};
use vatt_core::so3::Vector3;

use crate::config::{Scenario, ScenarioConfig};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error("step {step}: {source}")]
    Measurement {
        step: usize,
        source: MeasurementError,
    },
    #[error("step {step}: {source}")]
    Estimator { step: usize, source: EstimatorError },
    #[error("step {step}: {source}")]
    Diagnostics {
        step: usize,
        source: DiagnosticsError,
    },
}

/// Terminal errors and run-wide invariant extremes.
#[derive(Debug, Clone)]
pub struct ExitSummary {
    pub steps: usize,
    pub terminal_principal_angle: f64,
    pub terminal_omega_err_norm: f64,
    pub terminal_beta_err_norm: f64,
    pub v_initial: f64,
    pub v_terminal: f64,
    /// Largest `||Rhat^T Rhat - I||_F` over the run.
    pub max_orthonormality_defect: f64,
    pub max_newton_iterations: usize,
    pub wall_time_s: f64,
}

pub struct RunOutput {
    pub trace: Vec<ErrorSample>,
    pub summary: ExitSummary,
}

/// Runs a validated scenario. Deterministic given the config (the seed only
/// feeds the noise phases).
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutput, RunError> {
    let scenario = cfg.build()?;
    run_built_scenario(&scenario)
}

pub fn run_built_scenario(scenario: &Scenario) -> Result<RunOutput, RunError> {
    let start = Instant::now();
    let truth = scenario_truth(scenario);
    let frames = frames_for_truth(scenario, &truth)?;

    let mut state = scenario.initial_state(&frames[0].omega_m);
    let mut trace = Vec::with_capacity(scenario.steps + 1);
    let mut max_defect: f64 = state.r_hat.orthonormality_defect();
    let mut max_newton = 0;

    trace.push(
        compute_errors(&truth[0], &state, &scenario.bias, &scenario.gains, &frames[0])
            .map_err(|source| RunError::Diagnostics { step: 0, source })?,
    );

    for i in 0..scenario.steps {
        let (next, newton_iters) =
            discrete_step_detailed(&state, &frames[i], &frames[i + 1], &scenario.gains)
                .map_err(|source| RunError::Estimator { step: i, source })?;
        state = next;
        max_newton = max_newton.max(newton_iters);
        max_defect = max_defect.max(state.r_hat.orthonormality_defect());
        trace.push(
            compute_errors(
                &truth[i + 1],
                &state,
                &scenario.bias,
                &scenario.gains,
                &frames[i + 1],
            )
            .map_err(|source| RunError::Diagnostics { step: i + 1, source })?,
        );
    }

    let terminal = trace.last().expect("trace is non-empty");
    let summary = ExitSummary {
        steps: scenario.steps,
        terminal_principal_angle: terminal.principal_angle,
        terminal_omega_err_norm: terminal.omega_err.norm(),
        terminal_beta_err_norm: terminal.beta_err.norm(),
        v_initial: trace[0].v,
        v_terminal: terminal.v,
        max_orthonormality_defect: max_defect,
        max_newton_iterations: max_newton,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok(RunOutput { trace, summary })
}

/// Truth samples at every estimator sampling instant.
pub fn scenario_truth(scenario: &Scenario) -> Vec<TruthState> {
    propagate_truth(
        &scenario.truth0,
        &scenario.inertia,
        &scenario.torque,
        scenario.step,
        scenario.duration,
    )
}

/// Synthesizes the measurement frame sequence for the given truth samples.
///
/// The availability mask selects the measured columns; with exactly two
/// active directions the noisy pair is cross-augmented. Weights are computed
/// once per distinct mask (the effective direction set is a function of the
/// mask alone).
pub fn frames_for_truth(
    scenario: &Scenario,
    truth: &[TruthState],
) -> Result<Vec<MeasurementFrame>, RunError> {
    let k = scenario.directions.ncols();
    let mut weight_cache: Vec<(Vec<bool>, WeightMatrix)> = Vec::new();
    let mut frames = Vec::with_capacity(truth.len());
    for (i, s) in truth.iter().enumerate() {
        let mask = scenario.availability.mask_at(s.t, k);
        let active: Vec<usize> = (0..k).filter(|&j| mask[j]).collect();
        let e_active = DirectionMatrix::from_columns(
            &active
                .iter()
                .map(|&j| Vector3::from(scenario.directions.column(j)))
                .collect::<Vec<_>>(),
        );
        let noise_active = scenario.noise.subset_columns(&mask);

        // Noise enters the measured columns before any cross augmentation.
        let u_raw = synthesize_directions(&s.r, &e_active, &noise_active, s.t);
        let (e_eff, u_eff) = if active.len() == 2 {
            augment_two_vectors(&e_active, &u_raw)
                .map_err(|source| RunError::Measurement { step: i, source })?
        } else {
            (e_active, u_raw)
        };

        let w = match weight_cache.iter().find(|(m, _)| *m == mask) {
            Some((_, w)) => w.clone(),
            None => {
                let w = choose_weights(&e_eff, scenario.w_targets)
                    .map_err(|source| RunError::Measurement { step: i, source })?;
                weight_cache.push((mask.clone(), w.clone()));
                w
            }
        };

        let omega_m = synthesize_gyro(&s.omega, &scenario.bias, &scenario.noise, s.t);
        frames.push(
            MeasurementFrame::new(s.t, e_eff, u_eff, w, omega_m)
                .map_err(|source| RunError::Measurement { step: i, source })?,
        );
    }
    Ok(frames)
}
