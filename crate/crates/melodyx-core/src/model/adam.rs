//! Adam and the validation-plateau learning-rate schedule.

use super::{Gradients, ModelParams};
use crate::error::Result;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Initial learning rate used throughout training.
pub const INITIAL_LR: f64 = 0.003;

/// Plateau schedule: multiply the rate by 0.7 after this many epochs
/// without a validation-accuracy improvement.
pub const PLATEAU_FACTOR: f64 = 0.7;
pub const PLATEAU_PATIENCE: u32 = 3;

/// First/second moment accumulators plus the schedule state.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    m: Vec<Vec<f32>>,
    v: Vec<Vec<f32>>,
    pub step: u64,
    pub learning_rate: f64,
    pub plateau_counter: u32,
    pub best_val_accuracy: f64,
    /// Batches whose gradients came back non-finite and were skipped.
    pub flagged_batches: u64,
}

impl OptimizerState {
    pub fn new(params: &ModelParams) -> Self {
        let shapes: Vec<usize> = params.net.flat().iter().map(|s| s.len()).collect();
        OptimizerState {
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            step: 0,
            learning_rate: INITIAL_LR,
            plateau_counter: 0,
            best_val_accuracy: f64::NEG_INFINITY,
            flagged_batches: 0,
        }
    }
}

/// Whether an update was applied or the batch was skipped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Applied,
    SkippedNonFinite,
}

/// One Adam update with bias correction. A zero learning rate or zero
/// gradient leaves the parameters unchanged; non-finite gradients abort
/// the step and flag the batch.
pub fn adam_step(
    params: &mut ModelParams,
    grads: &Gradients,
    state: &mut OptimizerState,
) -> Result<StepOutcome> {
    if !grads.is_finite() {
        state.flagged_batches += 1;
        return Ok(StepOutcome::SkippedNonFinite);
    }
    state.step += 1;
    let t = state.step as i32;
    let lr = state.learning_rate;
    // Fold both bias corrections into the step size.
    let lr_t = (lr * (1.0 - BETA2.powi(t)).sqrt() / (1.0 - BETA1.powi(t))) as f32;
    let b1 = BETA1 as f32;
    let b2 = BETA2 as f32;
    let eps = ADAM_EPS as f32;

    let grad_flat = grads.net.flat();
    for ((w_slice, g_slice), (m_slice, v_slice)) in params
        .net
        .flat_mut()
        .into_iter()
        .zip(grad_flat)
        .zip(state.m.iter_mut().zip(state.v.iter_mut()))
    {
        for i in 0..w_slice.len() {
            let g = g_slice[i];
            m_slice[i] = b1 * m_slice[i] + (1.0 - b1) * g;
            v_slice[i] = b2 * v_slice[i] + (1.0 - b2) * g * g;
            w_slice[i] -= lr_t * m_slice[i] / (v_slice[i].sqrt() + eps);
        }
    }
    Ok(StepOutcome::Applied)
}

/// Report one epoch's validation accuracy. Improvements reset the counter
/// and raise the best mark; three stale epochs in a row shrink the
/// learning rate by 0.7 and reset the counter.
pub fn plateau_update(state: &mut OptimizerState, val_accuracy: f64) {
    if val_accuracy > state.best_val_accuracy {
        state.best_val_accuracy = val_accuracy;
        state.plateau_counter = 0;
        return;
    }
    state.plateau_counter += 1;
    if state.plateau_counter >= PLATEAU_PATIENCE {
        state.learning_rate *= PLATEAU_FACTOR;
        state.plateau_counter = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{backward, init_params, ModelConfig};
    use ndarray::Array2;

    fn setup() -> (ModelParams, Gradients, OptimizerState) {
        let params = init_params(&ModelConfig::tiny(), 5).unwrap();
        let patch = crate::audio::FramePatch {
            values: Array2::from_elem((31, 32), 0.3f32),
            center_frame_index: 0,
        };
        let mut targets = Array2::<f32>::zeros((31, 442));
        for t in 0..31 {
            targets[(t, 100)] = 1.0;
        }
        let (_, grads) = backward(&params, &[patch], targets.view()).unwrap();
        let state = OptimizerState::new(&params);
        (params, grads, state)
    }

    #[test]
    fn first_step_moves_against_gradient_sign() {
        let (mut params, grads, mut state) = setup();
        let before: Vec<f32> = params.net.flat().concat();
        let outcome = adam_step(&mut params, &grads, &mut state).unwrap();
        assert_eq!(outcome, StepOutcome::Applied);
        let after: Vec<f32> = params.net.flat().concat();
        let grad_flat: Vec<f32> = grads.net.flat().concat();
        let mut checked = 0;
        for i in 0..before.len() {
            if grad_flat[i].abs() > 1e-12 {
                let delta = after[i] - before[i];
                assert!(
                    delta * grad_flat[i] < 0.0,
                    "param {i} moved with the gradient"
                );
                checked += 1;
            } else {
                assert_eq!(after[i], before[i], "zero-grad param {i} moved");
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn initial_learning_rate_matches_training_setting() {
        let (params, _, state) = setup();
        let _ = params;
        assert_eq!(state.learning_rate, 0.003);
    }

    #[test]
    fn non_finite_gradient_skips_and_flags() {
        let (mut params, mut grads, mut state) = setup();
        grads.net.dense.b[0] = f32::NAN;
        let before: Vec<f32> = params.net.flat().concat();
        let outcome = adam_step(&mut params, &grads, &mut state).unwrap();
        assert_eq!(outcome, StepOutcome::SkippedNonFinite);
        assert_eq!(state.flagged_batches, 1);
        assert_eq!(state.step, 0);
        assert_eq!(before, params.net.flat().concat());
    }

    #[test]
    fn plateau_schedule_semantics() {
        let (params, _, mut state) = setup();
        let _ = params;
        // Accuracies 0.5, 0.49, 0.48, 0.47: cut after the 4th report.
        for (i, acc) in [0.5, 0.49, 0.48, 0.47].iter().enumerate() {
            plateau_update(&mut state, *acc);
            if i < 3 {
                assert_eq!(state.learning_rate, 0.003, "report {i}");
            }
        }
        assert!((state.learning_rate - 0.003 * 0.7).abs() < 1e-12);
        assert_eq!(state.plateau_counter, 0);

        // Strictly increasing accuracies never cut the rate.
        let mut fresh = OptimizerState::new(&init_params(&ModelConfig::tiny(), 1).unwrap());
        for acc in [0.1, 0.2, 0.3, 0.4, 0.5] {
            plateau_update(&mut fresh, acc);
        }
        assert_eq!(fresh.learning_rate, 0.003);

        // Improvement on the third epoch resets the counter.
        let mut third = OptimizerState::new(&init_params(&ModelConfig::tiny(), 1).unwrap());
        plateau_update(&mut third, 0.5);
        plateau_update(&mut third, 0.4);
        plateau_update(&mut third, 0.4);
        plateau_update(&mut third, 0.6);
        assert_eq!(third.learning_rate, 0.003);
        assert_eq!(third.plateau_counter, 0);
    }
}
