//! Monte Carlo glucose predictor.
//!
//! Each rollout perturbs the patient parameters multiplicatively, then
//! replays the planned actions with fresh process noise. The per-step
//! Gaussian fit over all rollouts becomes the flowpipe.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::plant::{plant_step, PatientParams, PlantState};
use crate::control::InsulinAction;
use crate::exec::Parallelism;
use crate::rng;
use crate::signal::{samples_to_flowpipe, Flowpipe, SampleSet, SignalError};

pub const CHANNEL: &str = "BG";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PredictorConfig {
    pub rollouts: usize,
    /// Prediction horizon in steps.
    pub horizon: usize,
    pub epsilon: f64,
    /// Log-scale standard deviation of the parameter perturbation.
    pub jitter: f64,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self {
            rollouts: 30,
            horizon: 10,
            epsilon: 0.95,
            jitter: 0.1,
        }
    }
}

/// Inputs assumed for one future step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlannedStep {
    pub action: InsulinAction,
    pub meal_grams: f64,
}

fn perturb<R: Rng>(p: &PatientParams, jitter: f64, rng: &mut R) -> PatientParams {
    let mut scale = || (jitter * rng.sample::<f64, _>(StandardNormal)).exp();
    PatientParams {
        sensitivity: p.sensitivity * scale(),
        carb_factor: p.carb_factor * scale(),
        carb_absorption: (p.carb_absorption * scale()).min(1.0),
        insulin_action: (p.insulin_action * scale()).min(1.0),
        ..*p
    }
}

/// One rollout: glucose at the `plan.len()` steps after `state`.
pub fn rollout<R: Rng>(
    state: &PlantState,
    patient: &PatientParams,
    plan: &[PlannedStep],
    jitter: f64,
    rng: &mut R,
) -> Vec<f64> {
    let params = perturb(patient, jitter, rng);
    let mut s = *state;
    plan.iter()
        .map(|p| {
            let noise: f64 = rng.sample(StandardNormal);
            s = plant_step(&s, &params, &p.action, p.meal_grams, noise);
            s.glucose
        })
        .collect()
}

/// Flowpipe over the `plan.len()` steps following `state`.
///
/// Rollout `r` at simulation step `step` draws from its own stream, so the
/// result does not depend on scheduling.
#[allow(clippy::too_many_arguments)]
pub fn predict_flowpipe(
    state: &PlantState,
    patient: &PatientParams,
    plan: &[PlannedStep],
    cfg: &PredictorConfig,
    step_duration: f64,
    seed: u64,
    step: u64,
    par: Parallelism,
) -> Result<Flowpipe, SignalError> {
    let runs = par.map_range(cfg.rollouts, |r| {
        let mut g = rng::stream(seed, rng::DOMAIN_PREDICT, step, r as u64);
        rollout(state, patient, plan, cfg.jitter, &mut g)
    });
    let samples = SampleSet::new(CHANNEL, step_duration, runs)?;
    samples_to_flowpipe(&samples, cfg.epsilon)
}
