//! Toy glucose plant.
//!
//! Three pools, advanced once per step:
//!
//! ```text
//! absorbed = carb_absorption · carbs
//! active   = insulin_action · insulin
//! glucose' = glucose + carb_factor · absorbed − sensitivity · active
//!            + drift_rate · (set_point − glucose) + noise
//! ```
//!
//! Meal carbohydrates and insulin doses enter their pools at the end of the
//! step and act from the next one. This is a stand-in for a physiological
//! patient model, not a validated one.

use serde::{Deserialize, Serialize};

use crate::control::InsulinAction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    /// mg/dL
    pub glucose: f64,
    /// Units of insulin on board.
    pub insulin_onboard: f64,
    /// Grams of carbohydrate still to be absorbed.
    pub carbs_onboard: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PatientParams {
    /// mg/dL drop per unit of active insulin.
    pub sensitivity: f64,
    /// mg/dL rise per gram of absorbed carbohydrate.
    pub carb_factor: f64,
    /// Glucose level the endogenous drift pulls toward without insulin.
    pub set_point: f64,
    /// Fraction of the gap to the set point closed per step.
    pub drift_rate: f64,
    /// Fraction of the carbohydrate pool absorbed per step.
    pub carb_absorption: f64,
    /// Fraction of the insulin pool that acts per step.
    pub insulin_action: f64,
    /// Standard deviation of the additive glucose noise per step (mg/dL).
    pub process_noise_std: f64,
    pub initial_glucose: f64,
}

impl Default for PatientParams {
    fn default() -> Self {
        Self {
            sensitivity: 30.0,
            carb_factor: 3.0,
            set_point: 200.0,
            drift_rate: 0.01,
            carb_absorption: 0.1,
            insulin_action: 0.04,
            process_noise_std: 1.5,
            initial_glucose: 140.0,
        }
    }
}

impl PatientParams {
    /// Start at `initial_glucose` with the insulin pool at its steady state
    /// for `basal` units per step.
    pub fn initial_state(&self, basal: f64) -> PlantState {
        PlantState {
            glucose: self.initial_glucose,
            insulin_onboard: basal / self.insulin_action,
            carbs_onboard: 0.0,
        }
    }
}

pub const MIN_GLUCOSE: f64 = 1.0;

/// Advance one step. `noise` is a standard-normal draw scaled here by the
/// patient's process noise.
pub fn plant_step(
    state: &PlantState,
    params: &PatientParams,
    action: &InsulinAction,
    meal_grams: f64,
    noise: f64,
) -> PlantState {
    let absorbed = params.carb_absorption * state.carbs_onboard;
    let active = params.insulin_action * state.insulin_onboard;
    let glucose = state.glucose + params.carb_factor * absorbed - params.sensitivity * active
        + params.drift_rate * (params.set_point - state.glucose)
        + params.process_noise_std * noise;
    PlantState {
        glucose: glucose.max(MIN_GLUCOSE),
        insulin_onboard: (state.insulin_onboard - active + action.basal + action.bolus).max(0.0),
        carbs_onboard: (state.carbs_onboard - absorbed + meal_grams).max(0.0),
    }
}
