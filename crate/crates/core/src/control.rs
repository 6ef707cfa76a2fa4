//! Adaptive controllers driven by robustness intervals.
//!
//! Both are pure decision functions. The insulin adapter scales a default
//! basal dose by how badly the predicted glucose violates the low/high
//! requirements and moves the meal bolus earlier when the prediction is safe.
//! The vehicle adapter smooths brake and throttle when the predicted
//! acceleration violates its comfort bounds.

use serde::{Deserialize, Serialize};

use crate::monitor::RobustInterval;
use crate::signal::Flowpipe;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InsulinAction {
    pub basal: f64,
    pub bolus: f64,
}

/// Thresholds and multipliers of the basal/bolus adapter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BasalBolusParams {
    /// Low-BG lower bound below which basal is suspended.
    pub severe_hypo: f64,
    /// High-BG lower bound below which basal gets the largest boost.
    pub severe_hyper: f64,
    pub mild_hypo_factor: f64,
    pub mild_hyper_factor: f64,
    pub severe_hyper_factor: f64,
    /// Pre-meal bolus is withheld at or below this current glucose (mg/dL).
    pub hypo_glucose: f64,
    /// Pre-meal window length in steps.
    pub pre_meal_window: usize,
}

impl Default for BasalBolusParams {
    fn default() -> Self {
        Self {
            severe_hypo: -20.0,
            severe_hyper: -70.0,
            mild_hypo_factor: 0.8,
            mild_hyper_factor: 1.2,
            severe_hyper_factor: 1.5,
            hypo_glucose: 70.0,
            // 45 minutes at 3-minute steps
            pre_meal_window: 15,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasalBolusContext {
    /// Robustness of "glucose stays above the low threshold".
    pub rho_low: RobustInterval,
    /// Robustness of "glucose stays below the high threshold".
    pub rho_high: RobustInterval,
    pub glucose: f64,
    pub t: usize,
    /// Next planned meal step.
    pub meal_time: usize,
    pub bolus_given: bool,
    pub default_basal: f64,
    pub meal_bolus: f64,
}

/// Which basal rule fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasalRule {
    Suspend,
    MildHypo,
    MildHyper,
    SevereHyper,
    Default,
}

pub fn basal_rule(ctx: &BasalBolusContext, p: &BasalBolusParams) -> BasalRule {
    let low = ctx.rho_low.lower;
    let high = ctx.rho_high.lower;
    if low < p.severe_hypo {
        BasalRule::Suspend
    } else if low <= 0.0 {
        BasalRule::MildHypo
    } else if (p.severe_hyper..=0.0).contains(&high) {
        BasalRule::MildHyper
    } else if high < p.severe_hyper {
        BasalRule::SevereHyper
    } else {
        BasalRule::Default
    }
}

/// Returns the action and the updated "bolus already given" flag.
pub fn adapt_basal_bolus(ctx: &BasalBolusContext, p: &BasalBolusParams) -> (InsulinAction, bool) {
    let basal = ctx.default_basal
        * match basal_rule(ctx, p) {
            BasalRule::Suspend => 0.0,
            BasalRule::MildHypo => p.mild_hypo_factor,
            BasalRule::MildHyper => p.mild_hyper_factor,
            BasalRule::SevereHyper => p.severe_hyper_factor,
            BasalRule::Default => 1.0,
        };

    let mut bolus = 0.0;
    let mut given = ctx.bolus_given;
    if !given {
        let window_start = ctx.meal_time.saturating_sub(p.pre_meal_window);
        if window_start <= ctx.t && ctx.t < ctx.meal_time {
            if !(ctx.rho_low.lower <= 0.0 || ctx.glucose <= p.hypo_glucose) {
                bolus = ctx.meal_bolus;
                given = true;
            }
        } else if ctx.t == ctx.meal_time {
            bolus = ctx.meal_bolus;
            given = true;
        }
    }
    (InsulinAction { basal, bolus }, given)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveAction {
    pub brake: f64,
    pub throttle: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    None,
    Deceleration,
    Acceleration,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DriveParams {
    pub rho_threshold: f64,
    pub rho_correction: f64,
    pub min_speed: f64,
    pub max_throttle: f64,
    pub max_brake: f64,
    /// Exposed for configuration completeness; not used by the adapter.
    pub min_throttle: f64,
    /// Exposed for configuration completeness; not used by the adapter.
    pub min_brake: f64,
    /// Smallest denominator used for the violation gain.
    pub min_denominator: f64,
    pub accel_low: f64,
    pub accel_high: f64,
}

impl Default for DriveParams {
    fn default() -> Self {
        Self {
            rho_threshold: -3.0,
            rho_correction: -3.0,
            min_speed: 5.0,
            max_throttle: 0.6,
            max_brake: 0.6,
            min_throttle: 0.4,
            min_brake: 0.4,
            min_denominator: 1e-3,
            accel_low: -6.0,
            accel_high: 6.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveContext {
    pub rho: RobustInterval,
    pub current_speed: f64,
    pub current_throttle: f64,
    pub current_brake: f64,
    /// Trailing 5-step means.
    pub mean_brake: f64,
    pub mean_throttle: f64,
    pub violation: ViolationKind,
}

/// `1 / |lower + correction|`, with the denominator floored.
pub fn violation_gain(rho_lower: f64, p: &DriveParams) -> f64 {
    1.0 / (rho_lower + p.rho_correction).abs().max(p.min_denominator)
}

pub fn adapt_vehicle(ctx: &DriveContext, p: &DriveParams) -> DriveAction {
    let delta = violation_gain(ctx.rho.lower, p);
    let capped = DriveAction {
        brake: ctx.current_brake.min(p.max_brake),
        throttle: ctx.current_throttle.min(p.max_throttle),
    };
    let action = if ctx.current_speed >= p.min_speed {
        if ctx.rho.lower > p.rho_threshold {
            capped
        } else {
            match ctx.violation {
                ViolationKind::Deceleration => DriveAction {
                    brake: ((1.0 + delta) * ctx.mean_brake).min(p.max_brake),
                    throttle: 0.0,
                },
                ViolationKind::Acceleration => DriveAction {
                    brake: 0.0,
                    throttle: ((1.0 + delta) * ctx.mean_throttle).min(p.max_throttle),
                },
                ViolationKind::Both => DriveAction {
                    brake: ((1.0 - delta).max(0.0) * ctx.mean_brake).min(p.max_brake),
                    throttle: 0.0,
                },
                ViolationKind::None => capped,
            }
        }
    } else {
        DriveAction {
            brake: 0.0,
            throttle: ((1.0 - delta).max(0.0) * ctx.mean_throttle).min(p.max_throttle),
        }
    };
    DriveAction {
        brake: action.brake.max(0.0),
        throttle: action.throttle.max(0.0),
    }
}

/// Which comfort bound the predicted acceleration flowpipe crosses.
pub fn classify_violation(acceleration: &Flowpipe, low: f64, high: f64) -> ViolationKind {
    let decel = acceleration.steps().iter().any(|b| b.lower < low);
    let accel = acceleration.steps().iter().any(|b| b.upper > high);
    match (decel, accel) {
        (true, true) => ViolationKind::Both,
        (true, false) => ViolationKind::Deceleration,
        (false, true) => ViolationKind::Acceleration,
        (false, false) => ViolationKind::None,
    }
}
