//! Closed-loop glucose simulation.
//!
//! Every step the predictor builds a flowpipe over the next `horizon` steps,
//! the monitor scores it against "stays above low" and "stays below high",
//! and the controller picks the insulin action. The baseline controller
//! ignores the robustness and boluses at meal time.

pub mod hazards;
pub mod plant;
pub mod predictor;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::control::{adapt_basal_bolus, BasalBolusContext, BasalBolusParams, InsulinAction};
use crate::exec::Parallelism;
use crate::logic::{AtomicPredicate, Formula, Interval};
use crate::monitor::{robustness, MonitorError, RobustInterval, SignalEnv};
use crate::rng;
use crate::signal::SignalError;

pub use hazards::{detect_hazards, merge_hazards, HazardEvent, HazardKind};
pub use plant::{plant_step, PatientParams, PlantState};
pub use predictor::{predict_flowpipe, PlannedStep, PredictorConfig};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Meal {
    /// Minutes after midnight; repeated every simulated day.
    pub time_min: f64,
    pub grams: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    Baseline,
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerConfig {
    pub kind: ControllerKind,
    /// Units per step.
    pub default_basal: f64,
    /// Grams of carbohydrate covered by one unit of bolus.
    pub carb_ratio: f64,
    pub params: BasalBolusParams,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            kind: ControllerKind::Adaptive,
            default_basal: 0.02,
            carb_ratio: 10.0,
            // insulin in the toy plant acts without delay, so a 45-minute
            // head start overshoots into hypoglycemia; 15 minutes does not
            params: BasalBolusParams {
                pre_meal_window: 5,
                ..BasalBolusParams::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub days: f64,
    pub step_duration_s: f64,
    pub meals: Vec<Meal>,
    pub patient: PatientParams,
    pub predictor: PredictorConfig,
    pub controller: ControllerConfig,
    pub low_threshold: f64,
    pub high_threshold: f64,
    /// Same-kind hazards closer than this are counted once.
    pub merge_window_min: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            days: 7.0,
            step_duration_s: 180.0,
            meals: vec![
                Meal {
                    time_min: 7.0 * 60.0,
                    grams: 50.0,
                },
                Meal {
                    time_min: 12.5 * 60.0,
                    grams: 70.0,
                },
                Meal {
                    time_min: 19.0 * 60.0,
                    grams: 80.0,
                },
            ],
            patient: PatientParams::default(),
            predictor: PredictorConfig::default(),
            controller: ControllerConfig::default(),
            low_threshold: 70.0,
            high_threshold: 180.0,
            merge_window_min: 30.0,
        }
    }
}

impl ScenarioConfig {
    pub fn with_controller(mut self, kind: ControllerKind) -> Self {
        self.controller.kind = kind;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn step_minutes(&self) -> f64 {
        self.step_duration_s / 60.0
    }

    pub fn n_steps(&self) -> usize {
        (self.days * 86_400.0 / self.step_duration_s).round() as usize
    }

    #[allow(clippy::neg_cmp_op_on_partial_ord)] // also rejects NaN
    fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::Config(m.to_string()));
        if !(self.step_duration_s > 0.0 && self.step_duration_s.is_finite()) {
            return bad("step_duration_s must be positive");
        }
        if !(self.days > 0.0) || self.n_steps() == 0 {
            return bad("days must cover at least one step");
        }
        if self.predictor.rollouts < 2 {
            return bad("predictor.rollouts must be at least 2");
        }
        if self.predictor.horizon == 0 {
            return bad("predictor.horizon must be positive");
        }
        if !(self.predictor.epsilon > 0.0 && self.predictor.epsilon < 1.0) {
            return bad("predictor.epsilon must lie in (0, 1)");
        }
        if !(self.controller.carb_ratio > 0.0) {
            return bad("controller.carb_ratio must be positive");
        }
        if !(self.low_threshold < self.high_threshold) {
            return bad("low_threshold must be below high_threshold");
        }
        if self.meals.iter().any(|m| !(m.grams >= 0.0) || !(m.time_min >= 0.0)) {
            return bad("meal times and sizes must be non-negative");
        }
        Ok(())
    }

    /// Meal steps over the whole episode, sorted, same-step meals summed.
    pub fn meal_schedule(&self) -> Vec<(usize, f64)> {
        let per_day = (86_400.0 / self.step_duration_s).round() as usize;
        let n = self.n_steps();
        let mut out: Vec<(usize, f64)> = Vec::new();
        let days = n.div_ceil(per_day.max(1));
        for day in 0..days {
            for m in &self.meals {
                let step = day * per_day + (m.time_min * 60.0 / self.step_duration_s).round() as usize;
                if step < n {
                    out.push((step, m.grams));
                }
            }
        }
        out.sort_by_key(|m| m.0);
        out.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        out
    }

    /// `G[0,inf](BG > low)` and `G[0,inf](BG < high)` at the predictor's
    /// confidence level, read over the whole predicted horizon.
    pub fn requirements(&self) -> (Formula, Formula) {
        let eps = self.predictor.epsilon;
        let window = Interval::unbounded(0);
        (
            Formula::always(
                window,
                Formula::atom(AtomicPredicate::above(predictor::CHANNEL, eps, self.low_threshold)),
            ),
            Formula::always(
                window,
                Formula::atom(AtomicPredicate::below(predictor::CHANNEL, eps, self.high_threshold)),
            ),
        )
    }
}

/// Per-step record of an episode.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub glucose: Vec<f64>,
    pub basal: Vec<f64>,
    pub bolus: Vec<f64>,
    pub meal_grams: Vec<f64>,
    pub rho_low: Vec<RobustInterval>,
    pub rho_high: Vec<RobustInterval>,
    pub hypo_alert: Vec<bool>,
    pub hyper_alert: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hazard {
    pub kind: HazardKind,
    pub onset: usize,
    /// Earliest alert of the same kind within the prediction horizon before
    /// the onset.
    pub alert: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeReport {
    pub controller: ControllerKind,
    pub seed: u64,
    pub steps: usize,
    pub hypo_hazards: usize,
    pub hyper_hazards: usize,
    pub time_in_range: f64,
    pub time_hypo: f64,
    pub time_hyper: f64,
    /// `None` when there were no hazards. Hazards without an alert count as 0.
    pub mean_pre_alert_min: Option<f64>,
    /// Hazards preceded by an alert; 0 flags that no alert was useful.
    pub alerted_hazards: usize,
    pub total_basal: f64,
    pub total_bolus: f64,
    pub hazards: Vec<Hazard>,
}

impl EpisodeReport {
    pub fn total_hazards(&self) -> usize {
        self.hypo_hazards + self.hyper_hazards
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub report: EpisodeReport,
    pub trace: EpisodeTrace,
}

pub fn run_episode(cfg: &ScenarioConfig, par: Parallelism) -> Result<Episode, SimError> {
    cfg.validate()?;
    let n = cfg.n_steps();
    let h = cfg.predictor.horizon;
    let ctrl = &cfg.controller;
    let meals = cfg.meal_schedule();
    let (phi_low, phi_high) = cfg.requirements();

    let mut plant_rng = rng::stream(cfg.seed, rng::DOMAIN_PLANT, 0, 0);
    let mut state = cfg.patient.initial_state(ctrl.default_basal);
    let mut trace = EpisodeTrace::default();
    let mut next_meal = 0;
    let mut bolus_given = false;

    for t in 0..n {
        while next_meal < meals.len() && meals[next_meal].0 < t {
            next_meal += 1;
            bolus_given = false;
        }
        let upcoming = meals.get(next_meal).copied();
        let meal_bolus = |grams: f64| grams / ctrl.carb_ratio;

        let plan: Vec<PlannedStep> = (t..t + h)
            .map(|s| {
                let meal = meals
                    .get(next_meal..)
                    .and_then(|rest| rest.iter().find(|m| m.0 == s))
                    .map_or(0.0, |m| m.1);
                // assume every meal in view is covered at meal time unless
                // its bolus already went in
                let covered = bolus_given && upcoming.is_some_and(|u| u.0 == s);
                let planned_bolus = if meal > 0.0 && !covered {
                    meal_bolus(meal)
                } else {
                    0.0
                };
                PlannedStep {
                    action: InsulinAction {
                        basal: ctrl.default_basal,
                        bolus: planned_bolus,
                    },
                    meal_grams: meal,
                }
            })
            .collect();

        let fp = predict_flowpipe(
            &state,
            &cfg.patient,
            &plan,
            &cfg.predictor,
            cfg.step_duration_s,
            cfg.seed,
            t as u64,
            par,
        )?;
        let env = SignalEnv::new().with(fp);
        let rho_low = robustness(&phi_low, &env, 0)?;
        let rho_high = robustness(&phi_high, &env, 0)?;

        let action = match ctrl.kind {
            ControllerKind::Baseline => {
                let bolus = match upcoming {
                    Some((ms, g)) if ms == t => {
                        bolus_given = true;
                        meal_bolus(g)
                    }
                    _ => 0.0,
                };
                InsulinAction {
                    basal: ctrl.default_basal,
                    bolus,
                }
            }
            ControllerKind::Adaptive => {
                let ctx = BasalBolusContext {
                    rho_low,
                    rho_high,
                    glucose: state.glucose,
                    t,
                    meal_time: upcoming.map_or(usize::MAX, |m| m.0),
                    bolus_given: bolus_given || upcoming.is_none(),
                    default_basal: ctrl.default_basal,
                    meal_bolus: upcoming.map_or(0.0, |m| meal_bolus(m.1)),
                };
                let (action, given) = adapt_basal_bolus(&ctx, &ctrl.params);
                if upcoming.is_some() {
                    bolus_given = given;
                }
                action
            }
        };

        let meal_now = match upcoming {
            Some((ms, g)) if ms == t => g,
            _ => 0.0,
        };
        trace.glucose.push(state.glucose);
        trace.basal.push(action.basal);
        trace.bolus.push(action.bolus);
        trace.meal_grams.push(meal_now);
        trace.rho_low.push(rho_low);
        trace.rho_high.push(rho_high);
        trace.hypo_alert.push(rho_low.lower <= 0.0);
        trace.hyper_alert.push(rho_high.lower <= 0.0);

        let noise: f64 = plant_rng.sample(StandardNormal);
        state = plant_step(&state, &cfg.patient, &action, meal_now, noise);
    }

    let report = summarize(cfg, &trace);
    Ok(Episode { report, trace })
}

fn summarize(cfg: &ScenarioConfig, trace: &EpisodeTrace) -> EpisodeReport {
    use hazards::{classify, first_alert, Range};

    let n = trace.glucose.len();
    let (low, high) = (cfg.low_threshold, cfg.high_threshold);
    let mut counts = [0usize; 3];
    for &g in &trace.glucose {
        counts[match classify(g, low, high) {
            Range::Low => 0,
            Range::In => 1,
            Range::High => 2,
        }] += 1;
    }
    let frac = |c: usize| c as f64 / n as f64;

    let gap = (cfg.merge_window_min / cfg.step_minutes()).floor() as usize;
    let raw = detect_hazards(&trace.glucose, low, high);
    let merged = merge_hazards(&raw, gap).expect("detected hazards are ordered");
    let lookback = cfg.predictor.horizon;
    let hazards: Vec<Hazard> = merged
        .iter()
        .map(|e| {
            let alerts = match e.kind {
                HazardKind::Hypo => &trace.hypo_alert,
                HazardKind::Hyper => &trace.hyper_alert,
            };
            Hazard {
                kind: e.kind,
                onset: e.onset,
                alert: first_alert(alerts, e.onset, lookback),
            }
        })
        .collect();

    let lead: Vec<f64> = hazards
        .iter()
        .map(|hz| hz.alert.map_or(0.0, |a| (hz.onset - a) as f64 * cfg.step_minutes()))
        .collect();
    let mean_pre_alert_min = if hazards.is_empty() {
        None
    } else {
        Some(lead.iter().sum::<f64>() / lead.len() as f64)
    };

    EpisodeReport {
        controller: cfg.controller.kind,
        seed: cfg.seed,
        steps: n,
        hypo_hazards: hazards.iter().filter(|h| h.kind == HazardKind::Hypo).count(),
        hyper_hazards: hazards.iter().filter(|h| h.kind == HazardKind::Hyper).count(),
        time_in_range: frac(counts[1]),
        time_hypo: frac(counts[0]),
        time_hyper: frac(counts[2]),
        mean_pre_alert_min,
        alerted_hazards: hazards.iter().filter(|h| h.alert.is_some()).count(),
        total_basal: trace.basal.iter().sum(),
        total_bolus: trace.bolus.iter().sum(),
        hazards,
    }
}

/// Run several scenarios; episodes are spread over the pool, rollouts inside
/// each episode use the same strategy.
pub fn run_many(cfgs: &[ScenarioConfig], par: Parallelism) -> Vec<Result<Episode, SimError>> {
    par.map(cfgs, |c| run_episode(c, par))
}
