//! Scoring prediction flowpipes against ground truth, and choosing the
//! prediction configuration with the smallest loss.
//!
//! The loss combines a satisfaction term and a distance term:
//!
//! ```text
//! loss = -beta * eta_r + (1 - beta) * eta_d
//! ```
//!
//! `eta_r` rewards a flowpipe whose worst case agrees with a satisfying
//! target (its lower robustness bound) and whose best case stays negative for
//! a violating target (minus its upper bound). `eta_d` sums how far the target
//! steps outside the flowpipe.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Parallelism;
use crate::logic::Formula;
use crate::monitor::{robustness, trace_robustness, MonitorError, RobustInterval, SignalEnv};
use crate::signal::{Flowpipe, Trace};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error(transparent)]
    Monitor(#[from] MonitorError),
    #[error("target has {target} steps but the flowpipe only {flowpipe}")]
    TargetTooLong { target: usize, flowpipe: usize },
    #[error("candidate `{label}` has {got} flowpipes for {expected} targets")]
    Misaligned {
        label: String,
        got: usize,
        expected: usize,
    },
    #[error("beta {0} is outside [0, 1]")]
    Beta(f64),
    #[error("no candidates or targets to evaluate")]
    Empty,
}

pub type Result<T, E = CalibrationError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub beta: f64,
    pub epsilon: f64,
}

impl LossConfig {
    pub fn new(beta: f64, epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(CalibrationError::Beta(beta));
        }
        Ok(Self { beta, epsilon })
    }
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            beta: 0.5,
            epsilon: 0.95,
        }
    }
}

/// A labelled prediction source with one flowpipe per validation target.
#[derive(Debug, Clone)]
pub struct CandidateConfig {
    pub label: String,
    pub flowpipes: Vec<Flowpipe>,
}

fn env_for(flowpipe: &Flowpipe) -> SignalEnv {
    let mut env = SignalEnv::new();
    env.insert_for_all_epsilons(flowpipe.clone());
    env
}

/// Robustness interval of `flowpipe` at step 0, the flowpipe answering for
/// every confidence level of its channel.
pub fn flowpipe_robustness(flowpipe: &Flowpipe, formula: &Formula) -> Result<RobustInterval> {
    Ok(robustness(formula, &env_for(flowpipe), 0)?)
}

/// Whether the target trace satisfies `formula` at step 0 (strictly positive
/// single-trace robustness).
pub fn target_satisfies(target: &Trace, formula: &Formula) -> Result<bool> {
    Ok(trace_robustness(formula, target, 0)? > 0.0)
}

pub fn eta_r(flowpipe: &Flowpipe, target: &Trace, formula: &Formula) -> Result<f64> {
    let r = flowpipe_robustness(flowpipe, formula)?;
    Ok(if target_satisfies(target, formula)? {
        r.lower
    } else {
        -r.upper
    })
}

pub fn eta_d(flowpipe: &Flowpipe, target: &Trace) -> Result<f64> {
    if target.len() > flowpipe.len() {
        return Err(CalibrationError::TargetTooLong {
            target: target.len(),
            flowpipe: flowpipe.len(),
        });
    }
    Ok(target
        .values()
        .iter()
        .zip(flowpipe.steps())
        .map(|(&x, b)| {
            if x < b.lower {
                b.lower - x
            } else if x > b.upper {
                x - b.upper
            } else {
                0.0
            }
        })
        .sum())
}

pub fn loss_qt(flowpipe: &Flowpipe, target: &Trace, formula: &Formula, cfg: &LossConfig) -> Result<f64> {
    let r = eta_r(flowpipe, target, formula)?;
    let d = eta_d(flowpipe, target)?;
    Ok(combine(cfg.beta, r, d))
}

#[inline]
/// `−β·eta_r + (1 − β)·eta_d`
pub fn combine(beta: f64, eta_r: f64, eta_d: f64) -> f64 {
    -beta * eta_r + (1.0 - beta) * eta_d
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn record(&mut self, target_ok: bool, predicted_ok: bool) {
        match (target_ok, predicted_ok) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (true, false) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    /// `TP / (TP + (FP + FN) / 2)`; 0 when there are no positives at all.
    pub fn f1(&self) -> f64 {
        let denom = self.tp as f64 + 0.5 * (self.fp + self.fn_) as f64;
        if denom == 0.0 {
            0.0
        } else {
            self.tp as f64 / denom
        }
    }
}

/// Confusion counts of "flowpipe lower bound > 0" against "target satisfies".
pub fn confusion(pairs: &[(Trace, Flowpipe)], formula: &Formula) -> Result<Confusion> {
    if pairs.is_empty() {
        return Err(CalibrationError::Empty);
    }
    let mut c = Confusion::default();
    for (target, flowpipe) in pairs {
        let predicted = flowpipe_robustness(flowpipe, formula)?.lower > 0.0;
        c.record(target_satisfies(target, formula)?, predicted);
    }
    Ok(c)
}

pub fn f1_satisfaction(pairs: &[(Trace, Flowpipe)], formula: &Formula) -> Result<f64> {
    Ok(confusion(pairs, formula)?.f1())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedConfig {
    pub label: String,
    pub mean_loss: f64,
    pub f1: f64,
}

struct SampleScore {
    loss: f64,
    target_ok: bool,
    predicted_ok: bool,
}

fn score(flowpipe: &Flowpipe, target: &Trace, formula: &Formula, beta: f64) -> Result<SampleScore> {
    let r = flowpipe_robustness(flowpipe, formula)?;
    let target_ok = target_satisfies(target, formula)?;
    let er = if target_ok { r.lower } else { -r.upper };
    let ed = eta_d(flowpipe, target)?;
    Ok(SampleScore {
        loss: combine(beta, er, ed),
        target_ok,
        predicted_ok: r.lower > 0.0,
    })
}

/// Rank candidates by mean loss over the targets (ascending, ties by label).
///
/// All `(candidate, target)` pairs are scored independently; per-candidate
/// sums are taken in target order so the result does not depend on `par`.
pub fn select_config(
    candidates: &[CandidateConfig],
    targets: &[Trace],
    formula: &Formula,
    cfg: &LossConfig,
    par: Parallelism,
) -> Result<Vec<RankedConfig>> {
    if candidates.is_empty() || targets.is_empty() {
        return Err(CalibrationError::Empty);
    }
    for c in candidates {
        if c.flowpipes.len() != targets.len() {
            return Err(CalibrationError::Misaligned {
                label: c.label.clone(),
                got: c.flowpipes.len(),
                expected: targets.len(),
            });
        }
    }
    let n = targets.len();
    let scores = par.map_range(candidates.len() * n, |k| {
        let (ci, ti) = (k / n, k % n);
        score(&candidates[ci].flowpipes[ti], &targets[ti], formula, cfg.beta)
    });
    let scores: Vec<SampleScore> = scores.into_iter().collect::<Result<_>>()?;
    let mut ranking: Vec<RankedConfig> = candidates
        .iter()
        .zip(scores.chunks(n))
        .map(|(c, chunk)| {
            let mut conf = Confusion::default();
            let mut sum = 0.0;
            for s in chunk {
                sum += s.loss;
                conf.record(s.target_ok, s.predicted_ok);
            }
            RankedConfig {
                label: c.label.clone(),
                mean_loss: sum / n as f64,
                f1: conf.f1(),
            }
        })
        .collect();
    ranking.sort_by(|a, b| {
        a.mean_loss
            .partial_cmp(&b.mean_loss)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.label.cmp(&b.label))
    });
    Ok(ranking)
}
