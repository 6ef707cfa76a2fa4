//! Monitoring formulas over flowpipes.
//!
//! [`robustness`] computes the robustness degree interval: the lower bound is
//! the worst case over every trace inside the flowpipe, the upper bound the
//! best case. [`verdict`] is an independent boolean monitor for strong (all
//! contained values) and weak (some contained value) satisfaction. A positive
//! lower bound implies strong satisfaction, a positive upper bound weak
//! satisfaction, and non-positive bounds imply the respective violations.
//!
//! Windows `t + [lo, hi]` are inclusive step ranges. Unbounded windows are
//! clipped to the last step shared by every flowpipe the formula reads.

mod boolean;
mod env;
mod interval;
mod quantitative;

pub use boolean::verdict;
pub use env::SignalEnv;
pub use interval::{max_star, min_star, neg_star, RobustInterval};
pub use quantitative::{robustness, robustness_window};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Parallelism;
use crate::logic::Formula;
use crate::signal::{trace_as_flowpipe, Trace};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MonitorError {
    #[error("no flowpipe registered for signal `{channel}` at confidence {epsilon}")]
    MissingSignal { channel: String, epsilon: f64 },
    #[error("formula needs step {needed} but the signal has only {available} steps")]
    Horizon { needed: usize, available: usize },
}

pub type Result<T, E = MonitorError> = std::result::Result<T, E>;

/// Paired strong/weak satisfaction flags; `strong` implies `weak`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub strong: bool,
    pub weak: bool,
}

impl Verdict {
    /// Flags implied by a robustness interval.
    pub fn from_robustness(r: RobustInterval) -> Self {
        Self {
            strong: r.lower > 0.0,
            weak: r.upper > 0.0,
        }
    }
}

/// Classic robustness of a single trace.
///
/// The trace stands in for every `(channel, epsilon)` pair of its channel and
/// is evaluated as a zero-width flowpipe, so both interval bounds coincide.
pub fn trace_robustness(formula: &Formula, trace: &Trace, t: usize) -> Result<f64> {
    let mut env = SignalEnv::new();
    env.insert_for_all_epsilons(trace_as_flowpipe(trace));
    let r = robustness(formula, &env, t)?;
    debug_assert_eq!(r.lower, r.upper);
    Ok(r.lower)
}

/// Evaluate one formula against many environments.
pub fn robustness_batch(
    formula: &Formula,
    envs: &[SignalEnv],
    t: usize,
    par: Parallelism,
) -> Vec<Result<RobustInterval>> {
    par.map(envs, |env| robustness(formula, env, t))
}
