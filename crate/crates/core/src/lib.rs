//! Quantitative predictive monitoring over uncertain signals.
//!
//! Monte Carlo samples become per-step confidence intervals ([`signal`]),
//! temporal formulas over them are parsed by [`logic`], [`monitor`] computes
//! robustness intervals and strong/weak verdicts, [`calibration`] ranks
//! predictor configurations, [`control`] turns robustness into actions and
//! [`simloop`] closes the loop on a toy glucose plant.

pub mod calibration;
pub mod control;
pub mod exec;
pub mod logic;
pub mod monitor;
pub mod rng;
pub mod schema;
pub mod signal;
pub mod simloop;

pub use exec::Parallelism;
pub use logic::{parse, Formula};
pub use monitor::{robustness, RobustInterval, SignalEnv, Verdict};
pub use signal::{Flowpipe, SampleSet, Trace};
