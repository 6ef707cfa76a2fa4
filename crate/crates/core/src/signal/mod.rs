//! Uncertain signals: Monte Carlo sample sets, per-step Gaussian fits and the
//! flowpipes built from them.
//!
//! A [`SampleSet`] holds `N` Monte Carlo runs of a predictor over `T` steps.
//! [`fit_gaussians`] summarises each step by its sample mean and standard
//! deviation, and [`to_flowpipe`] turns those into symmetric confidence
//! intervals at a confidence level `epsilon`. A single ground-truth [`Trace`]
//! can be lifted into a zero-width flowpipe with [`trace_as_flowpipe`] so the
//! same monitor scores both.

mod io;
mod quantile;

pub use io::{load_samples, load_trace, read_flowpipe_json, write_flowpipe_json, Format};
pub use quantile::inverse_normal_cdf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("insufficient samples: need at least 2 runs, have {0}")]
    InsufficientSamples(usize),
    #[error("empty signal: at least one time step is required")]
    Empty,
    #[error("non-finite value at run {run}, step {step}")]
    NonFinite { run: usize, step: usize },
    #[error("ragged sample matrix: run {run} has {len} steps, expected {expected}")]
    Ragged { run: usize, len: usize, expected: usize },
    #[error("confidence level {0} is outside (0, 1)")]
    Confidence(f64),
    #[error("probability {0} is outside (0, 1)")]
    Probability(f64),
    #[error("step {step}: lower bound {lower} exceeds upper bound {upper}")]
    Inverted { step: usize, lower: f64, upper: f64 },
    #[error("step duration must be positive and finite, got {0}")]
    StepDuration(f64),
    #[error("{path}: line {line}, column {column}: {message}")]
    Parse {
        path: String,
        line: u64,
        column: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Shape { path: String, message: String },
    #[error("{path}: line {line}, column {column}: non-finite value `{raw}`")]
    Value {
        path: String,
        line: u64,
        column: usize,
        raw: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = SignalError> = std::result::Result<T, E>;

fn check_step_duration(step_duration: f64) -> Result<()> {
    if step_duration.is_finite() && step_duration > 0.0 {
        Ok(())
    } else {
        Err(SignalError::StepDuration(step_duration))
    }
}

/// `N` Monte Carlo runs over `T` time steps, stored run-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    runs: Vec<Vec<f64>>,
    step_duration: f64,
    channel: String,
}

impl SampleSet {
    pub fn new(
        channel: impl Into<String>,
        step_duration: f64,
        runs: Vec<Vec<f64>>,
    ) -> Result<Self> {
        check_step_duration(step_duration)?;
        if runs.len() < 2 {
            return Err(SignalError::InsufficientSamples(runs.len()));
        }
        let len = runs[0].len();
        if len == 0 {
            return Err(SignalError::Empty);
        }
        for (run, values) in runs.iter().enumerate() {
            if values.len() != len {
                return Err(SignalError::Ragged {
                    run,
                    len: values.len(),
                    expected: len,
                });
            }
            if let Some(step) = values.iter().position(|v| !v.is_finite()) {
                return Err(SignalError::NonFinite { run, step });
            }
        }
        Ok(Self {
            runs,
            step_duration,
            channel: channel.into(),
        })
    }

    pub fn n_runs(&self) -> usize {
        self.runs.len()
    }

    pub fn n_steps(&self) -> usize {
        self.runs[0].len()
    }

    pub fn runs(&self) -> &[Vec<f64>] {
        &self.runs
    }

    pub fn channel(&self) -> &str {
        &self.channel
    }

    pub fn step_duration(&self) -> f64 {
        self.step_duration
    }
}

/// Per-step normal summary of the Monte Carlo samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianStep {
    pub mean: f64,
    pub std: f64,
}

/// Sample mean and standard deviation (`N - 1` denominator) for every step.
pub fn fit_gaussians(samples: &SampleSet) -> Vec<GaussianStep> {
    let n = samples.n_runs() as f64;
    (0..samples.n_steps())
        .map(|step| {
            let column = samples.runs.iter().map(|run| run[step]);
            let mean = column.clone().sum::<f64>() / n;
            let ss: f64 = column.map(|x| (x - mean) * (x - mean)).sum();
            GaussianStep {
                mean,
                std: (ss / (n - 1.0)).sqrt(),
            }
        })
        .collect()
}

/// One step of a flowpipe: the closed interval `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Bounds {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// A discrete-time signal whose value at every step is a confidence interval.
///
/// `epsilon` is the confidence level the intervals were built at. Zero-width
/// flowpipes lifted from a single trace record `epsilon = 1.0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Flowpipe {
    steps: Vec<Bounds>,
    epsilon: f64,
    channel: String,
    step_duration: f64,
}

impl Flowpipe {
    pub fn new(
        channel: impl Into<String>,
        epsilon: f64,
        step_duration: f64,
        steps: Vec<Bounds>,
    ) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(SignalError::Confidence(epsilon));
        }
        check_step_duration(step_duration)?;
        if steps.is_empty() {
            return Err(SignalError::Empty);
        }
        for (step, b) in steps.iter().enumerate() {
            if !b.lower.is_finite() || !b.upper.is_finite() {
                return Err(SignalError::NonFinite { run: 0, step });
            }
            if b.lower > b.upper {
                return Err(SignalError::Inverted {
                    step,
                    lower: b.lower,
                    upper: b.upper,
                });
            }
        }
        Ok(Self {
            steps,
            epsilon,
            channel: channel.into(),
            step_duration,
        })
    }

    /// Convenience constructor from `(lower, upper)` pairs.
    pub fn from_pairs(
        channel: impl Into<String>,
        epsilon: f64,
        step_duration: f64,
        pairs: &[(f64, f64)],
    ) -> Result<Self> {
        let steps = pairs
            .iter()
            .map(|&(lower, upper)| Bounds { lower, upper })
            .collect();
        Self::new(channel, epsilon, step_duration, steps)
    }

    pub fn steps(&self) -> &[Bounds] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn channel(&self) -> &str {
        &self.channel
    }

    pub fn step_duration(&self) -> f64 {
        self.step_duration
    }

    pub fn lower_trace(&self) -> Trace {
        Trace {
            values: self.steps.iter().map(|b| b.lower).collect(),
            channel: self.channel.clone(),
            step_duration: self.step_duration,
        }
    }

    pub fn upper_trace(&self) -> Trace {
        Trace {
            values: self.steps.iter().map(|b| b.upper).collect(),
            channel: self.channel.clone(),
            step_duration: self.step_duration,
        }
    }
}

/// A single real-valued trace, e.g. the ground truth a prediction is scored
/// against.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    values: Vec<f64>,
    channel: String,
    step_duration: f64,
}

impl Trace {
    pub fn new(channel: impl Into<String>, step_duration: f64, values: Vec<f64>) -> Result<Self> {
        check_step_duration(step_duration)?;
        if let Some(step) = values.iter().position(|v| !v.is_finite()) {
            return Err(SignalError::NonFinite { run: 0, step });
        }
        Ok(Self {
            values,
            channel: channel.into(),
            step_duration,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn channel(&self) -> &str {
        &self.channel
    }

    pub fn step_duration(&self) -> f64 {
        self.step_duration
    }
}

/// Two-sided symmetric interval `mean ± z·std` with `z = Φ⁻¹((1 + ε) / 2)`.
pub fn to_flowpipe(
    gaussians: &[GaussianStep],
    epsilon: f64,
    channel: impl Into<String>,
    step_duration: f64,
) -> Result<Flowpipe> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(SignalError::Confidence(epsilon));
    }
    let z = inverse_normal_cdf((1.0 + epsilon) / 2.0)?;
    let steps = gaussians
        .iter()
        .map(|g| Bounds {
            lower: g.mean - z * g.std,
            upper: g.mean + z * g.std,
        })
        .collect();
    Flowpipe::new(channel, epsilon, step_duration, steps)
}

/// Fit and build in one go, keeping the sample set's channel and timing.
pub fn samples_to_flowpipe(samples: &SampleSet, epsilon: f64) -> Result<Flowpipe> {
    to_flowpipe(
        &fit_gaussians(samples),
        epsilon,
        samples.channel(),
        samples.step_duration(),
    )
}

pub fn trace_as_flowpipe(trace: &Trace) -> Flowpipe {
    Flowpipe {
        steps: trace
            .values
            .iter()
            .map(|&v| Bounds { lower: v, upper: v })
            .collect(),
        epsilon: 1.0,
        channel: trace.channel.clone(),
        step_duration: trace.step_duration,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(columns: &[&[f64]]) -> SampleSet {
        // columns[step][run] -> run-major
        let n = columns[0].len();
        let runs = (0..n)
            .map(|r| columns.iter().map(|c| c[r]).collect())
            .collect();
        SampleSet::new("BG", 180.0, runs).unwrap()
    }

    #[test]
    fn constant_samples_have_zero_std() {
        let g = fit_gaussians(&set(&[&[1.0, 1.0, 1.0]]));
        assert_eq!(g, vec![GaussianStep { mean: 1.0, std: 0.0 }]);
    }

    #[test]
    fn two_samples_use_unbiased_denominator() {
        let g = fit_gaussians(&set(&[&[0.0, 2.0]]));
        assert_eq!(g[0].mean, 1.0);
        assert!((g[0].std - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn four_samples_match_hand_arithmetic() {
        let g = fit_gaussians(&set(&[&[60.0, 70.0, 80.0, 90.0]]));
        // squared deviations 225 + 25 + 25 + 225 = 500; 500 / 3
        let expected = (500.0f64 / 3.0).sqrt();
        assert_eq!(g[0].mean, 75.0);
        assert!((g[0].std - expected).abs() < 1e-12);
        assert!((g[0].std - 12.9099).abs() < 1e-4);
    }

    #[test]
    fn single_run_is_rejected() {
        let err = SampleSet::new("BG", 1.0, vec![vec![1.0, 2.0]]).unwrap_err();
        assert!(matches!(err, SignalError::InsufficientSamples(1)));
    }

    #[test]
    fn ragged_and_non_finite_runs_are_rejected() {
        let err = SampleSet::new("BG", 1.0, vec![vec![1.0, 2.0], vec![1.0]]).unwrap_err();
        assert!(matches!(err, SignalError::Ragged { run: 1, .. }));
        let err = SampleSet::new("BG", 1.0, vec![vec![1.0], vec![f64::NAN]]).unwrap_err();
        assert!(matches!(err, SignalError::NonFinite { run: 1, step: 0 }));
    }

    #[test]
    fn zero_variance_gives_point_interval() {
        for eps in [0.1, 0.5, 0.95, 0.999] {
            let fp = to_flowpipe(&[GaussianStep { mean: 75.0, std: 0.0 }], eps, "BG", 1.0).unwrap();
            assert_eq!(fp.steps()[0], Bounds { lower: 75.0, upper: 75.0 });
        }
    }

    #[test]
    fn standard_normal_at_95_percent() {
        let fp = to_flowpipe(&[GaussianStep { mean: 0.0, std: 1.0 }], 0.95, "x", 1.0).unwrap();
        let b = fp.steps()[0];
        assert!((b.lower + 1.95996).abs() < 1e-4);
        assert!((b.upper - 1.95996).abs() < 1e-4);
    }

    #[test]
    fn larger_confidence_strictly_widens() {
        let g = [GaussianStep { mean: 3.0, std: 0.5 }];
        let narrow = to_flowpipe(&g, 0.8, "x", 1.0).unwrap().steps()[0];
        let wide = to_flowpipe(&g, 0.9, "x", 1.0).unwrap().steps()[0];
        assert!(wide.lower < narrow.lower && narrow.upper < wide.upper);
    }

    #[test]
    fn confidence_outside_unit_interval_is_rejected() {
        let g = [GaussianStep { mean: 0.0, std: 1.0 }];
        for eps in [0.0, 1.0, -0.5, 1.5, f64::NAN] {
            assert!(to_flowpipe(&g, eps, "x", 1.0).is_err());
        }
    }

    #[test]
    fn trace_lifts_to_degenerate_flowpipe() {
        let trace = Trace::new("BG", 180.0, vec![70.0, 80.0]).unwrap();
        let fp = trace_as_flowpipe(&trace);
        assert_eq!(
            fp.steps(),
            &[
                Bounds { lower: 70.0, upper: 70.0 },
                Bounds { lower: 80.0, upper: 80.0 }
            ]
        );
        assert_eq!(fp.epsilon(), 1.0);
        assert_eq!(fp.lower_trace(), trace);
        assert_eq!(fp.upper_trace(), trace);
    }

    #[test]
    fn coverage_of_ten_thousand_standard_normals() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let runs: Vec<Vec<f64>> = (0..10_000)
            .map(|_| vec![StandardNormal.sample(&mut rng)])
            .collect();
        let samples = SampleSet::new("x", 1.0, runs).unwrap();
        let fp = samples_to_flowpipe(&samples, 0.95).unwrap();
        let b = fp.steps()[0];
        let inside = samples.runs().iter().filter(|r| b.contains(r[0])).count();
        let frac = inside as f64 / 10_000.0;
        assert!((0.93..=0.97).contains(&frac), "coverage {frac}");
    }
}
