//! The formula language: abstract syntax, concrete syntax and horizons.
//!
//! ```text
//! G[0,3](BG{0.90} > 70)            always, within steps 0..=3
//! G[0,inf](70 < BG{0.95} < 180)    unbounded window, chained comparison
//! F[2,5] !(x{0.9} > 1) & y{0.9} < 2
//! (a{0.9} > 0) U[0,10] (b{0.9} > 0)
//! ```
//!
//! Every signal occurrence carries its confidence level in braces. Predicates
//! are affine, `f(x) = slope·x + offset > 0`; comparisons are rewritten into
//! that form at parse time.

mod parser;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

pub use parser::parse;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LogicError {
    #[error("syntax error at {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("confidence level {value} at {pos} is outside (0, 1)")]
    Confidence { pos: usize, value: f64 },
    #[error("interval [{lo}, {hi}] at {pos} has lo > hi")]
    Interval { pos: usize, lo: usize, hi: usize },
    #[error("predicate at {pos} does not depend on any signal")]
    ConstantPredicate { pos: usize },
    #[error("predicate at {pos} mixes signals `{first}` and `{second}`")]
    MixedSignals {
        pos: usize,
        first: String,
        second: String,
    },
    #[error("interval bound {value} is not a whole number of steps")]
    Unit { value: f64 },
}

/// Discrete time window `[lo, hi]` in steps; `hi = None` is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: usize,
    pub hi: Option<usize>,
}

impl Interval {
    pub fn bounded(lo: usize, hi: usize) -> Self {
        assert!(lo <= hi, "interval lower bound exceeds upper bound");
        Self { lo, hi: Some(hi) }
    }

    pub fn unbounded(lo: usize) -> Self {
        Self { lo, hi: None }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.hi {
            Some(hi) => write!(f, "[{},{}]", self.lo, hi),
            None => write!(f, "[{},inf]", self.lo),
        }
    }
}

/// `slope·x + offset > 0` over the signal `channel` at confidence `epsilon`.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicPredicate {
    pub channel: String,
    pub slope: f64,
    pub offset: f64,
    pub epsilon: f64,
}

impl AtomicPredicate {
    /// `channel > threshold`
    pub fn above(channel: impl Into<String>, epsilon: f64, threshold: f64) -> Self {
        Self {
            channel: channel.into(),
            slope: 1.0,
            offset: -threshold,
            epsilon,
        }
    }

    /// `channel < threshold`
    pub fn below(channel: impl Into<String>, epsilon: f64, threshold: f64) -> Self {
        Self {
            channel: channel.into(),
            slope: -1.0,
            offset: threshold,
            epsilon,
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.slope * x + self.offset
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    Atom(AtomicPredicate),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    /// Sugar for `!(!a & !b)`; the monitors evaluate it as exactly that.
    Or(Box<Formula>, Box<Formula>),
    Always(Interval, Box<Formula>),
    Eventually(Interval, Box<Formula>),
    Until(Interval, Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn atom(p: AtomicPredicate) -> Self {
        Formula::Atom(p)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        Formula::Not(Box::new(self))
    }

    pub fn and(self, rhs: Formula) -> Self {
        Formula::And(Box::new(self), Box::new(rhs))
    }

    pub fn or(self, rhs: Formula) -> Self {
        Formula::Or(Box::new(self), Box::new(rhs))
    }

    pub fn always(interval: Interval, body: Formula) -> Self {
        Formula::Always(interval, Box::new(body))
    }

    pub fn eventually(interval: Interval, body: Formula) -> Self {
        Formula::Eventually(interval, Box::new(body))
    }

    pub fn until(interval: Interval, lhs: Formula, rhs: Formula) -> Self {
        Formula::Until(interval, Box::new(lhs), Box::new(rhs))
    }

    /// Replace every `Or` by its `!(!a & !b)` expansion.
    pub fn desugar(&self) -> Formula {
        match self {
            Formula::Atom(_) => self.clone(),
            Formula::Not(a) => a.desugar().not(),
            Formula::And(a, b) => a.desugar().and(b.desugar()),
            Formula::Or(a, b) => a.desugar().not().and(b.desugar().not()).not(),
            Formula::Always(i, a) => Formula::always(*i, a.desugar()),
            Formula::Eventually(i, a) => Formula::eventually(*i, a.desugar()),
            Formula::Until(i, a, b) => Formula::until(*i, a.desugar(), b.desugar()),
        }
    }

    /// Number of steps beyond `t` the formula looks at.
    pub fn horizon(&self) -> Horizon {
        match self {
            Formula::Atom(_) => Horizon::Finite(0),
            Formula::Not(a) => a.horizon(),
            Formula::And(a, b) | Formula::Or(a, b) => a.horizon().max(b.horizon()),
            Formula::Always(i, a) | Formula::Eventually(i, a) => Horizon::of(i) + a.horizon(),
            Formula::Until(i, a, b) => Horizon::of(i) + a.horizon().max(b.horizon()),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::Atom(_) => 0,
            Formula::Not(a) | Formula::Always(_, a) | Formula::Eventually(_, a) => 1 + a.depth(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(_, a, b) => {
                1 + a.depth().max(b.depth())
            }
        }
    }

    pub fn atoms(&self) -> Vec<&AtomicPredicate> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a AtomicPredicate>) {
        match self {
            Formula::Atom(p) => out.push(p),
            Formula::Not(a) | Formula::Always(_, a) | Formula::Eventually(_, a) => {
                a.collect_atoms(out)
            }
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(_, a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    /// Distinct `(channel, epsilon)` pairs referenced by the atoms, sorted.
    pub fn signals(&self) -> Vec<(String, f64)> {
        let set: BTreeSet<(String, u64)> = self
            .atoms()
            .into_iter()
            .map(|p| (p.channel.clone(), p.epsilon.to_bits()))
            .collect();
        set.into_iter()
            .map(|(c, bits)| (c, f64::from_bits(bits)))
            .collect()
    }

    pub fn has_negation(&self) -> bool {
        match self {
            Formula::Atom(_) => false,
            Formula::Not(_) | Formula::Or(..) => true,
            Formula::Always(_, a) | Formula::Eventually(_, a) => a.has_negation(),
            Formula::And(a, b) | Formula::Until(_, a, b) => a.has_negation() || b.has_negation(),
        }
    }

    /// Reinterpret interval bounds written in units of `unit_seconds` as
    /// steps of `step_seconds`. Every bound must land on a whole step.
    pub fn rescale_intervals(&self, unit_seconds: f64, step_seconds: f64) -> Result<Formula, LogicError> {
        let factor = unit_seconds / step_seconds;
        let conv = |v: usize| -> Result<usize, LogicError> {
            let x = v as f64 * factor;
            let r = x.round();
            if (x - r).abs() > 1e-9 * x.abs().max(1.0) || r < 0.0 {
                return Err(LogicError::Unit { value: x });
            }
            Ok(r as usize)
        };
        let iv = |i: &Interval| -> Result<Interval, LogicError> {
            Ok(Interval {
                lo: conv(i.lo)?,
                hi: i.hi.map(conv).transpose()?,
            })
        };
        Ok(match self {
            Formula::Atom(_) => self.clone(),
            Formula::Not(a) => a.rescale_intervals(unit_seconds, step_seconds)?.not(),
            Formula::And(a, b) => a
                .rescale_intervals(unit_seconds, step_seconds)?
                .and(b.rescale_intervals(unit_seconds, step_seconds)?),
            Formula::Or(a, b) => a
                .rescale_intervals(unit_seconds, step_seconds)?
                .or(b.rescale_intervals(unit_seconds, step_seconds)?),
            Formula::Always(i, a) => {
                Formula::always(iv(i)?, a.rescale_intervals(unit_seconds, step_seconds)?)
            }
            Formula::Eventually(i, a) => {
                Formula::eventually(iv(i)?, a.rescale_intervals(unit_seconds, step_seconds)?)
            }
            Formula::Until(i, a, b) => Formula::until(
                iv(i)?,
                a.rescale_intervals(unit_seconds, step_seconds)?,
                b.rescale_intervals(unit_seconds, step_seconds)?,
            ),
        })
    }
}

/// Fully parenthesised text that [`parse`] maps back to the same tree.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(p) => {
                if p.slope == 1.0 {
                    write!(f, "{}{{{}}} > {}", p.channel, p.epsilon, -p.offset)
                } else if p.slope == -1.0 {
                    write!(f, "{}{{{}}} < {}", p.channel, p.epsilon, p.offset)
                } else {
                    write!(
                        f,
                        "{}*{}{{{}}} + {} > 0",
                        p.slope, p.channel, p.epsilon, p.offset
                    )
                }
            }
            Formula::Not(a) => write!(f, "!({a})"),
            Formula::And(a, b) => write!(f, "({a}) & ({b})"),
            Formula::Or(a, b) => write!(f, "({a}) | ({b})"),
            Formula::Always(i, a) => write!(f, "G{i}({a})"),
            Formula::Eventually(i, a) => write!(f, "F{i}({a})"),
            Formula::Until(i, a, b) => write!(f, "({a}) U{i} ({b})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Horizon {
    Finite(usize),
    Infinite,
}

impl Horizon {
    fn of(i: &Interval) -> Self {
        i.hi.map_or(Horizon::Infinite, Horizon::Finite)
    }

    pub fn finite(self) -> Option<usize> {
        match self {
            Horizon::Finite(n) => Some(n),
            Horizon::Infinite => None,
        }
    }
}

impl std::ops::Add for Horizon {
    type Output = Horizon;

    fn add(self, rhs: Horizon) -> Horizon {
        match (self, rhs) {
            (Horizon::Finite(a), Horizon::Finite(b)) => Horizon::Finite(a.saturating_add(b)),
            _ => Horizon::Infinite,
        }
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Horizon::Finite(n) => write!(f, "{n}"),
            Horizon::Infinite => f.write_str("inf"),
        }
    }
}
