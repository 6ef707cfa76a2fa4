use std::collections::HashMap;

use super::{MonitorError, Result};
use crate::logic::Formula;
use crate::signal::Flowpipe;

/// Flowpipes available to a formula, keyed by `(channel, epsilon)`.
///
/// A flowpipe registered with [`SignalEnv::insert_for_all_epsilons`] answers
/// for its channel at any confidence level; exact entries take precedence.
#[derive(Debug, Clone, Default)]
pub struct SignalEnv {
    exact: HashMap<(String, u64), Flowpipe>,
    any: HashMap<String, Flowpipe>,
}

impl SignalEnv {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, flowpipe: Flowpipe) -> Option<Flowpipe> {
        let key = (flowpipe.channel().to_string(), flowpipe.epsilon().to_bits());
        self.exact.insert(key, flowpipe)
    }

    pub fn insert_for_all_epsilons(&mut self, flowpipe: Flowpipe) -> Option<Flowpipe> {
        self.any.insert(flowpipe.channel().to_string(), flowpipe)
    }

    pub fn with(mut self, flowpipe: Flowpipe) -> Self {
        self.insert(flowpipe);
        self
    }

    pub fn get(&self, channel: &str, epsilon: f64) -> Option<&Flowpipe> {
        self.exact
            .get(&(channel.to_string(), epsilon.to_bits()))
            .or_else(|| self.any.get(channel))
    }

    pub fn lookup(&self, channel: &str, epsilon: f64) -> Result<&Flowpipe> {
        self.get(channel, epsilon)
            .ok_or_else(|| MonitorError::MissingSignal {
                channel: channel.to_string(),
                epsilon,
            })
    }

    /// `(channel, epsilon)` pairs of `formula` with no flowpipe.
    pub fn missing(&self, formula: &Formula) -> Vec<(String, f64)> {
        formula
            .signals()
            .into_iter()
            .filter(|(c, e)| self.get(c, *e).is_none())
            .collect()
    }

    pub fn channels(&self) -> impl Iterator<Item = &Flowpipe> {
        self.exact.values().chain(self.any.values())
    }

    /// Shortest flowpipe read by `formula`: the evaluation horizon.
    pub(crate) fn length_for(&self, formula: &Formula) -> Result<usize> {
        let mut len = usize::MAX;
        for atom in formula.atoms() {
            len = len.min(self.lookup(&atom.channel, atom.epsilon)?.len());
        }
        Ok(len)
    }
}
