//! Hazard detection, merging and pre-alert time.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HazardKind {
    Hypo,
    Hyper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HazardEvent {
    pub kind: HazardKind,
    /// Step of the first out-of-range sample.
    pub onset: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Range {
    Low,
    In,
    High,
}

pub fn classify(glucose: f64, low: f64, high: f64) -> Range {
    if glucose < low {
        Range::Low
    } else if glucose > high {
        Range::High
    } else {
        Range::In
    }
}

/// Raw hazard onsets: an out-of-range step directly preceded by an in-range
/// one. Excursions already in progress at step 0 are not counted.
pub fn detect_hazards(glucose: &[f64], low: f64, high: f64) -> Vec<HazardEvent> {
    let ranges: Vec<Range> = glucose.iter().map(|&g| classify(g, low, high)).collect();
    ranges
        .windows(2)
        .enumerate()
        .filter_map(|(i, w)| {
            let kind = match (w[0], w[1]) {
                (Range::In, Range::Low) => HazardKind::Hypo,
                (Range::In, Range::High) => HazardKind::Hyper,
                _ => return None,
            };
            Some(HazardEvent { kind, onset: i + 1 })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("hazard events out of order at index {index}")]
pub struct Unordered {
    pub index: usize,
}

/// Collapse same-kind events whose onsets are at most `gap` steps apart.
/// Chains merge transitively: each event is compared with the previous raw
/// event of its kind, and a merged hazard keeps the first onset.
pub fn merge_hazards(events: &[HazardEvent], gap: usize) -> Result<Vec<HazardEvent>, Unordered> {
    if let Some(i) = events.windows(2).position(|w| w[1].onset < w[0].onset) {
        return Err(Unordered { index: i + 1 });
    }
    let mut out = Vec::new();
    let mut last_hypo: Option<usize> = None;
    let mut last_hyper: Option<usize> = None;
    for e in events {
        let last = match e.kind {
            HazardKind::Hypo => &mut last_hypo,
            HazardKind::Hyper => &mut last_hyper,
        };
        if !matches!(*last, Some(prev) if e.onset - prev <= gap) {
            out.push(*e);
        }
        *last = Some(e.onset);
    }
    Ok(out)
}

/// Earliest alert in the `lookback` steps before `onset`, if any.
pub fn first_alert(alerts: &[bool], onset: usize, lookback: usize) -> Option<usize> {
    let from = onset.saturating_sub(lookback);
    (from..onset.min(alerts.len())).find(|&s| alerts[s])
}

/// Minutes between the earliest alert in the lookback window and the onset;
/// 0 when no alert fired in time.
pub fn pre_alert_minutes(alerts: &[bool], onset: usize, lookback: usize, step_minutes: f64) -> f64 {
    first_alert(alerts, onset, lookback).map_or(0.0, |a| (onset - a) as f64 * step_minutes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hypo(onset: usize) -> HazardEvent {
        HazardEvent {
            kind: HazardKind::Hypo,
            onset,
        }
    }

    #[test]
    fn onsets_need_a_preceding_in_range_step() {
        let g = [60.0, 65.0, 100.0, 60.0, 60.0, 100.0, 200.0, 100.0];
        let ev = detect_hazards(&g, 70.0, 180.0);
        assert_eq!(
            ev,
            vec![
                hypo(3),
                HazardEvent {
                    kind: HazardKind::Hyper,
                    onset: 6
                }
            ]
        );
    }

    #[test]
    fn merging_examples() {
        // 3-minute steps: 15 min apart is 5 steps, the window 30 min is 10
        assert_eq!(merge_hazards(&[hypo(0), hypo(5)], 10).unwrap(), vec![hypo(0)]);
        // 0, 25, 50 minutes chain into one
        let chained = [hypo(0), hypo(25), hypo(50)];
        assert_eq!(merge_hazards(&chained, 30).unwrap(), vec![hypo(0)]);
        assert_eq!(merge_hazards(&[hypo(0), hypo(11)], 10).unwrap().len(), 2);
        let mixed = [
            hypo(0),
            HazardEvent {
                kind: HazardKind::Hyper,
                onset: 2,
            },
            hypo(4),
        ];
        assert_eq!(merge_hazards(&mixed, 10).unwrap().len(), 2);
        assert_eq!(merge_hazards(&[], 10).unwrap(), vec![]);
        assert_eq!(merge_hazards(&[hypo(5), hypo(1)], 10), Err(Unordered { index: 1 }));
    }

    #[test]
    fn pre_alert_window() {
        let mut alerts = vec![false; 40];
        alerts[22] = true;
        alerts[25] = true;
        // hazard at step 30 with a 10-step lookback: earliest alert is 22
        assert_eq!(pre_alert_minutes(&alerts, 30, 10, 3.0), 24.0);
        // both alerts fall before the window
        assert_eq!(pre_alert_minutes(&alerts, 36, 10, 3.0), 0.0);
        assert_eq!(first_alert(&alerts, 35, 10), Some(25));
        assert_eq!(pre_alert_minutes(&[], 0, 10, 3.0), 0.0);
    }
}
