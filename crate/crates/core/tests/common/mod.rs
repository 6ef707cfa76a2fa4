//! Reference implementations and generators shared by the integration tests.
//!
//! The oracles here evaluate every `(node, t)` pair directly from the
//! definitions with nested loops. They share no code with the library
//! evaluator beyond the formula AST.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use stlu_core::logic::{AtomicPredicate, Formula, Interval};
use stlu_core::monitor::{RobustInterval, SignalEnv};
use stlu_core::signal::{Bounds, Flowpipe};

pub type Traces = BTreeMap<String, Vec<f64>>;
pub type Pipes = BTreeMap<String, Vec<(f64, f64)>>;

/// Channels used by the generators and their confidence levels.
pub const CHANNELS: [(&str, f64); 2] = [("x", 0.9), ("y", 0.95)];

fn shortest<T>(signals: &BTreeMap<String, Vec<T>>, f: &Formula) -> usize {
    let mut names = Vec::new();
    collect_channels(f, &mut names);
    names.iter().map(|c| signals[c].len()).min().unwrap()
}

fn collect_channels(f: &Formula, out: &mut Vec<String>) {
    match f {
        Formula::Atom(p) => out.push(p.channel.clone()),
        Formula::Not(a) | Formula::Always(_, a) | Formula::Eventually(_, a) => {
            collect_channels(a, out)
        }
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(_, a, b) => {
            collect_channels(a, out);
            collect_channels(b, out);
        }
    }
}

/// Steps of `t + [lo, hi]`, or `None` when the window leaves the signal.
fn window(i: &Interval, t: usize, len: usize) -> Option<(usize, usize)> {
    let from = t + i.lo;
    let to = i.hi.map_or(len.checked_sub(1)?, |hi| t + hi);
    (from <= to && to < len).then_some((from, to))
}

/// Classic robustness of one trace per channel. `None` if some window leaves
/// the signal.
pub fn classic(f: &Formula, traces: &Traces, t: usize) -> Option<f64> {
    let len = shortest(traces, f);
    Classic {
        tr: traces,
        len,
        memo: HashMap::new(),
    }
    .at(f, t)
}

// Memo keyed by node address and step; the loops below stay literal.
struct Classic<'a> {
    tr: &'a Traces,
    len: usize,
    memo: HashMap<(*const Formula, usize), Option<f64>>,
}

impl Classic<'_> {
    fn at(&mut self, f: &Formula, t: usize) -> Option<f64> {
        let key = (f as *const Formula, t);
        if let Some(v) = self.memo.get(&key) {
            return *v;
        }
        let v = self.compute(f, t);
        self.memo.insert(key, v);
        v
    }

    fn compute(&mut self, f: &Formula, t: usize) -> Option<f64> {
        let (tr, len) = (self.tr, self.len);
        Some(match f {
            Formula::Atom(p) => {
                if t >= len {
                    return None;
                }
                p.slope * tr[&p.channel][t] + p.offset
            }
            Formula::Not(a) => -self.at(a, t)?,
            Formula::And(a, b) => self.at(a, t)?.min(self.at(b, t)?),
            Formula::Or(a, b) => self.at(a, t)?.max(self.at(b, t)?),
            Formula::Always(i, a) => {
                let (from, to) = window(i, t, len)?;
                let mut r = f64::INFINITY;
                for s in from..=to {
                    r = r.min(self.at(a, s)?);
                }
                r
            }
            Formula::Eventually(i, a) => {
                let (from, to) = window(i, t, len)?;
                let mut r = f64::NEG_INFINITY;
                for s in from..=to {
                    r = r.max(self.at(a, s)?);
                }
                r
            }
            Formula::Until(i, a, b) => {
                let (from, to) = window(i, t, len)?;
                let mut r = f64::NEG_INFINITY;
                for s in from..=to {
                    let mut lhs = f64::INFINITY;
                    for u in t..=s {
                        lhs = lhs.min(self.at(a, u)?);
                    }
                    r = r.max(self.at(b, s)?.min(lhs));
                }
                r
            }
        })
    }
}

/// Interval robustness by literal nested loops over the definitions, with
/// the min*/max*/neg* interval operators written out componentwise.
pub fn interval(f: &Formula, pipes: &Pipes, t: usize) -> Option<(f64, f64)> {
    let len = shortest(pipes, f);
    Nested {
        p: pipes,
        len,
        memo: HashMap::new(),
    }
    .at(f, t)
}

struct Nested<'a> {
    p: &'a Pipes,
    len: usize,
    memo: HashMap<(*const Formula, usize), Option<(f64, f64)>>,
}

fn imin(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0.min(b.0), a.1.min(b.1))
}

fn imax(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0.max(b.0), a.1.max(b.1))
}

impl Nested<'_> {
    fn at(&mut self, f: &Formula, t: usize) -> Option<(f64, f64)> {
        let key = (f as *const Formula, t);
        if let Some(v) = self.memo.get(&key) {
            return *v;
        }
        let v = self.compute(f, t);
        self.memo.insert(key, v);
        v
    }

    fn compute(&mut self, f: &Formula, t: usize) -> Option<(f64, f64)> {
        let (p, len) = (self.p, self.len);
        Some(match f {
            Formula::Atom(a) => {
                if t >= len {
                    return None;
                }
                let (lo, hi) = p[&a.channel][t];
                let (x, y) = (a.slope * lo + a.offset, a.slope * hi + a.offset);
                (x.min(y), x.max(y))
            }
            Formula::Not(a) => {
                let (l, u) = self.at(a, t)?;
                (-u, -l)
            }
            Formula::And(a, b) => imin(self.at(a, t)?, self.at(b, t)?),
            Formula::Or(a, b) => imax(self.at(a, t)?, self.at(b, t)?),
            Formula::Always(i, a) => {
                let (from, to) = window(i, t, len)?;
                let mut r = (f64::INFINITY, f64::INFINITY);
                for s in from..=to {
                    r = imin(r, self.at(a, s)?);
                }
                r
            }
            Formula::Eventually(i, a) => {
                let (from, to) = window(i, t, len)?;
                let mut r = (f64::NEG_INFINITY, f64::NEG_INFINITY);
                for s in from..=to {
                    r = imax(r, self.at(a, s)?);
                }
                r
            }
            Formula::Until(i, a, b) => {
                let (from, to) = window(i, t, len)?;
                let mut r = (f64::NEG_INFINITY, f64::NEG_INFINITY);
                for s in from..=to {
                    let mut lhs = (f64::INFINITY, f64::INFINITY);
                    for u in t..=s {
                        lhs = imin(lhs, self.at(a, u)?);
                    }
                    r = imax(r, imin(self.at(b, s)?, lhs));
                }
                r
            }
        })
    }
}

pub fn to_env(pipes: &Pipes) -> SignalEnv {
    let mut env = SignalEnv::new();
    for (name, eps) in CHANNELS {
        if let Some(steps) = pipes.get(name) {
            env.insert(Flowpipe::from_pairs(name, eps, 1.0, steps).unwrap());
        }
    }
    env
}

pub fn as_pair(r: RobustInterval) -> (f64, f64) {
    (r.lower, r.upper)
}

/// Options for [`random_formula`].
#[derive(Clone, Copy)]
pub struct Gen {
    pub depth: usize,
    pub negation: bool,
    /// Restrict atoms to positive slopes.
    pub increasing: bool,
    pub max_bound: usize,
}

impl Default for Gen {
    fn default() -> Self {
        Self {
            depth: 4,
            negation: true,
            increasing: false,
            max_bound: 4,
        }
    }
}

fn random_atom<R: Rng>(rng: &mut R, g: &Gen) -> Formula {
    let (channel, epsilon) = CHANNELS[rng.random_range(0..CHANNELS.len())];
    let magnitude = rng.random_range(0.25..2.0);
    let slope = if g.increasing || rng.random_bool(0.5) {
        magnitude
    } else {
        -magnitude
    };
    Formula::Atom(AtomicPredicate {
        channel: channel.to_string(),
        slope,
        offset: rng.random_range(-5.0..5.0),
        epsilon,
    })
}

fn random_interval<R: Rng>(rng: &mut R, g: &Gen) -> Interval {
    let lo = rng.random_range(0..=g.max_bound / 2);
    if rng.random_bool(0.2) {
        Interval::unbounded(lo)
    } else {
        Interval::bounded(lo, lo + rng.random_range(0..=g.max_bound - lo))
    }
}

/// Random formula of depth at most `g.depth`, using every operator.
pub fn random_formula<R: Rng>(rng: &mut R, g: &Gen) -> Formula {
    if g.depth <= 1 {
        return random_atom(rng, g);
    }
    let sub = Gen {
        depth: g.depth - 1,
        ..*g
    };
    let ops = if g.negation { 7 } else { 6 };
    match rng.random_range(0..ops) {
        0 => random_atom(rng, g),
        1 => random_formula(rng, &sub).and(random_formula(rng, &sub)),
        2 => random_formula(rng, &sub).or(random_formula(rng, &sub)),
        3 => Formula::always(random_interval(rng, g), random_formula(rng, &sub)),
        4 => Formula::eventually(random_interval(rng, g), random_formula(rng, &sub)),
        5 => Formula::until(
            random_interval(rng, g),
            random_formula(rng, &sub),
            random_formula(rng, &sub),
        ),
        _ => random_formula(rng, &sub).not(),
    }
}

/// Random until formula over atoms or shallow subformulas.
pub fn random_until<R: Rng>(rng: &mut R) -> Formula {
    let g = Gen {
        depth: 2,
        ..Gen::default()
    };
    let lo = rng.random_range(0..4);
    let i = if rng.random_bool(0.3) {
        Interval::unbounded(lo)
    } else {
        Interval::bounded(lo, lo + rng.random_range(0..8))
    };
    Formula::until(i, random_formula(rng, &g), random_formula(rng, &g))
}

/// Flowpipes of `len` steps for every channel; values are continuous, so
/// exact-zero robustness has probability zero.
pub fn random_pipes<R: Rng>(rng: &mut R, len: usize) -> Pipes {
    CHANNELS
        .iter()
        .map(|(name, _)| {
            let mut level: f64 = rng.random_range(-3.0..3.0);
            let steps = (0..len)
                .map(|_| {
                    level += rng.random_range(-1.5..1.5);
                    let w = if rng.random_bool(0.1) {
                        0.0
                    } else {
                        rng.random_range(0.0..3.0)
                    };
                    (level - w / 2.0, level + w / 2.0)
                })
                .collect();
            (name.to_string(), steps)
        })
        .collect()
}

/// A trace inside the flowpipes: uniform per step, with endpoints mixed in.
pub fn inner_trace<R: Rng>(rng: &mut R, pipes: &Pipes) -> Traces {
    pipes
        .iter()
        .map(|(name, steps)| {
            let values = steps
                .iter()
                .map(|&(lo, hi)| match rng.random_range(0..6) {
                    0 => lo,
                    1 => hi,
                    _ => rng.random_range(lo..=hi),
                })
                .collect();
            (name.clone(), values)
        })
        .collect()
}

pub fn boundary_trace(pipes: &Pipes, upper: bool) -> Traces {
    pipes
        .iter()
        .map(|(name, steps)| {
            let v = steps
                .iter()
                .map(|&(lo, hi)| if upper { hi } else { lo })
                .collect();
            (name.clone(), v)
        })
        .collect()
}

/// Formula plus flowpipes long enough for its finite horizon (at most 30).
pub fn random_case(rng: &mut ChaCha8Rng, g: &Gen) -> (Formula, Pipes) {
    loop {
        let f = random_formula(rng, g);
        let needed = f.horizon().finite().unwrap_or(0) + 1;
        if needed > 30 {
            continue;
        }
        let len = rng.random_range(needed..=30);
        return (f, random_pipes(rng, len));
    }
}

pub fn bounds(pairs: &[(f64, f64)]) -> Vec<Bounds> {
    pairs
        .iter()
        .map(|&(lower, upper)| Bounds { lower, upper })
        .collect()
}

/// erf by its Maclaurin series for |x| < 2, erfc by a Lentz continued
/// fraction beyond.
pub fn erf_reference(x: f64) -> f64 {
    if x.abs() < 2.0 {
        let mut term = x;
        let mut sum = x;
        let x2 = x * x;
        let mut n = 0.0;
        loop {
            n += 1.0;
            term *= -x2 / n;
            let add = term / (2.0 * n + 1.0);
            sum += add;
            if add.abs() <= 1e-17 * sum.abs() || n > 300.0 {
                break;
            }
        }
        sum * 2.0 / std::f64::consts::PI.sqrt()
    } else {
        let c = erfc_cf(x.abs());
        if x > 0.0 {
            1.0 - c
        } else {
            c - 1.0
        }
    }
}

/// erfc(x) for x > 0 via the continued fraction
/// `erfc x = exp(-x²)/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))`.
pub fn erfc_cf(x: f64) -> f64 {
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..5000 {
        let a = k as f64 / 2.0;
        d = x + a * d;
        d = if d.abs() < tiny { tiny } else { d };
        c = x + a / c;
        c = if c.abs() < tiny { tiny } else { c };
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / std::f64::consts::PI.sqrt() / f
}

/// Standard normal CDF built from the reference erf; the lower tail uses the
/// continued fraction directly to keep relative accuracy.
pub fn normal_cdf_reference(x: f64) -> f64 {
    let z = x / std::f64::consts::SQRT_2;
    if z < -2.0 {
        0.5 * erfc_cf(-z)
    } else {
        0.5 * (1.0 + erf_reference(z))
    }
}

/// Quantile by bisection on the reference CDF.
pub fn quantile_reference(p: f64) -> f64 {
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf_reference(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}
