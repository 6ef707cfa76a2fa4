//! Strong/weak boolean satisfaction, evaluated pointwise.
//!
//! Kept deliberately separate from the interval evaluator: it works on
//! booleans only and never looks at robustness values.

use std::collections::HashMap;

use super::{MonitorError, Result, SignalEnv, Verdict};
use crate::logic::{Formula, Interval};

pub fn verdict(formula: &Formula, env: &SignalEnv, t: usize) -> Result<Verdict> {
    let len = env.length_for(formula)?;
    let mut m = Boolean {
        env,
        len,
        memo: HashMap::new(),
    };
    m.eval(formula, t)
}

struct Boolean<'a> {
    env: &'a SignalEnv,
    len: usize,
    memo: HashMap<(*const Formula, usize), Verdict>,
}

impl Boolean<'_> {
    fn steps(&self, i: &Interval, t: usize) -> Result<std::ops::RangeInclusive<usize>> {
        let from = t + i.lo;
        let to = match i.hi {
            Some(hi) => t + hi,
            None => self.len.saturating_sub(1),
        };
        if from > to || to >= self.len {
            return Err(MonitorError::Horizon {
                needed: to.max(from) + 1,
                available: self.len,
            });
        }
        Ok(from..=to)
    }

    fn eval(&mut self, f: &Formula, t: usize) -> Result<Verdict> {
        let key = (f as *const Formula, t);
        if let Some(v) = self.memo.get(&key) {
            return Ok(*v);
        }
        let v = match f {
            Formula::Atom(p) => {
                if t >= self.len {
                    return Err(MonitorError::Horizon {
                        needed: t + 1,
                        available: self.len,
                    });
                }
                let b = self.env.lookup(&p.channel, p.epsilon)?.steps()[t];
                let (at_lo, at_hi) = (p.eval(b.lower) > 0.0, p.eval(b.upper) > 0.0);
                Verdict {
                    strong: at_lo && at_hi,
                    weak: at_lo || at_hi,
                }
            }
            Formula::Not(a) => {
                let v = self.eval(a, t)?;
                Verdict {
                    strong: !v.weak,
                    weak: !v.strong,
                }
            }
            Formula::And(a, b) => {
                let (x, y) = (self.eval(a, t)?, self.eval(b, t)?);
                Verdict {
                    strong: x.strong && y.strong,
                    weak: x.weak && y.weak,
                }
            }
            Formula::Or(a, b) => {
                let (x, y) = (self.eval(a, t)?, self.eval(b, t)?);
                Verdict {
                    strong: x.strong || y.strong,
                    weak: x.weak || y.weak,
                }
            }
            Formula::Always(i, a) => {
                let mut v = Verdict {
                    strong: true,
                    weak: true,
                };
                for s in self.steps(i, t)? {
                    let x = self.eval(a, s)?;
                    v.strong &= x.strong;
                    v.weak &= x.weak;
                }
                v
            }
            Formula::Eventually(i, a) => {
                let mut v = Verdict {
                    strong: false,
                    weak: false,
                };
                for s in self.steps(i, t)? {
                    let x = self.eval(a, s)?;
                    v.strong |= x.strong;
                    v.weak |= x.weak;
                }
                v
            }
            Formula::Until(i, a, b) => {
                let window = self.steps(i, t)?;
                let mut v = Verdict {
                    strong: false,
                    weak: false,
                };
                // lhs must hold on every step of [t, s]
                let mut lhs_strong = true;
                let mut lhs_weak = true;
                for s in t..=*window.end() {
                    let x = self.eval(a, s)?;
                    lhs_strong &= x.strong;
                    lhs_weak &= x.weak;
                    if s >= *window.start() {
                        let y = self.eval(b, s)?;
                        v.strong |= y.strong && lhs_strong;
                        v.weak |= y.weak && lhs_weak;
                    }
                }
                v
            }
        };
        self.memo.insert(key, v);
        Ok(v)
    }
}
