//! Interval-valued robustness, computed bottom-up over step windows.
//!
//! Each subformula is evaluated once over the contiguous range of steps its
//! parent needs, which caches every `(node, t)` result for the call.
//! Bounded always/eventually use a monotone-deque sliding extremum and
//! unbounded ones a suffix scan, so both are linear in the window range.
//! Until keeps a running prefix minimum of the left operand while the right
//! operand's window is scanned; the unbounded form collapses to the backward
//! recurrence `U(s) = min*(ρ1(s), max*(ρ2(s), U(s + 1)))`.

use std::collections::VecDeque;

use super::{MonitorError, Result, RobustInterval, SignalEnv};
use crate::logic::{AtomicPredicate, Formula, Interval};
use crate::signal::Bounds;

pub fn robustness(formula: &Formula, env: &SignalEnv, t: usize) -> Result<RobustInterval> {
    let len = env.length_for(formula)?;
    Ok(Evaluator { env, len }.eval(formula, t, t)?.get(0))
}

/// Robustness at every step of `start..=end`.
pub fn robustness_window(
    formula: &Formula,
    env: &SignalEnv,
    start: usize,
    end: usize,
) -> Result<Vec<RobustInterval>> {
    assert!(start <= end, "empty evaluation window");
    let len = env.length_for(formula)?;
    Ok(Evaluator { env, len }.eval(formula, start, end)?.into_vec())
}

struct Evaluator<'a> {
    env: &'a SignalEnv,
    len: usize,
}

#[derive(Clone, Copy)]
enum Extremum {
    Min,
    Max,
}

/// Robustness of a subformula over a step range. Atoms stay a view over the
/// flowpipe so leaves never allocate.
enum Values<'a> {
    Atom {
        steps: &'a [Bounds],
        pred: &'a AtomicPredicate,
    },
    Owned(Vec<RobustInterval>),
}

impl Values<'_> {
    #[inline]
    fn get(&self, i: usize) -> RobustInterval {
        match self {
            Values::Atom { steps, pred } => {
                // affine: extremes at the interval endpoints
                let (x, y) = (pred.eval(steps[i].lower), pred.eval(steps[i].upper));
                RobustInterval {
                    lower: x.min(y),
                    upper: x.max(y),
                }
            }
            Values::Owned(v) => v[i],
        }
    }

    fn len(&self) -> usize {
        match self {
            Values::Atom { steps, .. } => steps.len(),
            Values::Owned(v) => v.len(),
        }
    }

    fn into_vec(self) -> Vec<RobustInterval> {
        match self {
            Values::Owned(v) => v,
            atom => (0..atom.len()).map(|i| atom.get(i)).collect(),
        }
    }
}

impl<'a> Evaluator<'a> {
    fn horizon(&self, needed: usize) -> MonitorError {
        MonitorError::Horizon {
            needed,
            available: self.len,
        }
    }

    /// Child range for a window operator evaluated over `start..=end`.
    fn child_range(&self, i: &Interval, start: usize, end: usize) -> Result<(usize, usize)> {
        let cstart = start + i.lo;
        match i.hi {
            Some(hi) => Ok((cstart, end + hi)),
            None => {
                if end + i.lo >= self.len {
                    return Err(self.horizon(end + i.lo + 1));
                }
                Ok((cstart, self.len - 1))
            }
        }
    }

    fn eval(&self, f: &'a Formula, start: usize, end: usize) -> Result<Values<'a>> {
        let n = end - start + 1;
        Ok(Values::Owned(match f {
            Formula::Atom(pred) => {
                if end >= self.len {
                    return Err(self.horizon(end + 1));
                }
                let fp = self.env.lookup(&pred.channel, pred.epsilon)?;
                return Ok(Values::Atom {
                    steps: &fp.steps()[start..=end],
                    pred,
                });
            }
            Formula::Not(a) => {
                let ra = self.eval(a, start, end)?;
                (0..n).map(|k| ra.get(k).neg()).collect()
            }
            Formula::And(a, b) => {
                let (ra, rb) = (self.eval(a, start, end)?, self.eval(b, start, end)?);
                (0..n).map(|k| ra.get(k).min(rb.get(k))).collect()
            }
            Formula::Or(a, b) => {
                let (ra, rb) = (self.eval(a, start, end)?, self.eval(b, start, end)?);
                (0..n).map(|k| ra.get(k).max(rb.get(k))).collect()
            }
            Formula::Always(i, a) => self.window(i, a, start, end, Extremum::Min)?,
            Formula::Eventually(i, a) => self.window(i, a, start, end, Extremum::Max)?,
            Formula::Until(i, a, b) => match i.hi {
                Some(hi) => self.until_bounded(i.lo, hi, a, b, start, end)?,
                None => self.until_unbounded(i.lo, a, b, start, end)?,
            },
        }))
    }

    fn window(
        &self,
        i: &Interval,
        body: &'a Formula,
        start: usize,
        end: usize,
        ext: Extremum,
    ) -> Result<Vec<RobustInterval>> {
        let (cstart, cend) = self.child_range(i, start, end)?;
        let child = self.eval(body, cstart, cend)?;
        let n = end - start + 1;
        let lower = |j: usize| child.get(j).lower;
        let upper = |j: usize| child.get(j).upper;
        let (lo, hi) = match i.hi {
            Some(hi) => {
                let w = hi - i.lo + 1;
                (sliding(lower, w, n, ext), sliding(upper, w, n, ext))
            }
            None => {
                let m = child.len();
                (suffix(lower, m, n, ext), suffix(upper, m, n, ext))
            }
        };
        Ok(lo
            .into_iter()
            .zip(hi)
            .map(|(lower, upper)| RobustInterval { lower, upper })
            .collect())
    }

    fn until_bounded(
        &self,
        lo: usize,
        hi: usize,
        lhs: &'a Formula,
        rhs: &'a Formula,
        start: usize,
        end: usize,
    ) -> Result<Vec<RobustInterval>> {
        let r1 = self.eval(lhs, start, end + hi)?;
        let r2 = self.eval(rhs, start + lo, end + hi)?;
        let out = (start..=end)
            .map(|t| {
                let at1 = |s: usize| r1.get(s - start);
                let at2 = |s: usize| r2.get(s - start - lo);
                let mut prefix = at1(t);
                for s in t + 1..t + lo {
                    prefix = prefix.min(at1(s));
                }
                let mut acc: Option<RobustInterval> = None;
                for s in t + lo..=t + hi {
                    prefix = prefix.min(at1(s));
                    let cand = at2(s).min(prefix);
                    acc = Some(acc.map_or(cand, |a| a.max(cand)));
                }
                acc.expect("non-empty until window")
            })
            .collect();
        Ok(out)
    }

    fn until_unbounded(
        &self,
        lo: usize,
        lhs: &'a Formula,
        rhs: &'a Formula,
        start: usize,
        end: usize,
    ) -> Result<Vec<RobustInterval>> {
        if end + lo >= self.len {
            return Err(self.horizon(end + lo + 1));
        }
        let last = self.len - 1;
        let r1 = self.eval(lhs, start, last)?;
        let r2 = self.eval(rhs, start + lo, last)?;
        // u0[s - (start + lo)] = until with window [0, inf) anchored at s
        let base = start + lo;
        let mut u0 = vec![RobustInterval::point(0.0); last - base + 1];
        let mut next: Option<RobustInterval> = None;
        for s in (base..=last).rev() {
            let (a, b) = (r1.get(s - start), r2.get(s - base));
            let v = match next {
                None => a.min(b),
                Some(u) => a.min(b.max(u)),
            };
            u0[s - base] = v;
            next = Some(v);
        }
        let n = end - start + 1;
        if lo == 0 {
            u0.truncate(n);
            return Ok(u0);
        }
        let pl = sliding(|j| r1.get(j).lower, lo, n, Extremum::Min);
        let pu = sliding(|j| r1.get(j).upper, lo, n, Extremum::Min);
        Ok((0..n)
            .map(|k| {
                RobustInterval {
                    lower: pl[k],
                    upper: pu[k],
                }
                .min(u0[k])
            })
            .collect())
    }
}

/// `out[i] = ext(x(i), ..., x(i + w - 1))` for `i < n`, via a monotone deque.
fn sliding(x: impl Fn(usize) -> f64, w: usize, n: usize, ext: Extremum) -> Vec<f64> {
    debug_assert!(w >= 1);
    if n == 1 {
        // single anchor: a plain fold beats the deque bookkeeping
        let v = (1..w).map(&x).fold(x(0), |a, b| match ext {
            Extremum::Min => a.min(b),
            Extremum::Max => a.max(b),
        });
        return vec![v];
    }
    let keeps = |kept: f64, new: f64| match ext {
        Extremum::Min => kept < new,
        Extremum::Max => kept > new,
    };
    let mut out = Vec::with_capacity(n);
    let mut dq: VecDeque<(usize, f64)> = VecDeque::new();
    for j in 0..n + w - 1 {
        let v = x(j);
        while let Some(&(_, back)) = dq.back() {
            if keeps(back, v) {
                break;
            }
            dq.pop_back();
        }
        dq.push_back((j, v));
        if j + 1 >= w {
            let i = j + 1 - w;
            while dq[0].0 < i {
                dq.pop_front();
            }
            out.push(dq[0].1);
        }
    }
    out
}

/// `out[i] = ext(x(i), ..., x(m - 1))` for `i < n`.
fn suffix(x: impl Fn(usize) -> f64, m: usize, n: usize, ext: Extremum) -> Vec<f64> {
    let mut acc = vec![0.0; m];
    let mut cur = x(m - 1);
    for i in (0..m).rev() {
        let v = x(i);
        cur = match ext {
            Extremum::Min => cur.min(v),
            Extremum::Max => cur.max(v),
        };
        acc[i] = cur;
    }
    acc.truncate(n);
    acc
}
