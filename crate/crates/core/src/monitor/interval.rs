use serde::{Deserialize, Serialize};

/// Robustness degree interval: worst case `lower`, best case `upper`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustInterval {
    pub lower: f64,
    pub upper: f64,
}

impl RobustInterval {
    pub fn new(lower: f64, upper: f64) -> Self {
        debug_assert!(lower <= upper, "inverted robustness interval");
        Self { lower, upper }
    }

    pub fn point(v: f64) -> Self {
        Self { lower: v, upper: v }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    #[inline]
    #[allow(clippy::should_implement_trait)]
    pub fn neg(self) -> Self {
        Self {
            lower: -self.upper,
            upper: -self.lower,
        }
    }

    #[inline]
    pub fn min(self, other: Self) -> Self {
        Self {
            lower: self.lower.min(other.lower),
            upper: self.upper.min(other.upper),
        }
    }

    #[inline]
    pub fn max(self, other: Self) -> Self {
        Self {
            lower: self.lower.max(other.lower),
            upper: self.upper.max(other.upper),
        }
    }
}

/// `[-upper, -lower]`
pub fn neg_star(v: RobustInterval) -> RobustInterval {
    v.neg()
}

/// Componentwise minimum. Panics on an empty argument list.
pub fn min_star<I: IntoIterator<Item = RobustInterval>>(vs: I) -> RobustInterval {
    vs.into_iter()
        .reduce(RobustInterval::min)
        .expect("min_star needs at least one interval")
}

/// Componentwise maximum. Panics on an empty argument list.
pub fn max_star<I: IntoIterator<Item = RobustInterval>>(vs: I) -> RobustInterval {
    vs.into_iter()
        .reduce(RobustInterval::max)
        .expect("max_star needs at least one interval")
}
