use crate::error::{Error, Result};

/// Sigmoid-like range limiter `S_b(x) = 1 / (1 + b^-x)` rescaled so that
/// `x = 0` maps to `lo` and `x → ∞` approaches `hi`:
/// `(hi - lo) · 2 · (S_b(x) - 0.5) + lo`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DedicatedFn {
    pub base: f64,
    pub lo: f64,
    pub hi: f64,
}

impl DedicatedFn {
    pub fn new(base: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(base > 1.0) {
            return Err(Error::invalid("base", format!("must exceed 1, got {base}")));
        }
        if !(lo >= 0.0 && hi > lo) {
            return Err(Error::invalid("range", format!("need 0 <= lo < hi, got [{lo}, {hi})")));
        }
        Ok(DedicatedFn { base, lo, hi })
    }

    /// Value at `x ≥ 0`. Saturates just below `hi` so the range stays
    /// half-open in floating point.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        debug_assert!(x >= 0.0, "dedicated function needs x >= 0, got {x}");
        let s = 1.0 / (1.0 + self.base.powf(-x));
        let v = (self.hi - self.lo) * 2.0 * (s - 0.5) + self.lo;
        v.min(self.hi.next_down())
    }

    pub fn try_eval(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::invalid("x", format!("must be non-negative, got {x}")));
        }
        Ok(self.eval(x))
    }

    /// `d/dx`: the range scale times `ln(b) · b^-x / (1 + b^-x)²`.
    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        let e = self.base.powf(-x);
        (self.hi - self.lo) * 2.0 * self.base.ln() * e / ((1.0 + e) * (1.0 + e))
    }
}
