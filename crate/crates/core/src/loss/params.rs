use serde::{Deserialize, Serialize};

use super::DedicatedFn;
use crate::error::{Error, Result};

/// Parameters of the complete unified focal loss, per cascade stage where
/// the loss is stage-dependent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UflParams {
    pub alpha_pos: f64,
    /// Negative-sample weight per stage, coarsest first.
    pub alpha_neg: Vec<f64>,
    /// Focusing exponent per stage.
    pub gamma: Vec<f64>,
    /// Base of the dedicated range-limiting function.
    pub base: f64,
    pub pos_range: [f64; 2],
    pub neg_range: [f64; 2],
    /// Stage weights of the total loss.
    pub lambda: Vec<f64>,
    /// Log clamp: estimates are held in `[eps, 1 - eps]`.
    pub eps: f64,
}

impl Default for UflParams {
    fn default() -> Self {
        UflParams {
            alpha_pos: 1.0,
            alpha_neg: vec![0.75, 0.5, 0.25],
            gamma: vec![2.0, 1.0, 0.0],
            base: 5.0,
            pos_range: [1.0, 3.0],
            neg_range: [0.0, 1.0],
            lambda: vec![2.0, 1.0, 1.0],
            eps: super::DEFAULT_EPS,
        }
    }
}

/// Loss parameters resolved for one stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageParams {
    pub alpha_pos: f64,
    pub alpha_neg: f64,
    pub gamma: f64,
    pub pos: DedicatedFn,
    pub neg: DedicatedFn,
    pub eps: f64,
}

impl UflParams {
    pub fn stages(&self) -> usize {
        self.gamma.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("loss: {what}")));
        if !(self.alpha_pos >= 0.0) {
            return bad("alpha_pos must be >= 0");
        }
        if self.alpha_neg.iter().any(|a| !(*a >= 0.0)) {
            return bad("alpha_neg entries must be >= 0");
        }
        if self.gamma.iter().any(|g| !(*g >= 0.0)) {
            return bad("gamma entries must be >= 0");
        }
        if self.lambda.iter().any(|l| !(*l >= 0.0)) {
            return bad("lambda entries must be >= 0");
        }
        if self.gamma.is_empty() || self.alpha_neg.len() != self.gamma.len() || self.lambda.len() != self.gamma.len() {
            return bad("alpha_neg, gamma and lambda need one entry per stage");
        }
        if !(self.eps > 0.0 && self.eps <= 1e-3) {
            return bad("eps must lie in (0, 1e-3]");
        }
        DedicatedFn::new(self.base, self.pos_range[0], self.pos_range[1])?;
        DedicatedFn::new(self.base, self.neg_range[0], self.neg_range[1])?;
        Ok(())
    }

    pub fn stage(&self, stage: usize) -> Result<StageParams> {
        self.validate()?;
        if stage >= self.stages() {
            return Err(Error::invalid(
                "stage",
                format!("stage {stage} out of range for {} configured stages", self.stages()),
            ));
        }
        Ok(StageParams {
            alpha_pos: self.alpha_pos,
            alpha_neg: self.alpha_neg[stage],
            gamma: self.gamma[stage],
            pos: DedicatedFn::new(self.base, self.pos_range[0], self.pos_range[1])?,
            neg: DedicatedFn::new(self.base, self.neg_range[0], self.neg_range[1])?,
            eps: self.eps,
        })
    }
}
