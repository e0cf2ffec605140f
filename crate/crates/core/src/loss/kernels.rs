use super::{StageParams, UflParams};
use crate::error::{Error, Result};

/// Log clamp used when no explicit parameters are given.
pub const DEFAULT_EPS: f64 = 1e-7;

#[inline]
fn clamp(u: f64, eps: f64) -> f64 {
    u.clamp(eps, 1.0 - eps)
}

#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `γ · x^(γ-1)`, the derivative of `x^γ`, taken as zero when `γ = 0`.
#[inline]
fn dpow(x: f64, gamma: f64) -> f64 {
    if gamma == 0.0 {
        0.0
    } else {
        gamma * x.powf(gamma - 1.0)
    }
}

#[inline]
fn bce_raw(u: f64, q: f64) -> f64 {
    -q * u.ln() - (1.0 - q) * (1.0 - u).ln()
}

#[inline]
fn bce_grad_raw(u: f64, q: f64) -> f64 {
    -q / u + (1.0 - q) / (1.0 - u)
}

/// Binary cross-entropy `-q ln u - (1-q) ln(1-u)` with `u` clamped to
/// `[ε, 1-ε]`.
pub fn bce(u: f64, q: f64) -> f64 {
    bce_raw(clamp(u, DEFAULT_EPS), q)
}

/// `∂BCE/∂u` at the clamped estimate.
pub fn bce_grad(u: f64, q: f64) -> f64 {
    bce_grad_raw(clamp(u, DEFAULT_EPS), q)
}

/// Focal loss for a binary target: `-α(1-u)^γ ln u` when `q = 1`,
/// `-(1-α)u^γ ln(1-u)` otherwise.
pub fn focal_loss(u: f64, q: f64, alpha: f64, gamma: f64) -> f64 {
    let u = clamp(u, DEFAULT_EPS);
    if q == 1.0 {
        -alpha * (1.0 - u).powf(gamma) * u.ln()
    } else {
        -(1.0 - alpha) * u.powf(gamma) * (1.0 - u).ln()
    }
}

/// Generalised focal loss for continuous targets, modulated by the absolute
/// error `|q - u|` on positives.
pub fn gfl(u: f64, q: f64, alpha: f64, gamma: f64) -> f64 {
    LossKind::Gfl { alpha, gamma }.evaluate(u, q, 1.0, DEFAULT_EPS).0
}

/// Unified focal loss without range limiting: the positive modulating
/// factor is the relative error `|q - u| / q⁺`, the negative one `u / q⁺`.
pub fn ufl_naive(u: f64, q: f64, q_pos: f64, alpha: f64, gamma: f64) -> f64 {
    LossKind::UflNaive { alpha, gamma }.evaluate(u, q, q_pos, DEFAULT_EPS).0
}

/// Complete unified focal loss at one stage.
pub fn ufl(u: f64, q: f64, q_pos: f64, params: &UflParams, stage: usize) -> Result<f64> {
    check_q_pos(q_pos)?;
    let s = params.stage(stage)?;
    Ok(LossKind::Ufl(s).evaluate(u, q, q_pos, s.eps).0)
}

/// `∂UFL/∂u`, including the dependence of the modulating factor on `u`.
/// At `u = q` the kink of `|q - u|` contributes nothing.
pub fn ufl_grad(u: f64, q: f64, q_pos: f64, params: &UflParams, stage: usize) -> Result<f64> {
    check_q_pos(q_pos)?;
    let s = params.stage(stage)?;
    Ok(LossKind::Ufl(s).evaluate(u, q, q_pos, s.eps).1)
}

fn check_q_pos(q_pos: f64) -> Result<()> {
    if !(q_pos > 0.0) {
        return Err(Error::invalid(
            "q_pos",
            format!("positive target must be > 0, got {q_pos}"),
        ));
    }
    Ok(())
}

/// Pointwise loss selector used by the descent harness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossKind {
    Bce,
    /// Focal loss; non-zero targets are collapsed to 1.
    Fl {
        alpha: f64,
        gamma: f64,
    },
    Gfl {
        alpha: f64,
        gamma: f64,
    },
    UflNaive {
        alpha: f64,
        gamma: f64,
    },
    Ufl(StageParams),
}

impl LossKind {
    /// Modulating weight `w(u)` and `dw/du` for a clamped estimate, plus the
    /// BCE target actually used.
    #[inline]
    fn weight(&self, u: f64, q: f64, q_pos: f64) -> (f64, f64, f64) {
        match *self {
            LossKind::Bce => (1.0, 0.0, q),
            LossKind::Fl { alpha, gamma } => {
                if q > 0.0 {
                    (alpha * (1.0 - u).powf(gamma), -alpha * dpow(1.0 - u, gamma), 1.0)
                } else {
                    ((1.0 - alpha) * u.powf(gamma), (1.0 - alpha) * dpow(u, gamma), 0.0)
                }
            }
            LossKind::Gfl { alpha, gamma } => {
                if q > 0.0 {
                    let e = (q - u).abs();
                    let s = sign(q - u);
                    let dw = if s == 0.0 { 0.0 } else { -alpha * dpow(e, gamma) * s };
                    (alpha * e.powf(gamma), dw, q)
                } else {
                    ((1.0 - alpha) * u.powf(gamma), (1.0 - alpha) * dpow(u, gamma), q)
                }
            }
            LossKind::UflNaive { alpha, gamma } => {
                if q > 0.0 {
                    let x = (q - u).abs() / q_pos;
                    let s = sign(q - u);
                    let dw = if s == 0.0 {
                        0.0
                    } else {
                        -alpha * dpow(x, gamma) * s / q_pos
                    };
                    (alpha * x.powf(gamma), dw, q)
                } else {
                    let x = u / q_pos;
                    ((1.0 - alpha) * x.powf(gamma), (1.0 - alpha) * dpow(x, gamma) / q_pos, q)
                }
            }
            LossKind::Ufl(p) => {
                if q > 0.0 {
                    let x = (q - u).abs() / q_pos;
                    let sv = p.pos.eval(x);
                    let s = sign(q - u);
                    let dw = if s == 0.0 {
                        0.0
                    } else {
                        -p.alpha_pos * dpow(sv, p.gamma) * p.pos.derivative(x) * s / q_pos
                    };
                    (p.alpha_pos * sv.powf(p.gamma), dw, q)
                } else {
                    let x = u / q_pos;
                    let sv = p.neg.eval(x);
                    let dw = p.alpha_neg * dpow(sv, p.gamma) * p.neg.derivative(x) / q_pos;
                    (p.alpha_neg * sv.powf(p.gamma), dw, q)
                }
            }
        }
    }

    /// Loss value and `∂loss/∂u`.
    #[inline]
    pub fn evaluate(&self, u: f64, q: f64, q_pos: f64, eps: f64) -> (f64, f64) {
        let u = clamp(u, eps);
        let (w, dw, target) = self.weight(u, q, q_pos);
        let b = bce_raw(u, target);
        (w * b, dw * b + w * bce_grad_raw(u, target))
    }

    pub fn name(&self) -> &'static str {
        match self {
            LossKind::Bce => "bce",
            LossKind::Fl { .. } => "fl",
            LossKind::Gfl { .. } => "gfl",
            LossKind::UflNaive { .. } => "ufl-naive",
            LossKind::Ufl(_) => "ufl",
        }
    }
}

/// Convenience wrapper over [`LossKind::evaluate`].
pub fn loss_and_grad(kind: &LossKind, u: f64, q: f64, q_pos: f64, eps: f64) -> (f64, f64) {
    kind.evaluate(u, q, q_pos, eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    #[test]
    fn bce_values() {
        assert!(bce(1.0, 1.0) <= 2.0 * DEFAULT_EPS);
        assert!((bce(0.5, 1.0) - LN_2).abs() < 1e-12);
        assert!((bce(0.5, 0.5) - LN_2).abs() < 1e-12);
        assert!(bce(0.3, 0.0) > 0.0);
    }

    #[test]
    fn focal_values() {
        assert!((focal_loss(0.5, 1.0, 1.0, 2.0) - 0.25 * LN_2).abs() < 1e-12);
        assert!(focal_loss(1.0, 1.0, 1.0, 2.0) < 1e-12);
        for u in [0.1, 0.4, 0.9] {
            assert_eq!(focal_loss(u, 1.0, 1.0, 0.0), -f64::ln(u));
        }
    }

    #[test]
    fn gfl_values() {
        assert_eq!(gfl(0.3, 0.3, 0.6, 2.0), 0.0);
        assert!((gfl(0.5, 1.0, 1.0, 2.0) - 0.25 * LN_2).abs() < 1e-12);
        assert!(gfl(0.0, 0.0, 0.25, 2.0) < 1e-12);
    }

    #[test]
    fn naive_values() {
        let expect = 0.5 * (-0.5 * 0.25f64.ln() - 0.5 * 0.75f64.ln());
        assert!((ufl_naive(0.25, 0.5, 0.5, 1.0, 1.0) - expect).abs() < 1e-12);
        assert!((expect - 0.418494).abs() < 1e-6);
        assert_eq!(ufl_naive(0.4, 0.4, 0.4, 1.0, 2.0), 0.0);
    }

    #[test]
    fn naive_reduces_to_focal_at_unit_positive() {
        for &u in &[0.01, 0.2, 0.5, 0.77, 0.99] {
            for &a in &[0.0, 0.25, 0.5, 1.0] {
                for &g in &[0.0, 1.0, 2.0, 3.5] {
                    for &q in &[0.0, 1.0] {
                        let fl = focal_loss(u, q, a, g);
                        assert!((ufl_naive(u, q, 1.0, a, g) - fl).abs() <= 1e-12);
                        assert!((gfl(u, q, a, g) - fl).abs() <= 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn ufl_values() {
        let p = UflParams::default();
        let expect = -0.75 * 0.75f64.ln() - 0.25 * 0.25f64.ln();
        assert!((ufl(0.75, 0.75, 0.75, &p, 0).unwrap() - expect).abs() < 1e-12);
        assert!((expect - 0.562335).abs() < 1e-6);
        assert!(ufl(0.0, 0.0, 1.0, &p, 0).unwrap() < 1e-12);
        assert!(ufl(0.5, 0.5, 0.0, &p, 0).is_err());
        assert!(ufl(0.5, 0.5, 0.5, &p, 7).is_err());
    }

    #[test]
    fn ufl_positive_factor_bounded() {
        let s = UflParams::default().stage(0).unwrap();
        for &q in &[1e-4f64, 0.01, 0.5, 1.0] {
            for &u in &[0.0, 0.3, 1.0] {
                let factor = s.pos.eval((q - u).abs() / q);
                assert!((1.0..3.0).contains(&factor), "factor {factor} at q={q}, u={u}");
            }
        }
    }

    fn central(f: impl Fn(f64) -> f64, u: f64) -> f64 {
        let h = 1e-6;
        (f(u + h) - f(u - h)) / (2.0 * h)
    }

    #[test]
    fn ufl_grad_matches_differences() {
        let p = UflParams::default();
        for stage in 0..3 {
            for &(u, q, qp) in &[(0.3, 0.6, 0.6), (0.8, 0.2, 0.2), (0.4, 0.0, 0.3), (0.5, 0.5, 0.5)] {
                let g = ufl_grad(u, q, qp, &p, stage).unwrap();
                let fd = central(|x| ufl(x, q, qp, &p, stage).unwrap(), u);
                assert!(
                    (g - fd).abs() <= 1e-4 * g.abs().max(fd.abs()).max(1e-3),
                    "{u} {q} {g} {fd}"
                );
            }
        }
    }

    #[test]
    fn gamma_zero_grad_is_weighted_bce() {
        let p = UflParams::default();
        let s = p.stage(2).unwrap();
        assert_eq!(s.gamma, 0.0);
        assert_eq!(
            ufl_grad(0.3, 0.7, 0.7, &p, 2).unwrap(),
            s.alpha_pos * bce_grad(0.3, 0.7)
        );
        assert_eq!(
            ufl_grad(0.3, 0.0, 0.7, &p, 2).unwrap(),
            s.alpha_neg * bce_grad(0.3, 0.0)
        );
    }

    #[test]
    fn negative_grad_non_negative() {
        let p = UflParams::default();
        for stage in 0..3 {
            for i in 1..100 {
                let u = i as f64 / 100.0;
                assert!(ufl_grad(u, 0.0, 0.4, &p, stage).unwrap() >= 0.0);
            }
        }
    }

    #[test]
    fn other_kind_grads_match_differences() {
        let kinds = [
            LossKind::Bce,
            LossKind::Fl {
                alpha: 0.25,
                gamma: 2.0,
            },
            LossKind::Gfl { alpha: 0.6, gamma: 1.5 },
            LossKind::UflNaive { alpha: 0.7, gamma: 2.0 },
        ];
        for k in kinds {
            for &(u, q) in &[(0.2, 0.9), (0.7, 0.0), (0.45, 0.3)] {
                let (_, g) = k.evaluate(u, q, 0.5, DEFAULT_EPS);
                let fd = central(|x| k.evaluate(x, q, 0.5, DEFAULT_EPS).0, u);
                assert!((g - fd).abs() <= 1e-5 * g.abs().max(1.0), "{} {u} {q}", k.name());
            }
        }
    }
}
