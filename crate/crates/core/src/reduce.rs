//! Order-fixed reductions.
//!
//! Means over large volumes go through a pairwise tree so the result depends
//! only on the element order, never on how work was split across threads.

const LEAF: usize = 32;

/// Pairwise (cascade) summation with a fixed split point.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= LEAF {
        let mut acc = 0.0;
        for &v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Mean through [`pairwise_sum`]; `None` for an empty slice.
pub fn pairwise_mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(pairwise_sum(values) / values.len() as f64)
    }
}
