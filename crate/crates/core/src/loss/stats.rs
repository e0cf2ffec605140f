use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::unity::UnityVolume;

/// Lower edges of the scaling-factor bins; the last bin is open-ended.
pub const SCALING_BIN_EDGES: [f64; 5] = [0.0, 1.0, 2.0, 4.0, 8.0];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Histogram {
    pub counts: [u64; 5],
    pub sums: [f64; 5],
}

impl Histogram {
    pub fn add(&mut self, x: f64) {
        let bin = SCALING_BIN_EDGES.iter().rposition(|e| x >= *e).unwrap_or(0);
        self.counts[bin] += 1;
        self.sums[bin] += x;
    }

    pub fn merge(&self, other: &Histogram) -> Histogram {
        let mut out = self.clone();
        for b in 0..5 {
            out.counts[b] += other.counts[b];
            out.sums[b] += other.sums[b];
        }
        out
    }

    /// Bin holding the most samples (first on ties).
    pub fn peak_count_bin(&self) -> usize {
        (0..5).fold(0, |best, b| if self.counts[b] > self.counts[best] { b } else { best })
    }

    /// Bin holding the largest summed factor (first on ties).
    pub fn peak_sum_bin(&self) -> usize {
        (0..5).fold(0, |best, b| if self.sums[b] > self.sums[best] { b } else { best })
    }

    pub fn label(bin: usize) -> String {
        match SCALING_BIN_EDGES.get(bin + 1) {
            Some(hi) => format!("[{}, {})", SCALING_BIN_EDGES[bin], hi),
            None => format!("[{}, inf)", SCALING_BIN_EDGES[bin]),
        }
    }
}

/// Scaling factors of the unlimited loss, split by sample sign.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScalingStats {
    /// `|q - u| / q⁺` over positive targets.
    pub positive: Histogram,
    /// `u / q⁺` over negative targets.
    pub negative: Histogram,
}

impl ScalingStats {
    pub fn combined(&self) -> Histogram {
        self.positive.merge(&self.negative)
    }
}

/// Histogram the modulating factors that the un-limited loss would apply to
/// each valid element.
pub fn scaling_factor_stats(estimate: &UnityVolume, label: &UnityVolume) -> Result<ScalingStats> {
    let shape = |u: &UnityVolume| (u.planes, u.height, u.width);
    if shape(estimate) != shape(label) {
        return Err(Error::shape(
            format!("{:?}", shape(label)),
            format!("{:?}", shape(estimate)),
        ));
    }
    let q_pos = label.positive_targets();
    let mut stats = ScalingStats::default();
    for p in 0..label.pixels() {
        if !(label.mask[p] && estimate.mask[p]) {
            continue;
        }
        for m in 0..label.planes {
            let (u, q) = (estimate.at(m, p), label.at(m, p));
            if q > 0.0 {
                stats.positive.add((q - u).abs() / q_pos[p]);
            } else {
                stats.negative.add(u / q_pos[p]);
            }
        }
    }
    Ok(stats)
}

/// Monte-Carlo statistics for uniform random estimates against random
/// sparse labels: `pixels` columns of `planes`, one positive per column
/// with its target uniform in `(0, 1]`.
pub fn sample_scaling_stats(pixels: usize, planes: usize, seed: u64) -> Result<ScalingStats> {
    if planes < 2 || pixels == 0 {
        return Err(Error::invalid("shape", "need at least one pixel and two planes"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = ScalingStats::default();
    for _ in 0..pixels {
        let o = rng.random_range(0..planes);
        let q = 1.0 - rng.random::<f64>();
        for m in 0..planes {
            let u: f64 = rng.random();
            if m == o {
                stats.positive.add((q - u).abs() / q);
            } else {
                stats.negative.add(u / q);
            }
        }
    }
    Ok(stats)
}
