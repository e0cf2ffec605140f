use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::reduce::pairwise_mean;

use super::PointCloud;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub completeness: f64,
    pub overall: f64,
}

/// Uniform grid over the target cloud. Queries scan shells of cells
/// outward and stop once the next shell cannot beat the best hit or the cap.
struct Grid<'a> {
    cell: f64,
    cap: f64,
    points: &'a [[f64; 3]],
    cells: HashMap<[i64; 3], Vec<usize>>,
}

/// Cell edge near twice the typical point spacing, treating the cloud as a
/// surface spanning the two largest extents of its bounding box.
fn cell_size(points: &[[f64; 3]], cap: f64) -> f64 {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let mut ext: Vec<f64> = (0..3).map(|k| hi[k] - lo[k]).collect();
    ext.sort_by(|a, b| b.total_cmp(a));
    let spacing = (ext[0] * ext[1] / points.len() as f64).sqrt();
    (2.0 * spacing).clamp(cap / 16.0, cap)
}

impl<'a> Grid<'a> {
    fn new(points: &'a [[f64; 3]], cap: f64) -> Self {
        let cell = cell_size(points, cap);
        let mut cells: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(p, cell)).or_default().push(i);
        }
        Grid {
            cell,
            cap,
            points,
            cells,
        }
    }

    fn key(p: &[f64; 3], cell: f64) -> [i64; 3] {
        [
            (p[0] / cell).floor() as i64,
            (p[1] / cell).floor() as i64,
            (p[2] / cell).floor() as i64,
        ]
    }

    fn scan(&self, k: [i64; 3], q: &[f64; 3], best: &mut f64) {
        if let Some(ids) = self.cells.get(&k) {
            for &i in ids {
                let p = &self.points[i];
                let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2);
                *best = best.min(d2);
            }
        }
    }

    /// Distance to the nearest point, capped.
    fn capped_distance(&self, q: &[f64; 3]) -> f64 {
        let k = Self::key(q, self.cell);
        let mut best = self.cap * self.cap;
        let max_shell = (self.cap / self.cell).ceil() as i64 + 1;
        for s in 0..=max_shell {
            // Points in shell s lie at least (s - 1) cells away.
            let reach = (s - 1).max(0) as f64 * self.cell;
            if reach * reach >= best {
                break;
            }
            for dx in -s..=s {
                for dy in -s..=s {
                    if dx.abs() == s || dy.abs() == s {
                        for dz in -s..=s {
                            self.scan([k[0] + dx, k[1] + dy, k[2] + dz], q, &mut best);
                        }
                    } else {
                        self.scan([k[0] + dx, k[1] + dy, k[2] - s], q, &mut best);
                        if s > 0 {
                            self.scan([k[0] + dx, k[1] + dy, k[2] + s], q, &mut best);
                        }
                    }
                }
            }
        }
        best.sqrt()
    }
}

fn mean_capped(from: &[[f64; 3]], to: &[[f64; 3]], cap: f64) -> f64 {
    if from.is_empty() || to.is_empty() {
        return cap;
    }
    let grid = Grid::new(to, cap);
    let d: Vec<f64> = from.par_iter().map(|q| grid.capped_distance(q)).collect();
    pairwise_mean(&d).unwrap_or(cap)
}

/// Accuracy (reconstruction to GT) and completeness (GT to reconstruction)
/// as mean nearest-neighbour distances capped at `dist_cap`. An empty side
/// scores the cap.
pub fn evaluate(recon: &PointCloud, gt: &PointCloud, dist_cap: f64) -> Result<Metrics> {
    if !(dist_cap > 0.0 && dist_cap.is_finite()) {
        return Err(Error::invalid("dist_cap", format!("must be positive, got {dist_cap}")));
    }
    let finite = |c: &PointCloud| c.points.iter().all(|p| p.iter().all(|v| v.is_finite()));
    if !finite(recon) || !finite(gt) {
        return Err(Error::invalid("points", "clouds must hold finite coordinates"));
    }
    let accuracy = mean_capped(&recon.points, &gt.points, dist_cap);
    let completeness = mean_capped(&gt.points, &recon.points, dist_cap);
    Ok(Metrics {
        accuracy,
        completeness,
        overall: 0.5 * (accuracy + completeness),
    })
}
