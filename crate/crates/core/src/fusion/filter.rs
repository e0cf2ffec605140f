use nalgebra::Point3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::depth::DepthMap;
use crate::error::{Error, Result};
use crate::geometry::Camera;

/// Thresholds for the photometric and geometric filters.
///
/// The dynamic rule keeps a pixel when, for some `k` in
/// `dyn_min_views..=dyn_max_views`, at least `k` source views agree with
/// pixel error below `k · dyn_pixel_slope` and relative depth error below
/// `k · dyn_depth_slope`: few views must agree tightly, many views may agree
/// loosely. View counts are capped at the number of available sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterParams {
    pub conf_threshold: f64,
    pub min_views: usize,
    pub pixel_threshold: f64,
    pub depth_threshold: f64,
    pub dynamic: bool,
    pub dyn_min_views: usize,
    pub dyn_max_views: usize,
    pub dyn_pixel_slope: f64,
    pub dyn_depth_slope: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        FilterParams {
            conf_threshold: 0.3,
            min_views: 3,
            pixel_threshold: 1.0,
            depth_threshold: 0.01,
            dynamic: false,
            dyn_min_views: 2,
            dyn_max_views: 10,
            dyn_pixel_slope: 0.25,
            dyn_depth_slope: 0.0025,
        }
    }
}

impl FilterParams {
    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(format!("filter: {m}")));
        if !(0.0..=1.0).contains(&self.conf_threshold) {
            return cfg(format!(
                "conf_threshold must lie in [0, 1], got {}",
                self.conf_threshold
            ));
        }
        if self.min_views < 1 {
            return cfg("min_views must be >= 1".into());
        }
        for (name, v) in [
            ("pixel_threshold", self.pixel_threshold),
            ("depth_threshold", self.depth_threshold),
            ("dyn_pixel_slope", self.dyn_pixel_slope),
            ("dyn_depth_slope", self.dyn_depth_slope),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return cfg(format!("{name} must be positive, got {v}"));
            }
        }
        if self.dyn_min_views < 2 || self.dyn_max_views < self.dyn_min_views {
            return cfg(format!(
                "dynamic view range {}..={} must start at 2 or more and be non-empty",
                self.dyn_min_views, self.dyn_max_views
            ));
        }
        Ok(())
    }

    /// Per-view thresholds of the rule that keeps `pixel`, if any.
    pub(crate) fn surviving_thresholds(&self, check: &Consistency, pixel: usize) -> Option<(f64, f64)> {
        let sources = check.views.len();
        let rules: Vec<(usize, f64, f64)> = if self.dynamic {
            (self.dyn_min_views..=self.dyn_max_views)
                .map(|k| (k, k as f64 * self.dyn_pixel_slope, k as f64 * self.dyn_depth_slope))
                .collect()
        } else {
            vec![(self.min_views, self.pixel_threshold, self.depth_threshold)]
        };
        rules.into_iter().find_map(|(k, tp, td)| {
            let agree = check.views.iter().filter(|v| v.agrees(pixel, tp, td)).count();
            (agree >= k.min(sources)).then_some((tp, td))
        })
    }
}

/// Invalidate pixels whose confidence is below `threshold`. Maps without
/// confidence pass through unchanged.
pub fn photometric_filter(depth: &DepthMap, threshold: f64) -> DepthMap {
    let mut out = depth.clone();
    if let Some(conf) = &depth.confidence {
        for (i, c) in conf.iter().enumerate() {
            if (*c as f64) < threshold {
                out.invalidate(i);
            }
        }
    }
    out
}

/// Forward-backward reprojection of every reference pixel through one
/// source view. Failed pixels hold infinite errors.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewCheck {
    pub pixel_error: Vec<f64>,
    pub depth_error: Vec<f64>,
    /// World point re-seen by the source view.
    pub points: Vec<[f64; 3]>,
    /// Nearest source pixel hit, `usize::MAX` when none.
    pub source_pixel: Vec<usize>,
}

impl ViewCheck {
    #[inline]
    pub fn agrees(&self, pixel: usize, pixel_threshold: f64, depth_threshold: f64) -> bool {
        self.pixel_error[pixel] < pixel_threshold && self.depth_error[pixel] < depth_threshold
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Consistency {
    pub height: usize,
    pub width: usize,
    pub views: Vec<ViewCheck>,
}

impl Consistency {
    /// Number of source views agreeing with `pixel` under fixed thresholds.
    pub fn count(&self, pixel: usize, pixel_threshold: f64, depth_threshold: f64) -> usize {
        self.views
            .iter()
            .filter(|v| v.agrees(pixel, pixel_threshold, depth_threshold))
            .count()
    }
}

/// Source depth at a sub-pixel location: bilinear when all four taps are
/// valid, otherwise the nearest tap if it is valid.
fn sample_depth(depth: &DepthMap, x: f64, y: f64) -> Option<f64> {
    let (w, h) = (depth.width, depth.height);
    let x0 = (x.floor().max(0.0) as usize).min(w - 1);
    let y0 = (y.floor().max(0.0) as usize).min(h - 1);
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let taps = [(x0, y0), (x1, y0), (x0, y1), (x1, y1)];
    if taps.iter().all(|&(tx, ty)| depth.mask[ty * w + tx]) {
        let tx = (x - x0 as f64).clamp(0.0, 1.0);
        let ty = (y - y0 as f64).clamp(0.0, 1.0);
        let d = |i: usize| depth.values[taps[i].1 * w + taps[i].0] as f64;
        let top = d(0) + (d(1) - d(0)) * tx;
        let bot = d(2) + (d(3) - d(2)) * tx;
        return Some(top + (bot - top) * ty);
    }
    let nx = (x.round().max(0.0) as usize).min(w - 1);
    let ny = (y.round().max(0.0) as usize).min(h - 1);
    let i = ny * w + nx;
    depth.mask[i].then(|| depth.values[i] as f64)
}

fn check_view(ref_cam: &Camera, ref_depth: &DepthMap, src_cam: &Camera, src_depth: &DepthMap) -> ViewCheck {
    let (h, w) = (ref_depth.height, ref_depth.width);
    let n = h * w;
    let results: Vec<(f64, f64, [f64; 3], usize)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let fail = (f64::INFINITY, f64::INFINITY, [f64::NAN; 3], usize::MAX);
            if !ref_depth.mask[i] {
                return fail;
            }
            let (x, y) = ((i % w) as f64, (i / w) as f64);
            let d = ref_depth.values[i] as f64;
            let world = ref_cam.backproject(x, y, d);
            let Some((xs, ys, _)) = src_cam.project(&world) else {
                return fail;
            };
            if !src_cam.contains(xs, ys) {
                return fail;
            }
            let Some(ds) = sample_depth(src_depth, xs, ys) else {
                return fail;
            };
            let back: Point3<f64> = src_cam.backproject(xs, ys, ds);
            let Some((xr, yr, dr)) = ref_cam.project(&back) else {
                return fail;
            };
            let pe = ((xr - x).powi(2) + (yr - y).powi(2)).sqrt();
            let de = (dr - d).abs() / d;
            let sp = (ys.round() as usize).min(src_depth.height - 1) * src_depth.width
                + (xs.round() as usize).min(src_depth.width - 1);
            (pe, de, [back.x, back.y, back.z], sp)
        })
        .collect();
    let mut check = ViewCheck {
        pixel_error: Vec::with_capacity(n),
        depth_error: Vec::with_capacity(n),
        points: Vec::with_capacity(n),
        source_pixel: Vec::with_capacity(n),
    };
    for (pe, de, p, sp) in results {
        check.pixel_error.push(pe);
        check.depth_error.push(de);
        check.points.push(p);
        check.source_pixel.push(sp);
    }
    check
}

/// Reproject every valid reference pixel into each source view and back.
pub fn geometric_check(reference: (&Camera, &DepthMap), sources: &[(&Camera, &DepthMap)]) -> Result<Consistency> {
    let (ref_cam, ref_depth) = reference;
    ref_depth.check_shape(ref_cam.height(), ref_cam.width())?;
    for (cam, depth) in sources {
        depth.check_shape(cam.height(), cam.width())?;
    }
    Ok(Consistency {
        height: ref_depth.height,
        width: ref_depth.width,
        views: sources
            .iter()
            .map(|(cam, depth)| check_view(ref_cam, ref_depth, cam, depth))
            .collect(),
    })
}

/// Survival mask under the fixed-threshold rule: at least `min_views`
/// agreeing sources (capped at the number of sources).
pub fn static_filter(check: &Consistency, params: &FilterParams) -> Vec<bool> {
    let p = FilterParams {
        dynamic: false,
        ..params.clone()
    };
    mask_with(check, &p)
}

/// Survival mask under the view-count-dependent rule.
pub fn dynamic_filter(check: &Consistency, params: &FilterParams) -> Vec<bool> {
    let p = FilterParams {
        dynamic: true,
        ..params.clone()
    };
    mask_with(check, &p)
}

fn mask_with(check: &Consistency, params: &FilterParams) -> Vec<bool> {
    (0..check.height * check.width)
        .map(|i| params.surviving_thresholds(check, i).is_some())
        .collect()
}
