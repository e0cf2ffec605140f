use std::cmp::Ordering;

use crate::depth::{DepthMap, Image};
use crate::error::{Error, Result};
use crate::geometry::Camera;

use super::filter::{geometric_check, photometric_filter, FilterParams};
use super::PointCloud;

/// One input view: camera, estimated depth (with confidence) and an
/// optional colour image at the depth map's resolution.
#[derive(Debug, Clone)]
pub struct FusionView {
    pub camera: Camera,
    pub depth: DepthMap,
    pub image: Option<Image>,
}

fn cmp_f64s(a: impl Iterator<Item = f64>, b: impl Iterator<Item = f64>) -> Ordering {
    a.zip(b)
        .map(|(x, y)| x.total_cmp(&y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Content order, so that the result does not depend on input order.
fn canonical_order(views: &[FusionView]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..views.len()).collect();
    order.sort_by(|&a, &b| {
        let (va, vb) = (&views[a], &views[b]);
        cmp_f64s(
            va.camera.extrinsics().iter().copied(),
            vb.camera.extrinsics().iter().copied(),
        )
        .then_with(|| {
            cmp_f64s(
                va.camera.intrinsics().iter().copied(),
                vb.camera.intrinsics().iter().copied(),
            )
        })
        .then_with(|| {
            cmp_f64s(
                va.depth.values.iter().map(|v| *v as f64),
                vb.depth.values.iter().map(|v| *v as f64),
            )
        })
    });
    order
}

fn color_at(image: Option<&Image>, pixel: usize) -> [u8; 3] {
    let Some(img) = image else {
        return [255, 255, 255];
    };
    let n = img.height * img.width;
    let q = |c: usize| (img.data[c * n + pixel].clamp(0.0, 1.0) * 255.0).round() as u8;
    if img.channels >= 3 {
        [q(0), q(1), q(2)]
    } else {
        let g = q(0);
        [g, g, g]
    }
}

/// Filter every view and merge the survivors into one cloud.
///
/// Views are visited in a fixed content order. Each surviving pixel is
/// emitted once, at the mean of its own back-projection and those re-seen
/// by agreeing source views; the source pixels it matched are consumed and
/// not emitted again.
pub fn fuse(views: &[FusionView], params: &FilterParams) -> Result<PointCloud> {
    params.validate()?;
    for v in views {
        v.depth.check_shape(v.camera.height(), v.camera.width())?;
        if let Some(img) = &v.image {
            if img.height != v.depth.height || img.width != v.depth.width {
                return Err(Error::shape(
                    format!("{}x{} image", v.depth.height, v.depth.width),
                    format!("{}x{}", img.height, img.width),
                ));
            }
        }
    }
    let filtered: Vec<DepthMap> = views
        .iter()
        .map(|v| photometric_filter(&v.depth, params.conf_threshold))
        .collect();
    let order = canonical_order(views);
    let mut consumed: Vec<Vec<bool>> = filtered.iter().map(|d| vec![false; d.len()]).collect();
    let mut cloud = PointCloud::default();

    for &r in &order {
        let others: Vec<usize> = order.iter().copied().filter(|&s| s != r).collect();
        let sources: Vec<(&Camera, &DepthMap)> = others.iter().map(|&s| (&views[s].camera, &filtered[s])).collect();
        let check = geometric_check((&views[r].camera, &filtered[r]), &sources)?;
        let depth = &filtered[r];
        for i in 0..depth.len() {
            if !depth.mask[i] || consumed[r][i] {
                continue;
            }
            let Some((tp, td)) = params.surviving_thresholds(&check, i) else {
                continue;
            };
            let (x, y) = ((i % depth.width) as f64, (i / depth.width) as f64);
            let own = views[r].camera.backproject(x, y, depth.values[i] as f64);
            let mut sum = own.coords;
            let mut count = 1.0;
            for (k, v) in check.views.iter().enumerate() {
                if v.agrees(i, tp, td) {
                    let p = v.points[i];
                    sum += nalgebra::Vector3::new(p[0], p[1], p[2]);
                    count += 1.0;
                    consumed[others[k]][v.source_pixel[i]] = true;
                }
            }
            let mean = sum / count;
            cloud.push([mean.x, mean.y, mean.z], color_at(views[r].image.as_ref(), i));
            consumed[r][i] = true;
        }
    }
    Ok(cloud)
}
