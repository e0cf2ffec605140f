use nalgebra::{Matrix3, Vector3};

use super::Camera;
use crate::error::{Error, Result};

/// Fractional source-image coordinates for every reference pixel.
///
/// Entries whose mask is false carry no coordinate contract.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelMap {
    pub height: usize,
    pub width: usize,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub mask: Vec<bool>,
}

/// Plane-sweep warp of one hypothesis layer from `reference` into `source`.
///
/// Each reference pixel is back-projected to its hypothesis depth and the
/// resulting 3D point re-projected into the source view. For a constant
/// layer this is the homography induced by the fronto-parallel plane at that
/// depth. Pixels that land outside the source image, or behind the source
/// camera, are masked out.
pub fn warp_coordinates(reference: &Camera, source: &Camera, depths: &[f64]) -> Result<PixelMap> {
    let (h, w) = (reference.height(), reference.width());
    if depths.len() != h * w {
        return Err(Error::shape(h * w, depths.len()));
    }
    if let Some(bad) = depths.iter().find(|d| !(**d > 0.0) || !d.is_finite()) {
        return Err(Error::invalid("depths", format!("depth must be positive, got {bad}")));
    }

    // X_src = R_rel · X_ref + t_rel with X_ref = d · K_ref⁻¹ p
    let r_rel: Matrix3<f64> = source.rotation() * reference.rotation().transpose();
    let t_rel: Vector3<f64> = source.translation() - r_rel * reference.translation();
    let to_src_cam = r_rel * reference.intrinsics_inv();
    let k_src = source.intrinsics();

    let n = h * w;
    let mut map = PixelMap {
        height: h,
        width: w,
        xs: vec![0.0; n],
        ys: vec![0.0; n],
        mask: vec![false; n],
    };
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let pc = to_src_cam * Vector3::new(x as f64, y as f64, 1.0) * depths[i] + t_rel;
            if pc.z <= 0.0 {
                continue;
            }
            let q = k_src * pc;
            let (u, v) = (q.x / q.z, q.y / q.z);
            if source.contains(u, v) {
                map.xs[i] = u.clamp(0.0, (source.width() - 1) as f64);
                map.ys[i] = v.clamp(0.0, (source.height() - 1) as f64);
                map.mask[i] = true;
            } else {
                map.xs[i] = u;
                map.ys[i] = v;
            }
        }
    }
    Ok(map)
}

/// Bilinear sampling of a `height × width` image at the map's coordinates.
///
/// Returns the sampled values and the in-bounds mask; masked-out entries are
/// exactly zero.
pub fn sample_with_bounds_mask(
    image: &[f64],
    height: usize,
    width: usize,
    map: &PixelMap,
) -> Result<(Vec<f64>, Vec<bool>)> {
    if image.len() != height * width {
        return Err(Error::shape(height * width, image.len()));
    }
    let n = map.height * map.width;
    if map.xs.len() != n || map.ys.len() != n || map.mask.len() != n {
        return Err(Error::shape(n, map.mask.len()));
    }
    let mut out = vec![0.0; n];
    let mut mask = vec![false; n];
    for i in 0..n {
        if !map.mask[i] {
            continue;
        }
        let (x, y) = (map.xs[i], map.ys[i]);
        if !(x >= 0.0 && y >= 0.0 && x <= (width - 1) as f64 && y <= (height - 1) as f64) {
            continue;
        }
        out[i] = bilinear(image, height, width, x, y);
        mask[i] = true;
    }
    Ok((out, mask))
}

/// Bilinear interpolation; `(x, y)` must lie within `[0, w-1] × [0, h-1]`.
#[inline]
pub(crate) fn bilinear(image: &[f64], height: usize, width: usize, x: f64, y: f64) -> f64 {
    let x = snap(x);
    let y = snap(y);
    let x0 = (x.floor() as usize).min(width - 1);
    let y0 = (y.floor() as usize).min(height - 1);
    let x1 = (x0 + 1).min(width - 1);
    let y1 = (y0 + 1).min(height - 1);
    let tx = x - x0 as f64;
    let ty = y - y0 as f64;
    let a = image[y0 * width + x0];
    let b = image[y0 * width + x1];
    let c = image[y1 * width + x0];
    let d = image[y1 * width + x1];
    let top = a + (b - a) * tx;
    let bot = c + (d - c) * tx;
    top + (bot - top) * ty
}

/// Coordinates within round-off of a lattice point sample it exactly.
#[inline]
fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < 1e-9 {
        r
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Point3, Vector3};
    use proptest::prelude::*;

    fn stereo_pair(baseline: f64) -> (Camera, Camera) {
        let r = Camera::simple(100.0, Matrix3::identity(), Vector3::zeros(), 40, 60).unwrap();
        // source centre at +baseline on the x axis
        let s = Camera::simple(100.0, Matrix3::identity(), Vector3::new(-baseline, 0.0, 0.0), 40, 60).unwrap();
        (r, s)
    }

    /// Independent route: explicit world point, then `Camera::project`.
    fn brute_force(reference: &Camera, source: &Camera, x: f64, y: f64, d: f64) -> Option<(f64, f64)> {
        let p = reference.backproject(x, y, d);
        source.project(&p).map(|(u, v, _)| (u, v))
    }

    #[test]
    fn identity_warp() {
        let (r, _) = stereo_pair(0.2);
        let depths = vec![3.7; 40 * 60];
        let map = warp_coordinates(&r, &r, &depths).unwrap();
        assert!(map.mask.iter().all(|m| *m));
        for y in 0..40 {
            for x in 0..60 {
                let i = y * 60 + x;
                assert!((map.xs[i] - x as f64).abs() < 1e-9);
                assert!((map.ys[i] - y as f64).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn translation_disparity_is_f_b_over_d() {
        let (r, s) = stereo_pair(0.2);
        let depths = vec![10.0; 40 * 60];
        let map = warp_coordinates(&r, &s, &depths).unwrap();
        for y in 0..40 {
            for x in 0..60 {
                let i = y * 60 + x;
                let (bu, bv) = brute_force(&r, &s, x as f64, y as f64, 10.0).unwrap();
                assert!((map.xs[i] - bu).abs() < 1e-9 && (map.ys[i] - bv).abs() < 1e-9);
                assert!((x as f64 - map.xs[i] - 2.0).abs() < 1e-9);
                assert!((map.ys[i] - y as f64).abs() < 1e-9);
                if x != 2 {
                    assert_eq!(map.mask[i], x > 2);
                }
            }
        }
    }

    #[test]
    fn disparity_scales_inverse_with_depth() {
        let (r, s) = stereo_pair(0.2);
        for d in [5.0, 10.0, 20.0] {
            let map = warp_coordinates(&r, &s, &vec![d; 40 * 60]).unwrap();
            let i = 20 * 60 + 30;
            assert!((30.0 - map.xs[i] - 20.0 / d).abs() < 1e-9);
        }
    }

    #[test]
    fn behind_source_is_masked() {
        let r = Camera::simple(100.0, Matrix3::identity(), Vector3::zeros(), 8, 8).unwrap();
        // source 5 units ahead of the reference, looking the same way
        let s = Camera::simple(100.0, Matrix3::identity(), Vector3::new(0.0, 0.0, -5.0), 8, 8).unwrap();
        let map = warp_coordinates(&r, &s, &vec![2.0; 64]).unwrap();
        assert!(map.mask.iter().all(|m| !*m));
    }

    #[test]
    fn rejects_non_positive_depths() {
        let (r, s) = stereo_pair(0.2);
        let mut depths = vec![1.0; 40 * 60];
        depths[7] = 0.0;
        assert!(warp_coordinates(&r, &s, &depths).is_err());
        assert!(warp_coordinates(&r, &s, &[1.0]).is_err());
    }

    #[test]
    fn sampling_basics() {
        let img = vec![2.0, 4.0, 6.0, 8.0];
        let map = PixelMap {
            height: 1,
            width: 4,
            xs: vec![0.5, 1.0, 0.0, 5.0],
            ys: vec![0.0, 1.0, 0.5, 0.0],
            mask: vec![true, true, true, true],
        };
        let (v, m) = sample_with_bounds_mask(&img, 2, 2, &map).unwrap();
        assert_eq!(v, vec![3.0, 8.0, 4.0, 0.0]);
        assert_eq!(m, vec![true, true, true, false]);

        let flat = vec![1.25; 4];
        let (v, _) = sample_with_bounds_mask(&flat, 2, 2, &map).unwrap();
        assert!(v[..3].iter().all(|x| *x == 1.25));
    }

    fn arb_camera() -> impl Strategy<Value = Camera> {
        (
            -2.0..2.0f64,
            -2.0..2.0f64,
            -1.0..1.0f64,
            -1.0..1.0f64,
            -1.0..1.0f64,
            60.0..150.0f64,
        )
            .prop_map(|(cx, cy, cz, tx, ty, f)| {
                Camera::look_at(f, Point3::new(cx, cy, cz), Point3::new(tx, ty, 10.0), 32, 48).unwrap()
            })
    }

    proptest! {
        #[test]
        fn round_trip_returns_original_pixel(
            a in arb_camera(),
            b in arb_camera(),
            xi in 0usize..48,
            yi in 0usize..32,
            d in 4.0..20.0f64,
        ) {
            let fwd = warp_coordinates(&a, &b, &vec![d; 32 * 48]).unwrap();
            let i = yi * 48 + xi;
            // depth of the same 3D point in the source frame
            let world = a.backproject(xi as f64, yi as f64, d);
            let src_depth = b.world_to_camera(&world).z;
            prop_assume!(src_depth > 0.0);
            let back = b.backproject(fwd.xs[i], fwd.ys[i], src_depth);
            let (rx, ry, rd) = a.project(&back).unwrap();
            prop_assert!((rx - xi as f64).abs() < 1e-6);
            prop_assert!((ry - yi as f64).abs() < 1e-6);
            prop_assert!((rd - d).abs() < 1e-6 * d);
        }
    }
}
