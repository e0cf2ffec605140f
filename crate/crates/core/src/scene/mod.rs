//! Procedural test scenes with analytic ground truth.
//!
//! View 0 sits at the origin looking down `+z`; the other views sit on a
//! ring of radius `ring_radius` in the `z = 0` plane and look at the point
//! `(0, 0, depth)`.

mod surface;
mod texture;

use nalgebra::{Point3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::depth::{DepthMap, Image};
use crate::error::{Error, Result};
use crate::fusion::PointCloud;
use crate::geometry::{Camera, DepthRange};

pub use surface::Surface;
pub use texture::Texture;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SceneKind {
    /// Plane through `(0, 0, depth)`, tilted about the x axis by `tilt_deg`.
    Plane,
    /// Sphere of radius `0.3 · depth` at `(0, 0, depth)` before a
    /// fronto-parallel backdrop at `1.6 · depth`.
    Sphere,
    /// Fronto-parallel half-planes at `depth` (`x < 0`) and `1.2 · depth`
    /// (`x >= 0`) joined by a wall.
    Step,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneConfig {
    pub kind: SceneKind,
    pub seed: u64,
    pub views: usize,
    pub ring_radius: f64,
    pub focal: f64,
    pub height: usize,
    pub width: usize,
    /// Distance of the look-at point.
    pub depth: f64,
    pub tilt_deg: f64,
    /// Depth range handed to the sweep.
    pub depth_min: f64,
    pub depth_max: f64,
    /// Standard deviation of additive Gaussian image noise.
    pub noise: f64,
    /// Ground-truth cloud keeps surface samples seen by at least this many
    /// views.
    pub gt_min_views: usize,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            kind: SceneKind::Plane,
            seed: 0,
            views: 5,
            ring_radius: 3.0,
            focal: 128.0,
            height: 128,
            width: 128,
            depth: 10.0,
            tilt_deg: 20.0,
            depth_min: 5.0,
            depth_max: 25.0,
            noise: 0.005,
            gt_min_views: 2,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(format!("scene: {m}")));
        if self.views < 2 {
            return cfg(format!("need at least 2 views, got {}", self.views));
        }
        if self.height < 16 || self.width < 16 {
            return cfg(format!(
                "image must be at least 16x16, got {}x{}",
                self.height, self.width
            ));
        }
        if !(self.depth_min > 0.0 && self.depth_max > self.depth_min) {
            return cfg(format!("bad depth range [{}, {}]", self.depth_min, self.depth_max));
        }
        if !(self.depth > 0.0 && self.focal > 0.0 && self.ring_radius > 0.0) {
            return cfg("depth, focal and ring_radius must be positive".into());
        }
        if !(self.noise >= 0.0 && self.tilt_deg.abs() < 80.0) {
            return cfg("noise must be >= 0 and |tilt_deg| < 80".into());
        }
        if self.gt_min_views < 1 || self.gt_min_views > self.views {
            return cfg(format!("gt_min_views must lie in 1..={}", self.views));
        }
        Ok(())
    }

    pub fn depth_range(&self) -> Result<DepthRange> {
        DepthRange::new(self.depth_min, self.depth_max)
    }

    pub fn surface(&self) -> Surface {
        let d = self.depth;
        match self.kind {
            SceneKind::Plane => {
                let t = self.tilt_deg.to_radians();
                Surface::Plane {
                    point: Point3::new(0.0, 0.0, d),
                    normal: Vector3::new(0.0, t.sin(), -t.cos()),
                }
            }
            SceneKind::Sphere => Surface::Sphere {
                center: Point3::new(0.0, 0.0, d),
                radius: 0.3 * d,
                backdrop: 1.6 * d,
            },
            SceneKind::Step => Surface::Step { near: d, far: 1.2 * d },
        }
    }

    pub fn cameras(&self) -> Result<Vec<Camera>> {
        let target = Point3::new(0.0, 0.0, self.depth);
        let mut cams = vec![Camera::look_at(
            self.focal,
            Point3::origin(),
            target,
            self.height,
            self.width,
        )?];
        let ring = self.views - 1;
        for i in 0..ring {
            let a = std::f64::consts::TAU * i as f64 / ring as f64;
            let c = Point3::new(self.ring_radius * a.cos(), self.ring_radius * a.sin(), 0.0);
            cams.push(Camera::look_at(self.focal, c, target, self.height, self.width)?);
        }
        Ok(cams)
    }
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub cameras: Vec<Camera>,
    pub images: Vec<Image>,
    pub depths: Vec<DepthMap>,
    pub gt_cloud: PointCloud,
    pub depth_range: DepthRange,
    pub surface: Surface,
}

impl Scene {
    /// Pixels of `view` whose ground-truth surface point is unoccluded and
    /// in frame in every other view.
    pub fn covisible_mask(&self, view: usize) -> Vec<bool> {
        let cam = &self.cameras[view];
        let depth = &self.depths[view];
        (0..depth.len())
            .map(|i| {
                if !depth.mask[i] {
                    return false;
                }
                let p = cam.backproject(
                    (i % depth.width) as f64,
                    (i / depth.width) as f64,
                    depth.values[i] as f64,
                );
                self.cameras
                    .iter()
                    .enumerate()
                    .all(|(j, c)| j == view || visible_from(&self.surface, c, &p))
            })
            .collect()
    }
}

/// Ray through pixel `(x, y)` scaled so the parameter equals camera depth.
fn depth_ray(cam: &Camera, x: f64, y: f64) -> (Point3<f64>, Vector3<f64>) {
    let dir = cam.rotation().transpose() * (cam.intrinsics_inv() * Vector3::new(x, y, 1.0));
    (cam.center(), dir)
}

/// Depth seen at a sub-pixel location, if the ray hits the surface.
pub fn depth_at(surface: &Surface, cam: &Camera, x: f64, y: f64) -> Option<f64> {
    let (o, d) = depth_ray(cam, x, y);
    surface.intersect(&o, &d)
}

const SUBSAMPLES: [(f64, f64); 4] = [(-0.25, -0.25), (0.25, -0.25), (-0.25, 0.25), (0.25, 0.25)];

fn render_view(cfg: &SceneConfig, surface: &Surface, texture: &Texture, cam: &Camera) -> Result<(Image, DepthMap)> {
    let (h, w) = (cfg.height, cfg.width);
    let n = h * w;
    let pixels: Vec<([f64; 3], f32)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (x, y) = ((i % w) as f64, (i / w) as f64);
            let mut rgb = [0.0; 3];
            for (dx, dy) in SUBSAMPLES {
                let (o, d) = depth_ray(cam, x + dx, y + dy);
                if let Some(t) = surface.intersect(&o, &d) {
                    let c = texture.color(&(o + d * t));
                    for k in 0..3 {
                        rgb[k] += c[k] / SUBSAMPLES.len() as f64;
                    }
                }
            }
            let z = depth_at(surface, cam, x, y).map_or(0.0, |t| t as f32);
            (rgb, z)
        })
        .collect();
    let mut data = vec![0.0; 3 * n];
    let mut depth = Vec::with_capacity(n);
    for (i, (rgb, z)) in pixels.into_iter().enumerate() {
        for c in 0..3 {
            data[c * n + i] = rgb[c];
        }
        depth.push(z);
    }
    Ok((Image::new(3, h, w, data)?, DepthMap::from_values(h, w, depth)?))
}

fn visible_from(surface: &Surface, cam: &Camera, p: &Point3<f64>) -> bool {
    let Some((x, y, z)) = cam.project(p) else {
        return false;
    };
    if !cam.contains(x, y) {
        return false;
    }
    depth_at(surface, cam, x, y).is_some_and(|t| (t - z).abs() <= 1e-6 * z)
}

fn gt_cloud(cfg: &SceneConfig, surface: &Surface, texture: &Texture, cams: &[Camera]) -> PointCloud {
    let (h, w) = (cfg.height, cfg.width);
    let mut cloud = PointCloud::default();
    for cam in cams {
        let pts: Vec<Option<([f64; 3], [u8; 3])>> = (0..h * w * SUBSAMPLES.len())
            .into_par_iter()
            .map(|k| {
                let i = k / SUBSAMPLES.len();
                let (dx, dy) = SUBSAMPLES[k % SUBSAMPLES.len()];
                let (o, d) = depth_ray(cam, (i % w) as f64 + dx, (i / w) as f64 + dy);
                let p = o + d * surface.intersect(&o, &d)?;
                let seen = cams.iter().filter(|c| visible_from(surface, c, &p)).count();
                (seen >= cfg.gt_min_views).then(|| {
                    let c = texture.color(&p);
                    let q = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
                    ([p.x, p.y, p.z], [q(c[0]), q(c[1]), q(c[2])])
                })
            })
            .collect();
        for (p, c) in pts.into_iter().flatten() {
            cloud.push(p, c);
        }
    }
    cloud
}

/// Render every view with analytic depth and the ground-truth cloud.
/// Output is a pure function of the config.
pub fn render_scene(cfg: &SceneConfig) -> Result<Scene> {
    cfg.validate()?;
    let surface = cfg.surface();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let texture = Texture::random(&mut rng, cfg.focal / cfg.depth);
    let cameras = cfg.cameras()?;
    let mut images = Vec::with_capacity(cameras.len());
    let mut depths = Vec::with_capacity(cameras.len());
    for cam in &cameras {
        let (img, depth) = render_view(cfg, &surface, &texture, cam)?;
        images.push(img);
        depths.push(depth);
    }
    if cfg.noise > 0.0 {
        let normal = Normal::new(0.0, cfg.noise).map_err(|e| Error::Config(format!("scene: noise: {e}")))?;
        for img in &mut images {
            for v in &mut img.data {
                *v += normal.sample(&mut rng);
            }
        }
    }
    let gt_cloud = gt_cloud(cfg, &surface, &texture, &cameras);
    Ok(Scene {
        cameras,
        images,
        depths,
        gt_cloud,
        depth_range: cfg.depth_range()?,
        surface,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: SceneKind) -> SceneConfig {
        SceneConfig {
            kind,
            views: 3,
            height: 32,
            width: 32,
            focal: 32.0,
            ..SceneConfig::default()
        }
    }

    #[test]
    fn fronto_parallel_plane_has_constant_depth() {
        let cfg = SceneConfig {
            tilt_deg: 0.0,
            ..small(SceneKind::Plane)
        };
        let s = render_scene(&cfg).unwrap();
        assert_eq!(s.depths[0].valid_count(), 32 * 32);
        assert!(s.depths[0].values.iter().all(|v| *v == 10.0));
    }

    #[test]
    fn same_seed_same_output() {
        let cfg = small(SceneKind::Sphere);
        let a = render_scene(&cfg).unwrap();
        let b = render_scene(&cfg).unwrap();
        assert_eq!(a.images, b.images);
        assert_eq!(a.depths, b.depths);
        assert_eq!(a.gt_cloud, b.gt_cloud);
        let c = render_scene(&SceneConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a.images, c.images);
    }

    #[test]
    fn gt_depth_reprojects_between_views() {
        for kind in [SceneKind::Plane, SceneKind::Sphere, SceneKind::Step] {
            let cfg = small(kind);
            let s = render_scene(&cfg).unwrap();
            let surf = cfg.surface();
            let d = &s.depths[0];
            for i in (0..d.len()).step_by(7) {
                let p = s.cameras[0].backproject((i % 32) as f64, (i / 32) as f64, d.values[i] as f64);
                assert!(surf.distance(&p).abs() < 1e-4, "{kind:?} pixel {i}");
            }
        }
    }

    #[test]
    fn texture_has_gradients() {
        let s = render_scene(&small(SceneKind::Plane)).unwrap();
        let g = s.images[0].intensity();
        let mean_grad: f64 = (0..32 * 31).map(|i| (g[i + 32] - g[i]).abs()).sum::<f64>() / (32.0 * 31.0);
        assert!(mean_grad > 0.01, "{mean_grad}");
    }

    #[test]
    fn rejects_bad_config() {
        for bad in [
            SceneConfig {
                views: 1,
                ..SceneConfig::default()
            },
            SceneConfig {
                height: 8,
                ..SceneConfig::default()
            },
            SceneConfig {
                depth_min: 0.0,
                ..SceneConfig::default()
            },
            SceneConfig {
                gt_min_views: 9,
                ..SceneConfig::default()
            },
        ] {
            assert!(render_scene(&bad).is_err());
        }
    }
}
