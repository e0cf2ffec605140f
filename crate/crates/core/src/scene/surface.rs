use nalgebra::{Point3, Vector3};

/// Analytic scene geometry.
#[derive(Debug, Clone, PartialEq)]
pub enum Surface {
    Plane {
        point: Point3<f64>,
        normal: Vector3<f64>,
    },
    /// Sphere in front of the plane `z = backdrop`.
    Sphere {
        center: Point3<f64>,
        radius: f64,
        backdrop: f64,
    },
    /// `z = near` for `x < 0`, `z = far` for `x >= 0`, and the wall `x = 0`
    /// between them.
    Step {
        near: f64,
        far: f64,
    },
}

fn positive(t: f64) -> Option<f64> {
    (t.is_finite() && t > 1e-12).then_some(t)
}

fn nearest(candidates: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    candidates.into_iter().flatten().min_by(|a, b| a.total_cmp(b))
}

fn plane_z(o: &Point3<f64>, d: &Vector3<f64>, z: f64) -> Option<f64> {
    positive((z - o.z) / d.z)
}

impl Surface {
    /// Smallest positive `t` with `o + t·d` on the surface.
    pub fn intersect(&self, o: &Point3<f64>, d: &Vector3<f64>) -> Option<f64> {
        match *self {
            Surface::Plane { point, normal } => {
                let den = normal.dot(d);
                if den == 0.0 {
                    return None;
                }
                positive(normal.dot(&(point - o)) / den)
            }
            Surface::Sphere {
                center,
                radius,
                backdrop,
            } => {
                let oc = o - center;
                let a = d.dot(d);
                let b = oc.dot(d);
                let c = oc.dot(&oc) - radius * radius;
                let disc = b * b - a * c;
                let sphere = if disc >= 0.0 {
                    let s = disc.sqrt();
                    nearest([positive((-b - s) / a), positive((-b + s) / a)])
                } else {
                    None
                };
                nearest([sphere, plane_z(o, d, backdrop)])
            }
            Surface::Step { near, far } => {
                let at = |t: f64| o + d * t;
                let near_hit = plane_z(o, d, near).filter(|&t| at(t).x < 0.0);
                let far_hit = plane_z(o, d, far).filter(|&t| at(t).x >= 0.0);
                let wall = positive(-o.x / d.x).filter(|&t| (near..=far).contains(&at(t).z));
                nearest([near_hit, far_hit, wall])
            }
        }
    }

    /// Unsigned distance from `p` to the surface.
    pub fn distance(&self, p: &Point3<f64>) -> f64 {
        match *self {
            Surface::Plane { point, normal } => normal.normalize().dot(&(p - point)).abs(),
            Surface::Sphere {
                center,
                radius,
                backdrop,
            } => ((p - center).norm() - radius).abs().min((backdrop - p.z).abs()),
            Surface::Step { near, far } => {
                let half = |z0: f64, on: bool| {
                    if on {
                        (p.z - z0).abs()
                    } else {
                        (p.x * p.x + (p.z - z0).powi(2)).sqrt()
                    }
                };
                let dz = if p.z < near {
                    near - p.z
                } else if p.z > far {
                    p.z - far
                } else {
                    0.0
                };
                half(near, p.x < 0.0)
                    .min(half(far, p.x >= 0.0))
                    .min((p.x * p.x + dz * dz).sqrt())
            }
        }
    }
}
