use nalgebra::{Matrix3, Matrix4, Point3, Vector3};

use crate::error::{Error, Result};

const ORTHONORMAL_TOL: f64 = 1e-9;

/// Pinhole camera: intrinsics `K`, world-to-camera rigid transform `T` and
/// the image size in pixels.
///
/// Pixel coordinates put integer values at pixel centres, so pixel `(0, 0)`
/// covers `[-0.5, 0.5)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    intrinsics: Matrix3<f64>,
    intrinsics_inv: Matrix3<f64>,
    extrinsics: Matrix4<f64>,
    height: usize,
    width: usize,
}

impl Camera {
    pub fn new(intrinsics: Matrix3<f64>, extrinsics: Matrix4<f64>, height: usize, width: usize) -> Result<Self> {
        let k = &intrinsics;
        if k[(1, 0)] != 0.0 || k[(2, 0)] != 0.0 || k[(2, 1)] != 0.0 {
            return Err(Error::InvalidCamera("intrinsics must be upper-triangular".into()));
        }
        if !(k[(0, 0)] > 0.0 && k[(1, 1)] > 0.0 && k[(2, 2)] > 0.0) {
            return Err(Error::InvalidCamera("intrinsics need a positive diagonal".into()));
        }
        let intrinsics_inv = intrinsics
            .try_inverse()
            .ok_or_else(|| Error::InvalidCamera("intrinsics are not invertible".into()))?;

        let bottom = extrinsics.fixed_view::<1, 4>(3, 0);
        if bottom[(0, 0)] != 0.0 || bottom[(0, 1)] != 0.0 || bottom[(0, 2)] != 0.0 || bottom[(0, 3)] != 1.0 {
            return Err(Error::InvalidCamera("extrinsics bottom row must be [0 0 0 1]".into()));
        }
        let r: Matrix3<f64> = extrinsics.fixed_view::<3, 3>(0, 0).into_owned();
        let gram = r.transpose() * r - Matrix3::identity();
        if gram.amax() > ORTHONORMAL_TOL {
            return Err(Error::InvalidCamera(format!(
                "rotation is not orthonormal (max |RᵀR - I| = {:e})",
                gram.amax()
            )));
        }
        if r.determinant() <= 0.0 {
            return Err(Error::InvalidCamera("rotation has negative determinant".into()));
        }
        if height == 0 || width == 0 {
            return Err(Error::InvalidCamera("empty image size".into()));
        }
        if !intrinsics.iter().chain(extrinsics.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidCamera("non-finite entries".into()));
        }
        Ok(Camera {
            intrinsics,
            intrinsics_inv,
            extrinsics,
            height,
            width,
        })
    }

    /// Camera with focal `focal` and principal point at the image centre.
    pub fn simple(
        focal: f64,
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
        height: usize,
        width: usize,
    ) -> Result<Self> {
        let k = Matrix3::new(
            focal,
            0.0,
            (width as f64 - 1.0) / 2.0,
            0.0,
            focal,
            (height as f64 - 1.0) / 2.0,
            0.0,
            0.0,
            1.0,
        );
        Camera::new(k, rigid(rotation, translation), height, width)
    }

    /// Camera at `center` looking at `target`; image `y` points along the
    /// projection of world `+y`.
    pub fn look_at(focal: f64, center: Point3<f64>, target: Point3<f64>, height: usize, width: usize) -> Result<Self> {
        let z = (target - center).normalize();
        let down = Vector3::new(0.0, 1.0, 0.0);
        let x = down.cross(&z);
        if x.norm() < 1e-12 {
            return Err(Error::InvalidCamera("viewing direction parallel to up vector".into()));
        }
        let x = x.normalize();
        let y = z.cross(&x);
        let r = Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]);
        let t = -(r * center.coords);
        Camera::simple(focal, r, t, height, width)
    }

    pub fn intrinsics(&self) -> &Matrix3<f64> {
        &self.intrinsics
    }

    pub fn intrinsics_inv(&self) -> &Matrix3<f64> {
        &self.intrinsics_inv
    }

    pub fn extrinsics(&self) -> &Matrix4<f64> {
        &self.extrinsics
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        self.extrinsics.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn translation(&self) -> Vector3<f64> {
        self.extrinsics.fixed_view::<3, 1>(0, 3).into_owned()
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Camera centre in world coordinates.
    pub fn center(&self) -> Point3<f64> {
        Point3::from(-(self.rotation().transpose() * self.translation()))
    }

    pub fn world_to_camera(&self, p: &Point3<f64>) -> Vector3<f64> {
        self.rotation() * p.coords + self.translation()
    }

    /// Project a world point; returns `(x, y, depth)` or `None` when the
    /// point is not strictly in front of the camera.
    pub fn project(&self, p: &Point3<f64>) -> Option<(f64, f64, f64)> {
        let pc = self.world_to_camera(p);
        if pc.z <= 0.0 {
            return None;
        }
        let h = self.intrinsics * pc;
        Some((h.x / h.z, h.y / h.z, pc.z))
    }

    /// World point seen at pixel `(x, y)` with depth `depth` (camera z).
    pub fn backproject(&self, x: f64, y: f64, depth: f64) -> Point3<f64> {
        let pc = self.intrinsics_inv * Vector3::new(x, y, 1.0) * depth;
        Point3::from(self.rotation().transpose() * (pc - self.translation()))
    }

    /// Unit ray direction through pixel `(x, y)` in world coordinates.
    pub fn ray_direction(&self, x: f64, y: f64) -> Vector3<f64> {
        (self.rotation().transpose() * (self.intrinsics_inv * Vector3::new(x, y, 1.0))).normalize()
    }

    /// Whether `(x, y)` lies within the pixel-centre lattice, up to a
    /// round-off tolerance.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        const TOL: f64 = 1e-9;
        x >= -TOL && y >= -TOL && x <= (self.width - 1) as f64 + TOL && y <= (self.height - 1) as f64 + TOL
    }

    /// Same camera after area-downsampling the image by an integer factor.
    ///
    /// Output pixel `j` averages input pixels `f·j .. f·j + f - 1`, so its
    /// centre sits at input coordinate `f·j + (f - 1) / 2`.
    pub fn downsampled(&self, factor: usize) -> Result<Camera> {
        if factor == 0 {
            return Err(Error::invalid("factor", "must be >= 1"));
        }
        if factor == 1 {
            return Ok(self.clone());
        }
        let f = factor as f64;
        let off = (f - 1.0) / 2.0;
        let s = Matrix3::new(1.0 / f, 0.0, -off / f, 0.0, 1.0 / f, -off / f, 0.0, 0.0, 1.0);
        Camera::new(
            s * self.intrinsics,
            self.extrinsics,
            self.height / factor,
            self.width / factor,
        )
    }
}

pub(crate) fn rigid(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Matrix4<f64> {
    let mut t = Matrix4::identity();
    t.fixed_view_mut::<3, 3>(0, 0).copy_from(&rotation);
    t.fixed_view_mut::<3, 1>(0, 3).copy_from(&translation);
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cam() -> Camera {
        Camera::simple(100.0, Matrix3::identity(), Vector3::zeros(), 48, 64).unwrap()
    }

    #[test]
    fn rejects_bad_intrinsics() {
        let mut k = Matrix3::identity();
        k[(0, 0)] = 0.0;
        assert!(Camera::new(k, Matrix4::identity(), 4, 4).is_err());
        let mut k = Matrix3::identity();
        k[(1, 0)] = 0.5;
        assert!(Camera::new(k, Matrix4::identity(), 4, 4).is_err());
    }

    #[test]
    fn rejects_non_orthonormal_rotation() {
        let mut t = Matrix4::identity();
        t[(0, 0)] = 1.0 + 1e-6;
        assert!(Camera::new(Matrix3::identity(), t, 4, 4).is_err());
        let mut t = Matrix4::identity();
        t[(0, 0)] = -1.0;
        assert!(Camera::new(Matrix3::identity(), t, 4, 4).is_err());
    }

    #[test]
    fn project_backproject_round_trip() {
        let c = Camera::look_at(80.0, Point3::new(1.0, -0.5, 0.2), Point3::new(0.0, 0.0, 10.0), 48, 64).unwrap();
        let p = c.backproject(12.25, 30.5, 9.0);
        let (x, y, d) = c.project(&p).unwrap();
        assert_relative_eq!(x, 12.25, epsilon = 1e-9);
        assert_relative_eq!(y, 30.5, epsilon = 1e-9);
        assert_relative_eq!(d, 9.0, epsilon = 1e-9);
    }

    #[test]
    fn look_at_identity_orientation() {
        let c = Camera::look_at(50.0, Point3::origin(), Point3::new(0.0, 0.0, 5.0), 8, 8).unwrap();
        assert_relative_eq!(c.rotation(), Matrix3::identity(), epsilon = 1e-12);
    }

    #[test]
    fn downsampled_keeps_pixel_centres() {
        let c = cam();
        let d = c.downsampled(4).unwrap();
        assert_eq!((d.height(), d.width()), (12, 16));
        let p = Point3::new(0.3, -0.2, 7.0);
        let (x, y, _) = c.project(&p).unwrap();
        let (xd, yd, _) = d.project(&p).unwrap();
        assert_relative_eq!(xd, (x - 1.5) / 4.0, epsilon = 1e-12);
        assert_relative_eq!(yd, (y - 1.5) / 4.0, epsilon = 1e-12);
    }

    #[test]
    fn behind_camera_is_none() {
        assert!(cam().project(&Point3::new(0.0, 0.0, -1.0)).is_none());
    }
}
