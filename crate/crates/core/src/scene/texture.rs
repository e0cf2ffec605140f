use nalgebra::{Point3, Vector3};
use rand::Rng;

const COMPONENTS: usize = 24;
/// Wavelength band in pixels at the look-at distance.
const MIN_WAVELENGTH_PX: f64 = 4.0;
const MAX_WAVELENGTH_PX: f64 = 40.0;

/// Sum of random 3-D sinusoids per colour channel. Evaluating it at world
/// points makes every view see the same pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct Texture {
    freqs: Vec<Vector3<f64>>,
    phases: Vec<[f64; 3]>,
    amplitude: f64,
}

impl Texture {
    /// `px_per_unit` converts world units to pixels at the nominal depth.
    pub fn random(rng: &mut impl Rng, px_per_unit: f64) -> Self {
        let mut freqs = Vec::with_capacity(COMPONENTS);
        let mut phases = Vec::with_capacity(COMPONENTS);
        let (lo, hi) = (MIN_WAVELENGTH_PX.ln(), MAX_WAVELENGTH_PX.ln());
        for _ in 0..COMPONENTS {
            let dir = loop {
                let v = Vector3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                );
                let n = v.norm();
                if n > 0.1 && n <= 1.0 {
                    break v / n;
                }
            };
            let wavelength = rng.random_range(lo..hi).exp() / px_per_unit;
            freqs.push(dir * (std::f64::consts::TAU / wavelength));
            let tau = std::f64::consts::TAU;
            phases.push([
                rng.random_range(0.0..tau),
                rng.random_range(0.0..tau),
                rng.random_range(0.0..tau),
            ]);
        }
        Texture {
            freqs,
            phases,
            // Per-channel standard deviation of about 0.15.
            amplitude: 0.15 * (2.0 / COMPONENTS as f64).sqrt(),
        }
    }

    pub fn color(&self, p: &Point3<f64>) -> [f64; 3] {
        let mut c = [0.5; 3];
        for (f, ph) in self.freqs.iter().zip(&self.phases) {
            let a = f.dot(&p.coords);
            for k in 0..3 {
                c[k] += self.amplitude * (a + ph[k]).sin();
            }
        }
        c.map(|v| v.clamp(0.0, 1.0))
    }
}
