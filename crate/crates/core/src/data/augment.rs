use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ctensor::ComplexTensor;
use crate::error::Result;

pub const MAX_ROTATION_DEG: f64 = 10.0;
pub const MAX_SHIFT_PX: f64 = 4.0;

/// Rotation about the image centre followed by a translation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    pub angle_deg: f64,
    pub dy: f64,
    pub dx: f64,
}

impl RigidTransform {
    /// Uniform in `±MAX_ROTATION_DEG` and `±MAX_SHIFT_PX`.
    pub fn random(rng: &mut impl Rng) -> Self {
        Self {
            angle_deg: rng.gen_range(-MAX_ROTATION_DEG..=MAX_ROTATION_DEG),
            dy: rng.gen_range(-MAX_SHIFT_PX..=MAX_SHIFT_PX),
            dx: rng.gen_range(-MAX_SHIFT_PX..=MAX_SHIFT_PX),
        }
    }

    /// Resamples every trailing `[H, W]` plane with bilinear interpolation, applied to real and
    /// imaginary parts separately. Samples falling outside the image read as zero.
    pub fn apply(&self, x: &ComplexTensor) -> Result<ComplexTensor> {
        let (h, w) = x.spatial()?;
        let (cy, cx) = ((h as f64 - 1.0) / 2.0, (w as f64 - 1.0) / 2.0);
        let (sin, cos) = self.angle_deg.to_radians().sin_cos();
        let mut out = ComplexTensor::zeros(x.shape());
        let planes = x.len() / (h * w);
        let (ore, oim) = out.parts_mut();
        for p in 0..planes {
            let base = p * h * w;
            let src_re = &x.re()[base..base + h * w];
            let src_im = &x.im()[base..base + h * w];
            for y in 0..h {
                for xx in 0..w {
                    // inverse map: output pixel -> source coordinates
                    let ty = y as f64 - cy - self.dy;
                    let tx = xx as f64 - cx - self.dx;
                    let sy = cos * ty - sin * tx + cy;
                    let sx = sin * ty + cos * tx + cx;
                    let (r, i) = bilinear(src_re, src_im, h, w, sy, sx);
                    ore[base + y * w + xx] = r;
                    oim[base + y * w + xx] = i;
                }
            }
        }
        Ok(out)
    }
}

fn bilinear(re: &[f64], im: &[f64], h: usize, w: usize, y: f64, x: f64) -> (f64, f64) {
    let (y0, x0) = (y.floor(), x.floor());
    let (fy, fx) = (y - y0, x - x0);
    let mut acc = (0.0, 0.0);
    for (dy, wy) in [(0.0, 1.0 - fy), (1.0, fy)] {
        for (dx, wx) in [(0.0, 1.0 - fx), (1.0, fx)] {
            let (yy, xx) = (y0 + dy, x0 + dx);
            let weight = wy * wx;
            if weight == 0.0 || yy < 0.0 || xx < 0.0 || yy >= h as f64 || xx >= w as f64 {
                continue;
            }
            let i = yy as usize * w + xx as usize;
            acc.0 += weight * re[i];
            acc.1 += weight * im[i];
        }
    }
    acc
}

/// Random rigid transform drawn from `seed`, applied to `x`.
pub fn rigid_augment(x: &ComplexTensor, seed: u64) -> Result<ComplexTensor> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    RigidTransform::random(&mut rng).apply(x)
}
