use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ctensor::ComplexTensor;
use crate::error::{Error, Result};

/// Seed of the `index`-th phantom of a set generated from `base`.
pub fn phantom_seed(base: u64, index: u64) -> u64 {
    base ^ (index + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

struct Ellipse {
    cy: f64,
    cx: f64,
    a: f64,
    b: f64,
    cos: f64,
    sin: f64,
    value: f64,
}

impl Ellipse {
    /// Approximate signed distance in pixels, positive inside.
    fn depth(&self, y: f64, x: f64) -> f64 {
        let (dy, dx) = (y - self.cy, x - self.cx);
        let u = dx * self.cos + dy * self.sin;
        let v = -dx * self.sin + dy * self.cos;
        let r = ((u / self.a).powi(2) + (v / self.b).powi(2)).sqrt();
        (1.0 - r) * self.a.min(self.b)
    }
}

/// Edge transition half-width in pixels.
const EDGE_SOFTNESS: f64 = 1.2;

/// Piecewise-smooth complex phantom of size `h × w` with peak magnitude 1.
///
/// The magnitude paints soft-edged ellipses of varied intensity onto a body outline; the
/// phase is a random quadratic polynomial in normalized coordinates bounded to `[−π, π]`.
pub fn gen_phantom(h: usize, w: usize, seed: u64) -> Result<ComplexTensor> {
    if h == 0 || w == 0 || !h.is_multiple_of(16) || !w.is_multiple_of(16) {
        return Err(Error::shape(&[h, w], "phantom extents must be positive multiples of 16"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (hf, wf) = (h as f64, w as f64);
    let size = hf.min(wf);
    let (cy, cx) = (hf / 2.0, wf / 2.0);

    let angle = |rng: &mut ChaCha8Rng| {
        let t: f64 = rng.gen_range(0.0..PI);
        (t.cos(), t.sin())
    };
    let mut shapes = Vec::new();
    let (cos, sin) = angle(&mut rng);
    let body_a = rng.gen_range(0.30..0.40) * size;
    let body_b = rng.gen_range(0.24..0.36) * size;
    shapes.push(Ellipse {
        cy,
        cx,
        a: body_a,
        b: body_b,
        cos,
        sin,
        value: rng.gen_range(0.35..0.6),
    });
    let inner = rng.gen_range(4..9);
    for _ in 0..inner {
        let (cos, sin) = angle(&mut rng);
        let r = rng.gen_range(0.0..0.6);
        let t: f64 = rng.gen_range(0.0..2.0 * PI);
        shapes.push(Ellipse {
            cy: cy + r * body_b * t.sin(),
            cx: cx + r * body_a * t.cos(),
            a: rng.gen_range(0.04..0.16) * size,
            b: rng.gen_range(0.03..0.12) * size,
            cos,
            sin,
            value: rng.gen_range(0.1..1.0),
        });
    }

    let phase_coef: [f64; 6] = [
        rng.gen_range(-PI / 4.0..PI / 4.0),
        rng.gen_range(-PI / 2.0..PI / 2.0),
        rng.gen_range(-PI / 2.0..PI / 2.0),
        rng.gen_range(-PI / 3.0..PI / 3.0),
        rng.gen_range(-PI / 3.0..PI / 3.0),
        rng.gen_range(-PI / 3.0..PI / 3.0),
    ];

    let mut mag = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            let (py, px) = (y as f64 + 0.5, x as f64 + 0.5);
            let mut m = 0.0;
            for s in &shapes {
                let cover = 0.5 * (1.0 + (s.depth(py, px) / EDGE_SOFTNESS).tanh());
                m = m * (1.0 - cover) + s.value * cover;
            }
            mag[y * w + x] = m;
        }
    }
    let peak = mag.iter().cloned().fold(0.0, f64::max);

    let mut re = Vec::with_capacity(h * w);
    let mut im = Vec::with_capacity(h * w);
    let [c0, cu, cv, cuu, cuv, cvv] = phase_coef;
    for y in 0..h {
        for x in 0..w {
            let u = (x as f64 + 0.5) / wf - 0.5;
            let v = (y as f64 + 0.5) / hf - 0.5;
            let phase = (c0 + cu * u + cv * v + cuu * u * u + cuv * u * v + cvv * v * v).clamp(-PI, PI);
            let m = mag[y * w + x] / peak;
            re.push(m * phase.cos());
            im.push(m * phase.sin());
        }
    }
    ComplexTensor::new(&[h, w], re, im)
}
