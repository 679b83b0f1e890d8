use std::f64::consts::PI;

use super::ComplexTensor;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Precomputed tables for one power-of-two transform length.
#[derive(Clone, Debug)]
struct Radix2 {
    n: usize,
    bitrev: Vec<usize>,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl Radix2 {
    fn new(n: usize) -> Self {
        let bits = n.trailing_zeros();
        let bitrev = (0..n)
            .map(|i| if n == 1 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        let (cos, sin) = (0..n / 2)
            .map(|k| {
                let angle = -2.0 * PI * k as f64 / n as f64;
                (angle.cos(), angle.sin())
            })
            .unzip();
        Self { n, bitrev, cos, sin }
    }

    /// Unnormalized in-place DFT of one contiguous line.
    fn run(&self, re: &mut [f64], im: &mut [f64], dir: Direction) {
        let n = self.n;
        for i in 0..n {
            let j = self.bitrev[i];
            if i < j {
                re.swap(i, j);
                im.swap(i, j);
            }
        }
        let sign = match dir {
            Direction::Forward => 1.0,
            Direction::Inverse => -1.0,
        };
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let (wr, wi) = (self.cos[k * stride], sign * self.sin[k * stride]);
                    let a = start + k;
                    let b = a + half;
                    let tr = re[b] * wr - im[b] * wi;
                    let ti = re[b] * wi + im[b] * wr;
                    re[b] = re[a] - tr;
                    im[b] = im[a] - ti;
                    re[a] += tr;
                    im[a] += ti;
                }
            }
            len <<= 1;
        }
    }
}

/// Centered, orthonormal 2-D DFT over the two trailing axes of a tensor.
///
/// Bin `(H/2, W/2)` holds the DC component in both image and k-space layouts, i.e. the
/// forward transform is `fftshift(fft2(ifftshift(x))) / sqrt(H*W)`. Leading axes are
/// treated as a batch of independent images.
#[derive(Clone, Debug)]
pub struct FftPlan {
    height: usize,
    width: usize,
    rows: Radix2,
    cols: Radix2,
}

impl FftPlan {
    pub fn new(height: usize, width: usize) -> Result<Self> {
        for (name, n) in [("height", height), ("width", width)] {
            if n == 0 || !n.is_power_of_two() {
                return Err(Error::config(name, format!("{n} is not a power of two")));
            }
        }
        Ok(Self {
            height,
            width,
            rows: Radix2::new(width),
            cols: Radix2::new(height),
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn forward(&self, x: &ComplexTensor) -> Result<ComplexTensor> {
        self.transform(x, Direction::Forward)
    }

    pub fn inverse(&self, y: &ComplexTensor) -> Result<ComplexTensor> {
        self.transform(y, Direction::Inverse)
    }

    pub fn transform(&self, x: &ComplexTensor, dir: Direction) -> Result<ComplexTensor> {
        let mut out = x.clone();
        self.transform_in_place(&mut out, dir)?;
        Ok(out)
    }

    pub fn transform_in_place(&self, x: &mut ComplexTensor, dir: Direction) -> Result<()> {
        let (h, w) = x.spatial()?;
        if (h, w) != (self.height, self.width) {
            return Err(Error::mismatch(&[self.height, self.width], &[h, w]));
        }
        let plane = h * w;
        let scale = 1.0 / (plane as f64).sqrt();
        let (re, im) = x.parts_mut();
        for (pr, pi) in re.chunks_exact_mut(plane).zip(im.chunks_exact_mut(plane)) {
            self.image(pr, pi, dir);
            pr.iter_mut().chain(pi.iter_mut()).for_each(|v| *v *= scale);
        }
        Ok(())
    }

    fn image(&self, re: &mut [f64], im: &mut [f64], dir: Direction) {
        let (h, w) = (self.height, self.width);
        for (rr, ri) in re.chunks_exact_mut(w).zip(im.chunks_exact_mut(w)) {
            rr.rotate_left(w / 2);
            ri.rotate_left(w / 2);
            self.rows.run(rr, ri, dir);
            rr.rotate_left(w / 2);
            ri.rotate_left(w / 2);
        }
        let mut cr = vec![0.0; h];
        let mut ci = vec![0.0; h];
        for col in 0..w {
            for row in 0..h {
                // ifftshift folded into the gather
                let src = ((row + h / 2) % h) * w + col;
                cr[row] = re[src];
                ci[row] = im[src];
            }
            self.cols.run(&mut cr, &mut ci, dir);
            for row in 0..h {
                let dst = ((row + h / 2) % h) * w + col;
                re[dst] = cr[row];
                im[dst] = ci[row];
            }
        }
    }
}

/// Centered orthonormal forward transform with a one-off plan.
pub fn fft2(x: &ComplexTensor) -> Result<ComplexTensor> {
    let (h, w) = x.spatial()?;
    FftPlan::new(h, w)?.forward(x)
}

/// Centered orthonormal inverse transform with a one-off plan.
pub fn ifft2(y: &ComplexTensor) -> Result<ComplexTensor> {
    let (h, w) = y.spatial()?;
    FftPlan::new(h, w)?.inverse(y)
}
