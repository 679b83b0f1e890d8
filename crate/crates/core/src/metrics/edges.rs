use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use super::distance::squared_distance_transform;
use crate::ctensor::RealTensor;
use crate::error::{Error, Result};

pub const DEFAULT_FOM_ALPHA: f64 = 1.0 / 9.0;

/// Sobel detector settings: a pixel is an edge when its gradient magnitude is at least
/// `threshold · max(gradient magnitude)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeParams {
    pub threshold: f64,
}

impl Default for EdgeParams {
    fn default() -> Self {
        Self { threshold: 0.25 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EdgeMap {
    height: usize,
    width: usize,
    edges: Vec<bool>,
    pub params: EdgeParams,
}

impl EdgeMap {
    pub fn from_bools(height: usize, width: usize, edges: Vec<bool>) -> Result<Self> {
        if edges.len() != height * width {
            return Err(Error::LengthMismatch {
                expected: height * width,
                found: edges.len(),
            });
        }
        Ok(Self {
            height,
            width,
            edges,
            params: EdgeParams::default(),
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn get(&self, y: usize, x: usize) -> bool {
        self.edges[y * self.width + x]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.edges
    }

    pub fn count(&self) -> usize {
        self.edges.iter().filter(|&&e| e).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    fn check_same(&self, other: &EdgeMap) -> Result<()> {
        if (self.height, self.width) != (other.height, other.width) {
            return Err(Error::mismatch(&[other.height, other.width], &[self.height, self.width]));
        }
        Ok(())
    }
}

/// Sobel gradient magnitude with replicated borders.
fn sobel(p: &RealTensor) -> Result<(usize, usize, Vec<f64>)> {
    let (h, w) = p.dims2()?;
    let d = p.data();
    let at = |y: isize, x: isize| {
        let y = y.clamp(0, h as isize - 1) as usize;
        let x = x.clamp(0, w as isize - 1) as usize;
        d[y * w + x]
    };
    let mut mag = vec![0.0; h * w];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = (at(y - 1, x + 1) + 2.0 * at(y, x + 1) + at(y + 1, x + 1))
                - (at(y - 1, x - 1) + 2.0 * at(y, x - 1) + at(y + 1, x - 1));
            let gy = (at(y + 1, x - 1) + 2.0 * at(y + 1, x) + at(y + 1, x + 1))
                - (at(y - 1, x - 1) + 2.0 * at(y - 1, x) + at(y - 1, x + 1));
            mag[y as usize * w + x as usize] = gx.hypot(gy);
        }
    }
    Ok((h, w, mag))
}

pub fn edge_map(p: &RealTensor, params: EdgeParams) -> Result<EdgeMap> {
    if !p.data().iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("edge_map input".into()));
    }
    let (h, w, mag) = sobel(p)?;
    let max = mag.iter().cloned().fold(0.0, f64::max);
    let edges = if max > 0.0 {
        let cut = params.threshold * max;
        mag.iter().map(|&m| m >= cut).collect()
    } else {
        vec![false; h * w]
    };
    Ok(EdgeMap {
        height: h,
        width: w,
        edges,
        params,
    })
}

/// `(1 / max(N_ref, N_det)) Σ_{i ∈ detected} 1 / (1 + α d_i²)` with `d_i` the exact Euclidean
/// distance to the nearest reference edge. An empty detection scores 0.
pub fn pratts_fom(detected: &EdgeMap, reference: &EdgeMap, alpha: f64) -> Result<f64> {
    detected.check_same(reference)?;
    let n_ref = reference.count();
    if n_ref == 0 {
        return Err(Error::shape(&[reference.height, reference.width], "reference edge map is empty"));
    }
    let dist = squared_distance_transform(reference.height, reference.width, &reference.edges)?;
    let sum: f64 = detected
        .edges
        .iter()
        .zip(&dist)
        .filter(|(&e, _)| e)
        .map(|(_, &d2)| 1.0 / (1.0 + alpha * d2))
        .sum();
    Ok(sum / n_ref.max(detected.count()) as f64)
}

/// Per-pixel comparison of a reconstruction's edges against ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeDiff {
    pub height: usize,
    pub width: usize,
    /// Edges in both maps.
    pub matched: usize,
    /// Ground-truth edges absent from the reconstruction.
    pub missing: usize,
    /// Reconstruction edges absent from ground truth.
    pub hallucinated: usize,
    image: RgbImage,
}

impl EdgeDiff {
    pub const MATCHED: Rgb<u8> = Rgb([0, 255, 0]);
    pub const MISSING: Rgb<u8> = Rgb([255, 0, 0]);
    pub const HALLUCINATED: Rgb<u8> = Rgb([0, 0, 255]);

    /// Green = matched, red = missing, blue = hallucinated, black elsewhere.
    pub fn image(&self) -> &RgbImage {
        &self.image
    }
}

pub fn edge_difference_map(recon: &EdgeMap, gt: &EdgeMap) -> Result<EdgeDiff> {
    recon.check_same(gt)?;
    let (h, w) = (gt.height, gt.width);
    let mut image = RgbImage::new(w as u32, h as u32);
    let (mut matched, mut missing, mut hallucinated) = (0, 0, 0);
    for y in 0..h {
        for x in 0..w {
            let colour = match (gt.get(y, x), recon.get(y, x)) {
                (true, true) => {
                    matched += 1;
                    EdgeDiff::MATCHED
                }
                (true, false) => {
                    missing += 1;
                    EdgeDiff::MISSING
                }
                (false, true) => {
                    hallucinated += 1;
                    EdgeDiff::HALLUCINATED
                }
                (false, false) => Rgb([0, 0, 0]),
            };
            image.put_pixel(x as u32, y as u32, colour);
        }
    }
    Ok(EdgeDiff {
        height: h,
        width: w,
        matched,
        missing,
        hallucinated,
        image,
    })
}
