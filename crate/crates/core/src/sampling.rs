//! Cartesian k-space line masks, retrospective undersampling and zero-filled reconstruction.
//!
//! Phase encoding runs along rows (axis `H`) and frequency encoding along columns, which are
//! always fully sampled. With the centered FFT layout the DC row of an `H`-row k-space is
//! `H/2`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ctensor::{ComplexTensor, FftPlan, RealTensor};
use crate::error::{Error, Result};

pub const DEFAULT_CENTER_LINES: usize = 8;
pub const DEFAULT_SIGMA_FRAC: f64 = 0.15;

/// Parameters of a Gaussian-density Cartesian mask.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskParams {
    pub acceleration: f64,
    pub center_lines: usize,
    pub sigma_frac: f64,
    pub seed: u64,
}

impl Default for MaskParams {
    fn default() -> Self {
        Self {
            acceleration: 4.0,
            center_lines: DEFAULT_CENTER_LINES,
            sigma_frac: DEFAULT_SIGMA_FRAC,
            seed: 0,
        }
    }
}

/// Binary Cartesian sampling mask Ω: every row is either fully acquired or fully skipped.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplingMask {
    height: usize,
    width: usize,
    rows: Vec<bool>,
    params: Option<MaskParams>,
}

/// Number of acquired rows for `height` rows at acceleration `r`, rounding half to even.
pub fn line_budget(height: usize, acceleration: f64) -> usize {
    (height as f64 / acceleration).round_ties_even() as usize
}

impl SamplingMask {
    /// Builds a mask from an explicit row selection.
    pub fn from_rows(width: usize, rows: Vec<bool>) -> Result<Self> {
        if rows.is_empty() || width == 0 {
            return Err(Error::config("mask", "extents must be positive"));
        }
        Ok(Self {
            height: rows.len(),
            width,
            rows,
            params: None,
        })
    }

    pub fn full(height: usize, width: usize) -> Self {
        Self::from_rows(width, vec![true; height]).expect("positive extents")
    }

    pub fn empty(height: usize, width: usize) -> Self {
        Self::from_rows(width, vec![false; height]).expect("positive extents")
    }

    /// Recovers a line mask from per-pixel values; fails unless each row is uniformly 0 or 1.
    pub fn from_pixels(pixels: &RealTensor) -> Result<Self> {
        let (h, w) = pixels.dims2()?;
        let mut rows = Vec::with_capacity(h);
        for r in 0..h {
            let line = &pixels.data()[r * w..(r + 1) * w];
            if line.iter().any(|&v| v != 0.0 && v != 1.0) {
                return Err(Error::config("mask", "values must be binary"));
            }
            let on = line[0] == 1.0;
            if line.iter().any(|&v| (v == 1.0) != on) {
                return Err(Error::config("mask", format!("row {r} is not a Cartesian line")));
            }
            rows.push(on);
        }
        Self::from_rows(w, rows)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rows(&self) -> &[bool] {
        &self.rows
    }

    pub fn params(&self) -> Option<&MaskParams> {
        self.params.as_ref()
    }

    pub fn contains(&self, row: usize, _col: usize) -> bool {
        self.rows[row]
    }

    pub fn selected_rows(&self) -> usize {
        self.rows.iter().filter(|&&r| r).count()
    }

    /// Ratio of total rows to acquired rows (infinite for an empty mask).
    pub fn effective_acceleration(&self) -> f64 {
        self.height as f64 / self.selected_rows() as f64
    }

    /// Per-pixel 0/1 image.
    pub fn to_pixels(&self) -> RealTensor {
        let data = self
            .rows
            .iter()
            .flat_map(|&on| std::iter::repeat_n(if on { 1.0 } else { 0.0 }, self.width))
            .collect();
        RealTensor::new(&[self.height, self.width], data).expect("mask extents")
    }

    fn check(&self, x: &ComplexTensor) -> Result<()> {
        let (h, w) = x.spatial()?;
        if (h, w) != (self.height, self.width) {
            return Err(Error::mismatch(&[self.height, self.width], &[h, w]));
        }
        Ok(())
    }

    /// Zeroes every unacquired row of each trailing `[H, W]` image.
    pub fn apply(&self, y: &ComplexTensor) -> Result<ComplexTensor> {
        self.check(y)?;
        let mut out = y.clone();
        let w = self.width;
        let (re, im) = out.parts_mut();
        for (i, (r, m)) in re.chunks_exact_mut(w).zip(im.chunks_exact_mut(w)).enumerate() {
            if !self.rows[i % self.height] {
                r.fill(0.0);
                m.fill(0.0);
            }
        }
        Ok(out)
    }

    /// Zeroes every acquired row: the projection onto the complement of Ω.
    pub fn apply_complement(&self, y: &ComplexTensor) -> Result<ComplexTensor> {
        let inverted = Self {
            rows: self.rows.iter().map(|r| !r).collect(),
            params: None,
            ..self.clone()
        };
        inverted.apply(y)
    }
}

/// Applies one mask per leading-index group: `y` holds `k·masks.len()` trailing `[H, W]` images
/// and image `i` uses `masks[i / k]`, so a single mask broadcasts over the whole batch. With
/// `complement` the acquired rows are zeroed instead.
pub fn apply_masks(masks: &[SamplingMask], y: &ComplexTensor, complement: bool) -> Result<ComplexTensor> {
    let (h, w) = y.spatial()?;
    let planes = y.len() / (h * w);
    if masks.is_empty() || !planes.is_multiple_of(masks.len()) {
        return Err(Error::config(
            "mask",
            format!("{} masks cannot be spread over {planes} images", masks.len()),
        ));
    }
    for m in masks {
        m.check(y)?;
    }
    let per = planes / masks.len();
    let mut out = y.clone();
    let (re, im) = out.parts_mut();
    for (i, (r, m)) in re.chunks_exact_mut(w).zip(im.chunks_exact_mut(w)).enumerate() {
        let plane = i / h;
        if masks[plane / per].rows[i % h] == complement {
            r.fill(0.0);
            m.fill(0.0);
        }
    }
    Ok(out)
}

/// Gaussian-density Cartesian mask.
///
/// The `center_lines` rows around DC are always acquired; the remaining
/// `round(H/R) - center_lines` rows are drawn without replacement, each draw proportional to
/// a zero-mean Gaussian of the row's distance from DC with `σ = sigma_frac·H`.
pub fn make_mask(height: usize, width: usize, params: &MaskParams) -> Result<SamplingMask> {
    if height == 0 || width == 0 {
        return Err(Error::config("size", "extents must be positive"));
    }
    if !(params.acceleration >= 1.0) || !params.acceleration.is_finite() {
        return Err(Error::config("acceleration", format!("{} must be >= 1", params.acceleration)));
    }
    if !(params.sigma_frac > 0.0) || !params.sigma_frac.is_finite() {
        return Err(Error::config("sigma_frac", format!("{} must be > 0", params.sigma_frac)));
    }
    let budget = line_budget(height, params.acceleration);
    if params.center_lines > height || budget < params.center_lines {
        return Err(Error::config(
            "acceleration",
            format!(
                "budget of {budget} rows cannot hold {} center lines for height {height}",
                params.center_lines
            ),
        ));
    }
    let dc = height / 2;
    let mut rows = vec![false; height];
    let start = dc - params.center_lines / 2;
    rows[start..start + params.center_lines].fill(true);

    let sigma = params.sigma_frac * height as f64;
    let mut weights: Vec<f64> = (0..height)
        .map(|r| {
            if rows[r] {
                0.0
            } else {
                let d = r as f64 - dc as f64;
                (-0.5 * (d / sigma).powi(2)).exp()
            }
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    for _ in params.center_lines..budget {
        let total: f64 = weights.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (r, &wgt) in weights.iter().enumerate() {
                if wgt > 0.0 {
                    acc += wgt;
                    chosen = Some(r);
                    if acc > target {
                        break;
                    }
                }
            }
            chosen
        } else {
            None
        };
        // far tails can underflow to zero weight; fall back to the closest free row
        let r = pick.unwrap_or_else(|| {
            (0..height)
                .filter(|&r| !rows[r])
                .min_by_key(|&r| r.abs_diff(dc))
                .expect("budget never exceeds height")
        });
        rows[r] = true;
        weights[r] = 0.0;
    }
    Ok(SamplingMask {
        height,
        width,
        rows,
        params: Some(params.clone()),
    })
}

/// `y_u = y_f ⊙ Ω` in zero-filled representation.
pub fn undersample(y_f: &ComplexTensor, mask: &SamplingMask) -> Result<ComplexTensor> {
    mask.apply(y_f)
}

/// `x_u = F⁻¹ y_u`.
pub fn zero_fill_recon(y_u: &ComplexTensor, plan: &FftPlan) -> Result<ComplexTensor> {
    plan.inverse(y_u)
}
