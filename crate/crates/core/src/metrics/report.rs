use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use super::edges::{edge_map, pratts_fom, EdgeParams, DEFAULT_FOM_ALPHA};
use super::mse;
use crate::ctensor::{ComplexTensor, RealTensor};
use crate::error::{Error, Result};
use crate::losses::{ssim, SsimConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageMetrics {
    pub name: String,
    pub mse: f64,
    pub ssim: f64,
    pub pratts_fom: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricMeans {
    pub mse: f64,
    pub ssim: f64,
    pub pratts_fom: f64,
}

/// Per-image metrics, their means, and an echo of whatever produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: serde_json::Value,
    pub images: Vec<ImageMetrics>,
    pub mean: MetricMeans,
}

impl EvalReport {
    pub fn new(config: serde_json::Value, images: Vec<ImageMetrics>) -> Result<Self> {
        if images.is_empty() {
            return Err(Error::config("images", "report needs at least one image"));
        }
        let n = images.len() as f64;
        let mean = MetricMeans {
            mse: images.iter().map(|m| m.mse).sum::<f64>() / n,
            ssim: images.iter().map(|m| m.ssim).sum::<f64>() / n,
            pratts_fom: images.iter().map(|m| m.pratts_fom).sum::<f64>() / n,
        };
        Ok(Self { config, images, mean })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// `name,mse,ssim,pratts_fom`, one row per image, floats in shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,mse,ssim,pratts_fom\n");
        for m in &self.images {
            out.push_str(&format!("{},{:?},{:?},{:?}\n", m.name, m.mse, m.ssim, m.pratts_fom));
        }
        out
    }
}

/// Magnitudes of both images divided by the ground-truth maximum (1 when that is zero).
fn normalized_magnitudes(recon: &ComplexTensor, gt: &ComplexTensor) -> Result<(RealTensor, RealTensor)> {
    if recon.shape() != gt.shape() {
        return Err(Error::mismatch(gt.shape(), recon.shape()));
    }
    let (h, w) = gt.spatial()?;
    if gt.len() != h * w {
        return Err(Error::shape(gt.shape(), "expected a single image"));
    }
    let g = gt.magnitude();
    let scale = if g.max() > 0.0 { g.max() } else { 1.0 };
    let r = RealTensor::new(&[h, w], recon.magnitude().into_data().into_iter().map(|v| v / scale).collect())?;
    let g = RealTensor::new(&[h, w], g.into_data().into_iter().map(|v| v / scale).collect())?;
    Ok((r, g))
}

/// MSE, SSIM and Pratt's FOM of one reconstruction against its ground truth, all on
/// magnitudes normalized so the ground truth peaks at 1.
pub fn evaluate_pair(name: &str, recon: &ComplexTensor, gt: &ComplexTensor, edges: EdgeParams) -> Result<ImageMetrics> {
    let (r, g) = normalized_magnitudes(recon, gt)?;
    let ssim_cfg = SsimConfig {
        data_range: 1.0,
        ..Default::default()
    };
    Ok(ImageMetrics {
        name: name.to_string(),
        mse: mse(&r, &g)?,
        ssim: ssim(&r, &g, &ssim_cfg)?,
        pratts_fom: pratts_fom(&edge_map(&r, edges)?, &edge_map(&g, edges)?, DEFAULT_FOM_ALPHA)?,
    })
}

/// Signed error `|x_f| − |x_r|` (normalized as in [`evaluate_pair`]) rendered red where the
/// reconstruction is too dark and blue where it is too bright, full intensity at the largest
/// absolute error. Returns the image and that largest error.
pub fn error_map(recon: &ComplexTensor, gt: &ComplexTensor) -> Result<(RgbImage, f64)> {
    let (r, g) = normalized_magnitudes(recon, gt)?;
    let (h, w) = g.dims2()?;
    let diff: Vec<f64> = g.data().iter().zip(r.data()).map(|(a, b)| a - b).collect();
    let peak = diff.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let mut img = RgbImage::new(w as u32, h as u32);
    for (i, d) in diff.iter().enumerate() {
        let level = if peak > 0.0 { (d.abs() / peak * 255.0).round() as u8 } else { 0 };
        let px = if *d >= 0.0 { Rgb([level, 0, 0]) } else { Rgb([0, 0, level]) };
        img.put_pixel((i % w) as u32, (i / w) as u32, px);
    }
    Ok((img, peak))
}
