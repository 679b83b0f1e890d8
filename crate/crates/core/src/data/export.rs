use std::path::Path;

use image::{GrayImage, Luma, RgbImage};

use super::tensor_file::{load_tensor, save_tensor};
use crate::ctensor::{ComplexTensor, RealTensor};
use crate::error::{Error, Result};
use crate::sampling::SamplingMask;

/// File extension of the tensor container.
pub const TENSOR_EXT: &str = "cten";

fn is_tensor_path(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == TENSOR_EXT)
}

/// 8-bit grayscale rendering of `|x|` for a single `[H, W]` image, with `scale` mapping to 255
/// (the image maximum when `None`).
pub fn magnitude_image(x: &ComplexTensor, scale: Option<f64>) -> Result<GrayImage> {
    let (h, w) = x.spatial()?;
    if x.len() != h * w {
        return Err(Error::shape(x.shape(), "expected a single image"));
    }
    let mag = x.magnitude();
    let scale = scale.unwrap_or_else(|| mag.max());
    let mut img = GrayImage::new(w as u32, h as u32);
    for (i, m) in mag.data().iter().enumerate() {
        let v = if scale > 0.0 { (m / scale * 255.0).round().clamp(0.0, 255.0) } else { 0.0 };
        img.put_pixel((i % w) as u32, (i / w) as u32, Luma([v as u8]));
    }
    Ok(img)
}

/// Writes `|x|` as PGM or PNG, chosen by the file extension.
pub fn save_magnitude(x: &ComplexTensor, scale: Option<f64>, path: &Path) -> Result<()> {
    save_gray(&magnitude_image(x, scale)?, path)
}

pub fn save_gray(img: &GrayImage, path: &Path) -> Result<()> {
    img.save(path)?;
    Ok(())
}

pub fn save_rgb(img: &RgbImage, path: &Path) -> Result<()> {
    img.save(path)?;
    Ok(())
}

/// Reads a grayscale PGM/PNG as values in `[0, 1]`, shape `[H, W]`.
pub fn load_gray(path: &Path) -> Result<RealTensor> {
    let img = image::open(path)?.into_luma8();
    let (w, h) = img.dimensions();
    RealTensor::new(&[h as usize, w as usize], img.pixels().map(|p| f64::from(p.0[0]) / 255.0).collect())
}

/// Writes a mask as a binary image (0/255) or, for `.cten` paths, as a real-valued tensor.
pub fn save_mask(mask: &SamplingMask, path: &Path) -> Result<()> {
    let pixels = mask.to_pixels();
    if is_tensor_path(path) {
        return save_tensor(&ComplexTensor::from_real(pixels.shape(), pixels.data().to_vec())?, path);
    }
    let (h, w) = (mask.height(), mask.width());
    let mut img = GrayImage::new(w as u32, h as u32);
    for (i, v) in pixels.data().iter().enumerate() {
        img.put_pixel((i % w) as u32, (i / w) as u32, Luma([if *v > 0.0 { 255 } else { 0 }]));
    }
    save_gray(&img, path)
}

/// Reads a mask written by [`save_mask`] (the real part is used for tensor files).
pub fn load_mask(path: &Path) -> Result<SamplingMask> {
    let pixels = if is_tensor_path(path) {
        let t = load_tensor(path)?;
        let (h, w) = t.spatial()?;
        RealTensor::new(&[h, w], t.re().to_vec())?
    } else {
        load_gray(path)?
    };
    SamplingMask::from_pixels(&pixels)
}
