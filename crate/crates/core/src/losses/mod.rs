//! Differentiable reconstruction losses: L2, SSIM and their λ-weighted composite.
//!
//! Batched inputs are `[B, ..., H, W]` complex tensors; each loss is averaged over the `B`
//! images of a batch so the optimizer step size does not depend on the batch size.

mod ssim;

pub use ssim::{gaussian_window, ssim, ssim_with_grad, SsimConfig};

use serde::{Deserialize, Serialize};

use crate::ctensor::{ComplexTensor, RealTensor};
use crate::error::{Error, Result};

/// Dynamic range `L` used for the SSIM stabilizers `C1 = (0.01 L)²`, `C2 = (0.03 L)²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DynamicRange {
    /// Maximum magnitude of the ground-truth image of each sample (1 if that is zero).
    GroundTruthMax,
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub lambda: f64,
    pub ssim_window: usize,
    pub ssim_sigma: f64,
    pub dynamic_range: DynamicRange,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            lambda: 2.0,
            ssim_window: 11,
            ssim_sigma: 1.5,
            dynamic_range: DynamicRange::GroundTruthMax,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::config("lambda", format!("{} must be a finite value >= 0", self.lambda)));
        }
        if self.ssim_window < 3 || self.ssim_window.is_multiple_of(2) {
            return Err(Error::config("ssim_window", format!("{} must be odd and >= 3", self.ssim_window)));
        }
        if !(self.ssim_sigma > 0.0) {
            return Err(Error::config("ssim_sigma", "must be positive"));
        }
        if let DynamicRange::Fixed(l) = self.dynamic_range {
            if !(l > 0.0) {
                return Err(Error::config("dynamic_range", "must be positive"));
            }
        }
        Ok(())
    }

    /// SSIM settings for one ground-truth magnitude image.
    pub fn ssim_for(&self, ground_truth: &RealTensor) -> SsimConfig {
        let data_range = match self.dynamic_range {
            DynamicRange::Fixed(l) => l,
            DynamicRange::GroundTruthMax => {
                let m = ground_truth.max();
                if m > 0.0 {
                    m
                } else {
                    1.0
                }
            }
        };
        SsimConfig {
            window: self.ssim_window,
            sigma: self.ssim_sigma,
            data_range,
        }
    }
}

/// A loss value with its gradient w.r.t. the reconstruction.
#[derive(Clone, Debug)]
pub struct LossGrad {
    pub value: f64,
    pub grad: ComplexTensor,
}

/// Individual terms and the gradient of the weighted sum.
#[derive(Clone, Debug)]
pub struct CompositeLoss {
    pub l2: f64,
    pub ssim_loss: f64,
    pub total: f64,
    pub grad: ComplexTensor,
}

fn check_pair(x_r: &ComplexTensor, x_f: &ComplexTensor) -> Result<(usize, usize, usize)> {
    if x_r.shape() != x_f.shape() {
        return Err(Error::mismatch(x_f.shape(), x_r.shape()));
    }
    let (h, w) = x_r.spatial()?;
    Ok((x_r.len() / (h * w), h, w))
}

/// Batch mean of `‖x_f − x_r‖²`, with gradient `2(x_r − x_f)/B`.
pub fn l2_loss(x_r: &ComplexTensor, x_f: &ComplexTensor) -> Result<LossGrad> {
    let (batch, _, _) = check_pair(x_r, x_f)?;
    let diff = x_r.sub(x_f)?;
    Ok(LossGrad {
        value: diff.energy() / batch as f64,
        grad: diff.mul_scalar(2.0 / batch as f64),
    })
}

/// Below this magnitude `d|z|/dz` is taken as zero.
const MAGNITUDE_GUARD: f64 = 1e-12;

/// Batch mean of `1 − SSIM(|x_r|, |x_f|)`; the gradient is chained through the magnitude.
pub fn ssim_loss(x_r: &ComplexTensor, x_f: &ComplexTensor, cfg: &LossConfig) -> Result<LossGrad> {
    let (batch, h, w) = check_pair(x_r, x_f)?;
    let plane = h * w;
    let mag_r = x_r.magnitude().into_data();
    let mag_f = x_f.magnitude().into_data();
    let mut value = 0.0;
    let mut grad = ComplexTensor::zeros(x_r.shape());
    for b in 0..batch {
        let span = b * plane..(b + 1) * plane;
        let p = RealTensor::new(&[h, w], mag_r[span.clone()].to_vec())?;
        let q = RealTensor::new(&[h, w], mag_f[span.clone()].to_vec())?;
        let (s, dp) = ssim_with_grad(&p, &q, &cfg.ssim_for(&q))?;
        value += 1.0 - s;
        let (gre, gim) = grad.parts_mut();
        for (k, i) in span.enumerate() {
            let m = mag_r[i];
            if m >= MAGNITUDE_GUARD {
                let d = -dp.data()[k] / (batch as f64 * m);
                gre[i] = d * x_r.re()[i];
                gim[i] = d * x_r.im()[i];
            }
        }
    }
    Ok(LossGrad {
        value: value / batch as f64,
        grad,
    })
}

/// `L2 + λ·L_SSIM`. With `λ = 0` the SSIM term is still reported but contributes nothing.
pub fn composite_loss(x_r: &ComplexTensor, x_f: &ComplexTensor, cfg: &LossConfig) -> Result<CompositeLoss> {
    cfg.validate()?;
    let l2 = l2_loss(x_r, x_f)?;
    let ss = ssim_loss(x_r, x_f, cfg)?;
    let grad = if cfg.lambda == 0.0 {
        l2.grad
    } else {
        l2.grad.add(&ss.grad.mul_scalar(cfg.lambda))?
    };
    Ok(CompositeLoss {
        l2: l2.value,
        ssim_loss: ss.value,
        total: l2.value + cfg.lambda * ss.value,
        grad,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::{check_tensor_grad, random_tensor};
    use num_complex::Complex64;

    fn offset(x: &ComplexTensor) -> ComplexTensor {
        // keep magnitudes away from the |z| = 0 kink
        ComplexTensor::from_fn(x.shape(), |i| x.get(i) + Complex64::new(1.5, 1.0))
    }

    #[test]
    fn l2_values() {
        let x = random_tensor(&[2, 1, 4, 4], 1);
        assert_eq!(l2_loss(&x, &x).unwrap().value, 0.0);
        let r = ComplexTensor::new(&[1], vec![3.0], vec![4.0]).unwrap();
        let f = ComplexTensor::zeros(&[1]);
        assert!(l2_loss(&r, &f).is_err(), "needs two spatial axes");
        let r = ComplexTensor::new(&[1, 1], vec![3.0], vec![4.0]).unwrap();
        assert_eq!(l2_loss(&r, &ComplexTensor::zeros(&[1, 1])).unwrap().value, 25.0);
        assert!(l2_loss(&r, &ComplexTensor::zeros(&[1, 2])).is_err());
    }

    #[test]
    fn l2_gradient_matches_finite_differences() {
        let x_r = random_tensor(&[2, 1, 4, 4], 2);
        let x_f = random_tensor(&[2, 1, 4, 4], 3);
        let g = l2_loss(&x_r, &x_f).unwrap().grad;
        let err = check_tensor_grad(&x_r, &g, 1e-5, 1e-8, |x| l2_loss(x, &x_f).unwrap().value);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn ssim_loss_range_and_identity() {
        let cfg = LossConfig::default();
        let x = offset(&random_tensor(&[2, 1, 16, 16], 4));
        assert_eq!(ssim_loss(&x, &x, &cfg).unwrap().value, 0.0);
        for seed in 0..10 {
            let y = random_tensor(&[2, 1, 16, 16], 100 + seed).mul_scalar(3.0);
            let v = ssim_loss(&y, &x, &cfg).unwrap().value;
            assert!((0.0..=2.0).contains(&v), "{v}");
        }
    }

    #[test]
    fn ssim_loss_gradient_matches_finite_differences() {
        let cfg = LossConfig::default();
        let x_r = offset(&random_tensor(&[2, 1, 16, 16], 5));
        let x_f = offset(&random_tensor(&[2, 1, 16, 16], 6));
        let g = ssim_loss(&x_r, &x_f, &cfg).unwrap().grad;
        let err = check_tensor_grad(&x_r, &g, 1e-5, 1e-6, |x| ssim_loss(x, &x_f, &cfg).unwrap().value);
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn ssim_loss_zero_magnitude_gradient_is_finite() {
        let cfg = LossConfig::default();
        let x_r = ComplexTensor::zeros(&[1, 1, 12, 12]);
        let x_f = offset(&random_tensor(&[1, 1, 12, 12], 7));
        let g = ssim_loss(&x_r, &x_f, &cfg).unwrap().grad;
        assert!(g.is_finite());
    }

    #[test]
    fn composite_combines_terms() {
        let x_r = offset(&random_tensor(&[2, 1, 16, 16], 8));
        let x_f = offset(&random_tensor(&[2, 1, 16, 16], 9));
        let zero = LossConfig { lambda: 0.0, ..Default::default() };
        let c0 = composite_loss(&x_r, &x_f, &zero).unwrap();
        assert_eq!(c0.total, l2_loss(&x_r, &x_f).unwrap().value);
        assert_eq!(c0.grad, l2_loss(&x_r, &x_f).unwrap().grad);

        let two = LossConfig::default();
        let c2 = composite_loss(&x_r, &x_f, &two).unwrap();
        let expect = l2_loss(&x_r, &x_f).unwrap().value + 2.0 * ssim_loss(&x_r, &x_f, &two).unwrap().value;
        assert!((c2.total - expect).abs() < 1e-12);

        for cfg in [zero, two] {
            let same = composite_loss(&x_f, &x_f, &cfg).unwrap();
            assert!(same.total.abs() <= 1e-9);
            assert!(composite_loss(&x_r, &x_f, &cfg).unwrap().total >= 0.0);
        }
    }

    #[test]
    fn config_validation() {
        assert!(LossConfig { lambda: -1.0, ..Default::default() }.validate().is_err());
        assert!(LossConfig { ssim_window: 4, ..Default::default() }.validate().is_err());
        assert!(LossConfig { ssim_window: 1, ..Default::default() }.validate().is_err());
        assert!(LossConfig::default().validate().is_ok());
    }
}
