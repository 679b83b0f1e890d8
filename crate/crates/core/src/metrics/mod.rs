//! Image-quality metrics: MSE, SSIM, Sobel edge maps and Pratt's figure of merit, plus the
//! per-image evaluation report and diagnostic images.

mod distance;
mod edges;
mod report;

pub use distance::squared_distance_transform;
pub use edges::{edge_difference_map, edge_map, pratts_fom, EdgeDiff, EdgeMap, EdgeParams, DEFAULT_FOM_ALPHA};
pub use report::{error_map, evaluate_pair, EvalReport, ImageMetrics, MetricMeans};

use crate::ctensor::RealTensor;
use crate::error::{Error, Result};
pub use crate::losses::{ssim, SsimConfig};

/// Mean of squared differences.
pub fn mse(p: &RealTensor, q: &RealTensor) -> Result<f64> {
    if p.shape() != q.shape() {
        return Err(Error::mismatch(q.shape(), p.shape()));
    }
    if p.is_empty() {
        return Err(Error::shape(p.shape(), "empty image"));
    }
    let sum: f64 = p.data().iter().zip(q.data()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sum / p.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::rng;
    use rand::Rng;

    #[test]
    fn mse_cases() {
        let mut r = rng(1);
        let p = RealTensor::new(&[5, 7], (0..35).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap();
        let q = RealTensor::new(&[5, 7], (0..35).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap();
        assert_eq!(mse(&p, &p).unwrap(), 0.0);
        assert_eq!(mse(&RealTensor::zeros(&[3, 3]), &RealTensor::filled(&[3, 3], 0.5)).unwrap(), 0.25);

        let mut acc = 0.0;
        for i in 0..5 {
            for j in 0..7 {
                let d = p.data()[i * 7 + j] - q.data()[i * 7 + j];
                acc += d * d;
            }
        }
        assert_eq!(mse(&p, &q).unwrap(), acc / 35.0);
        assert!(mse(&p, &RealTensor::zeros(&[7, 5])).is_err());
    }
}
