use crate::ctensor::RealTensor;
use crate::error::{Error, Result};

/// Windowed SSIM settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SsimConfig {
    pub window: usize,
    pub sigma: f64,
    pub data_range: f64,
}

impl Default for SsimConfig {
    fn default() -> Self {
        Self {
            window: 11,
            sigma: 1.5,
            data_range: 1.0,
        }
    }
}

/// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
pub fn gaussian_window(size: usize, sigma: f64) -> Vec<f64> {
    let r = (size / 2) as f64;
    let taps: Vec<f64> = (0..size)
        .map(|i| (-(i as f64 - r).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

/// Separable "valid" Gaussian filter and its adjoint.
struct Filter {
    taps: Vec<f64>,
    h: usize,
    w: usize,
    oh: usize,
    ow: usize,
}

impl Filter {
    fn apply(&self, src: &[f64]) -> Vec<f64> {
        let k = self.taps.len();
        let mut tmp = vec![0.0; self.h * self.ow];
        for y in 0..self.h {
            for x in 0..self.ow {
                tmp[y * self.ow + x] = (0..k).map(|j| self.taps[j] * src[y * self.w + x + j]).sum();
            }
        }
        let mut out = vec![0.0; self.oh * self.ow];
        for y in 0..self.oh {
            for x in 0..self.ow {
                out[y * self.ow + x] = (0..k).map(|i| self.taps[i] * tmp[(y + i) * self.ow + x]).sum();
            }
        }
        out
    }

    fn adjoint(&self, src: &[f64]) -> Vec<f64> {
        let k = self.taps.len();
        let mut tmp = vec![0.0; self.h * self.ow];
        for y in 0..self.oh {
            for x in 0..self.ow {
                let v = src[y * self.ow + x];
                for i in 0..k {
                    tmp[(y + i) * self.ow + x] += self.taps[i] * v;
                }
            }
        }
        let mut out = vec![0.0; self.h * self.w];
        for y in 0..self.h {
            for x in 0..self.ow {
                let v = tmp[y * self.ow + x];
                for j in 0..k {
                    out[y * self.w + x + j] += self.taps[j] * v;
                }
            }
        }
        out
    }
}

struct Stats {
    filter: Filter,
    mu_p: Vec<f64>,
    mu_q: Vec<f64>,
    e_pp: Vec<f64>,
    e_qq: Vec<f64>,
    e_pq: Vec<f64>,
    c1: f64,
    c2: f64,
}

fn stats(p: &RealTensor, q: &RealTensor, cfg: &SsimConfig) -> Result<Stats> {
    if p.shape() != q.shape() {
        return Err(Error::mismatch(q.shape(), p.shape()));
    }
    let (h, w) = p.dims2()?;
    if cfg.window.is_multiple_of(2) || cfg.window == 0 {
        return Err(Error::config("ssim_window", "must be odd"));
    }
    if h < cfg.window || w < cfg.window {
        return Err(Error::shape(p.shape(), format!("image smaller than the {}-pixel SSIM window", cfg.window)));
    }
    let filter = Filter {
        taps: gaussian_window(cfg.window, cfg.sigma),
        h,
        w,
        oh: h - cfg.window + 1,
        ow: w - cfg.window + 1,
    };
    let (pd, qd) = (p.data(), q.data());
    let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).collect::<Vec<_>>();
    Ok(Stats {
        mu_p: filter.apply(pd),
        mu_q: filter.apply(qd),
        e_pp: filter.apply(&sq(pd, pd)),
        e_qq: filter.apply(&sq(qd, qd)),
        e_pq: filter.apply(&sq(pd, qd)),
        c1: (0.01 * cfg.data_range).powi(2),
        c2: (0.03 * cfg.data_range).powi(2),
        filter,
    })
}

/// Mean SSIM over all window positions fully inside the image, with Gaussian-weighted
/// local statistics.
pub fn ssim(p: &RealTensor, q: &RealTensor, cfg: &SsimConfig) -> Result<f64> {
    let s = stats(p, q, cfg)?;
    let n = s.mu_p.len();
    let total: f64 = (0..n)
        .map(|i| {
            let (mp, mq) = (s.mu_p[i], s.mu_q[i]);
            let a1 = 2.0 * mp * mq + s.c1;
            let a2 = 2.0 * (s.e_pq[i] - mp * mq) + s.c2;
            let b1 = mp * mp + mq * mq + s.c1;
            let b2 = (s.e_pp[i] - mp * mp) + (s.e_qq[i] - mq * mq) + s.c2;
            (a1 * a2) / (b1 * b2)
        })
        .sum();
    Ok(total / n as f64)
}

/// SSIM together with its gradient w.r.t. `p`.
pub fn ssim_with_grad(p: &RealTensor, q: &RealTensor, cfg: &SsimConfig) -> Result<(f64, RealTensor)> {
    let s = stats(p, q, cfg)?;
    let n = s.mu_p.len();
    let inv_n = 1.0 / n as f64;
    let mut d_mu = vec![0.0; n];
    let mut d_epp = vec![0.0; n];
    let mut d_epq = vec![0.0; n];
    let mut total = 0.0;
    for i in 0..n {
        let (mp, mq) = (s.mu_p[i], s.mu_q[i]);
        let a1 = 2.0 * mp * mq + s.c1;
        let a2 = 2.0 * (s.e_pq[i] - mp * mq) + s.c2;
        let b1 = mp * mp + mq * mq + s.c1;
        let b2 = (s.e_pp[i] - mp * mp) + (s.e_qq[i] - mq * mq) + s.c2;
        let denom = b1 * b2;
        let v = (a1 * a2) / denom;
        total += v;
        // S as a function of (μ_p, E[p²], E[pq]) with q fixed
        d_mu[i] = inv_n * ((2.0 * mq * a2 - 2.0 * mq * a1) / denom - v * (2.0 * mp / b1 - 2.0 * mp / b2));
        d_epp[i] = -inv_n * v / b2;
        d_epq[i] = inv_n * 2.0 * a1 / denom;
    }
    let g_mu = s.filter.adjoint(&d_mu);
    let g_pp = s.filter.adjoint(&d_epp);
    let g_pq = s.filter.adjoint(&d_epq);
    let grad: Vec<f64> = (0..p.len())
        .map(|i| g_mu[i] + 2.0 * p.data()[i] * g_pp[i] + q.data()[i] * g_pq[i])
        .collect();
    Ok((total * inv_n, RealTensor::new(p.shape(), grad)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::rng;
    use rand::Rng;

    fn random_image(h: usize, w: usize, seed: u64) -> RealTensor {
        let mut r = rng(seed);
        RealTensor::new(&[h, w], (0..h * w).map(|_| r.gen_range(0.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn identical_images_score_exactly_one() {
        let p = random_image(20, 17, 1);
        assert_eq!(ssim(&p, &p, &SsimConfig::default()).unwrap(), 1.0);
    }

    #[test]
    fn constant_images_follow_luminance_closed_form() {
        let cfg = SsimConfig { data_range: 1.0, ..Default::default() };
        for (a, b) in [(0.2, 0.7), (0.9, 0.1), (0.5, 0.5), (0.0, 0.3)] {
            let p = RealTensor::filled(&[16, 16], a);
            let q = RealTensor::filled(&[16, 16], b);
            let c1 = 1e-4;
            let expect = (2.0 * a * b + c1) / (a * a + b * b + c1);
            assert!((ssim(&p, &q, &cfg).unwrap() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric() {
        let p = random_image(16, 16, 2);
        let q = random_image(16, 16, 3);
        let cfg = SsimConfig::default();
        let d = ssim(&p, &q, &cfg).unwrap() - ssim(&q, &p, &cfg).unwrap();
        assert!(d.abs() < 1e-12);
    }

    #[test]
    fn small_image_is_rejected() {
        let p = random_image(10, 16, 4);
        assert!(ssim(&p, &p, &SsimConfig::default()).is_err());
        assert!(ssim(&p, &random_image(16, 10, 4), &SsimConfig { window: 3, ..Default::default() }).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = random_image(16, 16, 5);
        let q = random_image(16, 16, 6);
        let cfg = SsimConfig::default();
        let (_, g) = ssim_with_grad(&p, &q, &cfg).unwrap();
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for i in 0..p.len() {
            let mut up = p.clone();
            up.data_mut()[i] += h;
            let mut down = p.clone();
            down.data_mut()[i] -= h;
            let num = (ssim(&up, &q, &cfg).unwrap() - ssim(&down, &q, &cfg).unwrap()) / (2.0 * h);
            worst = worst.max(crate::testing::rel_err(g.data()[i], num, 1e-6));
        }
        assert!(worst < 1e-5, "{worst}");
    }

    #[test]
    fn window_is_normalized() {
        let w = gaussian_window(11, 1.5);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(w[0], w[10]);
    }
}
