use std::f64::consts::FRAC_1_SQRT_2;

use super::param::{join, Module, Param};
use super::Mode;
use crate::ctensor::ComplexTensor;
use crate::error::{Error, Result};

/// Symmetric 2x2 matrix `[[a, b], [b, c]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Sym2 {
    a: f64,
    b: f64,
    c: f64,
}

/// Orthonormal eigenbasis: columns `(cos, sin)` and `(-sin, cos)` with eigenvalues `l1`, `l2`.
#[derive(Clone, Copy, Debug)]
struct Eigen2 {
    cos: f64,
    sin: f64,
    l1: f64,
    l2: f64,
}

impl Sym2 {
    fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        (self.a * x + self.b * y, self.b * x + self.c * y)
    }

    fn eigen(&self) -> Eigen2 {
        let theta = 0.5 * (2.0 * self.b).atan2(self.a - self.c);
        let (sin, cos) = theta.sin_cos();
        let l1 = self.a * cos * cos + 2.0 * self.b * sin * cos + self.c * sin * sin;
        let l2 = self.a * sin * sin - 2.0 * self.b * sin * cos + self.c * cos * cos;
        Eigen2 { cos, sin, l1, l2 }
    }
}

impl Eigen2 {
    /// `Q diag(d1, d2) Qᵀ`.
    fn compose(&self, d1: f64, d2: f64) -> Sym2 {
        let (c, s) = (self.cos, self.sin);
        Sym2 {
            a: d1 * c * c + d2 * s * s,
            b: (d1 - d2) * c * s,
            c: d1 * s * s + d2 * c * c,
        }
    }

    /// Solves `S Y + Y S = Z` for `S = V^{1/2}`, with `Z` a general 2x2 `[[z00, z01], [z10, z11]]`.
    fn sylvester_sqrt(&self, z: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
        let (c, s) = (self.cos, self.sin);
        let q = [[c, -s], [s, c]];
        let roots = [self.l1.sqrt(), self.l2.sqrt()];
        let mut zq = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                // (Qᵀ Z Q)_ij
                let mut acc = 0.0;
                for k in 0..2 {
                    for l in 0..2 {
                        acc += q[k][i] * z[k][l] * q[l][j];
                    }
                }
                zq[i][j] = acc / (roots[i] + roots[j]);
            }
        }
        let mut y = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = 0.0;
                for k in 0..2 {
                    for l in 0..2 {
                        acc += q[i][k] * zq[k][l] * q[j][l];
                    }
                }
                y[i][j] = acc;
            }
        }
        y
    }
}

#[derive(Clone, Debug)]
struct ChannelCache {
    whiten: Sym2,
    eigen: Eigen2,
}

#[derive(Clone, Debug)]
struct Cache {
    mode: Mode,
    /// Mean-removed input.
    centered: ComplexTensor,
    /// Whitened input, before the affine map.
    whitened: ComplexTensor,
    channels: Vec<ChannelCache>,
}

/// Complex batch normalization by 2x2 whitening of the `(re, im)` pair.
///
/// Training mode removes the per-channel mean and multiplies by `V^{-1/2}/sqrt(2)` where `V`
/// is the ε-regularized covariance, leaving each part with variance 1/2 and no
/// cross-covariance. A learnable symmetric `Γ` (stored as `[γ_rr, γ_ri, γ_ii]`) and complex
/// shift `β` follow.
#[derive(Clone, Debug)]
pub struct ComplexBatchNorm {
    channels: usize,
    momentum: f64,
    eps: f64,
    pub gamma: Param,
    pub beta: Param,
    pub running_mean: Param,
    pub running_cov: Param,
    cache: Option<Cache>,
}

impl ComplexBatchNorm {
    pub const DEFAULT_EPS: f64 = 1e-7;
    pub const DEFAULT_MOMENTUM: f64 = 0.1;

    pub fn new(channels: usize) -> Self {
        Self::with_options(channels, Self::DEFAULT_MOMENTUM, Self::DEFAULT_EPS)
    }

    pub fn with_options(channels: usize, momentum: f64, eps: f64) -> Self {
        let gamma = (0..channels).flat_map(|_| [FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2]).collect();
        let cov = (0..channels).flat_map(|_| [1.0, 0.0, 1.0]).collect();
        Self {
            channels,
            momentum,
            eps,
            gamma: Param::new(&[channels, 3], gamma),
            beta: Param::zeros(&[channels, 2]),
            running_mean: Param::buffer(&[channels, 2], vec![0.0; 2 * channels]),
            running_cov: Param::buffer(&[channels, 3], cov),
            cache: None,
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    fn gamma(&self, c: usize) -> Sym2 {
        let g = &self.gamma.value[3 * c..3 * c + 3];
        Sym2 { a: g[0], b: g[1], c: g[2] }
    }

    /// Normalizes `h` and caches what [`ComplexBatchNorm::backward`] needs.
    pub fn forward(&mut self, h: &ComplexTensor, mode: Mode) -> Result<ComplexTensor> {
        let (b, c, hh, ww) = h.dims4()?;
        if c != self.channels {
            return Err(Error::mismatch(&[b, self.channels, hh, ww], h.shape()));
        }
        let plane = hh * ww;
        let count = (b * plane) as f64;
        let mut centered = h.clone();
        let mut whitened = ComplexTensor::zeros(h.shape());
        let mut out = ComplexTensor::zeros(h.shape());
        let mut channels = Vec::with_capacity(c);

        for ch in 0..c {
            let idx = |bi: usize| (bi * c + ch) * plane;
            let (mean_re, mean_im, cov) = match mode {
                Mode::Train => {
                    let (mut sr, mut si) = (0.0, 0.0);
                    for bi in 0..b {
                        sr += h.re()[idx(bi)..idx(bi) + plane].iter().sum::<f64>();
                        si += h.im()[idx(bi)..idx(bi) + plane].iter().sum::<f64>();
                    }
                    let (mr, mi) = (sr / count, si / count);
                    let (mut vrr, mut vri, mut vii) = (0.0, 0.0, 0.0);
                    for bi in 0..b {
                        for i in idx(bi)..idx(bi) + plane {
                            let (x, y) = (h.re()[i] - mr, h.im()[i] - mi);
                            vrr += x * x;
                            vri += x * y;
                            vii += y * y;
                        }
                    }
                    let cov = Sym2 {
                        a: vrr / count,
                        b: vri / count,
                        c: vii / count,
                    };
                    let m = self.momentum;
                    let rm = &mut self.running_mean.value[2 * ch..2 * ch + 2];
                    rm[0] = (1.0 - m) * rm[0] + m * mr;
                    rm[1] = (1.0 - m) * rm[1] + m * mi;
                    let rc = &mut self.running_cov.value[3 * ch..3 * ch + 3];
                    rc[0] = (1.0 - m) * rc[0] + m * cov.a;
                    rc[1] = (1.0 - m) * rc[1] + m * cov.b;
                    rc[2] = (1.0 - m) * rc[2] + m * cov.c;
                    (mr, mi, cov)
                }
                Mode::Eval => {
                    let rm = &self.running_mean.value[2 * ch..2 * ch + 2];
                    let rc = &self.running_cov.value[3 * ch..3 * ch + 3];
                    (rm[0], rm[1], Sym2 { a: rc[0], b: rc[1], c: rc[2] })
                }
            };
            let reg = Sym2 {
                a: cov.a + self.eps,
                b: cov.b,
                c: cov.c + self.eps,
            };
            let eigen = reg.eigen();
            if !(eigen.l1 > 0.0 && eigen.l2 > 0.0) {
                return Err(Error::NonFinite(format!("batch-norm covariance of channel {ch}")));
            }
            let whiten = eigen.compose(FRAC_1_SQRT_2 / eigen.l1.sqrt(), FRAC_1_SQRT_2 / eigen.l2.sqrt());
            let gamma = self.gamma(ch);
            let (beta_re, beta_im) = (self.beta.value[2 * ch], self.beta.value[2 * ch + 1]);
            for bi in 0..b {
                for i in idx(bi)..idx(bi) + plane {
                    let (x, y) = (h.re()[i] - mean_re, h.im()[i] - mean_im);
                    centered.re_mut()[i] = x;
                    centered.im_mut()[i] = y;
                    let (u, v) = whiten.apply(x, y);
                    whitened.re_mut()[i] = u;
                    whitened.im_mut()[i] = v;
                    let (p, q) = gamma.apply(u, v);
                    out.re_mut()[i] = p + beta_re;
                    out.im_mut()[i] = q + beta_im;
                }
            }
            channels.push(ChannelCache { whiten, eigen });
        }
        if !out.is_finite() {
            return Err(Error::NonFinite("batch-norm output".into()));
        }
        self.cache = Some(Cache {
            mode,
            centered,
            whitened,
            channels,
        });
        Ok(out)
    }

    pub fn backward(&mut self, grad_out: &ComplexTensor) -> Result<ComplexTensor> {
        let cache = self
            .cache
            .take()
            .ok_or_else(|| Error::config("backward", "batch-norm backward called without forward"))?;
        if grad_out.shape() != cache.centered.shape() {
            return Err(Error::mismatch(cache.centered.shape(), grad_out.shape()));
        }
        let (b, c, hh, ww) = grad_out.dims4()?;
        let plane = hh * ww;
        let count = (b * plane) as f64;
        let mut grad_in = ComplexTensor::zeros(grad_out.shape());

        for ch in 0..c {
            let idx = |bi: usize| (bi * c + ch) * plane;
            let gamma = self.gamma(ch);
            let ChannelCache { whiten, eigen } = cache.channels[ch];

            // affine parameters, and the gradient reaching the whitened values
            let (mut d_grr, mut d_gri, mut d_gii, mut d_br, mut d_bi) = (0.0, 0.0, 0.0, 0.0, 0.0);
            // dL/dW accumulated as Σ ĝ x̃ᵀ
            let mut dw = [[0.0; 2]; 2];
            for bi in 0..b {
                for i in idx(bi)..idx(bi) + plane {
                    let (gr, gi) = (grad_out.re()[i], grad_out.im()[i]);
                    let (u, v) = (cache.whitened.re()[i], cache.whitened.im()[i]);
                    let (x, y) = (cache.centered.re()[i], cache.centered.im()[i]);
                    d_br += gr;
                    d_bi += gi;
                    d_grr += gr * u;
                    d_gri += gr * v + gi * u;
                    d_gii += gi * v;
                    let (hr, hi) = gamma.apply(gr, gi);
                    dw[0][0] += hr * x;
                    dw[0][1] += hr * y;
                    dw[1][0] += hi * x;
                    dw[1][1] += hi * y;
                    // direct path through the (fixed) whitening matrix
                    let (dx, dy) = whiten.apply(hr, hi);
                    grad_in.re_mut()[i] = dx;
                    grad_in.im_mut()[i] = dy;
                }
            }
            self.gamma.grad[3 * ch] += d_grr;
            self.gamma.grad[3 * ch + 1] += d_gri;
            self.gamma.grad[3 * ch + 2] += d_gii;
            self.beta.grad[2 * ch] += d_br;
            self.beta.grad[2 * ch + 1] += d_bi;

            if cache.mode == Mode::Eval {
                continue;
            }

            // W = S^{-1}/√2 with S = V^{1/2}: dL/dS = -S^{-1} (dL/dW) S^{-1} / √2
            let s_inv = eigen.compose(1.0 / eigen.l1.sqrt(), 1.0 / eigen.l2.sqrt());
            let si = [[s_inv.a, s_inv.b], [s_inv.b, s_inv.c]];
            let mut z = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    let mut acc = 0.0;
                    for k in 0..2 {
                        for l in 0..2 {
                            acc += si[i][k] * dw[k][l] * si[l][j];
                        }
                    }
                    z[i][j] = -acc * FRAC_1_SQRT_2;
                }
            }
            let y = eigen.sylvester_sqrt(z);
            // V = (1/M) Σ x̃ x̃ᵀ  ⇒  dL/dx̃ += (Y + Yᵀ) x̃ / M
            let sym = Sym2 {
                a: 2.0 * y[0][0] / count,
                b: (y[0][1] + y[1][0]) / count,
                c: 2.0 * y[1][1] / count,
            };
            let (mut mr, mut mi) = (0.0, 0.0);
            for bi in 0..b {
                for i in idx(bi)..idx(bi) + plane {
                    let (dx, dy) = sym.apply(cache.centered.re()[i], cache.centered.im()[i]);
                    grad_in.re_mut()[i] += dx;
                    grad_in.im_mut()[i] += dy;
                    mr += grad_in.re()[i];
                    mi += grad_in.im()[i];
                }
            }
            // mean removal
            let (mr, mi) = (mr / count, mi / count);
            for bi in 0..b {
                for i in idx(bi)..idx(bi) + plane {
                    grad_in.re_mut()[i] -= mr;
                    grad_in.im_mut()[i] -= mi;
                }
            }
        }
        Ok(grad_in)
    }

    /// Whitened activations of the most recent forward pass (before `Γ`, `β`).
    pub fn last_whitened(&self) -> Option<&ComplexTensor> {
        self.cache.as_ref().map(|c| &c.whitened)
    }
}

impl Module for ComplexBatchNorm {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(&str, &Param)) {
        f(&join(prefix, "gamma"), &self.gamma);
        f(&join(prefix, "beta"), &self.beta);
        f(&join(prefix, "running_mean"), &self.running_mean);
        f(&join(prefix, "running_cov"), &self.running_cov);
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param)) {
        f(&join(prefix, "gamma"), &mut self.gamma);
        f(&join(prefix, "beta"), &mut self.beta);
        f(&join(prefix, "running_mean"), &mut self.running_mean);
        f(&join(prefix, "running_cov"), &mut self.running_cov);
    }
}
