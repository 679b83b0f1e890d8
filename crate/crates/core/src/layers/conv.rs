use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, ArrayView2};
use rand::Rng;

use super::init::complex_kernel_init;
use super::param::{join, Module, Param};
use crate::ctensor::ComplexTensor;
use crate::error::{Error, Result};

/// Complex 2-D convolution (cross-correlation) with kernel `W_R + i W_I`.
///
/// For input `a + ib` the output is `(a*W_R - b*W_I) + i(a*W_I + b*W_R) + bias_R + i bias_I`.
/// Internally the four real correlations are fused into one real GEMM over the stacked
/// `[a; b]` planes with block weight `[[W_R, -W_I], [W_I, W_R]]`.
#[derive(Clone, Debug)]
pub struct ComplexConv2d {
    in_channels: usize,
    out_channels: usize,
    kernel: usize,
    stride: usize,
    padding: usize,
    pub weight_re: Param,
    pub weight_im: Param,
    pub bias_re: Param,
    pub bias_im: Param,
    cached_input: Option<ComplexTensor>,
}

/// Gradients produced by [`ComplexConv2d::gradients`].
#[derive(Clone, Debug)]
pub struct ConvGrads {
    pub input: ComplexTensor,
    pub weight_re: Vec<f64>,
    pub weight_im: Vec<f64>,
    pub bias_re: Vec<f64>,
    pub bias_im: Vec<f64>,
}

#[derive(Clone, Copy)]
struct Geometry {
    channels: usize,
    height: usize,
    width: usize,
    out_height: usize,
    out_width: usize,
    kernel: usize,
    stride: usize,
    padding: usize,
}

impl Geometry {
    fn rows(&self) -> usize {
        self.channels * self.kernel * self.kernel
    }

    fn cols(&self) -> usize {
        self.out_height * self.out_width
    }

    /// Unfolds one part plane `[C, H, W]` into `rows() x cols()` patch columns.
    fn im2col(&self, src: &[f64], dst: &mut [f64]) {
        let (k, p) = (self.kernel, self.cols());
        for c in 0..self.channels {
            let plane = &src[c * self.height * self.width..(c + 1) * self.height * self.width];
            for ky in 0..k {
                for kx in 0..k {
                    let row = &mut dst[((c * k + ky) * k + kx) * p..][..p];
                    for oy in 0..self.out_height {
                        let iy = (oy * self.stride + ky) as isize - self.padding as isize;
                        let out_row = &mut row[oy * self.out_width..(oy + 1) * self.out_width];
                        if iy < 0 || iy >= self.height as isize {
                            out_row.fill(0.0);
                            continue;
                        }
                        let line = &plane[iy as usize * self.width..(iy as usize + 1) * self.width];
                        for (ox, v) in out_row.iter_mut().enumerate() {
                            let ix = (ox * self.stride + kx) as isize - self.padding as isize;
                            *v = if ix < 0 || ix >= self.width as isize {
                                0.0
                            } else {
                                line[ix as usize]
                            };
                        }
                    }
                }
            }
        }
    }

    /// Adjoint of [`Geometry::im2col`]: scatters patch columns back onto a part plane.
    fn col2im(&self, src: &[f64], dst: &mut [f64]) {
        let (k, p) = (self.kernel, self.cols());
        for c in 0..self.channels {
            let plane = &mut dst[c * self.height * self.width..(c + 1) * self.height * self.width];
            for ky in 0..k {
                for kx in 0..k {
                    let row = &src[((c * k + ky) * k + kx) * p..][..p];
                    for oy in 0..self.out_height {
                        let iy = (oy * self.stride + ky) as isize - self.padding as isize;
                        if iy < 0 || iy >= self.height as isize {
                            continue;
                        }
                        let line = &mut plane[iy as usize * self.width..(iy as usize + 1) * self.width];
                        for ox in 0..self.out_width {
                            let ix = (ox * self.stride + kx) as isize - self.padding as isize;
                            if ix >= 0 && ix < self.width as isize {
                                line[ix as usize] += row[oy * self.out_width + ox];
                            }
                        }
                    }
                }
            }
        }
    }
}

impl ComplexConv2d {
    /// Randomly initialized layer; see [`complex_kernel_init`].
    pub fn new<R: Rng + ?Sized>(
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let mut layer = Self::zeros(in_channels, out_channels, kernel, stride, padding)?;
        let n = layer.weight_re.len();
        let taps = kernel * kernel;
        let (re, im) = complex_kernel_init(rng, n, in_channels * taps, out_channels * taps);
        layer.weight_re.value = re;
        layer.weight_im.value = im;
        Ok(layer)
    }

    /// Stride 1 with `(k-1)/2` padding, so spatial extents are preserved.
    pub fn same<R: Rng + ?Sized>(in_channels: usize, out_channels: usize, kernel: usize, rng: &mut R) -> Result<Self> {
        Self::new(in_channels, out_channels, kernel, 1, kernel / 2, rng)
    }

    pub fn zeros(in_channels: usize, out_channels: usize, kernel: usize, stride: usize, padding: usize) -> Result<Self> {
        if kernel.is_multiple_of(2) {
            return Err(Error::config("kernel", format!("kernel size {kernel} must be odd")));
        }
        if in_channels == 0 || out_channels == 0 || stride == 0 {
            return Err(Error::config("conv", "channels and stride must be positive"));
        }
        let shape = [out_channels, in_channels, kernel, kernel];
        Ok(Self {
            in_channels,
            out_channels,
            kernel,
            stride,
            padding,
            weight_re: Param::zeros(&shape),
            weight_im: Param::zeros(&shape),
            bias_re: Param::zeros(&[out_channels]),
            bias_im: Param::zeros(&[out_channels]),
            cached_input: None,
        })
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    pub fn kernel(&self) -> usize {
        self.kernel
    }

    fn geometry(&self, x: &ComplexTensor) -> Result<(usize, Geometry)> {
        let (b, c, h, w) = x.dims4()?;
        if c != self.in_channels {
            return Err(Error::mismatch(&[b, self.in_channels, h, w], x.shape()));
        }
        let (k, s, p) = (self.kernel, self.stride, self.padding);
        if h + 2 * p < k || w + 2 * p < k {
            return Err(Error::shape(x.shape(), "input smaller than kernel"));
        }
        Ok((
            b,
            Geometry {
                channels: c,
                height: h,
                width: w,
                out_height: (h + 2 * p - k) / s + 1,
                out_width: (w + 2 * p - k) / s + 1,
                kernel: k,
                stride: s,
                padding: p,
            },
        ))
    }

    /// `[[W_R, -W_I], [W_I, W_R]]`, shape `2C' x 2Ck²`.
    fn block_weight(&self) -> Array2<f64> {
        let (o, kk) = (self.out_channels, self.in_channels * self.kernel * self.kernel);
        let mut big = Array2::zeros((2 * o, 2 * kk));
        for r in 0..o {
            for j in 0..kk {
                let (wr, wi) = (self.weight_re.value[r * kk + j], self.weight_im.value[r * kk + j]);
                big[[r, j]] = wr;
                big[[r, kk + j]] = -wi;
                big[[o + r, j]] = wi;
                big[[o + r, kk + j]] = wr;
            }
        }
        big
    }

    fn sample_cols(&self, x: &ComplexTensor, bi: usize, g: &Geometry, cols: &mut [f64]) {
        let n = g.channels * g.height * g.width;
        let rows = g.rows() * g.cols();
        g.im2col(&x.re()[bi * n..(bi + 1) * n], &mut cols[..rows]);
        g.im2col(&x.im()[bi * n..(bi + 1) * n], &mut cols[rows..]);
    }

    /// Pure forward pass.
    pub fn apply(&self, x: &ComplexTensor) -> Result<ComplexTensor> {
        let (b, g) = self.geometry(x)?;
        let o = self.out_channels;
        let (kk, p) = (g.rows(), g.cols());
        let weight = self.block_weight();
        let mut out = ComplexTensor::zeros(&[b, o, g.out_height, g.out_width]);
        let mut cols = vec![0.0; 2 * kk * p];
        let mut prod = Array2::zeros((2 * o, p));
        for bi in 0..b {
            self.sample_cols(x, bi, &g, &mut cols);
            let cols_view = ArrayView2::from_shape((2 * kk, p), &cols).expect("im2col layout");
            general_mat_mul(1.0, &weight, &cols_view, 0.0, &mut prod);
            let flat = prod.as_slice().expect("contiguous product");
            let (re, im) = out.parts_mut();
            for r in 0..o {
                let dst = (bi * o + r) * p;
                let (br, bim) = (self.bias_re.value[r], self.bias_im.value[r]);
                for (d, s) in re[dst..dst + p].iter_mut().zip(&flat[r * p..(r + 1) * p]) {
                    *d = s + br;
                }
                for (d, s) in im[dst..dst + p].iter_mut().zip(&flat[(o + r) * p..(o + r + 1) * p]) {
                    *d = s + bim;
                }
            }
        }
        Ok(out)
    }

    /// Exact gradients of the forward map at `input` for upstream gradient `grad_out`.
    pub fn gradients(&self, input: &ComplexTensor, grad_out: &ComplexTensor) -> Result<ConvGrads> {
        let (b, g) = self.geometry(input)?;
        let o = self.out_channels;
        let expected = [b, o, g.out_height, g.out_width];
        if grad_out.shape() != expected {
            return Err(Error::mismatch(&expected, grad_out.shape()));
        }
        let (kk, p) = (g.rows(), g.cols());
        let weight = self.block_weight();
        let mut grad_weight = Array2::<f64>::zeros((2 * o, 2 * kk));
        let mut bias_re = vec![0.0; o];
        let mut bias_im = vec![0.0; o];
        let mut grad_input = ComplexTensor::zeros(input.shape());
        let n = g.channels * g.height * g.width;

        let mut cols = vec![0.0; 2 * kk * p];
        let mut upstream = vec![0.0; 2 * o * p];
        let mut grad_cols = Array2::<f64>::zeros((2 * kk, p));
        for bi in 0..b {
            self.sample_cols(input, bi, &g, &mut cols);
            let src = bi * o * p;
            upstream[..o * p].copy_from_slice(&grad_out.re()[src..src + o * p]);
            upstream[o * p..].copy_from_slice(&grad_out.im()[src..src + o * p]);
            for r in 0..o {
                bias_re[r] += upstream[r * p..(r + 1) * p].iter().sum::<f64>();
                bias_im[r] += upstream[(o + r) * p..(o + r + 1) * p].iter().sum::<f64>();
            }
            let cols_view = ArrayView2::from_shape((2 * kk, p), &cols).expect("im2col layout");
            let up_view = ArrayView2::from_shape((2 * o, p), &upstream).expect("upstream layout");
            general_mat_mul(1.0, &up_view, &cols_view.t(), 1.0, &mut grad_weight);
            general_mat_mul(1.0, &weight.t(), &up_view, 0.0, &mut grad_cols);
            let gc = grad_cols.as_slice().expect("contiguous");
            let (gre, gim) = grad_input.parts_mut();
            g.col2im(&gc[..kk * p], &mut gre[bi * n..(bi + 1) * n]);
            g.col2im(&gc[kk * p..], &mut gim[bi * n..(bi + 1) * n]);
        }

        let mut weight_re = vec![0.0; o * kk];
        let mut weight_im = vec![0.0; o * kk];
        for r in 0..o {
            for j in 0..kk {
                weight_re[r * kk + j] = grad_weight[[r, j]] + grad_weight[[o + r, kk + j]];
                weight_im[r * kk + j] = grad_weight[[o + r, j]] - grad_weight[[r, kk + j]];
            }
        }
        Ok(ConvGrads {
            input: grad_input,
            weight_re,
            weight_im,
            bias_re,
            bias_im,
        })
    }

    /// Forward pass that remembers its input for [`ComplexConv2d::backward`].
    pub fn forward(&mut self, x: &ComplexTensor) -> Result<ComplexTensor> {
        let out = self.apply(x)?;
        self.cached_input = Some(x.clone());
        Ok(out)
    }

    /// Accumulates parameter gradients and returns the input gradient.
    pub fn backward(&mut self, grad_out: &ComplexTensor) -> Result<ComplexTensor> {
        let input = self
            .cached_input
            .take()
            .ok_or_else(|| Error::config("backward", "conv backward called without forward"))?;
        let grads = self.gradients(&input, grad_out)?;
        accumulate(&mut self.weight_re.grad, &grads.weight_re);
        accumulate(&mut self.weight_im.grad, &grads.weight_im);
        accumulate(&mut self.bias_re.grad, &grads.bias_re);
        accumulate(&mut self.bias_im.grad, &grads.bias_im);
        Ok(grads.input)
    }
}

pub(crate) fn accumulate(dst: &mut [f64], src: &[f64]) {
    dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
}

/// Pure complex convolution of `h` with `layer`'s kernel.
pub fn complex_conv2d(h: &ComplexTensor, layer: &ComplexConv2d) -> Result<ComplexTensor> {
    layer.apply(h)
}

impl Module for ComplexConv2d {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(&str, &Param)) {
        f(&join(prefix, "weight_re"), &self.weight_re);
        f(&join(prefix, "weight_im"), &self.weight_im);
        f(&join(prefix, "bias_re"), &self.bias_re);
        f(&join(prefix, "bias_im"), &self.bias_im);
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param)) {
        f(&join(prefix, "weight_re"), &mut self.weight_re);
        f(&join(prefix, "weight_im"), &mut self.weight_im);
        f(&join(prefix, "bias_re"), &mut self.bias_re);
        f(&join(prefix, "bias_im"), &mut self.bias_im);
    }
}
