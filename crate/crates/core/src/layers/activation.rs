use crate::ctensor::ComplexTensor;
use crate::error::{Error, Result};

/// ReLU applied independently to the real and imaginary parts.
pub fn crelu(h: &ComplexTensor) -> ComplexTensor {
    let mut out = h.clone();
    let (re, im) = out.parts_mut();
    re.iter_mut().chain(im.iter_mut()).for_each(|v| *v = v.max(0.0));
    out
}

#[derive(Clone, Debug, Default)]
pub struct CRelu {
    input: Option<ComplexTensor>,
}

impl CRelu {
    pub fn forward(&mut self, h: &ComplexTensor) -> ComplexTensor {
        self.input = Some(h.clone());
        crelu(h)
    }

    pub fn backward(&mut self, grad_out: &ComplexTensor) -> Result<ComplexTensor> {
        let input = self
            .input
            .take()
            .ok_or_else(|| Error::config("backward", "crelu backward called without forward"))?;
        if input.shape() != grad_out.shape() {
            return Err(Error::mismatch(input.shape(), grad_out.shape()));
        }
        let mut grad = grad_out.clone();
        let (gre, gim) = grad.parts_mut();
        for (g, &x) in gre.iter_mut().zip(input.re()).chain(gim.iter_mut().zip(input.im())) {
            if x <= 0.0 {
                *g = 0.0;
            }
        }
        Ok(grad)
    }
}

fn pool_dims(h: &ComplexTensor) -> Result<(usize, usize, usize, usize)> {
    let (b, c, hh, ww) = h.dims4()?;
    if hh % 2 != 0 || ww % 2 != 0 {
        return Err(Error::shape(h.shape(), "2x2 pooling needs even spatial extents"));
    }
    Ok((b, c, hh, ww))
}

/// Pools one part plane; returns the flat source index of each maximum (first wins on ties).
fn pool_part(src: &[f64], dst: &mut [f64], argmax: &mut [usize], planes: usize, h: usize, w: usize) {
    let (oh, ow) = (h / 2, w / 2);
    for p in 0..planes {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best = p * h * w + 2 * oy * w + 2 * ox;
                for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                    let i = p * h * w + (2 * oy + dy) * w + 2 * ox + dx;
                    if src[i] > src[best] {
                        best = i;
                    }
                }
                let o = p * oh * ow + oy * ow + ox;
                dst[o] = src[best];
                argmax[o] = best;
            }
        }
    }
}

/// 2x2, stride-2 max pooling applied independently to the real and imaginary parts.
pub fn cmaxpool2(h: &ComplexTensor) -> Result<ComplexTensor> {
    CMaxPool2::default().forward(h)
}

#[derive(Clone, Debug, Default)]
pub struct CMaxPool2 {
    cache: Option<(Vec<usize>, Vec<usize>, Vec<usize>)>,
}

impl CMaxPool2 {
    pub fn forward(&mut self, h: &ComplexTensor) -> Result<ComplexTensor> {
        let (b, c, hh, ww) = pool_dims(h)?;
        let mut out = ComplexTensor::zeros(&[b, c, hh / 2, ww / 2]);
        let mut arg_re = vec![0; out.len()];
        let mut arg_im = vec![0; out.len()];
        let (ore, oim) = out.parts_mut();
        pool_part(h.re(), ore, &mut arg_re, b * c, hh, ww);
        pool_part(h.im(), oim, &mut arg_im, b * c, hh, ww);
        self.cache = Some((h.shape().to_vec(), arg_re, arg_im));
        Ok(out)
    }

    pub fn backward(&mut self, grad_out: &ComplexTensor) -> Result<ComplexTensor> {
        let (shape, arg_re, arg_im) = self
            .cache
            .take()
            .ok_or_else(|| Error::config("backward", "max-pool backward called without forward"))?;
        if grad_out.len() != arg_re.len() {
            return Err(Error::shape(grad_out.shape(), "does not match pooled output"));
        }
        let mut grad = ComplexTensor::zeros(&shape);
        let (gre, gim) = grad.parts_mut();
        for (o, &i) in arg_re.iter().enumerate() {
            gre[i] += grad_out.re()[o];
        }
        for (o, &i) in arg_im.iter().enumerate() {
            gim[i] += grad_out.im()[o];
        }
        Ok(grad)
    }
}

/// Nearest-neighbour 2x spatial upsampling.
pub fn upsample2(h: &ComplexTensor) -> Result<ComplexTensor> {
    let (b, c, hh, ww) = h.dims4()?;
    let mut out = ComplexTensor::zeros(&[b, c, 2 * hh, 2 * ww]);
    let (ow, planes) = (2 * ww, b * c);
    let (ore, oim) = out.parts_mut();
    for (src, dst) in [(h.re(), ore), (h.im(), oim)] {
        for p in 0..planes {
            for y in 0..2 * hh {
                for x in 0..ow {
                    dst[p * 4 * hh * ww + y * ow + x] = src[p * hh * ww + (y / 2) * ww + x / 2];
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Default)]
pub struct Upsample2 {
    input_shape: Option<Vec<usize>>,
}

impl Upsample2 {
    pub fn forward(&mut self, h: &ComplexTensor) -> Result<ComplexTensor> {
        let out = upsample2(h)?;
        self.input_shape = Some(h.shape().to_vec());
        Ok(out)
    }

    /// Sums each 2x2 block of the upstream gradient.
    pub fn backward(&mut self, grad_out: &ComplexTensor) -> Result<ComplexTensor> {
        let shape = self
            .input_shape
            .take()
            .ok_or_else(|| Error::config("backward", "upsample backward called without forward"))?;
        let (b, c, hh, ww) = (shape[0], shape[1], shape[2], shape[3]);
        if grad_out.shape() != [b, c, 2 * hh, 2 * ww] {
            return Err(Error::mismatch(&[b, c, 2 * hh, 2 * ww], grad_out.shape()));
        }
        let mut grad = ComplexTensor::zeros(&shape);
        let ow = 2 * ww;
        let (gre, gim) = grad.parts_mut();
        for (src, dst) in [(grad_out.re(), gre), (grad_out.im(), gim)] {
            for p in 0..b * c {
                for y in 0..2 * hh {
                    for x in 0..ow {
                        dst[p * hh * ww + (y / 2) * ww + x / 2] += src[p * 4 * hh * ww + y * ow + x];
                    }
                }
            }
        }
        Ok(grad)
    }
}
