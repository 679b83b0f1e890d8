use rand::Rng;

use super::activation::CRelu;
use super::batchnorm::ComplexBatchNorm;
use super::conv::ComplexConv2d;
use super::param::{join, Module, Param};
use super::Mode;
use crate::ctensor::ComplexTensor;
use crate::error::{Error, Result};

/// Complex conv → complex batch norm → ℂReLU.
#[derive(Clone, Debug)]
pub struct ConvBnRelu {
    pub conv: ComplexConv2d,
    pub norm: ComplexBatchNorm,
    relu: CRelu,
}

impl ConvBnRelu {
    pub fn new<R: Rng + ?Sized>(in_channels: usize, out_channels: usize, kernel: usize, rng: &mut R) -> Result<Self> {
        Ok(Self {
            conv: ComplexConv2d::same(in_channels, out_channels, kernel, rng)?,
            norm: ComplexBatchNorm::new(out_channels),
            relu: CRelu::default(),
        })
    }

    pub fn forward(&mut self, h: &ComplexTensor, mode: Mode) -> Result<ComplexTensor> {
        let z = self.conv.forward(h)?;
        let n = self.norm.forward(&z, mode)?;
        Ok(self.relu.forward(&n))
    }

    pub fn backward(&mut self, grad: &ComplexTensor) -> Result<ComplexTensor> {
        let g = self.relu.backward(grad)?;
        let g = self.norm.backward(&g)?;
        self.conv.backward(&g)
    }
}

impl Module for ConvBnRelu {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(&str, &Param)) {
        self.conv.visit_params(&join(prefix, "conv"), f);
        self.norm.visit_params(&join(prefix, "norm"), f);
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param)) {
        self.conv.visit_params_mut(&join(prefix, "conv"), f);
        self.norm.visit_params_mut(&join(prefix, "norm"), f);
    }
}

/// Densely connected block of three [`ConvBnRelu`] units.
///
/// Unit `j` sees the channel concatenation of the block input and the outputs of units
/// `0..j`; the block returns the concatenation of the input and all three unit outputs, so
/// it emits `in_channels + 3 * growth` channels.
#[derive(Clone, Debug)]
pub struct DenseBlock {
    in_channels: usize,
    growth: usize,
    pub units: Vec<ConvBnRelu>,
}

impl DenseBlock {
    pub const UNITS: usize = 3;

    pub fn new<R: Rng + ?Sized>(in_channels: usize, growth: usize, kernel: usize, rng: &mut R) -> Result<Self> {
        if in_channels == 0 || growth == 0 {
            return Err(Error::config("dense block", "channel counts must be positive"));
        }
        let units = (0..Self::UNITS)
            .map(|j| ConvBnRelu::new(in_channels + j * growth, growth, kernel, rng))
            .collect::<Result<_>>()?;
        Ok(Self {
            in_channels,
            growth,
            units,
        })
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn out_channels(&self) -> usize {
        self.in_channels + Self::UNITS * self.growth
    }

    pub fn forward(&mut self, h: &ComplexTensor, mode: Mode) -> Result<ComplexTensor> {
        let (b, c, hh, ww) = h.dims4()?;
        if c != self.in_channels {
            return Err(Error::mismatch(&[b, self.in_channels, hh, ww], h.shape()));
        }
        let mut features = vec![h.clone()];
        for unit in &mut self.units {
            let refs: Vec<&ComplexTensor> = features.iter().collect();
            let input = ComplexTensor::concat_channels(&refs)?;
            features.push(unit.forward(&input, mode)?);
        }
        let refs: Vec<&ComplexTensor> = features.iter().collect();
        ComplexTensor::concat_channels(&refs)
    }

    pub fn backward(&mut self, grad_out: &ComplexTensor) -> Result<ComplexTensor> {
        let mut sizes = vec![self.in_channels];
        sizes.extend(std::iter::repeat_n(self.growth, Self::UNITS));
        let mut grads = grad_out.split_channels(&sizes)?;
        for j in (0..Self::UNITS).rev() {
            let g_in = self.units[j].backward(&grads[j + 1])?;
            let parts = g_in.split_channels(&sizes[..=j])?;
            for (acc, part) in grads.iter_mut().zip(parts) {
                *acc = acc.add(&part)?;
            }
        }
        Ok(grads.swap_remove(0))
    }
}

impl Module for DenseBlock {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(&str, &Param)) {
        for (j, unit) in self.units.iter().enumerate() {
            unit.visit_params(&join(prefix, &format!("unit{j}")), f);
        }
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param)) {
        for (j, unit) in self.units.iter_mut().enumerate() {
            unit.visit_params_mut(&join(prefix, &format!("unit{j}")), f);
        }
    }
}
