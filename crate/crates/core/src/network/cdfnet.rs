use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dcl::{dcl, dcl_backward};
use crate::ctensor::{ComplexTensor, FftPlan};
use crate::error::{Error, Result};
use crate::layers::{join, CMaxPool2, ComplexConv2d, DenseBlock, Mode, Module, Param, Upsample2};
use crate::sampling::SamplingMask;

/// Architecture hyperparameters. `growth` is the number of channels each dense unit adds and
/// `width` the channel count every 1x1 transition resets to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetConfig {
    pub growth: usize,
    pub width: usize,
    pub kernel: usize,
    pub dcl: bool,
    pub seed: u64,
}

impl NetConfig {
    /// Growth 8 / width 16: small enough to train on a laptop CPU.
    pub fn desk() -> Self {
        Self {
            growth: 8,
            width: 16,
            kernel: 3,
            dcl: true,
            seed: 0,
        }
    }

    /// Feature width 32 with 3x3 kernels.
    pub fn wide() -> Self {
        Self {
            growth: 32,
            width: 32,
            ..Self::desk()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.growth == 0 {
            return Err(Error::config("growth", "must be positive"));
        }
        if self.width == 0 {
            return Err(Error::config("width", "must be positive"));
        }
        if self.kernel.is_multiple_of(2) {
            return Err(Error::config("kernel", "must be odd"));
        }
        Ok(())
    }
}

impl Default for NetConfig {
    fn default() -> Self {
        Self::desk()
    }
}

/// A dense block followed by a 1x1 transition conv back to `width` channels.
#[derive(Clone, Debug)]
struct Stage {
    block: DenseBlock,
    transition: ComplexConv2d,
}

impl Stage {
    fn new(in_channels: usize, cfg: &NetConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        let block = DenseBlock::new(in_channels, cfg.growth, cfg.kernel, rng)?;
        let transition = ComplexConv2d::same(block.out_channels(), cfg.width, 1, rng)?;
        Ok(Self { block, transition })
    }

    fn forward(&mut self, h: &ComplexTensor, mode: Mode) -> Result<ComplexTensor> {
        let z = self.block.forward(h, mode)?;
        self.transition.forward(&z)
    }

    fn backward(&mut self, grad: &ComplexTensor) -> Result<ComplexTensor> {
        let g = self.transition.backward(grad)?;
        self.block.backward(&g)
    }

    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &Param)) {
        self.block.visit_params(&join(prefix, "block"), f);
        self.transition.visit_params(&join(prefix, "transition"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param)) {
        self.block.visit_params_mut(&join(prefix, "block"), f);
        self.transition.visit_params_mut(&join(prefix, "transition"), f);
    }
}

/// Output of a forward pass.
#[derive(Clone, Debug)]
pub struct NetOutput {
    /// Final reconstruction `x_r` (after the data-consistency layer when enabled).
    pub x_r: ComplexTensor,
    /// Intermediate reconstruction `x̃_r` from the 1x1 reconstruction layer.
    pub x_tilde: ComplexTensor,
}

#[derive(Clone, Debug)]
struct DclCache {
    masks: Vec<SamplingMask>,
    plan: FftPlan,
}

/// Complex dense fully convolutional network.
///
/// Four encoder stages (dense block, transition, 2x2 max-pool), a bottleneck stage, and four
/// decoder stages (2x upsample, concatenation with the matching encoder output, dense block,
/// transition), followed by a 1x1 complex reconstruction conv to one channel and an optional
/// data-consistency layer. The reconstruction conv starts at zero; every other kernel uses
/// the Rayleigh/uniform-phase initialization.
#[derive(Clone, Debug)]
pub struct CdfNet {
    config: NetConfig,
    encoders: Vec<Stage>,
    pools: Vec<CMaxPool2>,
    bottleneck: Stage,
    ups: Vec<Upsample2>,
    decoders: Vec<Stage>,
    recon: ComplexConv2d,
    dcl_cache: Option<DclCache>,
}

impl CdfNet {
    pub const STAGES: usize = 4;

    pub fn new(config: NetConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let w = config.width;
        let encoders = (0..Self::STAGES)
            .map(|k| Stage::new(if k == 0 { 1 } else { w }, &config, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let bottleneck = Stage::new(w, &config, &mut rng)?;
        let decoders = (0..Self::STAGES)
            .map(|_| Stage::new(2 * w, &config, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        // a zero head makes the untrained network return x_u when data consistency is on
        let recon = ComplexConv2d::zeros(w, 1, 1, 1, 0)?;
        Ok(Self {
            config,
            encoders,
            pools: vec![CMaxPool2::default(); Self::STAGES],
            bottleneck,
            ups: vec![Upsample2::default(); Self::STAGES],
            decoders,
            recon,
            dcl_cache: None,
        })
    }

    pub fn config(&self) -> &NetConfig {
        &self.config
    }

    pub fn set_dcl(&mut self, enabled: bool) {
        self.config.dcl = enabled;
    }

    /// Runs `f_ℂ` on `x_u` (`[B, 1, H, W]`), then the data-consistency layer when enabled.
    ///
    /// `masks` (one shared mask or one per batch item) and `y_u` are required when the
    /// data-consistency layer is on and ignored otherwise.
    pub fn forward(
        &mut self,
        x_u: &ComplexTensor,
        masks: &[SamplingMask],
        y_u: Option<&ComplexTensor>,
        mode: Mode,
    ) -> Result<NetOutput> {
        let (b, c, h, w) = x_u.dims4()?;
        let factor = 1 << Self::STAGES;
        if c != 1 {
            return Err(Error::shape(x_u.shape(), "network input must have one complex channel"));
        }
        if h % factor != 0 || w % factor != 0 {
            return Err(Error::shape(x_u.shape(), format!("spatial extents must be divisible by {factor}")));
        }

        let mut skips = Vec::with_capacity(Self::STAGES);
        let mut feat = x_u.clone();
        for (enc, pool) in self.encoders.iter_mut().zip(&mut self.pools) {
            let out = enc.forward(&feat, mode)?;
            feat = pool.forward(&out)?;
            skips.push(out);
        }
        feat = self.bottleneck.forward(&feat, mode)?;
        for (k, (dec, up)) in self.decoders.iter_mut().zip(&mut self.ups).enumerate() {
            let upsampled = up.forward(&feat)?;
            let skip = &skips[Self::STAGES - 1 - k];
            feat = dec.forward(&ComplexTensor::concat_channels(&[&upsampled, skip])?, mode)?;
        }
        let x_tilde = self.recon.forward(&feat)?;

        let x_r = if self.config.dcl {
            let y_u = match y_u {
                Some(y) if !masks.is_empty() => y,
                _ => return Err(Error::config("mask", "data consistency needs a mask and acquired k-space")),
            };
            if y_u.shape() != [b, 1, h, w] {
                return Err(Error::mismatch(&[b, 1, h, w], y_u.shape()));
            }
            let plan = FftPlan::new(h, w)?;
            let x_r = dcl(&x_tilde, y_u, masks, &plan)?;
            self.dcl_cache = Some(DclCache {
                masks: masks.to_vec(),
                plan,
            });
            x_r
        } else {
            self.dcl_cache = None;
            x_tilde.clone()
        };
        Ok(NetOutput { x_r, x_tilde })
    }

    /// Backpropagates `∂L/∂x_r`, accumulating parameter gradients. Returns `∂L/∂x_u`.
    pub fn backward(&mut self, grad_x_r: &ComplexTensor) -> Result<ComplexTensor> {
        let grad_tilde = match self.dcl_cache.take() {
            Some(DclCache { masks, plan }) if self.config.dcl => dcl_backward(grad_x_r, &masks, &plan)?,
            _ => grad_x_r.clone(),
        };
        let mut grad = self.recon.backward(&grad_tilde)?;
        let w = self.config.width;
        let mut skip_grads = vec![None; Self::STAGES];
        for k in (0..Self::STAGES).rev() {
            let g = self.decoders[k].backward(&grad)?;
            let mut parts = g.split_channels(&[w, w])?;
            skip_grads[Self::STAGES - 1 - k] = parts.pop();
            grad = self.ups[k].backward(&parts[0])?;
        }
        grad = self.bottleneck.backward(&grad)?;
        for k in (0..Self::STAGES).rev() {
            let pooled = self.pools[k].backward(&grad)?;
            let skip = skip_grads[k].take().expect("every decoder stage fills its skip gradient");
            grad = self.encoders[k].backward(&pooled.add(&skip)?)?;
        }
        Ok(grad)
    }

    /// Collects `(name, value)` of all trainable parameters and buffers, in a fixed order.
    pub fn named_tensors(&self) -> Vec<(String, Vec<usize>, Vec<f64>)> {
        let mut out = Vec::new();
        self.visit_params("", &mut |n, p| out.push((n.to_string(), p.shape.clone(), p.value.clone())));
        out
    }
}

impl Module for CdfNet {
    fn visit_params(&self, prefix: &str, f: &mut dyn FnMut(&str, &Param)) {
        for (k, s) in self.encoders.iter().enumerate() {
            s.visit(&join(prefix, &format!("enc{k}")), f);
        }
        self.bottleneck.visit(&join(prefix, "bottleneck"), f);
        for (k, s) in self.decoders.iter().enumerate() {
            s.visit(&join(prefix, &format!("dec{k}")), f);
        }
        self.recon.visit_params(&join(prefix, "recon"), f);
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param)) {
        for (k, s) in self.encoders.iter_mut().enumerate() {
            s.visit_mut(&join(prefix, &format!("enc{k}")), f);
        }
        self.bottleneck.visit_mut(&join(prefix, "bottleneck"), f);
        for (k, s) in self.decoders.iter_mut().enumerate() {
            s.visit_mut(&join(prefix, &format!("dec{k}")), f);
        }
        self.recon.visit_params_mut(&join(prefix, "recon"), f);
    }
}
