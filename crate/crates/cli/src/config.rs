use std::fs;
use std::path::Path;

use cdfnet::losses::{DynamicRange, LossConfig};
use cdfnet::network::NetConfig;
use cdfnet::optim::{RmsPropConfig, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Flat key-value training configuration, as read from `--config` and echoed to `config.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub rho: f64,
    pub eps: f64,
    pub clip_norm: Option<f64>,
    pub lambda: f64,
    pub ssim_window: usize,
    pub ssim_sigma: f64,
    pub acceleration: f64,
    pub center_lines: usize,
    pub sigma_frac: f64,
    pub mask_seed: u64,
    pub shuffle_seed: u64,
    pub augment: bool,
    pub augment_seed: u64,
    pub checkpoint_every: usize,
    pub growth: usize,
    pub width: usize,
    pub kernel: usize,
    pub dcl: bool,
    pub net_seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::from_parts(&NetConfig::desk(), &TrainConfig::default())
    }
}

impl RunConfig {
    pub fn from_parts(net: &NetConfig, train: &TrainConfig) -> Self {
        Self {
            epochs: train.epochs,
            batch_size: train.batch_size,
            lr: train.optimizer.lr,
            rho: train.optimizer.rho,
            eps: train.optimizer.eps,
            clip_norm: train.optimizer.clip_norm,
            lambda: train.loss.lambda,
            ssim_window: train.loss.ssim_window,
            ssim_sigma: train.loss.ssim_sigma,
            acceleration: train.acceleration,
            center_lines: train.center_lines,
            sigma_frac: train.sigma_frac,
            mask_seed: train.mask_seed,
            shuffle_seed: train.shuffle_seed,
            augment: train.augment,
            augment_seed: train.augment_seed,
            checkpoint_every: train.checkpoint_every,
            growth: net.growth,
            width: net.width,
            kernel: net.kernel,
            dcl: net.dcl,
            net_seed: net.seed,
        }
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn net(&self) -> NetConfig {
        NetConfig {
            growth: self.growth,
            width: self.width,
            kernel: self.kernel,
            dcl: self.dcl,
            seed: self.net_seed,
        }
    }

    pub fn train(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            optimizer: RmsPropConfig {
                lr: self.lr,
                rho: self.rho,
                eps: self.eps,
                clip_norm: self.clip_norm,
            },
            loss: LossConfig {
                lambda: self.lambda,
                ssim_window: self.ssim_window,
                ssim_sigma: self.ssim_sigma,
                dynamic_range: DynamicRange::GroundTruthMax,
            },
            acceleration: self.acceleration,
            center_lines: self.center_lines,
            sigma_frac: self.sigma_frac,
            mask_seed: self.mask_seed,
            shuffle_seed: self.shuffle_seed,
            augment: self.augment,
            augment_seed: self.augment_seed,
            checkpoint_every: self.checkpoint_every,
        }
    }

    /// Checks every field, reporting all problems at once.
    pub fn validate(&self) -> CliResult<()> {
        let mut problems = Vec::new();
        let net = self.net();
        let train = self.train();
        if let Err(e) = net.validate() {
            problems.push(e.to_string());
        }
        if let Err(e) = train.validate() {
            problems.push(e.to_string());
        }
        if self.center_lines == 0 {
            problems.push("invalid value for `center_lines`: must be positive".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(problems.join("; ")))
        }
    }
}
