use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::rmsprop::{RmsProp, RmsPropConfig};
use crate::ctensor::{ComplexTensor, FftPlan};
use crate::data::{make_pair, rigid_augment};
use crate::error::{Error, Result};
use crate::layers::{Mode, Module};
use crate::losses::{composite_loss, LossConfig};
use crate::network::{CdfNet, Checkpoint, NamedTensor};
use crate::sampling::{apply_masks, make_mask, MaskParams, SamplingMask, DEFAULT_CENTER_LINES, DEFAULT_SIGMA_FRAC};

pub const LOSS_LOG_HEADER: &str = "epoch,l2,ssim_loss,composite";

/// Prefix of optimizer accumulators stored in checkpoints.
const OPTIM_PREFIX: &str = "rmsprop.";

/// SplitMix64 finalizer over the folded inputs; used to give every (epoch, sample) its own
/// independent stream.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut z = base;
    for &p in parts {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(p);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: RmsPropConfig,
    pub loss: LossConfig,
    pub acceleration: f64,
    pub center_lines: usize,
    pub sigma_frac: f64,
    pub mask_seed: u64,
    pub shuffle_seed: u64,
    pub augment: bool,
    pub augment_seed: u64,
    /// Save a checkpoint every this many epochs; 0 saves only the final one.
    pub checkpoint_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 5,
            optimizer: RmsPropConfig::default(),
            loss: LossConfig::default(),
            acceleration: 4.0,
            center_lines: DEFAULT_CENTER_LINES,
            sigma_frac: DEFAULT_SIGMA_FRAC,
            mask_seed: 1,
            shuffle_seed: 2,
            augment: true,
            augment_seed: 3,
            checkpoint_every: 10,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("batch_size", "must be positive"));
        }
        if !(self.acceleration >= 1.0) || !self.acceleration.is_finite() {
            return Err(Error::config("acceleration", format!("{} must be >= 1", self.acceleration)));
        }
        if !(self.sigma_frac > 0.0) {
            return Err(Error::config("sigma_frac", "must be positive"));
        }
        self.optimizer.validate()?;
        self.loss.validate()
    }

    pub fn mask_params(&self, seed: u64) -> MaskParams {
        MaskParams {
            acceleration: self.acceleration,
            center_lines: self.center_lines,
            sigma_frac: self.sigma_frac,
            seed,
        }
    }
}

/// Mean losses over one epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    /// 1-based epoch number.
    pub epoch: usize,
    pub l2: f64,
    pub ssim_loss: f64,
    pub composite: f64,
}

/// Network, optimizer state and progress: everything a checkpoint needs to resume.
#[derive(Clone, Debug)]
pub struct Trainer {
    pub net: CdfNet,
    pub optimizer: RmsProp,
    pub config: TrainConfig,
    /// Number of completed epochs.
    pub epoch: usize,
    pub log: Vec<EpochLog>,
}

impl Trainer {
    pub fn new(net: CdfNet, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            net,
            optimizer: RmsProp::new(config.optimizer.clone())?,
            config,
            epoch: 0,
            log: Vec::new(),
        })
    }

    pub fn to_checkpoint(&self) -> Result<Checkpoint> {
        let mut extra = serde_json::Map::new();
        extra.insert("train".into(), serde_json::to_value(&self.config)?);
        extra.insert("epoch".into(), self.epoch.into());
        extra.insert("log".into(), serde_json::to_value(&self.log)?);
        let mut ck = Checkpoint::from_net(&self.net, extra)?;
        for (name, v) in self.optimizer.accumulators() {
            ck.tensors.push(NamedTensor {
                name: format!("{OPTIM_PREFIX}{name}"),
                shape: vec![v.len()],
                data: v.to_vec(),
            });
        }
        Ok(ck)
    }

    /// Restores a trainer saved by [`Trainer::to_checkpoint`].
    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let field = |key: &str| {
            ck.config
                .get(key)
                .cloned()
                .ok_or_else(|| Error::Corrupt(format!("checkpoint has no `{key}` entry")))
        };
        let config: TrainConfig = serde_json::from_value(field("train")?)?;
        let mut trainer = Self::new(ck.to_net()?, config)?;
        trainer.epoch = serde_json::from_value(field("epoch")?)?;
        trainer.log = serde_json::from_value(field("log")?)?;
        for t in &ck.tensors {
            if let Some(name) = t.name.strip_prefix(OPTIM_PREFIX) {
                trainer.optimizer.set_accumulator(name, t.data.clone());
            }
        }
        Ok(trainer)
    }

    /// Augmentation, mask and undersampled pair for one sample of one epoch.
    fn sample(&self, image: &ComplexTensor, epoch: usize, index: usize, plan: &FftPlan) -> Result<(SamplingMask, crate::data::Pair)> {
        let (h, w) = image.spatial()?;
        let x = if self.config.augment {
            rigid_augment(image, derive_seed(self.config.augment_seed, &[epoch as u64, index as u64]))?
        } else {
            image.clone()
        };
        let mask_seed = derive_seed(self.config.mask_seed, &[epoch as u64, index as u64]);
        let mask = make_mask(h, w, &self.config.mask_params(mask_seed))?;
        let pair = make_pair(&x, &mask, plan)?;
        Ok((mask, pair))
    }

    /// One pass over `images` (each `[H, W]`) in a seeded random order, with a fresh mask
    /// and augmentation per sample.
    pub fn run_epoch(&mut self, images: &[ComplexTensor]) -> Result<EpochLog> {
        let first = images.first().ok_or_else(|| Error::config("data", "training set is empty"))?;
        let (h, w) = first.spatial()?;
        for im in images {
            if im.shape() != [h, w] {
                return Err(Error::mismatch(&[h, w], im.shape()));
            }
        }
        let plan = FftPlan::new(h, w)?;
        let e = self.epoch;
        let mut order: Vec<usize> = (0..images.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(self.config.shuffle_seed, &[e as u64])));

        let (mut l2, mut ss, mut total) = (0.0, 0.0, 0.0);
        for (bi, chunk) in order.chunks(self.config.batch_size).enumerate() {
            let mut masks = Vec::with_capacity(chunk.len());
            let (mut xf, mut yu, mut xu) = (Vec::new(), Vec::new(), Vec::new());
            for &i in chunk {
                let (m, p) = self.sample(&images[i], e, i, &plan)?;
                masks.push(m);
                xf.push(p.x_f);
                yu.push(p.y_u);
                xu.push(p.x_u);
            }
            let b = chunk.len();
            let batch = |v: &[ComplexTensor]| -> Result<ComplexTensor> {
                ComplexTensor::stack(&v.iter().collect::<Vec<_>>())?.reshape(&[b, 1, h, w])
            };
            let (x_f, y_u, x_u) = (batch(&xf)?, batch(&yu)?, batch(&xu)?);

            self.net.zero_grad();
            let out = self.net.forward(&x_u, &masks, Some(&y_u), Mode::Train)?;
            if bi == 0 && self.net.config().dcl {
                check_data_consistency(&out.x_r, &y_u, &masks, &plan)?;
            }
            let loss = composite_loss(&out.x_r, &x_f, &self.config.loss)?;
            if !loss.total.is_finite() {
                return Err(Error::NonFinite(format!("training loss at epoch {}", e + 1)));
            }
            self.net.backward(&loss.grad)?;
            self.optimizer.step(&mut self.net)?;
            l2 += loss.l2 * b as f64;
            ss += loss.ssim_loss * b as f64;
            total += loss.total * b as f64;
        }
        let n = images.len() as f64;
        self.epoch += 1;
        let entry = EpochLog {
            epoch: self.epoch,
            l2: l2 / n,
            ssim_loss: ss / n,
            composite: total / n,
        };
        self.log.push(entry.clone());
        Ok(entry)
    }

    pub fn loss_log_csv(&self) -> String {
        let mut out = format!("{LOSS_LOG_HEADER}\n");
        for e in &self.log {
            out.push_str(&format!("{},{:?},{:?},{:?}\n", e.epoch, e.l2, e.ssim_loss, e.composite));
        }
        out
    }
}

const DCL_TOLERANCE: f64 = 1e-10;

fn check_data_consistency(x_r: &ComplexTensor, y_u: &ComplexTensor, masks: &[SamplingMask], plan: &FftPlan) -> Result<()> {
    let k = plan.forward(x_r)?;
    let dev = apply_masks(masks, &k, false)?.max_abs_diff(y_u)?;
    if dev > DCL_TOLERANCE {
        return Err(Error::Invariant(format!("network k-space deviates from acquired data by {dev:e}")));
    }
    Ok(())
}

/// Trains until `trainer.config.epochs` epochs are complete.
///
/// With `out_dir`, rewrites `loss_log.csv` after every epoch, saves `epoch_NNNN.ckpt` at the
/// configured cadence and `final.ckpt` at the end. When an epoch fails on a non-finite value
/// the state from before that epoch is written to `last_good.ckpt` and the error returned.
pub fn train(
    trainer: &mut Trainer,
    images: &[ComplexTensor],
    out_dir: Option<&Path>,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<()> {
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("loss_log.csv"), trainer.loss_log_csv())?;
    }
    while trainer.epoch < trainer.config.epochs {
        let snapshot = trainer.clone();
        let entry = match trainer.run_epoch(images) {
            Ok(e) => e,
            Err(err) => {
                if let (Some(dir), Error::NonFinite(_) | Error::Invariant(_)) = (out_dir, &err) {
                    snapshot.to_checkpoint()?.save(&dir.join("last_good.ckpt"))?;
                }
                *trainer = snapshot;
                return Err(err);
            }
        };
        on_epoch(&entry);
        if let Some(dir) = out_dir {
            fs::write(dir.join("loss_log.csv"), trainer.loss_log_csv())?;
            let every = trainer.config.checkpoint_every;
            if every > 0 && trainer.epoch.is_multiple_of(every) {
                trainer.to_checkpoint()?.save(&dir.join(format!("epoch_{:04}.ckpt", trainer.epoch)))?;
            }
        }
    }
    if let Some(dir) = out_dir {
        trainer.to_checkpoint()?.save(&dir.join("final.ckpt"))?;
    }
    Ok(())
}
