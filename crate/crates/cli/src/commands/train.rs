use std::fs;
use std::path::PathBuf;

use cdfnet::network::{CdfNet, Checkpoint};
use cdfnet::optim::{train, Trainer};
use clap::Args;
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::files::{create_dir, load_image, tensor_paths};
use crate::manifest::ManifestBuilder;
use crate::status;

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Flat JSON config; flags below override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory of fully sampled `.cten` training images.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Continue from a checkpoint written by an earlier run.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Weight of the SSIM loss term.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub accel: Option<f64>,
    /// Disable the data-consistency layer.
    #[arg(long)]
    pub no_dcl: bool,
    #[arg(long)]
    pub no_augment: bool,
    #[arg(long)]
    pub growth: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
}

impl TrainArgs {
    fn effective_config(&self, base: RunConfig) -> RunConfig {
        let mut c = base;
        if let Some(v) = self.epochs {
            c.epochs = v;
        }
        if let Some(v) = self.batch_size {
            c.batch_size = v;
        }
        if let Some(v) = self.lr {
            c.lr = v;
        }
        if let Some(v) = self.lambda {
            c.lambda = v;
        }
        if let Some(v) = self.accel {
            c.acceleration = v;
        }
        if self.no_dcl {
            c.dcl = false;
        }
        if self.no_augment {
            c.augment = false;
        }
        if let Some(v) = self.growth {
            c.growth = v;
        }
        if let Some(v) = self.width {
            c.width = v;
        }
        c
    }
}

pub fn run(args: &TrainArgs) -> CliResult<()> {
    let mut manifest = ManifestBuilder::new("train");
    let mut trainer = match &args.resume {
        Some(path) => {
            if args.config.is_some() {
                return Err(CliError::Usage("--config cannot be combined with --resume".into()));
            }
            manifest.input(path);
            let ck = Checkpoint::load(path)?;
            let mut t = Trainer::from_checkpoint(&ck)?;
            let resumed = RunConfig::from_parts(t.net.config(), &t.config);
            let config = args.effective_config(resumed.clone());
            if (RunConfig { epochs: resumed.epochs, ..config.clone() }) != resumed {
                return Err(CliError::Usage("only --epochs may be changed when resuming".into()));
            }
            t.config.epochs = config.epochs;
            t
        }
        None => {
            let base = match &args.config {
                Some(p) => {
                    manifest.input(p);
                    RunConfig::load(p)?
                }
                None => RunConfig::default(),
            };
            let config = args.effective_config(base);
            config.validate()?;
            Trainer::new(CdfNet::new(config.net())?, config.train())?
        }
    };
    let effective = RunConfig::from_parts(trainer.net.config(), &trainer.config);

    let paths = tensor_paths(&args.data)?;
    if paths.is_empty() {
        return Err(CliError::Config(format!("{}: no .cten training images", args.data.display())));
    }
    let images = paths.iter().map(|p| load_image(p)).collect::<CliResult<Vec<_>>>()?;
    manifest.input(&args.data);

    create_dir(&args.out)?;
    let config_path = args.out.join("config.json");
    let text = serde_json::to_string_pretty(&effective).map_err(cdfnet::Error::from)?;
    fs::write(&config_path, text).map_err(|e| CliError::io(&config_path, e))?;

    let total = trainer.config.epochs;
    let result = train(&mut trainer, &images, Some(&args.out), |e| {
        status(&format!(
            "epoch {}/{}  l2 {:.6}  ssim_loss {:.6}  composite {:.6}",
            e.epoch, total, e.l2, e.ssim_loss, e.composite
        ));
    });

    manifest
        .config(serde_json::to_value(&effective).map_err(cdfnet::Error::from)?)
        .seeds(json!({
            "net_seed": effective.net_seed,
            "mask_seed": effective.mask_seed,
            "shuffle_seed": effective.shuffle_seed,
            "augment_seed": effective.augment_seed,
        }))
        .output(&config_path)
        .output(&args.out.join("loss_log.csv"))
        .output(&args.out.join(if result.is_ok() { "final.ckpt" } else { "last_good.ckpt" }));
    manifest.write(&args.out)?;
    result?;
    status(&format!("trained {} epochs; checkpoint {}", trainer.epoch, args.out.join("final.ckpt").display()));
    Ok(())
}
