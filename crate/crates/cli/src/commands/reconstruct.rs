use std::path::{Path, PathBuf};

use cdfnet::data::{save_magnitude, save_tensor};
use cdfnet::layers::Mode;
use cdfnet::network::Checkpoint;
use cdfnet::sampling::{undersample, zero_fill_recon};
use cdfnet::{ComplexTensor, FftPlan};
use clap::Args;
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::files::{create_dir, file_stem, load_image, load_mask, tensor_paths, TENSOR_EXT};
use crate::manifest::{read_config, ManifestBuilder};
use crate::status;

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("input").required(true).args(["kspace", "image"])))]
pub struct ReconstructArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Centered k-space (`.cten` file or directory); entries off the mask are ignored.
    #[arg(long)]
    pub kspace: Option<PathBuf>,
    /// Fully sampled image(s) to undersample retrospectively.
    #[arg(long)]
    pub image: Option<PathBuf>,
    #[arg(long)]
    pub mask: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

fn mask_echo(path: &Path) -> serde_json::Value {
    path.parent().and_then(read_config).unwrap_or(serde_json::Value::Null)
}

pub fn run(args: &ReconstructArgs) -> CliResult<()> {
    let ck = Checkpoint::load(&args.checkpoint)?;
    let mut net = ck.to_net()?;
    let mask = load_mask(&args.mask)?;
    let (input, is_kspace) = match (&args.kspace, &args.image) {
        (Some(k), None) => (k, true),
        (None, Some(i)) => (i, false),
        _ => return Err(CliError::Usage("give exactly one of --kspace or --image".into())),
    };
    let paths = tensor_paths(input)?;
    if paths.is_empty() {
        return Err(CliError::Config(format!("{}: no .cten inputs", input.display())));
    }
    let plan = FftPlan::new(mask.height(), mask.width())?;

    let names = ["x_u", "x_tilde", "x_r"];
    for n in names {
        create_dir(&args.out.join(n))?;
    }
    create_dir(&args.out.join("png"))?;
    let mut manifest = ManifestBuilder::new("reconstruct");
    manifest.input(&args.checkpoint).input(&args.mask).input(input);

    for path in &paths {
        let x = load_image(path)?;
        let (h, w) = x.spatial()?;
        let y = if is_kspace { x } else { plan.forward(&x)? };
        let y_u = undersample(&y, &mask)?.reshape(&[1, 1, h, w])?;
        let x_u = zero_fill_recon(&y_u, &plan)?;
        let out = net.forward(&x_u, std::slice::from_ref(&mask), Some(&y_u), Mode::Eval)?;
        let stem = file_stem(path);
        let results: [&ComplexTensor; 3] = [&x_u, &out.x_tilde, &out.x_r];
        for (name, t) in names.iter().zip(results) {
            let t = t.clone().reshape(&[h, w])?;
            let tp = args.out.join(name).join(format!("{stem}.{TENSOR_EXT}"));
            save_tensor(&t, &tp)?;
            let ip = args.out.join("png").join(format!("{stem}_{name}.png"));
            save_magnitude(&t, None, &ip)?;
            manifest.output(&tp).output(&ip);
        }
    }

    manifest.config(json!({
        "network": ck.config.get("network"),
        "train": ck.config.get("train"),
        "epoch": ck.config.get("epoch"),
        "mask": {
            "selected_rows": mask.selected_rows(),
            "effective_acceleration": mask.effective_acceleration(),
            "source": mask_echo(&args.mask),
        },
    }));
    manifest.write(&args.out)?;
    status(&format!("reconstructed {} image(s) into {}", paths.len(), args.out.display()));
    Ok(())
}
