use std::fs;
use std::path::{Path, PathBuf};

use cdfnet::data::save_rgb;
use cdfnet::metrics::{edge_difference_map, edge_map, error_map, evaluate_pair, EdgeParams, EvalReport, DEFAULT_FOM_ALPHA};
use clap::Args;
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::files::{create_dir, file_stem, load_image, tensor_paths};
use crate::manifest::{read_config, ManifestBuilder};
use crate::status;

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Reconstruction `.cten` file or directory.
    #[arg(long)]
    pub recon: PathBuf,
    /// Ground truth file or directory; directory entries are matched by file name.
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Sobel threshold relative to the strongest gradient.
    #[arg(long, default_value_t = 0.25)]
    pub edge_threshold: f64,
}

/// The nearest manifest config above a reconstruction: its own directory or the parent.
fn source_echo(recon: &Path) -> serde_json::Value {
    let dir = if recon.is_dir() { Some(recon) } else { recon.parent() };
    dir.and_then(|d| read_config(d).or_else(|| d.parent().and_then(read_config)))
        .unwrap_or(serde_json::Value::Null)
}

pub fn run(args: &EvaluateArgs) -> CliResult<()> {
    if !(args.edge_threshold > 0.0 && args.edge_threshold <= 1.0) {
        return Err(CliError::Config("edge_threshold must lie in (0, 1]".into()));
    }
    let recon_paths = tensor_paths(&args.recon)?;
    if recon_paths.is_empty() {
        return Err(CliError::Config(format!("{}: no .cten reconstructions", args.recon.display())));
    }
    let gt_is_dir = args.gt.is_dir();
    if !args.gt.exists() {
        return Err(CliError::io(&args.gt, std::io::ErrorKind::NotFound.into()));
    }
    let edges = EdgeParams {
        threshold: args.edge_threshold,
    };
    create_dir(&args.out.join("error_maps"))?;
    create_dir(&args.out.join("edge_diff"))?;
    let mut manifest = ManifestBuilder::new("evaluate");
    manifest.input(&args.recon).input(&args.gt);

    let mut rows = Vec::new();
    for rp in &recon_paths {
        let name = file_stem(rp);
        let gp = if gt_is_dir {
            args.gt.join(rp.file_name().expect("listed files have names"))
        } else {
            args.gt.clone()
        };
        let recon = load_image(rp)?;
        let gt = load_image(&gp)?;
        rows.push(evaluate_pair(&name, &recon, &gt, edges)?);

        let (err_img, _) = error_map(&recon, &gt)?;
        let ep = args.out.join("error_maps").join(format!("{name}.png"));
        save_rgb(&err_img, &ep)?;
        let norm = |x: &cdfnet::ComplexTensor| x.magnitude();
        let diff = edge_difference_map(&edge_map(&norm(&recon), edges)?, &edge_map(&norm(&gt), edges)?)?;
        let dp = args.out.join("edge_diff").join(format!("{name}.png"));
        save_rgb(diff.image(), &dp)?;
        manifest.output(&ep).output(&dp);
    }

    let config = json!({
        "edge_threshold": args.edge_threshold,
        "fom_alpha": DEFAULT_FOM_ALPHA,
        "source": source_echo(&args.recon),
    });
    let report = EvalReport::new(config.clone(), rows)?;
    let jp = args.out.join("report.json");
    let cp = args.out.join("report.csv");
    fs::write(&jp, report.to_json()?).map_err(|e| CliError::io(&jp, e))?;
    fs::write(&cp, report.to_csv()).map_err(|e| CliError::io(&cp, e))?;
    manifest.config(config).output(&jp).output(&cp);
    manifest.write(&args.out)?;
    status(&format!(
        "{} image(s): mean ssim {:.4}  mse {:.3e}  fom {:.4}",
        report.images.len(),
        report.mean.ssim,
        report.mean.mse,
        report.mean.pratts_fom
    ));
    Ok(())
}
