use std::path::PathBuf;

use cdfnet::data::save_mask;
use cdfnet::sampling::{make_mask, MaskParams, DEFAULT_CENTER_LINES, DEFAULT_SIGMA_FRAC};
use clap::Args;
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::files::{create_dir, TENSOR_EXT};
use crate::manifest::ManifestBuilder;
use crate::status;

#[derive(Debug, Args)]
pub struct MaskArgs {
    /// Number of phase-encode rows (mask height).
    #[arg(long)]
    pub size: usize,
    /// Frequency-encode extent; defaults to `size`.
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long, default_value_t = 4.0)]
    pub accel: f64,
    #[arg(long, default_value_t = DEFAULT_CENTER_LINES)]
    pub center_lines: usize,
    #[arg(long, default_value_t = DEFAULT_SIGMA_FRAC)]
    pub sigma_frac: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file: `.pgm`/`.png` image or `.cten` tensor.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &MaskArgs) -> CliResult<()> {
    let width = args.width.unwrap_or(args.size);
    let params = MaskParams {
        acceleration: args.accel,
        center_lines: args.center_lines,
        sigma_frac: args.sigma_frac,
        seed: args.seed,
    };
    let mask = make_mask(args.size, width, &params)?;
    let dir = match args.out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    create_dir(&dir)?;
    match args.out.extension().and_then(|e| e.to_str()) {
        Some(TENSOR_EXT | "pgm" | "png") => save_mask(&mask, &args.out)?,
        _ => return Err(CliError::Usage(format!("{}: mask output must end in .pgm, .png or .cten", args.out.display()))),
    }
    let mut manifest = ManifestBuilder::new("make-mask");
    manifest
        .config(json!({
            "height": args.size,
            "width": width,
            "acceleration": args.accel,
            "center_lines": args.center_lines,
            "sigma_frac": args.sigma_frac,
            "selected_rows": mask.selected_rows(),
        }))
        .seeds(json!({"seed": args.seed}))
        .output(&args.out);
    manifest.write(&dir)?;
    status(&format!("mask with {} of {} rows written to {}", mask.selected_rows(), args.size, args.out.display()));
    Ok(())
}
