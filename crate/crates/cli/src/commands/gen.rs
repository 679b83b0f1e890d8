use std::path::PathBuf;

use cdfnet::data::{gen_phantom, phantom_seed, save_tensor};
use clap::Args;
use serde_json::json;

use crate::error::CliResult;
use crate::files::{create_dir, TENSOR_EXT};
use crate::manifest::ManifestBuilder;
use crate::status;

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Number of phantoms.
    #[arg(long)]
    pub count: usize,
    /// Height and width in pixels (multiple of 16).
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &GenArgs) -> CliResult<()> {
    let mut manifest = ManifestBuilder::new("gen-phantoms");
    manifest
        .config(json!({"count": args.count, "size": args.size}))
        .seeds(json!({"seed": args.seed}));
    create_dir(&args.out)?;
    for i in 0..args.count {
        let x = gen_phantom(args.size, args.size, phantom_seed(args.seed, i as u64))?;
        let path = args.out.join(format!("phantom_{i:04}.{TENSOR_EXT}"));
        save_tensor(&x, &path)?;
        manifest.output(&path);
    }
    manifest.write(&args.out)?;
    status(&format!("wrote {} phantoms to {}", args.count, args.out.display()));
    Ok(())
}
