use std::fs;
use std::path::{Path, PathBuf};

use cdfnet::data::load_tensor;
pub use cdfnet::data::TENSOR_EXT;
use cdfnet::ComplexTensor;

use crate::error::{CliError, CliResult};

pub fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// A single `.cten` file, or every `.cten` file of a directory sorted by name.
pub fn tensor_paths(path: &Path) -> CliResult<Vec<PathBuf>> {
    let meta = fs::metadata(path).map_err(|e| CliError::io(path, e))?;
    if meta.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut out = Vec::new();
    for entry in fs::read_dir(path).map_err(|e| CliError::io(path, e))? {
        let p = entry.map_err(|e| CliError::io(path, e))?.path();
        if p.extension().is_some_and(|e| e == TENSOR_EXT) {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

pub fn file_stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Loads an image as `[H, W]`, accepting `[1, 1, H, W]` and `[1, H, W]` as well.
pub fn load_image(path: &Path) -> CliResult<ComplexTensor> {
    if !path.exists() {
        return Err(CliError::io(path, std::io::ErrorKind::NotFound.into()));
    }
    let x = load_tensor(path)?;
    let (h, w) = x.spatial()?;
    if x.len() != h * w {
        return Err(CliError::Config(format!(
            "{}: expected a single image, found shape {:?}",
            path.display(),
            x.shape()
        )));
    }
    Ok(x.reshape(&[h, w])?)
}

/// Reads a mask image or tensor, with a clear error when the file is missing.
pub fn load_mask(path: &Path) -> CliResult<cdfnet::sampling::SamplingMask> {
    if !path.exists() {
        return Err(CliError::io(path, std::io::ErrorKind::NotFound.into()));
    }
    Ok(cdfnet::data::load_mask(path)?)
}
