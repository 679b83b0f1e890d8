//! The CDFNet encoder/decoder, its data-consistency head and checkpoint files.

mod cdfnet;
mod checkpoint;
mod dcl;

pub use cdfnet::{CdfNet, NetConfig, NetOutput};
pub use checkpoint::{Checkpoint, NamedTensor, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use dcl::{dcl, dcl_backward};
