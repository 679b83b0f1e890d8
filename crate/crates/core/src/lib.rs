//! Complex-valued dense fully convolutional network (CDFNet) for reconstructing
//! de-aliased MR images from Cartesian-undersampled k-space.
//!
//! The crate is organised bottom-up:
//!
//! * [`ctensor`]: complex tensors and the centered orthonormal 2-D FFT.
//! * [`layers`]: differentiable complex layers and the complex dense block.
//! * [`network`]: the encoder/decoder network, the data-consistency layer and checkpoints.
//! * [`losses`]: L2, SSIM and the weighted composite loss, all with analytic gradients.
//! * [`sampling`]: Cartesian line masks, retrospective undersampling and zero-filling.
//! * [`metrics`]: MSE, Sobel edge maps, Pratt's figure of merit and evaluation reports.
//! * [`data`]: synthetic complex phantoms, rigid augmentation and the tensor file format.
//! * [`optim`]: RMSProp and the training loop.

pub mod ctensor;
pub mod data;
pub mod error;
pub mod layers;
pub mod losses;
pub mod metrics;
pub mod network;
pub mod optim;
pub mod sampling;
#[cfg(test)]
pub(crate) mod testing;

pub use ctensor::{ComplexTensor, FftPlan, RealTensor};
pub use error::{Error, Result};
pub use num_complex::Complex64;
