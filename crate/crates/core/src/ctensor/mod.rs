//! Complex tensor storage, elementwise arithmetic and the centered orthonormal 2-D FFT.

mod fft;
mod tensor;

pub use fft::{fft2, ifft2, Direction, FftPlan};
pub use tensor::{ComplexTensor, RealTensor};
