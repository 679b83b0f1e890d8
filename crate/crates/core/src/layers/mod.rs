//! Differentiable complex-valued layers.
//!
//! Every layer follows the same contract: `forward` caches whatever the matching `backward`
//! needs, and `backward` maps the upstream gradient to the input gradient while accumulating
//! parameter gradients into [`Param::grad`]. Gradients are taken with respect to the real
//! parametrization, i.e. real and imaginary planes are independent real variables.

mod activation;
mod batchnorm;
mod conv;
mod dense;
mod init;
mod param;

pub use activation::{cmaxpool2, crelu, upsample2, CMaxPool2, CRelu, Upsample2};
pub use batchnorm::ComplexBatchNorm;
pub use conv::{complex_conv2d, ComplexConv2d, ConvGrads};
pub use dense::{ConvBnRelu, DenseBlock};
pub use init::complex_kernel_init;
pub use param::{Module, Param};
pub(crate) use param::join;

/// Batch-norm behaviour: batch statistics in training, running statistics in evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[cfg(test)]
mod tests;
