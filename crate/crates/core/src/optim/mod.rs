//! RMSProp and the training loop.

mod rmsprop;
mod train;

pub use rmsprop::{rmsprop_update, RmsProp, RmsPropConfig};
pub use train::{derive_seed, train, EpochLog, TrainConfig, Trainer, LOSS_LOG_HEADER};
