//! A small CPU convolutional stack with optional learned padding per
//! convolution.

mod adam;
mod conv;
pub mod gradcheck;
mod layers;
mod network;
pub mod train;

pub use adam::AdamState;
pub use conv::{Conv2d, ConvPadding};
pub use layers::{softmax_xent, Dense, Flatten, MaxPool2, Relu, XentOutput};
pub use network::{LayerSpec, ModuleConfig, ModuleInit, Network, NetworkSpec, Placement};
pub use train::{train, EpochStats, SplitStats, TrainConfig, TrainReport};
