pub mod baseline;
pub mod cli;
pub mod data;
pub mod error;
pub mod nn;
pub mod padding;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{Scalar, Shape, Tensor};
