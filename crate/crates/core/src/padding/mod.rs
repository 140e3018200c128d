//! The learnable padding layer.
//!
//! For every channel the layer learns a 1x3 filter that predicts a border
//! from the row (or column) next to it. Supervision comes from the input
//! itself: the true borders are the targets and the reflect-then-zero padded
//! neighbours are the predictors. Padding is then grown one ring at a time by
//! applying the same filter to the current borders.

mod bundle;
mod filters;
mod module;
pub mod weights;

pub use bundle::{
    assemble_padded, build_predictor, correlate3, extract_borders, extract_neighbors, extract_target, mse, mse_grad,
    predict_with, squared_error_sum, BorderBundle, PredictorBundle, Side,
};
pub use filters::{FilterBank, LocalOptimizer, Mode};
pub use module::{pad_plane, PaddingModule, Supervision, MIN_EVAL_SIZE, MIN_TRAIN_SIZE};
