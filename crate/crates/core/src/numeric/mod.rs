//! Dense tensors, a reverse-mode tape, LSTM cells and the Adam optimizer.

mod adam;
pub mod gradcheck;
mod lstm;
mod tape;
mod tensor;

pub use adam::{adam_step, Adam, AdamConfig, AdamState};
pub use lstm::{lstm_cell, LstmParams};
pub use tape::{softmax_values, Gradients, ParamId, ParamStore, Tape, Var};
pub use tensor::{cross_entropy, sigmoid, softmax, Tensor, PROB_EPS};

pub(crate) use tensor::dot;
