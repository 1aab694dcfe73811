//! Gated recurrent neural tensor networks.
//!
//! GRU and LSTM cells whose candidate computation gains a bilinear tensor
//! product between the current input and the (reset-gated) previous hidden
//! state, together with their baselines and a plain tanh RNN. Gradients are
//! derived by hand and certified against central finite differences.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: vectors, matrices, 3-D tensors, the bilinear product and activations
//! - [`cells`]: single-step forward/backward for every cell kind and the softmax output layer
//! - [`model`]: embedding → cell → softmax language model with full and truncated BPTT
//! - [`training`]: AdaGrad, gradient rescaling, dropout, initialization and the batch loop
//! - [`data`]: tokenization, vocabularies, batching and PPL / BPC metrics
//! - [`gradcheck`]: the finite-difference oracle
//! - [`cli`]: run configuration, checkpoints and the `train`/`eval`/`gradcheck`/`params`/`sample` commands

pub mod cells;
pub mod cli;
pub mod data;
pub mod error;
pub mod gradcheck;
pub mod linalg;
pub mod model;
pub mod params;
pub mod training;

pub use cells::{CellKind, CellParams, OutputLayer, StepState, StepTrace};
pub use data::{Corpus, Embedding, Level, Vocab};
pub use error::{Error, Result};
pub use linalg::{bilinear, bilinear_grads, Matrix, Tensor3, Vector};
pub use model::{count_params, LanguageModel};
pub use params::ParamSet;
pub use training::{LossReport, TrainConfig, Trainer};
