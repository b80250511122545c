//! Dense tensors, a reverse-mode tape, the layers the policy uses, and Adam.

mod adam;
pub mod checkpoint;
pub mod gradcheck;
pub mod layers;
mod params;
mod tape;
mod tensor;

pub use adam::Adam;
pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use layers::{BatchNorm, Linear, LstmCell, Mlp, Mode, MultiHeadAttention};
pub use params::{ParamId, ParamStore};
pub use tape::{softmax_rows, Grads, Tape, Var, Window, Windows};
pub use tensor::Tensor;
