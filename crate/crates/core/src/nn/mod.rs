//! A small feed-forward network engine with exact backpropagation.
//!
//! Supported layers: dense, embedding, conv1d, maxpool1d, flatten, dropout,
//! relu, sigmoid and softmax. Every network ends in a one-unit sigmoid or a
//! two-unit softmax and is trained against cross-entropy.

mod gradcheck;
mod layer;
mod network;
mod persist;
mod tensor;

pub use gradcheck::grad_check;
pub use layer::LayerSpec;
pub use network::{bce_loss, ForwardTrace, Head, Network, CLAMP};
pub use persist::NetworkHeader;
pub use tensor::Tensor;
