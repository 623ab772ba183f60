//! Scaled one-hidden-layer networks, their initialization law and the
//! softmax actor model.

mod activation;
mod law;
mod network;
mod softmax;

pub use activation::{Activation, Sigmoid};
pub use law::InitLaw;
pub use network::{actor_model, empirical_functional, ScaledNetwork};
pub use softmax::softmax;
