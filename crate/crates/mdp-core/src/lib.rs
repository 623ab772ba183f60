//! Finite MDPs, the two sampling kernels and exact solvers.

mod chain;
mod error;
mod forest;
mod mdp;
mod policy;
pub mod seed;
mod solve;

pub use chain::{
    kernel, pair_transition, sample_index, step, stationary_distribution, ChainKind, Kernel, StationarySolver,
};
pub use error::MdpError;
pub use forest::{build_forest, Embedding};
pub use mdp::FiniteMdp;
pub use policy::Policy;
pub use solve::{expected_reward, optimal_policy, value_function};

pub type Result<T> = std::result::Result<T, MdpError>;
