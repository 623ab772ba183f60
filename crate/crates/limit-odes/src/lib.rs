//! Deterministic limit dynamics of the scaled actor-critic and its
//! corrections in powers of `N^(beta-1)`.

mod error;
pub mod hyperdual;
mod kernels;
pub mod ode;
mod solution;
pub mod softmax;
mod system;

pub use error::{LimitError, Result};
pub use kernels::{build_kernels, law_expectation, nested_integrand, KernelSpec, KernelTables, LawTables, MAX_DEPTH};
pub use solution::{
    at_bracket_endpoint, expansion_order, integrate_correction, integrate_limit, integrate_order0, predict_network,
    LimitConfig, LimitSolution, Prediction, TABLE_KINDS,
};
