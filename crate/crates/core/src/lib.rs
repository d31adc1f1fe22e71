//! Randomized sketching of gradients and Hessian-vector products.

pub mod calculus;
pub mod error;
pub mod intrinsic;
pub mod kron;
pub mod oracles;
pub mod real;
pub mod rng;
pub mod sketch;
pub mod skvb;
pub mod spectral;
pub mod tda;
pub mod timing;

pub use error::{Error, Result};
pub use real::Real;
