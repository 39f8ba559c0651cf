//! Discrete Bayesian-network toolkit for models with functional dependence.
//!
//! Deterministic CPTs are factorized through a hidden variable into products
//! of two-dimensional potentials, minimal hyperrectangle bases are searched
//! for, and junction-tree clique sizes are compared against the untransformed
//! and parent-divorced models.

pub mod bench;
pub mod error;
pub mod evidence;
pub mod factor;
pub mod factorize;
pub mod families;
pub mod formula;
pub mod infer;
pub mod io;
pub mod mbh;
pub mod network;
pub mod space;

/// Dense variable identifier within a [`network::Network`].
pub type VarId = usize;

pub use error::{Error, Result};
pub use evidence::Evidence;
pub use factor::Factor;
pub use network::{DeterministicFunction, Network, NetworkBuilder, Variable};
