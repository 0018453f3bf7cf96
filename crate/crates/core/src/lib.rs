//! Convergence and smoothness analysis of subdivision schemes with dilation `2I`.
//!
//! The crate computes difference masks of a subdivision mask, restricts the transition
//! operators to the invariant difference subspaces `V_k`, and bounds the `(k,∞)` joint spectral
//! radius both by branch-and-bound over matrix products and by restricted norms of the
//! difference scheme computed with an exact linear program.

pub mod corpus;
pub mod difference;
pub mod error;
pub mod format;
pub mod linalg;
pub mod lp;
pub mod mask;
mod poly;
pub mod rational;
pub mod spectral;
pub mod transition;

pub use error::{Error, Result};
pub use linalg::RatMatrix;
pub use mask::{MatrixMask, MultiIndex, Orientation, VectorSequence};
pub use rational::Rational;
