//! Fedosov star products of Weyl and Wick type, computed exactly on chart
//! models.
//!
//! The crate is layered bottom-up:
//!
//! * [`scalar`]: exact Gaussian rationals.
//! * [`jets`]: truncated Taylor expansions at a base point.
//! * [`galg`]: the truncated Fedosov algebra `W ⊗ Λ` with its fibrewise
//!   products and structure maps.
//! * [`geometry`]: chart models (symplectic form, Poisson tensor,
//!   connection, curvature) and their validation.
//! * [`fedosov`]: the recursions for `r` and `τ`, the star products and the
//!   verification suite.

pub mod error;
pub mod fedosov;
pub mod galg;
pub mod geometry;
pub mod jets;
pub mod report;
pub mod scalar;

pub use error::{Error, Result};
pub use jets::{Frame, Jet};
pub use scalar::Scalar;
