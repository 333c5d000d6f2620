//! Solvers and numerical verification tools for the fractional Laplacian
//! Dirichlet problem with nonzero exterior data on model domains
//! (half-space, ball, ball complement).

pub mod error;
pub mod fields;
pub mod fraclap;
pub mod geometry;
pub mod harness;
pub mod kernels;
pub mod point;
pub mod quad;
pub mod region;
pub mod solvers;
pub mod spaces;
pub mod special;
pub mod stats;
pub mod stochastic;

pub use error::{Error, Result};
pub use point::Point;
pub use quad::Estimate;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/domains.md")]
    mod domains {}
    #[doc = include_str!("../../../book/src/kernels.md")]
    mod kernels {}
    #[doc = include_str!("../../../book/src/solvers.md")]
    mod solvers {}
    #[doc = include_str!("../../../book/src/norms.md")]
    mod norms {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
}
