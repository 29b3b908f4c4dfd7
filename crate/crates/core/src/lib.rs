//! Numerical laboratory for analytic capacity and the Cauchy transform on
//! planar discrete measures.

pub mod capacity;
pub mod cauchy;
pub mod cli;
pub mod constructions;
pub mod curvature;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod measures;

pub use error::{Error, Result};

#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/measures.md")]
    pub mod measures {}
    #[doc = include_str!("../../../book/src/cauchy.md")]
    pub mod cauchy {}
    #[doc = include_str!("../../../book/src/curvature.md")]
    pub mod curvature {}
    #[doc = include_str!("../../../book/src/capacity.md")]
    pub mod capacity {}
    #[doc = include_str!("../../../book/src/constructions.md")]
    pub mod constructions {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    pub mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
