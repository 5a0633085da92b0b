//! Numerics for nonradial quenching of the MEMS equation
//! `u_t = Δu − u^{−2}` in two dimensions.

pub mod cutoff;
pub mod error;
pub mod fit;
pub mod hermite;
pub mod profile;
pub mod quadrature;
pub mod residual;
pub mod selfsim;
pub mod sigma;
pub mod solver;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/hermite.md")]
    mod hermite {}
    #[doc = include_str!("../../../book/src/profile.md")]
    mod profile {}
    #[doc = include_str!("../../../book/src/residual.md")]
    mod residual {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/selfsim.md")]
    mod selfsim {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
