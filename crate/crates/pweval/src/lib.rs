//! Numerical bounds for the sharp constant of point evaluation at the origin
//! in Paley-Wiener spaces.
//!
//! The crate computes two-sided bounds for the smallest constant C such that
//! |f(0)|^p <= C ||f||_p^p holds for every entire function f of exponential
//! type at most pi whose restriction to the real line is p-integrable. It
//! also searches numerically for the extremal functions attaining the bound,
//! reproduces the principal concentration eigenvalue of the band-and-time
//! limiting operator, and runs an n-fold convolution experiment on the
//! spectral side.
//!
//! A narrative guide with runnable snippets lives in `book/`; every code
//! block there compiles and runs as a doctest of this crate.

pub mod bounds;
pub mod cli;
pub mod convolve;
pub mod error;
pub mod extremal;
pub mod numerics;
pub mod prolate;
pub mod special;

pub use error::{PwError, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/special-functions.md")]
    mod special_functions {}
    #[doc = include_str!("../../../book/src/quadrature.md")]
    mod quadrature {}
    #[doc = include_str!("../../../book/src/concentration.md")]
    mod concentration {}
    #[doc = include_str!("../../../book/src/bounds.md")]
    mod bounds {}
    #[doc = include_str!("../../../book/src/extremal-search.md")]
    mod extremal_search {}
    #[doc = include_str!("../../../book/src/convolution.md")]
    mod convolution {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
