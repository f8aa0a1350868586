//! Exact computation of S-class groups of algebraic tori split by quadratic and
//! biquadratic fields, with the exact sequences relating them to class groups.

pub mod abelian;
pub mod bignum;
pub mod error;
pub mod gmodule;
pub mod harness;
pub mod numfield;
pub mod torus;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/overview.md")]
    mod overview {}
    #[doc = include_str!("../../../book/src/fields.md")]
    mod fields {}
    #[doc = include_str!("../../../book/src/tori.md")]
    mod tori {}
    #[doc = include_str!("../../../book/src/sequences.md")]
    mod sequences {}
    #[doc = include_str!("../../../book/src/harness.md")]
    mod harness {}
}
