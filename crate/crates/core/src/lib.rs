//! Exact simulation of gossip and small-world spread on flat tori and
//! rectangles, together with the branching process that approximates the
//! early phase and the limiting coverage profile.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod branching;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod index;
pub mod limitlaw;
pub mod spatial;
pub mod stats;

pub use error::{Error, Result};

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/branching.md")]
    mod branching {}
    #[doc = include_str!("../../../book/src/profile.md")]
    mod profile {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/ghosts.md")]
    mod ghosts {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
