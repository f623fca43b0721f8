//! One-bit compressed sensing with sublinear-time sparse recovery.
//!
//! Every scheme measures `sign(<a, x>)` bits of a signal `x` and decodes a
//! support containing its heavy hitters; [`pv`] adds value estimation. The
//! guide in `book/` walks through each piece with runnable snippets.

pub mod bits;
pub mod btree;
pub mod error;
pub mod expander;
pub mod harness;
pub mod heavy;
pub mod model;
pub mod partition;
pub mod ppq;
pub mod pv;
pub mod seeded;
pub mod sketch;
pub mod wire;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/signals.md")]
    mod signals {}
    #[doc = include_str!("../../../book/src/seeded.md")]
    mod seeded {}
    #[doc = include_str!("../../../book/src/point-queries.md")]
    mod point_queries {}
    #[doc = include_str!("../../../book/src/btree.md")]
    mod btree {}
    #[doc = include_str!("../../../book/src/expander.md")]
    mod expander {}
    #[doc = include_str!("../../../book/src/heavy-hitters.md")]
    mod heavy_hitters {}
    #[doc = include_str!("../../../book/src/estimation.md")]
    mod estimation {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
