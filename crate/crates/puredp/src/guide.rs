//! Doc-test anchors for the book chapters.
//!
//! Each module includes one chapter of `book/` as its documentation, so
//! `cargo test --doc` compiles and runs every code snippet in the guide and
//! the book can never drift from the library.

#[doc = include_str!("../../../book/src/intro.md")]
pub mod intro {}

#[doc = include_str!("../../../book/src/distributions.md")]
pub mod distributions {}

#[doc = include_str!("../../../book/src/intermediaries.md")]
pub mod intermediaries {}

#[doc = include_str!("../../../book/src/relaxed-aggregator.md")]
pub mod relaxed_aggregator {}

#[doc = include_str!("../../../book/src/bounded-sums.md")]
pub mod bounded_sums {}

#[doc = include_str!("../../../book/src/uniformity-testing.md")]
pub mod uniformity_testing {}

#[doc = include_str!("../../../book/src/verification.md")]
pub mod verification {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli_reference {}
