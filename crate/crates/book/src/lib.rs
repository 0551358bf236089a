//! The guide in `book/` is written for mdbook, which cannot run listings that
//! depend on workspace crates. Each chapter is included here as the docs of
//! an empty module instead, so `cargo test` runs every listing as a doctest
//! against the current `hdagg` and a failure names the chapter it came from.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/hypervectors.md")]
pub mod hypervectors {}
#[doc = include_str!("../../../book/src/positions.md")]
pub mod positions {}
#[doc = include_str!("../../../book/src/preprocessing.md")]
pub mod preprocessing {}
#[doc = include_str!("../../../book/src/aggregation.md")]
pub mod aggregation {}
#[doc = include_str!("../../../book/src/baseline.md")]
pub mod baseline {}
#[doc = include_str!("../../../book/src/evaluation.md")]
pub mod evaluation {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
