//! Runs the guide's code listings as doc-tests.

#[doc = include_str!("src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("src/detection.md")]
pub mod detection {}
#[doc = include_str!("src/theory.md")]
pub mod theory {}
#[doc = include_str!("src/accuracy.md")]
pub mod accuracy {}
#[doc = include_str!("src/cli.md")]
pub mod cli {}
