//! Guide snippets.
//!
//! mdbook cannot run snippets that depend on workspace crates, so each
//! chapter is pulled in here and the snippets run as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/grid.md")]
pub mod grid {}
#[doc = include_str!("../../../book/src/surfaces.md")]
pub mod surfaces {}
#[doc = include_str!("../../../book/src/conformal.md")]
pub mod conformal {}
#[doc = include_str!("../../../book/src/invariants.md")]
pub mod invariants {}
#[doc = include_str!("../../../book/src/flow.md")]
pub mod flow {}
#[doc = include_str!("../../../book/src/solitons.md")]
pub mod solitons {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
