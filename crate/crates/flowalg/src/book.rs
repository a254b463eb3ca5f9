//! The guide under `book/` compiled into doc tests: every Rust code
//! block in a chapter runs under `cargo test --doc`, which keeps the
//! book and the library in lockstep. Build the rendered book with
//! `mdbook build book/`.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/values.md")]
pub mod values {}

#[doc = include_str!("../../../book/src/expressions.md")]
pub mod expressions {}

#[doc = include_str!("../../../book/src/algebra.md")]
pub mod algebra {}

#[doc = include_str!("../../../book/src/transformations.md")]
pub mod transformations {}

#[doc = include_str!("../../../book/src/dataflow.md")]
pub mod dataflow {}

#[doc = include_str!("../../../book/src/iteration.md")]
pub mod iteration {}

#[doc = include_str!("../../../book/src/mutation.md")]
pub mod mutation {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
