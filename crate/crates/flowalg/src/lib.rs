//! An executable, framework-agnostic model of data-flow data
//! processing programs.
//!
//! A program is a bipartite Petri net: places hold datasets (finite
//! bags or lists of values) and transitions apply transformations
//! (filter, grouping, joins, aggregation, sorting, iteration). Each
//! transformation is defined by an equation over a small kernel of
//! homomorphic operations on bags — `flatmap`, `groupby`, `cogroup`,
//! `reduce`, `orderby` and `repeat` — so a whole program has a precise
//! executable semantics independent of any particular execution engine.
//!
//! On top of the model sit:
//!
//! - a validator and type checker for program graphs,
//! - a deterministic (or seed-shuffled) token-firing executor,
//! - unfolding of iterative subnets into acyclic graphs,
//! - Graphviz DOT rendering,
//! - a mutation-testing engine that derives single-fault variants of a
//!   program and scores test suites by how many variants they kill.
//!
//! The `flowalg` CLI (in the companion `flowalg-cli` crate) drives all
//! of this from program files on disk. The guide under `book/` walks
//! through every concept with runnable examples.

pub mod algebra;
pub mod dataflow;
pub mod dataset;
pub mod error;
pub mod expr;
pub mod mutation;
pub mod transforms;
pub mod types;
pub mod value;

pub mod book;
mod rng;

pub use error::{Error, Result};
pub use types::ElemType;
pub use value::{Bag, Value};
