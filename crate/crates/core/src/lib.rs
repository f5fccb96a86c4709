//! Sparse cut algorithms with exact verification at small scale.
//!
//! The crate is organised around a multigraph type ([`graph::Graph`]) and
//! exact rational cut metrics. On top of it sit an exact max-flow solver,
//! sample-set constructions, the cut-matching game for small set expanders,
//! LP relaxations with region-growing rounding, and brute-force oracles used
//! to check every structural guarantee on small instances.

pub mod cut_matching;
pub mod error;
pub mod flow;
pub mod graph;
pub mod io;
pub mod lp;
pub mod oracle;
pub mod params;
pub mod pipelines;
pub mod rational;
pub mod report;
pub mod sample_sets;

pub use error::{Error, Result};
pub use graph::{EdgeCut, Graph, VertexCut};
pub use params::ParamSet;
pub use rational::{Rational, Sparsity};
