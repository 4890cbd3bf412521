//! Landscapes of commuting X-string ansätze for weighted MaxCut.

pub mod ansatz;
pub mod barren;
pub mod error;
pub mod flipsearch;
pub mod graph;
pub mod gwbaseline;
pub mod harness;
pub mod landscape;
pub mod optimizer;
pub mod seed;
pub mod statevec;
pub mod trigform;

pub use ansatz::{Ansatz, Generator, InitialState};
pub use error::{Error, Result};
pub use graph::{CutAssignment, Mask, WeightedGraph};
