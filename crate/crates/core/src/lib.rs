//! A self-organising cellular automaton on the d-dimensional torus.
//!
//! Starting from a random configuration, seeds grow membranes that colonise
//! space, colonies split into organisms around surviving hearts, and each
//! organism periodically tiles its territory with the next pattern of a
//! prescribed sequence. Sampled over time, the empirical measure drifts along
//! the segments joining the periodic measures of consecutive patterns.

pub mod automaton;
pub mod counters;
pub mod error;
pub mod harness;
pub mod lattice;
pub mod measures;
pub mod membranes;
pub mod metabolism;
pub mod organisms;

pub use error::{Error, Result};
