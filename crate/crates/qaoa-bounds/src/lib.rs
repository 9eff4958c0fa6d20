//! Exact QAOA MAXCUT analysis on cubic graphs by edge-neighborhood
//! decomposition.
//!
//! The expectation value of any single edge after `p` alternating QAOA
//! layers depends only on the depth-`p` neighborhood of that edge. On
//! graphs of maximum degree 3 those neighborhoods fall into a small number
//! of isomorphism classes, so per-graph expectation values, worst-case
//! lower bounds, and indistinguishability upper bounds can all be computed
//! exactly from a finite atlas of neighborhood classes.
//!
//! Crate layout:
//! - [`graph`]: cubic graph type, neighborhood extraction, brute-force max
//!   cut, minimum cycle basis.
//! - [`canon`]: canonical labeling of rooted, colored, edge-labeled graphs.
//! - [`engine`]: dense statevector simulation with analytic gradients.
//! - [`sym`]: permutation-symmetric simulation of cycle-free neighborhoods,
//!   reaching depths the dense engine cannot.
//! - [`atlas`]: enumeration and classification of neighborhood classes.
//! - [`optimize`]: gradient ascent, multistart, and maxima census.
//! - [`bounds`]: per-graph and worst-case lower bounds, tiling upper bounds.
//! - [`hierarchy`]: environment enumeration and the edge-replacement
//!   descent argument for worst-case optimality.

pub mod atlas;
pub mod bounds;
pub mod canon;
pub mod engine;
pub mod error;
pub mod graph;
pub mod hierarchy;
pub mod named;
pub mod optimize;
pub mod sym;

pub use error::{Error, Result};
