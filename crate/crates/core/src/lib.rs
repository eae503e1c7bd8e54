//! Discrete homotopy theory on finite metric spaces.
//!
//! The central objects are epsilon-chains: point sequences whose consecutive
//! distances stay strictly below a scale. Basic moves (single-point
//! insertions and removals with fixed endpoint values) generate an
//! epsilon-homotopy relation, and the loop classes at each scale form a
//! group. As the scale sweeps the sorted set of pairwise distances, loop
//! classes are born and die; the death scales form the critical spectrum of
//! the space, and rescaling by 3/2 gives its covering spectrum.
//!
//! What this crate computes, with certificates:
//!
//! - validated finite metric spaces and generators for the standard sample
//!   geometries ([`spaces`]);
//! - the chain calculus with replayable homotopy certificates ([`chains`]);
//! - Rips graphs, triangles, spanning-tree presentations of the scale
//!   groups, and the bonding maps between scales ([`rips`]);
//! - three-valued nullity decisions backed by move certificates or exact
//!   integer cochains ([`homotopy`]);
//! - the critical and covering spectra with per-value witness loops and
//!   evidence ([`spectrum`]);
//! - materialized covers at a scale with chain lifting, deck actions, and
//!   displacement ([`covers`]);
//! - the covering-topology ultrametric on loop classes ([`topology`]).
//!
//! All homology arithmetic is exact (rational), and every certificate the
//! crate emits can be re-verified from scratch. Data-parallel paths use
//! rayon behind the default `parallel` feature; without it everything runs
//! sequentially with the same results.

// Negated float comparisons like `!(d < eps)` reject NaN along with
// out-of-bound values; partial_cmp rewrites would lose that. Index loops
// over point ids stay as ranges because the ids index several arrays at
// once.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod chains;
mod coset;
pub mod covers;
pub mod error;
mod exact;
pub mod fixtures;
pub mod homotopy;
pub mod io;
mod persistence;
pub mod rips;
pub mod spaces;
pub mod spectrum;
pub mod topology;

pub use error::{Error, Result};
