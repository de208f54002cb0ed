//! Non-Markovian rill-erosion lattice model.
//!
//! Every node of a laterally periodic diagonal lattice is a Pólya urn with
//! time-dependent input: it routes its current sediment load to one of its
//! two children with probability reinforced by how much it has sent that
//! way before. The crate provides the synchronous simulator, exact oracles
//! for the load law and for the law of the full dynamics on small cones,
//! and mergeable estimators for the quantities studied on top of it.

pub mod dynamics;
pub mod error;
pub mod exact_enum;
pub mod fmt;
pub mod lattice;
pub mod load_oracle;
pub mod rng;
pub mod stats;
pub mod urns;

pub use dynamics::{init, left_probability, NodeState, Observer, Sediment, SimState};
pub use error::{Error, Result};
pub use lattice::{GridGeometry, NodeId};
