//! Hierarchical topology control for vehicular ad-hoc networks.
//!
//! The crate is `no_std` with `alloc`. File formats, configuration and the
//! command-line driver live in the companion `vanet-sim` crate.

#![no_std]

extern crate alloc;

pub mod baselines;
pub mod error;
pub mod fusion;
pub mod mobility;
pub mod metrics;
pub mod netgraph;
pub mod optimizer;
pub mod regulation;

pub use error::{ConstraintKind, ConstraintViolation, GraphError, MobilityError};
pub use mobility::{NetworkSnapshot, RsuId, RsuNode, VehicleId, VehicleState};
pub use netgraph::{LinkStrategy, NetworkParams, NodeId, Topology};
