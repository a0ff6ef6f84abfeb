//! QUBO and Ising instances on Chimera graphs.
//!
//! The crate builds Chimera topologies ([`chimera`]), represents exact
//! integer Ising/QUBO instances and converts between them ([`instances`]),
//! generates seeded instance families ([`generators`]), writes MILP and MIQP
//! formulations as LP files ([`formulations`]), solves instances exactly or
//! heuristically ([`solvers`]) and runs batch experiments ([`bench`]).

pub mod bench;
pub mod chimera;
pub mod error;
pub mod formulations;
pub mod generators;
pub mod instances;
pub mod solvers;

pub use chimera::{build_chimera, ChimeraParams, NodeId, Topology};
pub use error::{Error, Result};
pub use instances::{
    Assignment, BinaryAssignment, Instance, IsingInstance, QuboInstance, ScaledIsing, SpinAssignment, WeightedGraph,
};
