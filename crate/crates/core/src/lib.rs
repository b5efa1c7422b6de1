//! Linear resistive networks on graphs.
//!
//! Builds weighted Laplacians from oriented multigraphs, eliminates internal
//! nodes by Kron reduction, solves the open-circuit, short-circuit, combined
//! and prescribed-power boundary problems, identifies edge conductances from
//! the reduced boundary map, and extends the linear machinery to RLC networks
//! at a fixed angular frequency.
//!
//! All matrices are dense and indexed in node/edge declaration order.

pub mod boundary;
pub mod error;
pub mod inverse;
pub mod laplacian;
pub mod netgraph;
pub mod netlist;
pub mod phasor;
pub mod powerflow;
pub mod reduction;
pub mod sample;

pub use error::{Error, Result};
pub use laplacian::{ConductanceVector, Laplacian, TAU_STRUCT};
pub use netgraph::{Element, IncidenceMatrix, Network, Partition};
