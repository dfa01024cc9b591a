//! Simulator and analytics for entanglement distribution over repeater
//! networks that fuse multipartite GHZ states.
//!
//! The library models one clock cycle of a network protocol: every edge
//! attempts a Bell-pair link, every helper node fuses the qubits of its
//! successful links into a larger GHZ state, and the entanglement shared by
//! the two consumer nodes at the end of the cycle is read off a classical
//! percolation problem on "memory vertices" (one qubit per node-edge
//! incidence). On top of the Monte Carlo engine sit analytic generating
//! function solutions for random graphs, capacity bounds, and a GHZ-based
//! key-sifting model.

pub mod analytics;
pub mod bounds;
pub mod exact;
pub mod experiment;
pub mod ghz;
pub mod percolation;
pub mod protocol;
pub mod qkd;
pub mod topology;

/// Unified error type for the whole crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("topology error: {0}")]
    Topology(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("fusion error: {0}")]
    Fusion(String),
    #[error("analysis error: {0}")]
    Analysis(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
