//! Analysis and simulation of matrix-weighted consensus networks.
//!
//! Agents hold states in `R^d` and are coupled through symmetric
//! positive-semidefinite `d x d` weights. The crate builds the block
//! Laplacian, decides whether the network reaches consensus (spectrally and
//! through positive trees and path nullspaces), simulates `ẋ = -L x`, and
//! treats bearing-based formation control as a special case.

pub mod bearing;
pub mod clustering;
pub mod dynamics;
pub mod error;
pub mod graph;
mod linalg;
pub mod random;
pub mod scenarios;
pub mod spectral;
pub mod subspace;
pub mod tolerance;

pub use clustering::{find_clusters, positive_tree_partition, predict_consensus, ClusterPartition};
pub use dynamics::{simulate, SimulationConfig, Trajectory};
pub use error::{Error, Result};
pub use graph::{build_graph, MatrixWeight, MatrixWeightedGraph, WeightClass};
pub use spectral::{analyze_spectrum, SpectralReport};
pub use subspace::Subspace;
pub use tolerance::Tolerances;
