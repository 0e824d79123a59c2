//! Steiner point removal by randomized ball growing.
//!
//! Given a weighted graph with terminals, grow one cluster per terminal with
//! exponentially distributed radius increments, contract the clusters, and
//! measure how much terminal distances stretch in the resulting minor. The
//! [`analysis`] module rebuilds the probabilistic bookkeeping behind the
//! distortion bound from run traces and checks it empirically.

pub mod analysis;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod generate;
pub mod graph;
pub mod minor;
pub mod oracle;
pub mod params;
pub mod paths;
pub mod rng;
pub mod trace;
pub mod verify;

pub use engine::{preprocess_subdivide, run_and_contract, run_spr, SprOutcome};
pub use error::{Error, Result};
pub use graph::{Edge, WeightedGraph};
pub use minor::{contract, distortion, validate_partition, DistortionReport, InducedMinor, TerminalPartition};
pub use params::SprParams;
pub use paths::{ball, shortest_paths, DistanceMap};
pub use trace::RunTrace;
