//! Exact, reproducible simulation of the two-type Richardson model on `Z^d`.
//!
//! Built on a graphical construction: every directed nearest-neighbor edge
//! carries a unit-rate Poisson stream; type 1 spreads along every occurrence
//! and type 2 along a `λ`-thinning of the same stream. Runs driven by one
//! [`randomness::Realization`] are therefore coupled pathwise, which is what
//! the [`coupling`] module exploits.

pub mod cli;
pub mod coupling;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod forest;
pub mod lattice;
pub mod par;
pub mod randomness;
pub mod topology;

pub use engine::{
    reduce_rates, Candidates, EventRecord, GrowthState, InfectionType, ModelConfig, Outcome,
    RateReduction, StopCondition, Trace,
};
pub use error::{Error, Result};
pub use forest::{validate_forest, InfectionForest};
pub use lattice::{LatticeBox, Site, SiteSet};
pub use randomness::{derive_seed, DirectedEdge, Occurrence, Realization, NEVER};
