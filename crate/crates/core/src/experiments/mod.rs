//! Simulation studies: Monte Carlo accuracy, computational cost and texture
//! reconstruction.

pub mod complexity;
pub mod monte_carlo;
pub mod pgm;
pub mod texture;

pub use complexity::{complexity_benchmark, ComplexityConfig, ComplexityReport, ComplexityRow};
pub use monte_carlo::{
    run_monte_carlo, run_replications, summarize, EstimatorKind, MCConfig, MCReport, McInit, McRow,
    Replication,
};
pub use texture::{texture_run, TextureConfig, TextureReport};
