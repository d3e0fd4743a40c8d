//! Parameter estimation for the two-dimensional chirp model
//!
//! ```text
//! y(m, n) = A cos φ(m, n) + B sin φ(m, n) + X(m, n),
//! φ(m, n) = α m + β m² + γ n + δ n² + μ m n,     m = 1..M, n = 1..N
//! ```
//!
//! The efficient estimator fixes one index at a time: every column is a 1D
//! chirp with frequency `α + n μ` and rate `β`, every row a 1D chirp with
//! frequency `γ + m μ` and rate `δ`. Fitting the `M + N` one-dimensional
//! chirps by profiled least squares and regressing the fitted frequencies on
//! the column/row index recovers all five nonlinear parameters at a cost of
//! order `M³N + N³M` objective evaluations, against `M⁴N⁴` for a brute-force
//! 2D lattice search.
//!
//! Modules:
//!
//! - [`model`]: parameter types, signal synthesis and the 1D decompositions.
//! - [`noise`]: i.i.d., finite-kernel linear process and 2D ARMA noise fields.
//! - [`chirp1d`]: profiled 1D chirp least squares (lattice + simplex).
//! - [`estimator`]: the column/row sweep and the linear combination step.
//! - [`lse2d`]: brute-force 2D least squares, used as an oracle.
//! - [`asymptotics`]: asymptotic covariance, convergence rates and CRLBs.
//! - [`experiments`]: Monte Carlo, complexity and texture studies.

pub mod asymptotics;
pub mod chirp1d;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod grid_io;
pub mod lse2d;
pub mod model;
pub mod noise;
pub mod simplex;

pub use asymptotics::{crlb_nonlinear, predicted_sd, rate_vector, sigma_matrix, AsymptoticReport};
pub use chirp1d::{estimate_1d, Fit1D, SearchConfig1D};
pub use error::{Error, Result};
pub use estimator::{estimate, AmplitudeMethod, EstimationResult, EstimatorConfig, SweepInit, SweepResult};
pub use lse2d::{lse2d, SearchConfig2D};
pub use model::{ChirpParams, EffectiveParams1D, NonlinearParams, SignalGrid};
pub use noise::{NoiseKind, NoiseSpec};
