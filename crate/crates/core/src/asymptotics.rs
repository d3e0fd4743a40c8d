//! Asymptotic covariance of the sweep estimator, per-parameter convergence
//! rates and Cramér–Rao bounds.
//!
//! With `D⁻¹ = diag(√(MN), √(MN), M^{3/2}N^{1/2}, M^{5/2}N^{1/2},
//! M^{1/2}N^{3/2}, M^{1/2}N^{5/2}, M^{3/2}N^{3/2})`, the scaled error
//! `D⁻¹(θ̂ − θ)` is asymptotically normal with covariance [`sigma_matrix`]
//! as `M = N → ∞`. Parameter order is `(A, B, α, β, γ, δ, μ)` throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ChirpParams;
use crate::noise::{effective_c, NoiseSpec};

/// Truncation used for the ARMA linear-process constant.
pub const DEFAULT_C_TRUNCATION: usize = 100;

fn prefactor(a: f64, b: f64, sigma2: f64, c: f64) -> Result<f64> {
    let power = a * a + b * b;
    if power.is_nan() || power <= 0.0 || !power.is_finite() {
        return Err(Error::InvalidParameter("A² + B² must be positive".into()));
    }
    if !(sigma2 >= 0.0 && c >= 0.0) {
        return Err(Error::InvalidParameter("σ² and c must be non-negative".into()));
    }
    Ok(c * sigma2 / power)
}

/// The 7×7 asymptotic covariance, scaled by `cσ²/(A² + B²)`.
pub fn sigma_matrix(a: f64, b: f64, sigma2: f64, c: f64) -> Result<[[f64; 7]; 7]> {
    let k = prefactor(a, b, sigma2, c)?;
    let base = [
        [2.0 * a * a + 187.0 * b * b, -185.0 * a * b, -378.0 * b, 60.0 * b, -378.0 * b, 60.0 * b, 612.0 * b],
        [-185.0 * a * b, 2.0 * b * b + 187.0 * a * a, 378.0 * a, -60.0 * a, 378.0 * a, -60.0 * a, -612.0 * a],
        [-378.0 * b, 378.0 * a, 996.0, -360.0, 612.0, 0.0, -1224.0],
        [60.0 * b, -60.0 * a, -360.0, 360.0, 0.0, 0.0, 0.0],
        [-378.0 * b, 378.0 * a, 612.0, 0.0, 996.0, -360.0, -1224.0],
        [60.0 * b, -60.0 * a, 0.0, 0.0, -360.0, 360.0, 0.0],
        [612.0 * b, -612.0 * a, -1224.0, 0.0, -1224.0, 0.0, 2448.0],
    ];
    Ok(base.map(|row| row.map(|v| k * v)))
}

/// Diagonal of `D⁻¹`.
pub fn rate_vector(rows: usize, cols: usize) -> [f64; 7] {
    let (m, n) = (rows as f64, cols as f64);
    let p = |i: f64, j: f64| m.powf(i) * n.powf(j);
    [
        p(0.5, 0.5),
        p(0.5, 0.5),
        p(1.5, 0.5),
        p(2.5, 0.5),
        p(0.5, 1.5),
        p(0.5, 2.5),
        p(1.5, 1.5),
    ]
}

/// Cramér–Rao bounds for Gaussian noise, in the order `(α, γ, μ, β, δ)`.
/// The chirp-rate bounds equal the corresponding diagonal of the sweep
/// estimator's covariance.
pub fn crlb_nonlinear(a: f64, b: f64, sigma2: f64, c: f64) -> Result<[f64; 5]> {
    let k = prefactor(a, b, sigma2, c)?;
    Ok([456.0, 456.0, 288.0, 360.0, 360.0].map(|v| k * v))
}

/// Predicted finite-sample standard errors `√Σ_ii / D⁻¹_ii` for an M×N
/// grid under `noise`. Outside `M = N` the rates are an extrapolation.
pub fn predicted_sd(params: &ChirpParams, rows: usize, cols: usize, noise: &NoiseSpec) -> Result<[f64; 7]> {
    let c = effective_c(noise, DEFAULT_C_TRUNCATION)?;
    let sigma = sigma_matrix(params.a, params.b, noise.sigma * noise.sigma, c)?;
    let rates = rate_vector(rows, cols);
    Ok(std::array::from_fn(|i| sigma[i][i].max(0.0).sqrt() / rates[i]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticReport {
    pub rows: usize,
    pub cols: usize,
    pub sigma2: f64,
    pub c: f64,
    pub d_inverse: [f64; 7],
    pub sigma: [[f64; 7]; 7],
    /// `(α, γ, μ, β, δ)`.
    pub crlb: [f64; 5],
    pub predicted_sd: [f64; 7],
    /// Set when `M ≠ N`, where the covariance is not established.
    pub extrapolated: bool,
}

impl AsymptoticReport {
    pub fn new(params: &ChirpParams, rows: usize, cols: usize, noise: &NoiseSpec) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidDimensions("M and N must be positive".into()));
        }
        let c = effective_c(noise, DEFAULT_C_TRUNCATION)?;
        let sigma2 = noise.sigma * noise.sigma;
        Ok(Self {
            rows,
            cols,
            sigma2,
            c,
            d_inverse: rate_vector(rows, cols),
            sigma: sigma_matrix(params.a, params.b, sigma2, c)?,
            crlb: crlb_nonlinear(params.a, params.b, sigma2, c)?,
            predicted_sd: predicted_sd(params, rows, cols, noise)?,
            extrapolated: rows != cols,
        })
    }
}
