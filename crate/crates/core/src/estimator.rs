//! The column/row sweep estimator.
//!
//! 1. Fit every column (a 1D chirp with frequency `α + n μ`, rate β) and
//!    every row (frequency `γ + m μ`, rate δ) by profiled least squares.
//! 2. Unwrap the fitted frequency sequences and regress them on the index to
//!    get `(α, γ, μ)`; average the fitted rates to get `(β, δ)`.
//! 3. Recover the amplitudes at the fitted phase.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::chirp1d::{estimate_on, Fit1D, Lattice1D, SearchConfig1D};
use crate::error::{Error, Result};
use crate::lse2d::profile_2d;
use crate::model::{phase, ChirpParams, NonlinearParams, SignalGrid};

/// Where the per-vector lattice searches look.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SweepInit {
    /// The full lattice of [`SearchConfig1D`] for every vector.
    #[default]
    Global,
    /// A 5×5 lattice around the frequency and rate that `prior` implies for
    /// each vector, spaced like the global lattice.
    Prior(NonlinearParams),
}

/// How the final amplitudes are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeMethod {
    /// Linear least squares on the cos/sin grids at the fitted phase.
    #[default]
    LeastSquares,
    /// `(2/MN) Σ y cos φ̂` and `(2/MN) Σ y sin φ̂`, see [`estimate_amplitudes`].
    Averaged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorConfig {
    pub search: SearchConfig1D,
    pub init: SweepInit,
    pub amplitudes: AmplitudeMethod,
}

impl EstimatorConfig {
    pub fn with_prior(prior: NonlinearParams) -> Self {
        Self {
            init: SweepInit::Prior(prior),
            ..Self::default()
        }
    }
}

/// Per-column and per-row 1D fits. `column_fits[n0 - 1]` is column `n0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub column_fits: Vec<Fit1D>,
    pub row_fits: Vec<Fit1D>,
    pub total_evals: usize,
}

impl SweepResult {
    pub fn column_freqs(&self) -> Vec<f64> {
        self.column_fits.iter().map(|f| f.freq).collect()
    }

    pub fn row_freqs(&self) -> Vec<f64> {
        self.row_fits.iter().map(|f| f.freq).collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub zero_signal_fits: usize,
    pub not_converged_fits: usize,
    pub degenerate_points_skipped: usize,
    /// The unwrapped column frequencies are not close to an affine sequence.
    pub columns_unwrap_inconsistent: bool,
    pub rows_unwrap_inconsistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub params: ChirpParams,
    pub sweep: Option<SweepResult>,
    pub residual_ss: f64,
    pub evals: usize,
    pub diagnostics: Diagnostics,
}

/// Fits all columns and rows on the global lattice.
pub fn sweep(y: &SignalGrid, config: &SearchConfig1D) -> Result<SweepResult> {
    sweep_with(y, config, &SweepInit::Global)
}

pub fn sweep_with(y: &SignalGrid, config: &SearchConfig1D, init: &SweepInit) -> Result<SweepResult> {
    let (rows, cols) = y.dims();
    if rows < 4 || cols < 4 {
        return Err(Error::InvalidDimensions(format!(
            "sweep needs M, N ≥ 4, got {rows}×{cols}"
        )));
    }
    config.validate()?;
    let (column_fits, row_fits) = match init {
        SweepInit::Global => {
            let col_lattice = Lattice1D::new(rows, config)?;
            let row_lattice = if cols == rows {
                None
            } else {
                Some(Lattice1D::new(cols, config)?)
            };
            let row_lattice = row_lattice.as_ref().unwrap_or(&col_lattice);
            let column_fits = (1..=cols)
                .into_par_iter()
                .map(|n0| estimate_on(&col_lattice, &y.column(n0), config))
                .collect::<Result<Vec<_>>>()?;
            let row_fits = (1..=rows)
                .into_par_iter()
                .map(|m0| estimate_on(row_lattice, y.row(m0), config))
                .collect::<Result<Vec<_>>>()?;
            (column_fits, row_fits)
        }
        SweepInit::Prior(xi) => {
            xi.validate()?;
            let local = |k: usize, freq: f64, rate: f64, data: &[f64]| {
                let window = config.around(k, freq, rate);
                estimate_on(&Lattice1D::new(k, &window)?, data, config)
            };
            let column_fits = (1..=cols)
                .into_par_iter()
                .map(|n0| local(rows, xi.alpha + n0 as f64 * xi.mu, xi.beta, &y.column(n0)))
                .collect::<Result<Vec<_>>>()?;
            let row_fits = (1..=rows)
                .into_par_iter()
                .map(|m0| local(cols, xi.gamma + m0 as f64 * xi.mu, xi.delta, y.row(m0)))
                .collect::<Result<Vec<_>>>()?;
            (column_fits, row_fits)
        }
    };
    let total_evals = column_fits.iter().chain(&row_fits).map(|f| f.evals).sum();
    Ok(SweepResult {
        column_fits,
        row_fits,
        total_evals,
    })
}

/// Shifts each value by a multiple of 2π so that consecutive values differ
/// by at most π. Returns `false` when the result is still far from affine:
/// some step deviates from the median step by more than π/2.
pub fn unwrap_sequence(values: &mut [f64]) -> bool {
    for i in 1..values.len() {
        let d = values[i] - values[i - 1];
        values[i] -= TAU * (d / TAU).round();
    }
    if values.len() < 3 {
        return true;
    }
    let mut steps: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let mut sorted = steps.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    steps.retain(|s| (s - median).abs() > PI / 2.0);
    steps.is_empty()
}

/// Unwrapped column and row frequency sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct Unwrapped {
    pub column_freqs: Vec<f64>,
    pub row_freqs: Vec<f64>,
    pub columns_consistent: bool,
    pub rows_consistent: bool,
}

pub fn unwrap_frequencies(sweep: &SweepResult) -> Unwrapped {
    let mut column_freqs = sweep.column_freqs();
    let mut row_freqs = sweep.row_freqs();
    let columns_consistent = unwrap_sequence(&mut column_freqs);
    let rows_consistent = unwrap_sequence(&mut row_freqs);
    Unwrapped {
        column_freqs,
        row_freqs,
        columns_consistent,
        rows_consistent,
    }
}

/// Least-squares solution `(α, γ, μ)` of
/// `α̂_n = α + n μ` (n = 1..N) and `γ̂_m = γ + m μ` (m = 1..M),
/// via the closed-form inverse of the 3×3 normal matrix.
pub fn combine_linear(column_freqs: &[f64], row_freqs: &[f64]) -> Result<(f64, f64, f64)> {
    let (n, m) = (column_freqs.len(), row_freqs.len());
    if n < 2 || m < 2 {
        return Err(Error::InvalidDimensions(format!(
            "regression needs M, N ≥ 2, got {m}×{n}"
        )));
    }
    let (nf, mf) = (n as f64, m as f64);
    let sn = nf * (nf + 1.0) / 2.0;
    let sm = mf * (mf + 1.0) / 2.0;
    let k = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 6.0 + mf * (mf + 1.0) * (2.0 * mf + 1.0) / 6.0;
    let det = mf * nf / 12.0 * (nf * (nf * nf - 1.0) + mf * (mf * mf - 1.0));

    let c_alpha: f64 = column_freqs.iter().sum();
    let c_gamma: f64 = row_freqs.iter().sum();
    let c_cross: f64 = column_freqs
        .iter()
        .enumerate()
        .map(|(i, v)| (i + 1) as f64 * v)
        .chain(row_freqs.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v))
        .sum();

    let alpha = ((mf * k - sm * sm) * c_alpha + sn * sm * c_gamma - mf * sn * c_cross) / det;
    let gamma = (sn * sm * c_alpha + (nf * k - sn * sn) * c_gamma - nf * sm * c_cross) / det;
    let mu = (-mf * sn * c_alpha - nf * sm * c_gamma + mf * nf * c_cross) / det;
    Ok((alpha, gamma, mu))
}

/// Means of the column rates and of the row rates, `(β̂, δ̂)`.
pub fn average_rates(sweep: &SweepResult) -> Result<(f64, f64)> {
    if sweep.column_fits.is_empty() || sweep.row_fits.is_empty() {
        return Err(Error::InvalidDimensions("no fits to average".into()));
    }
    let mean = |fits: &[Fit1D]| fits.iter().map(|f| f.rate).sum::<f64>() / fits.len() as f64;
    Ok((mean(&sweep.column_fits), mean(&sweep.row_fits)))
}

/// `Â = (2/MN) ΣΣ y cos φ`, `B̂ = (2/MN) ΣΣ y sin φ` at the phase of `xi`.
pub fn estimate_amplitudes(y: &SignalGrid, xi: &NonlinearParams) -> (f64, f64) {
    let (rows, cols) = y.dims();
    let (mut a, mut b) = (0.0, 0.0);
    for m in 1..=rows {
        for (j, &v) in y.row(m).iter().enumerate() {
            let (s, c) = phase(xi, m, j + 1).sin_cos();
            a += v * c;
            b += v * s;
        }
    }
    let scale = 2.0 / (rows * cols) as f64;
    (scale * a, scale * b)
}

/// `Σ (y − A cos φ − B sin φ)²` over the grid.
pub fn residual_ss(y: &SignalGrid, params: &ChirpParams) -> f64 {
    let xi = params.nonlinear();
    let mut total = 0.0;
    for m in 1..=y.rows() {
        for (j, &v) in y.row(m).iter().enumerate() {
            let (s, c) = phase(&xi, m, j + 1).sin_cos();
            let r = v - params.a * c - params.b * s;
            total += r * r;
        }
    }
    total
}

/// Runs the three steps and returns canonical parameters.
pub fn estimate(y: &SignalGrid, config: &EstimatorConfig) -> Result<EstimationResult> {
    let sweep = sweep_with(y, &config.search, &config.init)?;
    let unwrapped = unwrap_frequencies(&sweep);
    let (alpha, gamma, mu) = combine_linear(&unwrapped.column_freqs, &unwrapped.row_freqs)?;
    let (beta, delta) = average_rates(&sweep)?;
    let xi = NonlinearParams::new(alpha, beta, gamma, delta, mu);
    let (a, b) = match config.amplitudes {
        AmplitudeMethod::LeastSquares => match profile_2d(y, &xi) {
            Ok(p) => (p.amp_cos, p.amp_sin),
            Err(Error::DegenerateDesign(..)) => estimate_amplitudes(y, &xi),
            Err(e) => return Err(e),
        },
        AmplitudeMethod::Averaged => estimate_amplitudes(y, &xi),
    };
    let params = ChirpParams::from_parts(a, b, xi);
    let residual = residual_ss(y, &params);

    let fits = sweep.column_fits.iter().chain(&sweep.row_fits);
    let mut diagnostics = Diagnostics {
        columns_unwrap_inconsistent: !unwrapped.columns_consistent,
        rows_unwrap_inconsistent: !unwrapped.rows_consistent,
        ..Diagnostics::default()
    };
    for f in fits {
        diagnostics.zero_signal_fits += f.flags.zero_signal as usize;
        diagnostics.not_converged_fits += f.flags.not_converged as usize;
        diagnostics.degenerate_points_skipped += f.flags.degenerate_skipped;
    }
    if diagnostics.columns_unwrap_inconsistent || diagnostics.rows_unwrap_inconsistent {
        log::warn!("fitted frequencies are not consistent with an affine sequence");
    }
    Ok(EstimationResult {
        params: params.canonical(),
        evals: sweep.total_evals,
        sweep: Some(sweep),
        residual_ss: residual,
        diagnostics,
    })
}
