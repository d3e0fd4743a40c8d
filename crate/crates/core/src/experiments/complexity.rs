//! Objective-evaluation counts and timings of the two estimators.
//!
//! Lattice counts are analytic: the sweep evaluates `N` column lattices of
//! length M and `M` row lattices of length N, the 2D search one product
//! lattice. Where requested (and within budget) the estimators are also run
//! on a noisy instance to record wall-clock time and executed counts.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::chirp1d::SearchConfig1D;
use crate::error::{Error, Result};
use crate::estimator::{estimate, EstimatorConfig};
use crate::lse2d::{lse2d, SearchConfig2D};
use crate::model::{synthesize, ChirpParams};
use crate::noise::{contaminate, generate, NoiseSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ComplexityConfig {
    /// Square grid sizes M = N.
    pub sizes: Vec<usize>,
    pub execute_efficient: bool,
    /// Run the 2D search up to this size (and within its budget).
    pub execute_lse2d_max: usize,
    pub truth: ChirpParams,
    pub noise: NoiseSpec,
    pub search: SearchConfig1D,
    pub lse2d: SearchConfig2D,
}

impl Default for ComplexityConfig {
    fn default() -> Self {
        Self {
            sizes: (2..=7).collect(),
            execute_efficient: false,
            execute_lse2d_max: 0,
            truth: ChirpParams::reference(),
            noise: NoiseSpec::iid(0.9, 0),
            search: SearchConfig1D::default(),
            lse2d: SearchConfig2D::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityRow {
    pub size: usize,
    pub efficient_lattice: u128,
    pub lse2d_lattice: u128,
    /// `lse2d_lattice / efficient_lattice`.
    pub ratio: f64,
    /// Executed sweep evaluations, refinement included.
    pub efficient_evals: Option<usize>,
    pub efficient_seconds: Option<f64>,
    pub lse2d_evals: Option<usize>,
    pub lse2d_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub rows: Vec<ComplexityRow>,
    /// Log–log slope of the analytic sweep lattice count against M.
    pub efficient_slope: Option<f64>,
    /// Log–log slope of the executed sweep evaluation count against M.
    pub efficient_executed_slope: Option<f64>,
    pub lse2d_slope: Option<f64>,
}

/// Sweep lattice evaluations for an M×N grid (degenerate points included).
pub fn efficient_lattice_count(rows: usize, cols: usize, config: &SearchConfig1D) -> u128 {
    cols as u128 * config.lattice(rows).size() as u128 + rows as u128 * config.lattice(cols).size() as u128
}

/// Least-squares slope of `ln y` on `ln x`; `None` with fewer than two points.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let k = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn complexity_benchmark(config: &ComplexityConfig) -> Result<ComplexityReport> {
    if config.sizes.is_empty() || config.sizes.contains(&0) {
        return Err(Error::InvalidParameter("sizes must be non-empty and positive".into()));
    }
    config.search.validate()?;
    config.lse2d.validate()?;
    let mut rows = Vec::with_capacity(config.sizes.len());
    for &m in &config.sizes {
        let efficient_lattice = efficient_lattice_count(m, m, &config.search);
        let lse2d_lattice = config.lse2d.lattice_size(m, m);
        let mut row = ComplexityRow {
            size: m,
            efficient_lattice,
            lse2d_lattice,
            ratio: lse2d_lattice as f64 / efficient_lattice as f64,
            efficient_evals: None,
            efficient_seconds: None,
            lse2d_evals: None,
            lse2d_seconds: None,
        };
        let run_eff = config.execute_efficient && m >= 4;
        let run_lse = m <= config.execute_lse2d_max && lse2d_lattice <= config.lse2d.eval_budget && m >= 2;
        if run_eff || run_lse {
            let signal = synthesize(&config.truth, m, m)?;
            let y = contaminate(&signal, &generate(&config.noise, m, m)?)?;
            if run_eff {
                let est = EstimatorConfig {
                    search: config.search.clone(),
                    ..EstimatorConfig::default()
                };
                let start = Instant::now();
                let r = estimate(&y, &est)?;
                row.efficient_seconds = Some(start.elapsed().as_secs_f64());
                row.efficient_evals = Some(r.evals);
            }
            if run_lse {
                let start = Instant::now();
                let r = lse2d(&y, &config.lse2d)?;
                row.lse2d_seconds = Some(start.elapsed().as_secs_f64());
                row.lse2d_evals = Some(r.evals);
            }
        }
        log::info!("size {m}: sweep lattice {efficient_lattice}, 2D lattice {lse2d_lattice}");
        rows.push(row);
    }
    let slope = |f: &dyn Fn(&ComplexityRow) -> Option<f64>| {
        let pts: Vec<(f64, f64)> = rows.iter().filter_map(|r| f(r).map(|v| (r.size as f64, v))).collect();
        loglog_slope(&pts)
    };
    Ok(ComplexityReport {
        efficient_slope: slope(&|r| Some(r.efficient_lattice as f64)),
        efficient_executed_slope: slope(&|r| r.efficient_evals.map(|v| v as f64)),
        lse2d_slope: slope(&|r| Some(r.lse2d_lattice as f64)),
        rows,
    })
}

impl ComplexityReport {
    pub const CSV_HEADER: &'static str =
        "size,efficient_lattice,lse2d_lattice,ratio,efficient_evals,efficient_seconds,lse2d_evals,lse2d_seconds";

    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        fn opt<T: ToString>(v: Option<T>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.size,
                r.efficient_lattice,
                r.lse2d_lattice,
                r.ratio,
                opt(r.efficient_evals),
                opt(r.efficient_seconds),
                opt(r.lse2d_evals),
                opt(r.lse2d_seconds)
            )?;
        }
        Ok(())
    }
}
