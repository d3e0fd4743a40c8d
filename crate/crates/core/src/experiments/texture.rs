//! Texture reconstruction: synthesize a chirp texture, contaminate it,
//! estimate the parameters and re-synthesize.
//!
//! Writes `original.pgm`, `contaminated.pgm`, `reconstructed.pgm` and
//! `texture_report.json`. The original and the reconstruction share the
//! original's value range so identical fields give identical pixels; the
//! contaminated image uses its own range.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{estimate, EstimatorConfig};
use crate::experiments::monte_carlo::param_errors;
use crate::experiments::pgm;
use crate::model::{synthesize, ChirpParams, SignalGrid};
use crate::noise::{contaminate, generate, NoiseSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TextureConfig {
    pub truth: ChirpParams,
    pub rows: usize,
    pub cols: usize,
    pub noise: NoiseSpec,
    pub estimator: EstimatorConfig,
}

impl Default for TextureConfig {
    fn default() -> Self {
        Self {
            truth: ChirpParams::reference(),
            rows: 100,
            cols: 100,
            noise: NoiseSpec::iid(0.3, 0),
            estimator: EstimatorConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextureFiles {
    pub original: PathBuf,
    pub contaminated: PathBuf,
    pub reconstructed: PathBuf,
    pub report: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextureReport {
    pub truth: ChirpParams,
    pub estimate: ChirpParams,
    /// `(A, B, α, β, γ, δ, μ)`, frequencies reduced into `(−π, π]`.
    pub param_errors: [f64; 7],
    /// Mean squared difference between the reconstruction and the noiseless texture.
    pub reconstruction_mse: f64,
    pub contaminated_mse: f64,
    pub files: TextureFiles,
}

/// The three fields of a texture run.
pub struct TextureFields {
    pub original: SignalGrid,
    pub contaminated: SignalGrid,
    pub reconstructed: SignalGrid,
    pub estimate: ChirpParams,
}

pub fn texture_fields(config: &TextureConfig) -> Result<TextureFields> {
    if config.rows < 20 || config.cols < 20 {
        return Err(Error::InvalidDimensions(format!(
            "texture needs M, N ≥ 20, got {}×{}",
            config.rows, config.cols
        )));
    }
    let original = synthesize(&config.truth, config.rows, config.cols)?;
    let noise = generate(&config.noise, config.rows, config.cols)?;
    let contaminated = contaminate(&original, &noise)?;
    let estimate = estimate(&contaminated, &config.estimator)?.params;
    let reconstructed = synthesize(&estimate, config.rows, config.cols)?;
    Ok(TextureFields {
        original,
        contaminated,
        reconstructed,
        estimate,
    })
}

pub fn texture_run(config: &TextureConfig, out_dir: &Path) -> Result<TextureReport> {
    let fields = texture_fields(config)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let files = TextureFiles {
        original: out_dir.join("original.pgm"),
        contaminated: out_dir.join("contaminated.pgm"),
        reconstructed: out_dir.join("reconstructed.pgm"),
        report: out_dir.join("texture_report.json"),
    };
    let (lo, hi) = fields.original.min_max();
    let write = |path: &Path, bytes: Vec<u8>| fs::write(path, bytes).map_err(|e| Error::io(path, e));
    write(&files.original, pgm::render_with_range(&fields.original, lo, hi))?;
    write(&files.contaminated, pgm::render_grayscale(&fields.contaminated))?;
    write(&files.reconstructed, pgm::render_with_range(&fields.reconstructed, lo, hi))?;
    let report = TextureReport {
        truth: config.truth,
        estimate: fields.estimate,
        param_errors: param_errors(&fields.estimate, &config.truth),
        reconstruction_mse: fields.reconstructed.mse(&fields.original)?,
        contaminated_mse: fields.contaminated.mse(&fields.original)?,
        files: files.clone(),
    };
    write(&files.report, serde_json::to_vec_pretty(&report)?)?;
    Ok(report)
}
