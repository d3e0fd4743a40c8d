//! Noise fields satisfying the stationary linear-process assumption.
//!
//! Innovations are standard Gaussian variates scaled by σ. The generator is
//! ChaCha8 ([`rand_chacha::ChaCha8Rng`]) keyed by `seed_from_u64(seed)`;
//! Gaussian variates come from the Marsaglia polar method applied to pairs
//! of uniforms `u = 2·U[0,1) − 1`, each accepted pair yielding two variates
//! (the second one is cached). Fields are always drawn in row-major order.
//!
//! Per-replication streams are derived with [`derive_seed`], a SplitMix64
//! hash of `(seed, index)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SignalGrid;

/// Autoregressive coefficients of the 2D ARMA example, for the lags
/// `(1,1)`, `(0,1)` and `(1,0)`.
pub const ARMA_AR: [(usize, usize, f64); 3] = [(1, 1, 0.06), (0, 1, -0.054), (1, 0, 0.087)];
/// Moving-average coefficients of the 2D ARMA example (lag `(0,0)` is 1).
pub const ARMA_MA: [(usize, usize, f64); 3] = [(1, 1, 0.01), (0, 1, 0.035), (1, 0, 0.042)];

pub const DEFAULT_ARMA_BURN_IN: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    IidGaussian,
    FirLinearProcess,
    ArmaExample,
}

/// One coefficient `a(i, j)` of a finite linear-process kernel:
/// `X(m, n) = Σ a(i, j) ε(m − i, n − j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelTap {
    pub offset: (i64, i64),
    pub coef: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// Innovation standard deviation.
    pub sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<Vec<KernelTap>>,
    #[serde(default)]
    pub seed: u64,
    /// Leading margin for the ARMA recursion; defaults to 50.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
}

impl NoiseSpec {
    pub fn iid(sigma: f64, seed: u64) -> Self {
        Self {
            kind: NoiseKind::IidGaussian,
            sigma,
            kernel: None,
            seed,
            burn_in: None,
        }
    }

    pub fn fir(sigma: f64, kernel: Vec<KernelTap>, seed: u64) -> Self {
        Self {
            kind: NoiseKind::FirLinearProcess,
            sigma,
            kernel: Some(kernel),
            seed,
            burn_in: None,
        }
    }

    pub fn arma(sigma: f64, seed: u64) -> Self {
        Self {
            kind: NoiseKind::ArmaExample,
            sigma,
            kernel: None,
            seed,
            burn_in: None,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma must be finite and non-negative, got {}",
                self.sigma
            )));
        }
        match (self.kind, &self.kernel) {
            (NoiseKind::FirLinearProcess, Some(k)) => {
                if k.is_empty() {
                    return Err(Error::InvalidParameter("empty kernel".into()));
                }
                if k.iter().any(|t| !t.coef.is_finite()) {
                    return Err(Error::InvalidParameter("non-finite kernel coefficient".into()));
                }
            }
            (NoiseKind::FirLinearProcess, None) => {
                return Err(Error::InvalidParameter(
                    "fir-linear-process requires a kernel".into(),
                ))
            }
            (kind, Some(_)) => {
                return Err(Error::InvalidParameter(format!(
                    "kernel given for {kind:?} noise"
                )))
            }
            _ => {}
        }
        if self.burn_in.is_some() && self.kind != NoiseKind::ArmaExample {
            return Err(Error::InvalidParameter(
                "burn_in only applies to arma-example".into(),
            ));
        }
        Ok(())
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in.unwrap_or(DEFAULT_ARMA_BURN_IN)
    }
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the `index`-th sub-stream of `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index.wrapping_add(0x9e37_79b9_7f4a_7c15)))
}

/// Standard Gaussian variates by the polar method over a ChaCha8 stream.
pub struct GaussianStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    pub fn next_standard(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.rng.gen::<f64>() - 1.0;
            let v = 2.0 * self.rng.gen::<f64>() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * f);
                return u * f;
            }
        }
    }

    /// `count` innovations `σ·z` in draw order.
    pub fn innovations(&mut self, count: usize, sigma: f64) -> Vec<f64> {
        (0..count).map(|_| sigma * self.next_standard()).collect()
    }
}

/// Draws an M×N noise field. Deterministic in `(spec, rows, cols)`.
pub fn generate(spec: &NoiseSpec, rows: usize, cols: usize) -> Result<SignalGrid> {
    spec.validate()?;
    if rows < 1 || cols < 1 {
        return Err(Error::InvalidDimensions(format!("{rows}×{cols} noise field")));
    }
    let mut stream = GaussianStream::new(spec.seed);
    match spec.kind {
        NoiseKind::IidGaussian => {
            SignalGrid::from_vec(rows, cols, stream.innovations(rows * cols, spec.sigma))
        }
        NoiseKind::FirLinearProcess => {
            fir_field(spec.kernel.as_deref().unwrap_or_default(), &mut stream, spec.sigma, rows, cols)
        }
        NoiseKind::ArmaExample => arma_field(&mut stream, spec.sigma, rows, cols, spec.burn_in()),
    }
}

fn fir_field(
    kernel: &[KernelTap],
    stream: &mut GaussianStream,
    sigma: f64,
    rows: usize,
    cols: usize,
) -> Result<SignalGrid> {
    let imin = kernel.iter().map(|t| t.offset.0).min().unwrap_or(0);
    let imax = kernel.iter().map(|t| t.offset.0).max().unwrap_or(0);
    let jmin = kernel.iter().map(|t| t.offset.1).min().unwrap_or(0);
    let jmax = kernel.iter().map(|t| t.offset.1).max().unwrap_or(0);
    // innovation rows cover m − i for m in 1..=M and every tap i
    let frows = rows + (imax - imin) as usize;
    let fcols = cols + (jmax - jmin) as usize;
    let eps = stream.innovations(frows * fcols, sigma);
    // field index (r, c) holds ε(r + 1 − imax, c + 1 − jmax)
    let mut out = Vec::with_capacity(rows * cols);
    for m in 0..rows as i64 {
        for n in 0..cols as i64 {
            let mut acc = 0.0;
            for tap in kernel {
                let r = (m - tap.offset.0 + imax) as usize;
                let c = (n - tap.offset.1 + jmax) as usize;
                acc += tap.coef * eps[r * fcols + c];
            }
            out.push(acc);
        }
    }
    SignalGrid::from_vec(rows, cols, out)
}

fn arma_field(
    stream: &mut GaussianStream,
    sigma: f64,
    rows: usize,
    cols: usize,
    burn_in: usize,
) -> Result<SignalGrid> {
    // indices 0..=rows+burn_in; row/column 0 carries innovations only
    let h = rows + burn_in + 1;
    let w = cols + burn_in + 1;
    let eps = stream.innovations(h * w, sigma);
    let x = arma_recursion(&eps, h, w);
    let mut out = Vec::with_capacity(rows * cols);
    for i in burn_in + 1..h {
        out.extend_from_slice(&x[i * w + burn_in + 1..(i + 1) * w]);
    }
    SignalGrid::from_vec(rows, cols, out)
}

/// Runs the ARMA recursion over an `h × w` innovation field with
/// `X = 0` on row 0 and column 0.
fn arma_recursion(eps: &[f64], h: usize, w: usize) -> Vec<f64> {
    let mut x = vec![0.0; h * w];
    for i in 1..h {
        for j in 1..w {
            let mut v = eps[i * w + j];
            for &(di, dj, c) in &ARMA_MA {
                v += c * eps[(i - di) * w + (j - dj)];
            }
            for &(di, dj, c) in &ARMA_AR {
                v += c * x[(i - di) * w + (j - dj)];
            }
            x[i * w + j] = v;
        }
    }
    x
}

/// The linear-process constant `c = Σ a(i, j)²`.
///
/// For the ARMA example the impulse response is computed on a
/// `(2·truncation + 1)²` window; `truncation` is ignored for other kinds.
pub fn effective_c(spec: &NoiseSpec, truncation: usize) -> Result<f64> {
    spec.validate()?;
    match spec.kind {
        NoiseKind::IidGaussian => Ok(1.0),
        NoiseKind::FirLinearProcess => {
            // coefficients at repeated offsets add
            let mut taps: Vec<((i64, i64), f64)> = Vec::new();
            for t in spec.kernel.as_deref().unwrap_or_default() {
                match taps.iter_mut().find(|(o, _)| *o == t.offset) {
                    Some((_, c)) => *c += t.coef,
                    None => taps.push((t.offset, t.coef)),
                }
            }
            Ok(taps.iter().map(|(_, c)| c * c).sum())
        }
        NoiseKind::ArmaExample => {
            if truncation < 1 {
                return Err(Error::InvalidParameter("truncation must be at least 1".into()));
            }
            let side = 2 * truncation + 1;
            // the impulse sits at field index (1, 1); row/col 0 are the zero margin
            let (h, w) = (side + 1, side + 1);
            let mut eps = vec![0.0; h * w];
            eps[w + 1] = 1.0;
            let x = arma_recursion(&eps, h, w);
            Ok(x.iter().map(|v| v * v).sum())
        }
    }
}

/// Element-wise sum of a signal and a noise field.
pub fn contaminate(signal: &SignalGrid, noise: &SignalGrid) -> Result<SignalGrid> {
    signal.zip_with(noise, |a, b| a + b)
}
