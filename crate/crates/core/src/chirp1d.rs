//! Profiled least squares for a single 1D chirp
//! `y(t) = a cos(f t + r t²) + b sin(f t + r t²) + noise`, `t = 1..k`.
//!
//! The linear amplitudes are eliminated through the k×2 design
//! `Z = [cos θ_t, sin θ_t]`, leaving the reduced sum of squares
//! `R(f, r) = yᵀ(I − Z(ZᵀZ)⁻¹Zᵀ)y`, which is minimized by an exhaustive
//! lattice search followed by Nelder–Mead refinement.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::canonical_pair;
use crate::simplex::{self, SimplexOptions};

/// Relative threshold on `det(ZᵀZ) / (tr(ZᵀZ)/2)²` below which a design is
/// treated as degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-10;

pub const DEFAULT_RATE_GRID_CAP: usize = 4096;

/// Lattice and refinement settings for a 1D fit.
///
/// Unset grid counts follow the default rule for a vector of length `k`:
/// `2k` frequencies (spacing π/k over `[0, 2π)`) and `min(k², cap)` rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig1D {
    pub freq_grid_count: Option<usize>,
    pub rate_grid_count: Option<usize>,
    pub rate_grid_cap: usize,
    pub freq_range: (f64, f64),
    pub rate_range: (f64, f64),
    pub refine_tolerance: f64,
    pub refine_max_iters: usize,
    /// Number of lattice-local minima refined; the best result is kept.
    pub refine_starts: usize,
}

impl Default for SearchConfig1D {
    fn default() -> Self {
        Self {
            freq_grid_count: None,
            rate_grid_count: None,
            rate_grid_cap: DEFAULT_RATE_GRID_CAP,
            freq_range: (0.0, TAU),
            rate_range: (0.0, FRAC_PI_2),
            refine_tolerance: 1e-12,
            refine_max_iters: 500,
            refine_starts: 1,
        }
    }
}

/// A uniform `freq_count × rate_count` lattice with half-open ranges:
/// `f_j = lo + j (hi − lo) / freq_count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpec {
    pub freq_count: usize,
    pub rate_count: usize,
    pub freq_range: (f64, f64),
    pub rate_range: (f64, f64),
}

impl LatticeSpec {
    pub fn size(&self) -> usize {
        self.freq_count * self.rate_count
    }

    pub fn freq_step(&self) -> f64 {
        (self.freq_range.1 - self.freq_range.0) / self.freq_count as f64
    }

    pub fn rate_step(&self) -> f64 {
        (self.rate_range.1 - self.rate_range.0) / self.rate_count as f64
    }
}

impl SearchConfig1D {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        if self.freq_grid_count == Some(0)
            || self.rate_grid_count == Some(0)
            || self.rate_grid_cap == 0
            || self.refine_starts == 0
        {
            return bad("grid counts must be at least 1");
        }
        if self.refine_tolerance.is_nan() || self.refine_tolerance <= 0.0 {
            return bad("refine_tolerance must be positive");
        }
        for (lo, hi) in [self.freq_range, self.rate_range] {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return bad("ranges must be finite with hi > lo");
            }
        }
        Ok(())
    }

    /// Lattice used for a vector of length `k`.
    pub fn lattice(&self, k: usize) -> LatticeSpec {
        LatticeSpec {
            freq_count: self.freq_grid_count.unwrap_or(2 * k).max(1),
            rate_count: self
                .rate_grid_count
                .unwrap_or_else(|| (k * k).min(self.rate_grid_cap))
                .max(1),
            freq_range: self.freq_range,
            rate_range: self.rate_range,
        }
    }

    /// A 5×5 lattice centred on `(freq, rate)`, spaced like the global
    /// lattice for length `k`; refinement settings are kept.
    pub fn around(&self, k: usize, freq: f64, rate: f64) -> Self {
        let global = self.lattice(k);
        let (fs, rs) = (global.freq_step(), global.rate_step());
        Self {
            freq_grid_count: Some(5),
            rate_grid_count: Some(5),
            freq_range: (freq - 2.0 * fs, freq + 3.0 * fs),
            rate_range: (rate - 2.0 * rs, rate + 3.0 * rs),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FitFlags {
    /// The input vector was identically zero.
    pub zero_signal: bool,
    /// Refinement hit its iteration cap before meeting the tolerance.
    pub not_converged: bool,
    /// Lattice points skipped because the design was degenerate.
    pub degenerate_skipped: usize,
}

/// Result of a 1D chirp fit. `freq` is reported in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fit1D {
    pub freq: f64,
    pub rate: f64,
    pub amp_cos: f64,
    pub amp_sin: f64,
    pub objective: f64,
    /// Total objective evaluations (lattice plus refinement).
    pub evals: usize,
    pub grid_evals: usize,
    pub flags: FitFlags,
}

/// The k×2 design matrix with rows `(cos θ_t, sin θ_t)`, `θ_t = a1 t + a2 t²`.
pub fn build_z(k: usize, a1: f64, a2: f64) -> Result<Vec<[f64; 2]>> {
    if k < 2 {
        return Err(Error::InvalidDimensions(format!("design needs k ≥ 2, got {k}")));
    }
    Ok((1..=k)
        .map(|t| {
            let t = t as f64;
            let (s, c) = (a1 * t + a2 * t * t).sin_cos();
            [c, s]
        })
        .collect())
}

/// Least-squares fit of `y` on the cos/sin columns at fixed `(a1, a2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Profile {
    pub rss: f64,
    pub amp_cos: f64,
    pub amp_sin: f64,
}

/// Solves the 2×2 normal equations and returns the residual sum of squares
/// (accumulated from explicit residuals) with the fitted amplitudes.
pub fn profile(y: &[f64], a1: f64, a2: f64) -> Result<Profile> {
    let k = y.len();
    if k < 2 {
        return Err(Error::InvalidDimensions(format!("need at least 2 samples, got {k}")));
    }
    let mut cs = Vec::with_capacity(k);
    let (mut g11, mut g12, mut g22, mut b1, mut b2, mut yy) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, &v) in y.iter().enumerate() {
        let t = (i + 1) as f64;
        let (s, c) = (a1 * t + a2 * t * t).sin_cos();
        g11 += c * c;
        g12 += c * s;
        g22 += s * s;
        b1 += v * c;
        b2 += v * s;
        yy += v * v;
        cs.push((c, s));
    }
    let det = g11 * g22 - g12 * g12;
    let half_trace = 0.5 * (g11 + g22);
    if det.is_nan() || det < DEGENERACY_THRESHOLD * half_trace * half_trace {
        return Err(Error::DegenerateDesign(a1, a2));
    }
    let amp_cos = (g22 * b1 - g12 * b2) / det;
    let amp_sin = (g11 * b2 - g12 * b1) / det;
    let rss: f64 = y
        .iter()
        .zip(&cs)
        .map(|(&v, &(c, s))| {
            let r = v - amp_cos * c - amp_sin * s;
            r * r
        })
        .sum();
    Ok(Profile {
        rss: rss.min(yy),
        amp_cos,
        amp_sin,
    })
}

/// Reduced sum of squares `R(a1, a2) = yᵀ(I − P_Z)y`.
pub fn reduced_ss(y: &[f64], a1: f64, a2: f64) -> Result<f64> {
    profile(y, a1, a2).map(|p| p.rss)
}

/// Best lattice point of a search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridHit {
    pub freq: f64,
    pub rate: f64,
    pub objective: f64,
    pub evals: usize,
    pub skipped: usize,
}

/// Precomputed lattice for vectors of one length.
///
/// The data-independent parts (phase factors and inverse Gram matrices) are
/// built once and shared by every vector searched on the lattice, which is
/// how a column or row sweep evaluates `R` at every point of every vector.
pub struct Lattice1D {
    len: usize,
    spec: LatticeSpec,
    freqs: Vec<f64>,
    rates: Vec<f64>,
    /// `e^{i jΔ t}`, row `j` of length `len`.
    step_re: Vec<f64>,
    step_im: Vec<f64>,
    /// `e^{i (f_0 t + r t²)}`, row `r` of length `len`.
    chirp_re: Vec<f64>,
    chirp_im: Vec<f64>,
    /// `[g22, g12, g11] / det` per (rate, freq); NaN marks a degenerate point.
    inv_gram: Vec<[f64; 3]>,
    degenerate: usize,
}

impl Lattice1D {
    pub fn new(len: usize, config: &SearchConfig1D) -> Result<Self> {
        config.validate()?;
        if len < 2 {
            return Err(Error::InvalidDimensions(format!("need at least 2 samples, got {len}")));
        }
        let spec = config.lattice(len);
        let (f0, df) = (spec.freq_range.0, spec.freq_step());
        let (r0, dr) = (spec.rate_range.0, spec.rate_step());
        let freqs: Vec<f64> = (0..spec.freq_count).map(|j| f0 + j as f64 * df).collect();
        let rates: Vec<f64> = (0..spec.rate_count).map(|r| r0 + r as f64 * dr).collect();

        let mut step_re = Vec::with_capacity(spec.freq_count * len);
        let mut step_im = Vec::with_capacity(spec.freq_count * len);
        for j in 0..spec.freq_count {
            for t in 1..=len {
                let (s, c) = (j as f64 * df * t as f64).sin_cos();
                step_re.push(c);
                step_im.push(s);
            }
        }
        let mut chirp_re = Vec::with_capacity(spec.rate_count * len);
        let mut chirp_im = Vec::with_capacity(spec.rate_count * len);
        for &rate in &rates {
            for t in 1..=len {
                let t = t as f64;
                let (s, c) = (f0 * t + rate * t * t).sin_cos();
                chirp_re.push(c);
                chirp_im.push(s);
            }
        }

        // Q = Σ e^{2iθ_t}; Σcos² = (k + Re Q)/2, Σsin² = (k − Re Q)/2, Σ sin cos = Im Q / 2
        let k = len as f64;
        let mut inv_gram = Vec::with_capacity(spec.size());
        let mut degenerate = 0;
        let (mut c2r, mut c2i) = (vec![0.0; len], vec![0.0; len]);
        let (mut e2r, mut e2i) = (vec![0.0; len], vec![0.0; len]);
        for r in 0..spec.rate_count {
            let (cr, ci) = (&chirp_re[r * len..(r + 1) * len], &chirp_im[r * len..(r + 1) * len]);
            for t in 0..len {
                c2r[t] = cr[t] * cr[t] - ci[t] * ci[t];
                c2i[t] = 2.0 * cr[t] * ci[t];
            }
            for j in 0..spec.freq_count {
                let (er, ei) = (&step_re[j * len..(j + 1) * len], &step_im[j * len..(j + 1) * len]);
                for t in 0..len {
                    e2r[t] = er[t] * er[t] - ei[t] * ei[t];
                    e2i[t] = 2.0 * er[t] * ei[t];
                }
                let (qr, qi) = complex_dot(&c2r, &c2i, &e2r, &e2i);
                let g11 = 0.5 * (k + qr);
                let g22 = 0.5 * (k - qr);
                let g12 = 0.5 * qi;
                let det = g11 * g22 - g12 * g12;
                let half_trace = 0.5 * k;
                if det >= DEGENERACY_THRESHOLD * half_trace * half_trace {
                    inv_gram.push([g22 / det, g12 / det, g11 / det]);
                } else {
                    inv_gram.push([f64::NAN; 3]);
                    degenerate += 1;
                }
            }
        }

        Ok(Self {
            len,
            spec,
            freqs,
            rates,
            step_re,
            step_im,
            chirp_re,
            chirp_im,
            inv_gram,
            degenerate,
        })
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of non-degenerate lattice points, i.e. evaluations per search.
    pub fn evaluations(&self) -> usize {
        self.spec.size() - self.degenerate
    }

    /// Exhaustive minimization of `R` over the lattice. Ties go to the
    /// lexicographically smallest `(freq, rate)`.
    pub fn search(&self, y: &[f64]) -> Result<GridHit> {
        self.candidates(y, 1).map(|mut c| c.swap_remove(0))
    }

    /// Objective at every lattice point, indexed `[rate][freq]`;
    /// degenerate points hold `+∞`.
    fn objective_table(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.len {
            return Err(Error::InvalidDimensions(format!(
                "lattice built for length {}, got {}",
                self.len,
                y.len()
            )));
        }
        if self.degenerate == self.spec.size() {
            return Err(Error::AllGridDegenerate);
        }
        let len = self.len;
        let nf = self.spec.freq_count;
        let yy: f64 = y.iter().map(|v| v * v).sum();
        let (mut ycr, mut yci) = (vec![0.0; len], vec![0.0; len]);
        let mut table = vec![f64::INFINITY; self.spec.size()];
        for r in 0..self.spec.rate_count {
            let (cr, ci) = (
                &self.chirp_re[r * len..(r + 1) * len],
                &self.chirp_im[r * len..(r + 1) * len],
            );
            for t in 0..len {
                ycr[t] = y[t] * cr[t];
                yci[t] = y[t] * ci[t];
            }
            for j in 0..nf {
                let h = self.inv_gram[r * nf + j];
                if h[0].is_nan() {
                    continue;
                }
                let (b1, b2) = complex_dot(
                    &ycr,
                    &yci,
                    &self.step_re[j * len..(j + 1) * len],
                    &self.step_im[j * len..(j + 1) * len],
                );
                let explained = b1 * b1 * h[0] - 2.0 * b1 * b2 * h[1] + b2 * b2 * h[2];
                table[r * nf + j] = (yy - explained).max(0.0);
            }
        }
        Ok(table)
    }

    /// Up to `count` lattice points that are no larger than any of their
    /// eight neighbours, best first. Ties go to the lexicographically
    /// smallest `(freq, rate)`, so the first entry is the lattice minimizer.
    pub fn candidates(&self, y: &[f64], count: usize) -> Result<Vec<GridHit>> {
        let table = self.objective_table(y)?;
        let (nf, nr) = (self.spec.freq_count, self.spec.rate_count);
        let mut minima: Vec<(f64, usize, usize)> = Vec::new();
        for r in 0..nr {
            for j in 0..nf {
                let v = table[r * nf + j];
                if !v.is_finite() {
                    continue;
                }
                let is_min = (r.saturating_sub(1)..=(r + 1).min(nr - 1)).all(|rr| {
                    (j.saturating_sub(1)..=(j + 1).min(nf - 1)).all(|jj| v <= table[rr * nf + jj])
                });
                if is_min {
                    minima.push((v, j, r));
                }
            }
        }
        minima.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
        minima.truncate(count.max(1));
        Ok(minima
            .into_iter()
            .map(|(objective, j, r)| GridHit {
                freq: self.freqs[j],
                rate: self.rates[r],
                objective,
                evals: self.evaluations(),
                skipped: self.degenerate,
            })
            .collect())
    }
}

/// `Σ (ar + i ai)(br + i bi)` with four independent accumulators per part.
#[inline]
fn complex_dot(ar: &[f64], ai: &[f64], br: &[f64], bi: &[f64]) -> (f64, f64) {
    let n = ar.len();
    let (ar, ai, br, bi) = (&ar[..n], &ai[..n], &br[..n], &bi[..n]);
    let mut re = [0.0; 4];
    let mut im = [0.0; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        for l in 0..4 {
            let t = 4 * c + l;
            re[l] += ar[t] * br[t] - ai[t] * bi[t];
            im[l] += ar[t] * bi[t] + ai[t] * br[t];
        }
    }
    let mut sr = (re[0] + re[1]) + (re[2] + re[3]);
    let mut si = (im[0] + im[1]) + (im[2] + im[3]);
    for t in 4 * chunks..n {
        sr += ar[t] * br[t] - ai[t] * bi[t];
        si += ar[t] * bi[t] + ai[t] * br[t];
    }
    (sr, si)
}

/// Lattice minimizer of `R` for `y` (length ≥ 4).
pub fn grid_search_1d(y: &[f64], config: &SearchConfig1D) -> Result<GridHit> {
    if y.len() < 4 {
        return Err(Error::InvalidDimensions(format!("need at least 4 samples, got {}", y.len())));
    }
    Lattice1D::new(y.len(), config)?.search(y)
}

/// Nelder–Mead descent on `R` from `init`, in coordinates scaled by
/// `(k, k²)` so both directions have comparable curvature. A converged run
/// is followed by one restart with a hundredfold smaller simplex.
pub fn refine_1d(y: &[f64], init: (f64, f64), config: &SearchConfig1D) -> Result<Fit1D> {
    config.validate()?;
    let k = y.len();
    if k < 2 {
        return Err(Error::InvalidDimensions(format!("need at least 2 samples, got {k}")));
    }
    let (sf, sr) = (k as f64, (k * k) as f64);
    let objective = |x: &[f64]| reduced_ss(y, x[0] / sf, x[1] / sr).unwrap_or(f64::INFINITY);
    let opts = SimplexOptions {
        tolerance: config.refine_tolerance,
        max_iters: config.refine_max_iters,
    };
    let start = [init.0 * sf, init.1 * sr];
    let steps = [PI / 4.0, PI / 8.0];
    let first = simplex::minimize(objective, &start, &steps, opts);
    let mut evals = first.evals;
    let mut best = first.clone();
    if first.converged {
        let polish = simplex::minimize(objective, &first.x, &[steps[0] * 1e-2, steps[1] * 1e-2], opts);
        evals += polish.evals;
        if polish.f < best.f {
            best = polish;
        }
    }
    let (freq, rate) = (best.x[0] / sf, best.x[1] / sr);
    let p = profile(y, freq, rate)?;
    let (freq, rate) = canonical_pair(freq, rate);
    Ok(Fit1D {
        freq,
        rate,
        amp_cos: p.amp_cos,
        amp_sin: p.amp_sin,
        objective: p.rss,
        evals,
        grid_evals: 0,
        flags: FitFlags {
            not_converged: !first.converged,
            ..FitFlags::default()
        },
    })
}

/// [`estimate_1d`] on a prebuilt lattice.
pub fn estimate_on(lattice: &Lattice1D, y: &[f64], config: &SearchConfig1D) -> Result<Fit1D> {
    if y.len() < 4 {
        return Err(Error::InvalidDimensions(format!("need at least 4 samples, got {}", y.len())));
    }
    let starts = lattice.candidates(y, config.refine_starts)?;
    let hit = starts[0];
    if y.iter().all(|&v| v == 0.0) {
        let (freq, rate) = canonical_pair(hit.freq, hit.rate);
        return Ok(Fit1D {
            freq,
            rate,
            amp_cos: 0.0,
            amp_sin: 0.0,
            objective: 0.0,
            evals: hit.evals,
            grid_evals: hit.evals,
            flags: FitFlags {
                zero_signal: true,
                degenerate_skipped: hit.skipped,
                ..FitFlags::default()
            },
        });
    }
    let mut fit: Option<Fit1D> = None;
    let mut refine_evals = 0;
    for start in &starts {
        let f = refine_1d(y, (start.freq, start.rate), config)?;
        refine_evals += f.evals;
        if fit.as_ref().is_none_or(|best| f.objective < best.objective) {
            fit = Some(f);
        }
    }
    let mut fit = fit.expect("at least one start");
    fit.evals = refine_evals + hit.evals;
    fit.grid_evals = hit.evals;
    fit.flags.degenerate_skipped = hit.skipped;
    Ok(fit)
}

/// Fits one 1D chirp: lattice search, then [`refine_1d`] from each of the
/// `refine_starts` best lattice-local minima, keeping the lowest objective.
///
/// An all-zero input returns zero amplitudes at the lattice minimizer with
/// the `zero_signal` flag set.
pub fn estimate_1d(y: &[f64], config: &SearchConfig1D) -> Result<Fit1D> {
    if y.len() < 4 {
        return Err(Error::InvalidDimensions(format!("need at least 4 samples, got {}", y.len())));
    }
    estimate_on(&Lattice1D::new(y.len(), config)?, y, config)
}
