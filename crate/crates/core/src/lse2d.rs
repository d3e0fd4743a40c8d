//! Brute-force 2D least squares over all five nonlinear parameters.
//!
//! The amplitudes are profiled out of the full M·N-sample criterion, the
//! remaining five-dimensional objective is minimized over a product lattice
//! and the best point is refined with Nelder–Mead. Cost grows as the product
//! of the five grid counts (order `M⁴N⁴` under the default rule), so this is
//! only usable for small grids.

use std::f64::consts::{FRAC_PI_2, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chirp1d::{Profile, DEGENERACY_THRESHOLD};
use crate::error::{Error, Result};
use crate::estimator::{residual_ss, Diagnostics, EstimationResult};
use crate::model::{phase, ChirpParams, NonlinearParams, SignalGrid};
use crate::simplex::{self, SimplexOptions};

pub const DEFAULT_EVAL_BUDGET: u128 = 100_000_000;

/// Lattice and refinement settings for [`lse2d`].
///
/// Unset counts follow the default rule for an M×N grid: 2M values of α,
/// M² of β, 2N of γ, N² of δ and 2MN of μ. Frequency and interaction ranges
/// are `[0, 2π)`, rate ranges `[0, π/2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig2D {
    pub alpha_count: Option<usize>,
    pub beta_count: Option<usize>,
    pub gamma_count: Option<usize>,
    pub delta_count: Option<usize>,
    pub mu_count: Option<usize>,
    pub eval_budget: u128,
    pub refine_tolerance: f64,
    pub refine_max_iters: usize,
}

impl Default for SearchConfig2D {
    fn default() -> Self {
        Self {
            alpha_count: None,
            beta_count: None,
            gamma_count: None,
            delta_count: None,
            mu_count: None,
            eval_budget: DEFAULT_EVAL_BUDGET,
            refine_tolerance: 1e-12,
            refine_max_iters: 5000,
        }
    }
}

impl SearchConfig2D {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            self.alpha_count,
            self.beta_count,
            self.gamma_count,
            self.delta_count,
            self.mu_count,
        ];
        if counts.contains(&Some(0)) {
            return Err(Error::InvalidParameter("grid counts must be at least 1".into()));
        }
        if self.refine_tolerance.is_nan() || self.refine_tolerance <= 0.0 {
            return Err(Error::InvalidParameter("refine_tolerance must be positive".into()));
        }
        Ok(())
    }

    /// Grid counts `(α, β, γ, δ, μ)` for an M×N grid.
    pub fn counts(&self, rows: usize, cols: usize) -> [usize; 5] {
        [
            self.alpha_count.unwrap_or(2 * rows),
            self.beta_count.unwrap_or(rows * rows),
            self.gamma_count.unwrap_or(2 * cols),
            self.delta_count.unwrap_or(cols * cols),
            self.mu_count.unwrap_or(2 * rows * cols),
        ]
    }

    /// Number of lattice points for an M×N grid.
    pub fn lattice_size(&self, rows: usize, cols: usize) -> u128 {
        self.counts(rows, cols).iter().map(|&c| c as u128).product()
    }
}

/// Lattice spacing of each parameter.
fn spacings(counts: [usize; 5]) -> [f64; 5] {
    let widths = [TAU, FRAC_PI_2, TAU, FRAC_PI_2, TAU];
    std::array::from_fn(|i| widths[i] / counts[i] as f64)
}

/// Least-squares fit of the two amplitudes over the whole grid at `xi`;
/// the residual is accumulated from explicit residuals.
pub fn profile_2d(y: &SignalGrid, xi: &NonlinearParams) -> Result<Profile> {
    let (rows, cols) = y.dims();
    if rows * cols < 3 {
        return Err(Error::InvalidDimensions(format!("need at least 3 samples, got {rows}×{cols}")));
    }
    let mut basis = Vec::with_capacity(rows * cols);
    let (mut g11, mut g12, mut g22, mut b1, mut b2, mut yy) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for m in 1..=rows {
        for (j, &v) in y.row(m).iter().enumerate() {
            let (s, c) = phase(xi, m, j + 1).sin_cos();
            g11 += c * c;
            g12 += c * s;
            g22 += s * s;
            b1 += v * c;
            b2 += v * s;
            yy += v * v;
            basis.push((c, s));
        }
    }
    let det = g11 * g22 - g12 * g12;
    let half_trace = 0.5 * (g11 + g22);
    if det.is_nan() || det < DEGENERACY_THRESHOLD * half_trace * half_trace {
        return Err(Error::DegenerateDesign(xi.alpha, xi.beta));
    }
    let amp_cos = (g22 * b1 - g12 * b2) / det;
    let amp_sin = (g11 * b2 - g12 * b1) / det;
    let rss: f64 = y
        .values()
        .iter()
        .zip(&basis)
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

/// Residual sum of squares with the amplitudes profiled out.
pub fn profile_rss_2d(y: &SignalGrid, xi: &NonlinearParams) -> Result<f64> {
    profile_2d(y, xi).map(|p| p.rss)
}

/// Best lattice point of the 2D search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridHit2D {
    pub xi: NonlinearParams,
    pub objective: f64,
    pub evals: u128,
    pub skipped: u128,
}

/// Complex buffers `re`, `im` of a rows×cols matrix.
struct CMat {
    re: Vec<f64>,
    im: Vec<f64>,
}

impl CMat {
    fn zeros(len: usize) -> Self {
        Self {
            re: vec![0.0; len],
            im: vec![0.0; len],
        }
    }
}

/// `e^{i k lo t} e^{i k j Δ t}` for `t = 1..len`, `j = 0..count`, stored
/// `[t][j]`; `k` is 1 for the data sums and 2 for the Gram sums.
fn exp_table(len: usize, count: usize, lo: f64, step: f64, k: f64) -> CMat {
    let mut out = CMat::zeros(len * count);
    for t in 1..=len {
        for j in 0..count {
            let (s, c) = (k * (lo + j as f64 * step) * t as f64).sin_cos();
            out.re[(t - 1) * count + j] = c;
            out.im[(t - 1) * count + j] = s;
        }
    }
    out
}

/// `out[a][g] = Σ_m ea[m][a] Σ_n w[m][n] eg[n][g]`.
fn double_transform(w: &CMat, ea: &CMat, eg: &CMat, dims: (usize, usize, usize, usize), tmp: &mut CMat, out: &mut CMat) {
    let (rows, cols, na, ng) = dims;
    tmp.re.iter_mut().for_each(|v| *v = 0.0);
    tmp.im.iter_mut().for_each(|v| *v = 0.0);
    for m in 0..rows {
        let (tr, ti) = (&mut tmp.re[m * ng..(m + 1) * ng], &mut tmp.im[m * ng..(m + 1) * ng]);
        for n in 0..cols {
            let (wr, wi) = (w.re[m * cols + n], w.im[m * cols + n]);
            let (er, ei) = (&eg.re[n * ng..(n + 1) * ng], &eg.im[n * ng..(n + 1) * ng]);
            for g in 0..ng {
                tr[g] += wr * er[g] - wi * ei[g];
                ti[g] += wr * ei[g] + wi * er[g];
            }
        }
    }
    out.re.iter_mut().for_each(|v| *v = 0.0);
    out.im.iter_mut().for_each(|v| *v = 0.0);
    for a in 0..na {
        let (or, oi) = (&mut out.re[a * ng..(a + 1) * ng], &mut out.im[a * ng..(a + 1) * ng]);
        for m in 0..rows {
            let (er, ei) = (ea.re[m * na + a], ea.im[m * na + a]);
            let (tr, ti) = (&tmp.re[m * ng..(m + 1) * ng], &tmp.im[m * ng..(m + 1) * ng]);
            for g in 0..ng {
                or[g] += er * tr[g] - ei * ti[g];
                oi[g] += er * ti[g] + ei * tr[g];
            }
        }
    }
}

/// Candidate minimum: objective, then lattice indices `(α, β, γ, δ, μ)`.
type Candidate = (f64, [usize; 5]);

fn better(a: &Candidate, b: &Candidate) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

/// Exhaustive minimization of the profiled criterion over the lattice.
///
/// For each `(β, δ, μ)` the sums over all `(α, γ)` pairs factor into two
/// small matrix products, which keeps the per-point cost independent of the
/// grid size. Ties go to the lexicographically smallest index tuple.
pub fn lattice_search_2d(y: &SignalGrid, config: &SearchConfig2D) -> Result<GridHit2D> {
    config.validate()?;
    let (rows, cols) = y.dims();
    if rows < 2 || cols < 2 {
        return Err(Error::InvalidDimensions(format!("need M, N ≥ 2, got {rows}×{cols}")));
    }
    let size = config.lattice_size(rows, cols);
    if size > config.eval_budget {
        return Err(Error::BudgetExceeded {
            required: size,
            budget: config.eval_budget,
        });
    }
    let counts = config.counts(rows, cols);
    let [na, nb, ng, nd, nu] = counts;
    let step = spacings(counts);
    let ea = exp_table(rows, na, 0.0, step[0], 1.0);
    let eg = exp_table(cols, ng, 0.0, step[2], 1.0);
    let ea2 = exp_table(rows, na, 0.0, step[0], 2.0);
    let eg2 = exp_table(cols, ng, 0.0, step[2], 2.0);
    let total = (rows * cols) as f64;
    let half = 0.5 * total;
    let yy = y.sum_squares();
    let data = y.values();

    let per_beta = |ib: usize| -> (Option<Candidate>, u128) {
        let beta = ib as f64 * step[1];
        let mut w = CMat::zeros(rows * cols);
        let mut v = CMat::zeros(rows * cols);
        let mut tmp = CMat::zeros(rows * ng);
        let mut s = CMat::zeros(na * ng);
        let mut q = CMat::zeros(na * ng);
        let mut best: Option<Candidate> = None;
        let mut skipped = 0u128;
        for id in 0..nd {
            let delta = id as f64 * step[3];
            for iu in 0..nu {
                let mu = iu as f64 * step[4];
                for m in 1..=rows {
                    for n in 1..=cols {
                        let (mf, nf) = (m as f64, n as f64);
                        let th = beta * mf * mf + delta * nf * nf + mu * mf * nf;
                        let (sn, cs) = th.sin_cos();
                        let (s2, c2) = (2.0 * th).sin_cos();
                        let i = (m - 1) * cols + n - 1;
                        w.re[i] = data[i] * cs;
                        w.im[i] = data[i] * sn;
                        v.re[i] = c2;
                        v.im[i] = s2;
                    }
                }
                let dims = (rows, cols, na, ng);
                double_transform(&w, &ea, &eg, dims, &mut tmp, &mut s);
                double_transform(&v, &ea2, &eg2, dims, &mut tmp, &mut q);
                for ia in 0..na {
                    for ig in 0..ng {
                        let i = ia * ng + ig;
                        let g11 = 0.5 * (total + q.re[i]);
                        let g22 = 0.5 * (total - q.re[i]);
                        let g12 = 0.5 * q.im[i];
                        let det = g11 * g22 - g12 * g12;
                        if det.is_nan() || det < DEGENERACY_THRESHOLD * half * half {
                            skipped += 1;
                            continue;
                        }
                        let (b1, b2) = (s.re[i], s.im[i]);
                        let explained = (b1 * b1 * g22 - 2.0 * b1 * b2 * g12 + b2 * b2 * g11) / det;
                        let cand = ((yy - explained).max(0.0), [ia, ib, ig, id, iu]);
                        if best.as_ref().is_none_or(|b| better(&cand, b)) {
                            best = Some(cand);
                        }
                    }
                }
            }
        }
        (best, skipped)
    };

    let results: Vec<(Option<Candidate>, u128)> = (0..nb).into_par_iter().map(per_beta).collect();
    let skipped: u128 = results.iter().map(|r| r.1).sum();
    let best = results
        .into_iter()
        .filter_map(|r| r.0)
        .reduce(|a, b| if better(&b, &a) { b } else { a })
        .ok_or(Error::AllGridDegenerate)?;
    let idx = best.1;
    Ok(GridHit2D {
        xi: NonlinearParams::from_array(std::array::from_fn(|i| idx[i] as f64 * step[i])),
        objective: best.0,
        evals: size - skipped,
        skipped,
    })
}

/// Full 2D least squares: lattice search, then Nelder–Mead over the five
/// nonlinear parameters in coordinates scaled by `(M, M², N, N², MN)`.
pub fn lse2d(y: &SignalGrid, config: &SearchConfig2D) -> Result<EstimationResult> {
    let hit = lattice_search_2d(y, config)?;
    let (rows, cols) = y.dims();
    let (mf, nf) = (rows as f64, cols as f64);
    let scale = [mf, mf * mf, nf, nf * nf, mf * nf];
    let step = spacings(config.counts(rows, cols));
    let steps: Vec<f64> = (0..5).map(|i| 0.25 * step[i] * scale[i]).collect();
    let start: Vec<f64> = hit.xi.to_array().iter().zip(&scale).map(|(v, s)| v * s).collect();
    let unscale = |x: &[f64]| NonlinearParams::from_array(std::array::from_fn(|i| x[i] / scale[i]));
    let objective = |x: &[f64]| profile_rss_2d(y, &unscale(x)).unwrap_or(f64::INFINITY);
    let opts = SimplexOptions {
        tolerance: config.refine_tolerance,
        max_iters: config.refine_max_iters,
    };
    let first = simplex::minimize(objective, &start, &steps, opts);
    let mut evals = first.evals;
    let mut best = first.clone();
    if first.converged {
        let small: Vec<f64> = steps.iter().map(|s| s * 1e-2).collect();
        let polish = simplex::minimize(objective, &first.x, &small, opts);
        evals += polish.evals;
        if polish.f < best.f {
            best = polish;
        }
    }
    let xi = unscale(&best.x);
    let p = profile_2d(y, &xi)?;
    let params = ChirpParams::from_parts(p.amp_cos, p.amp_sin, xi);
    Ok(EstimationResult {
        params: params.canonical(),
        sweep: None,
        residual_ss: residual_ss(y, &params),
        evals: (hit.evals as usize).saturating_add(evals),
        diagnostics: Diagnostics {
            not_converged_fits: (!first.converged) as usize,
            degenerate_points_skipped: hit.skipped as usize,
            ..Diagnostics::default()
        },
    })
}
