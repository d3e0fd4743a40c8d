//! The 2D chirp signal model and its column/row decompositions.
//!
//! All phase formulas use 1-based indices (`m = 1..=M`, `n = 1..=N`);
//! [`SignalGrid`] stores values 0-based in row-major order and the
//! conversion happens at the accessor boundary.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameter names in the canonical order `(A, B, α, β, γ, δ, μ)`.
pub const PARAM_NAMES: [&str; 7] = ["A", "B", "alpha", "beta", "gamma", "delta", "mu"];

/// Names of the five nonlinear parameters in the order `(α, β, γ, δ, μ)`.
pub const NONLINEAR_NAMES: [&str; 5] = ["alpha", "beta", "gamma", "delta", "mu"];

/// Full parameter vector θ = (A, B, α, β, γ, δ, μ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChirpParams {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub mu: f64,
}

/// Nonlinear part ξ = (α, β, γ, δ, μ).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub mu: f64,
}

impl NonlinearParams {
    pub const fn new(alpha: f64, beta: f64, gamma: f64, delta: f64, mu: f64) -> Self {
        Self {
            alpha,
            beta,
            gamma,
            delta,
            mu,
        }
    }

    pub fn to_array(self) -> [f64; 5] {
        [self.alpha, self.beta, self.gamma, self.delta, self.mu]
    }

    pub fn from_array(v: [f64; 5]) -> Self {
        Self::new(v[0], v[1], v[2], v[3], v[4])
    }

    /// Checks `α, γ, μ ∈ [0, 2π)` and `β, δ ∈ [0, π/2)`.
    pub fn validate(&self) -> Result<()> {
        for (name, v, hi) in [
            ("alpha", self.alpha, TAU),
            ("beta", self.beta, FRAC_PI_2),
            ("gamma", self.gamma, TAU),
            ("delta", self.delta, FRAC_PI_2),
            ("mu", self.mu, TAU),
        ] {
            if !(v.is_finite() && (0.0..hi).contains(&v)) {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {v} outside [0, {hi})"
                )));
            }
        }
        Ok(())
    }
}

impl ChirpParams {
    pub const fn new(
        a: f64,
        b: f64,
        alpha: f64,
        beta: f64,
        gamma: f64,
        delta: f64,
        mu: f64,
    ) -> Self {
        Self {
            a,
            b,
            alpha,
            beta,
            gamma,
            delta,
            mu,
        }
    }

    pub fn from_parts(a: f64, b: f64, xi: NonlinearParams) -> Self {
        Self::new(a, b, xi.alpha, xi.beta, xi.gamma, xi.delta, xi.mu)
    }

    /// The simulation setting used throughout the experiments: the nonlinear
    /// parameters of the reference study with `A = 1` and `B = 0.5`.
    pub const fn reference() -> Self {
        Self::new(1.0, 0.5, 0.4, 0.1429, 0.25, 0.1250, 0.1667)
    }

    pub fn nonlinear(&self) -> NonlinearParams {
        NonlinearParams::new(self.alpha, self.beta, self.gamma, self.delta, self.mu)
    }

    /// `A² + B²`.
    pub fn power(&self) -> f64 {
        self.a * self.a + self.b * self.b
    }

    pub fn to_array(&self) -> [f64; 7] {
        [
            self.a, self.b, self.alpha, self.beta, self.gamma, self.delta, self.mu,
        ]
    }

    pub fn from_array(v: [f64; 7]) -> Self {
        Self::new(v[0], v[1], v[2], v[3], v[4], v[5], v[6])
    }

    /// Checks the parameter space: finite amplitudes with `A² + B² > 0` and
    /// the nonlinear ranges of [`NonlinearParams::validate`].
    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.b.is_finite()) {
            return Err(Error::InvalidParameter("non-finite amplitude".into()));
        }
        if self.power() <= 0.0 {
            return Err(Error::InvalidParameter("A² + B² must be positive".into()));
        }
        self.nonlinear().validate()
    }

    /// Like [`validate`](Self::validate) but admits a zero amplitude vector,
    /// which is a legitimate synthesis input (an all-zero field).
    pub fn validate_for_synthesis(&self) -> Result<()> {
        if !(self.a.is_finite() && self.b.is_finite()) {
            return Err(Error::InvalidParameter("non-finite amplitude".into()));
        }
        self.nonlinear().validate()
    }

    /// Reduces frequencies modulo 2π into `[0, 2π)` and chirp rates modulo π.
    ///
    /// Because `m² ≡ m (mod 2)`, adding π to β is the same signal as adding π
    /// to α; a rate is therefore shifted by multiples of π with the matching
    /// shift applied to its frequency. Rates that land in `[π/2, π)` have no
    /// representative in `[0, π/2)` and are left there.
    pub fn canonical(&self) -> Self {
        let (alpha, beta) = canonical_pair(self.alpha, self.beta);
        let (gamma, delta) = canonical_pair(self.gamma, self.delta);
        Self {
            alpha,
            beta,
            gamma,
            delta,
            mu: wrap_angle(self.mu),
            ..*self
        }
    }
}

/// Reduces an angle into `[0, 2π)`.
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Signed difference `a − b` reduced into `(−π, π]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

/// Canonical (frequency, rate) pair for a 1D chirp phase `f t + r t²`.
pub fn canonical_pair(freq: f64, rate: f64) -> (f64, f64) {
    let k = (rate / PI).floor();
    let rate = rate - k * PI;
    let freq = freq + k * PI;
    (wrap_angle(freq), rate)
}

/// φ(m, n) = αm + βm² + γn + δn² + μmn with 1-based indices; no range
/// reduction is applied.
#[inline]
pub fn phase(xi: &NonlinearParams, m: usize, n: usize) -> f64 {
    let (m, n) = (m as f64, n as f64);
    xi.alpha * m + xi.beta * m * m + xi.gamma * n + xi.delta * n * n + xi.mu * m * n
}

/// An M×N real data matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalGrid {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl SignalGrid {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        check_dims(rows, cols)?;
        Ok(Self {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        })
    }

    pub fn from_vec(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        check_dims(rows, cols)?;
        if values.len() != rows * cols {
            return Err(Error::InvalidDimensions(format!(
                "{} values for a {rows}×{cols} grid",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parse(format!(
                "non-finite entry at ({}, {})",
                i / cols + 1,
                i % cols + 1
            )));
        }
        Ok(Self { rows, cols, values })
    }

    /// Builds a grid from `f(m, n)` with 1-based indices.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        check_dims(rows, cols)?;
        let mut values = Vec::with_capacity(rows * cols);
        for m in 1..=rows {
            for n in 1..=cols {
                values.push(f(m, n));
            }
        }
        Ok(Self { rows, cols, values })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Entry `y(m, n)` with 1-based indices.
    #[inline]
    pub fn get(&self, m: usize, n: usize) -> f64 {
        debug_assert!((1..=self.rows).contains(&m) && (1..=self.cols).contains(&n));
        self.values[(m - 1) * self.cols + (n - 1)]
    }

    /// Column `n0` (1-based) as a vector of length M.
    pub fn column(&self, n0: usize) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.values[i * self.cols + n0 - 1])
            .collect()
    }

    /// Row `m0` (1-based) as a slice of length N.
    pub fn row(&self, m0: usize) -> &[f64] {
        &self.values[(m0 - 1) * self.cols..m0 * self.cols]
    }

    pub fn sum_squares(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Mean squared difference against another grid of equal shape.
    pub fn mse(&self, other: &SignalGrid) -> Result<f64> {
        self.check_same_shape(other)?;
        let ss: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok(ss / self.values.len() as f64)
    }

    pub(crate) fn check_same_shape(&self, other: &SignalGrid) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                got: other.dims(),
            });
        }
        Ok(())
    }

    pub(crate) fn zip_with(&self, other: &SignalGrid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }
}

fn check_dims(rows: usize, cols: usize) -> Result<()> {
    if rows < 1 || cols < 1 {
        return Err(Error::InvalidDimensions(format!(
            "grid must be at least 1×1, got {rows}×{cols}"
        )));
    }
    Ok(())
}

/// Noiseless field `A cos φ(m, n) + B sin φ(m, n)`.
pub fn synthesize(params: &ChirpParams, rows: usize, cols: usize) -> Result<SignalGrid> {
    let xi = params.nonlinear();
    SignalGrid::from_fn(rows, cols, |m, n| {
        let (s, c) = phase(&xi, m, n).sin_cos();
        params.a * c + params.b * s
    })
}

/// Amplitudes, frequency and rate of a 1D chirp slice of the field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveParams1D {
    pub a: f64,
    pub b: f64,
    pub freq: f64,
    pub rate: f64,
}

impl EffectiveParams1D {
    /// Value at 1-based position `t`.
    pub fn eval(&self, t: usize) -> f64 {
        let t = t as f64;
        let (s, c) = (self.freq * t + self.rate * t * t).sin_cos();
        self.a * c + self.b * s
    }
}

/// Column `n0` viewed as a 1D chirp in `m`: frequency `α + n0 μ`, rate β,
/// amplitudes rotated by the column phase `γ n0 + δ n0²`.
pub fn column_effective(params: &ChirpParams, n0: usize) -> EffectiveParams1D {
    let n = n0 as f64;
    let (s, c) = (params.gamma * n + params.delta * n * n).sin_cos();
    EffectiveParams1D {
        a: params.a * c + params.b * s,
        b: -params.a * s + params.b * c,
        freq: params.alpha + n * params.mu,
        rate: params.beta,
    }
}

/// Row `m0` viewed as a 1D chirp in `n`: frequency `γ + m0 μ`, rate δ.
pub fn row_effective(params: &ChirpParams, m0: usize) -> EffectiveParams1D {
    let m = m0 as f64;
    let (s, c) = (params.alpha * m + params.beta * m * m).sin_cos();
    EffectiveParams1D {
        a: params.a * c + params.b * s,
        b: -params.a * s + params.b * c,
        freq: params.gamma + m * params.mu,
        rate: params.delta,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const XI_REF: NonlinearParams = NonlinearParams::new(0.4, 0.1429, 0.25, 0.1250, 0.1667);

    #[test]
    fn phase_zero_params() {
        assert_eq!(phase(&NonlinearParams::default(), 5, 7), 0.0);
    }

    #[test]
    fn phase_at_origin_is_coefficient_sum() {
        assert_relative_eq!(phase(&XI_REF, 1, 1), 1.0846, epsilon = 1e-12);
    }

    #[test]
    fn phase_scalar_oracle() {
        // 0.4·3 + 0.1429·9 + 0.25·2 + 0.125·4 + 0.1667·6
        let expected = 1.2 + 1.2861 + 0.5 + 0.5 + 1.0002;
        assert_relative_eq!(phase(&XI_REF, 3, 2), expected, epsilon = 1e-12);
    }

    #[test]
    fn synthesize_edge_cases() {
        let zero = ChirpParams::from_parts(0.0, 0.0, XI_REF);
        assert!(synthesize(&zero, 4, 4).unwrap().values().iter().all(|&v| v == 0.0));

        let ones = ChirpParams::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert!(synthesize(&ones, 3, 3).unwrap().values().iter().all(|&v| v == 1.0));

        assert!(synthesize(&ones, 0, 3).is_err());
        assert!(synthesize(&ones, 3, 0).is_err());
    }

    #[test]
    fn synthesize_entry_matches_scalar_oracle() {
        let p = ChirpParams::reference();
        let g = synthesize(&p, 4, 5).unwrap();
        let phi = 0.4 * 2.0 + 0.1429 * 4.0 + 0.25 * 3.0 + 0.125 * 9.0 + 0.1667 * 6.0;
        let expected = 1.0 * f64::cos(phi) + 0.5 * f64::sin(phi);
        assert_relative_eq!(g.get(2, 3), expected, epsilon = 1e-12);
    }

    #[test]
    fn column_effective_zero_column_phase() {
        let p = ChirpParams::new(0.7, -0.3, 1.1, 0.2, 0.0, 0.0, 0.3);
        let e = column_effective(&p, 1);
        assert_relative_eq!(e.a, 0.7);
        assert_relative_eq!(e.b, -0.3);
        assert_relative_eq!(e.freq, 1.4);
        assert_relative_eq!(e.rate, 0.2);
    }

    #[test]
    fn column_effective_scalar_oracle() {
        let p = ChirpParams::reference();
        let e = column_effective(&p, 4);
        let psi: f64 = 0.25 * 4.0 + 0.125 * 16.0;
        assert_relative_eq!(e.a, psi.cos() + 0.5 * psi.sin(), epsilon = 1e-14);
        assert_relative_eq!(e.b, -psi.sin() + 0.5 * psi.cos(), epsilon = 1e-14);
        assert_relative_eq!(e.freq, 0.4 + 4.0 * 0.1667, epsilon = 1e-14);
        assert_eq!(e.rate, 0.1429);
    }

    #[test]
    fn row_effective_zero_row_phase() {
        let p = ChirpParams::new(0.7, -0.3, 0.0, 0.0, 1.1, 0.2, 0.3);
        let e = row_effective(&p, 1);
        assert_relative_eq!(e.a, 0.7);
        assert_relative_eq!(e.b, -0.3);
        assert_relative_eq!(e.freq, 1.4);
        assert_relative_eq!(e.rate, 0.2);
    }

    #[test]
    fn row_effective_scalar_oracle() {
        let p = ChirpParams::reference();
        let e = row_effective(&p, 5);
        let psi: f64 = 0.4 * 5.0 + 0.1429 * 25.0;
        assert_relative_eq!(e.a, psi.cos() + 0.5 * psi.sin(), epsilon = 1e-14);
        assert_relative_eq!(e.b, -psi.sin() + 0.5 * psi.cos(), epsilon = 1e-14);
        assert_relative_eq!(e.freq, 0.25 + 5.0 * 0.1667, epsilon = 1e-14);
        assert_eq!(e.rate, 0.125);
    }

    #[test]
    fn canonical_reduction() {
        let p = ChirpParams::new(1.0, 0.0, 7.0, 0.1, -0.5, -0.01, 6.3);
        let c = p.canonical();
        assert_relative_eq!(c.alpha, 7.0 - TAU, epsilon = 1e-12);
        assert_relative_eq!(c.beta, 0.1);
        // δ = −0.01 ≡ π − 0.01 with γ shifted by −π
        assert_relative_eq!(c.delta, PI - 0.01, epsilon = 1e-12);
        assert_relative_eq!(c.gamma, wrap_angle(-0.5 - PI), epsilon = 1e-12);
        assert_relative_eq!(c.mu, 6.3 - TAU, epsilon = 1e-12);

        // canonicalization never changes the synthesized field
        let g0 = synthesize(&p, 6, 7).unwrap();
        let g1 = synthesize(&c, 6, 7).unwrap();
        for (a, b) in g0.values().iter().zip(g1.values()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn grid_accessors() {
        let g = SignalGrid::from_fn(3, 4, |m, n| (10 * m + n) as f64).unwrap();
        assert_eq!(g.get(2, 3), 23.0);
        assert_eq!(g.column(2), vec![12.0, 22.0, 32.0]);
        assert_eq!(g.row(3), &[31.0, 32.0, 33.0, 34.0]);
        assert!(SignalGrid::from_vec(2, 2, vec![1.0, f64::NAN, 0.0, 0.0]).is_err());
        assert!(SignalGrid::from_vec(2, 2, vec![1.0]).is_err());
    }

    fn params_strategy() -> impl Strategy<Value = ChirpParams> {
        (
            -2.0..2.0f64,
            -2.0..2.0f64,
            0.0..TAU,
            0.0..FRAC_PI_2,
            0.0..TAU,
            0.0..FRAC_PI_2,
            0.0..TAU,
        )
            .prop_map(|(a, b, al, be, ga, de, mu)| ChirpParams::new(a, b, al, be, ga, de, mu))
    }

    proptest! {
        #[test]
        fn effective_amplitude_is_rotation(p in params_strategy(), k in 1usize..60) {
            let c = column_effective(&p, k);
            let r = row_effective(&p, k);
            let pow = p.power();
            prop_assert!((c.a * c.a + c.b * c.b - pow).abs() <= 1e-12 * (1.0 + pow));
            prop_assert!((r.a * r.a + r.b * r.b - pow).abs() <= 1e-12 * (1.0 + pow));
        }

        #[test]
        fn columns_and_rows_reconstruct_field(p in params_strategy(), rows in 1usize..12, cols in 1usize..12) {
            let g = synthesize(&p, rows, cols).unwrap();
            let scale = 1.0 + p.power().sqrt();
            for n0 in 1..=cols {
                let e = column_effective(&p, n0);
                for m in 1..=rows {
                    prop_assert!((g.get(m, n0) - e.eval(m)).abs() <= 1e-12 * scale * (m * n0) as f64);
                }
            }
            for m0 in 1..=rows {
                let e = row_effective(&p, m0);
                for n in 1..=cols {
                    prop_assert!((g.get(m0, n) - e.eval(n)).abs() <= 1e-12 * scale * (m0 * n) as f64);
                }
            }
        }

        #[test]
        fn phase_is_linear_in_parameters(
            x in prop::array::uniform5(-3.0..3.0f64),
            y in prop::array::uniform5(-3.0..3.0f64),
            s in -2.0..2.0f64,
            m in 1usize..50,
            n in 1usize..50,
        ) {
            let xa = NonlinearParams::from_array(x);
            let ya = NonlinearParams::from_array(y);
            let mut comb = [0.0; 5];
            for i in 0..5 {
                comb[i] = x[i] + s * y[i];
            }
            let lhs = phase(&NonlinearParams::from_array(comb), m, n);
            let rhs = phase(&xa, m, n) + s * phase(&ya, m, n);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
        }
    }
}
