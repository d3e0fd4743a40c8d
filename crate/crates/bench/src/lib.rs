//! Fixtures shared by the estimator benchmarks.

use chirp2d::noise::{contaminate, generate};
use chirp2d::{ChirpParams, NoiseSpec, SignalGrid};

/// Reference chirp field of size `m × n` plus i.i.d. Gaussian noise.
pub fn noisy_field(m: usize, n: usize, sigma: f64, seed: u64) -> SignalGrid {
    let clean = chirp2d::model::synthesize(&ChirpParams::reference(), m, n).expect("valid size");
    let noise = generate(&NoiseSpec::iid(sigma, seed), m, n).expect("valid noise");
    contaminate(&clean, &noise).expect("matching sizes")
}
