//! Seeded random distributions for verification sweeps.
//!
//! Sweeps draw exponentially-tilted uniform simplex samples: exponential
//! spacings damped by a random tilt `e^{−θn}`, which biases mass toward low
//! indices the way physical low-energy states look. The passive variant
//! sorts the weights, giving decreasing (hence connected-support)
//! distributions. All randomness comes from a caller-provided ChaCha
//! generator so reports are reproducible from a single 64-bit seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::dist::ProbVec;

pub fn seeded_rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Exponentially-tilted simplex sample on `{0, …, len−1}`.
pub fn tilted_simplex(rng: &mut impl Rng, len: usize, tilt: f64) -> Vec<f64> {
    assert!(len > 0, "need at least one weight");
    let mut weights: Vec<f64> = (0..len)
        .map(|n| {
            let u: f64 = rng.random();
            // exponential spacing, damped by the tilt
            -(1.0 - u).ln() * (-tilt * n as f64).exp()
        })
        .collect();
    let sum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= sum;
    }
    weights
}

/// Random distribution on `{0, …, n_max}` with a tilt drawn from `[0, 3)`;
/// `passive` sorts the weights into non-increasing order.
pub fn random_probvec(rng: &mut impl Rng, n_max: usize, passive: bool) -> ProbVec {
    let tilt = rng.random_range(0.0..3.0);
    let mut weights = tilted_simplex(rng, n_max + 1, tilt);
    if passive {
        weights.sort_by(|a, b| b.total_cmp(a));
    }
    ProbVec::renormalized(weights).expect("simplex sample is a valid distribution")
}
