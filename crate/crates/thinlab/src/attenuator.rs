//! The binomial thinning channel `T_λ` (the photon-number-diagonal
//! restriction of the quantum-limited attenuator) with its semigroup
//! structure, the entropy-production functional, and a Monte-Carlo
//! sampling oracle.
//!
//! Thinning keeps each of `k` counted quanta independently with probability
//! λ, so the transition probabilities are binomial,
//!
//! ```text
//! r_{n|k} = C(k, n) · λⁿ · (1−λ)^{k−n},   r_{n|k} = 0 for k < n,
//! ```
//!
//! and `[T_λ(p)]ₙ = Σₖ r_{n|k} pₖ`. Under the flow `λ = e^{−t}` the entropy
//! of the output decreases at rate `F(p) = Σₙ n pₙ ln(p_{n−1}/pₙ)` at
//! `t = 0` ([`entropy_production`]), which is the quantity the extremal
//! solver maximizes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dist::{ProbVec, SupportProfile};
use crate::entropy::entropy_slope_floor;
use crate::error::{check_lambda, domain, Error, Result};

/// Binomial coefficients are accumulated directly up to this k; larger
/// columns go through log-factorials to avoid overflow.
const DIRECT_MAX_K: usize = 30;

/// Largest support for a dense materialized kernel.
const DENSE_KERNEL_MAX: usize = 2048;

/// Samples per Monte-Carlo worker chunk; fixed so histograms are
/// reproducible regardless of how chunks are scheduled.
const MC_CHUNK: u64 = 1 << 16;

fn ln_factorials(n_max: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(n_max + 1);
    table.push(0.0);
    for i in 1..=n_max {
        table.push(table[i - 1] + (i as f64).ln());
    }
    table
}

/// Writes the Binomial(k, λ) pmf into `out[0..=k]`.
fn binomial_pmf(k: usize, lambda: f64, ln_fac: &[f64], out: &mut [f64]) {
    if lambda == 0.0 {
        out[..=k].fill(0.0);
        out[0] = 1.0;
        return;
    }
    if lambda == 1.0 {
        out[..=k].fill(0.0);
        out[k] = 1.0;
        return;
    }
    if k <= DIRECT_MAX_K {
        // C(k, n) stays exactly representable here; direct products keep the
        // column accurate to a few ulps.
        let mut coeff = 1.0;
        for n in 0..=k {
            out[n] = coeff * lambda.powi(n as i32) * (1.0 - lambda).powi((k - n) as i32);
            coeff = coeff * (k - n) as f64 / (n + 1) as f64;
        }
    } else {
        let ln_l = lambda.ln();
        let ln_m = (1.0 - lambda).ln();
        for n in 0..=k {
            let ln_c = ln_fac[k] - ln_fac[n] - ln_fac[k - n];
            out[n] = (ln_c + n as f64 * ln_l + (k - n) as f64 * ln_m).exp();
        }
    }
}

/// Single transition probability `r_{n|k} = C(k,n) λⁿ (1−λ)^{k−n}`,
/// zero for `k < n`.
pub fn transition_probability(n: usize, k: usize, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if n > k {
        return Ok(0.0);
    }
    if lambda == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    if lambda == 1.0 {
        return Ok(if n == k { 1.0 } else { 0.0 });
    }
    if k <= DIRECT_MAX_K {
        let mut coeff = 1.0;
        for i in 0..n.min(k - n) {
            coeff = coeff * (k - i) as f64 / (i + 1) as f64;
        }
        Ok(coeff * lambda.powi(n as i32) * (1.0 - lambda).powi((k - n) as i32))
    } else {
        let m = n.min(k - n);
        let mut ln_c = 0.0;
        for i in 0..m {
            ln_c += ((k - i) as f64 / (i + 1) as f64).ln();
        }
        Ok((ln_c + n as f64 * lambda.ln() + (k - n) as f64 * (1.0 - lambda).ln()).exp())
    }
}

/// Dense thinning kernel on `{0, …, N}`: column k holds the Binomial(k, λ)
/// pmf, so columns sum to one and entries vanish for `k < n`.
#[derive(Debug, Clone)]
pub struct TransitionKernel {
    lambda: f64,
    size: usize,
    /// column-major, `size × size`
    entries: Vec<f64>,
}

impl TransitionKernel {
    pub fn new(lambda: f64, n_max: usize) -> Result<Self> {
        check_lambda(lambda)?;
        if n_max > DENSE_KERNEL_MAX {
            return Err(domain(format!(
                "dense kernel capped at N = {DENSE_KERNEL_MAX}; use thin() for larger supports"
            )));
        }
        let size = n_max + 1;
        let ln_fac = ln_factorials(n_max);
        let mut entries = vec![0.0; size * size];
        for k in 0..size {
            binomial_pmf(k, lambda, &ln_fac, &mut entries[k * size..k * size + k + 1]);
        }
        Ok(Self {
            lambda,
            size,
            entries,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n_max(&self) -> usize {
        self.size - 1
    }

    /// `r_{n|k}`.
    pub fn entry(&self, n: usize, k: usize) -> f64 {
        self.entries[k * self.size + n]
    }

    pub fn column_sum(&self, k: usize) -> f64 {
        self.entries[k * self.size..k * self.size + self.size].iter().sum()
    }

    /// Applies the kernel to a distribution on the same support.
    pub fn apply(&self, p: &ProbVec) -> Result<ProbVec> {
        if p.len() != self.size {
            return Err(domain(format!(
                "kernel is {0}×{0} but distribution has {1} weights",
                self.size,
                p.len()
            )));
        }
        let mut out = vec![0.0; self.size];
        for k in 0..self.size {
            let w = p[k];
            if w == 0.0 {
                continue;
            }
            let col = &self.entries[k * self.size..k * self.size + k + 1];
            for (n, r) in col.iter().enumerate() {
                out[n] += r * w;
            }
        }
        Ok(ProbVec::from_operation_output(out))
    }
}

/// Thins `p` with parameter λ: `[T_λ(p)]ₙ = Σ_{k≥n} r_{n|k} pₖ`. The output
/// lives on the same index range; support never grows.
pub fn thin(p: &ProbVec, lambda: f64) -> Result<ProbVec> {
    check_lambda(lambda)?;
    let n_max = p.n_max();
    let ln_fac = if n_max > DIRECT_MAX_K {
        ln_factorials(n_max)
    } else {
        Vec::new()
    };
    let mut out = vec![0.0; n_max + 1];
    let mut col = vec![0.0; n_max + 1];
    for k in 0..=n_max {
        let w = p[k];
        if w == 0.0 {
            continue;
        }
        binomial_pmf(k, lambda, &ln_fac, &mut col);
        for n in 0..=k {
            out[n] += col[n] * w;
        }
    }
    Ok(ProbVec::from_operation_output(out))
}

/// Maximum entrywise deviation between `T_{λ₁}(T_{λ₂}(p))` and
/// `T_{λ₁·λ₂}(p)`; the semigroup law makes this zero up to rounding.
pub fn composition_deviation(p: &ProbVec, lambda1: f64, lambda2: f64) -> Result<f64> {
    let two_step = thin(&thin(p, lambda2)?, lambda1)?;
    let one_step = thin(p, lambda1 * lambda2)?;
    Ok(two_step
        .weights()
        .iter()
        .zip(one_step.weights())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// One point of the attenuation flow `t ↦ T_{e^{−t}}(p)`.
#[derive(Debug, Clone, Serialize)]
pub struct FlowPoint {
    pub t: f64,
    pub p_t: ProbVec,
    pub entropy: f64,
}

/// Evolves `p` to log-attenuation time `t ≥ 0`, i.e. thins with `λ = e^{−t}`.
pub fn evolve(p: &ProbVec, t: f64) -> Result<FlowPoint> {
    if !t.is_finite() || t < 0.0 {
        return Err(domain(format!("flow time t = {t} must be finite and >= 0")));
    }
    let p_t = thin(p, (-t).exp())?;
    let entropy = p_t.shannon_entropy();
    Ok(FlowPoint { t, p_t, entropy })
}

/// Initial time-derivative of the flow: `p′ₙ(0) = (n+1)·p_{n+1} − n·pₙ`,
/// with `p_{N+1} = 0`. Entries sum to zero.
pub fn flow_derivative(p: &ProbVec) -> Vec<f64> {
    let n_max = p.n_max();
    (0..=n_max)
        .map(|n| {
            let up = if n < n_max { (n + 1) as f64 * p[n + 1] } else { 0.0 };
            up - n as f64 * p[n]
        })
        .collect()
}

fn require_connected(p: &ProbVec) -> Result<SupportProfile> {
    let profile = p.support_profile();
    if !profile.connected {
        let index = (0..=profile.last_positive_index)
            .find(|&i| p[i] == 0.0)
            .expect("disconnected support has an internal zero");
        return Err(Error::DisconnectedSupport { index });
    }
    Ok(profile)
}

/// Entropy production `F(p) = Σ_{n=1}^{N'} n pₙ ln(p_{n−1}/pₙ)`, the rate of
/// entropy decrease of the flow at `t = 0`. Defined only on connected
/// support; nonnegative whenever `p` is non-increasing.
pub fn entropy_production(p: &ProbVec) -> Result<f64> {
    let profile = require_connected(p)?;
    let mut total = 0.0;
    for n in 1..=profile.last_positive_index {
        total += n as f64 * p[n] * (p[n - 1] / p[n]).ln();
    }
    Ok(total)
}

/// Result of checking the isoperimetric inequality `−F(p) ≥ f(H(p))` on one
/// distribution: `slack = F + f(H)` must stay ≤ 0 up to tolerance, with
/// equality for geometric `p`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IsoperimetricCheck {
    #[serde(rename = "F_value")]
    pub f_value: f64,
    #[serde(rename = "f_of_S")]
    pub f_of_entropy: f64,
    pub slack: f64,
}

pub fn isoperimetric_check(p: &ProbVec) -> Result<IsoperimetricCheck> {
    let f_value = entropy_production(p)?;
    let f_of_entropy = entropy_slope_floor(p.shannon_entropy())?;
    Ok(IsoperimetricCheck {
        f_value,
        f_of_entropy,
        slack: f_value + f_of_entropy,
    })
}

/// Empirical thinning: draws `samples` values `k ~ p`, thins each by
/// counting Bernoulli(λ) survivors, and returns the normalized histogram.
/// Sampling is chunked onto independent ChaCha streams keyed by
/// `(seed, chunk)`, so the result is reproducible for a fixed seed no
/// matter how many worker threads run.
pub fn monte_carlo_thin(p: &ProbVec, lambda: f64, samples: u64, seed: u64) -> Result<ProbVec> {
    check_lambda(lambda)?;
    if samples == 0 {
        return Err(domain("samples must be >= 1"));
    }
    let mut cumulative: Vec<f64> = Vec::with_capacity(p.len());
    let mut acc = 0.0;
    for w in p.weights() {
        acc += w;
        cumulative.push(acc);
    }
    *cumulative.last_mut().unwrap() = 1.0;
    let n_max = p.n_max();

    let chunks = samples.div_ceil(MC_CHUNK);
    let histograms: Vec<Vec<u64>> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(chunk + 1);
            let count = MC_CHUNK.min(samples - chunk * MC_CHUNK);
            let mut hist = vec![0u64; n_max + 1];
            for _ in 0..count {
                let u: f64 = rng.random();
                let k = cumulative.partition_point(|&c| c < u).min(n_max);
                let survivors = (0..k).filter(|_| rng.random::<f64>() < lambda).count();
                hist[survivors] += 1;
            }
            hist
        })
        .collect();

    let mut totals = vec![0u64; n_max + 1];
    for hist in histograms {
        for (t, h) in totals.iter_mut().zip(hist) {
            *t += h;
        }
    }
    let weights = totals
        .into_iter()
        .map(|c| c as f64 / samples as f64)
        .collect();
    Ok(ProbVec::from_operation_output(weights))
}

/// Total variation distance `½·Σ|pₙ − qₙ|` between two distributions,
/// zero-padding the shorter one.
pub fn total_variation(p: &ProbVec, q: &ProbVec) -> f64 {
    let len = p.len().max(q.len());
    let get = |v: &ProbVec, i: usize| if i < v.len() { v[i] } else { 0.0 };
    0.5 * (0..len).map(|i| (get(p, i) - get(q, i)).abs()).sum::<f64>()
}
