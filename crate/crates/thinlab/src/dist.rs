//! Finite discrete probability distributions with entropy, rearrangement,
//! majorization, and truncation.
//!
//! A [`ProbVec`] holds the weights of a distribution on `{0, …, N}`, the
//! diagonal of a photon-number-diagonal state. Construction validates that
//! weights are nonnegative and sum to one within [`NORM_TOL`]; every
//! operation that returns a new distribution preserves that invariant,
//! renormalizing only when floating-point drift exceeds the tolerance.
//!
//! All entropies are in nats, with the convention `0 · ln 0 = 0`.

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{domain, Error, Result};

/// Normalization tolerance on construction and for defensive renormalization.
pub const NORM_TOL: f64 = 1e-12;

/// A probability distribution on `{0, …, N}` with validated weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ProbVec {
    weights: Vec<f64>,
}

/// Support shape of a distribution: whether the positive weights form a
/// prefix `{0, …, N'}`, and where that prefix ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SupportProfile {
    /// True iff `p_n > 0` for `n <= last_positive_index` and `p_n = 0` beyond.
    pub connected: bool,
    /// Largest index with positive weight.
    pub last_positive_index: usize,
}

impl ProbVec {
    /// Builds a distribution from exact weights: nonnegative, summing to one
    /// within [`NORM_TOL`].
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        Self::validate_entries(&weights)?;
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { sum, tol: NORM_TOL });
        }
        Ok(Self { weights })
    }

    /// Builds a distribution from nonnegative weights with arbitrary positive
    /// sum, dividing by the total.
    pub fn renormalized(weights: Vec<f64>) -> Result<Self> {
        Self::validate_entries(&weights)?;
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(domain("weights sum to zero, nothing to normalize"));
        }
        let weights = weights.into_iter().map(|w| w / sum).collect();
        Ok(Self { weights })
    }

    /// Point mass at `index`, supported on `{0, …, index}`.
    pub fn delta(index: usize) -> Self {
        let mut weights = vec![0.0; index + 1];
        weights[index] = 1.0;
        Self { weights }
    }

    /// Wraps the output of an operation that is normalized up to rounding.
    /// Renormalizes only when the drift exceeds [`NORM_TOL`], so exact
    /// results (e.g. thinning at λ = 1) pass through bit-identical.
    pub(crate) fn from_operation_output(weights: Vec<f64>) -> Self {
        debug_assert!(weights.iter().all(|w| *w >= 0.0));
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > NORM_TOL {
            let weights = weights.into_iter().map(|w| w / sum).collect();
            Self { weights }
        } else {
            Self { weights }
        }
    }

    fn validate_entries(weights: &[f64]) -> Result<()> {
        if weights.is_empty() {
            return Err(Error::Empty);
        }
        for (index, &value) in weights.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::NegativeWeight { index, value });
            }
        }
        Ok(())
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Number of weights, `N + 1`.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: at least one weight
    }

    /// Largest support index `N`.
    pub fn n_max(&self) -> usize {
        self.weights.len() - 1
    }

    /// Shannon entropy `−Σ pₙ ln pₙ` in nats, with `0 · ln 0 = 0`.
    pub fn shannon_entropy(&self) -> f64 {
        -self
            .weights
            .iter()
            .filter(|w| **w > 0.0)
            .map(|w| w * w.ln())
            .sum::<f64>()
    }

    /// Mean of the distribution, `Σ n pₙ`.
    pub fn mean(&self) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(n, w)| n as f64 * w)
            .sum()
    }

    /// Weights sorted in non-increasing order: the passive rearrangement.
    /// Entropy-preserving and idempotent.
    pub fn passive_rearrange(&self) -> ProbVec {
        let mut weights = self.weights.clone();
        weights.sort_by(|a, b| b.total_cmp(a));
        ProbVec { weights }
    }

    /// True iff `self` majorizes `other`: for every k, the sum of the k+1
    /// largest weights of `self` dominates the corresponding sum of `other`
    /// (within [`NORM_TOL`] on partial sums). Shorter vectors are zero-padded.
    pub fn majorizes(&self, other: &ProbVec) -> bool {
        let len = self.len().max(other.len());
        let sorted = |p: &ProbVec| {
            let mut w = p.weights.clone();
            w.resize(len, 0.0);
            w.sort_by(|a, b| b.total_cmp(a));
            w
        };
        let a = sorted(self);
        let b = sorted(other);
        let mut sum_a = 0.0;
        let mut sum_b = 0.0;
        for k in 0..len {
            sum_a += a[k];
            sum_b += b[k];
            if sum_a < sum_b - NORM_TOL {
                return false;
            }
        }
        true
    }

    /// Keeps indices `0..=n_keep` and renormalizes. Requires non-increasing
    /// weights; the result majorizes the input and its entropy never
    /// exceeds the input's.
    pub fn truncate_renormalize(&self, n_keep: usize) -> Result<ProbVec> {
        if n_keep > self.n_max() {
            return Err(domain(format!(
                "n_keep = {n_keep} exceeds max index {}",
                self.n_max()
            )));
        }
        if let Some(i) = (1..self.len()).find(|&i| self.weights[i] > self.weights[i - 1]) {
            return Err(domain(format!(
                "weights must be non-increasing (rise at index {i}); apply passive_rearrange first"
            )));
        }
        let kept = &self.weights[..=n_keep];
        let sum: f64 = kept.iter().sum();
        if sum <= 0.0 {
            return Err(domain("all kept mass is zero"));
        }
        Ok(ProbVec {
            weights: kept.iter().map(|w| w / sum).collect(),
        })
    }

    /// Classifies the support: connected means the positive weights form a
    /// prefix of `{0, …, N}`.
    pub fn support_profile(&self) -> SupportProfile {
        let last_positive_index = self
            .weights
            .iter()
            .rposition(|w| *w > 0.0)
            .expect("normalized distribution has positive mass");
        let connected = self.weights[..=last_positive_index]
            .iter()
            .all(|w| *w > 0.0);
        SupportProfile {
            connected,
            last_positive_index,
        }
    }
}

impl std::ops::Index<usize> for ProbVec {
    type Output = f64;
    fn index(&self, index: usize) -> &f64 {
        &self.weights[index]
    }
}

impl<'de> Deserialize<'de> for ProbVec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let weights = Vec::<f64>::deserialize(deserializer)?;
        ProbVec::new(weights).map_err(serde::de::Error::custom)
    }
}
