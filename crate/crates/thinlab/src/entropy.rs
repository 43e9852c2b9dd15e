//! Scalar entropy functions of the thermal (geometric) family and the two
//! lower bounds on attenuated entropy.
//!
//! The geometric distribution with mean `E` has weights
//! `pₙ = (E/(E+1))ⁿ / (E+1)` and Shannon entropy
//!
//! ```text
//! h(E) = (E+1)·ln(E+1) − E·ln E
//! ```
//!
//! ([`thermal_entropy`]). It is strictly increasing and concave, so its
//! inverse [`thermal_energy`] is well defined on `[0, ∞)`. Everything else
//! here is built from that pair:
//!
//! * [`min_output_entropy`]: `h(λ·h⁻¹(S))`, the minimum entropy after
//!   thinning with parameter λ over all inputs of entropy S; geometric
//!   inputs attain it.
//! * [`entropy_power_bound`]: `ln(λ·(e^S − 1) + 1)`, the entropy-power
//!   lower bound; strictly weaker except at λ ∈ {0, 1} or S = 0.
//! * [`entropy_slope_floor`]: `−h⁻¹(S)·h′(h⁻¹(S))`, the minimal slope of
//!   entropy under the attenuation flow λ = e^{−t} at entropy S; always ≤ 0.

use crate::dist::ProbVec;
use crate::error::{check_entropy, check_lambda, domain, Result};

/// Largest entropy for which `e^S` and the bracketing in
/// [`thermal_energy`] stay inside f64 range.
const MAX_ENTROPY: f64 = 700.0;

/// Absolute tolerance on `h(h⁻¹(S)) − S` for the inverse.
const INVERSION_TOL: f64 = 1e-12;

/// Entropy of the thermal (geometric) state with mean energy `E`:
/// `(E+1)·ln(E+1) − E·ln E`, with the limit value 0 at `E = 0`.
///
/// Evaluated as `ln1p(E) + E·ln1p(1/E)` to avoid cancellation near zero.
pub fn thermal_entropy(energy: f64) -> Result<f64> {
    if !energy.is_finite() || energy < 0.0 {
        return Err(domain(format!("energy E = {energy} must be finite and >= 0")));
    }
    if energy == 0.0 {
        return Ok(0.0);
    }
    Ok(energy.ln_1p() + energy * (1.0 / energy).ln_1p())
}

/// Derivative of [`thermal_entropy`]: `ln(1 + 1/E)`. Diverges at `E = 0`.
pub fn thermal_entropy_deriv(energy: f64) -> Result<f64> {
    if !energy.is_finite() || energy <= 0.0 {
        return Err(domain(format!("energy E = {energy} must be > 0 (derivative diverges at 0)")));
    }
    Ok((1.0 / energy).ln_1p())
}

/// Inverse of [`thermal_entropy`]: the mean energy whose thermal state has
/// entropy `S`, to `|h(E) − S| ≤ 1e−12` absolute. Exact at `S = 0`.
///
/// Brackets with `[0, max(1, e^S)]` (valid since `h(E) ≥ ln(E+1)`), then
/// runs bisection-safeguarded Newton; `h` is concave so Newton approaches
/// the root from below once bracketed.
pub fn thermal_energy(entropy: f64) -> Result<f64> {
    check_entropy(entropy)?;
    if entropy == 0.0 {
        return Ok(0.0);
    }
    if entropy > MAX_ENTROPY {
        return Err(domain(format!("entropy S = {entropy} exceeds supported range (≤ {MAX_ENTROPY})")));
    }
    let mut lo = 0.0_f64;
    let mut hi = entropy.exp().max(1.0);
    while thermal_entropy(hi)? < entropy {
        hi *= 2.0; // unreachable in exact arithmetic, guards rounding
    }
    // A few bisection steps tighten the bracket before Newton takes over.
    for _ in 0..20 {
        let mid = 0.5 * (lo + hi);
        if thermal_entropy(mid)? < entropy {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut e = 0.5 * (lo + hi);
    for _ in 0..60 {
        let r = thermal_entropy(e)? - entropy;
        if r.abs() <= INVERSION_TOL {
            return Ok(e);
        }
        if r < 0.0 {
            lo = e;
        } else {
            hi = e;
        }
        let step = r / thermal_entropy_deriv(e.max(f64::MIN_POSITIVE))?;
        let next = e - step;
        e = if next > lo && next < hi {
            next
        } else {
            0.5 * (lo + hi)
        };
    }
    let r = thermal_entropy(e)? - entropy;
    if r.abs() <= INVERSION_TOL {
        Ok(e)
    } else {
        Err(domain(format!(
            "thermal_energy failed to invert S = {entropy}: residual {r:e}"
        )))
    }
}

/// Minimal entropy slope under the attenuation flow at entropy `S`:
/// `−E·ln(1 + 1/E)` with `E = h⁻¹(S)`; 0 at `S = 0` by continuity, and
/// `≤ 0` everywhere.
pub fn entropy_slope_floor(entropy: f64) -> Result<f64> {
    check_entropy(entropy)?;
    if entropy == 0.0 {
        return Ok(0.0);
    }
    let e = thermal_energy(entropy)?;
    Ok(-e * (1.0 / e).ln_1p())
}

/// Thermal (geometric) distribution with mean `E`, truncated at the smallest
/// `N` whose discarded tail mass `(E/(E+1))^{N+1}` falls below
/// `tail_mass_bound`, then renormalized.
pub fn thermal_distribution(energy: f64, tail_mass_bound: f64) -> Result<ProbVec> {
    if !energy.is_finite() || energy < 0.0 {
        return Err(domain(format!("energy E = {energy} must be finite and >= 0")));
    }
    if !(tail_mass_bound > 0.0 && tail_mass_bound < 1.0) {
        return Err(domain(format!(
            "tail_mass_bound = {tail_mass_bound} must lie in (0, 1)"
        )));
    }
    if energy == 0.0 {
        return Ok(ProbVec::delta(0));
    }
    let ratio = energy / (energy + 1.0);
    // (E/(E+1))^{N+1} < bound  =>  N + 1 > ln bound / ln ratio
    let n_max = ((tail_mass_bound.ln() / ratio.ln()).ceil() as usize).max(1) - 1;
    let base = 1.0 / (energy + 1.0);
    let mut weights = Vec::with_capacity(n_max + 1);
    let mut w = base;
    for _ in 0..=n_max {
        weights.push(w);
        w *= ratio;
    }
    ProbVec::renormalized(weights)
}

/// Minimum output entropy of thinning with parameter `lambda` over all
/// inputs with entropy `S`: `h(λ·h⁻¹(S))`.
pub fn min_output_entropy(entropy: f64, lambda: f64) -> Result<f64> {
    check_entropy(entropy)?;
    check_lambda(lambda)?;
    thermal_entropy(lambda * thermal_energy(entropy)?)
}

/// Entropy-power lower bound on the output entropy of thinning:
/// `ln(λ·(e^S − 1) + 1)`.
pub fn entropy_power_bound(entropy: f64, lambda: f64) -> Result<f64> {
    check_entropy(entropy)?;
    check_lambda(lambda)?;
    if entropy > MAX_ENTROPY {
        return Err(domain(format!("entropy S = {entropy} exceeds supported range (≤ {MAX_ENTROPY})")));
    }
    Ok((lambda * entropy.exp_m1()).ln_1p())
}
