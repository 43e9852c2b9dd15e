//! Entropy-constrained maximizers of the entropy-production functional.
//!
//! For fixed entropy `S` and support `{0, …, N}`, the maximizer of
//! `F(p) = Σ n pₙ ln(p_{n−1}/pₙ)` over decreasing distributions satisfies a
//! stationarity system whose consecutive differences close into a recursion
//! on the ratios `zₙ = p_{n+1}/pₙ`:
//!
//! ```text
//! (n+2)·z_{n+1} = (n+2)·zₙ + 1 − zₙ + (1−µ)·ln zₙ + n·ln(zₙ/z_{n−1})
//! ```
//!
//! with `z` decreasing and `z_N = 0` ([`ratio_step`], [`shoot`]). Feasible
//! trajectories separate cleanly: if `1−µ < (z₀−1)/ln z₀` the sequence
//! increases, otherwise it decreases and eventually crashes through zero,
//! so both the multiplier µ and the launch ratio z₀ are bisectable
//! ([`solve_extremal`]). The shot seeds a damped Newton iteration on the
//! full stationarity + normalization + entropy system in log-weight
//! variables, which restores the residual lost to the shot's sensitivity
//! (perturbations of z₀ grow like `p₀/p_N` along the trajectory, so beyond
//! roughly `28/(−ln z)` steps the raw shot cannot pin the terminal ratio).
//! For such long supports the Newton initial guess splices the shot's
//! quasi-fixed-point plateau with the dive tail of a shorter reference
//! solution; the tail profile is numerically N-independent.
//!
//! As `N → ∞` the solution flattens to the geometric profile
//! `pₙ = (1−z)zⁿ` with `z = E/(E+1)`, `E` the thermal energy of `S`
//! ([`asymptotic_profile`]), and `F_N` increases to `−f(S)`
//! ([`convergence_study`]).

use rayon::prelude::*;
use serde::Serialize;

use crate::attenuator::entropy_production;
use crate::dist::ProbVec;
use crate::entropy::{entropy_slope_floor, thermal_distribution, thermal_energy};
use crate::error::{check_entropy, domain, Error, Result};

const BISECT_ITERS: usize = 200;
/// Relative slack before a rising ratio is classified as the increase
/// branch; keeps rounding-level wiggles on the quasi-fixed-point plateau
/// from ending a shot early.
const MONO_SLACK: f64 = 1e-9;
const NEWTON_MAX_ITERS: usize = 60;
const NEWTON_TARGET: f64 = 1e-11;
/// Contract on the reported stationarity residual.
const RESIDUAL_CONTRACT: f64 = 1e-6;
/// Ratios taken from the reference solution when splicing a long guess.
const SPLICE_TAIL_LEN: usize = 20;

/// `(z−1)/ln z`, extended by continuity to 1 at `z = 1`; the threshold the
/// multiplier bound compares against. Increasing on (0, 1].
fn bound_ratio(z: f64) -> f64 {
    if z == 1.0 {
        1.0
    } else {
        (z - 1.0) / z.ln()
    }
}

/// One step of the ratio recursion. The `n·ln(zₙ/z_{n−1})` term is absent
/// at `n = 0` (its coefficient vanishes), so `z_prev` is ignored there.
/// The result may be negative or exceed the current ratio; callers classify.
pub fn ratio_step(z_prev: f64, z_curr: f64, n: usize, mu: f64) -> Result<f64> {
    if !(z_curr > 0.0) {
        return Err(domain(format!("ratio z_{n} = {z_curr} must be positive")));
    }
    if n > 0 && !(z_prev > 0.0) {
        return Err(domain(format!("ratio z_{} = {z_prev} must be positive", n - 1)));
    }
    let mut t = (n as f64 + 2.0) * z_curr + 1.0 - z_curr + (1.0 - mu) * z_curr.ln();
    if n > 0 {
        t += n as f64 * (z_curr / z_prev).ln();
    }
    Ok(t / (n as f64 + 2.0))
}

/// How a shot of the ratio recursion ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ShotOutcome {
    /// The ratio fell to zero or below at `step`.
    HitZero { step: usize },
    /// The ratio rose at `step`: the multiplier is too large relative to
    /// the launch bound, the dichotomy's contradiction branch.
    Increase { step: usize },
    /// Reached index `n_max` with all ratios positive and non-increasing.
    Completed,
}

/// A trajectory of the ratio recursion with its classification.
#[derive(Debug, Clone, Serialize)]
pub struct Shot {
    /// `z₀ … z_k` up to and including the terminating value.
    pub ratios: Vec<f64>,
    pub outcome: ShotOutcome,
}

/// Runs the recursion from `z₀ ∈ (0, 1)` for at most `n_max` steps.
pub fn shoot(z0: f64, mu: f64, n_max: usize) -> Shot {
    assert!(
        z0 > 0.0 && z0 < 1.0,
        "launch ratio z0 = {z0} must lie in (0, 1)"
    );
    let mut ratios = Vec::with_capacity(n_max + 1);
    ratios.push(z0);
    for n in 0..n_max {
        let prev = if n > 0 { ratios[n - 1] } else { z0 };
        let next = ratio_step(prev, ratios[n], n, mu).expect("positive by loop invariant");
        ratios.push(next);
        if next <= 0.0 {
            return Shot {
                ratios,
                outcome: ShotOutcome::HitZero { step: n + 1 },
            };
        }
        if next > ratios[n] * (1.0 + MONO_SLACK) + 1e-15 {
            return Shot {
                ratios,
                outcome: ShotOutcome::Increase { step: n + 1 },
            };
        }
    }
    Shot {
        ratios,
        outcome: ShotOutcome::Completed,
    }
}

/// Extremal distribution for one `(S, N)` pair: the ratio sequence, the
/// reconstructed weights, the multipliers, and the achieved objective.
#[derive(Debug, Clone, Serialize)]
pub struct KktSolution {
    #[serde(rename = "S_target")]
    pub s_target: f64,
    #[serde(rename = "N")]
    pub n: usize,
    /// Ratios `z₀ … z_N`, non-increasing with `z_N = 0`.
    pub z: Vec<f64>,
    pub p: ProbVec,
    /// Entropy multiplier µ_N.
    pub mu: f64,
    /// Normalization multiplier λ_N, recovered from the n = 0 stationarity
    /// equation once p and µ are fixed.
    pub lambda_mult: f64,
    #[serde(rename = "F_value")]
    pub f_value: f64,
    pub entropy_achieved: f64,
    /// Largest stationarity violation across n = 0…N.
    pub residual: f64,
    /// Total recursion and polish iterations spent.
    pub iterations: u64,
}

enum InnerOutcome {
    /// Survived-side shot at the crash boundary.
    Feasible { z0: f64, shot: Shot },
    /// Even a vanishing launch ratio survives: µ too large (entropy side ≈ 0).
    MuTooHigh,
    /// Even a launch ratio near 1 crashes early: µ too small.
    MuTooLow,
}

/// Bisects the launch ratio at fixed µ to the boundary between trajectories
/// that crash by step `n` and trajectories that survive it.
fn inner_bisect(mu: f64, n: usize, shots_fired: &mut u64) -> InnerOutcome {
    let survives = |z0: f64, counter: &mut u64| {
        *counter += 1;
        !matches!(shoot(z0, mu, n).outcome, ShotOutcome::HitZero { .. })
    };
    let mut lo = 1e-15;
    let mut hi = 1.0 - 1e-15;
    if survives(lo, shots_fired) {
        return InnerOutcome::MuTooHigh;
    }
    if !survives(hi, shots_fired) {
        return InnerOutcome::MuTooLow;
    }
    for _ in 0..BISECT_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if survives(mid, shots_fired) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    *shots_fired += 1;
    InnerOutcome::Feasible {
        z0: hi,
        shot: shoot(hi, mu, n),
    }
}

/// Positive usable prefix of a shot's ratio sequence.
fn positive_prefix(shot: &Shot, n: usize) -> &[f64] {
    match shot.outcome {
        ShotOutcome::Completed => &shot.ratios[..n],
        ShotOutcome::Increase { step } => &shot.ratios[..step],
        ShotOutcome::HitZero { step } => &shot.ratios[..step],
    }
}

/// Full-length ratio guess: the shot directly when it ran the distance,
/// otherwise its plateau value spliced with a reference dive tail.
fn guess_ratios(prefix: &[f64], n: usize, ref_tail: Option<&[f64]>) -> Vec<f64> {
    if prefix.len() >= n {
        return prefix[..n].to_vec();
    }
    let plateau = prefix[prefix.len() / 3];
    let tail = ref_tail.unwrap_or(&[]);
    let m = tail.len();
    (0..n)
        .map(|i| {
            let from_end = n - 1 - i;
            if from_end < m {
                plateau.min(tail[m - 1 - from_end])
            } else {
                plateau
            }
        })
        .collect()
}

/// Normalized log-weights from positive ratios: `wₙ = ln pₙ`.
fn log_weights(ratios: &[f64]) -> Vec<f64> {
    let mut w = Vec::with_capacity(ratios.len() + 1);
    w.push(0.0);
    for (i, z) in ratios.iter().enumerate() {
        w.push(w[i] + z.ln());
    }
    let max = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + w.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
    for x in &mut w {
        *x -= lse;
    }
    w
}

fn entropy_of_log_weights(w: &[f64]) -> f64 {
    -w.iter().map(|&x| x * x.exp()).sum::<f64>()
}

/// Stationarity + normalization + entropy residuals at `(w, µ, λ)`.
/// `g` has `n + 3` entries: stationarity rows 0…n, then Σp − 1, then H − S.
fn kkt_residuals(w: &[f64], mu: f64, lam: f64, s: f64, g: &mut [f64]) {
    let n = w.len() - 1;
    for idx in 0..=n {
        let mut r = -(idx as f64) + mu * (w[idx] + 1.0) - lam;
        if idx > 0 {
            r += idx as f64 * (w[idx - 1] - w[idx]);
        }
        if idx < n {
            r += (idx as f64 + 1.0) * (w[idx + 1] - w[idx]).exp();
        }
        g[idx] = r;
    }
    g[n + 1] = w.iter().map(|x| x.exp()).sum::<f64>() - 1.0;
    g[n + 2] = entropy_of_log_weights(w) - s;
}

/// In-place dense solve with partial pivoting. Returns false on a
/// numerically singular system.
fn solve_linear(a: &mut [f64], b: &mut [f64], dim: usize) -> bool {
    for col in 0..dim {
        let mut pivot = col;
        let mut best = a[col * dim + col].abs();
        for row in col + 1..dim {
            let v = a[row * dim + col].abs();
            if v > best {
                best = v;
                pivot = row;
            }
        }
        if best < 1e-300 {
            return false;
        }
        if pivot != col {
            for c in 0..dim {
                a.swap(col * dim + c, pivot * dim + c);
            }
            b.swap(col, pivot);
        }
        let diag = a[col * dim + col];
        for row in col + 1..dim {
            let factor = a[row * dim + col] / diag;
            if factor == 0.0 {
                continue;
            }
            for c in col..dim {
                a[row * dim + c] -= factor * a[col * dim + c];
            }
            b[row] -= factor * b[col];
        }
    }
    for col in (0..dim).rev() {
        let mut v = b[col];
        for c in col + 1..dim {
            v -= a[col * dim + c] * b[c];
        }
        b[col] = v / a[col * dim + col];
    }
    true
}

struct Polished {
    w: Vec<f64>,
    mu: f64,
    lam: f64,
    iterations: u64,
}

/// Damped Newton on the full KKT system in log-weight variables. Steps are
/// capped in sup-norm; log-space keeps weights positive and handles tails
/// far below f64's linear range.
fn newton_polish(w0: &[f64], mu0: f64, lam0: f64, s: f64) -> Result<Polished> {
    let n = w0.len() - 1;
    let dim = n + 3;
    let mut w = w0.to_vec();
    let mut mu = mu0;
    let mut lam = lam0;
    let mut g = vec![0.0; dim];
    let mut best: Option<(Vec<f64>, f64, f64, f64)> = None;
    let mut iterations = 0u64;

    for _ in 0..NEWTON_MAX_ITERS {
        kkt_residuals(&w, mu, lam, s, &mut g);
        let res = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if best.as_ref().is_none_or(|(_, _, _, b)| res < *b) {
            best = Some((w.clone(), mu, lam, res));
        }
        if res <= NEWTON_TARGET {
            break;
        }
        iterations += 1;

        let mut jac = vec![0.0; dim * dim];
        for idx in 0..=n {
            let row = idx * dim;
            if idx > 0 {
                jac[row + idx - 1] = idx as f64;
            }
            let z = if idx < n {
                (w[idx + 1] - w[idx]).exp()
            } else {
                0.0
            };
            jac[row + idx] = mu - idx as f64 - (idx as f64 + 1.0) * z;
            if idx < n {
                jac[row + idx + 1] = (idx as f64 + 1.0) * z;
            }
            jac[row + n + 1] = w[idx] + 1.0;
            jac[row + n + 2] = -1.0;
        }
        for j in 0..=n {
            let p = w[j].exp();
            jac[(n + 1) * dim + j] = p;
            jac[(n + 2) * dim + j] = -(1.0 + w[j]) * p;
        }

        let mut rhs: Vec<f64> = g.iter().map(|x| -x).collect();
        if !solve_linear(&mut jac, &mut rhs, dim) {
            break;
        }
        let step_norm = rhs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let scale = if step_norm > 3.0 { 3.0 / step_norm } else { 1.0 };
        for (i, wi) in w.iter_mut().enumerate() {
            *wi += scale * rhs[i];
        }
        mu += scale * rhs[n + 1];
        lam += scale * rhs[n + 2];
    }

    let (w, mu, lam, res) = best.expect("at least one Newton evaluation");
    if res > 1e-8 {
        return Err(Error::NoConvergence(format!(
            "Newton polish stalled at residual {res:e} (N = {n}, S = {s})"
        )));
    }
    Ok(Polished {
        w,
        mu,
        lam,
        iterations,
    })
}

/// Steps the shot can resolve before its sensitivity (growing like 1/z per
/// step) exhausts f64; beyond this the Newton guess is spliced.
fn shooting_horizon(z_asym: f64) -> usize {
    let steps = 28.0 / (-z_asym.ln()).max(1e-3);
    (steps.floor() as usize).clamp(6, 44)
}

fn delta_solution(s_target: f64, n: usize) -> KktSolution {
    let mut weights = vec![0.0; n + 1];
    weights[0] = 1.0;
    KktSolution {
        s_target,
        n,
        z: vec![0.0; n + 1],
        p: ProbVec::new(weights).expect("point mass is valid"),
        mu: 1.0,
        lambda_mult: 1.0,
        f_value: 0.0,
        entropy_achieved: 0.0,
        residual: 0.0,
        iterations: 0,
    }
}

/// Maximizes `F` over decreasing distributions on `{0, …, N}` with entropy
/// `S` (matched within `tol`). Outer bisection runs on the multiplier µ,
/// inner bisection on the launch ratio z₀, classifying shots by the
/// increase/crash dichotomy; a Newton polish then drives the stationarity
/// residual to rounding level.
pub fn solve_extremal(s_target: f64, n: usize, tol: f64) -> Result<KktSolution> {
    check_entropy(s_target)?;
    if n == 0 {
        return Err(domain("support must have N >= 1"));
    }
    if !(tol > 0.0) {
        return Err(domain(format!("tolerance {tol} must be positive")));
    }
    if s_target == 0.0 {
        return Ok(delta_solution(s_target, n));
    }
    let max_entropy = ((n + 1) as f64).ln();
    if s_target > max_entropy {
        return Err(Error::InfeasibleEntropy {
            entropy: s_target,
            atoms: n + 1,
            max: max_entropy,
        });
    }

    let energy = thermal_energy(s_target)?;
    let z_asym = energy / (energy + 1.0);
    let horizon = shooting_horizon(z_asym);
    let ref_tail: Option<Vec<f64>> = if n > horizon {
        let needed = (s_target + 0.05).exp().ceil() as usize;
        let n_ref = horizon.max(needed).min(n - 1);
        let reference = solve_extremal(s_target, n_ref, tol)?;
        let start = n_ref.saturating_sub(SPLICE_TAIL_LEN);
        Some(reference.z[start..n_ref].to_vec())
    } else {
        None
    };

    let mut shots_fired = 0u64;
    struct Candidate {
        u: f64,
        z0: f64,
        guess: Vec<f64>,
        s_est: f64,
    }
    enum Eval {
        At(Candidate),
        TooSmall,
        TooBig,
    }
    let evaluate = |u: f64, shots: &mut u64| -> Eval {
        match inner_bisect(1.0 - u, n, shots) {
            InnerOutcome::MuTooHigh => Eval::TooSmall,
            InnerOutcome::MuTooLow => Eval::TooBig,
            InnerOutcome::Feasible { z0, shot } => {
                let guess = guess_ratios(positive_prefix(&shot, n), n, ref_tail.as_deref());
                let s_est = entropy_of_log_weights(&log_weights(&guess));
                Eval::At(Candidate {
                    u,
                    z0,
                    guess,
                    s_est,
                })
            }
        }
    };

    let u_center = bound_ratio(z_asym).max(1e-6);
    let mut lo = u_center;
    let mut found_lo = false;
    for _ in 0..BISECT_ITERS {
        match evaluate(lo, &mut shots_fired) {
            Eval::TooSmall => {
                found_lo = true;
                break;
            }
            Eval::At(c) if c.s_est <= s_target => {
                found_lo = true;
                break;
            }
            _ => lo /= 1.5,
        }
    }
    let mut hi = u_center;
    let mut found_hi = false;
    for _ in 0..BISECT_ITERS {
        match evaluate(hi, &mut shots_fired) {
            Eval::TooBig => {
                found_hi = true;
                break;
            }
            Eval::At(c) if c.s_est >= s_target => {
                found_hi = true;
                break;
            }
            _ => hi *= 1.5,
        }
    }
    if !found_lo || !found_hi {
        return Err(Error::NoConvergence(format!(
            "could not bracket the entropy target S = {s_target} on N = {n} \
             (multiplier scan over 1−µ ∈ [{lo:e}, {hi:e}]); the target may sit \
             at the max-entropy boundary ln(N+1) = {max_entropy}"
        )));
    }

    let mut best: Option<Candidate> = None;
    for _ in 0..BISECT_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        match evaluate(mid, &mut shots_fired) {
            Eval::TooSmall => lo = mid,
            Eval::TooBig => hi = mid,
            Eval::At(c) => {
                let err = (c.s_est - s_target).abs();
                let improved = best
                    .as_ref()
                    .is_none_or(|b| err < (b.s_est - s_target).abs());
                let below = c.s_est < s_target;
                if improved {
                    best = Some(c);
                }
                if err <= 0.01 * tol {
                    break;
                }
                if below {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
    }
    let seed = best.ok_or_else(|| {
        Error::NoConvergence(format!(
            "no feasible shot while bisecting µ for S = {s_target}, N = {n}"
        ))
    })?;

    let w0 = log_weights(&seed.guess);
    let mu0 = 1.0 - seed.u;
    let lam0 = seed.z0 + mu0 * (w0[0] + 1.0);
    let polished = newton_polish(&w0, mu0, lam0, s_target)?;
    let iterations = shots_fired + polished.iterations;
    package_solution(s_target, n, tol, polished, iterations)
}

fn package_solution(
    s_target: f64,
    n: usize,
    tol: f64,
    polished: Polished,
    iterations: u64,
) -> Result<KktSolution> {
    let Polished { w, mu, lam, .. } = polished;
    let entropy_achieved = entropy_of_log_weights(&w);
    if (entropy_achieved - s_target).abs() > tol {
        return Err(Error::NoConvergence(format!(
            "entropy matched to {:e}, worse than tol {tol:e}",
            (entropy_achieved - s_target).abs()
        )));
    }
    let mut g = vec![0.0; n + 3];
    kkt_residuals(&w, mu, lam, s_target, &mut g);
    let residual = g[..=n].iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if residual > RESIDUAL_CONTRACT {
        return Err(Error::NoConvergence(format!(
            "stationarity residual {residual:e} exceeds {RESIDUAL_CONTRACT:e}"
        )));
    }

    let mut z: Vec<f64> = (0..n).map(|i| (w[i + 1] - w[i]).exp()).collect();
    z.push(0.0);
    if z[0] > 1.0 + 1e-12 {
        return Err(Error::NoConvergence(format!(
            "leading ratio z0 = {} exceeds 1: not a decreasing distribution",
            z[0]
        )));
    }
    for i in 0..n.saturating_sub(1) {
        if z[i + 1] > z[i] * (1.0 + MONO_SLACK) + 1e-12 {
            return Err(Error::NoConvergence(format!(
                "ratio sequence rises at index {i}: z = {} -> {}",
                z[i],
                z[i + 1]
            )));
        }
    }
    if z[0] < 1.0 {
        let bound = bound_ratio(z[0]);
        if 1.0 - mu < bound - 1e-9 {
            return Err(Error::NoConvergence(format!(
                "multiplier bound violated: 1−µ = {} < (z₀−1)/ln z₀ = {bound}",
                1.0 - mu
            )));
        }
    }

    let f_value = (1..=n)
        .map(|i| i as f64 * w[i].exp() * (w[i - 1] - w[i]))
        .sum::<f64>();
    let p = ProbVec::from_operation_output(w.iter().map(|x| x.exp()).collect());
    Ok(KktSolution {
        s_target,
        n,
        z,
        p,
        mu,
        lambda_mult: lam,
        f_value,
        entropy_achieved,
        residual,
        iterations,
    })
}

/// Brute-force oracle for small supports: decreasing distributions are
/// parameterized by their ratio vector, the entropy constraint is resolved
/// by bisection on z₀ (the distribution spreads monotonically in z₀), and
/// the remaining ratios are gridded then polished by one round of
/// golden-section coordinate descent.
#[derive(Debug, Clone, Serialize)]
pub struct BruteForceResult {
    pub p: ProbVec,
    pub f_max: f64,
}

const BRUTE_GRID: usize = 200;

fn weights_from_ratios(ratios: &[f64]) -> Vec<f64> {
    let w = log_weights(ratios);
    w.iter().map(|x| x.exp()).collect()
}

fn entropy_of_ratios(ratios: &[f64]) -> f64 {
    entropy_of_log_weights(&log_weights(ratios))
}

fn f_of_weights(p: &[f64]) -> f64 {
    (1..p.len())
        .filter(|&i| p[i] > 0.0)
        .map(|i| i as f64 * p[i] * (p[i - 1] / p[i]).ln())
        .sum()
}

/// Solves H(p(z₀, rest)) = S for z₀ ∈ (0, 1], or None when even z₀ = 1
/// cannot reach S.
fn solve_leading_ratio(rest: &[f64], s: f64) -> Option<f64> {
    let entropy_at = |z0: f64| {
        let mut ratios = Vec::with_capacity(rest.len() + 1);
        ratios.push(z0);
        ratios.extend_from_slice(rest);
        entropy_of_ratios(&ratios)
    };
    if entropy_at(1.0) < s {
        return None;
    }
    let mut lo = 1e-14;
    let mut hi = 1.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if entropy_at(mid) < s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

pub fn brute_force_extremal(s: f64, n: usize) -> Result<BruteForceResult> {
    check_entropy(s)?;
    if n == 0 || n > 4 {
        return Err(domain(format!(
            "brute force supports 1 <= N <= 4 (cost grows as grid^N), got {n}"
        )));
    }
    let max_entropy = ((n + 1) as f64).ln();
    if s > max_entropy {
        return Err(Error::InfeasibleEntropy {
            entropy: s,
            atoms: n + 1,
            max: max_entropy,
        });
    }
    if s == 0.0 {
        return Ok(BruteForceResult {
            p: ProbVec::delta(0),
            f_max: 0.0,
        });
    }

    let evaluate = |rest: &[f64]| -> Option<(f64, Vec<f64>)> {
        let z0 = solve_leading_ratio(rest, s)?;
        let mut ratios = Vec::with_capacity(rest.len() + 1);
        ratios.push(z0);
        ratios.extend_from_slice(rest);
        let p = weights_from_ratios(&ratios);
        Some((f_of_weights(&p), ratios))
    };

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut rest = vec![0.0; n - 1];
    let mut index = vec![0usize; n - 1];
    loop {
        for (r, &i) in rest.iter_mut().zip(&index) {
            *r = (i + 1) as f64 / BRUTE_GRID as f64;
        }
        if let Some((f, ratios)) = evaluate(&rest) {
            if best.as_ref().is_none_or(|(bf, _)| f > *bf) {
                best = Some((f, ratios));
            }
        }
        // odometer over the grid
        let mut carry = 0;
        loop {
            if carry == index.len() {
                break;
            }
            index[carry] += 1;
            if index[carry] < BRUTE_GRID {
                break;
            }
            index[carry] = 0;
            carry += 1;
        }
        if carry == index.len() {
            break;
        }
        if index.is_empty() {
            break;
        }
    }

    let (mut f_best, mut ratios) = best.ok_or_else(|| {
        Error::NoConvergence(format!(
            "brute force found no decreasing distribution with entropy {s} on N = {n}"
        ))
    })?;

    // one round of golden-section coordinate descent on the free ratios
    let golden = 0.381_966_011_250_105_1;
    for coord in 1..n {
        let window = 2.0 / BRUTE_GRID as f64;
        let mut a = (ratios[coord] - window).max(1e-6);
        let mut b = (ratios[coord] + window).min(1.0);
        let value = |zc: f64, ratios: &[f64]| -> f64 {
            let mut rest: Vec<f64> = ratios[1..].to_vec();
            rest[coord - 1] = zc;
            evaluate(&rest).map_or(-1.0, |(f, _)| f)
        };
        for _ in 0..70 {
            let m1 = a + golden * (b - a);
            let m2 = b - golden * (b - a);
            if value(m1, &ratios) < value(m2, &ratios) {
                a = m1;
            } else {
                b = m2;
            }
        }
        let zc = 0.5 * (a + b);
        let mut rest: Vec<f64> = ratios[1..].to_vec();
        rest[coord - 1] = zc;
        if let Some((f, new_ratios)) = evaluate(&rest) {
            if f > f_best {
                f_best = f;
                ratios = new_ratios;
            }
        }
    }

    let p = ProbVec::from_operation_output(weights_from_ratios(&ratios));
    // report F through the production functional for consistency
    let f_max = entropy_production(&p).unwrap_or(f_best);
    Ok(BruteForceResult { p, f_max })
}

/// Limit shape of the extremal family as `N → ∞`: the geometric profile
/// `pₙ = (1−z)zⁿ` with `z = E/(E+1)` and `E` the thermal energy of `S`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AsymptoticProfile {
    pub z_limit: f64,
    pub energy: f64,
}

impl AsymptoticProfile {
    /// Materializes the geometric profile truncated to tail mass below
    /// `tail_mass_bound`; its entropy equals the target S of
    /// [`asymptotic_profile`] up to truncation.
    pub fn profile(&self, tail_mass_bound: f64) -> Result<ProbVec> {
        thermal_distribution(self.energy, tail_mass_bound)
    }
}

pub fn asymptotic_profile(s: f64) -> Result<AsymptoticProfile> {
    check_entropy(s)?;
    let energy = thermal_energy(s)?;
    Ok(AsymptoticProfile {
        z_limit: energy / (energy + 1.0),
        energy,
    })
}

/// One row of a convergence study; failed rows carry the error text and NaN
/// numeric fields.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub f_n: f64,
    pub gap: f64,
    pub residual: f64,
    pub iterations: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceStudy {
    pub s_target: f64,
    /// The limit value `−f(S)` the objective increases toward.
    pub minus_f_s: f64,
    pub rows: Vec<ConvergenceRow>,
}

/// Runs [`solve_extremal`] per support size; rows are independent and run
/// on worker threads with deterministic per-row results.
pub fn convergence_study(s: f64, n_list: &[usize], tol: f64) -> Result<ConvergenceStudy> {
    check_entropy(s)?;
    if n_list.is_empty() {
        return Err(domain("empty N list"));
    }
    let minus_f_s = -entropy_slope_floor(s)?;
    let rows: Vec<ConvergenceRow> = n_list
        .par_iter()
        .map(|&n| match solve_extremal(s, n, tol) {
            Ok(sol) => ConvergenceRow {
                n,
                f_n: sol.f_value,
                gap: minus_f_s - sol.f_value,
                residual: sol.residual,
                iterations: sol.iterations,
                error: None,
            },
            Err(e) => ConvergenceRow {
                n,
                f_n: f64::NAN,
                gap: f64::NAN,
                residual: f64::NAN,
                iterations: 0,
                error: Some(e.to_string()),
            },
        })
        .collect();
    Ok(ConvergenceStudy {
        s_target: s,
        minus_f_s,
        rows,
    })
}

impl ConvergenceStudy {
    pub const CSV_HEADER: &'static str = "N,F_N,minus_f_S,gap,residual,iterations";

    pub fn csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                row.n, row.f_n, self.minus_f_s, row.gap, row.residual, row.iterations
            ));
        }
        out
    }

    /// Checks that the objective is non-decreasing in N over successful
    /// rows and never exceeds the limit `−f(S)` beyond tolerance.
    pub fn validate(&self) -> Result<()> {
        let mut prev: Option<(usize, f64)> = None;
        for row in &self.rows {
            if row.error.is_some() {
                continue;
            }
            if row.f_n > self.minus_f_s + 1e-8 {
                return Err(Error::NoConvergence(format!(
                    "F_{} = {} exceeds the limit {}",
                    row.n, row.f_n, self.minus_f_s
                )));
            }
            if let Some((pn, pf)) = prev {
                if row.n > pn && row.f_n < pf - 1e-12 {
                    return Err(Error::NoConvergence(format!(
                        "F_N decreased from {pf} (N = {pn}) to {} (N = {})",
                        row.f_n, row.n
                    )));
                }
            }
            prev = Some((row.n, row.f_n));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    const G_ONE: f64 = 2.0 * LN_2;
    const G_HALF: f64 = 0.9547712524422192;

    #[test]
    fn ratio_step_fixed_point() {
        for z in [0.3, 0.5, 0.9] {
            let mu = 1.0 - bound_ratio(z);
            for n in 0..6 {
                let next = ratio_step(z, z, n, mu).unwrap();
                assert!(
                    (next - z).abs() < 1e-14,
                    "fixed point drifts at z = {z}, n = {n}: {next}"
                );
            }
        }
    }

    #[test]
    fn ratio_step_unit_ratios_stay_unit() {
        let next = ratio_step(1.0, 1.0, 3, 1.0).unwrap();
        assert_eq!(next, 1.0);
    }

    #[test]
    fn ratio_step_rejects_nonpositive() {
        assert!(ratio_step(0.5, 0.0, 1, 0.5).is_err());
        assert!(ratio_step(0.0, 0.5, 2, 0.5).is_err());
    }

    #[test]
    fn ratio_step_output_is_finite() {
        for &z_prev in &[1e-9, 0.2, 0.7, 1.0] {
            for &z_curr in &[1e-9, 0.3, 0.9, 1.0] {
                for &mu in &[-5.0, 0.0, 0.9, 1.0] {
                    for n in 0..8 {
                        let out = ratio_step(z_prev, z_curr, n, mu).unwrap();
                        assert!(out.is_finite(), "non-finite step at z={z_curr}, mu={mu}, n={n}");
                    }
                }
            }
        }
    }

    #[test]
    fn shoot_classifies_dichotomy() {
        // µ above the launch bound: the contradiction branch, z increases
        let mu_crit = 1.0 - bound_ratio(0.5);
        let shot = shoot(0.5, mu_crit + 0.05, 20);
        assert!(
            matches!(shot.outcome, ShotOutcome::Increase { .. }),
            "got {:?}",
            shot.outcome
        );

        // at the fixed point the sequence is constant and completes
        let shot = shoot(0.5, mu_crit, 12);
        assert_eq!(shot.outcome, ShotOutcome::Completed);
        for z in &shot.ratios {
            assert!((z - 0.5).abs() < 1e-9, "plateau drifted: {z}");
        }

        // below the fixed point the sequence crashes
        let shot = shoot(0.3, mu_crit, 20);
        assert_eq!(shot.outcome, ShotOutcome::HitZero { step: 2 });
    }

    #[test]
    fn shoot_regression_fixture() {
        // frozen from a direct run: z₁ = 1e−6 + (1 − 1e−6 + ln 1e−6)/2
        let shot = shoot(1e-6, 0.0, 10);
        assert_eq!(shot.outcome, ShotOutcome::HitZero { step: 1 });
        assert!(
            (shot.ratios[1] - (-6.407754778982137)).abs() < 1e-12,
            "z1 = {}",
            shot.ratios[1]
        );

        // with µ = 1 the log term vanishes and the same launch increases
        let shot = shoot(1e-6, 1.0, 10);
        assert_eq!(shot.outcome, ShotOutcome::Increase { step: 1 });
        assert!((shot.ratios[1] - 0.5000005).abs() < 1e-9);
    }

    #[test]
    fn solver_matches_brute_force_n1() {
        let sol = solve_extremal(0.5, 1, 1e-8).unwrap();
        let oracle = brute_force_extremal(0.5, 1).unwrap();
        assert!(
            (sol.f_value - oracle.f_max).abs() < 1e-8,
            "solver {} vs oracle {}",
            sol.f_value,
            oracle.f_max
        );
        assert!(sol.residual <= 1e-6);
        assert_eq!(sol.z.last(), Some(&0.0));
    }

    #[test]
    fn solver_matches_brute_force_small_n() {
        for (s, n) in [(0.5, 2), (G_HALF, 2), (G_HALF, 3)] {
            let sol = solve_extremal(s, n, 1e-8).unwrap();
            let oracle = brute_force_extremal(s, n).unwrap();
            assert!(
                (sol.f_value - oracle.f_max).abs() < 1e-6,
                "S = {s}, N = {n}: solver {} vs oracle {}",
                sol.f_value,
                oracle.f_max
            );
            assert!((sol.entropy_achieved - s).abs() < 1e-8);
        }
    }

    #[test]
    fn solution_structure_invariants() {
        let sol = solve_extremal(G_ONE, 32, 1e-8).unwrap();
        assert_eq!(sol.z.len(), 33);
        assert_eq!(*sol.z.last().unwrap(), 0.0);
        for w in sol.z[..32].windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-9) + 1e-12, "z rises: {w:?}");
        }
        assert!(sol.z[0] > 0.0 && sol.z[0] < 1.0);
        assert!(1.0 - sol.mu >= bound_ratio(sol.z[0]) - 1e-9);
        assert!(bound_ratio(sol.z[0]) >= 0.0);
        assert!(sol.residual <= 1e-6);
        // F agrees with the production functional on the reconstructed p
        let f = entropy_production(&sol.p).unwrap();
        assert!((f - sol.f_value).abs() < 1e-9);
    }

    #[test]
    fn convergence_toward_limit() {
        let sol = solve_extremal(G_ONE, 60, 1e-8).unwrap();
        assert!(sol.f_value <= LN_2 + 1e-10);
        assert!(
            LN_2 - sol.f_value <= 1e-3,
            "gap {} too large at N = 60",
            LN_2 - sol.f_value
        );
    }

    #[test]
    fn degenerate_and_infeasible_targets() {
        let sol = solve_extremal(0.0, 8, 1e-8).unwrap();
        assert_eq!(sol.f_value, 0.0);
        assert_eq!(sol.p[0], 1.0);

        match solve_extremal(5.0, 2, 1e-8) {
            Err(Error::InfeasibleEntropy { atoms: 3, .. }) => {}
            other => panic!("expected infeasible entropy, got {other:?}"),
        }
        match brute_force_extremal(5.0, 2) {
            Err(Error::InfeasibleEntropy { .. }) => {}
            other => panic!("expected infeasible entropy, got {other:?}"),
        }
    }

    #[test]
    fn near_uniform_pair_has_small_objective() {
        let s = LN_2 - 0.01;
        let sol = solve_extremal(s, 1, 1e-8).unwrap();
        let oracle = brute_force_extremal(s, 1).unwrap();
        assert!((sol.f_value - oracle.f_max).abs() < 1e-8);
        assert!(sol.f_value > 0.0 && sol.f_value < 0.2, "F = {}", sol.f_value);
    }

    #[test]
    fn asymptotic_profile_examples() {
        let vac = asymptotic_profile(0.0).unwrap();
        assert_eq!(vac.z_limit, 0.0);
        assert_eq!(vac.profile(1e-14).unwrap().weights(), &[1.0]);

        let half = asymptotic_profile(G_ONE).unwrap();
        assert!((half.z_limit - 0.5).abs() < 1e-10);
        let p = half.profile(1e-14).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-10);
        assert!((p[1] - 0.25).abs() < 1e-10);

        for s in [0.2, 1.0, 3.0] {
            let prof = asymptotic_profile(s).unwrap().profile(1e-14).unwrap();
            assert!(
                (prof.shannon_entropy() - s).abs() < 1e-9,
                "profile entropy off at S = {s}"
            );
        }
    }

    #[test]
    fn convergence_study_rows() {
        let study = convergence_study(G_ONE, &[4, 8, 16], 1e-8).unwrap();
        assert_eq!(study.rows.len(), 3);
        assert!(study.rows.iter().all(|r| r.error.is_none()));
        study.validate().unwrap();
        assert!(study.rows[0].f_n < study.rows[2].f_n);
        let csv = study.csv();
        assert!(csv.starts_with("N,F_N,minus_f_S,gap,residual,iterations\n"));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn convergence_study_propagates_errors_per_row() {
        let study = convergence_study(G_ONE, &[1, 4], 1e-8).unwrap();
        assert!(study.rows[0].error.is_some(), "N = 1 is infeasible at S = 2 ln 2");
        assert!(study.rows[0].f_n.is_nan());
        assert!(study.rows[1].error.is_none());
        study.validate().unwrap();
    }
}
