//! Reproducible verification sweeps and report records.
//!
//! Every sweep draws its inputs from a single 64-bit seed, fans the
//! independent (input, λ) cells out to worker threads, and gathers rows in
//! a deterministic order, so a fixed seed reproduces a report byte for
//! byte regardless of thread count. Violation counts make the sweeps
//! usable as CI gates.

use rayon::prelude::*;
use serde::Serialize;

use crate::attenuator::{
    entropy_production, isoperimetric_check, monte_carlo_thin, thin, total_variation,
};
use crate::dist::ProbVec;
use crate::entropy::{
    entropy_power_bound, entropy_slope_floor, min_output_entropy, thermal_distribution,
    thermal_energy, thermal_entropy,
};
use crate::error::{check_lambda, domain, Result};
use crate::sample::{random_probvec, seeded_rng};

/// Tail bound used for the geometric reference inputs included in sweeps.
const GEOMETRIC_TAIL: f64 = 1e-14;
/// Reference energies for the geometric rows.
const GEOMETRIC_ENERGIES: [f64; 3] = [0.5, 1.0, 3.0];

/// One (input, λ) cell of an output-entropy sweep: the measured output
/// entropy against both lower bounds.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub input_id: String,
    #[serde(rename = "S_in")]
    pub s_in: f64,
    pub lambda: f64,
    #[serde(rename = "S_out")]
    pub s_out: f64,
    pub epni: f64,
    pub qepi: f64,
    /// `S_out − epni`; nonnegative up to 1e−9, since thermal inputs
    /// minimize the output entropy.
    pub slack_epni: f64,
    pub slack_qepi: f64,
}

impl BoundReport {
    pub const CSV_HEADER: &'static str =
        "input_id,S_in,lambda,S_out,epni,qepi,slack_epni,slack_qepi";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.input_id,
            self.s_in,
            self.lambda,
            self.s_out,
            self.epni,
            self.qepi,
            self.slack_epni,
            self.slack_qepi
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EpniSweep {
    pub seed: u64,
    pub rows: Vec<BoundReport>,
    pub min_slack_epni: f64,
    pub violations: usize,
}

pub const EPNI_SLACK_TOL: f64 = 1e-9;

/// Sweeps `count` seeded random inputs (alternating general and passive)
/// plus geometric reference inputs through every λ, comparing the output
/// entropy against both bounds. A row violates when `slack_epni < −1e−9`.
pub fn verify_epni(count: usize, n_max: usize, lambdas: &[f64], seed: u64) -> Result<EpniSweep> {
    if count == 0 {
        return Err(domain("count must be >= 1"));
    }
    if lambdas.is_empty() {
        return Err(domain("need at least one lambda"));
    }
    for &l in lambdas {
        check_lambda(l)?;
    }
    let mut rng = seeded_rng(seed);
    let mut inputs: Vec<(String, ProbVec)> = (0..count)
        .map(|i| {
            let passive = i % 2 == 1;
            let tag = if passive { "pas" } else { "gen" };
            (format!("{tag}-{i:04}"), random_probvec(&mut rng, n_max, passive))
        })
        .collect();
    for e in GEOMETRIC_ENERGIES {
        inputs.push((format!("geom-{e}"), thermal_distribution(e, GEOMETRIC_TAIL)?));
    }

    let rows: Vec<BoundReport> = inputs
        .par_iter()
        .flat_map_iter(|(id, p)| {
            let s_in = p.shannon_entropy();
            lambdas.iter().map(move |&lambda| {
                let s_out = thin(p, lambda)
                    .expect("lambda validated")
                    .shannon_entropy();
                let epni = min_output_entropy(s_in, lambda).expect("valid inputs");
                let qepi = entropy_power_bound(s_in, lambda).expect("valid inputs");
                BoundReport {
                    input_id: id.clone(),
                    s_in,
                    lambda,
                    s_out,
                    epni,
                    qepi,
                    slack_epni: s_out - epni,
                    slack_qepi: s_out - qepi,
                }
            })
        })
        .collect();

    let min_slack_epni = rows.iter().map(|r| r.slack_epni).fold(f64::INFINITY, f64::min);
    let violations = rows.iter().filter(|r| r.slack_epni < -EPNI_SLACK_TOL).count();
    Ok(EpniSweep {
        seed,
        rows,
        min_slack_epni,
        violations,
    })
}

/// One input of an isoperimetric sweep: `slack = F + f(H)` must stay below
/// 1e−9, with equality for geometric inputs.
#[derive(Debug, Clone, Serialize)]
pub struct IsoRow {
    pub input_id: String,
    pub entropy: f64,
    #[serde(rename = "F_value")]
    pub f_value: f64,
    #[serde(rename = "f_of_S")]
    pub f_of_entropy: f64,
    pub slack: f64,
}

impl IsoRow {
    pub const CSV_HEADER: &'static str = "input_id,S,F,f_of_S,slack";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.input_id, self.entropy, self.f_value, self.f_of_entropy, self.slack
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IsoSweep {
    pub seed: u64,
    pub rows: Vec<IsoRow>,
    pub worst_slack: f64,
    pub violations: usize,
}

pub const ISO_SLACK_TOL: f64 = 1e-9;

/// Sweeps the isoperimetric inequality over `count` seeded random passive
/// (connected-support) inputs, plus the vacuum and geometric reference rows.
pub fn verify_iso(count: usize, n_max: usize, seed: u64) -> Result<IsoSweep> {
    if count == 0 {
        return Err(domain("count must be >= 1"));
    }
    let mut rng = seeded_rng(seed);
    let mut inputs: Vec<(String, ProbVec)> = vec![("delta0".to_string(), ProbVec::delta(0))];
    for e in GEOMETRIC_ENERGIES {
        inputs.push((format!("geom-{e}"), thermal_distribution(e, GEOMETRIC_TAIL)?));
    }
    inputs.extend((0..count).map(|i| {
        (
            format!("pas-{i:04}"),
            random_probvec(&mut rng, n_max, true),
        )
    }));

    let rows: Vec<IsoRow> = inputs
        .par_iter()
        .map(|(id, p)| {
            let check = isoperimetric_check(p).expect("passive inputs have connected support");
            IsoRow {
                input_id: id.clone(),
                entropy: p.shannon_entropy(),
                f_value: check.f_value,
                f_of_entropy: check.f_of_entropy,
                slack: check.slack,
            }
        })
        .collect();

    let worst_slack = rows.iter().map(|r| r.slack).fold(f64::NEG_INFINITY, f64::max);
    let violations = rows.iter().filter(|r| r.slack > ISO_SLACK_TOL).count();
    Ok(IsoSweep {
        seed,
        rows,
        worst_slack,
        violations,
    })
}

/// One (S, λ) grid cell comparing the two lower bounds.
#[derive(Debug, Clone, Serialize)]
pub struct BoundGridRow {
    #[serde(rename = "S")]
    pub s: f64,
    pub lambda: f64,
    pub epni: f64,
    pub qepi: f64,
    pub gap: f64,
}

impl BoundGridRow {
    pub const CSV_HEADER: &'static str = "S,lambda,epni,qepi,gap";

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{},{}", self.s, self.lambda, self.epni, self.qepi, self.gap)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundComparison {
    pub rows: Vec<BoundGridRow>,
    pub min_gap: f64,
    /// Cells where the thermal bound fell below the entropy-power bound
    /// beyond rounding (must be none).
    pub dominance_violations: usize,
    /// Interior cells (S > 0, 0 < λ < 1) where the gap failed to be
    /// strictly positive (must be none).
    pub strictness_violations: usize,
}

/// Evaluates both bounds on the grid; the thermal bound must dominate
/// everywhere and strictly inside the interior of the parameter region.
pub fn compare_bounds(s_grid: &[f64], lambda_grid: &[f64]) -> Result<BoundComparison> {
    if s_grid.is_empty() || lambda_grid.is_empty() {
        return Err(domain("bound-comparison grids must be nonempty"));
    }
    let mut rows = Vec::with_capacity(s_grid.len() * lambda_grid.len());
    for &s in s_grid {
        for &lambda in lambda_grid {
            let epni = min_output_entropy(s, lambda)?;
            let qepi = entropy_power_bound(s, lambda)?;
            rows.push(BoundGridRow {
                s,
                lambda,
                epni,
                qepi,
                gap: epni - qepi,
            });
        }
    }
    let min_gap = rows.iter().map(|r| r.gap).fold(f64::INFINITY, f64::min);
    let dominance_violations = rows.iter().filter(|r| r.gap < -1e-12).count();
    let strictness_violations = rows
        .iter()
        .filter(|r| r.s > 0.0 && r.lambda > 0.0 && r.lambda < 1.0 && r.gap <= 0.0)
        .count();
    Ok(BoundComparison {
        rows,
        min_gap,
        dominance_violations,
        strictness_violations,
    })
}

/// One row of an attenuation-flow table. `f_value` is NaN when the input of
/// that row has disconnected support (possible only at t = 0).
#[derive(Debug, Clone, Serialize)]
pub struct FlowRow {
    pub t: f64,
    pub lambda: f64,
    pub entropy: f64,
    pub phi0: f64,
    #[serde(rename = "F")]
    pub f_value: f64,
    #[serde(rename = "f_of_S")]
    pub f_of_entropy: f64,
}

impl FlowRow {
    pub const CSV_HEADER: &'static str = "t,lambda,entropy,phi0,F,f_of_S";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.t, self.lambda, self.entropy, self.phi0, self.f_value, self.f_of_entropy
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowTable {
    pub rows: Vec<FlowRow>,
    /// min over rows of `H(p_t) − φ₀(t)`; stays above −1e−9 because the
    /// flow entropy never drops below the thermal comparison curve.
    pub min_entropy_slack: f64,
    /// min over grid intervals of `slope(H) − f(H)`; NaN for a single-row
    /// table (slope assertions skipped).
    pub min_slope_slack: f64,
}

pub const FLOW_ENTROPY_TOL: f64 = 1e-9;
pub const FLOW_SLOPE_TOL: f64 = 1e-5;

/// Tabulates the attenuation flow of `p` on a uniform t-grid against the
/// thermal comparison curve `φ₀(t) = h(e^{−t}·h⁻¹(H(p)))`.
pub fn flow_table(p: &ProbVec, t_max: f64, steps: usize) -> Result<FlowTable> {
    if !t_max.is_finite() || t_max < 0.0 {
        return Err(domain(format!("t_max = {t_max} must be finite and >= 0")));
    }
    let single_row = t_max == 0.0;
    if !single_row && steps < 2 {
        return Err(domain("need at least 2 grid points"));
    }
    let s0 = p.shannon_entropy();
    let e0 = thermal_energy(s0)?;
    let count = if single_row { 1 } else { steps };
    let mut rows = Vec::with_capacity(count);
    for i in 0..count {
        let t = if single_row {
            0.0
        } else {
            t_max * i as f64 / (steps - 1) as f64
        };
        let lambda = (-t).exp();
        let p_t = thin(p, lambda)?;
        let entropy = p_t.shannon_entropy();
        let phi0 = thermal_entropy(lambda * e0)?;
        let f_value = entropy_production(&p_t).unwrap_or(f64::NAN);
        rows.push(FlowRow {
            t,
            lambda,
            entropy,
            phi0,
            f_value,
            f_of_entropy: entropy_slope_floor(entropy)?,
        });
    }
    let min_entropy_slack = rows
        .iter()
        .map(|r| r.entropy - r.phi0)
        .fold(f64::INFINITY, f64::min);
    let min_slope_slack = if rows.len() < 2 {
        f64::NAN
    } else {
        rows.windows(2)
            .map(|w| {
                let slope = (w[1].entropy - w[0].entropy) / (w[1].t - w[0].t);
                slope - w[0].f_of_entropy
            })
            .fold(f64::INFINITY, f64::min)
    };
    Ok(FlowTable {
        rows,
        min_entropy_slack,
        min_slope_slack,
    })
}

/// A point on the achievable-rate boundary of the degraded broadcast
/// channel at power split β.
#[derive(Debug, Clone, Serialize)]
pub struct RatePoint {
    pub beta: f64,
    #[serde(rename = "R_A")]
    pub r_a: f64,
    #[serde(rename = "R_B")]
    pub r_b: f64,
    pub lambda: f64,
    #[serde(rename = "E")]
    pub energy: f64,
}

impl RatePoint {
    pub const CSV_HEADER: &'static str = "beta,R_A,R_B,lambda,E";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.beta, self.r_a, self.r_b, self.lambda, self.energy
        )
    }
}

/// Rate pair at one power split: `R_A = h(λβE)`,
/// `R_B = h((1−λ)E) − h((1−λ)βE)`.
pub fn broadcast_rate_point(lambda: f64, energy: f64, beta: f64) -> Result<RatePoint> {
    if !(0.5..=1.0).contains(&lambda) {
        return Err(domain(format!(
            "lambda = {lambda} violates the degradedness condition 1/2 <= lambda <= 1"
        )));
    }
    if !energy.is_finite() || energy <= 0.0 {
        return Err(domain(format!("energy E = {energy} must be positive")));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(domain(format!("beta = {beta} outside [0, 1]")));
    }
    Ok(RatePoint {
        beta,
        r_a: thermal_entropy(lambda * beta * energy)?,
        r_b: thermal_entropy((1.0 - lambda) * energy)?
            - thermal_entropy((1.0 - lambda) * beta * energy)?,
        lambda,
        energy,
    })
}

/// Boundary curve of the broadcast rate region over β ∈ [0, 1].
pub fn broadcast_region(lambda: f64, energy: f64, beta_steps: usize) -> Result<Vec<RatePoint>> {
    if beta_steps < 2 {
        return Err(domain("need at least 2 beta steps"));
    }
    (0..beta_steps)
        .map(|i| {
            let beta = i as f64 / (beta_steps - 1) as f64;
            broadcast_rate_point(lambda, energy, beta)
        })
        .collect()
}

/// Comparison of the empirical Monte-Carlo thinning histogram against the
/// exact kernel output.
#[derive(Debug, Clone, Serialize)]
pub struct MonteCarloReport {
    pub seed: u64,
    pub lambda: f64,
    pub samples: u64,
    pub total_variation: f64,
    /// `5/√samples`.
    pub threshold: f64,
    pub pass: bool,
}

pub fn monte_carlo_report(
    p: &ProbVec,
    lambda: f64,
    samples: u64,
    seed: u64,
) -> Result<MonteCarloReport> {
    let empirical = monte_carlo_thin(p, lambda, samples, seed)?;
    let exact = thin(p, lambda)?;
    let tv = total_variation(&empirical, &exact);
    let threshold = 5.0 / (samples as f64).sqrt();
    Ok(MonteCarloReport {
        seed,
        lambda,
        samples,
        total_variation: tv,
        threshold,
        pass: tv <= threshold,
    })
}
