//! Acceptance suite: every release-gating inequality and equality case at
//! its pinned tolerance, one pass/fail line per criterion.
//!
//! Run with `cargo test -p thinlab --test acceptance -- --nocapture` to see
//! the per-criterion lines.

use std::f64::consts::LN_2;
use std::time::Instant;

use thinlab::attenuator::{
    composition_deviation, entropy_production, isoperimetric_check, monte_carlo_thin, thin,
    total_variation,
};
use thinlab::entropy::{
    entropy_power_bound, entropy_slope_floor, min_output_entropy, thermal_distribution,
    thermal_energy, thermal_entropy,
};
use thinlab::extremal::{brute_force_extremal, convergence_study, solve_extremal};
use thinlab::report::broadcast_region;
use thinlab::sample::{random_probvec, seeded_rng};
use thinlab::{Error, ProbVec};

fn report(criterion: u32, ok: bool, detail: &str) {
    println!(
        "ACCEPTANCE {criterion:2} {}: {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {criterion} failed: {detail}");
}

const LAMBDA_GRID: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Criterion 1: Minimum-output-entropy sweep: H(T_λ(p)) ≥ g(λ·g⁻¹(H(p))) − 1e−9 on
/// 1000 seeded inputs over {0,…,20} × 9 attenuation values, single-threaded
/// in ≤ 10 s.
#[test]
fn criterion_01_output_entropy_sweep() {
    let start = Instant::now();
    let mut rng = seeded_rng(1);
    let mut min_slack = f64::INFINITY;
    for i in 0..1000 {
        let p = random_probvec(&mut rng, 20, i % 2 == 1);
        let s_in = p.shannon_entropy();
        for &lambda in &LAMBDA_GRID {
            let s_out = thin(&p, lambda).unwrap().shannon_entropy();
            let bound = min_output_entropy(s_in, lambda).unwrap();
            min_slack = min_slack.min(s_out - bound);
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        1,
        min_slack >= -1e-9 && elapsed <= 10.0,
        &format!("9000 cells, min slack {min_slack:.3e}, {elapsed:.2} s"),
    );
}

/// Criterion 2: Equality case: thermal inputs (tail < 1e−14) land on g(λE) within 1e−6.
#[test]
fn criterion_02_thermal_equality_case() {
    let mut worst = 0.0f64;
    for e in [0.5, 1.0, 3.0] {
        let p = thermal_distribution(e, 1e-14).unwrap();
        for lambda in [0.3, 0.7] {
            let h_out = thin(&p, lambda).unwrap().shannon_entropy();
            let target = thermal_entropy(lambda * e).unwrap();
            worst = worst.max((h_out - target).abs());
        }
    }
    report(2, worst <= 1e-6, &format!("worst |H − g(λE)| = {worst:.3e}"));
}

/// Criterion 3: Isoperimetric sweep: −F(p) ≥ f(H(p)) − 1e−9 on 1000 seeded passive
/// inputs; geometric inputs saturate to 1e−8.
#[test]
fn criterion_03_isoperimetric_sweep() {
    let mut rng = seeded_rng(3);
    let mut worst_slack = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let p = random_probvec(&mut rng, 25, true);
        let check = isoperimetric_check(&p).unwrap();
        worst_slack = worst_slack.max(check.slack);
    }
    let mut worst_eq = 0.0f64;
    for e in [0.5, 1.0, 3.0] {
        let p = thermal_distribution(e, 1e-14).unwrap();
        let check = isoperimetric_check(&p).unwrap();
        worst_eq = worst_eq.max(check.slack.abs());
    }
    report(
        3,
        worst_slack <= 1e-9 && worst_eq <= 1e-8,
        &format!("worst slack {worst_slack:.3e}, geometric |slack| {worst_eq:.3e}"),
    );
}

/// Transition polynomial evaluated directly; analytic in λ, so usable at
/// λ = e^{+h} > 1 for the two-sided difference at t = 0. Independent of the
/// library kernel.
#[allow(clippy::needless_range_loop)]
fn thin_polynomial(p: &ProbVec, lambda: f64) -> Vec<f64> {
    let n_max = p.n_max();
    let mut out = vec![0.0; n_max + 1];
    for k in 0..=n_max {
        if p[k] == 0.0 {
            continue;
        }
        let mut coeff = 1.0;
        for n in 0..=k {
            out[n] += coeff * lambda.powi(n as i32) * (1.0 - lambda).powi((k - n) as i32) * p[k];
            coeff = coeff * (k - n) as f64 / (n + 1) as f64;
        }
    }
    out
}

fn entropy_of(weights: &[f64]) -> f64 {
    -weights
        .iter()
        .filter(|w| **w > 0.0)
        .map(|w| w * w.ln())
        .sum::<f64>()
}

/// Criterion 4: F is the entropy-flow derivative: central differences (h = 1e−5) of
/// H(T_{e^{−t}}(p)) at t = 0 match −F(p) to 1e−5 relative on 100 seeded
/// passive inputs.
#[test]
fn criterion_04_entropy_flow_derivative() {
    let mut rng = seeded_rng(4);
    let h = 1e-5_f64;
    let mut worst_rel = 0.0f64;
    for _ in 0..100 {
        let p = random_probvec(&mut rng, 20, true);
        let fwd = entropy_of(&thin_polynomial(&p, (-h).exp()));
        let bwd = entropy_of(&thin_polynomial(&p, h.exp()));
        let fd = (fwd - bwd) / (2.0 * h);
        let f = entropy_production(&p).unwrap();
        worst_rel = worst_rel.max((f + fd).abs() / f.abs());
    }
    report(4, worst_rel <= 1e-5, &format!("worst relative error {worst_rel:.3e}"));
}

/// Criterion 5: Semigroup: T_{0.6}∘T_{0.5} = T_{0.3} entrywise to 1e−12 on 100 seeded
/// inputs with N = 30.
#[test]
fn criterion_05_semigroup_composition() {
    let mut rng = seeded_rng(5);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let p = random_probvec(&mut rng, 30, false);
        worst = worst.max(composition_deviation(&p, 0.6, 0.5).unwrap());
    }
    report(5, worst <= 1e-12, &format!("max entrywise deviation {worst:.3e}"));
}

/// Criterion 6: Passive rearrangement never increases output entropy (1e−10 slack) on
/// 1000 seeded non-sorted inputs.
#[test]
fn criterion_06_passive_rearrangement() {
    let mut rng = seeded_rng(6);
    let mut worst = f64::NEG_INFINITY;
    for i in 0..1000 {
        let p = random_probvec(&mut rng, 18, false);
        let lambda = LAMBDA_GRID[i % LAMBDA_GRID.len()];
        let direct = thin(&p, lambda).unwrap().shannon_entropy();
        let sorted = thin(&p.passive_rearrange(), lambda).unwrap().shannon_entropy();
        worst = worst.max(sorted - direct);
    }
    report(6, worst <= 1e-10, &format!("max H(T(p↓)) − H(T(p)) = {worst:.3e}"));
}

/// Criterion 7: Bound dominance on a 50×9 grid: thermal bound ≥ entropy-power bound
/// everywhere, strictly by more than 1e−6 for S ≥ 0.1 and λ ∈ [0.2, 0.8].
#[test]
fn criterion_07_bound_dominance() {
    let mut min_gap = f64::INFINITY;
    let mut min_strict = f64::INFINITY;
    for i in 0..50 {
        let s = 0.1 * i as f64;
        for &lambda in &LAMBDA_GRID {
            let gap = min_output_entropy(s, lambda).unwrap()
                - entropy_power_bound(s, lambda).unwrap();
            min_gap = min_gap.min(gap);
            if s >= 0.1 && (0.2..=0.8).contains(&lambda) {
                min_strict = min_strict.min(gap);
            }
        }
    }
    report(
        7,
        min_gap >= 0.0 && min_strict > 1e-6,
        &format!("min gap {min_gap:.3e}, min strict-region gap {min_strict:.3e}"),
    );
}

/// Criterion 8: Extremal solver versus the brute-force oracle at
/// (S, N) ∈ {g(0.5), g(1)} × {1, 2, 3}: numeric agreement to 1e−6 and KKT
/// residual ≤ 1e−6 on the entropy-feasible cells, consistent infeasibility
/// on the rest (max entropy on N+1 atoms is ln(N+1)); extra feasible cells
/// keep the oracle check meaningful.
#[test]
fn criterion_08_solver_vs_oracle() {
    let g_half = thermal_entropy(0.5).unwrap();
    let g_one = thermal_entropy(1.0).unwrap();
    let mut worst_diff = 0.0f64;
    let mut worst_residual = 0.0f64;
    let mut checked = 0;
    let mut ok = true;
    let mut notes = Vec::new();

    for &s in &[g_half, g_one] {
        for n in 1..=3usize {
            let max_entropy = ((n + 1) as f64).ln();
            let solver = solve_extremal(s, n, 1e-8);
            let oracle = brute_force_extremal(s, n);
            if s > max_entropy {
                let both_infeasible = matches!(solver, Err(Error::InfeasibleEntropy { .. }))
                    && matches!(oracle, Err(Error::InfeasibleEntropy { .. }));
                ok &= both_infeasible;
                notes.push(format!("(S={s:.4},N={n}) infeasible:{both_infeasible}"));
            } else if s == max_entropy {
                // boundary: the feasible set is the uniform point, which
                // satisfies no interior stationarity system
                let solver_rejects = solver.is_err();
                ok &= solver_rejects;
                notes.push(format!("(S={s:.4},N={n}) boundary-rejected:{solver_rejects}"));
            } else {
                let solver = solver.unwrap();
                let oracle = oracle.unwrap();
                worst_diff = worst_diff.max((solver.f_value - oracle.f_max).abs());
                worst_residual = worst_residual.max(solver.residual);
                checked += 1;
            }
        }
    }
    // supplementary feasible cells, including an N = 1 comparison
    for (s, n) in [(0.5, 1), (0.5, 2), (0.5, 3), (g_one, 4)] {
        let solver = solve_extremal(s, n, 1e-8).unwrap();
        let oracle = brute_force_extremal(s, n).unwrap();
        worst_diff = worst_diff.max((solver.f_value - oracle.f_max).abs());
        worst_residual = worst_residual.max(solver.residual);
        checked += 1;
    }

    ok &= worst_diff <= 1e-6 && worst_residual <= 1e-6;
    report(
        8,
        ok,
        &format!(
            "{checked} feasible cells: |ΔF| ≤ {worst_diff:.3e}, residual ≤ {worst_residual:.3e}; {}",
            notes.join(", ")
        ),
    );
}

/// Criterion 9: Convergence at S = g(1): F_N non-decreasing over the feasible rows of
/// N ∈ {1,2,4,…,64} (N = 1, 2 are entropy-infeasible and must carry error
/// rows), F_N ≤ ln 2 + 1e−8, |F_64 − ln 2| ≤ 1e−3, within 60 s.
#[test]
fn criterion_09_convergence_to_limit() {
    let start = Instant::now();
    let g_one = thermal_entropy(1.0).unwrap();
    let study = convergence_study(g_one, &[1, 2, 4, 8, 16, 32, 64], 1e-8).unwrap();
    let elapsed = start.elapsed().as_secs_f64();

    let infeasible_rows_flagged = study.rows[..2].iter().all(|r| r.error.is_some());
    let feasible: Vec<_> = study.rows.iter().filter(|r| r.error.is_none()).collect();
    let monotone = feasible.windows(2).all(|w| w[1].f_n >= w[0].f_n - 1e-12);
    let bounded = feasible.iter().all(|r| r.f_n <= LN_2 + 1e-8);
    let f64_row = feasible.last().unwrap();
    let final_gap = (f64_row.f_n - LN_2).abs();

    report(
        9,
        infeasible_rows_flagged
            && monotone
            && bounded
            && feasible.len() == 5
            && f64_row.n == 64
            && final_gap <= 1e-3
            && study.validate().is_ok()
            && elapsed <= 60.0,
        &format!(
            "rows N=1,2 infeasible as expected; F monotone over N=4…64, |F_64 − ln 2| = {final_gap:.3e}, {elapsed:.2} s"
        ),
    );
}

/// Criterion 10: Broadcast endpoints at (λ, E) = (0.7, 1): β = 1 ↦ (g(0.7), 0) and
/// β = 0 ↦ (0, g(0.3)) to 1e−12.
#[test]
fn criterion_10_broadcast_endpoints() {
    let points = broadcast_region(0.7, 1.0, 11).unwrap();
    let first = points.first().unwrap();
    let last = points.last().unwrap();
    let g_07 = thermal_entropy(0.7).unwrap();
    let g_03 = thermal_entropy(0.3).unwrap();
    let worst = [
        first.r_a.abs(),
        (first.r_b - g_03).abs(),
        (last.r_a - g_07).abs(),
        last.r_b.abs(),
    ]
    .into_iter()
    .fold(0.0f64, f64::max);
    report(10, worst <= 1e-12, &format!("worst endpoint deviation {worst:.3e}"));
}

/// Criterion 11: Monte-Carlo oracle: 10⁶ seeded samples of thinning geometric(E = 1)
/// at λ = 0.5 track the exact kernel within total variation 5e−3.
#[test]
fn criterion_11_monte_carlo_oracle() {
    let p = thermal_distribution(1.0, 1e-14).unwrap();
    let empirical = monte_carlo_thin(&p, 0.5, 1_000_000, 42).unwrap();
    let exact = thin(&p, 0.5).unwrap();
    let tv = total_variation(&empirical, &exact);
    report(11, tv <= 5e-3, &format!("total variation {tv:.3e}"));
}

/// Criterion 12: Comparison-curve ODE: φ₀(t) = g(e^{−t}·g⁻¹(S)) satisfies
/// dφ₀/dt = f(φ₀) within 1e−6 by central differences on a 20×20 grid.
#[test]
fn criterion_12_comparison_ode() {
    let h = 1e-5_f64;
    let mut worst = 0.0f64;
    for i in 0..20 {
        let s = 0.05 + 0.155 * i as f64; // S ∈ [0.05, 3.0]
        let e0 = thermal_energy(s).unwrap();
        let phi = |t: f64| thermal_entropy((-t).exp() * e0).unwrap();
        for j in 0..20 {
            let t = 3.0 * j as f64 / 19.0;
            let fd = (phi(t + h) - phi(t - h)) / (2.0 * h);
            let rhs = entropy_slope_floor(phi(t)).unwrap();
            worst = worst.max((fd - rhs).abs());
        }
    }
    report(12, worst <= 1e-6, &format!("worst ODE residual {worst:.3e}"));
}
