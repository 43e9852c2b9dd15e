//! Verification harness for the binomial thinning channel.
//!
//! Subcommands wire the library's sweeps into reproducible reports: CSV for
//! sweeps, JSON for single structured results. Every seeded command echoes
//! its parameters in the report header and is byte-reproducible for a fixed
//! seed regardless of worker count.
//!
//! Exit codes: 0 success, 1 inequality violation, 2 input/parse error,
//! 3 solver non-convergence.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use thinlab::entropy::thermal_distribution;
use thinlab::error::Error as LibError;
use thinlab::extremal::{convergence_study, solve_extremal, ConvergenceStudy, KktSolution};
use thinlab::report::{
    broadcast_region, compare_bounds, flow_table, monte_carlo_report, verify_epni, verify_iso,
    BoundGridRow, BoundReport, FlowRow, IsoRow, RatePoint, EPNI_SLACK_TOL, FLOW_ENTROPY_TOL,
    FLOW_SLOPE_TOL, ISO_SLACK_TOL,
};
use thinlab::ProbVec;

/// Tail mass bound for `--geometric` inputs.
const GEOMETRIC_TAIL: f64 = 1e-14;

#[derive(Parser)]
#[command(name = "thinlab", version, about = "Binomial thinning channel: entropy bounds, extremal distributions, and verification sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct InputArgs {
    /// Input distribution: JSON array of weights, or CSV with `index,weight` rows
    #[arg(long, value_name = "PATH", required_unless_present = "geometric", conflicts_with = "geometric")]
    input: Option<PathBuf>,

    /// Geometric (thermal) input with this mean energy, truncated at tail mass 1e-14
    #[arg(long, value_name = "E")]
    geometric: Option<f64>,
}

#[derive(Args)]
struct OutputArgs {
    /// Output format (default: csv for sweeps, json for single results)
    #[arg(long, value_enum)]
    format: Option<Format>,

    /// Write the report to PATH instead of stdout
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Write a gnuplot script next to the CSV (requires --out)
    #[arg(long, requires = "out")]
    gnuplot: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Thin a distribution: each quantum survives independently with probability λ
    Thin {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        lambda: f64,
        #[command(flatten)]
        output: OutputArgs,
    },

    /// Sweep random inputs against the minimum-output-entropy bound g(λ·g⁻¹(S))
    VerifyEpni {
        /// Number of random input distributions
        #[arg(long, default_value_t = 1000)]
        count: usize,
        /// Support bound: inputs live on {0,…,N}
        #[arg(long, default_value_t = 20)]
        n_max: usize,
        /// Thinning parameters, comma separated
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])]
        lambda: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },

    /// Sweep random passive inputs against the isoperimetric inequality −F(p) ≥ f(H(p))
    VerifyIso {
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 20)]
        n_max: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },

    /// Tabulate the thermal bound against the entropy-power bound on an (S, λ) grid
    CompareBounds {
        /// Entropy grid values, comma separated
        #[arg(long = "entropy", value_delimiter = ',', required = true)]
        entropy: Vec<f64>,
        /// λ grid values, comma separated
        #[arg(long, value_delimiter = ',', required = true)]
        lambda: Vec<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },

    /// Tabulate the attenuation flow of an input against the comparison curve φ₀
    Flow {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 3.0)]
        t_max: f64,
        #[arg(long, default_value_t = 31)]
        steps: usize,
        #[command(flatten)]
        output: OutputArgs,
    },

    /// Solve for the entropy-constrained maximizer of the entropy production F
    Extremal {
        /// Entropy target S
        #[arg(long)]
        entropy: f64,
        /// Support bound N
        #[arg(long)]
        n_max: usize,
        /// Run a convergence study over these N values instead of a single solve
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
        /// Entropy matching tolerance
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },

    /// Achievable-rate boundary of the degraded broadcast channel over the power split β
    BroadcastRegion {
        /// Beamsplitter transmissivity, 1/2 ≤ λ ≤ 1 (degradedness condition)
        #[arg(long)]
        lambda: f64,
        /// Mean input energy per use
        #[arg(long)]
        energy: f64,
        #[arg(long, default_value_t = 21)]
        beta_steps: usize,
        #[command(flatten)]
        output: OutputArgs,
    },

    /// Compare empirical Monte-Carlo thinning against the exact kernel
    Montecarlo {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
}

enum CliError {
    Input(String),
    Solver(String),
}

impl From<LibError> for CliError {
    fn from(e: LibError) -> Self {
        match e {
            LibError::NoConvergence(_) => CliError::Solver(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    configure_workers();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Solver(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

/// THINLAB_THREADS caps the worker count for sweep commands.
fn configure_workers() {
    if let Ok(raw) = std::env::var("THINLAB_THREADS") {
        match raw.parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("warning: ignoring invalid THINLAB_THREADS={raw}"),
        }
    }
}

fn load_input(args: &InputArgs) -> Result<ProbVec, CliError> {
    if let Some(energy) = args.geometric {
        return Ok(thermal_distribution(energy, GEOMETRIC_TAIL)?);
    }
    let path = args.input.as_ref().expect("clap guarantees one input source");
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if path.extension().is_some_and(|ext| ext.eq_ignore_ascii_case("csv")) {
        parse_csv_distribution(&text, path)
    } else {
        serde_json::from_str::<ProbVec>(&text)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }
}

/// `index,weight` rows, optionally headed by `index,weight`.
fn parse_csv_distribution(text: &str, path: &Path) -> Result<ProbVec, CliError> {
    let mut weights: Vec<(usize, f64)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if lineno == 0 && line.eq_ignore_ascii_case("index,weight") {
            continue;
        }
        let mut fields = line.split(',');
        let bad = |what: &str| {
            CliError::Input(format!(
                "{}: line {}: {what}",
                path.display(),
                lineno + 1
            ))
        };
        let index: usize = fields
            .next()
            .ok_or_else(|| bad("missing index"))?
            .trim()
            .parse()
            .map_err(|_| bad("index is not a natural number"))?;
        let weight: f64 = fields
            .next()
            .ok_or_else(|| bad("missing weight"))?
            .trim()
            .parse()
            .map_err(|_| bad("weight is not a number"))?;
        if fields.next().is_some() {
            return Err(bad("expected exactly two columns"));
        }
        weights.push((index, weight));
    }
    let len = weights
        .iter()
        .map(|(i, _)| i + 1)
        .max()
        .ok_or_else(|| CliError::Input(format!("{}: no rows", path.display())))?;
    let mut dense = vec![0.0; len];
    for (i, w) in weights {
        dense[i] = w;
    }
    Ok(ProbVec::new(dense)?)
}

fn emit(text: &str, out: &Option<PathBuf>) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_gnuplot(output: &OutputArgs, plot_body: &str) -> Result<(), CliError> {
    if !output.gnuplot {
        return Ok(());
    }
    let csv = output.out.as_ref().expect("clap: --gnuplot requires --out");
    let script_path = csv.with_extension("gp");
    let script = format!(
        "set datafile separator \",\"\nset key autotitle columnhead\n{}\n",
        plot_body.replace("{csv}", &csv.display().to_string())
    );
    fs::write(&script_path, script)
        .map_err(|e| CliError::Input(format!("{}: {e}", script_path.display())))
}

fn pretty_json<T: serde::Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
    text.push('\n');
    text
}

fn csv_report<R>(header_comment: &str, column_header: &str, rows: &[R], row: impl Fn(&R) -> String) -> String {
    let mut text = String::new();
    let _ = writeln!(text, "# {header_comment}");
    let _ = writeln!(text, "{column_header}");
    for r in rows {
        let _ = writeln!(text, "{}", row(r));
    }
    text
}

/// Returns Ok(true) on success, Ok(false) when a verified inequality was
/// violated (exit code 1).
fn run(command: Command) -> Result<bool, CliError> {
    match command {
        Command::Thin {
            input,
            lambda,
            output,
        } => {
            let p = load_input(&input)?;
            let thinned = thinlab::attenuator::thin(&p, lambda)?;
            let text = match output.format.unwrap_or(Format::Json) {
                Format::Json => pretty_json(&thinned),
                Format::Csv => {
                    let rows: Vec<(usize, f64)> =
                        thinned.weights().iter().copied().enumerate().collect();
                    csv_report(
                        &format!("thinlab thin lambda={lambda}"),
                        "index,weight",
                        &rows,
                        |(i, w)| format!("{i},{w}"),
                    )
                }
            };
            emit(&text, &output.out)?;
            write_gnuplot(&output, "plot \"{csv}\" using 1:2 with boxes title \"weight\"")?;
            Ok(true)
        }

        Command::VerifyEpni {
            count,
            n_max,
            lambda,
            seed,
            output,
        } => {
            let sweep = verify_epni(count, n_max, &lambda, seed)?;
            let text = match output.format.unwrap_or(Format::Csv) {
                Format::Json => pretty_json(&sweep),
                Format::Csv => csv_report(
                    &format!("thinlab verify-epni count={count} n_max={n_max} seed={seed}"),
                    BoundReport::CSV_HEADER,
                    &sweep.rows,
                    BoundReport::csv_row,
                ),
            };
            emit(&text, &output.out)?;
            write_gnuplot(&output, "plot \"{csv}\" using 3:7 with points title \"slack_epni\"")?;
            eprintln!(
                "verify-epni: {} rows, min slack_epni = {:.3e}, {} violation(s)",
                sweep.rows.len(),
                sweep.min_slack_epni,
                sweep.violations
            );
            Ok(sweep.violations == 0 && sweep.min_slack_epni >= -EPNI_SLACK_TOL)
        }

        Command::VerifyIso {
            count,
            n_max,
            seed,
            output,
        } => {
            let sweep = verify_iso(count, n_max, seed)?;
            let text = match output.format.unwrap_or(Format::Csv) {
                Format::Json => pretty_json(&sweep),
                Format::Csv => csv_report(
                    &format!("thinlab verify-iso count={count} n_max={n_max} seed={seed}"),
                    IsoRow::CSV_HEADER,
                    &sweep.rows,
                    IsoRow::csv_row,
                ),
            };
            emit(&text, &output.out)?;
            write_gnuplot(&output, "plot \"{csv}\" using 2:5 with points title \"slack\"")?;
            eprintln!(
                "verify-iso: {} rows, worst slack = {:.3e}, {} violation(s)",
                sweep.rows.len(),
                sweep.worst_slack,
                sweep.violations
            );
            Ok(sweep.violations == 0 && sweep.worst_slack <= ISO_SLACK_TOL)
        }

        Command::CompareBounds {
            entropy,
            lambda,
            output,
        } => {
            let cmp = compare_bounds(&entropy, &lambda)?;
            let text = match output.format.unwrap_or(Format::Csv) {
                Format::Json => pretty_json(&cmp),
                Format::Csv => csv_report(
                    "thinlab compare-bounds",
                    BoundGridRow::CSV_HEADER,
                    &cmp.rows,
                    BoundGridRow::csv_row,
                ),
            };
            emit(&text, &output.out)?;
            write_gnuplot(&output, "plot \"{csv}\" using 1:5 with points title \"gap\"")?;
            eprintln!(
                "compare-bounds: {} cells, min gap = {:.3e}, {} dominance / {} strictness violation(s)",
                cmp.rows.len(),
                cmp.min_gap,
                cmp.dominance_violations,
                cmp.strictness_violations
            );
            Ok(cmp.dominance_violations == 0 && cmp.strictness_violations == 0)
        }

        Command::Flow {
            input,
            t_max,
            steps,
            output,
        } => {
            let p = load_input(&input)?;
            let table = flow_table(&p, t_max, steps)?;
            let text = match output.format.unwrap_or(Format::Csv) {
                Format::Json => pretty_json(&table),
                Format::Csv => csv_report(
                    &format!("thinlab flow t_max={t_max} steps={steps}"),
                    FlowRow::CSV_HEADER,
                    &table.rows,
                    FlowRow::csv_row,
                ),
            };
            emit(&text, &output.out)?;
            write_gnuplot(
                &output,
                "plot \"{csv}\" using 1:3 with lines title \"entropy\", \"{csv}\" using 1:4 with lines title \"phi0\"",
            )?;
            let slope_ok = table.min_slope_slack.is_nan()
                || table.min_slope_slack >= -FLOW_SLOPE_TOL;
            eprintln!(
                "flow: {} rows, min H−φ₀ = {:.3e}, min slope−f(H) = {:.3e}",
                table.rows.len(),
                table.min_entropy_slack,
                table.min_slope_slack
            );
            Ok(table.min_entropy_slack >= -FLOW_ENTROPY_TOL && slope_ok)
        }

        Command::Extremal {
            entropy,
            n_max,
            n_list,
            tol,
            output,
        } => {
            match n_list {
                None => {
                    let solution = solve_extremal(entropy, n_max, tol)?;
                    let text = match output.format.unwrap_or(Format::Json) {
                        Format::Json => pretty_json(&solution),
                        Format::Csv => solution_csv(&solution),
                    };
                    emit(&text, &output.out)?;
                    eprintln!(
                        "extremal: N={n_max} F={:.12} residual={:.3e} iterations={}",
                        solution.f_value, solution.residual, solution.iterations
                    );
                    Ok(true)
                }
                Some(list) => {
                    let solution = solve_extremal(entropy, n_max, tol)?;
                    let study = convergence_study(entropy, &list, tol)?;
                    let text = match output.format.unwrap_or(Format::Json) {
                        Format::Json => pretty_json(&ExtremalWithStudy {
                            solution: &solution,
                            study: &study,
                        }),
                        Format::Csv => {
                            let mut text =
                                format!("# thinlab extremal entropy={entropy} tol={tol}\n");
                            text.push_str(&study.csv());
                            text
                        }
                    };
                    emit(&text, &output.out)?;
                    write_gnuplot(&output, "plot \"{csv}\" using 1:4 with linespoints title \"gap\"")?;
                    for row in study.rows.iter().filter(|r| r.error.is_some()) {
                        eprintln!("extremal: N={}: {}", row.n, row.error.as_ref().unwrap());
                    }
                    Ok(study.validate().is_ok())
                }
            }
        }

        Command::BroadcastRegion {
            lambda,
            energy,
            beta_steps,
            output,
        } => {
            let points = broadcast_region(lambda, energy, beta_steps)?;
            let text = match output.format.unwrap_or(Format::Csv) {
                Format::Json => pretty_json(&points),
                Format::Csv => csv_report(
                    &format!("thinlab broadcast-region lambda={lambda} energy={energy}"),
                    RatePoint::CSV_HEADER,
                    &points,
                    RatePoint::csv_row,
                ),
            };
            emit(&text, &output.out)?;
            write_gnuplot(&output, "plot \"{csv}\" using 2:3 with linespoints title \"rate region\"")?;
            Ok(true)
        }

        Command::Montecarlo {
            input,
            lambda,
            samples,
            seed,
            output,
        } => {
            let p = load_input(&input)?;
            let report = monte_carlo_report(&p, lambda, samples, seed)?;
            let text = match output.format.unwrap_or(Format::Json) {
                Format::Json => pretty_json(&report),
                Format::Csv => csv_report(
                    &format!("thinlab montecarlo lambda={lambda} samples={samples} seed={seed}"),
                    "seed,lambda,samples,total_variation,threshold,pass",
                    std::slice::from_ref(&report),
                    |r| {
                        format!(
                            "{},{},{},{},{},{}",
                            r.seed, r.lambda, r.samples, r.total_variation, r.threshold, r.pass
                        )
                    },
                ),
            };
            emit(&text, &output.out)?;
            eprintln!(
                "montecarlo: TV = {:.3e} vs threshold {:.3e}",
                report.total_variation, report.threshold
            );
            Ok(report.pass)
        }
    }
}

#[derive(serde::Serialize)]
struct ExtremalWithStudy<'a> {
    solution: &'a KktSolution,
    study: &'a ConvergenceStudy,
}

fn solution_csv(solution: &KktSolution) -> String {
    let mut text = format!(
        "# thinlab extremal S_target={} N={} mu={} lambda_mult={} F={} residual={}\n",
        solution.s_target,
        solution.n,
        solution.mu,
        solution.lambda_mult,
        solution.f_value,
        solution.residual
    );
    text.push_str("index,z,p\n");
    for i in 0..=solution.n {
        let _ = writeln!(text, "{i},{},{}", solution.z[i], solution.p[i]);
    }
    text
}
