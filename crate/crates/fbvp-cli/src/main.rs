//! `fbvp` — solve and inspect singular fractional boundary-value problems.
//!
//! Commands: `solve` (solution CSV + report JSON), `check` (condition report
//! JSON), `green` (kernel grid CSV), `ml` (one Mittag-Leffler value),
//! `example` (the built-in worked example's constant table).
//!
//! Exit status: 0 full certification, 1 certification failure, 2
//! configuration error, 3 internal numeric failure. `FBVP_THREADS` caps
//! internal parallelism (0 = serial).

// Same numeric-guard and test-constant conventions as the core crate.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]
mod config;
mod expr;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fbvp_core::caputo::caputo_apply;
use fbvp_core::conditions::{check_a2, example_constants, ConditionsError};
use fbvp_core::solver::{lower_bound_profile, solve_with, SolveError, SolveReport};
use fbvp_core::specfun::{mittag_leffler, EvalPolicy, MLIndex};

use config::{Built, OutputFormat};
use output::{fmt_float, write_file, Table};

#[derive(Parser)]
#[command(
    name = "fbvp",
    version,
    about = "Singular fractional boundary-value problems: solve, certify, inspect"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured problem; write solution.{csv,json} and report.json
    Solve {
        /// Problem configuration (JSON)
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config's output.dir; default ".")
        #[arg(long)]
        out: Option<PathBuf>,
        /// Table format (overrides the config's output.format)
        #[arg(long, value_enum)]
        format: Option<OutputFormat>,
        /// Override solver.grid_size
        #[arg(long)]
        nodes: Option<usize>,
        /// Override solver.tol
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Check the integrability/growth conditions; write report JSON
    Check {
        /// Problem configuration (JSON)
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default ".")
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate the kernel G(t, τ) on a square grid
    Green {
        /// Problem configuration (JSON; provides μ and ω)
        #[arg(long)]
        config: PathBuf,
        /// Points per axis (default 101)
        #[arg(long)]
        nodes: Option<usize>,
        /// Output directory (default ".")
        #[arg(long)]
        out: Option<PathBuf>,
        /// Table format
        #[arg(long, value_enum)]
        format: Option<OutputFormat>,
    },
    /// Print one E_{μ,ν}(x) value
    Ml {
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        nu: f64,
        #[arg(long)]
        x: f64,
    },
    /// Reproduce the built-in worked example's constant table
    Example {
        #[arg(long)]
        lambda: f64,
        #[arg(long = "R")]
        r_ceiling: f64,
        /// Also write the table into this directory
        #[arg(long)]
        out: Option<PathBuf>,
        /// Table format for --out
        #[arg(long, value_enum)]
        format: Option<OutputFormat>,
    },
}

/// Exit-status taxonomy. 0 is encoded as `Ok(Outcome::Certified)`.
enum Failure {
    /// Status 1: the run completed but certification (or a condition
    /// verdict, or the example-table tolerance) failed.
    Certification(String),
    /// Status 2: configuration, flags, or expressions are invalid.
    Config(String),
    /// Status 3: internal numeric failure (quadrature, non-convergence,
    /// non-finite values) or an artifact could not be written.
    Internal(String),
}

impl Failure {
    fn status(&self) -> u8 {
        match self {
            Failure::Certification(_) => 1,
            Failure::Config(_) => 2,
            Failure::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Certification(m) | Failure::Config(m) | Failure::Internal(m) => m,
        }
    }
}

impl From<config::ConfigError> for Failure {
    fn from(e: config::ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Internal(format!("i/o: {e}"))
    }
}

/// Solver errors other than `CertificationFailed` (handled at the call site
/// because its report is still written out).
fn classify_solve(e: SolveError) -> Failure {
    match e {
        SolveError::Invalid(m) => Failure::Config(m),
        SolveError::Problem(e) => Failure::Config(e.to_string()),
        SolveError::Conditions(ce) => classify_conditions(ce),
        other => Failure::Internal(other.to_string()),
    }
}

fn classify_conditions(e: ConditionsError) -> Failure {
    match e {
        // The hypotheses themselves fail: that is a certification outcome.
        ConditionsError::A2Failed { .. } | ConditionsError::NoAdmissibleEpsilon { .. } => {
            Failure::Certification(e.to_string())
        }
        ConditionsError::Invalid(m) => Failure::Config(m),
        ConditionsError::Degenerate(m) => Failure::Config(m),
        ConditionsError::Example(inner) => Failure::Config(inner.to_string()),
        ConditionsError::Quadrature(_) => Failure::Internal(e.to_string()),
    }
}

fn main() -> ExitCode {
    fbvp_core::parallel::init_from_env();
    let cli = Cli::parse(); // clap reports usage errors with status 2
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.status())
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Solve {
            config,
            out,
            format,
            nodes,
            tol,
        } => cmd_solve(&config, out, format, nodes, tol),
        Command::Check { config, out } => cmd_check(&config, out),
        Command::Green {
            config,
            nodes,
            out,
            format,
        } => cmd_green(&config, nodes, out, format),
        Command::Ml { mu, nu, x } => cmd_ml(mu, nu, x),
        Command::Example {
            lambda,
            r_ceiling,
            out,
            format,
        } => cmd_example(lambda, r_ceiling, out, format),
    }
}

fn resolve_output(
    built_output: &config::OutputConfig,
    out: Option<PathBuf>,
    format: Option<OutputFormat>,
) -> (PathBuf, OutputFormat) {
    let dir = out
        .or_else(|| built_output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let format = format.or(built_output.format).unwrap_or(OutputFormat::Csv);
    (dir, format)
}

fn write_table(
    dir: &std::path::Path,
    stem: &str,
    format: OutputFormat,
    table: &Table,
) -> Result<PathBuf, Failure> {
    let (name, contents) = match format {
        OutputFormat::Csv => (format!("{stem}.csv"), table.to_csv()),
        OutputFormat::Json => (format!("{stem}.json"), table.to_json()),
    };
    Ok(write_file(dir, &name, &contents)?)
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

/// Solution table: node, value, certified lower bound, and the pointwise
/// equation residual (nan where the discrete operator or the data are
/// undefined, e.g. at singular endpoints).
fn solution_table(built: &Built, report: &SolveReport) -> Result<Table, Failure> {
    let problem = &built.problem;
    let mu = problem.params().mu();
    let omega = problem.params().omega();
    let nodes = report.solution.nodes();
    let lower = lower_bound_profile(problem, report.epsilon, nodes).map_err(classify_solve)?;
    let derivative =
        caputo_apply(&report.solution, mu).map_err(|e| Failure::Internal(e.to_string()))?;
    let mut rows = Vec::with_capacity(nodes.len());
    for (k, &t) in nodes.iter().enumerate() {
        let x = report.solution.value_at(k);
        let residual = match derivative.value_at(k) {
            Some(d) => {
                let r = d + problem.f(t, x) - omega * x;
                if r.is_finite() {
                    r
                } else {
                    f64::NAN
                }
            }
            None => f64::NAN,
        };
        rows.push(vec![t, x, lower[k], residual]);
    }
    Ok(Table::numeric(
        vec!["t", "x", "lower_bound", "residual"],
        rows,
    ))
}

fn cmd_solve(
    config_path: &std::path::Path,
    out: Option<PathBuf>,
    format: Option<OutputFormat>,
    nodes: Option<usize>,
    tol: Option<f64>,
) -> Result<(), Failure> {
    let built = config::load(config_path)?;
    let mut params = built.solver.clone();
    if let Some(n) = nodes {
        params.grid_size = n;
    }
    if let Some(t) = tol {
        params.tol = t;
    }
    let (dir, format) = resolve_output(&built.output, out, format);

    let (report, certified) = match solve_with(&built.problem, &params) {
        Ok(report) => (report, true),
        Err(SolveError::CertificationFailed { report }) => (*report, false),
        Err(other) => return Err(classify_solve(other)),
    };

    let table = solution_table(&built, &report)?;
    let solution_path = write_table(&dir, "solution", format, &table)?;
    let report_json = serde_json::to_string_pretty(&report)
        .map_err(|e| Failure::Internal(format!("report serialization: {e}")))?;
    let report_path = write_file(&dir, "report.json", &(report_json + "\n"))?;

    println!("solution: {}", solution_path.display());
    println!("report:   {}", report_path.display());
    if certified {
        println!(
            "certified: all {} clauses hold (final residual {}, ε = {})",
            report.certificates.len(),
            fmt_float(report.final_residual),
            fmt_float(report.epsilon),
        );
        Ok(())
    } else {
        let failing: Vec<&str> = report
            .certificates
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name)
            .collect();
        Err(Failure::Certification(format!(
            "certification failed on: {} (details in {})",
            failing.join(", "),
            report_path.display()
        )))
    }
}

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

fn cmd_check(config_path: &std::path::Path, out: Option<PathBuf>) -> Result<(), Failure> {
    let built = config::load(config_path)?;
    let report = check_a2(&built.problem).map_err(classify_conditions)?;
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| Failure::Internal(format!("report serialization: {e}")))?;
    let dir = out.unwrap_or_else(|| PathBuf::from("."));
    let path = write_file(&dir, "conditions.json", &(json + "\n"))?;
    println!("conditions report: {}", path.display());
    println!(
        "q integrable: {}; threshold: {}; ratio: {} (a2_ratio = {})",
        report.verdicts.a1_integrable,
        report.verdicts.a2_threshold,
        report.verdicts.a2_ratio,
        fmt_float(report.a2_ratio),
    );
    if report.verdicts.overall {
        println!("verdict: conditions hold");
        Ok(())
    } else {
        Err(Failure::Certification(
            "conditions do not hold (see report)".into(),
        ))
    }
}

// ---------------------------------------------------------------------------
// green
// ---------------------------------------------------------------------------

fn cmd_green(
    config_path: &std::path::Path,
    nodes: Option<usize>,
    out: Option<PathBuf>,
    format: Option<OutputFormat>,
) -> Result<(), Failure> {
    let built = config::load(config_path)?;
    let n = nodes.unwrap_or(101);
    if n < 2 {
        return Err(Failure::Config(format!(
            "--nodes must be at least 2, got {n}"
        )));
    }
    let (dir, format) = resolve_output(&built.output, out, format);
    let mut rows = Vec::with_capacity(n * n);
    for i in 0..n {
        let t = i as f64 / (n - 1) as f64;
        for j in 0..n {
            let tau = j as f64 / (n - 1) as f64;
            let g = built
                .kernel
                .green(t, tau)
                .map_err(|e| Failure::Internal(e.to_string()))?;
            rows.push(vec![t, tau, g]);
        }
    }
    let table = Table::numeric(vec!["t", "tau", "G"], rows);
    let path = write_table(&dir, "green", format, &table)?;
    println!("kernel grid ({n}×{n}): {}", path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// ml
// ---------------------------------------------------------------------------

fn cmd_ml(mu: f64, nu: f64, x: f64) -> Result<(), Failure> {
    let index = MLIndex::new(mu, nu).map_err(|e| Failure::Config(e.to_string()))?;
    let value = mittag_leffler(index, x, &EvalPolicy::default())
        .map_err(|e| Failure::Internal(e.to_string()))?;
    println!("{}", fmt_float(value));
    Ok(())
}

// ---------------------------------------------------------------------------
// example
// ---------------------------------------------------------------------------

fn cmd_example(
    lambda: f64,
    r_ceiling: f64,
    out: Option<PathBuf>,
    format: Option<OutputFormat>,
) -> Result<(), Failure> {
    let rows = example_constants(lambda, r_ceiling).map_err(classify_conditions)?;
    let width = rows.iter().map(|r| r.label.len()).max().unwrap_or(0);
    println!(
        "{:<width$}  {:>24}  {:>12}  {:>12}",
        "constant", "computed", "reference", "rel. dev."
    );
    let mut worst = 0.0f64;
    let mut table_rows = Vec::with_capacity(rows.len());
    for row in &rows {
        let dev = row.relative_deviation();
        worst = worst.max(dev);
        println!(
            "{:<width$}  {:>24}  {:>12}  {:>12.3e}",
            row.label,
            fmt_float(row.computed),
            row.reference,
            dev
        );
        table_rows.push(vec![row.computed, row.reference, dev]);
    }
    if let Some(dir) = out {
        let mut table = Table::numeric(
            vec!["computed", "reference", "relative_deviation"],
            table_rows,
        );
        table.labels = Some(("constant", rows.iter().map(|r| r.label.clone()).collect()));
        let path = write_table(&dir, "example", format.unwrap_or(OutputFormat::Csv), &table)?;
        println!("table: {}", path.display());
    }
    if worst < 1e-3 {
        println!("all constants within 1e-3 relative of their references");
        Ok(())
    } else {
        Err(Failure::Certification(format!(
            "worst relative deviation {worst:.3e} exceeds 1e-3"
        )))
    }
}
