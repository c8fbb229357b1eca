//! Regularized fixed-point solver: damped Picard iteration of the clamped
//! integral operator, continuation in the regularization index `m`, and
//! post-hoc certification of the solution bounds.
//!
//! The operator is
//!
//! ```text
//! (T_m x)(t) = ∫₀¹ G(t,τ) · f(τ, min{max{x̃(τ) + 1/m, 1/m}, R}) dτ,
//! ```
//!
//! where `x̃` is the interpolant of the grid iterate. The kernel splits as
//! `G(t,τ) = A(t)·B(τ) − C(t−τ)·[τ ≤ t]`, so each application costs one
//! full-interval integral `J = ∫ B·g` plus one tail integral per node:
//! `(T_m x)(t_i) = A(t_i)·J − ∫₀^{t_i} C(t_i−τ)g(τ)dτ`. Because `B(τ)` is
//! evaluated as `C(1−τ)` (one shared code path) and `A(1) = 1` exactly, the
//! node value at `t = 1` is the difference of two bitwise-identical
//! quadratures: the computed solution satisfies `x(1) = 0` exactly, not
//! approximately. All integrals flag both endpoints singular, since `q` may
//! blow up at either end and `C` has unbounded slope at `0` for `μ < 2`.
//!
//! Existence of a fixed point of `T_m` follows from compactness arguments
//! that are not constructive; Picard iteration carries no general
//! convergence guarantee here. The loop therefore damps —
//! `x ← x + θ(T_m x − x)` — halves `θ` when the defect `‖T_m x − x‖_∞`
//! grows over a ten-iteration window, and reports non-convergence with
//! diagnostics instead of hiding it. Iterates interpolate linearly by
//! default: linear interpolation cannot overshoot the certified bounds.
//!
//! [`solve`] runs the whole pipeline: condition checking and ε selection,
//! schedule validation (every stage must satisfy `1/m < ε`), warm-started
//! continuation, then the certificate battery. A report whose clauses all
//! pass comes back as `Ok`; any failed clause comes back as
//! [`SolveError::CertificationFailed`] still carrying the full report —
//! callers distinguish "solved and certified" from "solved but not
//! certified" by the `Result`, and a certification failure is an outcome,
//! not a panic.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::caputo::{self, CaputoError};
use crate::conditions::{self, ConditionsError};
use crate::green::{GreenError, Kernel};
use crate::grid::{uniform_nodes, GridError, GridFunction, Interp};
use crate::parallel;
use crate::problem::{ProblemError, ProblemSpec, Truncation};
use crate::quad::{integrate, QuadError, QuadRequest};

/// Hard cap on auto-generated continuation schedules.
const MAX_AUTO_STAGES: usize = 64;
/// Smallest damping factor the adaptive loop will fall to.
const MIN_DAMPING: f64 = 1.0 / 64.0;
/// Defect-growth lookback for the damping heuristic.
const DAMPING_WINDOW: usize = 10;
/// Absolute slack for the node-range certificate.
const RANGE_SLACK: f64 = 1e-12;
/// Absolute bound for the right-boundary certificate (the construction
/// gives exactly zero; anything above this signals an assembly bug).
const BOUNDARY_TOL: f64 = 1e-8;

/// Errors from the solver pipeline.
#[derive(Debug, Error)]
pub enum SolveError {
    /// Invalid parameters or schedule; configuration-level, not numeric.
    #[error("invalid solver input: {0}")]
    Invalid(String),
    /// Condition checking failed or refused the problem.
    #[error("condition check: {0}")]
    Conditions(#[from] ConditionsError),
    /// Quadrature failure inside the operator.
    #[error("operator quadrature: {0}")]
    Quadrature(#[from] QuadError),
    /// Kernel evaluation failure.
    #[error("kernel evaluation: {0}")]
    Green(#[from] GreenError),
    /// Grid construction failure.
    #[error("grid: {0}")]
    Grid(#[from] GridError),
    /// Problem/truncation construction failure.
    #[error("problem: {0}")]
    Problem(#[from] ProblemError),
    /// Residual evaluation failure.
    #[error("residual evaluation: {0}")]
    Caputo(#[from] CaputoError),
    /// The damped iteration did not reach the defect tolerance.
    #[error(
        "fixed-point iteration did not converge at m = {m}: defect {defect:.3e} \
         after {iterations} iterations (tol {tol:.3e}, final damping {damping})"
    )]
    NonConvergence {
        m: u64,
        iterations: usize,
        defect: f64,
        tol: f64,
        damping: f64,
    },
    /// The operator produced a non-finite node value.
    #[error("non-finite operator output: {0}")]
    NonFinite(String),
    /// The solve completed but at least one certificate failed; the report
    /// carries every clause with its margin.
    #[error("certification failed: {}", failed_clauses(report))]
    CertificationFailed { report: Box<SolveReport> },
}

fn failed_clauses(report: &SolveReport) -> String {
    let names: Vec<&str> = report
        .certificates
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name)
        .collect();
    names.join(", ")
}

/// Tunable knobs of [`solve_with`]. `Default` gives the shipping
/// configuration; serde defaults make every field optional in JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    /// Node count of the uniform solver grid (including both endpoints).
    pub grid_size: usize,
    /// Continuation tolerance: the final successive-m difference must fall
    /// below this, and the auto-schedule runs until `1/m ≤ tol`.
    pub tol: f64,
    /// Per-stage fixed-point defect tolerance `‖T_m x − x‖_∞`.
    pub fp_tol: f64,
    /// Initial damping θ ∈ (0, 1] of the Picard update.
    pub damping: f64,
    /// Per-stage iteration budget.
    pub max_iter: usize,
    /// Continuation schedule; empty means "generate powers of two from the
    /// smallest m with 1/m < ε until 1/m ≤ tol".
    pub m_schedule: Vec<u64>,
    /// Residual certificate threshold.
    pub residual_tol: f64,
    /// Interior window for the residual certificate.
    pub residual_window: (f64, f64),
    /// Absolute tolerance of the operator quadratures.
    pub quad_abs_tol: f64,
    /// Relative tolerance of the operator quadratures.
    pub quad_rel_tol: f64,
    /// Subdivision budget of the operator quadratures.
    pub max_subdivisions: usize,
    /// Interpolation rule for iterates inside the quadrature.
    pub interp: Interp,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            grid_size: 801,
            tol: 1e-5,
            fp_tol: 1e-9,
            damping: 0.5,
            max_iter: 400,
            m_schedule: Vec::new(),
            residual_tol: 1e-3,
            residual_window: (0.05, 0.9),
            quad_abs_tol: 2e-9,
            quad_rel_tol: 1e-9,
            max_subdivisions: 20_000,
            interp: Interp::Linear,
        }
    }
}

impl SolverParams {
    fn validate(&self) -> Result<(), SolveError> {
        if self.grid_size < 9 {
            return Err(SolveError::Invalid(format!(
                "grid_size must be at least 9 nodes, got {}",
                self.grid_size
            )));
        }
        for (name, value) in [
            ("tol", self.tol),
            ("fp_tol", self.fp_tol),
            ("residual_tol", self.residual_tol),
            ("quad_abs_tol", self.quad_abs_tol),
            ("quad_rel_tol", self.quad_rel_tol),
        ] {
            if !value.is_finite() || !(value > 0.0) {
                return Err(SolveError::Invalid(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        check_damping(self.damping)?;
        if self.max_iter == 0 {
            return Err(SolveError::Invalid("max_iter must be at least 1".into()));
        }
        let (lo, hi) = self.residual_window;
        if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi && hi < 1.0) {
            return Err(SolveError::Invalid(format!(
                "residual_window must satisfy 0 < lo < hi < 1, got ({lo}, {hi})"
            )));
        }
        if self.max_subdivisions == 0 {
            return Err(SolveError::Invalid(
                "max_subdivisions must be positive".into(),
            ));
        }
        Ok(())
    }
}

fn check_damping(damping: f64) -> Result<(), SolveError> {
    if !damping.is_finite() || !(damping > 0.0) || damping > 1.0 {
        return Err(SolveError::Invalid(format!(
            "damping must lie in (0, 1], got {damping}"
        )));
    }
    Ok(())
}

/// One certification clause: `passed` is exactly `margin ≥ 0`, where the
/// margin is the slack left under the clause's bound (negative = violated
/// by that much).
#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub name: &'static str,
    pub passed: bool,
    pub margin: f64,
    pub detail: String,
}

fn certificate(name: &'static str, margin: f64, detail: String) -> Certificate {
    Certificate {
        name,
        passed: margin >= 0.0,
        margin,
        detail,
    }
}

/// Outcome of a [`solve`] run: the final-stage solution plus everything
/// needed to audit it.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    /// Fixed point at the final continuation stage.
    pub solution: GridFunction,
    /// Certified regularization margin selected by the conditions module.
    pub epsilon: f64,
    /// Continuation schedule actually run (resolved if auto-generated).
    pub m_schedule: Vec<u64>,
    /// Damped-update count per stage.
    pub iterations: Vec<usize>,
    /// Sup-norm differences between successive stage solutions.
    pub continuation_diffs: Vec<f64>,
    /// Sup of the certified defect `|D^μx + f − ωx|` over the window.
    pub final_residual: f64,
    pub residual_window: (f64, f64),
    /// Every clause with its margin; `converged` is their conjunction.
    pub certificates: Vec<Certificate>,
    pub converged: bool,
}

struct QuadTols {
    abs_tol: f64,
    rel_tol: f64,
    max_subdivisions: usize,
}

impl QuadTols {
    fn of(params: &SolverParams) -> Self {
        Self {
            abs_tol: params.quad_abs_tol,
            rel_tol: params.quad_rel_tol,
            max_subdivisions: params.max_subdivisions,
        }
    }

    fn run(&self, f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> Result<f64, QuadError> {
        let mut req = QuadRequest::new(f, a, b);
        req.abs_tol = self.abs_tol;
        req.rel_tol = self.rel_tol;
        req.singular_left = true;
        req.singular_right = true;
        req.max_subdivisions = self.max_subdivisions;
        Ok(integrate(&req)?.value)
    }
}

/// One application of the regularized operator to a grid iterate, on the
/// iterate's own grid: `t_i ↦ ∫₀¹ G(t_i,τ)·f(τ, clamp(x̃(τ))) dτ` with both
/// quadrature endpoints flagged singular. Uses default quadrature
/// tolerances; the solver threads its own through the same core.
pub fn apply_t(
    problem: &ProblemSpec,
    trunc: Truncation,
    x: &GridFunction,
) -> Result<GridFunction, SolveError> {
    let kernel = Kernel::new(problem.params());
    apply_t_core(
        &kernel,
        problem,
        trunc,
        x,
        &QuadTols::of(&SolverParams::default()),
    )
}

fn apply_t_core(
    kernel: &Kernel,
    problem: &ProblemSpec,
    trunc: Truncation,
    x: &GridFunction,
    quad: &QuadTols,
) -> Result<GridFunction, SolveError> {
    let g = |tau: f64| problem.f(tau, trunc.clamp(x.eval_clamped(tau)));
    let j_full = quad.run(&|tau| kernel.b_factor(tau) * g(tau), 0.0, 1.0)?;
    let nodes = x.nodes();
    let values = parallel::try_map_indexed(x.len(), |i| -> Result<f64, SolveError> {
        let t = nodes[i];
        let tail = if i == 0 {
            // Empty tail: C(0−τ) is supported nowhere on [0, 0].
            0.0
        } else {
            quad.run(&|tau| kernel.c_factor(t - tau) * g(tau), 0.0, t)?
        };
        let out = kernel.a_factor(t) * j_full - tail;
        if !out.is_finite() {
            return Err(SolveError::NonFinite(format!(
                "operator value at t = {t} is {out}"
            )));
        }
        Ok(out)
    })?;
    Ok(x.with_values(values)?)
}

struct FixedPointRun {
    x: GridFunction,
    iterations: usize,
}

/// Damped Picard iteration `x ← x + θ(T_m x − x)` until the defect
/// `‖T_m x − x‖_∞` falls below `tol`. Returns the iterate whose defect
/// certifies, so a constant-in-x dynamics converges after one update.
pub fn fixed_point(
    problem: &ProblemSpec,
    trunc: Truncation,
    x0: &GridFunction,
    damping: f64,
    tol: f64,
    max_iter: usize,
) -> Result<GridFunction, SolveError> {
    check_damping(damping)?;
    if !tol.is_finite() || !(tol > 0.0) {
        return Err(SolveError::Invalid(format!(
            "fixed-point tolerance must be positive and finite, got {tol}"
        )));
    }
    if max_iter == 0 {
        return Err(SolveError::Invalid("max_iter must be at least 1".into()));
    }
    let kernel = Kernel::new(problem.params());
    let quad = QuadTols::of(&SolverParams::default());
    Ok(fixed_point_core(&kernel, problem, trunc, x0, damping, tol, max_iter, &quad)?.x)
}

#[allow(clippy::too_many_arguments)]
fn fixed_point_core(
    kernel: &Kernel,
    problem: &ProblemSpec,
    trunc: Truncation,
    x0: &GridFunction,
    damping: f64,
    tol: f64,
    max_iter: usize,
    quad: &QuadTols,
) -> Result<FixedPointRun, SolveError> {
    let mut x = x0.clone();
    let mut theta = damping;
    let mut defects: Vec<f64> = Vec::with_capacity(max_iter + 1);
    let mut last_halving = 0usize;
    for updates in 0..=max_iter {
        let tx = apply_t_core(kernel, problem, trunc, &x, quad)?;
        let defect = x.sup_distance(&tx)?;
        if defect <= tol {
            return Ok(FixedPointRun {
                x,
                iterations: updates,
            });
        }
        if updates == max_iter {
            return Err(SolveError::NonConvergence {
                m: trunc.m(),
                iterations: max_iter,
                defect,
                tol,
                damping: theta,
            });
        }
        defects.push(defect);
        // Divergence guard: a defect above its value ten checks ago halves
        // the damping (at most once per window).
        let k = defects.len();
        if k > DAMPING_WINDOW
            && k - last_halving > DAMPING_WINDOW
            && defect > defects[k - 1 - DAMPING_WINDOW]
            && theta > MIN_DAMPING
        {
            theta = (0.5 * theta).max(MIN_DAMPING);
            last_halving = k;
        }
        let stepped: Vec<f64> = x
            .values()
            .iter()
            .zip(tx.values())
            .map(|(&old, &new)| old + theta * (new - old))
            .collect();
        x = x.with_values(stepped)?;
    }
    unreachable!("loop returns or errors at updates == max_iter");
}

/// The certified lower-bound profile `γ_{R+ε}·σ(t)/(ω·E_{μ,1}(ω))` at the
/// given nodes.
pub fn lower_bound_profile(
    problem: &ProblemSpec,
    epsilon: f64,
    nodes: &[f64],
) -> Result<Vec<f64>, SolveError> {
    let kernel = Kernel::new(problem.params());
    let omega = problem.params().omega();
    let coeff = problem.gamma(problem.r_ceiling() + epsilon) / (omega * kernel.e1());
    nodes
        .iter()
        .map(|&t| Ok(coeff * kernel.sigma(t)?))
        .collect()
}

fn auto_schedule(epsilon: f64, tol: f64) -> Vec<u64> {
    let mut m: u64 = 1;
    while (1.0 / m as f64) >= epsilon {
        m = m.saturating_mul(2);
    }
    let mut schedule = vec![m];
    while (1.0 / m as f64) > tol && schedule.len() < MAX_AUTO_STAGES {
        m = m.saturating_mul(2);
        schedule.push(m);
    }
    schedule
}

fn validate_schedule(schedule: &[u64], epsilon: f64) -> Result<(), SolveError> {
    if schedule.is_empty() {
        return Err(SolveError::Invalid("m_schedule must not be empty".into()));
    }
    for pair in schedule.windows(2) {
        if pair[1] <= pair[0] {
            return Err(SolveError::Invalid(format!(
                "m_schedule must be strictly increasing, got {} then {}",
                pair[0], pair[1]
            )));
        }
    }
    let first = schedule[0];
    if first == 0 || 1.0 / first as f64 >= epsilon {
        return Err(SolveError::Invalid(format!(
            "every stage needs 1/m < ε: m = {first} violates it (ε = {epsilon:.6})"
        )));
    }
    Ok(())
}

/// Runs the full pipeline at the spec'd defaults: condition check and ε
/// selection, continuation over `m_schedule` (auto-generated when empty) on
/// a `grid_size`-node grid, certification at tolerance `tol`.
pub fn solve(
    problem: &ProblemSpec,
    m_schedule: &[u64],
    grid_size: usize,
    tol: f64,
) -> Result<SolveReport, SolveError> {
    let params = SolverParams {
        grid_size,
        tol,
        m_schedule: m_schedule.to_vec(),
        ..SolverParams::default()
    };
    solve_with(problem, &params)
}

/// [`solve`] with every knob exposed.
pub fn solve_with(problem: &ProblemSpec, params: &SolverParams) -> Result<SolveReport, SolveError> {
    params.validate()?;
    let epsilon = conditions::epsilon_select(problem)?;
    let schedule = if params.m_schedule.is_empty() {
        auto_schedule(epsilon, params.tol)
    } else {
        params.m_schedule.clone()
    };
    validate_schedule(&schedule, epsilon)?;

    let kernel = Kernel::new(problem.params());
    let quad = QuadTols::of(params);
    let r_ceiling = problem.r_ceiling();
    let gamma_r = problem.gamma(r_ceiling);
    let nodes = uniform_nodes(params.grid_size - 1);

    // Initial iterate: the guaranteed lower-bound shape, γ_R · ∫G dτ.
    let x0_values: Result<Vec<f64>, GreenError> = nodes
        .iter()
        .map(|&t| Ok(gamma_r * kernel.mass(t)?))
        .collect();
    let mut x = GridFunction::new(nodes, x0_values?, params.interp)?;

    let mut iterations = Vec::with_capacity(schedule.len());
    let mut continuation_diffs = Vec::new();
    for &m in &schedule {
        let trunc = Truncation::new(m, r_ceiling)?;
        let run = fixed_point_core(
            &kernel,
            problem,
            trunc,
            &x,
            params.damping,
            params.fp_tol,
            params.max_iter,
            &quad,
        )?;
        iterations.push(run.iterations);
        if iterations.len() > 1 {
            continuation_diffs.push(x.sup_distance(&run.x)?);
        }
        x = run.x;
    }

    let report = certify(
        problem,
        params,
        epsilon,
        schedule,
        iterations,
        continuation_diffs,
        x,
    )?;
    if report.converged {
        Ok(report)
    } else {
        Err(SolveError::CertificationFailed {
            report: Box::new(report),
        })
    }
}

#[allow(clippy::too_many_arguments)]
fn certify(
    problem: &ProblemSpec,
    params: &SolverParams,
    epsilon: f64,
    m_schedule: Vec<u64>,
    iterations: Vec<usize>,
    continuation_diffs: Vec<f64>,
    x: GridFunction,
) -> Result<SolveReport, SolveError> {
    let r_ceiling = problem.r_ceiling();
    let mu = problem.params().mu();
    let omega = problem.params().omega();
    let h = x.h();
    let n = x.intervals();
    let m_final = *m_schedule.last().expect("validated nonempty");
    let mut certificates = Vec::with_capacity(8);

    // Lower bound: x(t_i) ≥ γ_{R+ε}σ(t_i)/(ωE_{μ,1}(ω)) − tol at all nodes.
    let lower = lower_bound_profile(problem, epsilon, x.nodes())?;
    let lower_margin = x
        .values()
        .iter()
        .zip(&lower)
        .map(|(&xi, &li)| xi - (li - params.tol))
        .fold(f64::INFINITY, f64::min);
    certificates.push(certificate(
        "lower_bound",
        lower_margin,
        format!("min over nodes of x − (γ_(R+ε)σ/(ωE1) − tol); ε = {epsilon:.6e}"),
    ));

    // Upper bound: x(t_i) ≤ R − ε + tol.
    let x_max = x.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    certificates.push(certificate(
        "upper_bound",
        (r_ceiling - epsilon + params.tol) - x_max,
        format!("max node value {x_max:.6e} against R − ε + tol"),
    ));

    // Right boundary: the assembly gives exactly zero.
    let boundary = x.value_at(n).abs();
    certificates.push(certificate(
        "boundary_value",
        BOUNDARY_TOL - boundary,
        format!("|x(1)| = {boundary:.3e}"),
    ));

    // Left boundary: first-increment slope inside the t^{μ−1} envelope of
    // the integral representation (the derivative vanishes at 0).
    let slope = (x.value_at(1) - x.value_at(0)).abs() / h;
    let envelope = 10.0 * (1.0 + r_ceiling) * h.powf(mu - 1.0);
    certificates.push(certificate(
        "initial_slope",
        envelope - slope,
        format!("|x(t_1) − x(0)|/h = {slope:.3e} against envelope {envelope:.3e}"),
    ));

    // Unclamped consistency: x(t_i) + 1/m ∈ [1/m, R], i.e. the clamp is
    // inactive at the fixed point up to the +1/m shift.
    let inv_m = 1.0 / m_final as f64;
    let range_margin = x
        .values()
        .iter()
        .map(|&xi| (xi + RANGE_SLACK).min(r_ceiling - inv_m - xi + RANGE_SLACK))
        .fold(f64::INFINITY, f64::min);
    certificates.push(certificate(
        "iterate_range",
        range_margin,
        format!("node values within [0, R − 1/m] for m = {m_final}"),
    ));

    // Continuation: successive-m differences must not grow (10% headroom
    // for quadrature noise) and the final one must fall below tol.
    let (monotone_margin, monotone_detail) = if continuation_diffs.len() < 2 {
        (
            0.0,
            "fewer than two continuation differences; vacuous".to_string(),
        )
    } else {
        let margin = continuation_diffs
            .windows(2)
            .map(|d| 1.1 * d[0] + 1e-15 - d[1])
            .fold(f64::INFINITY, f64::min);
        (margin, format!("diffs {continuation_diffs:?}"))
    };
    certificates.push(certificate(
        "continuation_monotone",
        monotone_margin,
        monotone_detail,
    ));
    let (final_margin, final_detail) = match continuation_diffs.last() {
        None => (0.0, "single-stage schedule; vacuous".to_string()),
        Some(&d) => (
            params.tol - d,
            format!("final diff {d:.3e} against tol {:.3e}", params.tol),
        ),
    };
    certificates.push(certificate(
        "continuation_final",
        final_margin,
        final_detail,
    ));

    // Residual of the differential equation on the interior window.
    let final_residual = caputo::residual(problem, &x, params.residual_window)?;
    certificates.push(certificate(
        "residual",
        params.residual_tol - final_residual,
        format!(
            "sup |D^mu x + f − ωx| = {final_residual:.3e} on {:?} (ω = {omega})",
            params.residual_window
        ),
    ));

    let converged = certificates.iter().all(|c| c.passed);
    Ok(SolveReport {
        solution: x,
        epsilon,
        m_schedule,
        iterations,
        continuation_diffs,
        final_residual,
        residual_window: params.residual_window,
        certificates,
        converged,
    })
}
