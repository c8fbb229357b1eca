//! End-to-end acceptance gates: seven criteria, one test each. Every test
//! prints exactly one `ACCEPTANCE <n> [<name>]: PASS/FAIL — <measured>` line
//! (visible with `--nocapture`, and always surfaced on failure). The numeric
//! gates and runtime budgets are pinned contracts, not tuning knobs; a red
//! criterion panics with the measured numbers and analysis, never silently.

// `!(v >= 1.0)` rather than `v < 1.0`: the negated form also trips on NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
use std::sync::{Arc, Mutex, PoisonError};
use std::time::Instant;

use fbvp_core::caputo::caputo_apply;
use fbvp_core::conditions::{check_a2, chi, epsilon_select, example_constants, lambda_window};
use fbvp_core::example::ExampleFamily;
use fbvp_core::green::Kernel;
use fbvp_core::quad::{integrate, QuadRequest};
use fbvp_core::solver::{solve_with, SolveError};
use fbvp_core::specfun::{gamma_fn, mittag_leffler, EvalPolicy, MLIndex};
use fbvp_core::{GridFunction, Interp, KernelParams, ProblemSpec, SolverParams};

/// One criterion at a time: the budgets are wall-clock, so criteria must not
/// time-share cores. `into_inner` keeps a poisoned lock (an earlier red
/// criterion) from masking the remaining ones.
static GATE: Mutex<()> = Mutex::new(());

fn run(num: u32, name: &str, budget_s: f64, body: impl FnOnce() -> Result<String, String>) {
    let _serial = GATE.lock().unwrap_or_else(PoisonError::into_inner);
    let start = Instant::now();
    let outcome = body();
    let secs = start.elapsed().as_secs_f64();
    let outcome = outcome.and_then(|detail| {
        if secs <= budget_s {
            Ok(format!("{detail} [{secs:.1}s of {budget_s:.0}s budget]"))
        } else {
            Err(format!(
                "numeric gates passed but runtime {secs:.1}s exceeds the {budget_s:.0}s budget"
            ))
        }
    });
    match outcome {
        Ok(detail) => println!("ACCEPTANCE {num} [{name}]: PASS — {detail}"),
        Err(detail) => {
            println!("ACCEPTANCE {num} [{name}]: FAIL — {detail}");
            panic!("acceptance criterion {num} ({name}): {detail}");
        }
    }
}

fn rel_err(got: f64, want: f64) -> f64 {
    ((got - want) / want).abs()
}

fn ml(mu: f64, nu: f64, x: f64) -> Result<f64, String> {
    let idx = MLIndex::new(mu, nu).map_err(|e| e.to_string())?;
    mittag_leffler(idx, x, &EvalPolicy::default()).map_err(|e| e.to_string())
}

// ---------------------------------------------------------------------------
// 1. Special-function identities.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_1_special_functions() {
    run(1, "special-function identities", 1.0, || {
        // E_{1,1}(x) = e^x and E_{2,1}(x) = cosh(√x) on x = 0.1, 0.2, …, 10
        // to 1e-12 relative.
        let mut worst_exp = 0.0f64;
        let mut worst_cosh = 0.0f64;
        for k in 1..=100u32 {
            let x = f64::from(k) / 10.0;
            worst_exp = worst_exp.max(rel_err(ml(1.0, 1.0, x)?, x.exp()));
            worst_cosh = worst_cosh.max(rel_err(ml(2.0, 1.0, x)?, x.sqrt().cosh()));
        }
        if worst_exp > 1e-12 {
            return Err(format!(
                "E_{{1,1}} vs exp worst rel err {worst_exp:.3e} > 1e-12"
            ));
        }
        if worst_cosh > 1e-12 {
            return Err(format!(
                "E_{{2,1}} vs cosh√ worst rel err {worst_cosh:.3e} > 1e-12"
            ));
        }
        // Shift identity E_{μ,1}(z) = 1 + z·E_{μ,μ+1}(z) on the (μ, z) grid
        // to 1e-10 relative.
        let mut worst_shift = 0.0f64;
        for mu in [1.1, 1.3, 1.5, 1.7, 1.9, 2.0] {
            for z in [0.0, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 35.0, 50.0] {
                let lhs = ml(mu, 1.0, z)?;
                let rhs = 1.0 + z * ml(mu, mu + 1.0, z)?;
                let err = rel_err(lhs, rhs);
                if err > 1e-10 {
                    return Err(format!(
                        "shift identity rel err {err:.3e} > 1e-10 at mu={mu}, z={z}"
                    ));
                }
                worst_shift = worst_shift.max(err);
            }
        }
        Ok(format!(
            "exp/cosh agreement worst {worst_exp:.1e}/{worst_cosh:.1e} (gate 1e-12); \
             shift identity worst {worst_shift:.1e} over 60 (μ,z) pairs (gate 1e-10)"
        ))
    });
}

// ---------------------------------------------------------------------------
// 2. Green's-kernel suite.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_2_green_kernel() {
    run(2, "Green's-kernel suite", 30.0, || {
        let mut worst_diag = 0.0f64;
        let mut worst_mass = 0.0f64;
        let mut min_g = f64::INFINITY;
        for mu in [1.1, 1.5, 1.9, 2.0] {
            for omega in [0.5, 2.0, 10.0] {
                let kernel = Kernel::new(KernelParams::new(mu, omega).map_err(|e| e.to_string())?);
                let emm = kernel.emm();
                let n = 200usize;
                for i in 0..=n {
                    let t = i as f64 / n as f64;
                    // Boundary rows vanish exactly: G(t,1) = G(1,τ) = 0.
                    let g_t1 = kernel.green(t, 1.0).map_err(|e| e.to_string())?;
                    let g_1t = kernel.green(1.0, t).map_err(|e| e.to_string())?;
                    if g_t1 != 0.0 || g_1t != 0.0 {
                        return Err(format!(
                            "boundary zero violated at mu={mu}, omega={omega}, t={t}: \
                             G(t,1)={g_t1:e}, G(1,t)={g_1t:e}"
                        ));
                    }
                    // Nonnegativity and the E_{μ,μ}(ω) bound on the 201×201 grid.
                    for j in 0..=n {
                        let tau = j as f64 / n as f64;
                        let g = kernel.green(t, tau).map_err(|e| e.to_string())?;
                        min_g = min_g.min(g);
                        if g < 0.0 {
                            return Err(format!(
                                "negative kernel value {g:e} at mu={mu}, omega={omega}, \
                                 (t,τ)=({t},{tau})"
                            ));
                        }
                        if g > emm * (1.0 + 1e-13) {
                            return Err(format!(
                                "kernel bound violated at mu={mu}, omega={omega}, \
                                 (t,τ)=({t},{tau}): G={g:.16e} > E_{{μ,μ}}(ω)={emm:.16e}"
                            ));
                        }
                    }
                }
                // Branch agreement on the diagonal: the τ ≤ t formula equals
                // the τ > t formula at τ = t (their difference is the kernel
                // tail at zero lag, which must vanish identically).
                for i in 0..=40 {
                    let t = i as f64 / 40.0;
                    let on = kernel.green(t, t).map_err(|e| e.to_string())?;
                    let ab = kernel.a_factor(t) * kernel.b_factor(t);
                    let err = (on - ab).abs() / (1.0 + ab.abs());
                    if err > 1e-12 {
                        return Err(format!(
                            "diagonal branch mismatch {err:.3e} at mu={mu}, omega={omega}, t={t}"
                        ));
                    }
                    worst_diag = worst_diag.max(err);
                }
                // Mass identity: ∫₀¹ G(t,τ) dτ matches the closed-form kernel
                // mass to 1e-8 absolute (quadrature with both endpoints
                // flagged singular; the integrand also has an interior kink
                // at τ = t that plain bisection must resolve).
                for i in 0..=20 {
                    let t = i as f64 / 20.0;
                    let f = |tau: f64| kernel.green(t, tau).unwrap_or(f64::NAN);
                    let mut req = QuadRequest::new(&f, 0.0, 1.0);
                    req.abs_tol = 1e-10;
                    req.rel_tol = 1e-10;
                    req.singular_left = true;
                    req.singular_right = true;
                    req.max_subdivisions = 20_000;
                    let got = integrate(&req).map_err(|e| e.to_string())?.value;
                    let want = kernel.mass(t).map_err(|e| e.to_string())?;
                    let err = (got - want).abs();
                    if err > 1e-8 {
                        return Err(format!(
                            "mass identity off by {err:.3e} (> 1e-8) at mu={mu}, \
                             omega={omega}, t={t}: quadrature {got:.16e} vs mass {want:.16e}"
                        ));
                    }
                    worst_mass = worst_mass.max(err);
                }
            }
        }
        Ok(format!(
            "12 (μ,ω) kernels: boundaries exactly zero, min G = {min_g:.1e} ≥ 0, bound \
             G ≤ E_{{μ,μ}}(ω) holds on 201×201, diagonal branch agreement worst \
             {worst_diag:.1e} (gate 1e-12), mass identity worst |Δ| {worst_mass:.1e} \
             (gate 1e-8 absolute)"
        ))
    });
}

// ---------------------------------------------------------------------------
// 3. Worked-example constant table.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_3_example_constants() {
    run(3, "worked-example constants", 10.0, || {
        let rows = example_constants(0.009, 1.0).map_err(|e| e.to_string())?;
        let expected = [
            3.07853, 4.37043, 1.94308, 5.21001, 7.94329, 13.3352, 3.59596,
        ];
        if rows.len() != expected.len() {
            return Err(format!(
                "expected {} constants, got {}",
                expected.len(),
                rows.len()
            ));
        }
        let mut worst = 0.0f64;
        for (row, want) in rows.iter().zip(expected) {
            if row.reference != want {
                return Err(format!(
                    "reference drift: row '{}' carries {} instead of {}",
                    row.label, row.reference, want
                ));
            }
            let dev = row.relative_deviation();
            if dev > 1e-3 {
                return Err(format!(
                    "row '{}': computed {:.6} vs reference {} (rel dev {:.3e} > 1e-3)",
                    row.label, row.computed, row.reference, dev
                ));
            }
            worst = worst.max(dev);
        }
        Ok(format!(
            "all 7 published constants reproduced from first principles, worst relative \
             deviation {worst:.2e} (gate 1e-3; references print 6 significant digits)"
        ))
    });
}

// ---------------------------------------------------------------------------
// 4. Classical-limit (μ = 2) oracle equivalence.
// ---------------------------------------------------------------------------

/// Tridiagonal solve (Thomas algorithm). `lower[0]` and `upper[n-1]` are
/// ignored.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>, String> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut out = vec![0.0; n];
    if diag[0] == 0.0 {
        return Err("singular tridiagonal pivot at row 0".into());
    }
    c[0] = upper[0] / diag[0];
    out[0] = rhs[0] / diag[0];
    for j in 1..n {
        let piv = diag[j] - lower[j] * c[j - 1];
        if piv == 0.0 {
            return Err(format!("singular tridiagonal pivot at row {j}"));
        }
        if j < n - 1 {
            c[j] = upper[j] / piv;
        }
        out[j] = (rhs[j] - lower[j] * out[j - 1]) / piv;
    }
    for j in (0..n - 1).rev() {
        out[j] -= c[j] * out[j + 1];
    }
    Ok(out)
}

/// `∫₀ʰ (h−s)·q(s) ds` for a left-edge weight with an integrable `s^{−1/2}`
/// blow-up: substituting `s = h·u²` gives `2h² ∫₀¹ (1−u²)·u·q(hu²) du`, whose
/// integrand extends continuously to `u = 0`; composite midpoint (4000 cells)
/// never evaluates an endpoint.
fn weighted_left_mass(q: &dyn Fn(f64) -> f64, h: f64) -> f64 {
    let k = 4000usize;
    let mut acc = 0.0;
    for i in 0..k {
        let u = (i as f64 + 0.5) / k as f64;
        acc += (1.0 - u * u) * u * q(h * u * u);
    }
    2.0 * h * h * acc / k as f64
}

/// Independent second-order finite-difference/Newton oracle for the
/// classical case μ = 2: `x'' + f(t,x) = ω·x`, `x'(0) = 0`, `x(1) = 0` on a
/// uniform grid with `m` intervals. Shares no code path with the
/// Green's-function solver. `f`/`dfdx` take the node index so callers can
/// pre-tabulate singular coefficients. The Neumann row uses the integral
/// identity `x(h) − x(0) = ∫₀ʰ (h−s)·x''(s) ds` through `w0(x₀) ≈
/// ∫₀ʰ (h−s)·f(s, x₀) ds` (`dw0` is its x-derivative): any polynomial slope
/// stencil costs O(√h) here because `x'' ~ s^{−1/2}` at the left end.
fn fd_newton_mu2(
    omega: f64,
    m: usize,
    f: &dyn Fn(usize, f64) -> f64,
    dfdx: &dyn Fn(usize, f64) -> f64,
    w0: &dyn Fn(f64) -> f64,
    dw0: &dyn Fn(f64) -> f64,
    init: &dyn Fn(f64) -> f64,
) -> Result<Vec<f64>, String> {
    let h = 1.0 / m as f64;
    let h2 = h * h;
    let mut x: Vec<f64> = (0..=m)
        .map(|j| if j == m { 0.0 } else { init(j as f64 * h) })
        .collect();
    let mut lower = vec![0.0; m + 1];
    let mut diag = vec![0.0; m + 1];
    let mut upper = vec![0.0; m + 1];
    let mut rhs = vec![0.0; m + 1];
    for _ in 0..60 {
        rhs[0] = -(x[1] - x[0] - 0.5 * h2 * omega * x[0] + w0(x[0]));
        diag[0] = -1.0 - 0.5 * h2 * omega + dw0(x[0]);
        upper[0] = 1.0;
        for j in 1..m {
            rhs[j] = -((x[j + 1] - 2.0 * x[j] + x[j - 1]) / h2 + f(j, x[j]) - omega * x[j]);
            lower[j] = 1.0 / h2;
            diag[j] = -2.0 / h2 + dfdx(j, x[j]) - omega;
            upper[j] = 1.0 / h2;
        }
        lower[m] = 0.0;
        diag[m] = 1.0;
        rhs[m] = -x[m];
        let delta = thomas(&lower, &diag, &upper, &rhs)?;
        // Damp the step to keep the iterate strictly positive away from the
        // pinned right endpoint (the dynamics may be singular at x = 0).
        let mut theta = 1.0f64;
        'damp: for _ in 0..50 {
            for j in 0..m {
                if x[j] + theta * delta[j] <= 0.0 {
                    theta *= 0.5;
                    continue 'damp;
                }
            }
            break;
        }
        let mut step = 0.0f64;
        for j in 0..=m {
            x[j] += theta * delta[j];
            step = step.max((theta * delta[j]).abs());
        }
        // 1e-7 sits far below the 1e-4 equivalence gate and safely above the
        // 1/h²-amplified rounding floor of the residual assembly.
        if step <= 1e-7 {
            return Ok(x);
        }
    }
    Err("finite-difference Newton oracle did not converge in 60 iterations".into())
}

#[test]
fn acceptance_4_classical_limit_oracle() {
    run(4, "classical-limit oracle equivalence", 30.0, || {
        let m_fd = 20_000usize;
        let h = 1.0 / m_fd as f64;
        let cosh1 = 1.0f64.cosh();
        let sup_vs_oracle = |sol: &GridFunction, oracle: &[f64]| -> f64 {
            let stride = (oracle.len() - 1) / (sol.len() - 1);
            (0..sol.len())
                .map(|i| (sol.value_at(i) - oracle[stride * i]).abs())
                .fold(0.0, f64::max)
        };

        // --- f ≡ 1 (regular right-hand side), ω = 1, ceiling R = 2. ---
        let oracle_const = fd_newton_mu2(
            1.0,
            m_fd,
            &|_, _| 1.0,
            &|_, _| 0.0,
            &|_| 0.5 * h * h, // ∫₀ʰ (h−s)·1 ds
            &|_| 0.0,
            &|t| 0.3 * (cosh1 - t.cosh()) / (cosh1 - 1.0),
        )?;
        // The oracle itself is anchored to the closed form 1 − cosh(t)/cosh(1).
        let mut oracle_err = 0.0f64;
        for (j, &v) in oracle_const.iter().enumerate() {
            let t = j as f64 * h;
            oracle_err = oracle_err.max((v - (1.0 - t.cosh() / cosh1)).abs());
        }
        if oracle_err > 1e-6 {
            return Err(format!(
                "FD oracle fails its own closed-form anchor: sup err {oracle_err:.3e} > 1e-6"
            ));
        }
        let constant_problem = ProblemSpec::new(
            KernelParams::new(2.0, 1.0).map_err(|e| e.to_string())?,
            Arc::new(|_t, _x| 1.0),
            Arc::new(|_t| 1.0),
            Arc::new(|_x| 1.0),
            Arc::new(|_x| 0.0),
            Arc::new(|_r| 1.0),
            2.0,
        )
        .map_err(|e| e.to_string())?;
        let params_const = SolverParams {
            grid_size: 801,
            tol: 1e-3,
            fp_tol: 1e-10,
            m_schedule: vec![16, 32],
            ..SolverParams::default()
        };
        let rep_const = solve_with(&constant_problem, &params_const).map_err(|e| e.to_string())?;
        let sup_const = sup_vs_oracle(&rep_const.solution, &oracle_const);
        if sup_const > 1e-4 {
            return Err(format!(
                "f ≡ 1: solver vs FD oracle sup {sup_const:.3e} > 1e-4 at shared nodes"
            ));
        }

        // --- Singular family at μ = 2, ω = 1, λ = 0.009, R = 1 (passes the
        // integrability/growth conditions; library tests pin its ε). ---
        let family = ExampleFamily::with_params(2.0, 1.0, 0.009, 1.0).map_err(|e| e.to_string())?;
        let qv: Vec<f64> = (0..=m_fd)
            .map(|j| {
                if j == 0 || j == m_fd {
                    f64::NAN // rows 0 and m never evaluate f
                } else {
                    family.q(j as f64 * h)
                }
            })
            .collect();
        let r_ceiling = family.r_ceiling();
        let bracket = |x: f64| x.powf(-0.2) - x + r_ceiling;
        let dbracket = |x: f64| -0.2 * x.powf(-1.2) - 1.0;
        let wq = weighted_left_mass(&|s| family.q(s), h);
        let oracle_sing = fd_newton_mu2(
            1.0,
            m_fd,
            &|j, x| qv[j] * bracket(x),
            &|j, x| qv[j] * dbracket(x),
            &|x| bracket(x) * wq,
            &|x| dbracket(x) * wq,
            &|t| 0.03 * (cosh1 - t.cosh()) / (cosh1 - 1.0),
        )?;
        let problem = family.problem().map_err(|e| e.to_string())?;
        // The regularization floor 1/m must clear the solution's linear
        // descent to zero over most of the grid (x ~ a·(1−t) with a ≈ 0.03,
        // and the floor-induced error decays like m^(−μ−something) ≈ m^(−1.3)
        // here), so the schedule climbs to m = 4096 in 4× steps.
        let params_sing = SolverParams {
            grid_size: 801,
            tol: 1e-3,
            damping: 1.0,
            m_schedule: vec![16, 64, 256, 1024, 4096],
            ..SolverParams::default()
        };
        let (rep_sing, cert_note) = match solve_with(&problem, &params_sing) {
            Ok(r) => (r, "certified".to_string()),
            Err(SolveError::CertificationFailed { report }) => {
                let failing: Vec<&str> = report
                    .certificates
                    .iter()
                    .filter(|c| !c.passed)
                    .map(|c| c.name)
                    .collect();
                (
                    *report,
                    format!("certification incomplete ({})", failing.join(", ")),
                )
            }
            Err(e) => return Err(format!("singular μ=2 solve failed outright: {e}")),
        };
        let sup_sing = sup_vs_oracle(&rep_sing.solution, &oracle_sing);
        if sup_sing > 1e-4 {
            return Err(format!(
                "singular family: solver vs FD oracle sup {sup_sing:.3e} > 1e-4 \
                 (solve status: {cert_note})"
            ));
        }
        Ok(format!(
            "f≡1 sup |solver − FD oracle| = {sup_const:.2e}, singular family sup = \
             {sup_sing:.2e} (gate 1e-4 at 801 shared nodes; oracle at {m_fd} intervals, \
             closed-form anchor {oracle_err:.1e}; singular solve {cert_note})"
        ))
    });
}

// ---------------------------------------------------------------------------
// 5. Full worked-example solve with certification.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_5_full_example_certification() {
    run(5, "full worked-example certification", 300.0, || {
        let family = ExampleFamily::new(0.009, 1.0).map_err(|e| e.to_string())?;
        let problem = family.problem().map_err(|e| e.to_string())?;
        let params = SolverParams {
            grid_size: 801,
            tol: 1e-5,
            m_schedule: vec![16, 32, 64, 128],
            residual_tol: 1e-3,
            residual_window: (0.05, 0.9),
            ..SolverParams::default()
        };
        let report = match solve_with(&problem, &params) {
            Ok(r) => r,
            Err(SolveError::CertificationFailed { report }) => *report,
            Err(e) => return Err(format!("solve failed before certification: {e}")),
        };
        for c in &report.certificates {
            println!(
                "  clause {:<24} {}  margin {:+.3e}  — {}",
                c.name,
                if c.passed { "pass" } else { "FAIL" },
                c.margin,
                c.detail
            );
        }
        let x0 = report.solution.value_at(0);
        let diffs = &report.continuation_diffs;
        if report.converged {
            return Ok(format!(
                "all {} clauses hold: x(0) = {:.6}, final residual {:.3e} ≤ 1e-3 on \
                 [0.05, 0.9], continuation diffs {:?} with last < 1e-5, ε = {:.6}",
                report.certificates.len(),
                x0,
                report.final_residual,
                diffs,
                report.epsilon
            ));
        }
        // Honest red: report the measured facts and the scaling analysis,
        // including a fresh extended-schedule diagnostic run so every number
        // below is measured here, not quoted.
        let failing: Vec<String> = report
            .certificates
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{} (margin {:+.3e})", c.name, c.margin))
            .collect();
        let mu = problem.params().mu();
        let h = 1.0 / (params.grid_size as f64 - 1.0);
        let instrument_floor = 2.0 * h.powf(mu - 1.0);
        let nodes_for_gate = (2.0 / 1e-3f64).powf(1.0 / (mu - 1.0)).ceil();
        // Where does the last stage's regularization floor 1/m cross the
        // solution? If inside the certification window, the residual sees
        // the unregularized f where the solver solved the floored one.
        let m_last = *params.m_schedule.last().unwrap() as f64;
        let floor = 1.0 / m_last;
        let n = report.solution.len() - 1;
        let crossing = (0..=n)
            .rev()
            .find(|&i| report.solution.value_at(i) >= floor)
            .map(|i| i as f64 / n as f64)
            .unwrap_or(f64::NAN);
        // Extended diagnostic: same grid, schedule pushed to m = 32768.
        let extended = SolverParams {
            m_schedule: vec![
                16, 32, 64, 128, 256, 512, 1024, 2048, 4096, 8192, 16384, 32768,
            ],
            damping: 1.0,
            ..params.clone()
        };
        let ext_report = match solve_with(&problem, &extended) {
            Ok(r) => r,
            Err(SolveError::CertificationFailed { report }) => *report,
            Err(e) => return Err(format!("extended diagnostic solve failed: {e}")),
        };
        let ext_last = ext_report
            .continuation_diffs
            .last()
            .copied()
            .unwrap_or(f64::NAN);
        Err(format!(
            "criterion implemented exactly as stated and it fails at the stated \
             configuration. Failing clauses: {}. Two stacked effects: (1) the stated \
             schedule ends at m = {}, whose regularization floor 1/m = {:.1e} crosses \
             the solution at t ≈ {:.2} — inside the certification window [0.05, 0.9] — \
             so the certified (unregularized) equation disagrees with the solved \
             (floored) one there: measured residual {:.3e} vs gate 1e-3; (2) grid-side, \
             the discrete fractional operator's interior consistency error on an exact \
             eigenfunction is ≈ 2·h^(μ−1) = {:.2e} at 801 nodes (a measured library-test \
             envelope), already above the gate, so NO continuation schedule passes the \
             residual clause at this grid — it needs ≳ {:.0} nodes. Diagnostic run with \
             the schedule extended to m = 32768 on the same grid: continuation diff \
             reaches {:.2e} (gate 1e-5: {}), residual bottoms out at {:.3e} ≈ the \
             instrument floor, confirming (2). Stated-schedule diffs {:?} end at {:.3e} \
             vs gate 1e-5. Solution values are healthy: x(0) = {:.6}, x(1) = {:e}, \
             ε = {:.6}.",
            failing.join("; "),
            m_last as u64,
            floor,
            crossing,
            report.final_residual,
            instrument_floor,
            nodes_for_gate,
            ext_last,
            if ext_last <= 1e-5 {
                "reachable, 8 doublings past the stated schedule"
            } else {
                "still unmet"
            },
            ext_report.final_residual,
            diffs,
            diffs.last().copied().unwrap_or(f64::NAN),
            x0,
            report.solution.value_at(report.solution.len() - 1),
            report.epsilon
        ))
    });
}

// ---------------------------------------------------------------------------
// 6. Conditions checker: window flip and ε recertification.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_6_conditions_window() {
    run(6, "conditions window and ε recertification", 30.0, || {
        let mut flips = Vec::new();
        let mut recerts = 0usize;
        let mut worst_ratio_slack = f64::INFINITY;
        for r in [0.5, 1.0, 2.0] {
            let (_, hi) = lambda_window(r).map_err(|e| e.to_string())?;
            // Verdict flips across λ = hi within a 1e-3 relative band.
            for (scale, expect) in [(1.0 - 1e-3, true), (1.0 + 1e-3, false)] {
                let family = ExampleFamily::new(hi * scale, r).map_err(|e| e.to_string())?;
                let problem = family.problem().map_err(|e| e.to_string())?;
                let report = check_a2(&problem).map_err(|e| e.to_string())?;
                if report.verdicts.overall != expect {
                    return Err(format!(
                        "R={r}: verdict at λ = hi·{scale} is {}, expected {} \
                         (hi = {hi:.9e}, ratio = {:.6})",
                        report.verdicts.overall, expect, report.a2_ratio
                    ));
                }
            }
            flips.push(format!("R={r}: hi={hi:.4e}"));
            // Every selected ε re-certifies the shifted-radius ratio ≥ 1,
            // recomputed here from public pieces (χ, E_{μ,μ}(ω), v/u).
            for scale in [0.25, 0.75, 1.0 - 1e-3] {
                let family = ExampleFamily::new(hi * scale, r).map_err(|e| e.to_string())?;
                let problem = family.problem().map_err(|e| e.to_string())?;
                let eps = epsilon_select(&problem).map_err(|e| e.to_string())?;
                if !(eps > 0.0 && eps < r) {
                    return Err(format!("R={r}, λ=hi·{scale}: ε = {eps} outside (0, R)"));
                }
                let shifted = r + eps;
                let chi_shifted = chi(&problem, shifted).map_err(|e| e.to_string())?;
                let ratio = (r - eps)
                    / (family.kernel().emm()
                        * chi_shifted
                        * (1.0 + problem.v(shifted) / problem.u(shifted)));
                if !(ratio >= 1.0) {
                    return Err(format!(
                        "R={r}, λ=hi·{scale}: selected ε = {eps:.9} does not re-certify: \
                         ratio at radius R+ε is {ratio:.9} < 1"
                    ));
                }
                worst_ratio_slack = worst_ratio_slack.min(ratio);
                recerts += 1;
            }
        }
        Ok(format!(
            "verdict flips inside the ±1e-3 band at {}; {} ε selections re-certify \
             (smallest shifted-radius ratio {:.6} ≥ 1)",
            flips.join(", "),
            recerts,
            worst_ratio_slack
        ))
    });
}

// ---------------------------------------------------------------------------
// 7. Discrete fractional operator.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_7_caputo_operator() {
    run(7, "discrete fractional operator", 30.0, || {
        // Empirical order ≥ 2.9 − μ on t³, measured at the scheme's
        // consistency points t_k + h/2 (the exact derivative of t³ is
        // 6·t^{3−μ}/Γ(4−μ)).
        let mut order_notes = Vec::new();
        for mu in [1.1, 1.5, 1.9] {
            let c = 6.0 / gamma_fn(4.0 - mu).map_err(|e| e.to_string())?;
            let mut errs = Vec::new();
            for n in [100usize, 200, 400] {
                let h = 1.0 / n as f64;
                let x = GridFunction::from_fn(n, Interp::Linear, |t| t * t * t)
                    .map_err(|e| e.to_string())?;
                let d = caputo_apply(&x, mu).map_err(|e| e.to_string())?;
                let mut sup = 0.0f64;
                for k in 1..n {
                    let t_shift = k as f64 * h + 0.5 * h;
                    let err = (d.value_at(k).unwrap() - c * t_shift.powf(3.0 - mu)).abs();
                    sup = sup.max(err);
                }
                errs.push(sup);
            }
            for pair in errs.windows(2) {
                let order = (pair[0] / pair[1]).log2();
                if order < 2.9 - mu {
                    return Err(format!(
                        "t³ order {order:.3} below gate {:.3} at mu={mu} \
                         (errors {errs:?})",
                        2.9 - mu
                    ));
                }
            }
            order_notes.push(format!("μ={mu}: {:.3}", (errs[1] / errs[2]).log2()));
        }
        // μ = 2 collapses to the exact second difference; cubics have no
        // fourth derivative, so the error is pure rounding.
        {
            let n = 400usize;
            let x = GridFunction::from_fn(n, Interp::Linear, |t| t * t * t)
                .map_err(|e| e.to_string())?;
            let d = caputo_apply(&x, 2.0).map_err(|e| e.to_string())?;
            for k in 1..n {
                let t = k as f64 / n as f64;
                let err = (d.value_at(k).unwrap() - 6.0 * t).abs();
                if err > 1e-9 {
                    return Err(format!(
                        "μ=2 second-difference reduction off by {err:.3e} at t={t}"
                    ));
                }
            }
        }
        // Eigen-relation: x = E_{μ,1}(ω t^μ) satisfies ᶜD^μ x = ω x; on the
        // interior window [0.05, 0.9] the discrete defect obeys 2·h^{μ−1}
        // and roughly halves under h → h/2.
        let (mu, omega) = (1.9, 2.0);
        let policy = EvalPolicy::default();
        let index = MLIndex::new(mu, 1.0).map_err(|e| e.to_string())?;
        let mut eigen_errs = Vec::new();
        for n in [200usize, 400, 800] {
            let x = GridFunction::from_fn(n, Interp::Linear, |t| {
                mittag_leffler(index, omega * t.powf(mu), &policy).unwrap()
            })
            .map_err(|e| e.to_string())?;
            let d = caputo_apply(&x, mu).map_err(|e| e.to_string())?;
            let mut sup = 0.0f64;
            for k in 1..n {
                let t = x.nodes()[k];
                if !(0.05..=0.9).contains(&t) {
                    continue;
                }
                sup = sup.max((d.value_at(k).unwrap() - omega * x.value_at(k)).abs());
            }
            let h = 1.0 / n as f64;
            let envelope = 2.0 * h.powf(mu - 1.0);
            if sup > envelope {
                return Err(format!(
                    "eigen-relation defect {sup:.4e} exceeds 2·h^(μ−1) = {envelope:.4e} \
                     at N={n}"
                ));
            }
            eigen_errs.push(sup);
        }
        for pair in eigen_errs.windows(2) {
            let ratio = pair[1] / pair[0];
            if ratio > 0.65 {
                return Err(format!(
                    "eigen-relation defect ratio {ratio:.3} under h → h/2 exceeds 0.65 \
                     (defects {eigen_errs:?})"
                ));
            }
        }
        Ok(format!(
            "t³ orders at consistency points [{}] (gates 2.9−μ); μ=2 reduces to the \
             exact second difference (≤ 1e-9 on t³); eigen-relation defects {:?} under \
             the 2·h^(μ−1) envelope with halving ratios ≤ 0.65",
            order_notes.join(", "),
            eigen_errs
        ))
    });
}
