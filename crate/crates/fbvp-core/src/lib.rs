//! Numerical machinery for a singular Caputo fractional boundary value
//! problem on the unit interval:
//!
//! ```text
//!     ᶜD^μ x(t) + f(t, x(t)) = ω x(t),   0 < t < 1,   1 < μ ≤ 2,  ω > 0,
//!     x'(0) = 0,   x(1) = 0,
//! ```
//!
//! where `f` may blow up as `t → 0`, `t → 1`, or `x → 0`. The linear part
//! has an exact Green's function built from two-parameter Mittag-Leffler
//! functions; the nonlinear problem is solved by damped Picard iteration on
//! the regularized integral operator `T_m` (the solution argument clamped to
//! `[1/m, R]`), continued in `m`, and the result is certified a posteriori:
//! lower/upper bound envelopes, boundary values, and a discrete-Caputo
//! residual on an interior window.
//!
//! Module map:
//!
//! - [`specfun`]: Γ and the Mittag-Leffler series `E_{μ,ν}`.
//! - [`green`]: Green's function `G(t,τ)`, the kernel mass `σ_{μ,ω}`, and a
//!   precomputed [`green::Kernel`] for fast repeated evaluation.
//! - [`quad`]: adaptive Gauss-Legendre quadrature robust to integrable
//!   endpoint singularities.
//! - [`grid`]: uniform-grid functions with linear/cubic interpolation.
//! - [`caputo`]: discrete (L1-type) Caputo derivative and residual checks.
//! - [`problem`]: problem descriptions (`f, q, u, v, γ, R`) and the clamp.
//! - [`conditions`]: mechanical verification of the growth/positivity
//!   hypotheses, ε selection, and the built-in family's constant table.
//! - [`solver`]: `apply_T`, damped fixed-point iteration, continuation in
//!   `m`, and certification.
//! - [`example`]: the built-in problem family
//!   `f(t,x) = q(t)·(x^{-1/5} − x + R)`, `q(t) = λ/√(σ(t)σ(1−t))`.
//! - [`parallel`]: data-parallel helpers (rayon behind the `parallel`
//!   feature) with a sequential fallback; results are bit-identical across
//!   thread counts because every reduction preserves sequential order.

// `!(v > 0.0)` is used instead of `v <= 0.0` throughout: the negated form
// also rejects NaN, which is the point of every such guard here.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Oracle constants in tests are recorded at the full precision they were
// computed at, even where f64 cannot hold every digit.
#![allow(clippy::excessive_precision)]
mod accum;

pub mod caputo;
pub mod conditions;
pub mod example;
pub mod green;
pub mod grid;
pub mod parallel;
pub mod problem;
pub mod quad;
pub mod solver;
pub mod specfun;

pub use green::{Kernel, KernelParams};
pub use grid::{GridFunction, Interp};
pub use problem::{ProblemSpec, Truncation};
pub use solver::{SolveReport, SolverParams};
