//! The built-in worked-example problem family.
//!
//! For order `μ`, spectral parameter `ω`, intensity `λ > 0` and ceiling
//! `R > 0` the family is
//!
//! ```text
//! q(t) = λ / √(σ(t)·σ(1−t)),      f(t, x) = q(t)·(x^{−1/5} − x + R),
//! u(x) = x^{−1/5},   v(x) = x + R,   γ_r = c_γ·λ·r^{−1/5},
//! ```
//!
//! where `σ` is the kernel mass density of [`crate::green`] and
//! `c_γ = 1/√(max_t σ(t)σ(1−t))`. The weight `q` blows up like `t^{−1/2}`
//! and `(1−t)^{−1/2}` at the endpoints (σ vanishes linearly at 1), and `f`
//! is singular at `x = 0` — exactly the regime the solver's regularization
//! is for. The decomposition satisfies the growth bound
//! `0 < f(t,x) ≤ q(t)(u(x) + v(x))` on `(0,1)×(0,R]` and the lower bound
//! `f(t,x) ≥ γ_R` there, with equality approached at `t = 1/2`, `x = R`.
//!
//! `σ(1−t)` is evaluated through [`crate::green::Kernel::sigma_complement`],
//! which takes the distance to 1 directly — near `t = 0` the naive `1 − t`
//! would round to 1 and collapse the product to zero. `q` is therefore
//! finite and positive strictly inside `(0, 1)` and unbounded at the
//! endpoints; callers integrate it with both endpoints flagged singular.
//!
//! The maximiser of `σ(t)σ(1−t)` is located by golden-section search on
//! `[1e-6, 1−1e-6]`; the search does not assume the product is symmetric
//! about `1/2` (it is for this family), but the symmetric point is probed
//! as a safety net before the coefficient is formed.

use std::sync::Arc;

use thiserror::Error;

use crate::green::{GreenError, Kernel, KernelParams};
use crate::problem::{ProblemError, ProblemSpec};

/// Errors building the worked-example family.
#[derive(Debug, Error)]
pub enum ExampleError {
    /// Kernel parameters out of range.
    #[error(transparent)]
    Green(#[from] GreenError),
    /// The assembled closures failed the `ProblemSpec` validity checks.
    #[error(transparent)]
    Problem(#[from] ProblemError),
    /// Family parameter out of range.
    #[error("invalid example parameter: {0}")]
    Invalid(String),
}

/// The worked-example problem family with its kernel and derived constants.
#[derive(Debug, Clone)]
pub struct ExampleFamily {
    kernel: Arc<Kernel>,
    lambda: f64,
    r_ceiling: f64,
    c_gamma: f64,
}

impl ExampleFamily {
    /// Family at the reference parameters `μ = 1.9`, `ω = 2`.
    pub fn new(lambda: f64, r_ceiling: f64) -> Result<Self, ExampleError> {
        Self::with_params(1.9, 2.0, lambda, r_ceiling)
    }

    /// Family at arbitrary kernel parameters `μ ∈ (1, 2]`, `ω ∈ (0, 100]`.
    pub fn with_params(
        mu: f64,
        omega: f64,
        lambda: f64,
        r_ceiling: f64,
    ) -> Result<Self, ExampleError> {
        if !lambda.is_finite() || !(lambda > 0.0) {
            return Err(ExampleError::Invalid(format!(
                "lambda must be positive and finite, got {lambda}"
            )));
        }
        if !r_ceiling.is_finite() || !(r_ceiling > 0.0) {
            return Err(ExampleError::Invalid(format!(
                "ceiling R must be positive and finite, got {r_ceiling}"
            )));
        }
        let params = KernelParams::new(mu, omega)?;
        let kernel = Arc::new(Kernel::new(params));
        let c_gamma = gamma_coefficient(&kernel);
        Ok(Self {
            kernel,
            lambda,
            r_ceiling,
            c_gamma,
        })
    }

    /// The kernel shared by the family's closures.
    pub fn kernel(&self) -> &Arc<Kernel> {
        &self.kernel
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn r_ceiling(&self) -> f64 {
        self.r_ceiling
    }

    /// `c_γ = 1/√(max_t σ(t)σ(1−t))`: the coefficient of the lower-bound
    /// envelope `γ_r = c_γ·λ·r^{−1/5}`.
    pub fn c_gamma(&self) -> f64 {
        self.c_gamma
    }

    /// The singular weight `q(t) = λ/√(σ(t)σ(1−t))`, finite on `(0, 1)`.
    pub fn q(&self, t: f64) -> f64 {
        let sig = self.kernel.sigma(t).expect("t in [0, 1]");
        let sig_c = self.kernel.sigma_complement(t).expect("t in [0, 1]");
        self.lambda / (sig * sig_c).sqrt()
    }

    /// Assembles the validated [`ProblemSpec`] (runs the spot checks).
    pub fn problem(&self) -> Result<ProblemSpec, ExampleError> {
        let lambda = self.lambda;
        let r_ceiling = self.r_ceiling;
        let c_gamma = self.c_gamma;

        let q: crate::problem::ScalarFn = {
            let kernel = Arc::clone(&self.kernel);
            Arc::new(move |t: f64| {
                let sig = kernel.sigma(t).expect("t in [0, 1]");
                let sig_c = kernel.sigma_complement(t).expect("t in [0, 1]");
                lambda / (sig * sig_c).sqrt()
            })
        };
        let f: crate::problem::BivariateFn = {
            let kernel = Arc::clone(&self.kernel);
            Arc::new(move |t: f64, x: f64| {
                let sig = kernel.sigma(t).expect("t in [0, 1]");
                let sig_c = kernel.sigma_complement(t).expect("t in [0, 1]");
                let q_t = lambda / (sig * sig_c).sqrt();
                q_t * (x.powf(-0.2) - x + r_ceiling)
            })
        };
        let u: crate::problem::ScalarFn = Arc::new(|x: f64| x.powf(-0.2));
        let v: crate::problem::ScalarFn = Arc::new(move |x: f64| x + r_ceiling);
        let gamma: crate::problem::ScalarFn =
            Arc::new(move |r: f64| c_gamma * lambda * r.powf(-0.2));

        Ok(ProblemSpec::new(
            self.kernel.params(),
            f,
            q,
            u,
            v,
            gamma,
            r_ceiling,
        )?)
    }
}

/// Maximises `p(t) = σ(t)σ(1−t)` and returns `1/√p_max`.
fn gamma_coefficient(kernel: &Kernel) -> f64 {
    let p = |t: f64| {
        kernel.sigma(t).expect("t in [0, 1]") * kernel.sigma_complement(t).expect("t in [0, 1]")
    };
    let t_star = golden_max(&p, 1e-6, 1.0 - 1e-6, 1e-12);
    // Probe the symmetric point too: for a symmetric product it is the exact
    // maximiser, and taking the max guards against a search that stalled on
    // a locally flat plateau.
    let p_max = p(t_star).max(p(0.5));
    1.0 / p_max.sqrt()
}

/// Golden-section search for the maximum of a unimodal function on `[a, b]`.
fn golden_max(p: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut pc = p(c);
    let mut pd = p(d);
    while b - a > tol {
        if pc > pd {
            b = d;
            d = c;
            pd = pc;
            c = b - INVPHI * (b - a);
            pc = p(c);
        } else {
            a = c;
            c = d;
            pc = pd;
            d = a + INVPHI * (b - a);
            pd = p(d);
        }
    }
    0.5 * (a + b)
}
