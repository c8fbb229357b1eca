//! The exact Green's function `G(t,τ)` of the shifted Caputo two-point
//! problem and its kernel-mass function `σ_{μ,ω}(t)`.
//!
//! With `A(t) = E_{μ,1}(ωt^μ)/E_{μ,1}(ω)`, `B(τ) = (1−τ)^{μ−1}E_{μ,μ}(ω(1−τ)^μ)`
//! and `C(u) = u^{μ−1}E_{μ,μ}(ωu^μ)`:
//!
//! ```text
//! G(t,τ) = A(t)·B(τ) − C(t−τ)   for 0 ≤ τ ≤ t ≤ 1
//! G(t,τ) = A(t)·B(τ)            for 0 ≤ t ≤ τ ≤ 1
//! σ(t)   = E_{μ,1}(ωt^μ)·E_{μ,μ+1}(ω) − t^μ·E_{μ,1}(ω)·E_{μ,μ+1}(ωt^μ)
//! ∫₀¹ G(t,τ) dτ = σ(t)/E_{μ,1}(ω)
//! ```
//!
//! The mass normalization deserves a note: term-by-term integration of `B`
//! gives `∫₀¹B(τ)dτ = E_{μ,μ+1}(ω)` and `∫₀^t C(t−τ)dτ = t^μ E_{μ,μ+1}(ωt^μ)`,
//! so the row integral is `σ(t)/E_{μ,1}(ω)` — the `1/ω` sometimes quoted with
//! this identity does not belong there. The μ = 2 classical reduction
//! (`E_{2,1}(x) = cosh√x`) confirms the same normalization, and
//! [`Kernel::mass`] is covered by a quadrature cross-test.
//!
//! Numerical layout: a [`Kernel`] precomputes, per `(μ, ω)`, Gamma-ratio
//! tables that turn each Mittag-Leffler evaluation into a short product
//! recurrence (`term ← term · x · ratio[k]`, no powers, no Gamma calls), and
//! a Taylor table for the σ complement path. `σ(t)` for `t > 1/2` is NOT
//! computed from its definition — the two products there agree to all but
//! the last few digits and the difference drowns in rounding (at `ω = 100`
//! every digit is lost). Instead `s = 1 − t` (exact by Sterbenz) and the
//! increment `d = ω(1−(1−s)^μ)` feed either an alternating Taylor series in
//! `d` (for `d ≤ 3`) or the difference form `(E_{μ,1}(ω) − E_{μ,1}(ω−d))/ω`
//! (for `d > 3`, where at most ~1 digit cancels). `σ(1) = 0` holds exactly.

use crate::accum::Neumaier;
use crate::specfun::{self, ln_gamma_positive};
use serde::Serialize;
use std::sync::OnceLock;
use thiserror::Error;

/// Upper validity cap on ω, inherited from the Mittag-Leffler series
/// contract (arguments stay in `[0, ω]`).
pub const OMEGA_MAX: f64 = 100.0;

/// Length of the precomputed Gamma-ratio tables (series terms available).
const K_TABLE: usize = 400;

/// Switch point between the Taylor and difference forms of the σ
/// complement: Taylor partial sums grow like `e^d`, the difference form
/// cancels like `1/(1 − E_{μ,1}(ω−d)/E_{μ,1}(ω))`; both are benign at `d = 3`.
const TAYLOR_D_MAX: f64 = 3.0;

#[derive(Debug, Error)]
pub enum GreenError {
    #[error("invalid kernel parameters: {0}")]
    InvalidParams(String),
    #[error("domain error: {0}")]
    Domain(String),
}

/// Validated kernel parameters: fractional order `1 < μ ≤ 2` and spectral
/// shift `0 < ω ≤ 100`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelParams {
    mu: f64,
    omega: f64,
}

impl KernelParams {
    pub fn new(mu: f64, omega: f64) -> Result<Self, GreenError> {
        if !mu.is_finite() || !(mu > 1.0) || !(mu <= 2.0) {
            return Err(GreenError::InvalidParams(format!(
                "fractional order must satisfy 1 < mu <= 2, got {mu}"
            )));
        }
        if !omega.is_finite() || !(omega > 0.0) || !(omega <= OMEGA_MAX) {
            return Err(GreenError::InvalidParams(format!(
                "spectral shift must satisfy 0 < omega <= {OMEGA_MAX}, got {omega}"
            )));
        }
        Ok(Self { mu, omega })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }
}

/// Precomputed evaluation kernel for one `(μ, ω)` pair.
///
/// Construction costs a few hundred Gamma evaluations; afterwards every
/// Mittag-Leffler value needed by `G`, `σ` and the solver is a short
/// multiply-accumulate loop. All methods are pure; the type is `Send + Sync`.
#[derive(Debug)]
pub struct Kernel {
    params: KernelParams,
    /// `ratio_*[k] = Γ(μ(k−1)+ν)/Γ(μk+ν)` for ν = 1, μ, μ+1; index 0 unused.
    ratio_1: Vec<f64>,
    ratio_mm: Vec<f64>,
    ratio_m1: Vec<f64>,
    /// Leading series terms `1/Γ(ν)`; exactly 1.0 for ν = 1.
    first_mm: f64,
    first_m1: f64,
    e1w: f64,
    emmw: f64,
    em1w: f64,
    /// `c_j = E₁⁽ʲ⁾(ω)/j!` for the σ complement Taylor path, built lazily.
    taylor_c: OnceLock<Vec<f64>>,
}

impl Kernel {
    pub fn new(params: KernelParams) -> Self {
        let mu = params.mu;
        let mut ratio_1 = Vec::with_capacity(K_TABLE + 1);
        let mut ratio_mm = Vec::with_capacity(K_TABLE + 1);
        let mut ratio_m1 = Vec::with_capacity(K_TABLE + 1);
        ratio_1.push(0.0);
        ratio_mm.push(0.0);
        ratio_m1.push(0.0);
        for k in 1..=K_TABLE {
            let kf = k as f64;
            ratio_1.push(specfun::gamma_ratio(mu * (kf - 1.0) + 1.0, mu * kf + 1.0));
            ratio_mm.push(specfun::gamma_ratio(mu * (kf - 1.0) + mu, mu * kf + mu));
            ratio_m1.push(specfun::gamma_ratio(
                mu * (kf - 1.0) + mu + 1.0,
                mu * kf + mu + 1.0,
            ));
        }
        let first_mm = 1.0 / specfun::gamma_fn(mu).expect("mu > 1");
        let first_m1 = 1.0 / specfun::gamma_fn(mu + 1.0).expect("mu + 1 > 2");
        let mut kernel = Self {
            params,
            ratio_1,
            ratio_mm,
            ratio_m1,
            first_mm,
            first_m1,
            e1w: 0.0,
            emmw: 0.0,
            em1w: 0.0,
            taylor_c: OnceLock::new(),
        };
        kernel.e1w = kernel.ml_e1(params.omega);
        kernel.emmw = kernel.ml_emm(params.omega);
        kernel.em1w = kernel.ml_em1(params.omega);
        kernel
    }

    pub fn params(&self) -> KernelParams {
        self.params
    }

    /// `E_{μ,1}(ω)`.
    pub fn e1(&self) -> f64 {
        self.e1w
    }

    /// `E_{μ,μ}(ω)`.
    pub fn emm(&self) -> f64 {
        self.emmw
    }

    /// `E_{μ,μ+1}(ω)`.
    pub fn em1(&self) -> f64 {
        self.em1w
    }

    fn series(&self, first: f64, table: &[f64], x: f64) -> f64 {
        debug_assert!((0.0..=self.params.omega * (1.0 + 1e-12)).contains(&x));
        if x == 0.0 {
            return first;
        }
        let mut acc = Neumaier::new();
        let mut term = first;
        acc.add(term);
        for ratio in &table[1..] {
            term *= x * ratio;
            acc.add(term);
            if term < 1e-16 * acc.value() {
                return acc.value();
            }
        }
        debug_assert!(false, "series truncation fell off the ratio table");
        acc.value()
    }

    /// `E_{μ,1}(x)` for `x ∈ [0, ω]` (fast path; exact 1 at x = 0).
    pub fn ml_e1(&self, x: f64) -> f64 {
        self.series(1.0, &self.ratio_1, x)
    }

    /// `E_{μ,μ}(x)` for `x ∈ [0, ω]`.
    pub fn ml_emm(&self, x: f64) -> f64 {
        self.series(self.first_mm, &self.ratio_mm, x)
    }

    /// `E_{μ,μ+1}(x)` for `x ∈ [0, ω]`.
    pub fn ml_em1(&self, x: f64) -> f64 {
        self.series(self.first_m1, &self.ratio_m1, x)
    }

    /// `A(t) = E_{μ,1}(ωt^μ)/E_{μ,1}(ω)`; exactly 1 at t = 1.
    pub fn a_factor(&self, t: f64) -> f64 {
        self.ml_e1(self.params.omega * t.powf(self.params.mu)) / self.e1w
    }

    /// `B(τ) = (1−τ)^{μ−1}E_{μ,μ}(ω(1−τ)^μ)`, shared with [`Self::c_factor`]
    /// so that `B(τ)` and `C(1−τ)` are bitwise identical.
    pub fn b_factor(&self, tau: f64) -> f64 {
        self.c_factor(1.0 - tau)
    }

    /// `C(u) = u^{μ−1}E_{μ,μ}(ωu^μ)` for `u ∈ [0,1]`; exactly 0 at u = 0.
    pub fn c_factor(&self, u: f64) -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        let mu = self.params.mu;
        u.powf(mu - 1.0) * self.ml_emm(self.params.omega * u.powf(mu))
    }

    fn check_unit(&self, name: &str, value: f64) -> Result<(), GreenError> {
        if !(0.0..=1.0).contains(&value) {
            return Err(GreenError::Domain(format!(
                "{name} must lie in [0, 1], got {value}"
            )));
        }
        Ok(())
    }

    /// `G(t, τ)` per the two-branch formula in the module docs.
    pub fn green(&self, t: f64, tau: f64) -> Result<f64, GreenError> {
        self.check_unit("t", t)?;
        self.check_unit("tau", tau)?;
        let ab = self.a_factor(t) * self.b_factor(tau);
        Ok(if tau <= t {
            ab - self.c_factor(t - tau)
        } else {
            ab
        })
    }

    /// `σ_{μ,ω}(t)`; exactly 0 at t = 1 and exactly `E_{μ,μ+1}(ω)` at t = 0.
    pub fn sigma(&self, t: f64) -> Result<f64, GreenError> {
        self.check_unit("t", t)?;
        if t <= 0.5 {
            Ok(self.sigma_definition(t))
        } else {
            // 1 − t is exact for t ∈ [1/2, 1] (Sterbenz lemma).
            self.sigma_complement(1.0 - t)
        }
    }

    /// `σ_{μ,ω}(1 − s)`. For `s ≤ 1/2` this is the cancellation-free
    /// evaluation path near the root of σ; accepting all of `[0, 1]` makes it
    /// a total counterpart of [`Self::sigma`].
    pub fn sigma_complement(&self, s: f64) -> Result<f64, GreenError> {
        self.check_unit("s", s)?;
        if s > 0.5 {
            return Ok(self.sigma_definition(1.0 - s));
        }
        let (mu, omega) = (self.params.mu, self.params.omega);
        // d = ω(1 − (1−s)^μ) ∈ [0, ω], evaluated without forming 1−s.
        let d = -omega * (mu * (-s).ln_1p()).exp_m1();
        if d == 0.0 {
            return Ok(0.0);
        }
        if d <= TAYLOR_D_MAX {
            let c = self.taylor_c();
            let mut acc = Neumaier::new();
            let mut d_pow = 1.0;
            let mut max_term = 0.0f64;
            let mut sign = 1.0;
            for &cj in c {
                d_pow *= d;
                let mag = cj * d_pow;
                acc.add(sign * mag);
                sign = -sign;
                max_term = max_term.max(mag);
                if mag < 2e-18 * max_term {
                    break;
                }
            }
            Ok(acc.value() / omega)
        } else {
            Ok((self.e1w - self.ml_e1(omega - d)) / omega)
        }
    }

    /// `∫₀¹ G(t,τ) dτ = σ(t)/E_{μ,1}(ω)` in closed form (no quadrature).
    pub fn mass(&self, t: f64) -> Result<f64, GreenError> {
        Ok(self.sigma(t)? / self.e1w)
    }

    fn sigma_definition(&self, t: f64) -> f64 {
        let (mu, omega) = (self.params.mu, self.params.omega);
        let tm = t.powf(mu);
        let x = omega * tm;
        self.ml_e1(x) * self.em1w - tm * self.e1w * self.ml_em1(x)
    }

    /// Taylor coefficients `c_j = E₁⁽ʲ⁾(ω)/j! = Σ_k C(k+j,j)ω^k/Γ(μ(k+j)+1)`,
    /// built on first use.
    fn taylor_c(&self) -> &[f64] {
        self.taylor_c.get_or_init(|| {
            let (mu, omega) = (self.params.mu, self.params.omega);
            let ln_omega = omega.ln();
            let mut c = Vec::new();
            let mut max_weighted = 0.0f64;
            for j in 1..=200usize {
                let jf = j as f64;
                let ln_gamma_j1 = ln_gamma_positive(jf + 1.0);
                let mut acc = Neumaier::new();
                for k in 0..2000usize {
                    let kf = k as f64;
                    // ln C(k+j, j) + k ln ω − ln Γ(μ(k+j)+1)
                    let ln_term = ln_gamma_positive(kf + jf + 1.0)
                        - ln_gamma_j1
                        - ln_gamma_positive(kf + 1.0)
                        + kf * ln_omega
                        - ln_gamma_positive(mu * (kf + jf) + 1.0);
                    let term = ln_term.exp();
                    acc.add(term);
                    if k > 0 && term < 1e-20 * acc.value() {
                        break;
                    }
                }
                let cj = acc.value();
                c.push(cj);
                let weighted = cj * TAYLOR_D_MAX.powi(j as i32);
                max_weighted = max_weighted.max(weighted);
                if weighted < 1e-19 * max_weighted {
                    break;
                }
            }
            c
        })
    }
}

/// `σ_{μ,ω}(t)` (definition form, stable complement near t = 1).
pub fn sigma(params: KernelParams, t: f64) -> Result<f64, GreenError> {
    Kernel::new(params).sigma(t)
}

/// `G(t, τ)` per the two-branch formula.
pub fn green_eval(params: KernelParams, t: f64, tau: f64) -> Result<f64, GreenError> {
    Kernel::new(params).green(t, tau)
}

/// `∫₀¹ G(t,τ) dτ = σ(t)/E_{μ,1}(ω)` by closed form.
pub fn green_mass(params: KernelParams, t: f64) -> Result<f64, GreenError> {
    Kernel::new(params).mass(t)
}
