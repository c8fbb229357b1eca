//! The Gamma function and the two-parameter Mittag-Leffler function
//! `E_{μ,ν}(x) = Σ_{k≥0} x^k / Γ(μk + ν)`.
//!
//! `gamma_fn` is a Lanczos rational approximation (Pugh's parameters,
//! `r = 10.900511`, 11 coefficients) evaluated in a cancellation-free
//! rational form, accurate to a few ulp on `(0, 50]` and to better than
//! 1e-13 relative well beyond. The Mittag-Leffler series is summed in
//! ascending `k` with compensated accumulation; each term is formed through
//! the log-Gamma of `μk + ν` so that no intermediate `x^k` or `Γ(μk+ν)`
//! can overflow, and summation stops when the next term drops below
//! `rel_tol` times the current partial sum. All terms are nonnegative for
//! `x ≥ 0`, so the returned value is a strict lower bound converging from
//! below. Documented valid range: `x ∈ [0, 100]`.

use crate::accum::Neumaier;
use thiserror::Error;

/// Errors from special-function evaluation.
#[derive(Debug, Error)]
pub enum SpecFunError {
    /// An argument lies outside the supported domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// The series did not meet its truncation criterion within `k_max` terms.
    #[error(
        "Mittag-Leffler series did not converge within k_max = {k_max} terms \
         (mu = {mu}, nu = {nu}, x = {x})"
    )]
    NonConvergent {
        mu: f64,
        nu: f64,
        x: f64,
        k_max: usize,
    },
}

/// The Mittag-Leffler parameter pair `(μ, ν)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MLIndex {
    mu: f64,
    nu: f64,
}

impl MLIndex {
    /// Both parameters must be strictly positive and finite.
    pub fn new(mu: f64, nu: f64) -> Result<Self, SpecFunError> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(SpecFunError::Domain(format!(
                "Mittag-Leffler order mu must be positive and finite, got {mu}"
            )));
        }
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(SpecFunError::Domain(format!(
                "Mittag-Leffler parameter nu must be positive and finite, got {nu}"
            )));
        }
        Ok(Self { mu, nu })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }
}

/// Truncation policy for the Mittag-Leffler series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPolicy {
    rel_tol: f64,
    k_max: usize,
}

impl EvalPolicy {
    /// Requires `0 < rel_tol < 1` and `k_max ≥ 16`.
    pub fn new(rel_tol: f64, k_max: usize) -> Result<Self, SpecFunError> {
        if !(rel_tol > 0.0 && rel_tol < 1.0) {
            return Err(SpecFunError::Domain(format!(
                "rel_tol must lie strictly between 0 and 1, got {rel_tol}"
            )));
        }
        if k_max < 16 {
            return Err(SpecFunError::Domain(format!(
                "k_max must be at least 16, got {k_max}"
            )));
        }
        Ok(Self { rel_tol, k_max })
    }

    pub fn rel_tol(&self) -> f64 {
        self.rel_tol
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }
}

impl Default for EvalPolicy {
    /// `rel_tol = 1e-15`, `k_max = 400`: ample for arguments up to 100.
    fn default() -> Self {
        Self {
            rel_tol: 1e-15,
            k_max: 400,
        }
    }
}

// Lanczos approximation, Pugh's parameterization: r = 10.900511, 11 terms.
// Relative error of the approximation itself is below 1e-18 on (0, 50].
//
// The textbook partial-fraction form d_0 + Σ d_i/(x+i-1) cancels
// catastrophically for large x: the terms have magnitude ~0.1 and alternating
// signs while the sum decays to ~1e-4 by x = 25, so f64 term rounding alone
// costs ~1e-13 relative error there. We therefore evaluate the algebraically
// identical rational form N(x) / Π_{k=0..9}(x+k), whose numerator
// coefficients (computed from the partial-fraction residues in 60-digit
// arithmetic, then rounded once) are all positive. Horner at positive x is
// then perfectly conditioned and the evaluation stays within a few ulp.
const LANCZOS_R: f64 = 10.900511;
// Coefficients of N(x) in ascending order: N(x) = Σ LANCZOS_NUM[k]·x^k.
const LANCZOS_NUM: [f64; 11] = [
    381540.6633973527,
    365505.352696257,
    157567.9994936012,
    40253.835381426405,
    6748.767525934571,
    775.8779405455638,
    61.945288914220924,
    3.3913662440153005,
    0.12184807036444598,
    0.00259434050880905,
    2.4857408913875355e-5,
];
// 2·sqrt(e/pi) and its logarithm.
const TWO_SQRT_E_OVER_PI: f64 = 1.8603827342052657173362492472666631120594218414085755;
const LN_2_SQRT_E_OVER_PI: f64 = 0.6207822376352452223455184457816472122518527279025978;
const LN_PI: f64 = 1.1447298858494001741434273513530587116472948129153;

#[inline]
fn lanczos_sum(x: f64) -> f64 {
    // N(x) / Π_{k=0..9}(x+k); callers pass x ≥ 0.5 (after reflection).
    let num = LANCZOS_NUM.iter().rev().fold(0.0, |acc, c| acc * x + c);
    let mut den = 1.0;
    for k in 0..10 {
        den *= x + k as f64;
    }
    num / den
}

/// `Γ(x)` for `x > 0`.
///
/// Relative error ≤ 1e-13 on `(0, 50]` (in practice a few ulp). Negative and
/// zero arguments are a domain error: nothing in this problem needs them.
pub fn gamma_fn(x: f64) -> Result<f64, SpecFunError> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(SpecFunError::Domain(format!(
            "gamma_fn requires a positive finite argument, got {x}"
        )));
    }
    Ok(gamma_positive(x))
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64, SpecFunError> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(SpecFunError::Domain(format!(
            "ln_gamma requires a positive finite argument, got {x}"
        )));
    }
    Ok(ln_gamma_positive(x))
}

#[inline]
pub(crate) fn gamma_positive(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection: Γ(x) = π / (sin(πx) · Γ(1−x)), with Γ(1−x) expanded in
        // the Lanczos form. Note (1−x) − 0.5 = 0.5 − x.
        let s = lanczos_sum(1.0 - x);
        std::f64::consts::PI
            / ((std::f64::consts::PI * x).sin()
                * s
                * TWO_SQRT_E_OVER_PI
                * ((0.5 - x + LANCZOS_R) / std::f64::consts::E).powf(0.5 - x))
    } else {
        let s = lanczos_sum(x);
        TWO_SQRT_E_OVER_PI * ((x - 0.5 + LANCZOS_R) / std::f64::consts::E).powf(x - 0.5) * s
    }
}

#[inline]
pub(crate) fn ln_gamma_positive(x: f64) -> f64 {
    if x < 0.5 {
        let s = lanczos_sum(1.0 - x);
        LN_PI
            - (std::f64::consts::PI * x).sin().ln()
            - s.ln()
            - LN_2_SQRT_E_OVER_PI
            - (0.5 - x) * ((0.5 - x + LANCZOS_R) / std::f64::consts::E).ln()
    } else {
        let s = lanczos_sum(x);
        s.ln()
            + LN_2_SQRT_E_OVER_PI
            + (x - 0.5) * ((x - 0.5 + LANCZOS_R) / std::f64::consts::E).ln()
    }
}

/// `Γ(a)/Γ(b)` for positive `a, b`, accurate to ~1e-14 relative.
///
/// While both values are representable (argument ≤ 170) the ratio is a
/// direct quotient of two Lanczos evaluations; beyond that it falls back to
/// `exp(lnΓ(a) − lnΓ(b))`, whose absolute log error only matters for terms
/// that are already negligible in every series summed here.
pub(crate) fn gamma_ratio(a: f64, b: f64) -> f64 {
    const OVERFLOW_ARG: f64 = 170.0;
    if a <= OVERFLOW_ARG && b <= OVERFLOW_ARG {
        gamma_positive(a) / gamma_positive(b)
    } else {
        (ln_gamma_positive(a) - ln_gamma_positive(b)).exp()
    }
}

/// The two-parameter Mittag-Leffler function `E_{μ,ν}(x)` for `x ≥ 0`.
///
/// Direct series summation per the documented policy. The result is a
/// strict lower bound for the true value (all terms are nonnegative and the
/// tail is dropped). Valid range `x ∈ [0, 100]`; larger arguments are a
/// domain error rather than silently inaccurate asymptotics.
pub fn mittag_leffler(idx: MLIndex, x: f64, policy: &EvalPolicy) -> Result<f64, SpecFunError> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(SpecFunError::Domain(format!(
            "mittag_leffler requires x >= 0 and finite, got {x}"
        )));
    }
    if x > 100.0 {
        return Err(SpecFunError::Domain(format!(
            "mittag_leffler is validated for x in [0, 100]; got {x}"
        )));
    }
    let (mu, nu) = (idx.mu, idx.nu);
    let ln_x = x.ln(); // -inf for x = 0; k·ln_x then underflows terms to 0.
    let mut acc = Neumaier::new();
    acc.add(1.0 / gamma_positive(nu));
    for k in 1..=policy.k_max {
        let term = if x == 0.0 {
            0.0
        } else {
            (k as f64 * ln_x - ln_gamma_positive(mu * k as f64 + nu)).exp()
        };
        let partial = acc.value();
        if term < policy.rel_tol * partial {
            return Ok(partial);
        }
        acc.add(term);
    }
    Err(SpecFunError::NonConvergent {
        mu,
        nu,
        x,
        k_max: policy.k_max,
    })
}
