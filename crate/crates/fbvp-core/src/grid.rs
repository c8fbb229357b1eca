//! Uniform-grid functions on `[0, 1]` with linear or natural-cubic-spline
//! interpolation.
//!
//! The solver keeps iterates as values on the closed uniform grid
//! `t_i = i/N`; quadrature needs the iterate between nodes, so a
//! [`GridFunction`] pairs the samples with an interpolation rule. Linear
//! interpolation is monotone and bound-preserving (it cannot overshoot the
//! sampled range), which is why the fixed-point loop defaults to it; the
//! natural cubic spline is smoother and available as an option, with
//! overshoot rendered harmless by the clamp the operator applies to its
//! argument anyway.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("domain error: {0}")]
    Domain(String),
}

/// Interpolation rule tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interp {
    Linear,
    Cubic,
}

/// Samples of a function on the uniform grid `0 = t_0 < t_1 < … < t_N = 1`
/// plus an interpolation rule. Immutable after construction; all values
/// finite; `N + 1 ≥ 9` nodes; spacing uniform to `1e-14`.
#[derive(Debug, Clone, Serialize)]
pub struct GridFunction {
    nodes: Vec<f64>,
    values: Vec<f64>,
    interp: Interp,
    /// Natural-spline second derivatives (empty for linear interpolation).
    #[serde(skip)]
    spline_m: Vec<f64>,
}

impl GridFunction {
    /// Wrap explicit nodes/values. The nodes must be the uniform closed grid
    /// on `[0, 1]`.
    pub fn new(nodes: Vec<f64>, values: Vec<f64>, interp: Interp) -> Result<Self, GridError> {
        if nodes.len() != values.len() {
            return Err(GridError::InvalidGrid(format!(
                "{} nodes but {} values",
                nodes.len(),
                values.len()
            )));
        }
        if nodes.len() < 9 {
            return Err(GridError::InvalidGrid(format!(
                "need at least 9 nodes, got {}",
                nodes.len()
            )));
        }
        let n = nodes.len() - 1;
        if nodes[0] != 0.0 || nodes[n] != 1.0 {
            return Err(GridError::InvalidGrid(format!(
                "grid must span [0, 1], got [{}, {}]",
                nodes[0], nodes[n]
            )));
        }
        let h = 1.0 / n as f64;
        for (i, pair) in nodes.windows(2).enumerate() {
            let step = pair[1] - pair[0];
            if !step.is_finite() || (step - h).abs() > 1e-14 {
                return Err(GridError::InvalidGrid(format!(
                    "non-uniform spacing at node {i}: step {step:.17e}, expected {h:.17e}"
                )));
            }
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(GridError::InvalidGrid(format!(
                "non-finite value {bad} in grid data"
            )));
        }
        let spline_m = match interp {
            Interp::Linear => Vec::new(),
            Interp::Cubic => natural_spline_second_derivatives(&values, h),
        };
        Ok(Self {
            nodes,
            values,
            interp,
            spline_m,
        })
    }

    /// Uniform grid with `n` intervals (`n + 1` nodes), sampling `f`.
    pub fn from_fn(n: usize, interp: Interp, f: impl Fn(f64) -> f64) -> Result<Self, GridError> {
        let nodes = uniform_nodes(n);
        let values = nodes.iter().map(|&t| f(t)).collect();
        Self::new(nodes, values, interp)
    }

    /// Same nodes and interpolation rule, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self, GridError> {
        Self::new(self.nodes.clone(), values, self.interp)
    }

    /// Number of intervals `N` (`len() == N + 1` nodes).
    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false // the constructor guarantees at least 9 nodes
    }

    /// Grid spacing `h = 1/N`.
    pub fn h(&self) -> f64 {
        1.0 / self.intervals() as f64
    }

    pub fn interp(&self) -> Interp {
        self.interp
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at node index `i` (panics on out-of-range index, like slice
    /// indexing).
    pub fn value_at(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Interpolated value at `t ∈ [0, 1]`.
    pub fn eval(&self, t: f64) -> Result<f64, GridError> {
        if !(0.0..=1.0).contains(&t) {
            return Err(GridError::Domain(format!("t must lie in [0, 1], got {t}")));
        }
        Ok(self.eval_clamped(t))
    }

    /// Interpolated value with `t` clamped into `[0, 1]` (total; used inside
    /// hot integrand closures where the quadrature contract already
    /// guarantees the domain).
    pub fn eval_clamped(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        let n = self.intervals();
        let h = self.h();
        // Interval index: i such that t ∈ [t_i, t_{i+1}], with t = 1 mapped
        // into the last interval.
        let i = ((t * n as f64).floor() as usize).min(n - 1);
        let s = t - self.nodes[i];
        match self.interp {
            Interp::Linear => {
                let slope = (self.values[i + 1] - self.values[i]) / h;
                self.values[i] + s * slope
            }
            Interp::Cubic => {
                let (y0, y1) = (self.values[i], self.values[i + 1]);
                let (m0, m1) = (self.spline_m[i], self.spline_m[i + 1]);
                let linear = y0 + s * ((y1 - y0) / h - h / 6.0 * (2.0 * m0 + m1));
                linear + s * s * (0.5 * m0 + s * (m1 - m0) / (6.0 * h))
            }
        }
    }

    /// Sup-norm distance to another grid function on the same grid.
    pub fn sup_distance(&self, other: &GridFunction) -> Result<f64, GridError> {
        if self.len() != other.len() {
            return Err(GridError::InvalidGrid(format!(
                "grid size mismatch: {} vs {} nodes",
                self.len(),
                other.len()
            )));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// The uniform closed grid `t_i = i/n`, with `t_0 = 0` and `t_n = 1` exact.
pub fn uniform_nodes(n: usize) -> Vec<f64> {
    (0..=n).map(|i| i as f64 / n as f64).collect()
}

/// Natural cubic spline second derivatives `M_i` on a uniform grid
/// (`M_0 = M_N = 0`), by the Thomas algorithm. Pure and sequential, hence
/// deterministic.
fn natural_spline_second_derivatives(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len() - 1;
    let mut m = vec![0.0; n + 1];
    if n < 2 {
        return m;
    }
    // Tridiagonal system for M_1..M_{N-1}:
    //   (h/6)M_{i-1} + (2h/3)M_i + (h/6)M_{i+1} = (y_{i+1} - 2y_i + y_{i-1})/h
    let dim = n - 1;
    let diag = 2.0 * h / 3.0;
    let off = h / 6.0;
    let mut c_prime = vec![0.0; dim];
    let mut d_prime = vec![0.0; dim];
    for i in 0..dim {
        let rhs = (y[i + 2] - 2.0 * y[i + 1] + y[i]) / h;
        if i == 0 {
            c_prime[0] = off / diag;
            d_prime[0] = rhs / diag;
        } else {
            let denom = diag - off * c_prime[i - 1];
            c_prime[i] = off / denom;
            d_prime[i] = (rhs - off * d_prime[i - 1]) / denom;
        }
    }
    m[dim] = d_prime[dim - 1];
    for i in (0..dim - 1).rev() {
        m[i + 1] = d_prime[i] - c_prime[i] * m[i + 2];
    }
    m
}
