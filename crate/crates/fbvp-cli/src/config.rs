//! Problem-definition files: JSON schema, validation, and compilation into a
//! [`ProblemSpec`] the solver can run.
//!
//! ```json
//! {
//!   "mu": 1.9, "omega": 2.0, "R": 1.0,
//!   "family": { "example": { "lambda": 0.009 } },
//!   "solver": { "grid_size": 801, "tol": 1e-5, "m_schedule": [16, 32, 64, 128] },
//!   "output": { "dir": "out", "format": "csv" }
//! }
//! ```
//!
//! A custom family replaces the built-in one with expression strings:
//!
//! ```json
//! "family": { "custom": { "f": "q-free form in t and x", "q": "…(t)…",
//!                         "u": "…(x)…", "v": "…(x)…", "gamma": "…(r)…",
//!                         "lambda": 0.009 } }
//! ```
//!
//! (`lambda` is optional and only makes the `lambda` constant available to
//! the expressions.) Exactly one family must be present; every expression
//! must parse; μ ∈ (1, 2], ω > 0, R > 0. Violations are configuration
//! errors (exit status 2), reported with the offending path or expression.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use fbvp_core::example::ExampleFamily;
use fbvp_core::green::Kernel;
use fbvp_core::{KernelParams, ProblemSpec, SolverParams};

use crate::expr::{parse_expr, Env, Expr};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config field {field}: {message}")]
    Invalid {
        field: &'static str,
        message: String,
    },
    #[error("expression '{field}': {message}")]
    Expression {
        field: &'static str,
        message: String,
    },
    #[error("problem rejected: {0}")]
    Problem(#[from] fbvp_core::problem::ProblemError),
    #[error("worked-example family: {0}")]
    Example(#[from] fbvp_core::example::ExampleError),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub mu: f64,
    pub omega: f64,
    #[serde(rename = "R")]
    pub r_ceiling: f64,
    pub family: FamilyConfig,
    #[serde(default)]
    pub solver: SolverParams,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Exactly one of the two variants (externally tagged; duplicate or missing
/// tags are JSON errors, i.e. exit status 2).
#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum FamilyConfig {
    Example { lambda: f64 },
    Custom(CustomFamily),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomFamily {
    pub f: String,
    pub q: String,
    pub u: String,
    pub v: String,
    pub gamma: String,
    #[serde(default)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// A validated, compiled configuration ready to run.
pub struct Built {
    pub problem: ProblemSpec,
    pub kernel: Arc<Kernel>,
    pub solver: SolverParams,
    pub output: OutputConfig,
}

impl std::fmt::Debug for Built {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        // ProblemSpec carries closures, so show only the plain-data parts.
        f.debug_struct("Built")
            .field("solver", &self.solver)
            .field("output", &self.output)
            .finish_non_exhaustive()
    }
}

pub fn load(path: &Path) -> Result<Built, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    build(&text)
}

pub fn build(json: &str) -> Result<Built, ConfigError> {
    let config: ProblemConfig = serde_json::from_str(json)?;
    let invalid = |field: &'static str, message: String| ConfigError::Invalid { field, message };
    if !(config.r_ceiling > 0.0) || !config.r_ceiling.is_finite() {
        return Err(invalid(
            "R",
            format!("must be positive and finite, got {}", config.r_ceiling),
        ));
    }
    // KernelParams owns the μ ∈ (1, 2], ω > 0 invariant.
    let params = KernelParams::new(config.mu, config.omega)
        .map_err(|e| invalid("mu/omega", e.to_string()))?;
    let kernel = Arc::new(Kernel::new(params));

    let problem = match &config.family {
        FamilyConfig::Example { lambda } => {
            ExampleFamily::with_params(config.mu, config.omega, *lambda, config.r_ceiling)?
                .problem()?
        }
        FamilyConfig::Custom(custom) => compile_custom(custom, params, config.r_ceiling, &kernel)?,
    };
    Ok(Built {
        problem,
        kernel,
        solver: config.solver,
        output: config.output,
    })
}

/// Parse, scope-check, and close over one expression slot.
#[allow(clippy::type_complexity)]
fn compile_slot(
    field: &'static str,
    src: &str,
    allowed_vars: &[&str],
    consts: Arc<Vec<(&'static str, f64)>>,
    kernel: Arc<Kernel>,
) -> Result<(Expr, impl Fn(&[(&str, f64)]) -> f64 + Send + Sync + Clone), ConfigError> {
    let expr = parse_expr(src).map_err(|e| ConfigError::Expression {
        field,
        message: e.to_string(),
    })?;
    let const_names: Vec<&str> = consts.iter().map(|(n, _)| *n).collect();
    for name in expr.identifiers() {
        if !allowed_vars.contains(&name) && !const_names.contains(&name) {
            return Err(ConfigError::Expression {
                field,
                message: format!(
                    "'{name}' is not available here; this slot binds {} (plus constants {})",
                    if allowed_vars.is_empty() {
                        "no variables".to_string()
                    } else {
                        allowed_vars.join(", ")
                    },
                    const_names.join(", "),
                ),
            });
        }
    }
    let eval_expr = expr.clone();
    let eval = move |vars: &[(&str, f64)]| -> f64 {
        let env = Env {
            vars,
            consts: &consts,
            kernel: Some(&kernel),
        };
        // Domain faults surface as NaN; the library's envelope spot-checks
        // and non-finite guards turn that into a diagnosed error.
        eval_expr.eval(&env).map_or(f64::NAN, |v| v)
    };
    Ok((expr, eval))
}

fn compile_custom(
    custom: &CustomFamily,
    params: KernelParams,
    r_ceiling: f64,
    kernel: &Arc<Kernel>,
) -> Result<ProblemSpec, ConfigError> {
    let mut consts: Vec<(&'static str, f64)> = vec![
        ("mu", params.mu()),
        ("omega", params.omega()),
        ("R", r_ceiling),
    ];
    if let Some(lambda) = custom.lambda {
        consts.push(("lambda", lambda));
    }
    let consts = Arc::new(consts);

    let (_, f) = compile_slot(
        "family.custom.f",
        &custom.f,
        &["t", "x"],
        consts.clone(),
        kernel.clone(),
    )?;
    let (_, q) = compile_slot(
        "family.custom.q",
        &custom.q,
        &["t"],
        consts.clone(),
        kernel.clone(),
    )?;
    let (_, u) = compile_slot(
        "family.custom.u",
        &custom.u,
        &["x"],
        consts.clone(),
        kernel.clone(),
    )?;
    let (_, v) = compile_slot(
        "family.custom.v",
        &custom.v,
        &["x"],
        consts.clone(),
        kernel.clone(),
    )?;
    let (_, gamma) = compile_slot(
        "family.custom.gamma",
        &custom.gamma,
        &["r"],
        consts.clone(),
        kernel.clone(),
    )?;

    Ok(ProblemSpec::new(
        params,
        Arc::new(move |t, x| f(&[("t", t), ("x", x)])),
        Arc::new(move |t| q(&[("t", t)])),
        Arc::new(move |x| u(&[("x", x)])),
        Arc::new(move |x| v(&[("x", x)])),
        Arc::new(move |r| gamma(&[("r", r)])),
        r_ceiling,
    )?)
}
