//! Run configuration: potentials, tasks, amplitude sweep and tolerances.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use jostlab::PotentialSpec;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Spectrum,
    Trace,
    Bounds,
    Theorem,
}

impl Task {
    pub const ALL: [Task; 4] = [Task::Spectrum, Task::Trace, Task::Bounds, Task::Theorem];

    pub fn name(self) -> &'static str {
        match self {
            Task::Spectrum => "spectrum",
            Task::Trace => "trace",
            Task::Bounds => "bounds",
            Task::Theorem => "theorem",
        }
    }

    /// Trace and theorem rows are built from the zeros.
    pub fn needs_spectrum(self) -> bool {
        matches!(self, Task::Spectrum | Task::Trace | Task::Theorem)
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An amplitude scalar written either as a number or as `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Real(f64),
    Complex([f64; 2]),
}

impl Scalar {
    pub fn value(self) -> Complex64 {
        match self {
            Scalar::Real(x) => Complex64::new(x, 0.0),
            Scalar::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

/// Check thresholds. `--tol-scale` multiplies every entry except
/// `theorem_spread`, which is a ratio bound rather than an error tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Trace identity: |lhs − rhs| ≤ trace·(1 + |lhs|).
    pub trace: f64,
    /// Relative slack on the disk bound and the operator-norm bounds.
    pub bound_slack: f64,
    /// |a| accepted at a polished zero.
    pub residual: f64,
    /// Nyström determinant against a(k), relative.
    pub determinant: f64,
    /// Finite-difference eigenvalues against the zeros, relative.
    pub oracle: f64,
    /// Relative change of a fitted constant under doubled resolution.
    pub stability: f64,
    /// Largest max/min theorem ratio over an amplitude sweep.
    pub theorem_spread: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            trace: 1e-5,
            bound_slack: 1e-8,
            residual: 1e-8,
            determinant: 1e-4,
            oracle: 1e-4,
            stability: 0.10,
            theorem_spread: 50.0,
        }
    }
}

impl Tolerances {
    pub fn scaled(self, s: f64) -> Self {
        Self {
            trace: self.trace * s,
            bound_slack: self.bound_slack * s,
            residual: self.residual * s,
            determinant: self.determinant * s,
            oracle: self.oracle * s,
            stability: self.stability * s,
            theorem_spread: self.theorem_spread,
        }
    }
}

/// Discretization sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Resolution {
    /// Nyström nodes for the operator bounds; the stability check doubles it.
    pub bs_nodes: usize,
    /// Real wavenumbers in the S₁ scaling sweep over [1e−3·R, R].
    pub scaling_points: usize,
    /// Random frequencies for the sine-functional bound.
    pub functional_samples: usize,
    pub fd_length: f64,
    pub fd_nodes: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Self { bs_nodes: 200, scaling_points: 7, functional_samples: 20, fd_length: 20.0, fd_nodes: 4000 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default = "default_p")]
    p: f64,
    #[serde(default)]
    tasks: Option<Vec<Task>>,
    #[serde(default)]
    sweep: Option<Vec<Scalar>>,
    #[serde(default)]
    tolerances: Tolerances,
    #[serde(default)]
    resolution: Resolution,
    #[serde(default)]
    seed: u64,
    /// Cross-check compact potentials against the finite-difference oracle.
    #[serde(default)]
    oracle: bool,
    #[serde(default)]
    potential: BTreeMap<String, PotentialSpec>,
}

fn default_p() -> f64 {
    0.5
}

/// A validated configuration. Potentials are keyed (and therefore ordered)
/// by identifier.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub p: f64,
    pub tasks: Vec<Task>,
    pub sweep: Vec<Complex64>,
    pub tolerances: Tolerances,
    pub resolution: Resolution,
    pub seed: u64,
    pub oracle: bool,
    pub potentials: BTreeMap<String, PotentialSpec>,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

impl RunConfig {
    /// Parses TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| ConfigError(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?
        };
        Self::from_raw(raw)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn from_raw(raw: RawConfig) -> Result<Self, ConfigError> {
        if !(raw.p > 0.0 && raw.p < 1.0) {
            return Err(ConfigError(format!("p = {} must lie in (0, 1)", raw.p)));
        }
        let mut tasks = raw.tasks.unwrap_or_else(|| Task::ALL.to_vec());
        if tasks.is_empty() {
            return Err(ConfigError("task list is empty".into()));
        }
        tasks.sort();
        tasks.dedup();
        let sweep: Vec<Complex64> =
            raw.sweep.unwrap_or_else(|| vec![Scalar::Real(1.0)]).into_iter().map(Scalar::value).collect();
        if sweep.is_empty() {
            return Err(ConfigError("sweep is empty".into()));
        }
        for c in &sweep {
            if !(c.re.is_finite() && c.im.is_finite()) || c.norm() == 0.0 {
                return Err(ConfigError(format!("sweep scalar {c} must be finite and nonzero")));
            }
        }
        let t = raw.tolerances;
        for (name, x) in [
            ("trace", t.trace),
            ("bound_slack", t.bound_slack),
            ("residual", t.residual),
            ("determinant", t.determinant),
            ("oracle", t.oracle),
            ("stability", t.stability),
            ("theorem_spread", t.theorem_spread),
        ] {
            if !(x.is_finite() && x > 0.0) {
                return Err(ConfigError(format!("tolerance {name} = {x} must be positive")));
            }
        }
        let r = raw.resolution;
        if r.bs_nodes < 20 || r.scaling_points < 2 || r.fd_nodes < 1000 || r.fd_length.is_nan() || r.fd_length <= 0.0 {
            return Err(ConfigError(format!("resolution out of range: {r:?}")));
        }
        for (id, v) in &raw.potential {
            if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(ConfigError(format!("potential id {id:?} must be ASCII alphanumeric, '_' or '-'")));
            }
            v.validate().map_err(|e| ConfigError(format!("potential {id}: {e}")))?;
        }
        Ok(Self {
            p: raw.p,
            tasks,
            sweep,
            tolerances: t,
            resolution: r,
            seed: raw.seed,
            oracle: raw.oracle,
            potentials: raw.potential,
        })
    }

    pub fn has(&self, task: Task) -> bool {
        self.tasks.contains(&task)
    }

    pub fn needs_spectrum(&self) -> bool {
        self.tasks.iter().any(|t| t.needs_spectrum())
    }
}
