//! Experiment configuration read from a TOML file.
//!
//! ```toml
//! schedules = ["fista", "cd:3.01", "gn:1,1/2.01,5", "fba"]
//! max_iters = 5000
//! trace_every = 1
//! beta = "auto"            # or an explicit step such as 1e-3
//! f_ref = "fista:20000"    # "fba:N", "fista:N" or "exact"
//! accuracy_thresholds = [0.8, 0.85]
//! output_dir = "out/splice"
//!
//! [problem]
//! kind = "svm"
//! data = "splice"          # single file split by train_count/split_seed
//! train_count = 1000
//! gamma = 0.03125
//! lambda = 0.0078125
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use afba::MomentumSchedule;
use serde::Deserialize;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub schedules: Vec<String>,
    #[serde(default)]
    pub beta: BetaPolicy,
    pub max_iters: u64,
    #[serde(default = "default_trace_every")]
    pub trace_every: u64,
    /// Defaults per problem kind, see [`ExperimentConfig::f_ref_policy`].
    #[serde(default)]
    pub f_ref: Option<FRefPolicy>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub accuracy_thresholds: Vec<f64>,
}

fn default_trace_every() -> u64 {
    1
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProblemSpec {
    Svm(SvmSpec),
    Lasso(LassoSpec),
    Quadratic(QuadraticSpec),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvmSpec {
    /// Single file to be split into train/test.
    pub data: Option<PathBuf>,
    pub train_count: Option<usize>,
    #[serde(default)]
    pub split_seed: u64,
    /// Separate train and (optional) test files.
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub gamma: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LassoSpec {
    #[serde(default = "default_rows")]
    pub rows: usize,
    #[serde(default = "default_cols")]
    pub cols: usize,
    pub seed: u64,
    #[serde(default = "default_reg")]
    pub reg: f64,
}

fn default_rows() -> usize {
    20
}

fn default_cols() -> usize {
    50
}

fn default_reg() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticSpec {
    pub dim: usize,
    pub seed: u64,
    #[serde(default = "default_reg")]
    pub reg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(try_from = "BetaRaw")]
pub enum BetaPolicy {
    /// `β = 1/L`.
    #[default]
    Auto,
    Explicit(f64),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum BetaRaw {
    Number(f64),
    Text(String),
}

impl TryFrom<BetaRaw> for BetaPolicy {
    type Error = String;

    fn try_from(raw: BetaRaw) -> std::result::Result<Self, String> {
        match raw {
            BetaRaw::Number(b) => Ok(BetaPolicy::Explicit(b)),
            BetaRaw::Text(s) if s.trim().eq_ignore_ascii_case("auto") => Ok(BetaPolicy::Auto),
            BetaRaw::Text(s) => Err(format!("beta must be \"auto\" or a number, got `{s}`")),
        }
    }
}

impl fmt::Display for BetaPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BetaPolicy::Auto => write!(f, "auto"),
            BetaPolicy::Explicit(b) => write!(f, "{b}"),
        }
    }
}

/// Where `F_ref` comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(try_from = "String")]
pub enum FRefPolicy {
    Fista(u64),
    Fba(u64),
    /// Closed form; separable quadratic only.
    Exact,
}

impl FromStr for FRefPolicy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let lower = s.trim().to_ascii_lowercase();
        if lower == "exact" {
            return Ok(FRefPolicy::Exact);
        }
        let bad = || format!("f_ref must be `exact`, `fista:N` or `fba:N`, got `{s}`");
        let (name, n) = lower.split_once(':').ok_or_else(bad)?;
        let n: u64 = n.trim().parse().ok().filter(|&n| n > 0).ok_or_else(bad)?;
        match name.trim() {
            "fista" => Ok(FRefPolicy::Fista(n)),
            "fba" => Ok(FRefPolicy::Fba(n)),
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for FRefPolicy {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        s.parse()
    }
}

impl fmt::Display for FRefPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FRefPolicy::Fista(n) => write!(f, "fista:{n}"),
            FRefPolicy::Fba(n) => write!(f, "fba:{n}"),
            FRefPolicy::Exact => write!(f, "exact"),
        }
    }
}

/// Default reference run on real data (the desk-scale budget).
pub const DEFAULT_SVM_REFERENCE_ITERS: u64 = 20_000;
/// Default reference run for the synthetic LASSO.
pub const DEFAULT_LASSO_REFERENCE_ITERS: u64 = 1_000_000;

/// Command-line overrides applied on top of a loaded config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub data_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub max_iters: Option<u64>,
    pub seed: Option<u64>,
    pub trace_every: Option<u64>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.schedules.is_empty() {
            return bad("at least one schedule is required".into());
        }
        self.parsed_schedules()?;
        if self.max_iters == 0 {
            return bad("max_iters must be positive".into());
        }
        if self.trace_every == 0 {
            return bad("trace_every must be positive".into());
        }
        if let Some(t) = self.accuracy_thresholds.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
            return bad(format!("accuracy thresholds must lie in (0, 1], got {t}"));
        }
        if let BetaPolicy::Explicit(b) = self.beta {
            if !(b > 0.0 && b.is_finite()) {
                return bad(format!("explicit beta must be positive and finite, got {b}"));
            }
        }
        match &self.problem {
            ProblemSpec::Svm(s) => {
                match (&s.data, &s.train) {
                    (Some(_), None) => {
                        if s.train_count.is_none() {
                            return bad("problem.data requires problem.train_count".into());
                        }
                        if s.test.is_some() {
                            return bad("problem.test cannot be combined with problem.data".into());
                        }
                    }
                    (None, Some(_)) => {
                        if s.train_count.is_some() {
                            return bad("problem.train_count only applies to problem.data".into());
                        }
                    }
                    _ => return bad("svm problems need exactly one of problem.data or problem.train".into()),
                }
                if self.f_ref == Some(FRefPolicy::Exact) {
                    return bad("f_ref = \"exact\" is only available for the quadratic problem".into());
                }
            }
            ProblemSpec::Lasso(l) => {
                if l.rows == 0 || l.cols == 0 || !(l.reg >= 0.0) {
                    return bad("lasso needs positive rows/cols and a nonnegative reg".into());
                }
                if self.f_ref == Some(FRefPolicy::Exact) {
                    return bad("f_ref = \"exact\" is only available for the quadratic problem".into());
                }
            }
            ProblemSpec::Quadratic(q) => {
                if q.dim == 0 || !(q.reg >= 0.0) {
                    return bad("quadratic needs a positive dim and a nonnegative reg".into());
                }
            }
        }
        Ok(())
    }

    pub fn parsed_schedules(&self) -> Result<Vec<MomentumSchedule>> {
        self.schedules
            .iter()
            .map(|s| s.parse::<MomentumSchedule>().map_err(|e| HarnessError::Config(format!("schedule `{s}`: {e}"))))
            .collect()
    }

    pub fn f_ref_policy(&self) -> FRefPolicy {
        self.f_ref.unwrap_or(match self.problem {
            ProblemSpec::Svm(_) => FRefPolicy::Fista(DEFAULT_SVM_REFERENCE_ITERS),
            ProblemSpec::Lasso(_) => FRefPolicy::Fba(DEFAULT_LASSO_REFERENCE_ITERS),
            ProblemSpec::Quadratic(_) => FRefPolicy::Exact,
        })
    }

    /// Applies flag overrides; `seed` replaces the split seed for SVM data and
    /// the generator seed for synthetic problems. Dataset paths are resolved
    /// against `data_dir`.
    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(dir) = &o.out_dir {
            self.output_dir = dir.clone();
        }
        if let Some(n) = o.max_iters {
            self.max_iters = n;
        }
        if let Some(n) = o.trace_every {
            self.trace_every = n;
        }
        match &mut self.problem {
            ProblemSpec::Svm(s) => {
                if let Some(seed) = o.seed {
                    s.split_seed = seed;
                }
                if let Some(dir) = &o.data_dir {
                    for p in [&mut s.data, &mut s.train, &mut s.test].into_iter().flatten() {
                        *p = dir.join(&*p);
                    }
                }
            }
            ProblemSpec::Lasso(l) => l.seed = o.seed.unwrap_or(l.seed),
            ProblemSpec::Quadratic(q) => q.seed = o.seed.unwrap_or(q.seed),
        }
        self.validate()
    }

    /// Flattened `key=value` echo for the run manifest.
    pub fn manifest_entries(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut put = |k: &str, v: String| out.push((k.to_string(), v));
        match &self.problem {
            ProblemSpec::Svm(s) => {
                put("problem.kind", "svm".into());
                if let Some(p) = &s.data {
                    put("problem.data", p.display().to_string());
                    put("problem.train_count", s.train_count.map(|n| n.to_string()).unwrap_or_default());
                    put("problem.split_seed", s.split_seed.to_string());
                }
                if let Some(p) = &s.train {
                    put("problem.train", p.display().to_string());
                }
                if let Some(p) = &s.test {
                    put("problem.test", p.display().to_string());
                }
                put("problem.gamma", s.gamma.to_string());
                put("problem.lambda", s.lambda.to_string());
            }
            ProblemSpec::Lasso(l) => {
                put("problem.kind", "lasso".into());
                put("problem.rows", l.rows.to_string());
                put("problem.cols", l.cols.to_string());
                put("problem.seed", l.seed.to_string());
                put("problem.reg", l.reg.to_string());
            }
            ProblemSpec::Quadratic(q) => {
                put("problem.kind", "quadratic".into());
                put("problem.dim", q.dim.to_string());
                put("problem.seed", q.seed.to_string());
                put("problem.reg", q.reg.to_string());
            }
        }
        put("schedules", self.schedules.join(";"));
        put("beta_policy", self.beta.to_string());
        put("max_iters", self.max_iters.to_string());
        put("trace_every", self.trace_every.to_string());
        put("f_ref_policy", self.f_ref_policy().to_string());
        let thresholds: Vec<String> = self.accuracy_thresholds.iter().map(|t| t.to_string()).collect();
        put("accuracy_thresholds", thresholds.join(";"));
        out
    }
}
