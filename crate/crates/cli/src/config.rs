//! Experiment configuration: a TOML file plus command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "CSPD_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "cspd-out";

/// A configuration problem, tied to the offending field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config field `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Qcqp,
    Pricing,
    Toy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThetaModeName {
    Interior,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Basic,
    Adaptive,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Basic => "basic",
            Self::Adaptive => "adaptive",
        }
    }
}

/// Problem family and its generator fields. Which fields are required
/// depends on `kind`; see [`ExperimentConfig::validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub kind: ProblemKind,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub m: Option<usize>,
    /// Instance seed; independent of the run seeds.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub theta_mode: Option<ThetaModeName>,
    #[serde(default)]
    pub p_min: Option<f64>,
    #[serde(default)]
    pub p_max: Option<f64>,
    #[serde(default)]
    pub budget: Option<f64>,
}

/// Run seeds: an explicit list or `count` consecutive seeds from `base`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    List(Vec<u64>),
    Range { base: u64, count: u64 },
}

impl SeedSpec {
    pub fn seeds(&self) -> Vec<u64> {
        match self {
            Self::List(v) => v.clone(),
            Self::Range { base, count } => (0..*count).map(|i| base + i).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchedulePreset {
    /// Step sizes from the problem constants.
    Theory,
    /// The published leading coefficients for the problem family. The toy
    /// has none and falls back to `theory`.
    #[default]
    Experiment,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    #[serde(default)]
    pub preset: SchedulePreset,
    #[serde(default = "one")]
    pub dual_scale: f64,
    #[serde(default = "one")]
    pub primal_scale: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            preset: SchedulePreset::default(),
            dual_scale: 1.0,
            primal_scale: 1.0,
        }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSettings {
    #[serde(default = "default_target_tol")]
    pub target_tol: f64,
}

impl Default for ReferenceSettings {
    fn default() -> Self {
        Self {
            target_tol: default_target_tol(),
        }
    }
}

fn default_target_tol() -> f64 {
    1e-7
}

/// Optional columns. Both are off by default: the duality gap costs two
/// extra solves per row and wall-clock times break byte-identical output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsConfig {
    #[serde(default)]
    pub duality_gap: bool,
    #[serde(default)]
    pub wall_clock: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default = "default_csv_name")]
    pub csv_name: String,
    #[serde(default = "default_summary_name")]
    pub summary_name: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            csv_name: default_csv_name(),
            summary_name: default_summary_name(),
        }
    }
}

fn default_csv_name() -> String {
    "results.csv".into()
}

fn default_summary_name() -> String {
    "summary.json".into()
}

/// Settings only `check` reads.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    /// Criterion ids to run; all applicable ones when absent.
    #[serde(default)]
    pub criteria: Option<Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    #[serde(default = "default_solvers")]
    pub solvers: Vec<SolverKind>,
    /// Horizons. Basic runs once per entry; adaptive runs the largest once
    /// and reports every entry as a checkpoint.
    pub n_list: Vec<u64>,
    pub seeds: SeedSpec,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub reference: ReferenceSettings,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub check: CheckConfig,
}

fn default_solvers() -> Vec<SolverKind> {
    vec![SolverKind::Basic, SolverKind::Adaptive]
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    /// `key.path=value` pairs; values are parsed as TOML, falling back to a
    /// bare string.
    pub set: Vec<String>,
    /// Replaces the run seeds with the same number of consecutive seeds
    /// starting here.
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, overrides: &Overrides) -> Result<Self, ConfigError> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| ConfigError::new("<file>", e.message()))?;
        for pair in &overrides.set {
            apply_set(&mut table, pair)?;
        }
        let mut cfg: Self =
            serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
                let path = e.path().to_string();
                ConfigError::new(path, e.into_inner().to_string())
            })?;
        if let Some(base) = overrides.seed {
            let count = cfg.seeds.seeds().len() as u64;
            cfg.seeds = SeedSpec::Range { base, count };
        }
        if let Some(out) = &overrides.out {
            cfg.output.dir = Some(out.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("<file>", format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text, overrides)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.problem;
        let need = |v: Option<usize>, name: &str| {
            v.ok_or_else(|| ConfigError::new(format!("problem.{name}"), "required for this kind"))
        };
        match p.kind {
            ProblemKind::Qcqp => {
                if need(p.d, "d")? == 0 {
                    return Err(ConfigError::new("problem.d", "must be at least 1"));
                }
                need(p.m, "m")?;
                if p.theta_mode.is_none() {
                    return Err(ConfigError::new("problem.theta_mode", "required for qcqp"));
                }
            }
            ProblemKind::Pricing => {
                if need(p.d, "d")? == 0 {
                    return Err(ConfigError::new("problem.d", "must be at least 1"));
                }
                need(p.m, "m")?;
                let (lo, hi) = (p.p_min.unwrap_or(0.0), p.p_max.unwrap_or(30.0));
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(ConfigError::new(
                        "problem.p_max",
                        "need finite p_min < p_max",
                    ));
                }
            }
            ProblemKind::Toy => {
                if let Some(b) = p.budget {
                    if !b.is_finite() {
                        return Err(ConfigError::new("problem.budget", "must be finite"));
                    }
                }
            }
        }
        if self.solvers.is_empty() {
            return Err(ConfigError::new("solvers", "must not be empty"));
        }
        if self.n_list.is_empty() {
            return Err(ConfigError::new("n_list", "must not be empty"));
        }
        if self.n_list[0] < 1 {
            return Err(ConfigError::new("n_list", "horizons must be at least 1"));
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConfigError::new("n_list", "must be strictly ascending"));
        }
        if self.seeds.seeds().is_empty() {
            return Err(ConfigError::new("seeds", "must not be empty"));
        }
        let s = &self.schedule;
        for (v, name) in [
            (s.dual_scale, "dual_scale"),
            (s.primal_scale, "primal_scale"),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::new(
                    format!("schedule.{name}"),
                    "must be positive and finite",
                ));
            }
        }
        let tol = self.reference.target_tol;
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(ConfigError::new("reference.target_tol", "must be positive"));
        }
        if self.output.csv_name.is_empty() {
            return Err(ConfigError::new("output.csv_name", "must not be empty"));
        }
        if self.output.summary_name.is_empty() {
            return Err(ConfigError::new("output.summary_name", "must not be empty"));
        }
        if let Some(ids) = &self.check.criteria {
            if let Some(bad) = ids.iter().find(|i| !(1..=12).contains(*i)) {
                return Err(ConfigError::new(
                    "check.criteria",
                    format!("unknown criterion {bad}; ids run from 1 to 12"),
                ));
            }
        }
        Ok(())
    }

    pub fn seeds(&self) -> Vec<u64> {
        self.seeds.seeds()
    }

    /// `--out`, then `output.dir`, then `$CSPD_OUT_DIR`, then `cspd-out`.
    pub fn out_dir(&self) -> PathBuf {
        self.output
            .dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }
}

fn apply_set(table: &mut toml::Table, pair: &str) -> Result<(), ConfigError> {
    let (key, raw) = pair
        .split_once('=')
        .ok_or_else(|| ConfigError::new(pair, "--set expects key=value"))?;
    let key = key.trim();
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::new(key, "empty path segment"));
    }
    let value = parse_value(raw.trim());
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| ConfigError::new(key, format!("`{part}` is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}
