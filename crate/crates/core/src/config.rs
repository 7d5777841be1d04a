//! Run configuration and its flat `key = value` text format.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! line    := blank | comment | entry
//! comment := '#' any*
//! entry   := key ws* '=' ws* value
//! key     := [A-Za-z0-9_.]+
//! value   := any* (trimmed; lists are comma separated)
//! ```
//!
//! Keys may appear at most once. Environment variables are never consulted.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{FinderError, Result};
use crate::evaluation::{MaPolicy, PipelineConfig, Regime};
use crate::subspace::Variant;
use crate::svm::KernelKind;

/// Parses the flat config grammar into ordered `(key, value)` pairs.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            FinderError::Format(format!("line {}: expected 'key = value'", lineno + 1))
        })?;
        let key = key.trim();
        if key.is_empty()
            || !key
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
        {
            return Err(FinderError::Format(format!(
                "line {}: invalid key '{key}'",
                lineno + 1
            )));
        }
        if out.iter().any(|(k, _)| k == key) {
            return Err(FinderError::Format(format!(
                "line {}: duplicate key '{key}'",
                lineno + 1
            )));
        }
        out.push((key.to_string(), value.trim().to_string()));
    }
    Ok(out)
}

pub fn parse_list<T: FromStr>(value: &str) -> Result<Vec<T>> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| FinderError::Format(format!("cannot parse list item '{}'", s.trim())))
        })
        .collect()
}

/// Comma-separated list using the shortest round-trip representation.
pub fn format_list<T: fmt::Display, I: IntoIterator<Item = T>>(items: I) -> String {
    items
        .into_iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// RBF bandwidth: the training-data heuristic, a multiple of it, or a fixed
/// value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gamma {
    Auto,
    /// `auto*k`: the heuristic scaled by `k`.
    AutoTimes(f64),
    Value(f64),
}

impl Gamma {
    /// Resolves against the heuristic value computed from training features.
    pub fn resolve(self, heuristic: f64) -> f64 {
        match self {
            Gamma::Auto => heuristic,
            Gamma::AutoTimes(k) => k * heuristic,
            Gamma::Value(g) => g,
        }
    }
}

impl fmt::Display for Gamma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gamma::Auto => f.write_str("auto"),
            Gamma::AutoTimes(k) => write!(f, "auto*{k}"),
            Gamma::Value(g) => write!(f, "{g}"),
        }
    }
}

impl FromStr for Gamma {
    type Err = FinderError;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let positive = |t: &str| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|g| *g > 0.0 && g.is_finite())
        };
        let parsed = if s.eq_ignore_ascii_case("auto") {
            Some(Gamma::Auto)
        } else if let Some(k) = s.strip_prefix("auto*") {
            positive(k).map(Gamma::AutoTimes)
        } else {
            positive(s).map(Gamma::Value)
        };
        parsed.ok_or_else(|| {
            FinderError::InvalidParameter(format!(
                "gamma must be 'auto', 'auto*k' or a positive number, got '{s}'"
            ))
        })
    }
}

/// Everything needed to reproduce one experiment.
///
/// | key | default |
/// |---|---|
/// | `input_path` | required |
/// | `label_column` | required |
/// | `positive_label` | `B` |
/// | `negative_label` | empty: every other label, which must be unique |
/// | `variant` | `aca-s` |
/// | `m_a` | `5` (an integer, or a fraction in (0,1) for energy truncation) |
/// | `m_res_list` | `5` |
/// | `regime` | `unbalanced` |
/// | `kernel` | `rbf` |
/// | `cost` | `1` |
/// | `gamma` | `auto` |
/// | `seed` | `0` |
/// | `impute_k` | `5` |
/// | `output_dir` | `finder-out` |
/// | `shuffle` | `false` |
/// | `grid` | `false` |
/// | `tol` | `0.001` |
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input_path: PathBuf,
    pub label_column: String,
    pub positive_label: String,
    pub negative_label: Option<String>,
    pub variant: Variant,
    pub m_a: MaPolicy,
    pub m_res_list: Vec<usize>,
    pub regime: Regime,
    pub kernel: KernelKind,
    pub cost: f64,
    pub gamma: Gamma,
    pub seed: u64,
    pub impute_k: usize,
    pub output_dir: PathBuf,
    /// Seeded shuffle of each class's rows before splitting.
    pub shuffle: bool,
    /// Sweep `cost x gamma` over the documented grid.
    pub grid: bool,
    pub tol: f64,
}

impl RunConfig {
    pub fn new(input_path: impl Into<PathBuf>, label_column: impl Into<String>) -> Self {
        Self {
            input_path: input_path.into(),
            label_column: label_column.into(),
            positive_label: "B".into(),
            negative_label: None,
            variant: Variant::AcaS,
            m_a: MaPolicy::Fixed(5),
            m_res_list: vec![5],
            regime: Regime::Unbalanced,
            kernel: KernelKind::Rbf,
            cost: 1.0,
            gamma: Gamma::Auto,
            seed: 0,
            impute_k: 5,
            output_dir: PathBuf::from("finder-out"),
            shuffle: false,
            grid: false,
            tol: crate::svm::DEFAULT_TOL,
        }
    }

    /// Ordered `(key, value)` pairs covering every field.
    pub fn to_kv(&self) -> Vec<(&'static str, String)> {
        vec![
            ("input_path", self.input_path.display().to_string()),
            ("label_column", self.label_column.clone()),
            ("positive_label", self.positive_label.clone()),
            (
                "negative_label",
                self.negative_label.clone().unwrap_or_default(),
            ),
            ("variant", self.variant.to_string()),
            ("m_a", self.m_a.to_string()),
            ("m_res_list", format_list(&self.m_res_list)),
            ("regime", self.regime.to_string()),
            ("kernel", self.kernel.to_string()),
            ("cost", self.cost.to_string()),
            ("gamma", self.gamma.to_string()),
            ("seed", self.seed.to_string()),
            ("impute_k", self.impute_k.to_string()),
            ("output_dir", self.output_dir.display().to_string()),
            ("shuffle", self.shuffle.to_string()),
            ("grid", self.grid.to_string()),
            ("tol", self.tol.to_string()),
        ]
    }

    pub fn to_text(&self) -> String {
        self.to_kv()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad =
            |what: &str| FinderError::InvalidParameter(format!("{key}: invalid {what} '{value}'"));
        match key {
            "input_path" => self.input_path = PathBuf::from(value),
            "label_column" => self.label_column = value.to_string(),
            "positive_label" => self.positive_label = value.to_string(),
            "negative_label" => {
                self.negative_label = (!value.is_empty()).then(|| value.to_string())
            }
            "variant" => self.variant = value.parse()?,
            "m_a" => self.m_a = value.parse()?,
            "m_res_list" => {
                self.m_res_list = parse_list(value).map_err(|_| bad("count list"))?;
            }
            "regime" => self.regime = value.parse()?,
            "kernel" => self.kernel = value.parse()?,
            "cost" => self.cost = value.parse().map_err(|_| bad("number"))?,
            "gamma" => self.gamma = value.parse()?,
            "seed" => self.seed = value.parse().map_err(|_| bad("integer"))?,
            "impute_k" => self.impute_k = value.parse().map_err(|_| bad("integer"))?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "shuffle" => self.shuffle = value.parse().map_err(|_| bad("boolean"))?,
            "grid" => self.grid = value.parse().map_err(|_| bad("boolean"))?,
            "tol" => self.tol = value.parse().map_err(|_| bad("number"))?,
            _ => {
                return Err(FinderError::InvalidParameter(format!(
                    "unknown config key '{key}'"
                )))
            }
        }
        Ok(())
    }

    /// Parses a config file. `input_path` and `label_column` must be present.
    pub fn from_text(text: &str) -> Result<Self> {
        let pairs = parse_kv(text)?;
        let get = |k: &str| {
            pairs
                .iter()
                .find(|(key, _)| key == k)
                .map(|(_, v)| v.clone())
        };
        let input = get("input_path").ok_or_else(|| {
            FinderError::InvalidParameter("missing required key 'input_path'".into())
        })?;
        let label = get("label_column").ok_or_else(|| {
            FinderError::InvalidParameter("missing required key 'label_column'".into())
        })?;
        let mut cfg = Self::new(input, label);
        for (k, v) in &pairs {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Recovers a config from the `# key = value` echo at the top of an
    /// output file.
    pub fn from_echo(text: &str) -> Result<Self> {
        let body: String = text
            .lines()
            .take_while(|l| l.starts_with('#'))
            .filter_map(|l| l.strip_prefix("# "))
            .filter(|l| l.contains(" = "))
            .map(|l| format!("{l}\n"))
            .collect();
        Self::from_text(&body)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_res_list.is_empty() {
            return Err(FinderError::InvalidParameter("m_res_list is empty".into()));
        }
        if self.m_res_list.contains(&0) {
            return Err(FinderError::InvalidParameter(
                "m_res values must be >= 1".into(),
            ));
        }
        if self.cost.is_nan() || self.cost <= 0.0 {
            return Err(FinderError::InvalidParameter(format!(
                "cost must be positive, got {}",
                self.cost
            )));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(FinderError::InvalidParameter(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.impute_k == 0 {
            return Err(FinderError::InvalidParameter(
                "impute_k must be >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Pipeline settings for one value of `M_res`.
    pub fn pipeline(&self, m_res: usize) -> PipelineConfig {
        PipelineConfig {
            variant: self.variant,
            m_a: self.m_a,
            m_res,
            kernel: self.kernel,
            cost: self.cost,
            gamma: self.gamma,
            regime: self.regime,
            seed: self.seed,
            shuffle: self.shuffle,
            tol: self.tol,
        }
    }
}
