//! Flat `key = value` experiment configuration.
//!
//! One key per line, `#` starts a comment line, no nesting. CLI flags use
//! the same key names and override file values. Unknown keys are hard
//! errors everywhere.

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::model::{Model, SparseModel, SubspaceUnionModel};
use crate::solvers::Scheme;
use crate::textio;

/// The exact key set; anything else is rejected.
pub const KNOWN_KEYS: [&str; 18] = [
    "seed",
    "N",
    "m",
    "k",
    "model",
    "subspace_file",
    "noise_l2",
    "eta",
    "mu",
    "lambda",
    "theta",
    "scheme",
    "max_iter",
    "tol_err",
    "trials",
    "out_dir",
    "ric_mode",
    "mc_trials",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Sparse,
    Subspaces,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MuSetting {
    Auto,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RicMode {
    Exact,
    MonteCarlo,
}

/// Validated experiment configuration with defaults applied.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub k: usize,
    pub model: ModelKind,
    pub subspace_file: Option<PathBuf>,
    pub noise_l2: f64,
    pub eta: f64,
    pub mu: MuSetting,
    pub lambda: Vec<f64>,
    pub theta: f64,
    pub scheme: Vec<Scheme>,
    pub max_iter: usize,
    pub tol_err: f64,
    pub trials: usize,
    pub out_dir: PathBuf,
    pub ric_mode: RicMode,
    pub mc_trials: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            n: None,
            m: None,
            k: 1,
            model: ModelKind::Sparse,
            subspace_file: None,
            noise_l2: 0.0,
            eta: 0.0,
            mu: MuSetting::Auto,
            lambda: vec![1.0],
            theta: 0.25,
            scheme: vec![Scheme::ModRed],
            max_iter: 500,
            tol_err: 0.0,
            trials: 1,
            out_dir: PathBuf::from("out"),
            ric_mode: RicMode::Exact,
            mc_trials: 10_000,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("key '{key}': cannot parse '{value}'")))
}

fn parse_list<T, F: Fn(&str) -> Result<T>>(key: &str, value: &str, f: F) -> Result<Vec<T>> {
    let items: Vec<&str> = value.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(Error::Config(format!("key '{key}': empty list")));
    }
    items.iter().map(|s| f(s)).collect()
}

impl ExperimentConfig {
    /// Apply one `key = value` assignment.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "seed" => self.seed = parse_num(key, value)?,
            "N" => self.n = Some(parse_num(key, value)?),
            "m" => self.m = Some(parse_num(key, value)?),
            "k" => self.k = parse_num(key, value)?,
            "model" => {
                self.model = match value {
                    "sparse" => ModelKind::Sparse,
                    "subspaces" => ModelKind::Subspaces,
                    other => {
                        return Err(Error::Config(format!(
                            "key 'model': expected sparse or subspaces, got '{other}'"
                        )))
                    }
                }
            }
            "subspace_file" => self.subspace_file = Some(PathBuf::from(value)),
            "noise_l2" => self.noise_l2 = parse_num(key, value)?,
            "eta" => self.eta = parse_num(key, value)?,
            "mu" => {
                self.mu = if value == "auto" {
                    MuSetting::Auto
                } else {
                    MuSetting::Fixed(parse_num(key, value)?)
                }
            }
            "lambda" => self.lambda = parse_list(key, value, |s| parse_num(key, s))?,
            "theta" => self.theta = parse_num(key, value)?,
            "scheme" => {
                self.scheme = parse_list(key, value, |s| {
                    s.parse::<Scheme>()
                        .map_err(|e| Error::Config(format!("key 'scheme': {e}")))
                })?
            }
            "max_iter" => self.max_iter = parse_num(key, value)?,
            "tol_err" => self.tol_err = parse_num(key, value)?,
            "trials" => self.trials = parse_num(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "ric_mode" => {
                self.ric_mode = match value {
                    "exact" => RicMode::Exact,
                    "mc" => RicMode::MonteCarlo,
                    other => {
                        return Err(Error::Config(format!(
                            "key 'ric_mode': expected exact or mc, got '{other}'"
                        )))
                    }
                }
            }
            "mc_trials" => self.mc_trials = parse_num(key, value)?,
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Parse a config file body and apply every assignment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config(format!(
                "line {}: expected 'key = value', got '{line}'",
                idx + 1
            )))?;
            self.apply(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Range checks that do not depend on the subcommand.
    pub fn validate(&self) -> Result<()> {
        if let Some(n) = self.n {
            if n < 1 {
                return Err(Error::Config("N must be >= 1".into()));
            }
        }
        if let Some(m) = self.m {
            if m < 1 {
                return Err(Error::Config("m must be >= 1".into()));
            }
        }
        if self.k < 1 {
            return Err(Error::Config("k must be >= 1".into()));
        }
        if !(self.noise_l2 >= 0.0) {
            return Err(Error::Config("noise_l2 must be >= 0".into()));
        }
        if !(self.eta >= 0.0) {
            return Err(Error::Config("eta must be >= 0".into()));
        }
        if let MuSetting::Fixed(mu) = self.mu {
            if !(mu > 0.0) {
                return Err(Error::Config("mu must be positive or 'auto'".into()));
            }
        }
        if self.lambda.is_empty() {
            return Err(Error::Config("lambda sweep list is empty".into()));
        }
        for &l in &self.lambda {
            if !(0.0..=1.0).contains(&l) {
                return Err(Error::Config(format!("lambda values must lie in [0, 1], got {l}")));
            }
        }
        if self.scheme.is_empty() {
            return Err(Error::Config("scheme list is empty".into()));
        }
        if self.max_iter < 1 {
            return Err(Error::Config("max_iter must be >= 1".into()));
        }
        if !(self.tol_err >= 0.0) {
            return Err(Error::Config("tol_err must be >= 0".into()));
        }
        if self.trials < 1 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.mc_trials < 1 {
            return Err(Error::Config("mc_trials must be >= 1".into()));
        }
        Ok(())
    }

    /// Ambient and measurement dimensions; required for instance work.
    pub fn dims(&self) -> Result<(usize, usize)> {
        let n = self.n.ok_or_else(|| Error::Config("missing required key 'N'".into()))?;
        let m = self.m.ok_or_else(|| Error::Config("missing required key 'm'".into()))?;
        Ok((n, m))
    }

    /// Build the configured model for ambient dimension `ambient`. Reads
    /// the subspace basis file when the model is a union.
    pub fn build_model(&self, ambient: usize) -> Result<Model> {
        match self.model {
            ModelKind::Sparse => {
                if self.k > ambient {
                    return Err(Error::Config(format!(
                        "k = {} exceeds the ambient dimension {ambient}",
                        self.k
                    )));
                }
                Ok(Model::Sparse(SparseModel::new(ambient, self.k)?))
            }
            ModelKind::Subspaces => {
                let path = self.subspace_file.as_ref().ok_or_else(|| {
                    Error::Config("model = subspaces requires subspace_file".into())
                })?;
                let text = std::fs::read_to_string(path)?;
                let bases = textio::parse_matrices(&text)?;
                let model = SubspaceUnionModel::new(bases)?;
                if model.ambient_dim() != ambient {
                    return Err(Error::Config(format!(
                        "subspace file has ambient dimension {}, expected {ambient}",
                        model.ambient_dim()
                    )));
                }
                Ok(Model::Subspaces(model))
            }
        }
    }
}
