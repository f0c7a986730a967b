//! Experiment configuration, read from TOML.
//!
//! ```toml
//! horizon = 2000
//! repetitions = 5
//! master_seed = 1
//! constants = "practical"
//!
//! [environment]
//! kind = "synthetic"
//! k = 5
//! d = 100
//! s0 = 5
//!
//! [[policy]]
//! kind = "l1ball"
//!
//! [[policy]]
//! kind = "oful"
//! ```
//!
//! Unknown keys are rejected. Policies appear in outputs and chart legends in the
//! order they are listed.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::env::{EnvSpec, HardInstanceSpec, MarginSpec, SyntheticSpec};
use crate::error::{Error, Result};
use crate::policies::{ConstantMode, ResolveSchedule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub horizon: usize,
    pub repetitions: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "practical")]
    pub constants: ConstantMode,
    #[serde(default)]
    pub diagnostics: bool,
    #[serde(default = "yes")]
    pub chart: bool,
    /// Rescale every arm to unit sup-norm before it is shown to policies.
    #[serde(default)]
    pub normalize_sup: bool,
    #[serde(default)]
    pub out: Option<PathBuf>,
    pub environment: EnvironmentConfig,
    #[serde(default)]
    pub theory: TheoryConfig,
    #[serde(default)]
    pub diagnostics_options: DiagnosticsOptions,
    #[serde(rename = "policy")]
    pub policies: Vec<PolicySpec>,
}

fn practical() -> ConstantMode {
    ConstantMode::Practical
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EnvironmentConfig {
    Synthetic(SyntheticSpec),
    Margin(MarginSpec),
    Hard(HardInstanceSpec),
    Replay(ReplaySpec),
}

impl EnvironmentConfig {
    pub fn simulated(&self) -> Option<EnvSpec> {
        match self {
            EnvironmentConfig::Synthetic(s) => Some(EnvSpec::Synthetic(s.clone())),
            EnvironmentConfig::Margin(s) => Some(EnvSpec::Margin(s.clone())),
            EnvironmentConfig::Hard(s) => Some(EnvSpec::Hard(s.clone())),
            EnvironmentConfig::Replay(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplaySpec {
    pub path: PathBuf,
    pub k: usize,
    #[serde(default = "ten")]
    pub permutations: usize,
}

fn ten() -> usize {
    10
}

/// Population constants needed by the theoretical constant mode.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryConfig {
    /// Compatibility constant of the optimal-arm covariance, if known.
    pub phi0: Option<f64>,
    /// Gap threshold used to estimate `phi0` by rejection when it is not given.
    pub delta_star: Option<f64>,
    #[serde(default = "phi0_rounds")]
    pub phi0_rounds: usize,
}

fn phi0_rounds() -> usize {
    20_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsOptions {
    #[serde(default = "n_starts")]
    pub n_starts: usize,
    #[serde(default = "n_samples")]
    pub eigen_samples: usize,
}

fn n_starts() -> usize {
    8
}

fn n_samples() -> usize {
    200
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        Self {
            n_starts: n_starts(),
            eigen_samples: n_samples(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicySpec {
    L1ball {
        id: Option<String>,
        lambda0: Option<f64>,
        tau0: Option<f64>,
        #[serde(default)]
        resolve: ResolveSchedule,
    },
    Greedy {
        id: Option<String>,
        lambda0: Option<f64>,
        #[serde(default)]
        resolve: ResolveSchedule,
    },
    LassoBandit {
        id: Option<String>,
        #[serde(default = "q_default")]
        q: usize,
        #[serde(default = "h_lasso")]
        h: f64,
        #[serde(default = "half")]
        lambda1: f64,
        #[serde(default = "half")]
        lambda2: f64,
    },
    OlsBandit {
        id: Option<String>,
        #[serde(default = "q_default")]
        q: usize,
        #[serde(default = "h_ols")]
        h: f64,
    },
    Oful {
        id: Option<String>,
        #[serde(default = "one")]
        lambda: f64,
        #[serde(default = "delta_default")]
        delta: f64,
        #[serde(default = "one")]
        s_bound: f64,
    },
    Random {
        id: Option<String>,
    },
    /// Plays `arm` every round; without `arm`, replay uses the majority label
    /// and simulation uses arm 0.
    Constant {
        id: Option<String>,
        arm: Option<usize>,
    },
    Oracle {
        id: Option<String>,
    },
}

fn q_default() -> usize {
    1
}

fn h_lasso() -> f64 {
    5.0
}

fn h_ols() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

fn one() -> f64 {
    1.0
}

fn delta_default() -> f64 {
    1e-4
}

impl PolicySpec {
    pub fn kind(&self) -> &'static str {
        match self {
            PolicySpec::L1ball { .. } => "l1ball",
            PolicySpec::Greedy { .. } => "greedy",
            PolicySpec::LassoBandit { .. } => "lasso_bandit",
            PolicySpec::OlsBandit { .. } => "ols_bandit",
            PolicySpec::Oful { .. } => "oful",
            PolicySpec::Random { .. } => "random",
            PolicySpec::Constant { .. } => "constant",
            PolicySpec::Oracle { .. } => "oracle",
        }
    }

    pub fn id(&self) -> &str {
        let explicit = match self {
            PolicySpec::L1ball { id, .. }
            | PolicySpec::Greedy { id, .. }
            | PolicySpec::LassoBandit { id, .. }
            | PolicySpec::OlsBandit { id, .. }
            | PolicySpec::Oful { id, .. }
            | PolicySpec::Random { id }
            | PolicySpec::Constant { id, .. }
            | PolicySpec::Oracle { id } => id.as_deref(),
        };
        explicit.unwrap_or_else(|| self.kind())
    }

    fn validate(&self) -> Result<()> {
        let bad = |key: &str, v: f64| Err(Error::Config(format!("policy {}: {key} = {v} is invalid", self.id())));
        match *self {
            PolicySpec::L1ball { lambda0, tau0, .. } => {
                if let Some(v) = lambda0.filter(|v| !(*v >= 0.0)) {
                    return bad("lambda0", v);
                }
                if let Some(v) = tau0.filter(|v| !(*v >= 0.0)) {
                    return bad("tau0", v);
                }
            }
            PolicySpec::Greedy { lambda0: Some(v), .. } if !(v >= 0.0) => return bad("lambda0", v),
            PolicySpec::LassoBandit { q, h, lambda1, lambda2, .. } => {
                if q == 0 {
                    return bad("q", 0.0);
                }
                if !(h >= 0.0) {
                    return bad("h", h);
                }
                if !(lambda1 >= 0.0) {
                    return bad("lambda1", lambda1);
                }
                if !(lambda2 >= 0.0) {
                    return bad("lambda2", lambda2);
                }
            }
            PolicySpec::OlsBandit { q, h, .. } => {
                if q == 0 {
                    return bad("q", 0.0);
                }
                if !(h >= 0.0) {
                    return bad("h", h);
                }
            }
            PolicySpec::Oful { lambda, delta, s_bound, .. } => {
                if !(lambda > 0.0) {
                    return bad("lambda", lambda);
                }
                if !(delta > 0.0 && delta < 1.0) {
                    return bad("delta", delta);
                }
                if !(s_bound >= 0.0) {
                    return bad("s_bound", s_bound);
                }
            }
            _ => {}
        }
        Ok(())
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: Self = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let EnvironmentConfig::Replay(r) = &mut cfg.environment {
            if r.path.is_relative() {
                if let Some(dir) = path.parent() {
                    r.path = dir.join(&r.path);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be >= 1".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be >= 1".into()));
        }
        if self.policies.is_empty() {
            return Err(Error::Config("policy: at least one [[policy]] entry is required".into()));
        }
        let mut ids = HashSet::new();
        for p in &self.policies {
            p.validate()?;
            if !ids.insert(p.id()) {
                return Err(Error::Config(format!("policy id {:?} is used twice", p.id())));
            }
            if p.id().is_empty() || p.id().contains(['/', '\\', ',']) {
                return Err(Error::Config(format!("policy id {:?} must be a plain name", p.id())));
            }
        }
        match &self.environment {
            EnvironmentConfig::Replay(r) => {
                if r.k < 2 {
                    return Err(Error::Config("environment.k must be >= 2".into()));
                }
                if r.permutations == 0 {
                    return Err(Error::Config("environment.permutations must be >= 1".into()));
                }
            }
            env => env.simulated().expect("simulated").validate()?,
        }
        if self.constants == ConstantMode::Theoretical {
            let t = &self.theory;
            match (t.phi0, t.delta_star) {
                (Some(p), _) if !(p > 0.0) => return Err(Error::Config(format!("theory.phi0 must be > 0, got {p}"))),
                (None, None) => {
                    return Err(Error::Config(
                        "theory.phi0 or theory.delta_star is required with constants = \"theoretical\"".into(),
                    ))
                }
                (None, Some(ds)) if !(ds >= 0.0) => {
                    return Err(Error::Config(format!("theory.delta_star must be >= 0, got {ds}")))
                }
                _ => {}
            }
            if matches!(self.environment, EnvironmentConfig::Replay(_)) && t.phi0.is_none() {
                return Err(Error::Config("theory.phi0 is required for theoretical constants on replay".into()));
            }
        }
        Ok(())
    }
}
