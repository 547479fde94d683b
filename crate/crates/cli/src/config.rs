//! Experiment documents: parsing, overrides and validation.

use std::path::Path;

use delaystab::{CertificateSearchConfig, DelayModel, History, SampleSpec, SystemModel, TimeKind};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Schema tag every experiment document must carry.
pub const SCHEMA: &str = "delaystab/v1";

/// A complete experiment description as read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: String,
    pub system: SystemSpec,
    /// One delay shared by every delayed field.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay: Option<DelayModel>,
    /// One delay per delayed field.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delays: Option<Vec<DelayModel>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_history: Option<History>,
    /// A user-supplied certificate vector `v`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Vec<f64>>,
    #[serde(default)]
    pub sim: SimSettings,
    #[serde(default)]
    pub analysis: AnalysisSettings,
}

/// The system either as matrices or as a polynomial model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemSpec {
    Linear(LinearSpec),
    Polynomial(SystemModel),
}

/// `x' = A x + sum_q B_q x(t - tau_q)` or its discrete analogue.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearSpec {
    pub kind: TimeKind,
    pub a: Vec<Vec<f64>>,
    #[serde(default)]
    pub b: Vec<Vec<Vec<f64>>>,
}

/// Integration settings. For discrete systems `horizon` counts steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSettings {
    pub h: f64,
    pub horizon: f64,
}

impl Default for SimSettings {
    fn default() -> Self {
        SimSettings {
            h: 0.01,
            horizon: 50.0,
        }
    }
}

/// Decay rates that can be requested.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateKind {
    /// Picked from the time kind, the degree and the delay structure.
    Auto,
    Eta,
    Theta,
    Xi,
    Beta,
}

/// Analysis settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSettings {
    /// Rates to compute; empty computes none.
    pub bounds: Vec<RateKind>,
    /// Overrides the delay bound used by `eta` and `theta`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_sup: Option<f64>,
    /// Overrides the proportional ratio used by `xi` and `beta`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Level-set contraction factor; `0` disables level sets.
    pub gamma: f64,
    pub settle_fraction: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search: Option<CertificateSearchConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample: Option<SampleSpec>,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        AnalysisSettings {
            bounds: vec![RateKind::Auto],
            tau_sup: None,
            alpha: None,
            gamma: 0.9,
            settle_fraction: 0.5,
            seed: 0,
            search: None,
            sample: None,
        }
    }
}

/// Command-line values that replace document values.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub h: Option<f64>,
    pub horizon: Option<f64>,
}

/// A validated experiment ready for the commands.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub model: SystemModel,
    pub delays: Vec<DelayModel>,
    pub history: Option<History>,
    pub certificate: Option<Vec<f64>>,
    pub sim: SimSettings,
    pub analysis: AnalysisSettings,
}

impl Experiment {
    pub fn search_config(&self) -> CertificateSearchConfig {
        let mut cfg = self.analysis.search.clone().unwrap_or_default();
        cfg.seed = self.analysis.seed;
        cfg
    }

    pub fn sample_spec(&self) -> SampleSpec {
        let mut s = self.analysis.sample.clone().unwrap_or_default();
        s.seed = self.analysis.seed;
        s
    }

    /// Number of discrete steps encoded by the horizon.
    pub fn steps(&self) -> Result<u64, CliError> {
        let t = self.sim.horizon;
        if t >= 1.0 && t.fract() == 0.0 && t <= u64::MAX as f64 {
            Ok(t as u64)
        } else {
            Err(CliError::Config(format!(
                "discrete horizon must be a positive whole number of steps, got {t}"
            )))
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("malformed config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Applies overrides and checks that every part fits together.
    pub fn resolve(mut self, overrides: Overrides) -> Result<Experiment, CliError> {
        if self.schema != SCHEMA {
            return Err(CliError::Config(format!(
                "unsupported schema `{}`, expected `{SCHEMA}`",
                self.schema
            )));
        }
        if let Some(seed) = overrides.seed {
            self.analysis.seed = seed;
        }
        if let Some(h) = overrides.h {
            self.sim.h = h;
        }
        if let Some(horizon) = overrides.horizon {
            self.sim.horizon = horizon;
        }
        for (name, value) in [("sim.h", self.sim.h), ("sim.horizon", self.sim.horizon)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(CliError::Config(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        let a = &self.analysis;
        if !(0.0..1.0).contains(&a.gamma) {
            return Err(CliError::Config(format!(
                "analysis.gamma must lie in [0, 1), got {}",
                a.gamma
            )));
        }
        if !(0.0..1.0).contains(&a.settle_fraction) {
            return Err(CliError::Config(format!(
                "analysis.settle_fraction must lie in [0, 1), got {}",
                a.settle_fraction
            )));
        }

        let model = match self.system {
            SystemSpec::Linear(l) => SystemModel::linear(l.kind, &l.a, &l.b)?,
            SystemSpec::Polynomial(m) => m,
        };
        let delays = match (self.delay, self.delays) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "give either `delay` or `delays`, not both".into(),
                ));
            }
            (Some(d), None) => vec![d],
            (None, Some(ds)) => ds,
            (None, None) => Vec::new(),
        };
        for d in &delays {
            d.validate()?;
            if d.time_kind() != model.kind() {
                return Err(CliError::Config(format!(
                    "delay {d:?} does not match a {:?} system",
                    model.kind()
                )));
            }
        }
        let fields = model.delayed().len();
        if fields > 0 && !(delays.len() == 1 || delays.len() == fields) {
            return Err(CliError::Config(format!(
                "{fields} delayed field(s) need one shared delay or one delay each, got {}",
                delays.len()
            )));
        }
        if let Some(h) = &self.initial_history {
            if h.n() != model.n() {
                return Err(CliError::Config(format!(
                    "initial_history has dimension {}, system has {}",
                    h.n(),
                    model.n()
                )));
            }
        }
        if let Some(v) = &self.certificate {
            if v.len() != model.n() {
                return Err(CliError::Config(format!(
                    "certificate has dimension {}, system has {}",
                    v.len(),
                    model.n()
                )));
            }
        }
        Ok(Experiment {
            model,
            delays,
            history: self.initial_history,
            certificate: self.certificate,
            sim: self.sim,
            analysis: self.analysis,
        })
    }
}
