//! Scenario files.
//!
//! A scenario is one TOML document:
//!
//! ```toml
//! name = "torch-1d"
//! seed = 7
//!
//! [domain]
//! shape = "interval"       # interval {a, b} | disk {center, radius} | polygon {vertices}
//! a = 0.0
//! b = 1.0
//!
//! [source]
//! kind = "constant"        # constant | dist_power | time_weighted | semilinear_power | ...
//! c = 1.0
//!
//! [grid]
//! h = 0.0078125
//! dt = 1e-4
//! t_end = 3.0
//!
//! [[checks]]
//! kind = "parabolic"
//! alpha = 0.5
//! p = 0.5
//! ```
//!
//! `semilinear_power` sources additionally need `[maximal] eps = [...]`.
//! Exponents accept numbers or the strings `"inf"` and `"-inf"`. A check
//! with `sharpness = true` is expected to fail.

use std::path::{Path, PathBuf};

use parconc_core::domain::Domain;
use parconc_core::solver::SourceSpec;
use parconc_core::Exponent;
use serde::{Deserialize, Serialize};

use crate::LabError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub domain: Domain,
    pub source: SourceSpec,
    pub grid: GridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maximal: Option<MaximalConfig>,
    #[serde(default)]
    pub checks: Vec<CheckConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub h: f64,
    pub dt: f64,
    pub t_end: f64,
}

/// ε sequence for the maximal solution of `∂t u = Δu + u^γ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaximalConfig {
    pub eps: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default)]
    pub sharpness: bool,
    #[serde(flatten)]
    pub kind: CheckKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CheckKind {
    /// p-concavity of the slice at `t` (default `T`).
    Spatial {
        p: Exponent,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t: Option<f64>,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
    },
    Parabolic {
        alpha: f64,
        p: Exponent,
        /// Defaults to `20·dt`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t_min: Option<f64>,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
    },
    /// Relative gap between `u` and its envelope.
    Envelope {
        alpha: f64,
        p: Exponent,
        #[serde(default = "default_max_gap")]
        max_relative_gap: f64,
    },
    /// Power concavity of `H_m(t)`, or of `H_m(τ^{1/α})` when `alpha` is set.
    Energy {
        q: Exponent,
        #[serde(default = "default_m")]
        m: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t_min: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
    },
    Structure {
        alpha: f64,
        p: f64,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
    },
    /// Fitted `s` in `u(x* + νρ, ρ^{1/α}) ~ ρ^s` must satisfy
    /// `|s - expected| ≤ tolerance`.
    BoundaryExponent {
        x_star: Vec<f64>,
        y_star: Vec<f64>,
        alpha: f64,
        expected: f64,
        tolerance: f64,
    },
}

fn default_samples() -> usize {
    4000
}

fn default_max_gap() -> f64 {
    0.02
}

fn default_m() -> f64 {
    1.0
}

impl CheckKind {
    pub fn name(&self) -> &'static str {
        match self {
            CheckKind::Spatial { .. } => "spatial",
            CheckKind::Parabolic { .. } => "parabolic",
            CheckKind::Envelope { .. } => "envelope",
            CheckKind::Energy { .. } => "energy",
            CheckKind::Structure { .. } => "structure",
            CheckKind::BoundaryExponent { .. } => "boundary-exponent",
        }
    }

    /// Structure checks only look at the source.
    pub fn needs_field(&self) -> bool {
        !matches!(self, CheckKind::Structure { .. })
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, LabError> {
        Self::parse(text, Path::new("<string>"))
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|source| LabError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    fn parse(text: &str, path: &Path) -> Result<Self, LabError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| LabError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate().map_err(|message| LabError::Config {
            path: path.to_path_buf(),
            message,
        })?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String, LabError> {
        toml::to_string(self).map_err(|e| LabError::Serialize(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(format!("scenario name {:?} must be a nonempty file name", self.name));
        }
        self.domain.validate().map_err(|e| e.to_string())?;
        self.source.validate().map_err(|e| e.to_string())?;
        let g = &self.grid;
        if !(g.h > 0.0 && g.dt > 0.0 && g.t_end > 0.0 && g.t_end.is_finite()) {
            return Err(format!("grid needs positive h, dt, t_end; got {g:?}"));
        }
        match (&self.source, &self.maximal) {
            (SourceSpec::SemilinearPower { .. }, None) => {
                return Err("semilinear_power source needs a [maximal] eps sequence".into());
            }
            (SourceSpec::SemilinearPower { .. }, Some(_)) | (_, None) => {}
            (_, Some(_)) => return Err("[maximal] only applies to semilinear_power sources".into()),
        }
        for (i, c) in self.checks.iter().enumerate() {
            c.kind
                .validate()
                .map_err(|e| format!("check {i} ({}): {e}", c.kind.name()))?;
        }
        Ok(())
    }
}

fn positive(name: &str, v: f64) -> Result<(), String> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(format!("{name} = {v} must be a positive real"))
    }
}

impl CheckKind {
    fn validate(&self) -> Result<(), String> {
        match self {
            CheckKind::Spatial { samples, tolerance, .. } => {
                nonzero(*samples)?;
                tolerance.map_or(Ok(()), |t| positive("tolerance", t))
            }
            CheckKind::Parabolic {
                alpha,
                samples,
                tolerance,
                ..
            } => {
                positive("alpha", *alpha)?;
                nonzero(*samples)?;
                tolerance.map_or(Ok(()), |t| positive("tolerance", t))
            }
            CheckKind::Envelope {
                alpha,
                max_relative_gap,
                ..
            } => {
                positive("alpha", *alpha)?;
                positive("max_relative_gap", *max_relative_gap)
            }
            CheckKind::Energy {
                m, alpha, tolerance, ..
            } => {
                positive("m", *m)?;
                alpha.map_or(Ok(()), |a| positive("alpha", a))?;
                tolerance.map_or(Ok(()), |t| positive("tolerance", t))
            }
            CheckKind::Structure {
                alpha,
                p,
                samples,
                tolerance,
            } => {
                positive("alpha", *alpha)?;
                if !(*p > 0.0 && *p < 1.0) {
                    return Err(format!("p = {p} outside (0, 1)"));
                }
                nonzero(*samples)?;
                tolerance.map_or(Ok(()), |t| positive("tolerance", t))
            }
            CheckKind::BoundaryExponent { alpha, tolerance, .. } => {
                positive("alpha", *alpha)?;
                positive("tolerance", *tolerance)
            }
        }
    }
}

fn nonzero(samples: usize) -> Result<(), String> {
    if samples == 0 {
        Err("samples must be positive".into())
    } else {
        Ok(())
    }
}
