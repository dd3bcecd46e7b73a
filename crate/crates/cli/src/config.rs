//! Run configuration, read from TOML.

use std::path::{Path, PathBuf};

use cforge::stage::{Ladder, Mode};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub eps: f64,
    pub a: f64,
    pub stages: usize,
    #[serde(default)]
    pub mode: Mode,
    /// Scale of δ_*. Defaults to half the smallest deficit eigenvalue for
    /// scenarios that start from a short map, 1 otherwise.
    #[serde(default)]
    pub deficit_scale: Option<f64>,
    pub grid: GridConfig,
    pub scenario: Scenario,
    #[serde(default)]
    pub seeds: Seeds,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub export: ExportConfig,
    #[serde(default)]
    pub ladder: Ladder,
    #[serde(default)]
    pub stage: StageConfig,
    #[serde(default)]
    pub init: InitConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub points_per_axis: usize,
    pub period: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Scenario {
    /// Flat inclusion with g = u♯e + δ₁(h_* + p·S), S a seeded smooth
    /// symmetric field; the stages start without initialization.
    ManufacturedDeficit {
        #[serde(default)]
        perturbation: f64,
    },
    /// g = Id and ū = shrink·inclusion plus a seeded low-mode displacement.
    ShrunkInclusion {
        #[serde(default = "default_shrink")]
        shrink: f64,
        #[serde(default)]
        perturbation: f64,
    },
    Custom {
        metric: PathBuf,
        immersion: PathBuf,
        #[serde(default)]
        skip_init: bool,
    },
}

fn default_shrink() -> f64 {
    0.9
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    #[serde(default)]
    pub master: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("cforge-out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: default_out() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportConfig {
    #[serde(default)]
    pub mesh: bool,
    #[serde(default)]
    pub csv: bool,
    #[serde(default = "yes")]
    pub traces: bool,
}

fn yes() -> bool {
    true
}

impl Default for ExportConfig {
    fn default() -> Self {
        ExportConfig { mesh: false, csv: false, traces: true }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StageConfig {
    pub corrector_depth: usize,
    pub kallen_depth: usize,
    pub ell_cap: f64,
    pub frame_bound: f64,
}

impl Default for StageConfig {
    fn default() -> Self {
        let d = cforge::stage::StageOptions::default();
        StageConfig { corrector_depth: d.corrector_depth, kallen_depth: d.kallen_depth, ell_cap: d.ell_cap, frame_bound: d.frame_bound }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitConfig {
    /// Frequency ratio between consecutive initial spirals.
    pub k: f64,
    pub mu0: Option<f64>,
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig { k: 8.0, mu0: None }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: &'static str, message: String },
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        let cfg = Self::parse(&text).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse { path: path.to_path_buf(), message },
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse { path: PathBuf::from("<config>"), message: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Range checks that do not need the engine.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key, message: String| Err(ConfigError::Invalid { key, message });
        if self.n < 2 {
            return bad("n", format!("{} (need n >= 2)", self.n));
        }
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return bad("eps", format!("{} (need eps > 0)", self.eps));
        }
        if !(self.a > 1.0) || !self.a.is_finite() {
            return bad("a", format!("{} (need a > 1)", self.a));
        }
        if self.stages == 0 {
            return bad("stages", "0 (need at least 1)".into());
        }
        if self.grid.points_per_axis < 4 {
            return bad("grid.points_per_axis", format!("{} (need at least 4)", self.grid.points_per_axis));
        }
        if !(self.grid.period > 0.0) || !self.grid.period.is_finite() {
            return bad("grid.period", format!("{} (need a positive period)", self.grid.period));
        }
        if let Some(s) = self.deficit_scale {
            if !(s > 0.0) || !s.is_finite() {
                return bad("deficit_scale", format!("{s} (need a positive value)"));
            }
        }
        if let Scenario::ShrunkInclusion { shrink, .. } = self.scenario {
            if !(shrink > 0.0 && shrink < 1.0) {
                return bad("scenario.shrink", format!("{shrink} (need 0 < shrink < 1)"));
            }
        }
        if !(self.init.k >= 1.0) {
            return bad("init.k", format!("{} (need k >= 1)", self.init.k));
        }
        if let Ladder::Geometric { base, growth, spiral_ratio, corrugation_ratio } = self.ladder {
            if !(base >= 1.0 && growth >= 1.0 && spiral_ratio >= 1.0 && corrugation_ratio >= 1.0) {
                return bad("ladder", "geometric ladder entries must be >= 1".into());
            }
        }
        Ok(())
    }
}
