//! Experiment descriptions and the bundled presets.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::inversion::ReconstructionConfig;

use super::data::nesting_ratio;
use super::shape::Region;

/// How `β·α` is chosen for a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum BetaAlphaRule {
    Fixed { value: f64 },
    /// `factor` times the fit-to-data value, probed on the initial guess.
    FitToData { factor: f64 },
}

impl BetaAlphaRule {
    fn validate(&self) -> Result<()> {
        let v = match *self {
            BetaAlphaRule::Fixed { value } => value,
            BetaAlphaRule::FitToData { factor } => factor,
        };
        if v.is_finite() && v >= 0.0 {
            Ok(())
        } else {
            Err(Error::invalid(format!("beta_alpha rule needs a finite non-negative number: {self:?}")))
        }
    }

    /// Short stable label, used for sweep directory names.
    pub fn label(&self) -> String {
        match *self {
            BetaAlphaRule::Fixed { value } => format!("ba{value}"),
            BetaAlphaRule::FitToData { factor } => format!("fit{factor}"),
        }
    }
}

/// Axes of a parameter sweep. An empty axis keeps the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alpha: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub beta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub epsilon: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub beta_alpha: Vec<BetaAlphaRule>,
}

impl SweepSpec {
    /// `β·α ∈ {0, fit, 10·fit}`.
    pub fn beta_alpha_insensitivity() -> Self {
        SweepSpec {
            beta_alpha: vec![
                BetaAlphaRule::Fixed { value: 0.0 },
                BetaAlphaRule::FitToData { factor: 1.0 },
                BetaAlphaRule::FitToData { factor: 10.0 },
            ],
            ..Default::default()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty() && self.beta.is_empty() && self.epsilon.is_empty() && self.beta_alpha.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default = "default_name")]
    pub name: String,
    pub forward_grid_n: usize,
    pub inversion_grid_n: usize,
    /// ℓ∞-relative noise level in `[0, 1]`.
    #[serde(default)]
    pub noise_level: f64,
    #[serde(default = "default_schedule")]
    pub snapshot_schedule: Vec<usize>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Overrides `reconstruction.beta` when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_alpha: Option<BetaAlphaRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    pub target_shape: Region,
    pub initial_shape: Region,
    pub reconstruction: ReconstructionConfig,
}

fn default_name() -> String {
    "custom".into()
}

fn default_schedule() -> Vec<usize> {
    vec![0]
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

pub const PRESET_NAMES: [&str; 4] = ["exact_two_squares", "noise10", "noise50", "nonconvex_L"];

fn preset_source(name: &str) -> Option<&'static str> {
    Some(match name {
        "exact_two_squares" => include_str!("../../presets/exact_two_squares.toml"),
        "noise10" => include_str!("../../presets/noise10.toml"),
        "noise50" => include_str!("../../presets/noise50.toml"),
        "nonconvex_L" => include_str!("../../presets/nonconvex_L.toml"),
        _ => return None,
    })
}

impl ExperimentSpec {
    pub fn preset(name: &str) -> Result<Self> {
        let src = preset_source(name)
            .ok_or_else(|| Error::invalid(format!("unknown preset '{name}' (known: {})", PRESET_NAMES.join(", "))))?;
        Self::from_toml_str(src, Path::new(name))
    }

    /// `origin` only labels error messages.
    pub fn from_toml_str(src: &str, origin: &Path) -> Result<Self> {
        let spec: Self =
            toml::from_str(src).map_err(|e| Error::Config { path: origin.to_path_buf(), message: e.to_string() })?;
        spec.validate().map_err(|e| Error::Config { path: origin.to_path_buf(), message: e.to_string() })?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path)?;
        Self::from_toml_str(&src, path)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::invalid(format!("cannot serialize spec: {e}")))
    }

    pub fn inversion_grid(&self) -> Result<Grid> {
        Grid::new(self.inversion_grid_n)
    }

    pub fn forward_grid(&self) -> Result<Grid> {
        Grid::new(self.forward_grid_n)
    }

    /// Noise and any other randomness are keyed off `reconstruction.seed`.
    pub fn seed(&self) -> u64 {
        self.reconstruction.seed
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.reconstruction.seed = seed;
    }

    pub fn validate(&self) -> Result<()> {
        let (fine, coarse) = (self.forward_grid()?, self.inversion_grid()?);
        if self.forward_grid_n < 2 * self.inversion_grid_n - 1 {
            return Err(Error::invalid(format!(
                "forward_grid_n = {} must be at least 2 * inversion_grid_n - 1 = {}",
                self.forward_grid_n,
                2 * self.inversion_grid_n - 1
            )));
        }
        nesting_ratio(&fine, &coarse)?;
        if !(0.0..=1.0).contains(&self.noise_level) {
            return Err(Error::invalid(format!("noise_level must lie in [0, 1], got {}", self.noise_level)));
        }
        if self.snapshot_schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("snapshot_schedule must be strictly increasing"));
        }
        self.target_shape.validate()?;
        self.initial_shape.validate()?;
        self.reconstruction.validate()?;
        if let Some(rule) = &self.beta_alpha {
            rule.validate()?;
        }
        if let Some(sweep) = &self.sweep {
            sweep.beta_alpha.iter().try_for_each(BetaAlphaRule::validate)?;
        }
        Ok(())
    }
}
