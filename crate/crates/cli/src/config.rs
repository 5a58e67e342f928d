//! Run configuration (TOML).

use std::path::PathBuf;

use serde::Deserialize;
use snlevy::laws::Law;
use snlevy::levy_model::ModelSpec;
use snlevy::risk::KernelVariant;
use snlevy::scale::ScaleOptions;
use snlevy::sim::{SimPlan, Weight};
use snlevy::validation::SuiteParams;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::Subcommand)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Tabulate x, W(x), W'(x), Z(x).
    Scale,
    /// Evaluate a named fluctuation law on a grid.
    Law,
    /// Generalized Gerber-Shiu function on an x grid.
    Gs,
    /// Simulate paths; emit per-path functionals or estimates.
    Simulate,
    /// Analytic-versus-simulation suite.
    Validate,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Scale => "scale",
            Command::Law => "law",
            Command::Gs => "gs",
            Command::Simulate => "simulate",
            Command::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    /// When present, must match the subcommand.
    #[serde(default)]
    pub command: Option<Command>,
    pub model: ModelSpec,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub scale: ScaleConfig,
    #[serde(default)]
    pub law: Option<LawConfig>,
    #[serde(default)]
    pub gs: GsConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub validate: ValidateConfig,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

/// A single value, an explicit list, or `{ start, stop, step }`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Point(f64),
    List(Vec<f64>),
    Range(RangeSpec),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn points(&self, key: &str) -> Result<Vec<f64>, String> {
        let pts = match self {
            Grid::Point(v) => vec![*v],
            Grid::List(v) => v.clone(),
            Grid::Range(RangeSpec { start, stop, step }) => {
                if !(step.is_finite() && *step > 0.0 && start.is_finite() && stop >= start && stop.is_finite()) {
                    return Err(format!("{key}: grid requires finite start <= stop and step > 0"));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
                (0..n).map(|i| start + i as f64 * step).collect()
            }
        };
        if pts.is_empty() {
            return Err(format!("{key}: grid is empty"));
        }
        if pts.iter().any(|v| v.is_nan()) {
            return Err(format!("{key}: grid contains NaN"));
        }
        Ok(pts)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScaleConfig {
    pub q: f64,
    pub x: Grid,
    pub options: ScaleOptions,
}

impl Default for ScaleConfig {
    fn default() -> Self {
        Self {
            q: 0.0,
            x: Grid::Range(RangeSpec {
                start: 0.0,
                stop: 5.0,
                step: 0.1,
            }),
            options: ScaleOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawConfig {
    pub law: Law,
    #[serde(default)]
    pub q: f64,
    #[serde(default)]
    pub beta: f64,
    pub x: Grid,
    #[serde(default = "zero_grid")]
    pub y: Grid,
    #[serde(default = "zero_grid")]
    pub z: Grid,
    #[serde(default = "zero_grid")]
    pub a: Grid,
    #[serde(default = "zero_grid")]
    pub b: Grid,
    #[serde(default)]
    pub options: ScaleOptions,
}

fn zero_grid() -> Grid {
    Grid::Point(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GsMethod {
    /// Iterated quadrature over `(y, z, a, b)`.
    #[default]
    Full,
    /// Two-dimensional reduction for penalties of `(y, z)` only.
    YzReduction,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GsConfig {
    pub q: f64,
    pub x: Grid,
    /// `unit`, `deficit_power k`, `band y1 y2 z1 z2` or `exp_deficit s`.
    pub penalty: String,
    pub a_max: Option<f64>,
    pub rel_tol: Option<f64>,
    pub kernel: KernelVariant,
    pub method: GsMethod,
    pub options: ScaleOptions,
}

impl Default for GsConfig {
    fn default() -> Self {
        Self {
            q: 0.0,
            x: Grid::Point(1.0),
            penalty: "unit".into(),
            a_max: None,
            rel_tol: None,
            kernel: KernelVariant::default(),
            method: GsMethod::default(),
            options: ScaleOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub x: f64,
    pub plan: SimPlan,
    /// Without estimates, one row per path is written.
    pub estimates: Vec<EstimateSpec>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            x: 1.0,
            plan: SimPlan::default(),
            estimates: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSpec {
    pub label: String,
    pub weight: Weight,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateConfig {
    pub plan: SimPlan,
    pub params: SuiteParams,
}
