//! Scenario and suite files.

use serde::Deserialize;
use std::path::{Path, PathBuf};

fn two() -> usize {
    2
}

fn record_step() -> f64 {
    0.05
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub horizon: f64,
    /// Spacing of the recorded slices.
    #[serde(default = "record_step")]
    pub record_step: f64,
    pub grid: GridSpec,
    pub datum: DatumSpec,
    pub model: ModelSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
    /// Output directory, relative to the scenario file.
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "two")]
    pub dim: usize,
    pub half_width: f64,
    pub spacing: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatumSpec {
    /// `clamp(radius - |x - center|, floor, -floor)`.
    Disk {
        radius: f64,
        #[serde(default)]
        center: [f64; 2],
        floor: f64,
    },
    /// `clamp(1 - |(x / a, y / b)|, floor, -floor)`.
    Ellipse { semi_axes: [f64; 2], floor: f64 },
    /// Truncated signed distance of the square `|x|_inf <= half_side`.
    Square { half_side: f64, floor: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Constant {
        speed: f64,
    },
    /// `c = kernel_scale 1_{B(0, kernel_radius)} * chi + c1`.
    Dislocation {
        kernel_radius: f64,
        kernel_scale: f64,
        c1: f64,
    },
    Fn {
        alpha: FnSpec,
        gplus: FnSpec,
        gminus: FnSpec,
        #[serde(default)]
        v0: f64,
        #[serde(default = "fn_range")]
        range: f64,
    },
}

fn fn_range() -> f64 {
    10.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FnSpec {
    Constant { value: f64 },
    AffineClamped { a: f64, b: f64, lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SeedSpec {
    Zero,
    One,
    #[default]
    Static,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    /// Picard iteration on the indicator instead of a single coupled solve.
    pub picard: bool,
    pub tol_chi: f64,
    pub max_iter: usize,
    pub frames: usize,
    pub damping: Option<f64>,
    pub seed: SeedSpec,
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec { picard: false, tol_chi: 1e-3, max_iter: 20, frames: 50, damping: None, seed: SeedSpec::Static }
    }
}

fn band() -> f64 {
    0.1
}

fn ball_radius() -> f64 {
    0.5
}

fn axes() -> usize {
    16
}

fn lambda_hat() -> f64 {
    4.0
}

fn pairs() -> usize {
    10
}

fn green_radii() -> Vec<f64> {
    vec![0.025, 0.05, 0.1]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckSpec {
    FiniteSpeed,
    LipschitzBound,
    GradientBand,
    BandEstimate {
        #[serde(default = "neg_band")]
        a: f64,
        #[serde(default = "band")]
        b: f64,
    },
    ConeCertificate {
        #[serde(default = "ball_radius")]
        ball_radius: f64,
        #[serde(default = "axes")]
        axes: usize,
    },
    PerimeterBound {
        #[serde(default = "ball_radius")]
        ball_radius: f64,
        #[serde(default = "lambda_hat")]
        lambda_hat: f64,
    },
    Classicality,
    MinimalTime,
    Comparison {
        #[serde(default = "pairs")]
        pairs: usize,
    },
    Sandwich,
    SeedIndependence,
    FnRegularity,
    GreenLipschitz {
        #[serde(default = "green_radii")]
        radii: Vec<f64>,
        lambda0: f64,
        #[serde(default = "ball_radius")]
        ball_radius: f64,
    },
}

fn neg_band() -> f64 {
    -0.1
}

impl CheckSpec {
    pub fn label(&self) -> &'static str {
        match self {
            CheckSpec::FiniteSpeed => "finite_speed",
            CheckSpec::LipschitzBound => "lipschitz_bound",
            CheckSpec::GradientBand => "gradient_band",
            CheckSpec::BandEstimate { .. } => "band_estimate",
            CheckSpec::ConeCertificate { .. } => "cone_certificate",
            CheckSpec::PerimeterBound { .. } => "perimeter_bound",
            CheckSpec::Classicality => "classicality",
            CheckSpec::MinimalTime => "minimal_time",
            CheckSpec::Comparison { .. } => "comparison",
            CheckSpec::Sandwich => "sandwich",
            CheckSpec::SeedIndependence => "seed_independence",
            CheckSpec::FnRegularity => "fn_regularity",
            CheckSpec::GreenLipschitz { .. } => "green_lipschitz",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    #[serde(default)]
    pub scenarios: Vec<PathBuf>,
}

pub fn load<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}
