//! TOML run configurations. Every command reads exactly one top-level
//! section named after it; unknown keys are rejected, and all referenced
//! model invariants are re-validated on load. Physical quantities carry
//! explicit unit suffixes (`_per_omega`, `_hz`, `_khz`, `omega_tau`).

use std::path::Path;

use serde::Deserialize;

use multicrit::ion::{HardwareBounds, OmegaConvention};
use multicrit::ModelParams;

use crate::{CliError, CliResult};

pub fn load<T: serde::de::DeserializeOwned>(path: Option<&Path>) -> CliResult<T> {
    let path = path.ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// A grid axis or fixed value.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum GridSpec {
    Fixed(f64),
    List(Vec<f64>),
    Range {
        min: f64,
        max: f64,
        count: usize,
        #[serde(default)]
        log: bool,
    },
}

impl GridSpec {
    pub fn values(&self) -> CliResult<Vec<f64>> {
        match self {
            GridSpec::Fixed(v) => Ok(vec![*v]),
            GridSpec::List(v) => {
                if v.is_empty() {
                    return Err(CliError::Config("empty grid list".into()));
                }
                Ok(v.clone())
            }
            GridSpec::Range { min, max, count, log } => {
                if *count == 0 {
                    return Err(CliError::Config("grid count must be >= 1".into()));
                }
                if *count == 1 {
                    return Ok(vec![*min]);
                }
                if !(max > min) {
                    return Err(CliError::Config("grid needs max > min".into()));
                }
                if *log && !(*min > 0.0) {
                    return Err(CliError::Config("log grid needs min > 0".into()));
                }
                let n = *count;
                Ok((0..n)
                    .map(|i| {
                        let t = i as f64 / (n - 1) as f64;
                        if *log {
                            (min.ln() + t * (max.ln() - min.ln())).exp()
                        } else {
                            min + t * (max - min)
                        }
                    })
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocateSection {
    pub n_fractions: Vec<f64>,
    pub initial_guess: Option<Vec<f64>>,
    #[serde(default)]
    pub exact_rational: bool,
    /// Residual tolerance on (|r|, |u_j|) at the solution.
    #[serde(default = "default_locate_tol")]
    pub tolerance: f64,
}

fn default_locate_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocateConfig {
    pub locate: LocateSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseDiagramConfig {
    pub phase_diagram: PhaseDiagramSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseDiagramSection {
    pub n_fractions: Vec<f64>,
    /// Map of parameter name (g_tilde, eps_tilde_k, h_tilde_k) to grid.
    pub grid: std::collections::BTreeMap<String, GridSpec>,
    #[serde(default = "default_true")]
    pub detect_boundaries: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub n_fractions: Vec<f64>,
    pub g_tilde: f64,
    pub eps_tilde: Vec<f64>,
    pub h_tilde: Option<Vec<f64>>,
}

impl ModelSection {
    pub fn params(&self) -> CliResult<ModelParams> {
        let mut p =
            ModelParams::new(self.n_fractions.clone(), self.g_tilde, self.eps_tilde.clone())?;
        if let Some(h) = &self.h_tilde {
            p = p.with_h(h.clone());
            p.validate()?;
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapScanConfig {
    pub gap_scan: GapScanSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapScanSection {
    #[serde(default = "default_one")]
    pub total_n: usize,
    pub eta: GridSpec,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_nmax_start")]
    pub n_max_start: usize,
    #[serde(default = "default_nmax_cap")]
    pub n_max_cap: usize,
    #[serde(default = "default_trunc_tol")]
    pub trunc_tol: f64,
    /// Points in the local-slope fit over the smallest η values.
    #[serde(default = "default_fit_points")]
    pub fit_points: usize,
    pub model: Option<ModelSection>,
    pub locate: Option<LocateSection>,
}

fn default_one() -> usize {
    1
}
fn default_k() -> usize {
    4
}
fn default_nmax_start() -> usize {
    16
}
fn default_nmax_cap() -> usize {
    1024
}
fn default_trunc_tol() -> f64 {
    1e-9
}
fn default_fit_points() -> usize {
    3
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentsConfig {
    pub exponents: ExponentsSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentsSection {
    pub n_fractions: Vec<f64>,
    pub initial_guess: Option<Vec<f64>>,
    /// Relative coupling offsets |δg|/g̃ for the r-direction fits.
    #[serde(default = "default_offsets")]
    pub coupling_offsets: GridSpec,
    /// Symmetry-breaking bias magnitudes for the w₁-direction fit.
    #[serde(default = "default_bias")]
    pub bias_values: GridSpec,
    #[serde(default = "default_window")]
    pub sliding_window: usize,
}

fn default_offsets() -> GridSpec {
    GridSpec::Range { min: 1e-8, max: 1e-4, count: 14, log: true }
}
fn default_bias() -> GridSpec {
    GridSpec::Range { min: 1e-10, max: 1e-6, count: 12, log: true }
}
fn default_window() -> usize {
    5
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuenchCollapseConfig {
    pub quench_collapse: QuenchCollapseSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuenchCollapseSection {
    #[serde(default = "default_one")]
    pub total_n: usize,
    pub eta: GridSpec,
    pub omega_tau: GridSpec,
    /// How the dimensionless quench window converts to evolution time:
    /// "ordinary" multiplies by 2π (millisecond-scale lab windows),
    /// "angular" uses it directly.
    #[serde(default = "default_convention")]
    pub omega_tau_convention: OmegaConvention,
    pub locate: LocateSection,
    pub noise: Option<NoiseSection>,
    #[serde(default = "default_integrator_tol")]
    pub integrator_tol: f64,
    #[serde(default = "default_reference_points")]
    pub reference_points: usize,
    /// Also report spreads with each collapse exponent perturbed ±0.15.
    #[serde(default)]
    pub perturbation_check: bool,
    #[serde(default)]
    pub collapse: CollapseSection,
}

fn default_convention() -> OmegaConvention {
    OmegaConvention::Angular
}
fn default_integrator_tol() -> f64 {
    1e-8
}
fn default_reference_points() -> usize {
    20
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub gamma_down_per_omega: f64,
    pub gamma_up_per_omega: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollapseSection {
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_extrapolation")]
    pub extrapolation_fraction: f64,
}

impl Default for CollapseSection {
    fn default() -> Self {
        Self { grid_points: default_grid_points(), extrapolation_fraction: default_extrapolation() }
    }
}

fn default_grid_points() -> usize {
    60
}
fn default_extrapolation() -> f64 {
    0.10
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IonConfig {
    pub ion: IonSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IonSection {
    pub mode: IonMode,
    pub from_model: Option<FromModelSection>,
    pub to_model: Option<ToModelSection>,
    pub bounds: Option<HardwareBounds>,
    /// Separate TOML file with a single [bounds] table; mutually exclusive
    /// with the inline [ion.bounds].
    pub bounds_file: Option<std::path::PathBuf>,
    pub quench_window: Option<QuenchWindowSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsFile {
    pub bounds: HardwareBounds,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum IonMode {
    FromModel,
    ToModel,
}

/// All `_hz` inputs are ordinary frequencies; internal values are angular.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FromModelSection {
    pub g_tilde: f64,
    pub eps_tilde: f64,
    pub omega_hz: f64,
    pub omega_ratio: f64,
    pub eta0: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToModelSection {
    pub delta_b_hz: f64,
    pub delta_r_hz: f64,
    pub omega0_hz: f64,
    pub omega_p_hz: f64,
    pub eta0: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuenchWindowSection {
    pub omega_tau_min: f64,
    pub omega_tau_max: f64,
    #[serde(default = "default_convention")]
    pub convention: OmegaConvention,
}
