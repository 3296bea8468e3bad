//! Bidirectional mapping between model parameters and trapped-ion lab
//! parameters, with feasibility checks against hardware ranges.
//!
//! The effective model (N = M = 1, two ions) comes from a pair of laser
//! beams detuned near the red and blue sidebands plus a bias laser:
//! ω = (δ_b − δ_r)/2, Ω = (δ_b + δ_r)/2, g = √2·η₀Ω₀, ε = Ω_p. All values
//! here are angular frequencies; the CLI layer converts from "2π×Hz"
//! inputs explicitly to keep the classic 2π bug out.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lamb-Dicke regime guard.
const ETA0_MAX: f64 = 0.2;

/// Lab-frame trap/laser parameters (angular frequencies).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IonParams {
    /// Blue-sideband detuning δ_b.
    pub delta_b: f64,
    /// Red-sideband detuning δ_r.
    pub delta_r: f64,
    /// Sideband Rabi strength Ω₀.
    pub omega0: f64,
    /// Lamb-Dicke parameter η₀.
    pub eta0: f64,
    /// Bias-laser Rabi strength Ω_p.
    pub omega_p: f64,
}

impl IonParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_b > self.delta_r) || self.delta_r < 0.0 {
            return Err(Error::InvalidParams(
                "need δ_b > δ_r ≥ 0 (so that ω > 0 and Ω > 0)".into(),
            ));
        }
        if !(self.eta0 > 0.0 && self.eta0 <= ETA0_MAX) {
            return Err(Error::InvalidParams(format!(
                "Lamb-Dicke parameter must lie in (0, {ETA0_MAX}]"
            )));
        }
        if self.omega0 < 0.0 || self.omega_p < 0.0 {
            return Err(Error::InvalidParams("Rabi strengths must be non-negative".into()));
        }
        Ok(())
    }
}

/// Model-frame frequencies (angular) plus the dimensionless parameters for
/// N = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelFrequencies {
    pub omega: f64,
    pub omega_qubit: f64,
    pub g: f64,
    pub eps: f64,
    pub g_tilde: f64,
    pub eps_tilde: f64,
    pub eta: f64,
}

/// ω = (δ_b − δ_r)/2, Ω = (δ_b + δ_r)/2, g = √2·η₀Ω₀, ε = Ω_p, plus
/// g̃ = 2g/√(ωΩ), ε̃ = ε/Ω, η = ω/(2Ω) (N = 1).
pub fn to_model(ion: &IonParams) -> Result<ModelFrequencies> {
    ion.validate()?;
    let omega = (ion.delta_b - ion.delta_r) / 2.0;
    let omega_qubit = (ion.delta_b + ion.delta_r) / 2.0;
    let g = 2f64.sqrt() * ion.eta0 * ion.omega0;
    let eps = ion.omega_p;
    Ok(ModelFrequencies {
        omega,
        omega_qubit,
        g,
        eps,
        g_tilde: 2.0 * g / (omega * omega_qubit).sqrt(),
        eps_tilde: eps / omega_qubit,
        eta: omega / (2.0 * omega_qubit),
    })
}

/// Invert the mapping for target dimensionless parameters at given trap
/// frequencies: Ω₀ = g̃√(ωΩ)/(2√2·η₀), Ω_p = ε̃·Ω, δ_b = Ω + ω, δ_r = Ω − ω.
pub fn from_model(
    g_tilde: f64,
    eps_tilde: f64,
    omega: f64,
    omega_qubit: f64,
    eta0: f64,
) -> Result<IonParams> {
    if !(omega > 0.0 && omega_qubit > 0.0) {
        return Err(Error::InvalidParams("frequencies must be positive".into()));
    }
    if g_tilde < 0.0 || eps_tilde < 0.0 {
        return Err(Error::InvalidParams("targets must be non-negative".into()));
    }
    if omega_qubit < omega {
        return Err(Error::InvalidParams("Ω < ω implies δ_r < 0".into()));
    }
    let ion = IonParams {
        delta_b: omega_qubit + omega,
        delta_r: omega_qubit - omega,
        omega0: g_tilde * (omega * omega_qubit).sqrt() / (2.0 * 2f64.sqrt() * eta0),
        eta0,
        omega_p: eps_tilde * omega_qubit,
    };
    ion.validate()?;
    Ok(ion)
}

/// Hardware bounds for the feasibility report. Defaults are the
/// achievable ranges of the reference two-ion setup (kHz values are Ω/2π).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HardwareBounds {
    pub omega0_khz: Range,
    pub omega_p_khz: Range,
    pub omega_ratio: Range,
    pub eta0_max: f64,
    /// Phonon coherence time budget (ms); quench must be much shorter.
    pub phonon_coherence_ms: f64,
    /// Quench must not exceed this fraction of the coherence budget.
    pub coherence_fraction: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Default for HardwareBounds {
    fn default() -> Self {
        // the kHz reference ranges are rounded to one decimal; carry the
        // ±0.05 rounding slack so the exact endpoint settings pass
        Self {
            omega0_khz: Range { min: 9.85, max: 27.95 },
            omega_p_khz: Range { min: 4.95, max: 40.05 },
            omega_ratio: Range { min: 50.0, max: 400.0 },
            eta0_max: ETA0_MAX,
            phonon_coherence_ms: 100.0,
            coherence_fraction: 0.25,
        }
    }
}

/// Convention for converting the dimensionless quench window ωτ to
/// milliseconds: "angular" treats ω as angular frequency (τ = ωτ/ω);
/// "ordinary" divides by ω/2π instead, matching how millisecond-scale lab
/// windows are usually specified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OmegaConvention {
    Angular,
    Ordinary,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuenchWindow {
    pub omega_tau_min: f64,
    pub omega_tau_max: f64,
    pub convention: OmegaConvention,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeasibilityCheck {
    pub name: String,
    pub value: f64,
    pub min: f64,
    pub max: f64,
    pub pass: bool,
    /// Distance to the nearest violated bound (negative when failing).
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub checks: Vec<FeasibilityCheck>,
    pub all_pass: bool,
    /// Quench duration in ms per the requested convention, when a window
    /// was supplied.
    pub quench_tau_ms: Option<(f64, f64)>,
}

fn check(name: &str, value: f64, min: f64, max: f64) -> FeasibilityCheck {
    let tol = 1e-9 * min.abs().max(max.abs()).max(1.0);
    let pass = value >= min - tol && value <= max + tol;
    let margin = (value - min).min(max - value);
    FeasibilityCheck { name: name.into(), value, min, max, pass, margin }
}

/// Pass/fail per parameter with margins, plus the quench-time budget check.
pub fn feasibility_report(
    ion: &IonParams,
    bounds: &HardwareBounds,
    quench: Option<&QuenchWindow>,
) -> Result<FeasibilityReport> {
    ion.validate()?;
    let model = to_model(ion)?;
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut checks = vec![
        check("omega0_khz", ion.omega0 / two_pi / 1e3, bounds.omega0_khz.min, bounds.omega0_khz.max),
        check(
            "omega_p_khz",
            ion.omega_p / two_pi / 1e3,
            bounds.omega_p_khz.min,
            bounds.omega_p_khz.max,
        ),
        check(
            "omega_ratio",
            model.omega_qubit / model.omega,
            bounds.omega_ratio.min,
            bounds.omega_ratio.max,
        ),
        check("eta0", ion.eta0, 0.0, bounds.eta0_max),
    ];
    let mut quench_tau_ms = None;
    if let Some(q) = quench {
        let divisor = match q.convention {
            OmegaConvention::Angular => model.omega,
            OmegaConvention::Ordinary => model.omega / two_pi,
        };
        let tau_min_ms = q.omega_tau_min / divisor * 1e3;
        let tau_max_ms = q.omega_tau_max / divisor * 1e3;
        quench_tau_ms = Some((tau_min_ms, tau_max_ms));
        let budget = bounds.coherence_fraction * bounds.phonon_coherence_ms;
        checks.push(check("quench_tau_ms", tau_max_ms, 0.0, budget));
    }
    let all_pass = checks.iter().all(|c| c.pass);
    Ok(FeasibilityReport { checks, all_pass, quench_tau_ms })
}
