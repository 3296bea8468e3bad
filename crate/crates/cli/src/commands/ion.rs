//! `ion`: map between model and trapped-ion lab parameters and run the
//! hardware feasibility report. All `_hz` config inputs are ordinary
//! frequencies; the report echoes both ordinary (kHz) and angular values.

use serde_json::json;

use multicrit::ion::{
    feasibility_report, from_model, to_model, IonParams, QuenchWindow,
};

use crate::config::{load, IonConfig, IonMode};
use crate::manifest::ManifestBuilder;
use crate::{Cli, CliError, CliResult};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

pub fn run(cli: &Cli) -> CliResult<()> {
    let cfg: IonConfig = load(cli.config.as_deref())?;
    let s = cfg.ion;
    let mut manifest = ManifestBuilder::new(cli, "ion")?;

    let ion: IonParams = match (s.mode, &s.from_model, &s.to_model) {
        (IonMode::FromModel, Some(fm), None) => {
            let omega = TWO_PI * fm.omega_hz;
            from_model(fm.g_tilde, fm.eps_tilde, omega, fm.omega_ratio * omega, fm.eta0)?
        }
        (IonMode::ToModel, None, Some(tm)) => IonParams {
            delta_b: TWO_PI * tm.delta_b_hz,
            delta_r: TWO_PI * tm.delta_r_hz,
            omega0: TWO_PI * tm.omega0_hz,
            eta0: tm.eta0,
            omega_p: TWO_PI * tm.omega_p_hz,
        },
        _ => {
            return Err(CliError::Config(
                "ion mode must match exactly one input section ([ion.from_model] or [ion.to_model])"
                    .into(),
            ))
        }
    };

    let model = to_model(&ion)?;
    let bounds = match (&s.bounds, &s.bounds_file) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config(
                "give either [ion.bounds] or bounds_file, not both".into(),
            ))
        }
        (Some(b), None) => b.clone(),
        (None, Some(path)) => {
            crate::config::load::<crate::config::BoundsFile>(Some(path))?.bounds
        }
        (None, None) => Default::default(),
    };
    let window = s.quench_window.as_ref().map(|w| QuenchWindow {
        omega_tau_min: w.omega_tau_min,
        omega_tau_max: w.omega_tau_max,
        convention: w.convention,
    });
    let report = feasibility_report(&ion, &bounds, window.as_ref())?;

    let payload = json!({
        "ion_params": {
            "delta_b_hz": ion.delta_b / TWO_PI,
            "delta_r_hz": ion.delta_r / TWO_PI,
            "omega0_khz": ion.omega0 / TWO_PI / 1e3,
            "omega_p_khz": ion.omega_p / TWO_PI / 1e3,
            "eta0": ion.eta0,
        },
        "model": {
            "omega_hz": model.omega / TWO_PI,
            "omega_qubit_hz": model.omega_qubit / TWO_PI,
            "omega_ratio": model.omega_qubit / model.omega,
            "g_tilde": model.g_tilde,
            "eps_tilde": model.eps_tilde,
            "eta": model.eta,
        },
        "feasibility": report,
    });
    manifest.write_output(
        "ion_report.json",
        &serde_json::to_string_pretty(&payload).map_err(|e| CliError::Io(e.to_string()))?,
    )?;
    manifest.finish()?;
    println!(
        "ion mapping: Omega0/2pi = {:.4} kHz, Omega_p/2pi = {:.4} kHz, all_pass = {}",
        ion.omega0 / TWO_PI / 1e3,
        ion.omega_p / TWO_PI / 1e3,
        report.all_pass
    );
    Ok(())
}
