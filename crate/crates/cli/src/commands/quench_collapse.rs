//! `quench-collapse`: sweep the linear coupling quench over (η, ωτ),
//! rescale to the collapse coordinates, measure the spread, compare
//! against the smallest-η noiseless reference curve, and optionally probe
//! exponent-perturbation discriminability.

use serde_json::json;

use multicrit::ion::OmegaConvention;
use multicrit::phase::locate_multicritical;
use multicrit::quench::{quench_sweep, NoiseRates};
use multicrit::scaling::{
    collapse, deviation_from_reference, predicted_exponents, CollapseExponents, CollapseOptions,
    CollapsePoint,
};
use multicrit::ModelParams;

use crate::config::{load, QuenchCollapseConfig};
use crate::manifest::ManifestBuilder;
use crate::output::{f, Csv};
use crate::{Cli, CliError, CliResult};

pub fn run(cli: &Cli) -> CliResult<()> {
    let cfg: QuenchCollapseConfig = load(cli.config.as_deref())?;
    let s = cfg.quench_collapse;
    let mut manifest = ManifestBuilder::new(cli, "quench-collapse")?;

    let etas = s.eta.values()?;
    if etas.len() < 2 {
        return Err(CliError::Config("need >= 2 eta values for a collapse".into()));
    }
    let omega_taus = s.omega_tau.values()?;
    if omega_taus.is_empty() {
        return Err(CliError::Config("empty omega_tau grid".into()));
    }
    // evolution time in 1/ω units; "ordinary" reads the window as ντ
    let time_factor = match s.omega_tau_convention {
        OmegaConvention::Angular => 1.0,
        OmegaConvention::Ordinary => 2.0 * std::f64::consts::PI,
    };
    let taus: Vec<f64> = omega_taus.iter().map(|wt| wt * time_factor).collect();

    let cp = locate_multicritical(&s.locate.n_fractions, s.locate.initial_guess.as_deref())?;
    let params = ModelParams::new(s.locate.n_fractions.clone(), cp.g_tilde, cp.eps_tilde.clone())?
        .with_total_n(s.total_n);
    let noise = s.noise.as_ref().map(|n| NoiseRates {
        gamma_down: n.gamma_down_per_omega,
        gamma_up: n.gamma_up_per_omega,
    });
    let tol = cli.tol.unwrap_or(s.integrator_tol);

    let m = s.locate.n_fractions.len();
    let table = predicted_exponents(m);
    let exps = table.collapse_exponents();

    // data sweep (noisy when configured)
    let results = quench_sweep(&params, &etas, &taus, noise, tol)?;
    let mut raw = Csv::new(&[
        "eta",
        "omega_tau",
        "tau",
        "jz_final",
        "jz_ground",
        "jz_residual",
        "photon_final",
        "n_max_used",
    ]);
    let mut traj = Csv::new(&["eta", "tau", "t", "jz", "photon_number", "conservation_dev"]);
    for r in &results {
        raw.row(&[
            f(r.eta),
            f(r.tau / time_factor),
            f(r.tau),
            f(r.jz_final),
            f(r.jz_ground),
            f(r.jz_residual),
            f(*r.photon.last().unwrap()),
            r.n_max_used.to_string(),
        ]);
        for i in 0..r.times.len() {
            traj.row(&[
                f(r.eta),
                f(r.tau),
                f(r.times[i]),
                f(r.jz[i]),
                f(r.photon[i]),
                f(r.conservation_dev[i]),
            ]);
        }
        manifest.push_point(json!({
            "eta": r.eta,
            "tau": r.tau,
            "n_max_used": r.n_max_used,
            "positivity_floor": r.positivity_floor,
        }));
    }
    manifest.write_output("quench_raw.csv", &raw.finish())?;
    manifest.write_output("trajectories.csv", &traj.finish())?;

    // reference scaling function: smallest-η noiseless run sampled over
    // the union of the rescaled-abscissa windows of all data curves
    let eta_ref = etas.iter().copied().fold(f64::INFINITY, f64::min);
    let (x_lo, x_hi) = rescaled_window(&etas, &taus, exps.argument);
    let n_ref = s.reference_points.max(4);
    let tau_ref: Vec<f64> = (0..n_ref)
        .map(|i| {
            let lx = x_lo.ln() + (x_hi.ln() - x_lo.ln()) * i as f64 / (n_ref - 1) as f64;
            lx.exp() / eta_ref.powf(exps.argument)
        })
        .collect();
    let reference_runs = quench_sweep(&params, &[eta_ref], &tau_ref, None, tol.min(1e-9))?;
    let reference: Vec<(f64, f64)> = reference_runs
        .iter()
        .map(|r| {
            (r.tau * eta_ref.powf(exps.argument), r.jz_residual * eta_ref.powf(-exps.prefactor))
        })
        .collect();
    let mut ref_csv = Csv::new(&["x", "s_jz"]);
    for (x, y) in &reference {
        ref_csv.row(&[f(*x), f(*y)]);
    }
    manifest.write_output("reference_curve.csv", &ref_csv.finish())?;

    // rescaled curves + spread
    let pts: Vec<CollapsePoint> = results
        .iter()
        .map(|r| CollapsePoint { eta: r.eta, tau: r.tau, value: r.jz_residual })
        .collect();
    let copts = CollapseOptions {
        grid_points: s.collapse.grid_points,
        extrapolation_fraction: s.collapse.extrapolation_fraction,
    };
    let c = collapse(&pts, exps, &copts)?;
    let mut rescaled = Csv::new(&["eta", "x", "y"]);
    for (eta, curve) in &c.curves {
        for (x, y) in curve {
            rescaled.row(&[f(*eta), f(*x), f(*y)]);
        }
    }
    manifest.write_output("quench_rescaled.csv", &rescaled.finish())?;

    let ref_dev = deviation_from_reference(&pts, &reference, exps, &copts)?;

    let mut payload = json!({
        "exponents": { "prefactor": exps.prefactor, "argument": exps.argument },
        "omega_tau_convention": match s.omega_tau_convention {
            OmegaConvention::Angular => "angular",
            OmegaConvention::Ordinary => "ordinary",
        },
        "spread": c.spread,
        "cells_compared": c.cells_compared,
        "reference_eta": eta_ref,
        "max_deviation_from_reference": ref_dev,
        "noise": s.noise.as_ref().map(|n| json!({
            "gamma_down_per_omega": n.gamma_down_per_omega,
            "gamma_up_per_omega": n.gamma_up_per_omega,
        })),
    });

    if s.perturbation_check {
        let mut perturbed = Vec::new();
        for (dp, da) in [(0.15, 0.0), (-0.15, 0.0), (0.0, 0.15), (0.0, -0.15)] {
            let e = CollapseExponents {
                prefactor: exps.prefactor + dp,
                argument: exps.argument + da,
            };
            let entry = match collapse(&pts, e, &copts) {
                Ok(cc) => json!({
                    "d_prefactor": dp,
                    "d_argument": da,
                    "spread": cc.spread,
                    "ratio": cc.spread / c.spread,
                }),
                Err(err) => json!({
                    "d_prefactor": dp,
                    "d_argument": da,
                    "error": err.to_string(),
                }),
            };
            perturbed.push(entry);
        }
        payload["perturbations"] = json!(perturbed);
    }

    manifest.write_output(
        "collapse.json",
        &serde_json::to_string_pretty(&payload).map_err(|e| CliError::Io(e.to_string()))?,
    )?;
    manifest.finish()?;
    println!(
        "collapse over {} points: spread = {:.4}, reference deviation = {:.4}",
        results.len(),
        c.spread,
        ref_dev
    );
    Ok(())
}

fn rescaled_window(etas: &[f64], taus: &[f64], argument: f64) -> (f64, f64) {
    let tau_min = taus.iter().copied().fold(f64::INFINITY, f64::min);
    let tau_max = taus.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &eta in etas {
        lo = lo.min(tau_min * eta.powf(argument));
        hi = hi.max(tau_max * eta.powf(argument));
    }
    (lo, hi)
}
