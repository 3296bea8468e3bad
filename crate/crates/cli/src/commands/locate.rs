//! `locate`: find the (M+2)-order multicritical point and emit it as JSON,
//! optionally with the exact-rational bias for the M = 1 slice.

use serde_json::json;

use multicrit::phase::locate_multicritical;
use multicrit::series::exact;

use crate::config::{load, LocateConfig};
use crate::manifest::ManifestBuilder;
use crate::{Cli, CliError, CliResult};

pub fn run(cli: &Cli) -> CliResult<()> {
    let cfg: LocateConfig = load(cli.config.as_deref())?;
    let section = cfg.locate;
    let tol = cli.tol.unwrap_or(section.tolerance);
    let mut manifest = ManifestBuilder::new(cli, "locate")?;

    let cp = locate_multicritical(&section.n_fractions, section.initial_guess.as_deref())?;
    let max_resid = cp.residual_r.max(cp.residual_u.iter().fold(0.0f64, |a, &b| a.max(b)));
    if max_resid > tol {
        return Err(CliError::Numeric(format!(
            "residuals {max_resid:.3e} above requested tolerance {tol:.3e}"
        )));
    }

    let mut payload = json!({
        "n_fractions": section.n_fractions,
        "order": cp.order,
        "g_tilde": cp.g_tilde,
        "eps_tilde": cp.eps_tilde,
        "residual_r": cp.residual_r,
        "residual_u": cp.residual_u,
        "v": cp.v,
    });

    if section.exact_rational {
        if section.n_fractions.len() != 1 {
            return Err(CliError::Config("exact_rational mode applies to M = 1 only".into()));
        }
        let x = exact::m1_quartic_root().map_err(|e| CliError::Numeric(e.to_string()))?;
        let eps_exact = exact::perfect_sqrt(&x);
        payload["exact"] = json!({
            "eps_tilde_squared": x.to_string(),
            "eps_tilde": eps_exact.map(|r| r.to_string()),
            "g_tilde_closed_form": "(1 + eps^2)^(3/4)",
        });
    }

    let text = serde_json::to_string_pretty(&payload).map_err(|e| CliError::Io(e.to_string()))?;
    manifest.write_output("critical_point.json", &text)?;
    manifest.finish()?;
    println!(
        "located order-{} critical point: g_tilde = {:.10}, eps_tilde = {:?}",
        cp.order, cp.g_tilde, cp.eps_tilde
    );
    Ok(())
}
