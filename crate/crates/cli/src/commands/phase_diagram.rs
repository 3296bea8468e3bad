//! `phase-diagram`: minimize the functional over a 1- or 2-axis grid and
//! emit one row per grid point, plus detected first-order boundary points
//! along the primary axis.

use rayon::prelude::*;
use serde_json::json;

use multicrit::error::Result as CoreResult;
use multicrit::phase::{minimize, trace_first_order};
use multicrit::ModelParams;

use crate::config::{load, GridSpec, PhaseDiagramConfig};
use crate::manifest::ManifestBuilder;
use crate::output::{f, join_semicolon, Csv};
use crate::{Cli, CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Param {
    G,
    Eps(usize),
    H(usize),
}

fn parse_param(name: &str, subsets: usize) -> CliResult<Param> {
    if name == "g_tilde" {
        return Ok(Param::G);
    }
    for (prefix, ctor) in
        [("eps_tilde_", Param::Eps as fn(usize) -> Param), ("h_tilde_", Param::H)]
    {
        if let Some(idx) = name.strip_prefix(prefix) {
            let k: usize = idx
                .parse()
                .map_err(|_| CliError::Config(format!("bad parameter name '{name}'")))?;
            if k == 0 || k > subsets {
                return Err(CliError::Config(format!(
                    "parameter '{name}' out of range for M = {subsets}"
                )));
            }
            return Ok(ctor(k - 1));
        }
    }
    Err(CliError::Config(format!(
        "unknown grid parameter '{name}' (use g_tilde, eps_tilde_k, h_tilde_k)"
    )))
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let cfg: PhaseDiagramConfig = load(cli.config.as_deref())?;
    let section = cfg.phase_diagram;
    let subsets = section.n_fractions.len();
    let mut manifest = ManifestBuilder::new(cli, "phase-diagram")?;

    // split grid entries into axes (multi-valued) and fixed values
    let mut axes: Vec<(Param, Vec<f64>)> = Vec::new();
    let mut fixed: Vec<(Param, f64)> = Vec::new();
    for (name, spec) in &section.grid {
        let param = parse_param(name, subsets)?;
        let values = spec.values()?;
        if matches!(spec, GridSpec::List(_) | GridSpec::Range { .. }) && values.len() > 1 {
            axes.push((param, values));
        } else {
            fixed.push((param, values[0]));
        }
    }
    if axes.is_empty() || axes.len() > 2 {
        return Err(CliError::Config(format!(
            "phase-diagram needs 1 or 2 grid axes, got {}",
            axes.len()
        )));
    }
    // every bias must be pinned somewhere; g̃ too
    let mut covered: Vec<Param> = axes.iter().map(|(p, _)| *p).collect();
    covered.extend(fixed.iter().map(|(p, _)| *p));
    if !covered.contains(&Param::G) {
        return Err(CliError::Config("g_tilde must appear in the grid".into()));
    }
    for k in 0..subsets {
        if !covered.contains(&Param::Eps(k)) {
            return Err(CliError::Config(format!("eps_tilde_{} must appear in the grid", k + 1)));
        }
    }

    let assemble = |assignments: &[(Param, f64)]| -> CoreResult<ModelParams> {
        let mut g = 0.0;
        let mut eps = vec![0.0; subsets];
        let mut h = vec![0.0; subsets];
        for &(p, v) in fixed.iter().chain(assignments.iter()) {
            match p {
                Param::G => g = v,
                Param::Eps(k) => eps[k] = v,
                Param::H(k) => h[k] = v,
            }
        }
        Ok(ModelParams::new(section.n_fractions.clone(), g, eps)?.with_h(h))
    };

    // cartesian grid, primary axis fastest
    let primary = &axes[0];
    let secondary_values: Vec<Option<f64>> = match axes.get(1) {
        Some((_, vs)) => vs.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let mut tasks: Vec<Vec<(Param, f64)>> = Vec::new();
    for &sv in &secondary_values {
        for &pv in &primary.1 {
            let mut a = vec![(primary.0, pv)];
            if let (Some(v), Some((p2, _))) = (sv, axes.get(1)) {
                a.push((*p2, v));
            }
            tasks.push(a);
        }
    }

    let rows: Vec<(ModelParams, multicrit::phase::PhasePoint)> = tasks
        .par_iter()
        .map(|a| {
            let params = assemble(a)?;
            let point = minimize(&params)?;
            Ok((params, point))
        })
        .collect::<CoreResult<_>>()?;

    let mut csv = Csv::new(&grid_columns(subsets));
    for (params, point) in &rows {
        csv.row(&row_fields(params, &point.minimizers, &point.phase.to_string(), point.energy));
    }
    manifest.write_output("phase_diagram.csv", &csv.finish())?;

    // first-order boundary detection along the primary axis
    let mut boundary_csv = Csv::new(&grid_columns(subsets));
    let mut n_boundaries = 0usize;
    if section.detect_boundaries {
        let scans: Vec<CoreResult<Vec<multicrit::phase::CoexistencePoint>>> = secondary_values
            .par_iter()
            .map(|&sv| {
                let axis_param = primary.0;
                let base: Vec<(Param, f64)> = match (sv, axes.get(1)) {
                    (Some(v), Some((p2, _))) => vec![(*p2, v)],
                    _ => Vec::new(),
                };
                let path = |t: f64| -> CoreResult<ModelParams> {
                    let mut a = base.clone();
                    a.push((axis_param, t));
                    assemble(&a)
                };
                trace_first_order(&path, &primary.1)
            })
            .collect();
        for scan in scans {
            for pt in scan? {
                let energy = multicrit::landau::energy_functional_ns(pt.minimizers[0], &pt.params)?;
                boundary_csv.row(&row_fields(
                    &pt.params,
                    &pt.minimizers,
                    &pt.kind.to_string(),
                    energy,
                ));
                n_boundaries += 1;
            }
        }
    }
    manifest.write_output("boundaries.csv", &boundary_csv.finish())?;
    manifest.push_point(json!({ "grid_points": rows.len(), "boundary_points": n_boundaries }));
    manifest.finish()?;
    println!("phase diagram: {} grid rows, {} boundary points", rows.len(), n_boundaries);
    Ok(())
}

fn grid_columns(subsets: usize) -> Vec<&'static str> {
    let mut cols = vec!["g_tilde"];
    // leak tiny strings once per process: column sets are fixed per run
    for k in 0..subsets {
        cols.push(Box::leak(format!("eps_tilde_{}", k + 1).into_boxed_str()));
    }
    for k in 0..subsets {
        cols.push(Box::leak(format!("h_tilde_{}", k + 1).into_boxed_str()));
    }
    cols.extend_from_slice(&["phase", "minimizers", "energy"]);
    cols
}

fn row_fields(params: &ModelParams, minimizers: &[f64], label: &str, energy: f64) -> Vec<String> {
    let mut fields = vec![f(params.g_tilde)];
    fields.extend(params.eps_tilde.iter().map(|&v| f(v)));
    fields.extend(params.h_tilde.iter().map(|&v| f(v)));
    fields.push(label.to_string());
    fields.push(join_semicolon(minimizers));
    fields.push(f(energy));
    fields
}
