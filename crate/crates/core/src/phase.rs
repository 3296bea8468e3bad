//! Mean-field phase analysis: global minimization of the energy
//! functional, phase classification, multicritical-point location, and
//! first-/second-order boundary tracing.
//!
//! Global minimization is dense bracketing over |z| ≤ z_cap followed by a
//! safeguarded Newton polish; E is one-dimensional and smooth, and
//! exhaustiveness matters near coexistence, so no general-purpose
//! optimizer is used. Multicritical points are Newton roots of the raw
//! Taylor coefficients (c₂, c₄, …, c_{2M+2}) — the same zero locus as
//! (r, u₁…u_M) wherever v ≠ 0, but smooth across v sign changes — with a
//! coarse grid scan supplying the initial guess.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::landau::{landau_coefficients, MeanField};
use crate::model::ModelParams;
use crate::series::taylor_expand;

const ENERGY_DEGENERACY_TOL: f64 = 1e-11;
const Z_GROUP_TOL: f64 = 1e-8;

/// Phase label of a mean-field ground state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Phase {
    /// Single minimizer at z = 0.
    Normal,
    /// One symmetry orbit with z ≠ 0 (± pair at h̃ = 0, single minimum else).
    SuperradiantPair,
    /// Two degenerate ± pairs (the quadruple-line situation).
    SuperradiantTwoPairs,
    /// k energy-degenerate minima not covered above (triple points, first-order
    /// coexistence between distinct branches).
    Coexistence(usize),
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Phase::Normal => write!(f, "NP"),
            Phase::SuperradiantPair => write!(f, "SP_pair"),
            Phase::SuperradiantTwoPairs => write!(f, "SP_two_pairs"),
            Phase::Coexistence(k) => write!(f, "coexistence-{k}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PhasePoint {
    pub params: ModelParams,
    /// All global minimizers (energy-degenerate within 1e-11), ascending in z.
    pub minimizers: Vec<f64>,
    pub phase: Phase,
    pub energy: f64,
}

/// A local minimum of E_ns.
#[derive(Debug, Clone, Copy)]
pub struct LocalMinimum {
    pub z: f64,
    pub energy: f64,
    pub curvature: f64,
}

/// All local minima of E_ns by dense bracketing plus Newton polish.
pub fn local_minima(params: &ModelParams) -> Result<Vec<LocalMinimum>> {
    let mf = MeanField::new(params)?;
    let eps_max = params.eps_tilde.iter().fold(0.0f64, |m, &e| m.max(e.abs()));
    let mut z_cap = eps_max + 2.0 * params.g_tilde * params.g_tilde + 2.0;
    for _ in 0..4 {
        let minima = scan_minima(&mf, z_cap)?;
        let step = 1e-3 * z_cap;
        let edge = minima.iter().any(|m| m.z.abs() > z_cap - 2.0 * step);
        if !edge {
            return Ok(minima);
        }
        z_cap *= 2.0;
    }
    Err(Error::Numerical("minimizer kept hitting the bracket edge".into()))
}

fn scan_minima(mf: &MeanField, z_cap: f64) -> Result<Vec<LocalMinimum>> {
    let step = 1e-3 * z_cap;
    let n = (2.0 * z_cap / step).round() as usize;
    let grid: Vec<f64> = (0..=n).map(|i| -z_cap + i as f64 * step).collect();
    let d1: Vec<f64> = grid.iter().map(|&z| mf.d1(z)).collect();
    let mut found: Vec<LocalMinimum> = Vec::new();
    for i in 0..n {
        // bracket on a − → + sign change of E′ (minimum inside)
        if d1[i] < 0.0 && d1[i + 1] >= 0.0 {
            let z = polish_root(mf, grid[i], grid[i + 1])?;
            let curvature = mf.d2(z);
            if curvature >= -1e-10 {
                push_minimum(&mut found, LocalMinimum { z, energy: mf.energy(z), curvature });
            }
        }
    }
    found.sort_by(|a, b| a.z.total_cmp(&b.z));
    Ok(found)
}

fn push_minimum(list: &mut Vec<LocalMinimum>, m: LocalMinimum) {
    for existing in list.iter_mut() {
        if (existing.z - m.z).abs() < Z_GROUP_TOL {
            if m.energy < existing.energy {
                *existing = m;
            }
            return;
        }
    }
    list.push(m);
}

/// Safeguarded Newton on E′(z) = 0 within a sign-change bracket.
fn polish_root(mf: &MeanField, mut lo: f64, mut hi: f64) -> Result<f64> {
    let mut flo = mf.d1(lo);
    let mut z = 0.5 * (lo + hi);
    for _ in 0..100 {
        let f = mf.d1(z);
        if f == 0.0 {
            return Ok(z);
        }
        if (flo < 0.0) == (f < 0.0) {
            lo = z;
            flo = f;
        } else {
            hi = z;
        }
        let d = mf.d2(z);
        let newton = if d != 0.0 { z - f / d } else { f64::NAN };
        z = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < 1e-15 * (1.0 + z.abs()) {
            return Ok(z);
        }
    }
    Ok(z)
}

/// Global minimization of E_ns with degenerate-minima grouping and phase
/// classification.
pub fn minimize(params: &ModelParams) -> Result<PhasePoint> {
    let all = local_minima(params)?;
    if all.is_empty() {
        return Err(Error::Numerical("no local minima found".into()));
    }
    let e_min = all.iter().map(|m| m.energy).fold(f64::INFINITY, f64::min);
    let global: Vec<f64> = all
        .iter()
        .filter(|m| m.energy - e_min < ENERGY_DEGENERACY_TOL)
        .map(|m| m.z)
        .collect();
    let phase = classify(&global);
    Ok(PhasePoint { params: params.clone(), minimizers: global, phase, energy: e_min })
}

fn classify(minimizers: &[f64]) -> Phase {
    let nonzero: Vec<f64> = minimizers.iter().copied().filter(|z| z.abs() > Z_GROUP_TOL).collect();
    let has_zero = nonzero.len() < minimizers.len();
    match (minimizers.len(), nonzero.len(), has_zero) {
        (1, 0, _) => Phase::Normal,
        (1, 1, _) => Phase::SuperradiantPair,
        (2, 2, false) if is_symmetric_pair(&nonzero) => Phase::SuperradiantPair,
        (4, 4, false) if is_two_symmetric_pairs(&nonzero) => Phase::SuperradiantTwoPairs,
        (k, _, _) => Phase::Coexistence(k),
    }
}

fn is_symmetric_pair(z: &[f64]) -> bool {
    z.len() == 2 && (z[0] + z[1]).abs() < 10.0 * Z_GROUP_TOL
}

fn is_two_symmetric_pairs(z: &[f64]) -> bool {
    // sorted ascending: (−z2, −z1, z1, z2)
    z.len() == 4
        && (z[0] + z[3]).abs() < 10.0 * Z_GROUP_TOL
        && (z[1] + z[2]).abs() < 10.0 * Z_GROUP_TOL
}

/// A located multicritical point.
#[derive(Debug, Clone)]
pub struct CriticalPoint {
    pub g_tilde: f64,
    pub eps_tilde: Vec<f64>,
    /// M + 2 for a full multicritical point.
    pub order: usize,
    pub residual_r: f64,
    pub residual_u: Vec<f64>,
    pub v: f64,
}

impl CriticalPoint {
    pub fn params(&self, n_fractions: &[f64]) -> Result<ModelParams> {
        ModelParams::new(n_fractions.to_vec(), self.g_tilde, self.eps_tilde.clone())
    }
}

/// Residual vector (c₂, c₄, …, c_{2M+2}) of the symmetric expansion.
fn coefficient_residuals(n_fractions: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let m = n_fractions.len();
    let params = ModelParams::new(
        n_fractions.to_vec(),
        x[0].abs().max(1e-6),
        x[1..].iter().map(|e| e.abs()).collect(),
    )?;
    let s = taylor_expand(&params, 2 * m + 4)?;
    Ok((0..=m).map(|j| s.coeff(2 * j + 2)).collect())
}

/// Locate the (M+2)-order critical point where r and u_1..u_M vanish
/// simultaneously, by damped Newton with a finite-difference Jacobian on
/// the raw coefficients. Biases are canonicalized non-negative, and within
/// groups of equal n_j sorted descending.
pub fn locate_multicritical(
    n_fractions: &[f64],
    initial_guess: Option<&[f64]>,
) -> Result<CriticalPoint> {
    let m = n_fractions.len();
    let mut x: Vec<f64> = match initial_guess {
        Some(g) => {
            if g.len() != m + 1 {
                return Err(Error::InvalidParams(format!(
                    "initial guess needs M+1 = {} entries",
                    m + 1
                )));
            }
            g.to_vec()
        }
        None => {
            let mut guess = coarse_scan(n_fractions)?;
            break_bias_ties(&mut guess[1..], n_fractions);
            guess
        }
    };

    let mut f = DVector::from_vec(coefficient_residuals(n_fractions, &x)?);
    let mut fnorm = f.norm();
    let mut converged = false;
    for _ in 0..100 {
        if fnorm < 1e-13 {
            converged = true;
            break;
        }
        // central finite-difference Jacobian
        let mut jac = DMatrix::<f64>::zeros(m + 1, m + 1);
        for col in 0..=m {
            let h = 1e-6 * x[col].abs().max(1e-3);
            let mut xp = x.clone();
            xp[col] += h;
            let mut xm = x.clone();
            xm[col] -= h;
            let fp = coefficient_residuals(n_fractions, &xp)?;
            let fm = coefficient_residuals(n_fractions, &xm)?;
            for row in 0..=m {
                jac[(row, col)] = (fp[row] - fm[row]) / (2.0 * h);
            }
        }
        let step = jac
            .lu()
            .solve(&f)
            .ok_or_else(|| Error::NonConvergence("singular Jacobian in Newton".into()))?;
        // damped update
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let xt: Vec<f64> = x.iter().zip(step.iter()).map(|(xi, si)| xi - lambda * si).collect();
            if let Ok(ft) = coefficient_residuals(n_fractions, &xt) {
                let ftv = DVector::from_vec(ft);
                if ftv.norm() < fnorm || fnorm < 1e-12 {
                    x = xt;
                    f = ftv;
                    fnorm = f.norm();
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Error::NonConvergence(format!(
                "Newton stalled at residual {fnorm:.3e}"
            )));
        }
    }
    if !converged && fnorm >= 1e-13 {
        return Err(Error::NonConvergence(format!(
            "multicritical search did not converge (residual {fnorm:.3e})"
        )));
    }

    // canonicalize
    let g_tilde = x[0].abs();
    let mut eps: Vec<f64> = x[1..].iter().map(|e| e.abs()).collect();
    canonical_sort(&mut eps, n_fractions);

    let params = ModelParams::new(n_fractions.to_vec(), g_tilde, eps.clone())?;
    let lc = landau_coefficients(&params)?; // errors if v ≤ 0
    let max_resid = lc.r.abs().max(lc.u.iter().fold(0.0f64, |a, &u| a.max(u.abs())));
    if max_resid > 1e-10 {
        return Err(Error::NonConvergence(format!(
            "normal-form residuals too large: {max_resid:.3e}"
        )));
    }
    Ok(CriticalPoint {
        g_tilde,
        eps_tilde: eps,
        order: m + 2,
        residual_r: lc.r.abs(),
        residual_u: lc.u.iter().map(|u| u.abs()).collect(),
        v: lc.v,
    })
}

/// Interchangeable subsets (equal n_j) make the Jacobian of the
/// coefficient system singular at ε̃-symmetric points; spread near-equal
/// biases within each equal-n group before starting Newton.
fn break_bias_ties(eps: &mut [f64], n_fractions: &[f64]) {
    let m = eps.len();
    let mut i = 0;
    while i < m {
        let mut j = i + 1;
        while j < m && (n_fractions[j] - n_fractions[i]).abs() < 1e-12 {
            j += 1;
        }
        let group = j - i;
        if group > 1 {
            for (rank, e) in eps[i..j].iter_mut().enumerate() {
                let spread = 1.0 + 0.6 * (group - 1 - rank) as f64 / group as f64 - 0.3;
                *e = (*e * spread).max(0.02 * (rank + 1) as f64);
            }
            eps[i..j].sort_by(|a, b| b.total_cmp(a));
        }
        i = j;
    }
}

/// Within groups of equal number fraction the subsets are interchangeable;
/// sort those biases descending so results are deterministic.
fn canonical_sort(eps: &mut [f64], n_fractions: &[f64]) {
    let m = eps.len();
    let mut i = 0;
    while i < m {
        let mut j = i + 1;
        while j < m && (n_fractions[j] - n_fractions[i]).abs() < 1e-12 {
            j += 1;
        }
        eps[i..j].sort_by(|a, b| b.total_cmp(a));
        i = j;
    }
}

/// Coarse grid scan minimizing Σr² + Σu_j² over g̃ ∈ [1,2] (step 0.05) and
/// ε̃_j ∈ [0, 1.2] (step 0.05); points with v ≤ 0 are skipped.
fn coarse_scan(n_fractions: &[f64]) -> Result<Vec<f64>> {
    let m = n_fractions.len();
    let g_grid: Vec<f64> = (0..=20).map(|i| 1.0 + 0.05 * i as f64).collect();
    let e_grid: Vec<f64> = (0..=24).map(|i| 0.05 * i as f64).collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut idx = vec![0usize; m];
    loop {
        let eps: Vec<f64> = idx.iter().map(|&i| e_grid[i]).collect();
        // equal-n subsets are interchangeable: keep descending order only
        let mut ordered = true;
        for k in 1..m {
            if (n_fractions[k] - n_fractions[k - 1]).abs() < 1e-12 && eps[k] > eps[k - 1] {
                ordered = false;
                break;
            }
        }
        if ordered {
            for &g in &g_grid {
                let mut x = vec![g];
                x.extend_from_slice(&eps);
                let params = ModelParams::new(n_fractions.to_vec(), g, eps.clone())?;
                if let Ok(s) = taylor_expand(&params, 2 * m + 4) {
                    let v = (2 * m + 4) as f64 * s.coeff(2 * m + 4);
                    if v > 0.0 {
                        let r = 2.0 * s.coeff(2) / v;
                        let mut obj = r * r;
                        for j in 1..=m {
                            let u = (2 * j + 2) as f64 * s.coeff(2 * j + 2) / v;
                            obj += u * u;
                        }
                        if best.as_ref().map(|(b, _)| obj < *b).unwrap_or(true) {
                            best = Some((obj, x));
                        }
                    }
                }
            }
        }
        // advance multi-index
        let mut k = 0;
        loop {
            if k == m {
                let (_, x) = best.ok_or_else(|| {
                    Error::NonConvergence("coarse scan found no valid starting point".into())
                })?;
                return Ok(x);
            }
            idx[k] += 1;
            if idx[k] < e_grid.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// One point of the r = 0 surface.
#[derive(Debug, Clone)]
pub struct SurfacePoint {
    pub eps_tilde: Vec<f64>,
    pub g_r: f64,
}

/// Solve r(g̃) = 0 for each bias vector by bisection on the quadratic
/// Taylor coefficient (monotone decreasing in g̃).
pub fn second_order_surface(
    n_fractions: &[f64],
    eps_grid: &[Vec<f64>],
) -> Result<Vec<SurfacePoint>> {
    let m = n_fractions.len();
    let mut out = Vec::with_capacity(eps_grid.len());
    for eps in eps_grid {
        if eps.len() != m {
            return Err(Error::InvalidParams("bias vector length != M".into()));
        }
        let c2 = |g: f64| -> Result<f64> {
            let params = ModelParams::new(n_fractions.to_vec(), g, eps.clone())?;
            Ok(taylor_expand(&params, 2 * m + 4)?.coeff(2))
        };
        let (mut lo, mut hi) = (1e-3, 50.0);
        let (flo, fhi) = (c2(lo)?, c2(hi)?);
        if flo.signum() == fhi.signum() {
            return Err(Error::Numerical("no sign change of r in the coupling bracket".into()));
        }
        for _ in 0..90 {
            let mid = 0.5 * (lo + hi);
            let fm = c2(mid)?;
            if fm.signum() == flo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 * hi {
                break;
            }
        }
        out.push(SurfacePoint { eps_tilde: eps.clone(), g_r: 0.5 * (lo + hi) });
    }
    Ok(out)
}

/// Kind of coexistence manifold a detected degeneracy belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoexistenceKind {
    /// ± pair with z ≠ 0 (h̃ = 0 plane): S_0.
    SymmetricPair,
    /// Three minima including 0: triple line L_τ.
    Triple,
    /// Four minima, two ± pairs: quadruple line L_χ.
    Quadruple,
    /// Two degenerate minima with broken symmetry: S_±.
    BiasedPair,
    Other(usize),
}

impl std::fmt::Display for CoexistenceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CoexistenceKind::SymmetricPair => write!(f, "S_0"),
            CoexistenceKind::Triple => write!(f, "L_tau"),
            CoexistenceKind::Quadruple => write!(f, "L_chi"),
            CoexistenceKind::BiasedPair => write!(f, "S_pm"),
            CoexistenceKind::Other(k) => write!(f, "coexistence-{k}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CoexistencePoint {
    /// Path parameter at the degeneracy.
    pub t: f64,
    pub params: ModelParams,
    pub minimizers: Vec<f64>,
    pub kind: CoexistenceKind,
}

/// Trace a 1-parameter path and report every point where at least two
/// distinct minimizer branches become energy-degenerate (first-order
/// coexistence), by bisection on the energy difference of the two
/// lowest-energy branches tracked across the path.
pub fn trace_first_order(
    path: &dyn Fn(f64) -> Result<ModelParams>,
    t_grid: &[f64],
) -> Result<Vec<CoexistencePoint>> {
    if t_grid.len() < 2 {
        return Err(Error::InsufficientData("need at least two path samples".into()));
    }
    let mut out = Vec::new();
    let mut prev = branch_gap(path, t_grid[0])?;
    for window in t_grid.windows(2) {
        let (t0, t1) = (window[0], window[1]);
        let cur = branch_gap(path, t1)?;
        if let (Some(d0), Some(d1)) = (prev, cur) {
            if d0.signum() != d1.signum() && d0 != 0.0 {
                let t_star = bisect_degeneracy(path, t0, t1, d0)?;
                let params = path(t_star)?;
                let point = minimize_with_near_degenerate(&params)?;
                let kind = classify_coexistence(&point);
                out.push(CoexistencePoint {
                    t: t_star,
                    params,
                    minimizers: point,
                    kind,
                });
            }
        }
        prev = cur;
    }
    Ok(out)
}

/// Energy difference E(branch with larger |z| cluster) − E(other) between
/// the two lowest-energy symmetry-distinct branches, or None when only one
/// branch exists.
fn branch_gap(path: &dyn Fn(f64) -> Result<ModelParams>, t: f64) -> Result<Option<f64>> {
    let params = path(t)?;
    let minima = local_minima(&params)?;
    let orbits = group_orbits(&minima, &params);
    if orbits.len() < 2 {
        return Ok(None);
    }
    let mut by_energy = orbits.clone();
    by_energy.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (a, b) = (&by_energy[0], &by_energy[1]);
    // orient by |z| so the sign of the difference is stable along the path
    if a.0.abs() > b.0.abs() {
        Ok(Some(a.1 - b.1))
    } else {
        Ok(Some(b.1 - a.1))
    }
}

/// Collapse local minima into symmetry orbits keyed by |z| (h̃ = 0) or z
/// (h̃ ≠ 0); returns (representative z, energy) per orbit.
fn group_orbits(minima: &[LocalMinimum], params: &ModelParams) -> Vec<(f64, f64)> {
    let symmetric = params.h_tilde.iter().all(|&h| h == 0.0);
    let mut orbits: Vec<(f64, f64)> = Vec::new();
    for m in minima {
        let key = if symmetric { m.z.abs() } else { m.z };
        let mut matched = false;
        for o in orbits.iter_mut() {
            if (o.0 - key).abs() < 100.0 * Z_GROUP_TOL {
                if m.energy < o.1 {
                    o.1 = m.energy;
                }
                matched = true;
                break;
            }
        }
        if !matched {
            orbits.push((key, m.energy));
        }
    }
    orbits
}

fn bisect_degeneracy(
    path: &dyn Fn(f64) -> Result<ModelParams>,
    mut lo: f64,
    mut hi: f64,
    d_lo: f64,
) -> Result<f64> {
    let mut sign_lo = d_lo.signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let d = branch_gap(path, mid)?.ok_or_else(|| {
            Error::Numerical(format!(
                "minimizer tracking lost a branch during first-order bisection at t = {mid}"
            ))
        })?;
        if d.abs() < ENERGY_DEGENERACY_TOL {
            return Ok(mid);
        }
        if d.signum() == sign_lo {
            lo = mid;
            sign_lo = d.signum();
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * (1.0 + hi.abs()) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Global minimizers with the degeneracy tolerance widened enough to pick
/// up both branches exactly at a bisected crossing.
fn minimize_with_near_degenerate(params: &ModelParams) -> Result<Vec<f64>> {
    let minima = local_minima(params)?;
    let e_min = minima.iter().map(|m| m.energy).fold(f64::INFINITY, f64::min);
    Ok(minima
        .iter()
        .filter(|m| m.energy - e_min < 10.0 * ENERGY_DEGENERACY_TOL)
        .map(|m| m.z)
        .collect())
}

fn classify_coexistence(minimizers: &[f64]) -> CoexistenceKind {
    let nonzero: Vec<f64> =
        minimizers.iter().copied().filter(|z| z.abs() > Z_GROUP_TOL).collect();
    let has_zero = nonzero.len() < minimizers.len();
    match (minimizers.len(), has_zero) {
        (2, false) if is_symmetric_pair(&nonzero) => CoexistenceKind::SymmetricPair,
        (2, _) => CoexistenceKind::BiasedPair,
        (3, true) => CoexistenceKind::Triple,
        (4, false) if is_two_symmetric_pairs(&nonzero) => CoexistenceKind::Quadruple,
        (k, _) => CoexistenceKind::Other(k),
    }
}

/// A wing critical point: endpoint of the first-order segment at fixed h̃,
/// where the two competing minima of E_ns merge (E′ = E″ = E‴ = 0).
#[derive(Debug, Clone)]
pub struct WingPoint {
    pub h_tilde: f64,
    pub g_tilde: f64,
    pub eps_tilde: f64,
    pub z: f64,
}

/// Samples of the wing critical lines L_± for the M = 1 slice, one endpoint
/// per requested h̃ (sign of h̃ selects the wing).
pub fn wing_critical_lines(h_list: &[f64]) -> Result<Vec<WingPoint>> {
    h_list.iter().map(|&h| wing_endpoint(h)).collect()
}

fn wing_endpoint(h_tilde: f64) -> Result<WingPoint> {
    if h_tilde == 0.0 {
        return Err(Error::InvalidParams("wing lines need h̃ ≠ 0".into()));
    }
    // Bracket the endpoint in ε̃: first-order segment exists for large ε̃,
    // disappears below the wing end. Track the merging pair to seed Newton.
    let mut eps_hi = 1.4;
    let mut eps_lo = 0.2;
    let mut seed = None;
    for _ in 0..40 {
        let eps = 0.5 * (eps_lo + eps_hi);
        match first_order_crossing_m1(eps, h_tilde)? {
            Some(info) => {
                eps_hi = eps;
                seed = Some(info);
            }
            None => {
                eps_lo = eps;
            }
        }
        if eps_hi - eps_lo < 1e-4 {
            break;
        }
    }
    let (g0, z_pair) = seed.ok_or_else(|| {
        Error::NonConvergence("no first-order segment found while hunting the wing".into())
    })?;
    // merge point guess: between the two competing minima
    let z0 = 0.5 * (z_pair.0 + z_pair.1);
    newton_wing(h_tilde, z0, g0, eps_hi)
}

/// Detect a first-order crossing in g̃ at fixed (ε̃, h̃) for M = 1; returns
/// the crossing coupling and the two competing minimizers.
fn first_order_crossing_m1(eps: f64, h_tilde: f64) -> Result<Option<(f64, (f64, f64))>> {
    let path = |t: f64| -> Result<ModelParams> {
        Ok(ModelParams::new(vec![1.0], t, vec![eps])?.with_h(vec![h_tilde]))
    };
    let g_r = (1.0 + eps * eps).powf(0.75);
    let t_grid: Vec<f64> = (0..=60).map(|i| g_r * (0.7 + 0.6 * i as f64 / 60.0)).collect();
    let points = trace_first_order(&path, &t_grid)?;
    for p in points {
        let nz: Vec<f64> = p.minimizers.clone();
        if nz.len() >= 2 {
            return Ok(Some((p.t, (nz[0], nz[nz.len() - 1]))));
        }
    }
    Ok(None)
}

/// Newton on (E′, E″, E‴)(z; g̃, ε̃) = 0 at fixed h̃ (M = 1).
fn newton_wing(h_tilde: f64, z0: f64, g0: f64, eps0: f64) -> Result<WingPoint> {
    let mut x = [z0, g0, eps0];
    let residual = |x: &[f64; 3]| -> Result<[f64; 3]> {
        let params = ModelParams::new(vec![1.0], x[1].abs(), vec![x[2]])?.with_h(vec![h_tilde]);
        let mf = MeanField::new(&params)?;
        Ok([mf.d1(x[0]), mf.d2(x[0]), mf.d3(x[0])])
    };
    let mut f = residual(&x)?;
    for _ in 0..80 {
        let norm = f.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        if norm < 1e-12 {
            break;
        }
        let mut jac = DMatrix::<f64>::zeros(3, 3);
        for col in 0..3 {
            let h = 1e-7 * x[col].abs().max(1e-4);
            let mut xp = x;
            xp[col] += h;
            let mut xm = x;
            xm[col] -= h;
            let fp = residual(&xp)?;
            let fm = residual(&xm)?;
            for row in 0..3 {
                jac[(row, col)] = (fp[row] - fm[row]) / (2.0 * h);
            }
        }
        let fv = DVector::from_row_slice(&f);
        let step = jac
            .lu()
            .solve(&fv)
            .ok_or_else(|| Error::NonConvergence("singular Jacobian in wing Newton".into()))?;
        for i in 0..3 {
            x[i] -= step[i];
        }
        f = residual(&x)?;
    }
    let norm = f.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    if norm > 1e-9 {
        return Err(Error::NonConvergence(format!("wing Newton residual {norm:.3e}")));
    }
    Ok(WingPoint { h_tilde, g_tilde: x[1].abs(), eps_tilde: x[2], z: x[0] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn m1(g: f64, eps: f64) -> ModelParams {
        ModelParams::new(vec![1.0], g, vec![eps]).unwrap()
    }

    #[test]
    fn normal_phase_below_critical_coupling() {
        let p = minimize(&m1(0.5, 0.0)).unwrap();
        assert_eq!(p.phase, Phase::Normal);
        assert_eq!(p.minimizers.len(), 1);
        assert!(p.minimizers[0].abs() < 1e-10);
    }

    #[test]
    fn superradiant_pair_at_sqrt2() {
        // z_G = ±√(g̃⁴−1) = ±√3 at g̃ = √2
        let p = minimize(&m1(2f64.sqrt(), 0.0)).unwrap();
        assert_eq!(p.phase, Phase::SuperradiantPair);
        assert_eq!(p.minimizers.len(), 2);
        assert_relative_eq!(p.minimizers[1], 3f64.sqrt(), epsilon = 1e-9);
        assert_relative_eq!(p.minimizers[0], -(3f64.sqrt()), epsilon = 1e-9);
        assert_relative_eq!(p.energy, -5.0 / 8.0, epsilon = 1e-12);
    }

    #[test]
    fn minimizers_satisfy_stationarity() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..25 {
            let p = ModelParams::new(
                vec![0.75, 0.25],
                rng.random_range(0.3..1.8),
                vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)],
            )
            .unwrap()
            .with_h(vec![rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1)]);
            let mf = MeanField::new(&p).unwrap();
            let point = minimize(&p).unwrap();
            for &z in &point.minimizers {
                assert!(mf.d1(z).abs() < 1e-10, "gradient at minimizer");
                assert!(mf.d2(z) >= -1e-10, "curvature at minimizer");
            }
            // with h̃=0 minimizers come in ± pairs or contain 0
            if p.h_tilde.iter().all(|&h| h == 0.0) {
                for &z in &point.minimizers {
                    let mirrored = point.minimizers.iter().any(|&w| (w + z).abs() < 1e-7);
                    assert!(mirrored || z.abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn locate_tricritical_point() {
        let cp = locate_multicritical(&[1.0], None).unwrap();
        assert_relative_eq!(cp.g_tilde, (5.0f64 / 4.0).powf(0.75), epsilon = 1e-8);
        assert_relative_eq!(cp.eps_tilde[0], 0.5, epsilon = 1e-8);
        assert!(cp.residual_r < 1e-10);
        assert!(cp.residual_u[0] < 1e-10);
        assert!(cp.v > 0.0);
        assert_eq!(cp.order, 3);
    }

    #[test]
    fn locate_with_explicit_guess() {
        let cp = locate_multicritical(&[1.0], Some(&[1.2, 0.45])).unwrap();
        assert_relative_eq!(cp.g_tilde, (5.0f64 / 4.0).powf(0.75), epsilon = 1e-8);
    }

    #[test]
    fn second_order_surface_matches_analytic_m1() {
        // g̃_r(ε̃) = (1+ε̃²)^{3/4}
        let grid: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64 * 0.012]).collect();
        let pts = second_order_surface(&[1.0], &grid).unwrap();
        for p in pts {
            let eps = p.eps_tilde[0];
            let expect = (1.0 + eps * eps).powf(0.75);
            assert!(
                (p.g_r - expect).abs() < 1e-10,
                "eps={eps}: {} vs {expect}",
                p.g_r
            );
        }
    }

    #[test]
    fn dicke_point_at_zero_bias() {
        let pts = second_order_surface(&[1.0], &[vec![0.0]]).unwrap();
        assert_relative_eq!(pts[0].g_r, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn triple_point_on_strong_bias_scan() {
        // ε̃ = 0.8 > 1/2: first-order L_τ crossing with minima {0, ±z_s}
        let eps = 0.8;
        let path =
            |t: f64| -> Result<ModelParams> { ModelParams::new(vec![1.0], t, vec![eps]) };
        let g_r = (1.0 + eps * eps).powf(0.75);
        let grid: Vec<f64> = (0..=80).map(|i| g_r * (0.9 + 0.2 * i as f64 / 80.0)).collect();
        let found = trace_first_order(&path, &grid).unwrap();
        assert_eq!(found.len(), 1, "exactly one triple point on the scan");
        let tp = &found[0];
        assert_eq!(tp.kind, CoexistenceKind::Triple);
        assert_eq!(tp.minimizers.len(), 3);
        assert!(tp.t < g_r, "triple point precedes the r=0 coupling");
        // degeneracy: E(0) = E(±z_s)
        let mf = MeanField::new(&tp.params).unwrap();
        let e0 = mf.energy(0.0);
        let es = mf.energy(tp.minimizers[2]);
        assert!((e0 - es).abs() < 1e-9);
    }

    #[test]
    fn weak_bias_scan_is_continuous() {
        // ε̃ = 0.3 < 1/2: crossing L_λ is second order, no coexistence
        let path =
            |t: f64| -> Result<ModelParams> { ModelParams::new(vec![1.0], t, vec![0.3]) };
        let grid: Vec<f64> = (0..=80).map(|i| 0.8 + 0.6 * i as f64 / 80.0).collect();
        let found = trace_first_order(&path, &grid).unwrap();
        assert!(found.is_empty());
    }

    #[test]
    fn wing_endpoints_approach_tricritical_point() {
        let wp = wing_endpoint(1e-5).unwrap();
        assert!((wp.g_tilde - (1.25f64).powf(0.75)).abs() < 2e-2);
        assert!((wp.eps_tilde - 0.5).abs() < 2e-2);
        // sign symmetry: L_− at −h̃ mirrors L_+ at h̃ with z → −z
        let wm = wing_endpoint(-1e-5).unwrap();
        assert_relative_eq!(wm.g_tilde, wp.g_tilde, epsilon = 1e-6);
        assert_relative_eq!(wm.eps_tilde, wp.eps_tilde, epsilon = 1e-6);
        assert_relative_eq!(wm.z, -wp.z, epsilon = 1e-6);
    }
}
