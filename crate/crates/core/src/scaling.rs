//! Closed-form multicritical exponents, power-law fitting, and the quench
//! scaling collapse with a quantitative spread metric.
//!
//! The collapse rescales each point to (X, Y) = (τ·η^{(1+γ_{ε,r})/ξ_r},
//! η^{−1+γ_{ε,r}/ξ_r}·⟨J_z⟩_r) and measures, on a common log-spaced X
//! grid, the worst relative spread (max − min)/|median| across the per-η
//! monotone interpolants. Each curve's interpolant may be extended by a
//! configurable fraction of its log-span per side (linear end-slope
//! extension in log-log): with ωτ ∈ [0.75, 2] and η ratios of 2 the
//! adjacent rescaled windows fall short of touching by ~6%, so a modest,
//! documented extrapolation allowance is part of the metric definition.

use num_rational::Rational64;

use crate::error::{Error, Result};

/// Closed-form exponent family of the (M+2)-order universality class
/// (M = 0 is the Dicke class).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExponentTable {
    pub m: usize,
    /// β_r = 1/(2M+2).
    pub beta_r: Rational64,
    /// β_{u_j} = 1/(2M−2j+2), j = 1..M (so β_{u_M} = 1/2).
    pub beta_u: Vec<Rational64>,
    /// β_{w_j} = 1/(2M−2j+5), j = 1..M+1.
    pub beta_w: Vec<Rational64>,
    /// γ_{ε,w₁} = (M+1)/(2M+3).
    pub gamma_eps_w1: Rational64,
    /// γ_{ε,r} = 1/2 (M-independent).
    pub gamma_eps_r: Rational64,
    /// ξ_r = (M+3)/(2M+2).
    pub xi_r: Rational64,
    /// ξ_{w₁} = (M+3)/(2M+3).
    pub xi_w1: Rational64,
    /// δ_ε = γ_{ε,r}/ξ_r = γ_{ε,w₁}/ξ_{w₁} = (M+1)/(M+3).
    pub delta_eps: Rational64,
}

/// A scaling variable for crossover-exponent lookups.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingVariable {
    R,
    /// u_j, 1-based.
    U(usize),
    /// w_j, 1-based.
    W(usize),
}

pub fn predicted_exponents(m: usize) -> ExponentTable {
    let mi = m as i64;
    ExponentTable {
        m,
        beta_r: Rational64::new(1, 2 * mi + 2),
        beta_u: (1..=mi).map(|j| Rational64::new(1, 2 * mi - 2 * j + 2)).collect(),
        beta_w: (1..=mi + 1).map(|j| Rational64::new(1, 2 * mi - 2 * j + 5)).collect(),
        gamma_eps_w1: Rational64::new(mi + 1, 2 * mi + 3),
        gamma_eps_r: Rational64::new(1, 2),
        xi_r: Rational64::new(mi + 3, 2 * mi + 2),
        xi_w1: Rational64::new(mi + 3, 2 * mi + 3),
        delta_eps: Rational64::new(mi + 1, mi + 3),
    }
}

impl ExponentTable {
    pub fn beta(&self, v: ScalingVariable) -> Option<Rational64> {
        match v {
            ScalingVariable::R => Some(self.beta_r),
            ScalingVariable::U(j) => self.beta_u.get(j.checked_sub(1)?).copied(),
            ScalingVariable::W(j) => self.beta_w.get(j.checked_sub(1)?).copied(),
        }
    }

    /// Crossover exponent φ_{A1,A2} = β_{A1}/β_{A2}.
    pub fn crossover(&self, a1: ScalingVariable, a2: ScalingVariable) -> Option<Rational64> {
        Some(self.beta(a1)? / self.beta(a2)?)
    }

    /// Collapse exponents of the residual-population relation:
    /// prefactor 1 − γ_{ε,r}/ξ_r and argument (1 + γ_{ε,r})/ξ_r.
    pub fn collapse_exponents(&self) -> CollapseExponents {
        let delta = ratio_f64(self.delta_eps);
        let arg = ratio_f64((Rational64::new(1, 1) + self.gamma_eps_r) / self.xi_r);
        CollapseExponents { prefactor: 1.0 - delta, argument: arg }
    }
}

pub fn ratio_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Least-squares power-law fit of log y against log x.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub exponent: f64,
    pub stderr: f64,
    pub window: (f64, f64),
    pub n_points: usize,
}

pub fn fit_power_law(points: &[(f64, f64)], window: Option<(f64, f64)>) -> Result<FitResult> {
    let selected: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(x, _)| window.map(|(lo, hi)| x >= lo && x <= hi).unwrap_or(true))
        .collect();
    if selected.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "power-law fit needs ≥3 points, got {}",
            selected.len()
        )));
    }
    if selected.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return Err(Error::InvalidParams("power-law fit needs positive data".into()));
    }
    let logs: Vec<(f64, f64)> = selected.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let (sx, sy): (f64, f64) = logs.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let sxx: f64 = logs.iter().map(|&(x, _)| (x - mx) * (x - mx)).sum();
    let sxy: f64 = logs.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParams("degenerate abscissa in fit".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = logs
        .iter()
        .map(|&(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let stderr = if logs.len() > 2 {
        (ss_res / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    let window = selected
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(x, _)| (lo.min(x), hi.max(x)));
    Ok(FitResult { exponent: slope, stderr, window, n_points: selected.len() })
}

/// Sliding-window local slopes (ascending x), exhibiting convergence of the
/// fitted exponent as the window approaches the critical point.
pub fn sliding_window_fits(points: &[(f64, f64)], window_size: usize) -> Result<Vec<FitResult>> {
    if window_size < 3 || points.len() < window_size {
        return Err(Error::InsufficientData("window too large for data".into()));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    (0..=sorted.len() - window_size)
        .map(|i| fit_power_law(&sorted[i..i + window_size], None))
        .collect()
}

/// One quench data point entering the collapse.
#[derive(Debug, Clone, Copy)]
pub struct CollapsePoint {
    pub eta: f64,
    pub tau: f64,
    /// ⟨J_z⟩_r.
    pub value: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct CollapseExponents {
    /// ⟨J_z⟩_r ∝ η^{prefactor} at fixed scaling argument.
    pub prefactor: f64,
    /// Argument exponent: X = τ·η^{argument}.
    pub argument: f64,
}

#[derive(Debug, Clone)]
pub struct CollapseOptions {
    pub grid_points: usize,
    /// Per-side extension of each curve's interpolant, as a fraction of its
    /// log-X span.
    pub extrapolation_fraction: f64,
}

impl Default for CollapseOptions {
    fn default() -> Self {
        Self { grid_points: 60, extrapolation_fraction: 0.10 }
    }
}

#[derive(Debug, Clone)]
pub struct Collapse {
    /// Per-η rescaled curves: (η, points (X, Y) ascending in X).
    pub curves: Vec<(f64, Vec<(f64, f64)>)>,
    /// max over covered grid cells of (max Y − min Y)/|median Y|.
    pub spread: f64,
    /// Number of grid cells where ≥2 curves were comparable.
    pub cells_compared: usize,
}

/// Rescale quench results and measure the collapse spread.
pub fn collapse(
    points: &[CollapsePoint],
    exps: CollapseExponents,
    opts: &CollapseOptions,
) -> Result<Collapse> {
    let curves = rescale_curves(points, exps)?;
    if curves.len() < 2 {
        return Err(Error::InsufficientData("collapse needs ≥2 distinct η values".into()));
    }
    let interps: Vec<LogInterp> = curves
        .iter()
        .map(|(_, pts)| LogInterp::new(pts, opts.extrapolation_fraction))
        .collect::<Result<_>>()?;
    let (lo, hi) = interps.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), it| {
        (a.min(it.x_lo_ext), b.max(it.x_hi_ext))
    });
    let mut spread = 0.0f64;
    let mut cells = 0usize;
    let n = opts.grid_points.max(2);
    for i in 0..n {
        let lx = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let mut values: Vec<f64> = interps.iter().filter_map(|it| it.eval(lx)).collect();
        if values.len() < 2 {
            continue;
        }
        values.sort_by(f64::total_cmp);
        let median = 0.5 * (values[(values.len() - 1) / 2] + values[values.len() / 2]);
        if median.abs() < 1e-300 {
            continue;
        }
        let s = (values[values.len() - 1] - values[0]) / median.abs();
        spread = spread.max(s);
        cells += 1;
    }
    if cells == 0 {
        return Err(Error::NoOverlap);
    }
    Ok(Collapse { curves, spread, cells_compared: cells })
}

/// Worst relative deviation of the rescaled data from a reference curve
/// (itself in rescaled coordinates), interpolated at each data abscissa.
pub fn deviation_from_reference(
    points: &[CollapsePoint],
    reference: &[(f64, f64)],
    exps: CollapseExponents,
    opts: &CollapseOptions,
) -> Result<f64> {
    let curves = rescale_curves(points, exps)?;
    let ref_interp = LogInterp::new(reference, opts.extrapolation_fraction)?;
    let mut worst = 0.0f64;
    let mut compared = 0usize;
    for (_, pts) in &curves {
        for &(x, y) in pts {
            if let Some(y_ref) = ref_interp.eval(x.ln()) {
                if y_ref.abs() > 1e-300 {
                    worst = worst.max((y - y_ref).abs() / y_ref.abs());
                    compared += 1;
                }
            }
        }
    }
    if compared == 0 {
        return Err(Error::NoOverlap);
    }
    Ok(worst)
}

fn rescale_curves(
    points: &[CollapsePoint],
    exps: CollapseExponents,
) -> Result<Vec<(f64, Vec<(f64, f64)>)>> {
    if points.is_empty() {
        return Err(Error::InsufficientData("no collapse points".into()));
    }
    let mut curves: Vec<(f64, Vec<(f64, f64)>)> = Vec::new();
    for p in points {
        if !(p.eta > 0.0 && p.tau > 0.0) || p.value < 0.0 {
            return Err(Error::InvalidParams("collapse points need η, τ > 0 and value ≥ 0".into()));
        }
        let x = p.tau * p.eta.powf(exps.argument);
        let y = p.value * p.eta.powf(-exps.prefactor);
        match curves.iter_mut().find(|(eta, _)| (*eta - p.eta).abs() < 1e-15) {
            Some((_, pts)) => pts.push((x, y)),
            None => curves.push((p.eta, vec![(x, y)])),
        }
    }
    for (_, pts) in &mut curves {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    curves.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(curves)
}

/// Monotone (Fritsch–Carlson) cubic interpolant in log-log coordinates,
/// with linear end-slope extension over a bounded extrapolation window.
struct LogInterp {
    lx: Vec<f64>,
    ly: Vec<f64>,
    slopes: Vec<f64>,
    x_lo_ext: f64,
    x_hi_ext: f64,
}

impl LogInterp {
    fn new(points: &[(f64, f64)], extrapolation_fraction: f64) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InsufficientData("interpolant needs ≥2 points".into()));
        }
        if points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
            return Err(Error::InvalidParams(
                "log-log interpolation needs positive coordinates".into(),
            ));
        }
        let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
        let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
        let slopes = pchip_slopes(&lx, &ly);
        let span = lx.last().unwrap() - lx[0];
        let ext = extrapolation_fraction * span;
        Ok(Self { x_lo_ext: lx[0] - ext, x_hi_ext: lx.last().unwrap() + ext, lx, ly, slopes })
    }

    /// Evaluate at log-x; None outside the extended domain.
    fn eval(&self, lx: f64) -> Option<f64> {
        if lx < self.x_lo_ext || lx > self.x_hi_ext {
            return None;
        }
        let n = self.lx.len();
        if lx <= self.lx[0] {
            return Some((self.ly[0] + self.slopes[0] * (lx - self.lx[0])).exp());
        }
        if lx >= self.lx[n - 1] {
            return Some((self.ly[n - 1] + self.slopes[n - 1] * (lx - self.lx[n - 1])).exp());
        }
        let i = match self.lx.binary_search_by(|v| v.total_cmp(&lx)) {
            Ok(i) => return Some(self.ly[i].exp()),
            Err(i) => i - 1,
        };
        let h = self.lx[i + 1] - self.lx[i];
        let t = (lx - self.lx[i]) / h;
        let (y0, y1) = (self.ly[i], self.ly[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let val = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1;
        Some(val.exp())
    }
}

/// Fritsch–Carlson monotone cubic slopes.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 2 {
        let d = (y[1] - y[0]) / (x[1] - x[0]);
        return vec![d, d];
    }
    let h: Vec<f64> = (0..n - 1).map(|i| x[i + 1] - x[i]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut m = vec![0.0; n];
    m[0] = delta[0];
    m[n - 1] = delta[n - 2];
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] > 0.0 {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            m[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    // clamp to preserve monotonicity
    for i in 0..n - 1 {
        if delta[i] == 0.0 {
            m[i] = 0.0;
            m[i + 1] = 0.0;
        } else {
            let a = m[i] / delta[i];
            let b = m[i + 1] / delta[i];
            let s = a * a + b * b;
            if s > 9.0 {
                let t = 3.0 / s.sqrt();
                m[i] = t * a * delta[i];
                m[i + 1] = t * b * delta[i];
            }
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponent_tables_match_closed_forms() {
        // M=0 → Dicke class
        let t0 = predicted_exponents(0);
        assert_eq!(t0.beta_r, Rational64::new(1, 2));
        assert_eq!(t0.xi_r, Rational64::new(3, 2));
        assert_eq!(t0.delta_eps, Rational64::new(1, 3));
        // M=1
        let t1 = predicted_exponents(1);
        assert_eq!(t1.gamma_eps_w1, Rational64::new(2, 5));
        assert_eq!(t1.xi_r, Rational64::new(1, 1));
        assert_eq!(t1.delta_eps, Rational64::new(1, 2));
        assert_eq!(t1.beta_u, vec![Rational64::new(1, 2)]);
        assert_eq!(t1.beta_w, vec![Rational64::new(1, 5), Rational64::new(1, 3)]);
        // M=2
        let t2 = predicted_exponents(2);
        assert_eq!(t2.xi_r, Rational64::new(5, 6));
        assert_eq!(t2.beta_r, Rational64::new(1, 6));
    }

    #[test]
    fn exponent_identities_exact() {
        for m in 0..=6 {
            let t = predicted_exponents(m);
            assert_eq!(t.gamma_eps_r / t.xi_r, t.delta_eps);
            assert_eq!(t.gamma_eps_w1 / t.xi_w1, t.delta_eps);
            assert_eq!(t.beta_r, Rational64::new(1, 2 * m as i64 + 2));
        }
    }

    #[test]
    fn crossover_exponents_below_one() {
        // φ_{r,u_j} < 1 and φ_{w1,A} < 1 for A ≠ w1, M ≤ 5
        for m in 1..=5usize {
            let t = predicted_exponents(m);
            for j in 1..=m {
                let phi = t.crossover(ScalingVariable::R, ScalingVariable::U(j)).unwrap();
                assert!(phi < Rational64::new(1, 1), "phi_r_u{j} = {phi} at M={m}");
            }
            let w1 = ScalingVariable::W(1);
            let mut others = vec![ScalingVariable::R];
            others.extend((1..=m).map(ScalingVariable::U));
            others.extend((2..=m + 1).map(ScalingVariable::W));
            for a in others {
                let phi = t.crossover(w1, a).unwrap();
                assert!(phi < Rational64::new(1, 1), "phi_w1 = {phi} at M={m}");
            }
        }
    }

    #[test]
    fn collapse_exponents_for_m1() {
        let ce = predicted_exponents(1).collapse_exponents();
        assert_relative_eq!(ce.prefactor, 0.5);
        assert_relative_eq!(ce.argument, 1.5);
    }

    #[test]
    fn synthetic_power_law_recovered_exactly() {
        let pts: Vec<(f64, f64)> =
            (1..=12).map(|i| (i as f64, 3.0 * (i as f64).powf(0.4))).collect();
        let fit = fit_power_law(&pts, None).unwrap();
        assert_relative_eq!(fit.exponent, 0.4, epsilon = 1e-12);
        assert!(fit.stderr < 1e-12);
        assert_eq!(fit.n_points, 12);
    }

    #[test]
    fn fit_is_scale_invariant() {
        let pts: Vec<(f64, f64)> =
            (1..=9).map(|i| (1.3f64.powi(i), 0.7 * 1.3f64.powi(2 * i))).collect();
        let base = fit_power_law(&pts, None).unwrap();
        let scaled: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (5.0 * x, 0.02 * y)).collect();
        let fit = fit_power_law(&scaled, None).unwrap();
        assert_relative_eq!(base.exponent, fit.exponent, epsilon = 1e-12);
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(fit_power_law(&[(1.0, 1.0), (2.0, 2.0)], None).is_err());
        assert!(fit_power_law(&[(1.0, 1.0), (2.0, -2.0), (3.0, 1.0)], None).is_err());
    }

    #[test]
    fn sliding_windows_converge_on_corrected_power_law() {
        // y = x^0.5·(1 + 0.3x): local slope → 0.5 as x → 0
        let pts: Vec<(f64, f64)> = (0..20)
            .map(|i| {
                let x = 1e-6 * 3f64.powi(i);
                (x, x.powf(0.5) * (1.0 + 0.3 * x))
            })
            .collect();
        let fits = sliding_window_fits(&pts, 5).unwrap();
        let first = fits.first().unwrap().exponent;
        let last = fits.last().unwrap().exponent;
        assert!((first - 0.5).abs() < 1e-3, "smallest-x window ≈ 0.5, got {first}");
        assert!((last - 0.5).abs() > 0.1, "largest-x window far from 0.5");
    }

    /// Exact scaling form S(X) = (1 + X)⁻²: two η curves whose τ grids are
    /// chosen so the rescaled X grids coincide — spread must vanish.
    #[test]
    fn exact_scaling_form_collapses_to_zero_spread() {
        let exps = CollapseExponents { prefactor: 0.5, argument: 1.5 };
        let mut pts = Vec::new();
        let xs: Vec<f64> = (1..=10).map(|i| 0.01 * i as f64).collect();
        for &eta in &[0.01f64, 0.005] {
            for &x in &xs {
                let tau = x / eta.powf(exps.argument);
                let s = (1.0 + x).powi(-2);
                pts.push(CollapsePoint { eta, tau, value: eta.powf(exps.prefactor) * s });
            }
        }
        let c = collapse(&pts, exps, &CollapseOptions::default()).unwrap();
        assert!(c.spread < 1e-12, "spread = {}", c.spread);
        assert!(c.cells_compared > 0);
    }

    #[test]
    fn offset_windows_bridged_by_extrapolation() {
        // same exact form, but τ windows equal in ωτ (disjoint X windows)
        let exps = CollapseExponents { prefactor: 0.5, argument: 1.5 };
        let mut pts = Vec::new();
        for &eta in &[0.01f64, 0.005] {
            for i in 0..8 {
                let tau = 0.75 + (2.0 - 0.75) * i as f64 / 7.0;
                let x = tau * eta.powf(exps.argument);
                let s = (1.0 + 10.0 * x).powi(-1);
                pts.push(CollapsePoint { eta, tau, value: eta.powf(exps.prefactor) * s });
            }
        }
        let c = collapse(&pts, exps, &CollapseOptions::default()).unwrap();
        assert!(c.cells_compared > 0, "extrapolation must bridge the 6% gap");
        assert!(c.spread < 0.02, "smooth form extrapolates well, spread = {}", c.spread);
        // without extrapolation there is no overlap at all
        let strict = CollapseOptions { extrapolation_fraction: 0.0, ..Default::default() };
        assert!(matches!(collapse(&pts, exps, &strict), Err(Error::NoOverlap)));
    }

    #[test]
    fn single_eta_rejected() {
        let pts: Vec<CollapsePoint> = (1..=5)
            .map(|i| CollapsePoint { eta: 0.01, tau: i as f64, value: 0.1 })
            .collect();
        let exps = CollapseExponents { prefactor: 0.5, argument: 1.5 };
        assert!(collapse(&pts, exps, &CollapseOptions::default()).is_err());
    }

    #[test]
    fn reference_deviation_zero_on_exact_form() {
        let exps = CollapseExponents { prefactor: 0.5, argument: 1.5 };
        let reference: Vec<(f64, f64)> = (1..=40)
            .map(|i| {
                let x = 1e-4 * 1.2f64.powi(i);
                (x, (1.0 + x).powi(-2))
            })
            .collect();
        let pts: Vec<CollapsePoint> = (1..=6)
            .map(|i| {
                let eta = 0.01f64;
                let tau = 0.2 * i as f64;
                let x: f64 = tau * eta.powf(exps.argument);
                CollapsePoint { eta, tau, value: eta.powf(exps.prefactor) * (1.0 + x).powi(-2) }
            })
            .collect();
        let dev =
            deviation_from_reference(&pts, &reference, exps, &CollapseOptions::default()).unwrap();
        assert!(dev < 1e-4, "deviation {dev}");
    }
}
