//! Mean-field energy functional and its Landau normal form.
//!
//! The even sector E(z) = E₀ + v(r z²/2 + Σ_j u_j z^{2j+2}/(2j+2)
//! + z^{2M+4}/(2M+4)) is read off the exact Taylor expansion; the odd
//! sector, linear in the symmetry-breaking biases h̃, is recentred at
//! z_ns = z − z₀ with z₀ chosen to remove the z_ns^{2M+3} term, leaving
//! the fields w_1..w_{M+1}. Both w_j and z₀ are linear responses (per unit
//! h̃_k); the Jacobian is exposed for path-to-scaling-variable mapping.

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::series::{bias_response_series, taylor_expand, PowerSeries};

/// Mean-field energy functional per qubit (units of Ω) and its derivatives.
///
/// E_ns(z) = z²/(4g̃²) − (1/4)Σ_j n_j[√((z+ε̃_j+h̃_j)²+1) + √((z−ε̃_j+h̃_j)²+1)]
#[derive(Debug, Clone)]
pub struct MeanField {
    g2_inv4: f64,
    terms: Vec<(f64, f64)>, // (weight n_j/4, offset b) per sqrt term
}

impl MeanField {
    pub fn new(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        if params.g_tilde == 0.0 {
            return Err(Error::InvalidParams(
                "energy functional degenerates at g̃ = 0 (normal phase is trivially z = 0)"
                    .into(),
            ));
        }
        let mut terms = Vec::with_capacity(2 * params.subsets);
        for j in 0..params.subsets {
            let w = params.n_fractions[j] / 4.0;
            terms.push((w, params.eps_tilde[j] + params.h_tilde[j]));
            terms.push((w, -params.eps_tilde[j] + params.h_tilde[j]));
        }
        Ok(Self { g2_inv4: 1.0 / (4.0 * params.g_tilde * params.g_tilde), terms })
    }

    pub fn energy(&self, z: f64) -> f64 {
        let mut e = self.g2_inv4 * z * z;
        for &(w, b) in &self.terms {
            let x = z + b;
            e -= w * (x * x + 1.0).sqrt();
        }
        e
    }

    pub fn d1(&self, z: f64) -> f64 {
        let mut d = 2.0 * self.g2_inv4 * z;
        for &(w, b) in &self.terms {
            let x = z + b;
            d -= w * x / (x * x + 1.0).sqrt();
        }
        d
    }

    pub fn d2(&self, z: f64) -> f64 {
        let mut d = 2.0 * self.g2_inv4;
        for &(w, b) in &self.terms {
            let x = z + b;
            d -= w / (x * x + 1.0).powf(1.5);
        }
        d
    }

    pub fn d3(&self, z: f64) -> f64 {
        let mut d = 0.0;
        for &(w, b) in &self.terms {
            let x = z + b;
            d += 3.0 * w * x / (x * x + 1.0).powf(2.5);
        }
        d
    }
}

/// E_ns(z); rejects g̃ = 0.
pub fn energy_functional_ns(z: f64, params: &ModelParams) -> Result<f64> {
    Ok(MeanField::new(params)?.energy(z))
}

/// E(z), the symmetric functional: same as `energy_functional_ns` with the
/// h̃ contribution dropped.
pub fn energy_functional(z: f64, params: &ModelParams) -> Result<f64> {
    let symmetric = ModelParams { h_tilde: vec![0.0; params.subsets], ..params.clone() };
    energy_functional_ns(z, &symmetric)
}

/// Analytic ∂E_ns/∂h̃_k at the given z (used as the finite-difference
/// oracle for the odd-sector series).
pub fn bias_derivative(z: f64, params: &ModelParams, k: usize) -> Result<f64> {
    params.validate()?;
    if k >= params.subsets {
        return Err(Error::InvalidParams("subset index out of range".into()));
    }
    let n_k = params.n_fractions[k];
    let bp = z + params.eps_tilde[k] + params.h_tilde[k];
    let bm = z - params.eps_tilde[k] + params.h_tilde[k];
    Ok(-(n_k / 4.0) * (bp / (bp * bp + 1.0).sqrt() + bm / (bm * bm + 1.0).sqrt()))
}

/// Normal-form coefficients of the energy functional.
#[derive(Debug, Clone)]
pub struct LandauCoefficients {
    pub e0: f64,
    /// Normalization v = (2M+4)·c_{2M+4}; the (M+2)-order analysis is
    /// valid only where v > 0.
    pub v: f64,
    pub r: f64,
    /// u_1..u_M.
    pub u: Vec<f64>,
    /// w_1..w_{M+1} for the actual h̃ of the parameters (all zero at h̃ = 0).
    pub w: Vec<f64>,
    /// Odd-sector shift z₀ for the actual h̃.
    pub z0: f64,
}

/// Even-sector normal form of a Taylor series (no symmetry-breaking data).
pub fn normal_form(series: &PowerSeries, subsets: usize) -> Result<LandauCoefficients> {
    let top = 2 * subsets + 4;
    if series.order() < top {
        return Err(Error::InvalidParams(format!(
            "series order {} below 2M+4 = {top}",
            series.order()
        )));
    }
    let v = top as f64 * series.coeff(top);
    if !(v > 0.0) {
        return Err(Error::Numerical(format!(
            "normal form invalid: v = {v} ≤ 0; the (M+2)-order critical analysis \
             does not apply at this point"
        )));
    }
    let r = 2.0 * series.coeff(2) / v;
    let u = (1..=subsets)
        .map(|j| (2 * j + 2) as f64 * series.coeff(2 * j + 2) / v)
        .collect();
    Ok(LandauCoefficients {
        e0: series.coeff(0),
        v,
        r,
        u,
        w: vec![0.0; subsets + 1],
        z0: 0.0,
    })
}

/// Per-unit-h̃ odd-sector responses: returns (w_jk, z0_k) where column k is
/// the response to h̃_k. w has M+1 rows.
pub fn bias_response(params: &ModelParams) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let m = params.subsets;
    let order = 2 * m + 4;
    let symmetric = ModelParams { h_tilde: vec![0.0; m], ..params.clone() };
    let even = taylor_expand(&symmetric, order)?;
    let v = order as f64 * even.coeff(order);
    if !(v > 0.0) {
        return Err(Error::Numerical(format!("normal form invalid: v = {v} ≤ 0")));
    }
    let mut w = vec![vec![0.0; m]; m + 1];
    let mut z0 = vec![0.0; m];
    for k in 0..m {
        let odd = bias_response_series(&symmetric, k, order - 1)?;
        // shift z = z_ns + s·h̃_k: the odd coefficient of z_ns^{2j−1} becomes
        // o_{2j−1} + 2j·c_{2j}·s; choose s to kill the 2M+3 term.
        let s = -odd.coeff(2 * m + 3) / v;
        z0[k] = s;
        for j in 1..=(m + 1) {
            let shifted = odd.coeff(2 * j - 1) + (2 * j) as f64 * even.coeff(2 * j) * s;
            w[j - 1][k] = (2 * j - 1) as f64 * shifted / v;
        }
    }
    Ok((w, z0))
}

/// Full Landau coefficients at the given parameters: even sector from the
/// h̃ = 0 expansion, odd sector linear in the actual h̃.
pub fn landau_coefficients(params: &ModelParams) -> Result<LandauCoefficients> {
    let m = params.subsets;
    let symmetric = ModelParams { h_tilde: vec![0.0; m], ..params.clone() };
    let even = taylor_expand(&symmetric, 2 * m + 4)?;
    let mut lc = normal_form(&even, m)?;
    if params.h_tilde.iter().any(|&h| h != 0.0) {
        let (w_mat, z0_vec) = bias_response(params)?;
        for j in 0..=m {
            lc.w[j] = (0..m).map(|k| w_mat[j][k] * params.h_tilde[k]).sum();
        }
        lc.z0 = (0..m).map(|k| z0_vec[k] * params.h_tilde[k]).sum();
    }
    Ok(lc)
}

/// Rebuild the polynomial part of E from normal-form coefficients
/// (reconstruction identity used in tests and invariants).
pub fn reconstruct_even_series(lc: &LandauCoefficients, subsets: usize, order: usize) -> PowerSeries {
    let mut s = PowerSeries::zero(order);
    s.coeffs[0] = lc.e0;
    s.coeffs[2] = lc.v * lc.r / 2.0;
    for j in 1..=subsets {
        if 2 * j + 2 <= order {
            s.coeffs[2 * j + 2] = lc.v * lc.u[j - 1] / (2 * j + 2) as f64;
        }
    }
    let top = 2 * subsets + 4;
    if top <= order {
        s.coeffs[top] = lc.v / top as f64;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn m1(g: f64, eps: f64) -> ModelParams {
        ModelParams::new(vec![1.0], g, vec![eps]).unwrap()
    }

    #[test]
    fn energy_functional_values() {
        // z=0, M=1, ε̃=0 → −1/2
        assert_relative_eq!(energy_functional(0.0, &m1(1.0, 0.0)).unwrap(), -0.5);
        // M=1, ε̃=0, g̃=√2, z=√3 → −5/8, and it is the minimizer z_G = √(g̃⁴−1)
        let p = m1(2f64.sqrt(), 0.0);
        let e = energy_functional(3f64.sqrt(), &p).unwrap();
        assert_relative_eq!(e, -5.0 / 8.0, epsilon = 1e-14);
        let mf = MeanField::new(&p).unwrap();
        assert_relative_eq!(mf.d1(3f64.sqrt()), 0.0, epsilon = 1e-14);
        assert!(mf.d2(3f64.sqrt()) > 0.0);
    }

    #[test]
    fn rejects_zero_coupling() {
        assert!(energy_functional(0.3, &m1(0.0, 0.2)).is_err());
    }

    #[test]
    fn even_in_z_randomized() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let p = ModelParams::new(
                vec![0.75, 0.25],
                rng.random_range(0.2..2.0),
                vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
            )
            .unwrap();
            let z = rng.random_range(-3.0..3.0);
            let a = energy_functional(z, &p).unwrap();
            let b = energy_functional(-z, &p).unwrap();
            assert_relative_eq!(a, b, epsilon = 1e-14, max_relative = 1e-14);
        }
    }

    #[test]
    fn parity_with_field_reversal() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let h: Vec<f64> = (0..2).map(|_| rng.random_range(-0.5..0.5)).collect();
            let p = ModelParams::new(
                vec![0.5, 0.5],
                rng.random_range(0.2..2.0),
                vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
            )
            .unwrap()
            .with_h(h.clone());
            let p_rev = p.clone().with_h(h.iter().map(|x| -x).collect());
            let z = rng.random_range(-3.0..3.0);
            let a = energy_functional_ns(z, &p).unwrap();
            let b = energy_functional_ns(-z, &p_rev).unwrap();
            assert_relative_eq!(a, b, epsilon = 1e-14, max_relative = 1e-14);
        }
    }

    #[test]
    fn ns_reduces_to_symmetric_at_zero_h() {
        let p = m1(1.3, 0.4);
        for z in [-1.5, -0.2, 0.0, 0.7, 2.4] {
            assert_relative_eq!(
                energy_functional_ns(z, &p).unwrap(),
                energy_functional(z, &p).unwrap(),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn bias_derivative_matches_finite_differences() {
        let p = m1(1.2, 0.6);
        for z in [-0.8, 0.0, 0.3, 1.1] {
            let analytic = bias_derivative(z, &p, 0).unwrap();
            let dh = 1e-6;
            let mut ph = p.clone().with_h(vec![dh]);
            let ep = energy_functional_ns(z, &ph).unwrap();
            ph = p.clone().with_h(vec![-dh]);
            let em = energy_functional_ns(z, &ph).unwrap();
            let fd = (ep - em) / (2.0 * dh);
            assert_relative_eq!(analytic, fd, epsilon = 1e-8, max_relative = 1e-8);
        }
    }

    #[test]
    fn taylor_matches_known_m1_expansion() {
        // M=1, ε̃=0: E = −1/2 + (1/(4g̃²) − 1/4)z² + z⁴/16 − z⁶/32 + O(z⁸)
        let p = m1(1.4, 0.0);
        let s = taylor_expand(&p, 8).unwrap();
        assert_relative_eq!(s.coeff(0), -0.5, epsilon = 1e-15);
        assert_relative_eq!(s.coeff(2), 1.0 / (4.0 * 1.4 * 1.4) - 0.25, epsilon = 1e-15);
        assert_relative_eq!(s.coeff(4), 1.0 / 16.0, epsilon = 1e-14);
        assert_relative_eq!(s.coeff(6), -1.0 / 32.0, epsilon = 1e-14);
        for k in [1, 3, 5, 7] {
            assert_relative_eq!(s.coeff(k), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn quadratic_coefficient_vanishes_on_critical_line() {
        // z² coefficient zero exactly on g̃ = (1+ε̃²)^{3/4} for M=1
        for eps in [0.0f64, 0.3, 0.5, 0.9] {
            let g = (1.0 + eps * eps).powf(0.75);
            let s = taylor_expand(&m1(g, eps), 6).unwrap();
            assert_relative_eq!(s.coeff(2), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn taylor_matches_numerical_differentiation() {
        // Independent oracle: Cauchy-integral coefficients of the functional
        // evaluated (with its own complex reimplementation) on |z| = 1/2 —
        // exponentially accurate trapezoid, no shared series code.
        use num_complex::Complex64;
        let p = ModelParams::new(vec![0.6, 0.4], 1.1, vec![0.45, 0.2]).unwrap();
        let s = taylor_expand(&p, 8).unwrap();
        let energy_c = |z: Complex64| -> Complex64 {
            let mut e = z * z / (4.0 * p.g_tilde * p.g_tilde);
            for j in 0..p.subsets {
                for sign in [1.0, -1.0] {
                    let x = z + sign * p.eps_tilde[j];
                    e -= (x * x + 1.0).sqrt() * (p.n_fractions[j] / 4.0);
                }
            }
            e
        };
        let n = 64;
        let rho = 0.5;
        for k in 2..=8usize {
            let mut acc = Complex64::new(0.0, 0.0);
            for m in 0..n {
                let theta = 2.0 * std::f64::consts::PI * m as f64 / n as f64;
                let z = Complex64::from_polar(rho, theta);
                acc += energy_c(z) * Complex64::from_polar(1.0, -(k as f64) * theta);
            }
            let ck = acc / (n as f64 * rho.powi(k as i32));
            assert!(ck.im.abs() < 1e-12);
            assert_relative_eq!(s.coeff(k), ck.re, epsilon = 1e-7, max_relative = 1e-7);
        }
    }

    #[test]
    fn normal_form_flags_negative_v_at_unbiased_m1() {
        // c₆ of −(1/2)√(1+z²) is −1/32 < 0 → v = 6c₆ < 0 → flagged
        let s = taylor_expand(&m1(1.0, 0.0), 6).unwrap();
        let err = normal_form(&s, 1).unwrap_err();
        assert!(err.to_string().contains("v ="));
    }

    #[test]
    fn normal_form_reconstruction_roundtrip() {
        let p = ModelParams::new(vec![0.75, 0.25], 1.31, vec![0.8, 0.14]).unwrap();
        let s = taylor_expand(&p, 8).unwrap();
        let lc = normal_form(&s, 2).unwrap();
        let rebuilt = reconstruct_even_series(&lc, 2, 8);
        for k in (2..=8).step_by(2) {
            assert_relative_eq!(rebuilt.coeff(k), s.coeff(k), epsilon = 1e-12, max_relative = 1e-12);
        }
    }

    #[test]
    fn zero_bias_gives_zero_w_and_shift() {
        let p = m1(1.18, 0.5);
        let lc = landau_coefficients(&p).unwrap();
        assert!(lc.w.iter().all(|&w| w == 0.0));
        assert_eq!(lc.z0, 0.0);
        assert_eq!(lc.w.len(), 2);
    }

    #[test]
    fn bias_response_shift_kills_top_odd_term() {
        // rebuild the shifted odd series and check the z_ns^{2M+3} term
        let p = m1((1.25f64).powf(0.75), 0.5);
        let m = 1;
        let order = 2 * m + 4;
        let even = taylor_expand(&p, order).unwrap();
        let odd = bias_response_series(&p, 0, order - 1).unwrap();
        let (_, z0) = bias_response(&p).unwrap();
        let s = z0[0];
        let v = order as f64 * even.coeff(order);
        let top_odd = odd.coeff(2 * m + 3) + v * s;
        assert_relative_eq!(top_odd, 0.0, epsilon = 1e-14);
    }
}
