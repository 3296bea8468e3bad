//! Excitation energies two ways: the η→0 mean-field curvature formula and
//! finite-η exact diagonalization, plus the ground-state observables the
//! quench and scaling analyses need.
//!
//! The mean-field gap is ε/ω = √(2g̃²·∂²E_ns/∂z²|_{z_G}); the constant 2g̃²
//! is fixed by the unbiased normal-phase limit ε = ω√(1−g̃²) and validated
//! against finite-η diagonalization (the 2% agreement test). Exponents are
//! independent of this constant.

use num_complex::Complex64;

use crate::eigen::{lowest_eigenpairs, SymBanded};
use crate::error::{Error, Result};
use crate::landau::MeanField;
use crate::model::{
    annihilation_full, build_hamiltonian, jz_total, number_full, HilbertSpace, ModelParams,
};
use crate::sparse::CsrMatrix;
use crate::phase::minimize;

/// Low-lying spectrum and ground-state observables, energies in units of ω.
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    /// Lowest k eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// ε = E₁ − E₀.
    pub gap: f64,
    /// Total ⟨J_z⟩ over all 2M halves.
    pub jz_expectation: f64,
    pub a_expectation: Complex64,
    /// ⟨(a+a†)²⟩ — the parity-even order-parameter route (z² ∝ η·g̃²·⟨x²⟩
    /// up to the vacuum term), usable without a symmetry-breaking bias.
    pub x_squared: f64,
    pub photon_number: f64,
    pub n_max_used: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct SpectrumOptions {
    /// Number of eigenvalues to report.
    pub k: usize,
    pub n_max_start: usize,
    pub n_max_cap: usize,
    /// Relative change of ground energy and gap under n_max doubling.
    pub trunc_tol: f64,
    /// Eigensolver residual tolerance (relative to the spectral scale).
    pub eig_tol: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self { k: 4, n_max_start: 16, n_max_cap: 1024, trunc_tol: 1e-9, eig_tol: 1e-12 }
    }
}

/// Mean-field excitation energy in units of ω. Returns 0 when the
/// curvature at the global minimum vanishes within tolerance (critical
/// points); curvature significantly below zero is an error.
pub fn mf_gap(params: &ModelParams) -> Result<f64> {
    // ε² = 2g̃²·E″(z_G) written as 1 − 2g̃²·(curvature deficit), finite at g̃=0
    if params.g_tilde == 0.0 {
        return Ok(1.0);
    }
    let point = minimize(params)?;
    let mf = MeanField::new(params)?;
    // any global minimizer gives the same curvature up to symmetry
    let z = point.minimizers[point.minimizers.len() - 1];
    let curv = mf.d2(z);
    let eps2 = 2.0 * params.g_tilde * params.g_tilde * curv;
    if eps2 < -1e-9 {
        return Err(Error::Numerical(format!(
            "negative curvature {curv:.3e} at reported minimum (branch tracking error?)"
        )));
    }
    Ok(eps2.max(0.0).sqrt())
}

/// Lowest-k eigenpairs of the model Hamiltonian with adaptive Fock
/// truncation: n_max doubles from `n_max_start` until ground energy and
/// gap are stable to `trunc_tol` (relative, with an absolute floor tied to
/// the spectral scale), or the cap is reached (error).
pub fn exact_spectrum(params: &ModelParams, opts: &SpectrumOptions) -> Result<SpectrumResult> {
    params.validate()?;
    let k = opts.k.max(2);
    let mut n_max = opts.n_max_start.max(2);
    let mut prev: Option<(f64, f64)> = None;
    loop {
        let space = HilbertSpace::new(params, n_max)?;
        let h = build_hamiltonian(params, &space, None)?;
        let banded = SymBanded::from_csr(&h)?;
        let (vals, vecs) = lowest_eigenpairs(&banded, k, opts.eig_tol)?;
        let e0 = vals[0];
        let gap = vals[1] - vals[0];
        if let Some((prev_e0, prev_gap)) = prev {
            let scale = e0.abs().max(1.0);
            let e0_ok = (e0 - prev_e0).abs() <= opts.trunc_tol * scale;
            let gap_floor = 1e-10 * scale;
            let gap_ok = (gap - prev_gap).abs() <= (opts.trunc_tol * gap.abs()).max(gap_floor);
            if e0_ok && gap_ok {
                return finish(params, &space, vals, &vecs[0], true);
            }
        }
        if n_max * 2 > opts.n_max_cap {
            return Err(Error::NonConvergence(format!(
                "Fock truncation not converged at n_max = {n_max} (cap {})",
                opts.n_max_cap
            )));
        }
        prev = Some((e0, gap));
        n_max *= 2;
    }
}

fn finish(
    params: &ModelParams,
    space: &HilbertSpace,
    eigenvalues: Vec<f64>,
    ground: &[f64],
    converged: bool,
) -> Result<SpectrumResult> {
    let psi: Vec<Complex64> = ground.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let jz = jz_total(space)?.expectation(&psi).re;
    let a_op = annihilation_full(space);
    let a = a_op.expectation(&psi);
    let n = number_full(space).expectation(&psi).re;
    let one = Complex64::new(1.0, 0.0);
    let x_op = CsrMatrix::linear_combination(&[(one, &a_op), (one, &a_op.conj_transpose())])?;
    let mut x_psi = vec![Complex64::new(0.0, 0.0); psi.len()];
    x_op.matvec(&psi, &mut x_psi);
    let x_squared: f64 = x_psi.iter().map(|c| c.norm_sqr()).sum();
    let gap = eigenvalues[1] - eigenvalues[0];
    let _ = params;
    Ok(SpectrumResult {
        eigenvalues,
        gap,
        jz_expectation: jz,
        a_expectation: a,
        x_squared,
        photon_number: n,
        n_max_used: space.n_max,
        converged,
    })
}

/// ε(η) table at fixed dimensionless parameters, one adaptive
/// diagonalization per frequency ratio.
pub fn gap_scan(
    params: &ModelParams,
    eta_list: &[f64],
    opts: &SpectrumOptions,
) -> Result<Vec<(f64, SpectrumResult)>> {
    use rayon::prelude::*;
    let mut etas = eta_list.to_vec();
    etas.sort_by(f64::total_cmp);
    etas
        .par_iter()
        .map(|&eta| {
            let p = params.clone().with_eta(eta);
            Ok((eta, exact_spectrum(&p, opts)?))
        })
        .collect()
}
