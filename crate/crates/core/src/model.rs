//! Model parameterization and operator construction.
//!
//! A single bosonic mode (frequency ω) couples to 2N qubits split into M
//! subsets; the two halves of subset j carry transverse biases of equal
//! magnitude ε_j and opposite sign, plus an optional symmetry-breaking
//! bias h_j acting on both halves equally. Everything here works in the
//! maximal-spin (Dicke) sector of each half, with energies in units of ω:
//!
//! H/ω = a†a + Σ_j [ (J_z,2j−1 + J_z,2j) + ε̃_j (J_x,2j−1 − J_x,2j)
//!                 + h̃_j (J_x,2j−1 + J_x,2j) ] / (2Nη)
//!       + g̃/(2N√η) · Σ_j (J_x,2j−1 + J_x,2j) (a† + a)
//!
//! with η = ω/(2NΩ), g̃ = 2g/√(ωΩ), ε̃ = ε/Ω, h̃ = h/Ω. This is the unique
//! normalization consistent with the mean-field functional, with
//! z = 2√η g̃⟨a⟩, and with the normal-phase gap ω√(1−g̃²) (checked in the
//! tests below and against exact diagonalization in `spectrum`).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

const SUM_TOL: f64 = 1e-12;

/// Full dimensionless specification of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Number of qubit subsets M.
    pub subsets: usize,
    /// Number fractions n_j = N_j/N, summing to 1.
    pub n_fractions: Vec<f64>,
    /// Dimensionless coupling g̃ = 2g/√(ωΩ).
    pub g_tilde: f64,
    /// Dimensionless staggered biases ε̃_j = ε_j/Ω.
    pub eps_tilde: Vec<f64>,
    /// Dimensionless symmetry-breaking biases h̃_j = h_j/Ω.
    pub h_tilde: Vec<f64>,
    /// Frequency ratio η = ω/(2NΩ).
    pub eta: f64,
    /// Total half-qubit count N; each half of subset j holds N_j = n_j·N qubits.
    pub total_n: usize,
    /// Absolute boson frequency (angular). Only used when absolute scales
    /// are needed (ion bridge); all internal energies are in units of ω.
    pub omega: f64,
}

impl ModelParams {
    /// Mean-field-oriented constructor: h̃ = 0, η and N at generic defaults.
    pub fn new(n_fractions: Vec<f64>, g_tilde: f64, eps_tilde: Vec<f64>) -> Result<Self> {
        let subsets = n_fractions.len();
        let params = Self {
            subsets,
            n_fractions,
            g_tilde,
            eps_tilde,
            h_tilde: vec![0.0; subsets],
            eta: 1e-3,
            total_n: 1,
            omega: 1.0,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_g(mut self, g_tilde: f64) -> Self {
        self.g_tilde = g_tilde;
        self
    }

    pub fn with_h(mut self, h_tilde: Vec<f64>) -> Self {
        self.h_tilde = h_tilde;
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_total_n(mut self, total_n: usize) -> Self {
        self.total_n = total_n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.subsets == 0 || self.n_fractions.len() != self.subsets {
            return Err(Error::InvalidParams("need at least one subset".into()));
        }
        if self.eps_tilde.len() != self.subsets || self.h_tilde.len() != self.subsets {
            return Err(Error::InvalidParams(format!(
                "eps_tilde/h_tilde must have length M = {}",
                self.subsets
            )));
        }
        if self.n_fractions.iter().any(|&n| !(n > 0.0)) {
            return Err(Error::InvalidParams("all n_j must be positive".into()));
        }
        let sum: f64 = self.n_fractions.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidParams(format!(
                "number fractions must sum to 1 (got {sum})"
            )));
        }
        if !(self.g_tilde >= 0.0) {
            return Err(Error::InvalidParams("g_tilde must be >= 0".into()));
        }
        if !(self.eta > 0.0) {
            return Err(Error::InvalidParams("eta must be > 0".into()));
        }
        if self.total_n == 0 {
            return Err(Error::InvalidParams("total_n must be >= 1".into()));
        }
        if !(self.omega > 0.0) {
            return Err(Error::InvalidParams("omega must be > 0".into()));
        }
        Ok(())
    }

    /// Per-half qubit counts N_j = n_j·N; errors if any is not a positive
    /// integer (required for a finite-size Hilbert space).
    pub fn qubits_per_half(&self) -> Result<Vec<usize>> {
        self.validate()?;
        let mut out = Vec::with_capacity(self.subsets);
        for (j, &n) in self.n_fractions.iter().enumerate() {
            let exact = n * self.total_n as f64;
            let rounded = exact.round();
            if (exact - rounded).abs() > 1e-9 || rounded < 1.0 {
                return Err(Error::InvalidParams(format!(
                    "N·n_{} = {exact} is not a positive integer",
                    j + 1
                )));
            }
            out.push(rounded as usize);
        }
        Ok(out)
    }

    /// Qubit frequency in units of ω: Ω/ω = 1/(2Nη).
    pub fn qubit_freq(&self) -> f64 {
        1.0 / (2.0 * self.total_n as f64 * self.eta)
    }
}

/// Truncated Fock ⊗ collective-spin product space.
#[derive(Debug, Clone, PartialEq)]
pub struct HilbertSpace {
    pub n_max: usize,
    /// Collective spin dimensions N_j+1 for each of the 2M halves,
    /// ordered (subset 1 half +, subset 1 half −, subset 2 half +, …).
    pub spin_dims: Vec<usize>,
    pub total_dim: usize,
}

impl HilbertSpace {
    pub fn new(params: &ModelParams, n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidParams("n_max must be >= 1".into()));
        }
        let halves = params.qubits_per_half()?;
        let mut spin_dims = Vec::with_capacity(2 * halves.len());
        for &nj in &halves {
            spin_dims.push(nj + 1);
            spin_dims.push(nj + 1);
        }
        let spin_dim: usize = spin_dims.iter().product();
        Ok(Self { n_max, spin_dims, total_dim: (n_max + 1) * spin_dim })
    }

    pub fn spin_dim(&self) -> usize {
        self.spin_dims.iter().product()
    }
}

/// Standard spin-(N_j/2) matrices (J_x, J_y, J_z) in the Dicke basis,
/// with index 0 ↔ m = +j so that J_z = diag(j, j−1, …, −j).
pub fn collective_spin_ops(half_size: usize) -> Result<(CsrMatrix, CsrMatrix, CsrMatrix)> {
    if half_size == 0 {
        return Err(Error::InvalidParams("half qubit count must be >= 1".into()));
    }
    let j = half_size as f64 / 2.0;
    let dim = half_size + 1;
    let mut tx = Vec::new();
    let mut ty = Vec::new();
    let mut tz = Vec::new();
    for i in 0..dim {
        let m = j - i as f64;
        tz.push((i, i, Complex64::new(m, 0.0)));
        if i + 1 < dim {
            // ⟨j,m | J_+ | j,m−1⟩ with row i ↔ m, row i+1 ↔ m−1
            let amp = (j * (j + 1.0) - m * (m - 1.0)).sqrt();
            tx.push((i, i + 1, Complex64::new(amp / 2.0, 0.0)));
            tx.push((i + 1, i, Complex64::new(amp / 2.0, 0.0)));
            ty.push((i, i + 1, Complex64::new(0.0, -amp / 2.0)));
            ty.push((i + 1, i, Complex64::new(0.0, amp / 2.0)));
        }
    }
    Ok((
        CsrMatrix::from_triplets(dim, tx),
        CsrMatrix::from_triplets(dim, ty),
        CsrMatrix::from_triplets(dim, tz),
    ))
}

/// Bosonic annihilation operator on the (n_max+1)-dimensional Fock space.
pub fn boson_annihilation(n_max: usize) -> CsrMatrix {
    let mut t = Vec::with_capacity(n_max);
    for n in 0..n_max {
        t.push((n, n + 1, Complex64::new(((n + 1) as f64).sqrt(), 0.0)));
    }
    CsrMatrix::from_triplets(n_max + 1, t)
}

pub fn boson_number(n_max: usize) -> CsrMatrix {
    let diag: Vec<Complex64> = (0..=n_max).map(|n| Complex64::new(n as f64, 0.0)).collect();
    CsrMatrix::from_diagonal(&diag)
}

/// Embed a single-half operator into the spin-only product space.
fn embed_spin(op: &CsrMatrix, half: usize, spin_dims: &[usize]) -> CsrMatrix {
    let mut m = CsrMatrix::identity(1);
    for (k, &d) in spin_dims.iter().enumerate() {
        let factor = if k == half { op.clone() } else { CsrMatrix::identity(d) };
        m = m.kron(&factor);
    }
    m
}

/// Per-half embedded J_x, J_y, J_z on the spin-only space.
pub fn embedded_spin_ops(space: &HilbertSpace) -> Result<Vec<(CsrMatrix, CsrMatrix, CsrMatrix)>> {
    let mut out = Vec::with_capacity(space.spin_dims.len());
    for (half, &d) in space.spin_dims.iter().enumerate() {
        let (jx, jy, jz) = collective_spin_ops(d - 1)?;
        out.push((
            embed_spin(&jx, half, &space.spin_dims),
            embed_spin(&jy, half, &space.spin_dims),
            embed_spin(&jz, half, &space.spin_dims),
        ));
    }
    Ok(out)
}

/// The coupling-independent and per-unit-g̃ parts of H/ω, so that
/// H(g̃) = H0 + g̃·H1. Used directly by the quench ramp.
pub fn hamiltonian_parts(params: &ModelParams, space: &HilbertSpace) -> Result<(CsrMatrix, CsrMatrix)> {
    params.validate()?;
    let halves = params.qubits_per_half()?;
    let expected: Vec<usize> = halves.iter().flat_map(|&n| [n + 1, n + 1]).collect();
    if expected != space.spin_dims {
        return Err(Error::DimensionMismatch(
            "HilbertSpace spin dimensions do not match params".into(),
        ));
    }

    let big_n = params.total_n as f64;
    let inv_2n_eta = 1.0 / (2.0 * big_n * params.eta);
    let spins = embedded_spin_ops(space)?;
    let spin_dim = space.spin_dim();

    let one = Complex64::new(1.0, 0.0);
    let mut spin_terms: Vec<(Complex64, CsrMatrix)> = Vec::new();
    let mut sx_total = CsrMatrix::zeros(spin_dim);
    for j in 0..params.subsets {
        let (jx_p, _, jz_p) = &spins[2 * j];
        let (jx_m, _, jz_m) = &spins[2 * j + 1];
        spin_terms.push((Complex64::new(inv_2n_eta, 0.0), jz_p.clone()));
        spin_terms.push((Complex64::new(inv_2n_eta, 0.0), jz_m.clone()));
        let eps = params.eps_tilde[j] * inv_2n_eta;
        spin_terms.push((Complex64::new(eps, 0.0), jx_p.clone()));
        spin_terms.push((Complex64::new(-eps, 0.0), jx_m.clone()));
        let h = params.h_tilde[j] * inv_2n_eta;
        if h != 0.0 {
            spin_terms.push((Complex64::new(h, 0.0), jx_p.clone()));
            spin_terms.push((Complex64::new(h, 0.0), jx_m.clone()));
        }
        sx_total = CsrMatrix::linear_combination(&[(one, &sx_total), (one, jx_p), (one, jx_m)])?;
    }
    let term_refs: Vec<(Complex64, &CsrMatrix)> =
        spin_terms.iter().map(|(c, m)| (*c, m)).collect();
    let h_spin = CsrMatrix::linear_combination(&term_refs)?;

    let number = boson_number(space.n_max);
    let a = boson_annihilation(space.n_max);
    let x_op = CsrMatrix::linear_combination(&[(one, &a), (one, &a.conj_transpose())])?;

    let id_spin = CsrMatrix::identity(spin_dim);
    let id_fock = CsrMatrix::identity(space.n_max + 1);
    let h0 = CsrMatrix::linear_combination(&[
        (one, &number.kron(&id_spin)),
        (one, &id_fock.kron(&h_spin)),
    ])?;
    // per-unit-g̃ coupling: (a†+a)·ΣJ_x / (2N√η)
    let cg = 1.0 / (2.0 * big_n * params.eta.sqrt());
    let h1 = x_op.kron(&sx_total).scaled(Complex64::new(cg, 0.0));
    Ok((h0, h1))
}

/// Full Hamiltonian H/ω; `g_tilde_override` replaces params.g_tilde
/// (used by coupling ramps).
pub fn build_hamiltonian(
    params: &ModelParams,
    space: &HilbertSpace,
    g_tilde_override: Option<f64>,
) -> Result<CsrMatrix> {
    let g = g_tilde_override.unwrap_or(params.g_tilde);
    if !(g >= 0.0) {
        return Err(Error::InvalidParams("coupling must be >= 0".into()));
    }
    let (h0, h1) = hamiltonian_parts(params, space)?;
    CsrMatrix::linear_combination(&[
        (Complex64::new(1.0, 0.0), &h0),
        (Complex64::new(g, 0.0), &h1),
    ])
}

/// Total J_z = Σ_k J_z,k on the full space.
pub fn jz_total(space: &HilbertSpace) -> Result<CsrMatrix> {
    let spins = embedded_spin_ops(space)?;
    let one = Complex64::new(1.0, 0.0);
    let mut terms = CsrMatrix::zeros(space.spin_dim());
    for (_, _, jz) in &spins {
        terms = CsrMatrix::linear_combination(&[(one, &terms), (one, jz)])?;
    }
    Ok(CsrMatrix::identity(space.n_max + 1).kron(&terms))
}

/// a embedded on the full space.
pub fn annihilation_full(space: &HilbertSpace) -> CsrMatrix {
    boson_annihilation(space.n_max).kron(&CsrMatrix::identity(space.spin_dim()))
}

/// a†a embedded on the full space.
pub fn number_full(space: &HilbertSpace) -> CsrMatrix {
    boson_number(space.n_max).kron(&CsrMatrix::identity(space.spin_dim()))
}

/// Parity operator exp(iπ[a†a + Σ_k(J_z,k + N_k/2)]): diagonal ±1 since
/// n + Σ(m_k + N_k/2) is integer in the product basis.
pub fn parity_operator(space: &HilbertSpace) -> CsrMatrix {
    let spin_dim = space.spin_dim();
    let dim = space.total_dim;
    let mut diag = Vec::with_capacity(dim);
    for idx in 0..dim {
        let n = idx / spin_dim;
        let mut rest = idx % spin_dim;
        // m_k + N_k/2 = N_k − i_k with index i_k ↔ m = j − i
        let mut total = n;
        for &d in space.spin_dims.iter().rev() {
            let i_k = rest % d;
            rest /= d;
            total += (d - 1) - i_k;
        }
        let sign = if total % 2 == 0 { 1.0 } else { -1.0 };
        diag.push(Complex64::new(sign, 0.0));
    }
    CsrMatrix::from_diagonal(&diag)
}

/// Product ground state at g̃ = 0: Fock vacuum ⊗ per-half ground spinors of
/// J_z + (±ε̃_j + h̃_j)·J_x. Normalized; the leading nonzero component is
/// made positive so the state is deterministic.
pub fn ground_state_at_zero_coupling(
    params: &ModelParams,
    space: &HilbertSpace,
) -> Result<Vec<Complex64>> {
    params.validate()?;
    let mut spin_state: Vec<f64> = vec![1.0];
    for (half, &d) in space.spin_dims.iter().enumerate() {
        let j_subset = half / 2;
        let sign = if half % 2 == 0 { 1.0 } else { -1.0 };
        let b = sign * params.eps_tilde[j_subset] + params.h_tilde[j_subset];
        let local = half_ground_state(d - 1, b)?;
        let mut next = Vec::with_capacity(spin_state.len() * d);
        for &s in &spin_state {
            for &l in &local {
                next.push(s * l);
            }
        }
        spin_state = next;
    }
    // prepend Fock vacuum
    let mut full = vec![Complex64::new(0.0, 0.0); space.total_dim];
    for (i, &s) in spin_state.iter().enumerate() {
        full[i] = Complex64::new(s, 0.0);
    }
    let norm: f64 = full.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    for c in &mut full {
        *c /= norm;
    }
    Ok(full)
}

/// Lowest eigenvector of J_z + b·J_x for a spin-(n/2) half.
fn half_ground_state(half_size: usize, b: f64) -> Result<Vec<f64>> {
    let (jx, _, jz) = collective_spin_ops(half_size)?;
    let dim = half_size + 1;
    let h = CsrMatrix::linear_combination(&[
        (Complex64::new(1.0, 0.0), &jz),
        (Complex64::new(b, 0.0), &jx),
    ])?;
    let dense = h.to_dense_real()?;
    let eig = nalgebra::SymmetricEigen::new(dense);
    let mut idx = 0;
    for i in 1..dim {
        if eig.eigenvalues[i] < eig.eigenvalues[idx] {
            idx = i;
        }
    }
    let mut v: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
    let lead = v.iter().find(|x| x.abs() > 1e-12).copied().unwrap_or(1.0);
    if lead < 0.0 {
        for x in &mut v {
            *x = -*x;
        }
    }
    Ok(v)
}
