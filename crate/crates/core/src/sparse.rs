//! Minimal square CSR matrices over `Complex64`.
//!
//! All model operators are banded in the tensor basis
//! |n⟩⊗|m_1⟩⊗…⊗|m_2M⟩, so a plain CSR with sorted columns is enough for
//! construction (Kronecker products, linear combinations) and for the
//! matrix-vector and matrix-dense products the solvers and the quench
//! engine need. Matrices are immutable after construction and safe to
//! share across threads.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl CsrMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, row_ptr: vec![0; dim + 1], cols: Vec::new(), vals: Vec::new() }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            row_ptr: (0..=dim).collect(),
            cols: (0..dim).collect(),
            vals: vec![Complex64::new(1.0, 0.0); dim],
        }
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let dim = diag.len();
        let mut m = Self::identity(dim);
        m.vals.copy_from_slice(diag);
        m
    }

    /// Build from (row, col, value) triplets; duplicate entries are summed,
    /// exact zeros dropped.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, Complex64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut merged: Vec<(usize, usize, Complex64)> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "triplet out of bounds");
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(merged.len());
        let mut vals = Vec::with_capacity(merged.len());
        for (r, c, v) in merged {
            if v != Complex64::new(0.0, 0.0) {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] = cols.len();
            }
        }
        for i in 1..=dim {
            row_ptr[i] = row_ptr[i].max(row_ptr[i - 1]);
        }
        Self { dim, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[Complex64]) {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    /// Kronecker product self ⊗ other.
    pub fn kron(&self, other: &Self) -> Self {
        let dim = self.dim * other.dim;
        let mut row_ptr = Vec::with_capacity(dim + 1);
        row_ptr.push(0);
        let mut cols = Vec::with_capacity(self.nnz() * other.nnz());
        let mut vals = Vec::with_capacity(self.nnz() * other.nnz());
        for ra in 0..self.dim {
            let (ca, va) = self.row(ra);
            for rb in 0..other.dim {
                let (cb, vb) = other.row(rb);
                for (ka, &ja) in ca.iter().enumerate() {
                    for (kb, &jb) in cb.iter().enumerate() {
                        cols.push(ja * other.dim + jb);
                        vals.push(va[ka] * vb[kb]);
                    }
                }
                row_ptr.push(cols.len());
            }
        }
        Self { dim, row_ptr, cols, vals }
    }

    /// Sum of scaled matrices (all the same dimension).
    pub fn linear_combination(terms: &[(Complex64, &CsrMatrix)]) -> Result<Self> {
        let dim = terms
            .first()
            .map(|(_, m)| m.dim)
            .ok_or_else(|| Error::InvalidParams("empty linear combination".into()))?;
        if terms.iter().any(|(_, m)| m.dim != dim) {
            return Err(Error::DimensionMismatch("linear combination".into()));
        }
        let mut row_ptr = Vec::with_capacity(dim + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut acc: Vec<(usize, Complex64)> = Vec::new();
        for r in 0..dim {
            acc.clear();
            for (coeff, m) in terms {
                if *coeff == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let (c, v) = m.row(r);
                for k in 0..c.len() {
                    acc.push((c[k], *coeff * v[k]));
                }
            }
            acc.sort_by_key(|e| e.0);
            let mut i = 0;
            while i < acc.len() {
                let col = acc[i].0;
                let mut s = acc[i].1;
                let mut j = i + 1;
                while j < acc.len() && acc[j].0 == col {
                    s += acc[j].1;
                    j += 1;
                }
                if s != Complex64::new(0.0, 0.0) {
                    cols.push(col);
                    vals.push(s);
                }
                i = j;
            }
            row_ptr.push(cols.len());
        }
        Ok(Self { dim, row_ptr, cols, vals })
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let mut m = self.clone();
        for v in &mut m.vals {
            *v *= c;
        }
        m
    }

    pub fn conj_transpose(&self) -> Self {
        let mut triplets = Vec::with_capacity(self.nnz());
        for r in 0..self.dim {
            let (c, v) = self.row(r);
            for k in 0..c.len() {
                triplets.push((c[k], r, v[k].conj()));
            }
        }
        Self::from_triplets(self.dim, triplets)
    }

    /// y = A x.
    pub fn matvec(&self, x: &[Complex64], y: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        for r in 0..self.dim {
            let (c, v) = self.row(r);
            let mut s = Complex64::new(0.0, 0.0);
            for k in 0..c.len() {
                s += v[k] * x[c[k]];
            }
            y[r] = s;
        }
    }

    /// y += coeff * A x.
    pub fn matvec_acc(&self, coeff: Complex64, x: &[Complex64], y: &mut [Complex64]) {
        for r in 0..self.dim {
            let (c, v) = self.row(r);
            let mut s = Complex64::new(0.0, 0.0);
            for k in 0..c.len() {
                s += v[k] * x[c[k]];
            }
            y[r] += coeff * s;
        }
    }

    /// A · ρ for a dense row-major matrix ρ.
    pub fn mul_dense(&self, rho: &Array2<Complex64>) -> Array2<Complex64> {
        let n = self.dim;
        let mut out = Array2::zeros((n, n));
        for r in 0..n {
            let (c, v) = self.row(r);
            let mut out_row = out.row_mut(r);
            for k in 0..c.len() {
                let coeff = v[k];
                let rho_row = rho.row(c[k]);
                for (o, x) in out_row.iter_mut().zip(rho_row.iter()) {
                    *o += coeff * x;
                }
            }
        }
        out
    }

    /// ρ · A for a dense row-major matrix ρ.
    pub fn dense_mul(&self, rho: &Array2<Complex64>) -> Array2<Complex64> {
        let n = self.dim;
        let mut out = Array2::zeros((n, n));
        for i in 0..n {
            let rho_row = rho.row(i);
            let mut out_row = out.row_mut(i);
            for j in 0..n {
                let (c, v) = self.row(j);
                let x = rho_row[j];
                for k in 0..c.len() {
                    out_row[c[k]] += x * v[k];
                }
            }
        }
        out
    }

    /// tr(A ρ).
    pub fn trace_product(&self, rho: &Array2<Complex64>) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for r in 0..self.dim {
            let (c, v) = self.row(r);
            for k in 0..c.len() {
                s += v[k] * rho[(c[k], r)];
            }
        }
        s
    }

    /// ⟨ψ|A|ψ⟩.
    pub fn expectation(&self, psi: &[Complex64]) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for r in 0..self.dim {
            let (c, v) = self.row(r);
            let mut ax = Complex64::new(0.0, 0.0);
            for k in 0..c.len() {
                ax += v[k] * psi[c[k]];
            }
            s += psi[r].conj() * ax;
        }
        s
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.vals.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// ‖A − A†‖_F / ‖A‖_F (0 for the empty matrix).
    pub fn hermiticity_residual(&self) -> f64 {
        let adj = self.conj_transpose();
        let diff = Self::linear_combination(&[
            (Complex64::new(1.0, 0.0), self),
            (Complex64::new(-1.0, 0.0), &adj),
        ])
        .expect("same dimension");
        let norm = self.frobenius_norm();
        if norm == 0.0 {
            0.0
        } else {
            diff.frobenius_norm() / norm
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_imag_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    pub fn bandwidth(&self) -> usize {
        let mut bw = 0;
        for r in 0..self.dim {
            let (c, _) = self.row(r);
            for &j in c {
                bw = bw.max(r.abs_diff(j));
            }
        }
        bw
    }

    pub fn to_dense(&self) -> Array2<Complex64> {
        let mut out = Array2::zeros((self.dim, self.dim));
        for r in 0..self.dim {
            let (c, v) = self.row(r);
            for k in 0..c.len() {
                out[(r, c[k])] += v[k];
            }
        }
        out
    }

    /// Dense real copy; errors if any entry has an imaginary part above
    /// 1e-13 · max|A|.
    pub fn to_dense_real(&self) -> Result<nalgebra::DMatrix<f64>> {
        self.check_real()?;
        let mut out = nalgebra::DMatrix::<f64>::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            let (c, v) = self.row(r);
            for k in 0..c.len() {
                out[(r, c[k])] += v[k].re;
            }
        }
        Ok(out)
    }

    pub fn check_real(&self) -> Result<()> {
        let tol = 1e-13 * self.max_abs().max(1.0);
        if self.max_imag_abs() > tol {
            return Err(Error::Numerical(
                "operator has non-negligible imaginary entries; the spectral path \
                 requires the real Fock⊗Dicke representation"
                    .into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn triplets_merge_and_sort() {
        let m = CsrMatrix::from_triplets(
            3,
            vec![(2, 1, c(1.0, 0.0)), (0, 2, c(2.0, 0.0)), (2, 1, c(0.5, 0.0)), (1, 1, c(0.0, 0.0))],
        );
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.row(0), (&[2usize][..], &[c(2.0, 0.0)][..]));
        assert_eq!(m.row(2), (&[1usize][..], &[c(1.5, 0.0)][..]));
    }

    #[test]
    fn kron_matches_dense() {
        let a = CsrMatrix::from_triplets(2, vec![(0, 1, c(1.0, 0.0)), (1, 0, c(2.0, -1.0))]);
        let b = CsrMatrix::from_triplets(2, vec![(0, 0, c(3.0, 0.0)), (1, 1, c(0.0, 1.0))]);
        let k = a.kron(&b);
        let (ad, bd) = (a.to_dense(), b.to_dense());
        for i in 0..4 {
            for j in 0..4 {
                let expect = ad[(i / 2, j / 2)] * bd[(i % 2, j % 2)];
                assert_eq!(k.to_dense()[(i, j)], expect);
            }
        }
    }

    #[test]
    fn matvec_and_products_agree_with_dense() {
        let m = CsrMatrix::from_triplets(
            3,
            vec![
                (0, 0, c(1.0, 0.0)),
                (0, 2, c(0.0, 2.0)),
                (1, 1, c(-1.0, 0.5)),
                (2, 0, c(0.0, -2.0)),
            ],
        );
        let x = vec![c(1.0, 1.0), c(0.5, 0.0), c(0.0, -1.0)];
        let mut y = vec![c(0.0, 0.0); 3];
        m.matvec(&x, &mut y);
        let d = m.to_dense();
        for i in 0..3 {
            let mut s = c(0.0, 0.0);
            for j in 0..3 {
                s += d[(i, j)] * x[j];
            }
            assert!((s - y[i]).norm() < 1e-15);
        }

        let rho = Array2::from_shape_fn((3, 3), |(i, j)| c(i as f64, j as f64 * 0.3));
        let left = m.mul_dense(&rho);
        let right = m.dense_mul(&rho);
        for i in 0..3 {
            for j in 0..3 {
                let mut sl = c(0.0, 0.0);
                let mut sr = c(0.0, 0.0);
                for k in 0..3 {
                    sl += d[(i, k)] * rho[(k, j)];
                    sr += rho[(i, k)] * d[(k, j)];
                }
                assert!((left[(i, j)] - sl).norm() < 1e-14);
                assert!((right[(i, j)] - sr).norm() < 1e-14);
            }
        }
        let tp = m.trace_product(&rho);
        let mut expect = c(0.0, 0.0);
        for i in 0..3 {
            for k in 0..3 {
                expect += d[(i, k)] * rho[(k, i)];
            }
        }
        assert!((tp - expect).norm() < 1e-14);
    }

    #[test]
    fn hermiticity_residual_detects_asymmetry() {
        let h = CsrMatrix::from_triplets(2, vec![(0, 1, c(0.0, 1.0)), (1, 0, c(0.0, -1.0))]);
        assert!(h.hermiticity_residual() < 1e-15);
        let nh = CsrMatrix::from_triplets(2, vec![(0, 1, c(1.0, 0.0))]);
        assert!(nh.hermiticity_residual() > 0.5);
    }
}
