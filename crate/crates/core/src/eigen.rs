//! Low-lying eigenpairs of real-symmetric banded matrices.
//!
//! All model Hamiltonians are real and banded in the product basis, so the
//! spectral pipeline is: extract the lower band profile, certify a shift σ
//! strictly below the ground energy by Sturm-count bisection (LDLᵀ inertia),
//! then run shift-invert block subspace iteration with Rayleigh–Ritz until
//! the requested residuals converge. Degenerate and near-degenerate
//! clusters (the hard case near criticality, where the gap is ~10⁻⁵ of the
//! spectral spread) converge as a subspace and are resolved exactly by the
//! small Ritz problem. Small problems go straight to a dense solver.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Lower band profile of a real symmetric matrix:
/// `bands[b][i] = A[i+b, i]` for b = 0..=bw.
#[derive(Debug, Clone)]
pub struct SymBanded {
    pub dim: usize,
    pub bw: usize,
    bands: Vec<Vec<f64>>,
}

impl SymBanded {
    pub fn from_csr(m: &CsrMatrix) -> Result<Self> {
        m.check_real()?;
        if m.hermiticity_residual() > 1e-12 {
            return Err(Error::Numerical("matrix is not symmetric".into()));
        }
        let dim = m.dim();
        let bw = m.bandwidth();
        let mut bands = vec![vec![0.0; dim]; bw + 1];
        for r in 0..dim {
            let (cols, vals) = m.row(r);
            for k in 0..cols.len() {
                let c = cols[k];
                if c <= r {
                    bands[r - c][c] = vals[k].re;
                }
            }
        }
        Ok(Self { dim, bw, bands })
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        for i in 0..self.dim {
            y[i] += self.bands[0][i] * x[i];
        }
        for b in 1..=self.bw {
            for i in 0..self.dim.saturating_sub(b) {
                let v = self.bands[b][i];
                if v != 0.0 {
                    y[i + b] += v * x[i];
                    y[i] += v * x[i + b];
                }
            }
        }
    }

    /// Gershgorin bounds (lo, hi) on the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let mut radius = vec![0.0f64; self.dim];
        for b in 1..=self.bw {
            for i in 0..self.dim.saturating_sub(b) {
                let v = self.bands[b][i].abs();
                radius[i] += v;
                radius[i + b] += v;
            }
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.dim {
            lo = lo.min(self.bands[0][i] - radius[i]);
            hi = hi.max(self.bands[0][i] + radius[i]);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `shift`, by the inertia of the
    /// LDLᵀ factorization of A − shift·I. `None` on pivot breakdown (caller
    /// perturbs the shift and retries).
    fn inertia_below(&self, shift: f64) -> Option<usize> {
        let n = self.dim;
        let w = self.bw;
        // working copy of the active band window
        let mut work = vec![vec![0.0f64; n]; w + 1];
        for b in 0..=w {
            work[b].copy_from_slice(&self.bands[b]);
        }
        for i in 0..n {
            work[0][i] -= shift;
        }
        let scale = self
            .bands
            .iter()
            .flat_map(|b| b.iter())
            .fold(0.0f64, |m, &v| m.max(v.abs()))
            .max(shift.abs())
            .max(1.0);
        let mut negatives = 0usize;
        for j in 0..n {
            let d = work[0][j];
            if d.abs() < 1e-14 * scale {
                return None;
            }
            if d < 0.0 {
                negatives += 1;
            }
            let reach = w.min(n - 1 - j);
            // rank-1 update of the trailing band block
            for r in 1..=reach {
                let ljr = work[r][j] / d;
                for s in r..=reach {
                    work[s - r][j + r] -= ljr * work[s][j];
                }
            }
        }
        Some(negatives)
    }

    /// Sturm count with automatic perturbation on breakdown.
    pub fn count_below(&self, shift: f64) -> usize {
        let (lo, hi) = self.gershgorin();
        let scale = (hi - lo).max(1.0);
        let mut eps = 1e-12 * scale;
        for _ in 0..60 {
            if let Some(c) = self.inertia_below(shift + eps) {
                return c;
            }
            eps *= 3.0;
        }
        // Gershgorin-wide perturbation failed; matrix is pathological
        panic!("Sturm count failed to stabilize");
    }

    /// Cholesky factor of A − shift·I (must be positive definite).
    fn cholesky(&self, shift: f64) -> Option<BandedCholesky> {
        let n = self.dim;
        let w = self.bw;
        let mut l = vec![vec![0.0f64; n]; w + 1];
        for b in 0..=w {
            l[b].copy_from_slice(&self.bands[b]);
        }
        for i in 0..n {
            l[0][i] -= shift;
        }
        for j in 0..n {
            let d = l[0][j];
            if d <= 0.0 {
                return None;
            }
            let dr = d.sqrt();
            l[0][j] = dr;
            let reach = w.min(n - 1 - j);
            for r in 1..=reach {
                l[r][j] /= dr;
            }
            for r in 1..=reach {
                let ljr = l[r][j];
                for s in r..=reach {
                    l[s - r][j + r] -= ljr * l[s][j];
                }
            }
        }
        Some(BandedCholesky { dim: n, bw: w, l })
    }
}

pub struct BandedCholesky {
    dim: usize,
    bw: usize,
    l: Vec<Vec<f64>>,
}

impl BandedCholesky {
    /// Solve (L Lᵀ) x = b in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.dim;
        let w = self.bw;
        for j in 0..n {
            x[j] /= self.l[0][j];
            let reach = w.min(n - 1 - j);
            for r in 1..=reach {
                x[j + r] -= self.l[r][j] * x[j];
            }
        }
        for j in (0..n).rev() {
            let reach = w.min(n - 1 - j);
            let mut s = x[j];
            for r in 1..=reach {
                s -= self.l[r][j] * x[j + r];
            }
            x[j] = s / self.l[0][j];
        }
    }
}

/// Lowest-k eigenpairs, ascending, with eigenvalue residuals
/// ‖Ax − θx‖ ≤ tol·‖A‖∞-scale.
pub fn lowest_eigenpairs(a: &SymBanded, k: usize, tol: f64) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = a.dim;
    let k = k.min(n);
    if k == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let block = (k + 4).min(n);
    if n <= (3 * block).max(64) || a.bw + 1 >= n {
        return dense_lowest(a, k);
    }

    let (glo, ghi) = a.gershgorin();
    let scale = (ghi - glo).max(1.0);
    let res_tol = tol * scale;

    // certify a shift strictly below the ground energy
    let mut lo = glo - 1e-6 * scale;
    let mut hi = ghi;
    for _ in 0..80 {
        if hi - lo <= 1e-9 * scale {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if a.count_below(mid) == 0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut sigma = lo - 1e-9 * scale;

    let mut rng = ChaCha8Rng::seed_from_u64(0xD1C3_E16E);
    let mut basis: Vec<Vec<f64>> = (0..block)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    orthonormalize(&mut basis);

    let mut chol = factor_below(a, &mut sigma, scale)?;
    let mut theta = vec![0.0f64; block];
    let mut last_max_res = f64::INFINITY;
    let max_iters = 600;
    for iter in 0..max_iters {
        for v in basis.iter_mut() {
            chol.solve_in_place(v);
        }
        orthonormalize(&mut basis);

        // Rayleigh–Ritz on the block
        let mut av: Vec<Vec<f64>> = Vec::with_capacity(block);
        for v in &basis {
            let mut y = vec![0.0; n];
            a.matvec(v, &mut y);
            av.push(y);
        }
        let mut t = DMatrix::<f64>::zeros(block, block);
        for i in 0..block {
            for j in i..block {
                let s = dot(&basis[i], &av[j]);
                t[(i, j)] = s;
                t[(j, i)] = s;
            }
        }
        let eig = nalgebra::SymmetricEigen::new(t);
        let mut order: Vec<usize> = (0..block).collect();
        order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
        let mut rotated: Vec<Vec<f64>> = vec![vec![0.0; n]; block];
        let mut rotated_av: Vec<Vec<f64>> = vec![vec![0.0; n]; block];
        for (new_i, &old_i) in order.iter().enumerate() {
            for p in 0..block {
                let c = eig.eigenvectors[(p, old_i)];
                if c != 0.0 {
                    axpy(c, &basis[p], &mut rotated[new_i]);
                    axpy(c, &av[p], &mut rotated_av[new_i]);
                }
            }
            theta[new_i] = eig.eigenvalues[old_i];
        }
        basis = rotated;

        // residuals on the k requested pairs
        let mut max_res = 0.0f64;
        for i in 0..k {
            let mut r2 = 0.0;
            for p in 0..n {
                let r = rotated_av[i][p] - theta[i] * basis[i][p];
                r2 += r * r;
            }
            max_res = max_res.max(r2.sqrt());
        }
        if max_res <= res_tol {
            basis.truncate(k);
            theta.truncate(k);
            return Ok((theta, basis));
        }

        // re-shift closer to the bottom when progress stalls
        if iter % 12 == 11 && max_res > 0.5 * last_max_res {
            let gap = (theta[block - 1] - theta[0]).max(1e-8 * scale);
            let candidate = theta[0] - 0.05 * gap;
            if candidate > sigma && a.count_below(candidate) == 0 {
                sigma = candidate;
                chol = factor_below(a, &mut sigma, scale)?;
            }
        }
        last_max_res = max_res;
    }
    Err(Error::NonConvergence(format!(
        "shift-invert iteration: residual did not reach {res_tol:.3e} in {max_iters} iterations"
    )))
}

fn factor_below(a: &SymBanded, sigma: &mut f64, scale: f64) -> Result<BandedCholesky> {
    let mut step = 1e-9 * scale;
    for _ in 0..70 {
        if let Some(c) = a.cholesky(*sigma) {
            return Ok(c);
        }
        *sigma -= step;
        step *= 2.0;
    }
    Err(Error::Numerical("could not factor shifted matrix".into()))
}

fn dense_lowest(a: &SymBanded, k: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = a.dim;
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = a.bands[0][i];
    }
    for b in 1..=a.bw {
        for i in 0..n.saturating_sub(b) {
            m[(i + b, i)] = a.bands[b][i];
            m[(i, i + b)] = a.bands[b][i];
        }
    }
    let eig = nalgebra::SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let vals = order.iter().take(k).map(|&i| eig.eigenvalues[i]).collect();
    let vecs = order
        .iter()
        .take(k)
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    Ok((vals, vecs))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(c: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += c * xi;
    }
}

/// Modified Gram–Schmidt, run twice for stability; replaces numerically
/// dependent columns with fresh deterministic noise.
fn orthonormalize(basis: &mut [Vec<f64>]) {
    
    let mut rng = ChaCha8Rng::seed_from_u64(0x0562_0AA5);
    for i in 0..basis.len() {
        for _pass in 0..2 {
            for j in 0..i {
                let (head, tail) = basis.split_at_mut(i);
                let p = dot(&head[j], &tail[0]);
                axpy(-p, &head[j], &mut tail[0]);
            }
        }
        let mut nrm = dot(&basis[i], &basis[i]).sqrt();
        if nrm < 1e-13 {
            for x in basis[i].iter_mut() {
                *x = rng.random_range(-1.0..1.0);
            }
            for j in 0..i {
                let (head, tail) = basis.split_at_mut(i);
                let p = dot(&head[j], &tail[0]);
                axpy(-p, &head[j], &mut tail[0]);
            }
            nrm = dot(&basis[i], &basis[i]).sqrt();
        }
        let inv = 1.0 / nrm;
        for x in basis[i].iter_mut() {
            *x *= inv;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn banded_from_dense(d: &DMatrix<f64>) -> SymBanded {
        let n = d.nrows();
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if d[(i, j)] != 0.0 {
                    t.push((i, j, Complex64::new(d[(i, j)], 0.0)));
                }
            }
        }
        SymBanded::from_csr(&CsrMatrix::from_triplets(n, t)).unwrap()
    }

    fn random_banded(n: usize, bw: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = rng.random_range(-2.0..2.0);
            for b in 1..=bw.min(n - 1 - i) {
                let v = rng.random_range(-1.0..1.0);
                m[(i + b, i)] = v;
                m[(i, i + b)] = v;
            }
        }
        m
    }

    #[test]
    fn sturm_count_matches_dense() {
        let d = random_banded(60, 3, 7);
        let a = banded_from_dense(&d);
        let eig = nalgebra::SymmetricEigen::new(d.clone());
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(f64::total_cmp);
        for x in [-3.0, -1.0, 0.0, 0.7, 2.5] {
            let expect = vals.iter().filter(|&&v| v < x).count();
            assert_eq!(a.count_below(x), expect, "at shift {x}");
        }
    }

    #[test]
    fn lowest_pairs_match_dense_random() {
        for (n, bw, seed) in [(150usize, 2usize, 1u64), (220, 5, 2), (300, 8, 3)] {
            let d = random_banded(n, bw, seed);
            let a = banded_from_dense(&d);
            let k = 6;
            let (vals, vecs) = lowest_eigenpairs(&a, k, 1e-12).unwrap();
            let eig = nalgebra::SymmetricEigen::new(d.clone());
            let mut dense_vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
            dense_vals.sort_by(f64::total_cmp);
            for i in 0..k {
                assert!(
                    (vals[i] - dense_vals[i]).abs() < 1e-9,
                    "eigenvalue {i}: {} vs {}",
                    vals[i],
                    dense_vals[i]
                );
                // residual check
                let mut y = vec![0.0; n];
                a.matvec(&vecs[i], &mut y);
                let r: f64 = y
                    .iter()
                    .zip(&vecs[i])
                    .map(|(ax, x)| (ax - vals[i] * x).powi(2))
                    .sum::<f64>()
                    .sqrt();
                assert!(r < 1e-9, "residual {r}");
            }
        }
    }

    #[test]
    fn degenerate_cluster_multiplicities_found() {
        // diag blocks with exact double degeneracy at the bottom plus a
        // wide spread above, mimicking the decoupled-model spectrum
        let n = 240;
        let mut d = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            d[(i, i)] = match i {
                0 | 1 => -5.0,
                2 => -4.999,
                3 | 4 => -4.5,
                _ => -4.0 + (i as f64) * 0.05,
            };
        }
        // mild banded coupling that preserves the double degeneracy of a
        // pair of decoupled sites
        for i in 5..n - 1 {
            d[(i, i + 1)] = 0.3;
            d[(i + 1, i)] = 0.3;
        }
        let a = banded_from_dense(&d);
        let (vals, _) = lowest_eigenpairs(&a, 5, 1e-12).unwrap();
        let eig = nalgebra::SymmetricEigen::new(d);
        let mut dense_vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        dense_vals.sort_by(f64::total_cmp);
        for i in 0..5 {
            assert!((vals[i] - dense_vals[i]).abs() < 1e-9);
        }
        assert!((vals[0] - vals[1]).abs() < 1e-10, "degenerate pair preserved");
    }

    #[test]
    fn tiny_relative_gap_resolved() {
        // spread ~1e4 with a 1e-2 gap at the bottom: relative gap 1e-6
        let n = 400;
        let mut d = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            d[(i, i)] = match i {
                0 => -5000.0,
                1 => -4999.99,
                _ => -4990.0 + (i as f64) * 25.0,
            };
        }
        for i in 0..n - 1 {
            d[(i, i + 1)] = 1.0;
            d[(i + 1, i)] = 1.0;
        }
        let a = banded_from_dense(&d);
        let (vals, _) = lowest_eigenpairs(&a, 3, 1e-13).unwrap();
        let eig = nalgebra::SymmetricEigen::new(d);
        let mut dense_vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        dense_vals.sort_by(f64::total_cmp);
        for i in 0..3 {
            assert!(
                (vals[i] - dense_vals[i]).abs() < 1e-7,
                "{} vs {}",
                vals[i],
                dense_vals[i]
            );
        }
        let gap = vals[1] - vals[0];
        let dense_gap = dense_vals[1] - dense_vals[0];
        assert!((gap - dense_gap).abs() < 1e-8);
    }
}
