//! Truncated power-series arithmetic and the exact Taylor expansion of the
//! mean-field energy functional.
//!
//! A `PowerSeries` holds coefficients c_0..c_K of a series in the order
//! parameter z, truncated at fixed order K; products discard terms above K.
//! Square roots are taken with a division-free Newton iteration on the
//! inverse square root, t ← t(3 − q·t²)/2, which converges quadratically
//! (~log₂K steps) and stays exact in rational arithmetic — the same code
//! path backs the float series and the `exact` module.

use crate::error::{Error, Result};
use crate::model::ModelParams;

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeries {
    /// Coefficients c_0..c_K.
    pub coeffs: Vec<f64>,
}

impl PowerSeries {
    pub fn zero(order: usize) -> Self {
        Self { coeffs: vec![0.0; order + 1] }
    }

    pub fn constant(c0: f64, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = c0;
        s
    }

    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty());
        Self { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.order(), other.order());
        Self::from_coeffs(
            self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.order(), other.order());
        Self::from_coeffs(
            self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
        )
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::from_coeffs(self.coeffs.iter().map(|a| a * c).collect())
    }

    /// Cauchy product truncated at the common order.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.order(), other.order());
        let k = self.order();
        let mut out = vec![0.0; k + 1];
        for i in 0..=k {
            let a = self.coeffs[i];
            if a == 0.0 {
                continue;
            }
            for j in 0..=(k - i) {
                out[i + j] += a * other.coeffs[j];
            }
        }
        Self::from_coeffs(out)
    }

    /// Inverse square root by Newton iteration t ← t(3 − q·t²)/2;
    /// requires c_0 > 0.
    pub fn invsqrt(&self) -> Result<Self> {
        let c0 = self.coeffs[0];
        if !(c0 > 0.0) {
            return Err(Error::Numerical(format!(
                "series inverse sqrt needs positive constant term (got {c0})"
            )));
        }
        let k = self.order();
        let mut t = Self::constant(1.0 / c0.sqrt(), k);
        let three = Self::constant(3.0, k);
        // quadratic convergence: valid order doubles each step
        let steps = usize::BITS - (k + 1).leading_zeros() + 1;
        for _ in 0..steps {
            let qt2 = self.mul(&t).mul(&t);
            t = t.mul(&three.sub(&qt2)).scale(0.5);
        }
        Ok(t)
    }

    /// Square root via q·invsqrt(q).
    pub fn sqrt(&self) -> Result<Self> {
        Ok(self.mul(&self.invsqrt()?))
    }

    pub fn evaluate(&self, z: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }
}

/// Series of √((z + b)² + 1) about z = 0, truncated at `order`.
fn sqrt_shifted(b: f64, order: usize) -> Result<PowerSeries> {
    let mut q = PowerSeries::zero(order);
    q.coeffs[0] = 1.0 + b * b;
    if order >= 1 {
        q.coeffs[1] = 2.0 * b;
    }
    if order >= 2 {
        q.coeffs[2] = 1.0;
    }
    q.sqrt()
}

/// Series of (z + b)/√((z + b)² + 1) about z = 0 (used by the odd,
/// symmetry-breaking sector as the per-unit-h̃ response).
fn slope_shifted(b: f64, order: usize) -> Result<PowerSeries> {
    let mut q = PowerSeries::zero(order);
    q.coeffs[0] = 1.0 + b * b;
    if order >= 1 {
        q.coeffs[1] = 2.0 * b;
    }
    if order >= 2 {
        q.coeffs[2] = 1.0;
    }
    let mut lin = PowerSeries::zero(order);
    lin.coeffs[0] = b;
    if order >= 1 {
        lin.coeffs[1] = 1.0;
    }
    Ok(lin.mul(&q.invsqrt()?))
}

/// Exact truncated Taylor series of the energy functional E_ns(z) about
/// z = 0, to the given order (order must be at least 2M+4).
pub fn taylor_expand(params: &ModelParams, order: usize) -> Result<PowerSeries> {
    params.validate()?;
    if order < 2 * params.subsets + 4 {
        return Err(Error::InvalidParams(format!(
            "expansion order {order} below 2M+4 = {}",
            2 * params.subsets + 4
        )));
    }
    if params.g_tilde == 0.0 {
        return Err(Error::InvalidParams(
            "energy functional degenerates at g̃ = 0 (normal phase is trivially z = 0)".into(),
        ));
    }
    let mut total = PowerSeries::zero(order);
    total.coeffs[2] = 1.0 / (4.0 * params.g_tilde * params.g_tilde);
    for j in 0..params.subsets {
        let n_j = params.n_fractions[j];
        let plus = sqrt_shifted(params.eps_tilde[j] + params.h_tilde[j], order)?;
        let minus = sqrt_shifted(-params.eps_tilde[j] + params.h_tilde[j], order)?;
        total = total.sub(&plus.add(&minus).scale(n_j / 4.0));
    }
    Ok(total)
}

/// Odd series ∂E_ns/∂h̃_k at h̃ = 0 (per unit h̃_k), to the given order.
/// Even coefficients cancel identically and are zeroed.
pub fn bias_response_series(params: &ModelParams, k: usize, order: usize) -> Result<PowerSeries> {
    params.validate()?;
    if k >= params.subsets {
        return Err(Error::InvalidParams(format!("subset index {k} out of range")));
    }
    let n_k = params.n_fractions[k];
    let plus = slope_shifted(params.eps_tilde[k], order)?;
    let minus = slope_shifted(-params.eps_tilde[k], order)?;
    let mut s = plus.add(&minus).scale(-n_k / 4.0);
    for (i, c) in s.coeffs.iter_mut().enumerate() {
        if i % 2 == 0 {
            *c = 0.0;
        }
    }
    Ok(s)
}

pub mod exact {
    //! Exact-rational series arithmetic for the M = 1 analytic checks.
    //!
    //! For a single subset, the quartic coefficient of the even functional
    //! factorizes as c₄ = −(n/4)·√a·a⁻²·Q(x) with a = 1 + x, x = ε̃², and Q
    //! a polynomial with rational coefficients: the u₁ = 0 condition on the
    //! r = 0 line is therefore solvable exactly over Q. The series here
    //! carries BigRational coefficients through the same Newton
    //! inverse-sqrt iteration as the float path (the iterate stays in Q
    //! because the reduced series h(z) = g(z)/√a has constant term 1).

    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{One, Signed, Zero};

    use crate::error::{Error, Result};

    pub fn big(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[derive(Debug, Clone, PartialEq)]
    pub struct RationalSeries {
        pub coeffs: Vec<BigRational>,
    }

    impl RationalSeries {
        pub fn zero(order: usize) -> Self {
            Self { coeffs: vec![BigRational::zero(); order + 1] }
        }

        pub fn constant(c: BigRational, order: usize) -> Self {
            let mut s = Self::zero(order);
            s.coeffs[0] = c;
            s
        }

        pub fn order(&self) -> usize {
            self.coeffs.len() - 1
        }

        pub fn add(&self, other: &Self) -> Self {
            Self {
                coeffs: self
                    .coeffs
                    .iter()
                    .zip(&other.coeffs)
                    .map(|(a, b)| a + b)
                    .collect(),
            }
        }

        pub fn sub(&self, other: &Self) -> Self {
            Self {
                coeffs: self
                    .coeffs
                    .iter()
                    .zip(&other.coeffs)
                    .map(|(a, b)| a - b)
                    .collect(),
            }
        }

        pub fn scale(&self, c: &BigRational) -> Self {
            Self { coeffs: self.coeffs.iter().map(|a| a * c).collect() }
        }

        pub fn mul(&self, other: &Self) -> Self {
            let k = self.order();
            let mut out = vec![BigRational::zero(); k + 1];
            for i in 0..=k {
                if self.coeffs[i].is_zero() {
                    continue;
                }
                for j in 0..=(k - i) {
                    let term = &self.coeffs[i] * &other.coeffs[j];
                    out[i + j] += term;
                }
            }
            Self { coeffs: out }
        }

        /// Newton inverse square root; requires constant term exactly 1.
        pub fn invsqrt_unit(&self) -> Result<Self> {
            if !self.coeffs[0].is_one() {
                return Err(Error::Numerical(
                    "rational series invsqrt requires unit constant term".into(),
                ));
            }
            let k = self.order();
            let mut t = Self::constant(BigRational::one(), k);
            let three = Self::constant(big(3, 1), k);
            let half = big(1, 2);
            let steps = usize::BITS - (k + 1).leading_zeros() + 1;
            for _ in 0..steps {
                let qt2 = self.mul(&t).mul(&t);
                t = t.mul(&three.sub(&qt2)).scale(&half);
            }
            Ok(t)
        }
    }

    /// Reduced even series h(z) = [√((z+e)²+1) + √((z−e)²+1)]/√a with
    /// a = 1 + x and x = e² rational: all coefficients are rational.
    pub fn reduced_pair_series(x: &BigRational, order: usize) -> Result<RationalSeries> {
        // Coefficients live in the quadratic extension Q[e]/(e² − x); the
        // e-odd parts of the ± pair cancel, leaving a rational series.
        let q_plus = QuadExtSeries::shifted_quadratic(x, true, order);
        let s_plus = q_plus.invsqrt_unit()?;
        let q_minus = QuadExtSeries::shifted_quadratic(x, false, order);
        let s_minus = q_minus.invsqrt_unit()?;
        // √(1+w) = (1+w)·invsqrt(1+w)
        let sp = q_plus.mul(&s_plus);
        let sm = q_minus.mul(&s_minus);
        let sum = sp.add(&sm);
        // the e-odd components must cancel exactly
        for c in &sum.odd {
            if !c.is_zero() {
                return Err(Error::Numerical("odd-in-e component failed to cancel".into()));
            }
        }
        Ok(RationalSeries { coeffs: sum.even })
    }

    /// Series with coefficients in the quadratic extension Q[e]/(e² − x):
    /// each z-coefficient is (even + odd·e).
    #[derive(Debug, Clone)]
    struct QuadExtSeries {
        x: BigRational,
        even: Vec<BigRational>,
        odd: Vec<BigRational>,
    }

    impl QuadExtSeries {
        fn zero(x: &BigRational, order: usize) -> Self {
            Self {
                x: x.clone(),
                even: vec![BigRational::zero(); order + 1],
                odd: vec![BigRational::zero(); order + 1],
            }
        }

        /// 1 + (z² ± 2ez)/a with a = 1 + x.
        fn shifted_quadratic(x: &BigRational, plus: bool, order: usize) -> Self {
            let a = BigRational::one() + x;
            let mut s = Self::zero(x, order);
            s.even[0] = BigRational::one();
            if order >= 2 {
                s.even[2] = BigRational::one() / &a;
            }
            if order >= 1 {
                let two_over_a = big(2, 1) / &a;
                s.odd[1] = if plus { two_over_a } else { -two_over_a };
            }
            s
        }

        fn constant(x: &BigRational, c: BigRational, order: usize) -> Self {
            let mut s = Self::zero(x, order);
            s.even[0] = c;
            s
        }

        fn add(&self, other: &Self) -> Self {
            Self {
                x: self.x.clone(),
                even: self.even.iter().zip(&other.even).map(|(a, b)| a + b).collect(),
                odd: self.odd.iter().zip(&other.odd).map(|(a, b)| a + b).collect(),
            }
        }

        fn sub(&self, other: &Self) -> Self {
            Self {
                x: self.x.clone(),
                even: self.even.iter().zip(&other.even).map(|(a, b)| a - b).collect(),
                odd: self.odd.iter().zip(&other.odd).map(|(a, b)| a - b).collect(),
            }
        }

        fn scale(&self, c: &BigRational) -> Self {
            Self {
                x: self.x.clone(),
                even: self.even.iter().map(|a| a * c).collect(),
                odd: self.odd.iter().map(|a| a * c).collect(),
            }
        }

        fn mul(&self, other: &Self) -> Self {
            let k = self.even.len() - 1;
            let mut out = Self::zero(&self.x, k);
            for i in 0..=k {
                let (ae, ao) = (&self.even[i], &self.odd[i]);
                if ae.is_zero() && ao.is_zero() {
                    continue;
                }
                for j in 0..=(k - i) {
                    let (be, bo) = (&other.even[j], &other.odd[j]);
                    // (ae + ao·e)(be + bo·e) = (ae·be + x·ao·bo) + (ae·bo + ao·be)·e
                    out.even[i + j] += ae * be + &self.x * (ao * bo);
                    out.odd[i + j] += ae * bo + ao * be;
                }
            }
            out
        }

        fn invsqrt_unit(&self) -> Result<Self> {
            if !self.even[0].is_one() || !self.odd[0].is_zero() {
                return Err(Error::Numerical(
                    "quadratic-extension invsqrt requires unit constant term".into(),
                ));
            }
            let k = self.even.len() - 1;
            let mut t = Self::constant(&self.x, BigRational::one(), k);
            let three = Self::constant(&self.x, big(3, 1), k);
            let half = big(1, 2);
            let steps = usize::BITS - (k + 1).leading_zeros() + 1;
            for _ in 0..steps {
                let qt2 = self.mul(&t).mul(&t);
                t = t.mul(&three.sub(&qt2)).scale(&half);
            }
            Ok(t)
        }
    }

    /// Exact quartic coefficient of the reduced even series in x = ε̃²:
    /// returns h₄(x) (the u₁ = 0 condition is h₄(x) = 0 for M = 1).
    pub fn reduced_quartic(x: &BigRational) -> Result<BigRational> {
        Ok(reduced_pair_series(x, 4)?.coeffs[4].clone())
    }

    /// Rational roots of h₄(x) = 0 in x = ε̃² for M = 1, found by clearing
    /// the (1+x)⁴ denominator, interpolating the numerator polynomial at
    /// integer nodes, and applying the rational-root theorem. Each root is
    /// verified by exact evaluation.
    pub fn m1_quartic_root() -> Result<BigRational> {
        // numerator n(x) = h₄(x)·(1+x)⁴ has low degree; interpolate at 0..=5
        let nodes: Vec<BigRational> = (0..=5).map(|i| big(i, 1)).collect();
        let values: Vec<BigRational> = nodes
            .iter()
            .map(|x| {
                let a = BigRational::one() + x;
                let a4 = &a * &a * &a * &a;
                Ok(reduced_quartic(x)? * a4)
            })
            .collect::<Result<_>>()?;
        let poly = lagrange_interpolate(&nodes, &values);
        let roots = rational_roots(&poly);
        for r in roots {
            if r.is_positive() && reduced_quartic(&r)?.is_zero() {
                return Ok(r);
            }
        }
        Err(Error::Numerical("no positive rational root of the quartic condition".into()))
    }

    /// Exact square root of a rational if numerator and denominator are
    /// perfect squares.
    pub fn perfect_sqrt(x: &BigRational) -> Option<BigRational> {
        if x.is_negative() {
            return None;
        }
        let ns = isqrt(x.numer());
        let ds = isqrt(x.denom());
        if &(&ns * &ns) == x.numer() && &(&ds * &ds) == x.denom() {
            Some(BigRational::new(ns, ds))
        } else {
            None
        }
    }

    /// Floor integer square root of a non-negative BigInt (binary search).
    fn isqrt(n: &BigInt) -> BigInt {
        if n.is_zero() {
            return BigInt::zero();
        }
        let mut lo = BigInt::zero();
        let mut hi = n.clone() + 1;
        while &hi - &lo > BigInt::one() {
            let mid: BigInt = (&lo + &hi) / 2;
            if &mid * &mid <= *n {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    fn lagrange_interpolate(nodes: &[BigRational], values: &[BigRational]) -> Vec<BigRational> {
        let n = nodes.len();
        let mut poly = vec![BigRational::zero(); n];
        for i in 0..n {
            // basis polynomial Π_{j≠i} (x − x_j)/(x_i − x_j)
            let mut basis = vec![BigRational::one()];
            let mut denom = BigRational::one();
            for j in 0..n {
                if j == i {
                    continue;
                }
                denom *= &nodes[i] - &nodes[j];
                let mut next = vec![BigRational::zero(); basis.len() + 1];
                for (k, c) in basis.iter().enumerate() {
                    next[k + 1] += c;
                    next[k] += -&nodes[j] * c;
                }
                basis = next;
            }
            let w = &values[i] / denom;
            for (k, c) in basis.iter().enumerate() {
                poly[k] += c * &w;
            }
        }
        while poly.len() > 1 && poly.last().map(|c| c.is_zero()).unwrap_or(false) {
            poly.pop();
        }
        poly
    }

    /// All rational roots of a rational-coefficient polynomial via the
    /// rational-root theorem on the integer-cleared form.
    fn rational_roots(poly: &[BigRational]) -> Vec<BigRational> {
        use num_bigint::BigInt;
        if poly.len() < 2 {
            return Vec::new();
        }
        // clear denominators
        let mut lcm = BigInt::one();
        for c in poly {
            lcm = lcm_big(&lcm, c.denom());
        }
        let ints: Vec<BigInt> =
            poly.iter().map(|c| c.numer() * (&lcm / c.denom())).collect();
        let a0 = ints.iter().find(|c| !c.is_zero());
        let an = ints.last();
        let (Some(_a0), Some(an)) = (a0, an) else { return Vec::new() };
        // factor out xᵖ (roots at 0 are not interesting here: x = ε̃² > 0)
        let first_nz = ints.iter().position(|c| !c.is_zero()).unwrap();
        let reduced: Vec<BigInt> = ints[first_nz..].to_vec();
        let p_divs = divisors(&reduced[0]);
        let q_divs = divisors(an);
        let mut roots = Vec::new();
        for p in &p_divs {
            for q in &q_divs {
                for sign in [1i64, -1] {
                    let cand = BigRational::new(p * BigInt::from(sign), q.clone());
                    let mut acc = BigRational::zero();
                    for c in reduced.iter().rev() {
                        acc = acc * &cand + BigRational::from(c.clone());
                    }
                    if acc.is_zero() && !roots.contains(&cand) {
                        roots.push(cand);
                    }
                }
            }
        }
        roots
    }

    fn gcd_big(a: &BigInt, b: &BigInt) -> BigInt {
        let mut a = a.abs();
        let mut b = b.abs();
        while !b.is_zero() {
            let r = &a % &b;
            a = b;
            b = r;
        }
        a
    }

    fn lcm_big(a: &BigInt, b: &BigInt) -> BigInt {
        if a.is_zero() || b.is_zero() {
            return BigInt::zero();
        }
        (a * b).abs() / gcd_big(a, b)
    }

    fn divisors(n: &BigInt) -> Vec<BigInt> {
        let n = n.abs();
        // trial division is fine: coefficients stay small for the M = 1 case
        let mut out = Vec::new();
        let mut i = BigInt::one();
        while &i * &i <= n {
            if (&n % &i).is_zero() {
                out.push(i.clone());
                out.push(&n / &i);
            }
            i += 1;
        }
        out.sort();
        out.dedup();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sqrt_squares_back() {
        let q = PowerSeries::from_coeffs(vec![2.0, 0.4, -0.3, 0.2, 0.05, -0.07, 0.01]);
        let s = q.sqrt().unwrap();
        let back = s.mul(&s);
        for k in 0..=q.order() {
            assert_relative_eq!(back.coeff(k), q.coeff(k), epsilon = 1e-14, max_relative = 1e-14);
        }
    }

    #[test]
    fn sqrt_rejects_nonpositive() {
        let q = PowerSeries::from_coeffs(vec![0.0, 1.0]);
        assert!(q.sqrt().is_err());
        let q2 = PowerSeries::from_coeffs(vec![-1.0, 1.0]);
        assert!(q2.sqrt().is_err());
    }

    #[test]
    fn sqrt_one_plus_z2_known_coefficients() {
        // √(1+z²) = 1 + z²/2 − z⁴/8 + z⁶/16 − 5z⁸/128
        let s = sqrt_shifted(0.0, 8).unwrap();
        let expect = [1.0, 0.0, 0.5, 0.0, -0.125, 0.0, 1.0 / 16.0, 0.0, -5.0 / 128.0];
        for (k, &e) in expect.iter().enumerate() {
            assert_relative_eq!(s.coeff(k), e, epsilon = 1e-15);
        }
    }

    #[test]
    fn mul_truncates() {
        let a = PowerSeries::from_coeffs(vec![1.0, 1.0, 0.0]);
        let b = a.mul(&a);
        assert_eq!(b.coeffs, vec![1.0, 2.0, 1.0]);
    }

    #[test]
    fn exact_quartic_condition_root_is_one_quarter() {
        let x = exact::m1_quartic_root().unwrap();
        assert_eq!(x, exact::big(1, 4));
        let eps = exact::perfect_sqrt(&x).unwrap();
        assert_eq!(eps, exact::big(1, 2));
    }

    #[test]
    fn exact_reduced_series_matches_float() {
        // h(z) = g(z)/√a at ε̃ = 0.7
        let x = exact::big(49, 100);
        let h = exact::reduced_pair_series(&x, 8).unwrap();
        let a: f64 = 1.49;
        let plus = sqrt_shifted(0.7, 8).unwrap();
        let minus = sqrt_shifted(-0.7, 8).unwrap();
        let g = plus.add(&minus);
        for k in 0..=8 {
            let hf: f64 = crate::series::tests::to_f64(&h.coeffs[k]);
            assert_relative_eq!(hf, g.coeff(k) / a.sqrt(), epsilon = 1e-13, max_relative = 1e-13);
        }
    }

    pub(crate) fn to_f64(r: &num_rational::BigRational) -> f64 {
        use num_traits::ToPrimitive;
        r.to_f64().unwrap()
    }
}
