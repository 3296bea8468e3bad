//! Adaptive Dormand–Prince 5(4) integration over complex state vectors.
//!
//! The quench engine flattens both pure states and density matrices into
//! `Vec<Complex64>`, so one embedded Runge–Kutta pair with FSAL covers
//! both. Error control uses a mixed absolute/relative weighted RMS norm;
//! `post_step` runs after every accepted step (the Lindblad path uses it
//! to re-Hermitize the density matrix).

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-9, atol: 1e-12, max_steps: 50_000_000 }
    }
}

#[derive(Debug, Clone, Default)]
pub struct OdeStats {
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub rhs_evaluations: usize,
}

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
/// b − b̂ (5th-order minus embedded 4th-order weights).
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

/// Integrate y′ = f(t, y) from t0 to t1 in place.
pub fn integrate<F, P>(
    rhs: &mut F,
    t0: f64,
    t1: f64,
    y: &mut Vec<Complex64>,
    opts: &OdeOptions,
    post_step: &mut P,
) -> Result<OdeStats>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
    P: FnMut(&mut [Complex64]),
{
    let n = y.len();
    let span = t1 - t0;
    if span <= 0.0 {
        return Ok(OdeStats::default());
    }
    let mut stats = OdeStats::default();
    let mut k: Vec<Vec<Complex64>> = vec![vec![Complex64::new(0.0, 0.0); n]; 7];
    let mut y_stage = vec![Complex64::new(0.0, 0.0); n];
    let mut t = t0;

    rhs(t, y, &mut k[0]);
    stats.rhs_evaluations += 1;

    // initial step from the first-derivative scale
    let ynorm = weighted_rms(y, y, y, opts);
    let fnorm = weighted_rms(&k[0], y, y, opts);
    let mut h = if fnorm > 1e-300 {
        (0.01 * ynorm.max(1.0) / fnorm).min(span / 10.0)
    } else {
        span / 100.0
    }
    .max(span * 1e-12);

    while t < t1 {
        if stats.steps_accepted + stats.steps_rejected > opts.max_steps {
            return Err(Error::NonConvergence(format!(
                "integrator exceeded {} steps",
                opts.max_steps
            )));
        }
        h = h.min(t1 - t);
        // stages 2..7
        for s in 0..6 {
            for i in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, kj) in k.iter().enumerate().take(s + 1) {
                    let a = A[s][j];
                    if a != 0.0 {
                        acc += a * kj[i];
                    }
                }
                y_stage[i] = y[i] + h * acc;
            }
            rhs(t + C[s] * h, &y_stage, &mut k[s + 1]);
            stats.rhs_evaluations += 1;
        }
        // y_stage now holds the 5th-order solution (stage 6 used b-row)
        let mut err2 = 0.0f64;
        for i in 0..n {
            let mut e = Complex64::new(0.0, 0.0);
            for (j, kj) in k.iter().enumerate() {
                if E[j] != 0.0 {
                    e += E[j] * kj[i];
                }
            }
            let e = h * e;
            let scale = opts.atol + opts.rtol * y[i].norm().max(y_stage[i].norm());
            let q = e.norm() / scale;
            err2 += q * q;
        }
        let err = (err2 / n as f64).sqrt();
        if err <= 1.0 {
            t += h;
            std::mem::swap(y, &mut y_stage);
            post_step(y);
            // re-evaluate at the (possibly post-processed) accepted state
            rhs(t, y, &mut k[0]);
            stats.rhs_evaluations += 1;
            stats.steps_accepted += 1;
        } else {
            stats.steps_rejected += 1;
        }
        let factor = if err > 1e-300 { 0.9 * err.powf(-0.2) } else { 5.0 };
        h *= factor.clamp(0.2, 5.0);
        if h < span * 1e-14 {
            return Err(Error::NonConvergence("step size underflow".into()));
        }
    }
    Ok(stats)
}

fn weighted_rms(v: &[Complex64], y0: &[Complex64], y1: &[Complex64], opts: &OdeOptions) -> f64 {
    let n = v.len().max(1);
    let mut s = 0.0;
    for i in 0..v.len() {
        let scale = opts.atol + opts.rtol * y0[i].norm().max(y1[i].norm());
        let q = v[i].norm() / scale;
        s += q * q;
    }
    (s / n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_decay_exact() {
        let mut y = vec![Complex64::new(1.0, 0.0)];
        let mut rhs = |_t: f64, y: &[Complex64], dy: &mut [Complex64]| {
            dy[0] = -0.7 * y[0];
        };
        let opts = OdeOptions { rtol: 1e-10, atol: 1e-14, ..Default::default() };
        integrate(&mut rhs, 0.0, 3.0, &mut y, &opts, &mut |_| {}).unwrap();
        assert_relative_eq!(y[0].re, (-2.1f64).exp(), max_relative = 1e-9);
    }

    #[test]
    fn oscillator_phase_accuracy() {
        // y′ = −iωy with ω = 40 over t = 10: 400 radians of phase
        let omega = 40.0;
        let mut y = vec![Complex64::new(1.0, 0.0)];
        let mut rhs = |_t: f64, y: &[Complex64], dy: &mut [Complex64]| {
            dy[0] = Complex64::new(0.0, -omega) * y[0];
        };
        let opts = OdeOptions { rtol: 1e-10, atol: 1e-14, ..Default::default() };
        integrate(&mut rhs, 0.0, 10.0, &mut y, &opts, &mut |_| {}).unwrap();
        let expect = Complex64::from_polar(1.0, -omega * 10.0);
        assert!((y[0] - expect).norm() < 1e-6);
        assert_relative_eq!(y[0].norm(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn time_dependent_coefficient_exact() {
        // y′ = i·cos(t)·y → y(t) = exp(i·sin t)
        let mut y = vec![Complex64::new(1.0, 0.0)];
        let mut rhs = |t: f64, y: &[Complex64], dy: &mut [Complex64]| {
            dy[0] = Complex64::new(0.0, t.cos()) * y[0];
        };
        let opts = OdeOptions { rtol: 1e-11, atol: 1e-14, ..Default::default() };
        integrate(&mut rhs, 0.0, 7.0, &mut y, &opts, &mut |_| {}).unwrap();
        let expect = Complex64::from_polar(1.0, 7.0f64.sin());
        assert!((y[0] - expect).norm() < 1e-8);
    }

    #[test]
    fn post_step_hook_runs() {
        let mut y = vec![Complex64::new(1.0, 0.0)];
        let mut rhs = |_t: f64, y: &[Complex64], dy: &mut [Complex64]| {
            dy[0] = -y[0];
        };
        let mut count = 0usize;
        integrate(&mut rhs, 0.0, 1.0, &mut y, &OdeOptions::default(), &mut |_| count += 1)
            .unwrap();
        assert!(count > 0);
    }
}
