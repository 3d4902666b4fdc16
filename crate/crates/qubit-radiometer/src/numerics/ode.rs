//! Adaptive Dormand–Prince 5(4) integrator for small complex-valued systems.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Integrator tolerances and limits.
#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the step size, if any.
    pub max_step: Option<f64>,
    /// Hard cap on accepted + rejected steps.
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            max_step: None,
            max_steps: 10_000_000,
        }
    }
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [&[f64]; 6] = [
    &[1.0 / 5.0],
    &[3.0 / 40.0, 9.0 / 40.0],
    &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
    &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
    &[
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
    ],
    &[
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// Difference between the 5th-order and embedded 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrate `dy/dt = rhs(t, y)` from `t0` to `t1` (t1 > t0).
///
/// `guard` is evaluated on every accepted state and may abort the
/// integration (used to detect loss of ansatz integrability).
pub fn integrate<const N: usize, F, G>(
    rhs: F,
    t0: f64,
    t1: f64,
    y0: [Complex64; N],
    opts: &OdeOptions,
    guard: G,
) -> Result<[Complex64; N]>
where
    F: Fn(f64, &[Complex64; N]) -> [Complex64; N],
    G: Fn(&[Complex64; N]) -> Result<()>,
{
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(y0);
    }
    if !(span > 0.0) {
        return Err(Error::Integration(format!(
            "integration span must be positive (t0={t0}, t1={t1})"
        )));
    }
    let hmax = opts.max_step.unwrap_or(span).min(span);
    let mut h = (span / 100.0).min(hmax);
    let mut t = t0;
    let mut y = y0;
    let mut k: [[Complex64; N]; 7] = [[Complex64::new(0.0, 0.0); N]; 7];
    k[0] = rhs(t, &y);

    let mut steps = 0usize;
    while t < t1 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::Integration(format!(
                "step limit {} exceeded at t = {t:e}",
                opts.max_steps
            )));
        }
        if t + h > t1 {
            h = t1 - t;
        }

        for stage in 0..6 {
            let mut ys = y;
            for (j, aj) in A[stage].iter().enumerate() {
                if *aj != 0.0 {
                    for i in 0..N {
                        ys[i] += k[j][i] * (*aj * h);
                    }
                }
            }
            k[stage + 1] = rhs(t + C[stage] * h, &ys);
        }
        // FSAL: stage 6 evaluated the 5th-order solution's derivative.
        let mut ynew = y;
        for (j, aj) in A[5].iter().enumerate() {
            if *aj != 0.0 {
                for i in 0..N {
                    ynew[i] += k[j][i] * (*aj * h);
                }
            }
        }

        let mut err_sq = 0.0;
        let mut finite = true;
        for i in 0..N {
            let mut e = Complex64::new(0.0, 0.0);
            for (j, ej) in E.iter().enumerate() {
                if *ej != 0.0 {
                    e += k[j][i] * (*ej * h);
                }
            }
            let scale = opts.atol + opts.rtol * y[i].norm().max(ynew[i].norm());
            let r = e.norm() / scale;
            err_sq += r * r;
            finite &= ynew[i].is_finite();
        }
        let err = (err_sq / N as f64).sqrt();

        if finite && err <= 1.0 {
            t += h;
            y = ynew;
            k[0] = k[6];
            guard(&y)?;
        }

        let factor = if finite && err > 0.0 {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else if finite {
            5.0
        } else {
            0.2
        };
        h = (h * factor).min(hmax);
        if h < span * 1e-15 {
            return Err(Error::Integration(format!(
                "step size underflow at t = {t:e}"
            )));
        }
    }
    Ok(y)
}
