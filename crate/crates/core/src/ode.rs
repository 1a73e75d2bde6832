//! Adaptive Dormand–Prince 5(4) integrator for small autonomous-in-form systems.
//!
//! The step is clipped so that every requested output abscissa is hit
//! exactly; this gives dense sampling without an interpolant.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    /// Local error allowed per unit length of the step.
    pub tol: f64,
    /// Relative part of the error weight.
    pub rtol: f64,
    pub max_step: f64,
    pub min_step: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            rtol: 1e-12,
            max_step: 0.05,
            min_step: 1e-12,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// 5th minus embedded 4th order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[f64; N], terms: &[(f64, &[f64; N])], h: f64) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        if *c == 0.0 {
            continue;
        }
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrates `y' = f(x, y)` from `xs[0]` (state `y0`) and returns the state
/// at every abscissa in `xs`. `xs` must be strictly monotone.
pub fn integrate<const N: usize, F>(
    f: F,
    y0: [f64; N],
    xs: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<[f64; N]>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let mut out = Vec::with_capacity(xs.len());
    if xs.is_empty() {
        return Ok(out);
    }
    out.push(y0);
    if xs.len() == 1 {
        return Ok(out);
    }
    let dir = (xs[1] - xs[0]).signum();
    let mut x = xs[0];
    let mut y = y0;
    let mut k1 = f(x, &y);
    let mut step = opts.max_step.min((xs[1] - xs[0]).abs());

    for &target in &xs[1..] {
        if (target - x) * dir <= 0.0 {
            return Err(Error::Precondition(
                "output abscissae must be strictly monotone".into(),
            ));
        }
        while (target - x) * dir > 0.0 {
            let remaining = (target - x).abs();
            let last = step >= remaining;
            let h = dir * if last { remaining } else { step };

            let k2 = f(x + C2 * h, &axpy(&y, &[(A21, &k1)], h));
            let k3 = f(x + C3 * h, &axpy(&y, &[(A31, &k1), (A32, &k2)], h));
            let k4 = f(
                x + C4 * h,
                &axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h),
            );
            let k5 = f(
                x + C5 * h,
                &axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h),
            );
            let k6 = f(
                x + h,
                &axpy(
                    &y,
                    &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                    h,
                ),
            );
            let y_new = axpy(
                &y,
                &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
                h,
            );
            let k7 = f(x + h, &y_new);

            let mut err = 0.0f64;
            for i in 0..N {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                        + E7 * k7[i]);
                let scale = opts.tol * h.abs() + opts.rtol * y[i].abs().max(y_new[i].abs());
                err = err.max((e / scale).abs());
            }
            if !err.is_finite() {
                return Err(Error::Overflow(format!(
                    "non-finite state near x = {x:.6}"
                )));
            }

            if err <= 1.0 {
                x = if last { target } else { x + h };
                y = y_new;
                k1 = k7;
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            // Keep the step from growing past the output spacing after a clipped step.
            step = (h.abs() * factor).min(opts.max_step);
            if !last || err > 1.0 {
                if step < opts.min_step {
                    return Err(Error::StepCollapse { x });
                }
            } else {
                step = step.max(opts.min_step);
            }
        }
        out.push(y);
    }
    Ok(out)
}

/// State at the single end point `x1`.
pub fn integrate_to<const N: usize, F>(
    f: F,
    x0: f64,
    y0: [f64; N],
    x1: f64,
    opts: &OdeOptions,
) -> Result<[f64; N]>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let ys = integrate(f, y0, &[x0, x1], opts)?;
    Ok(ys[1])
}

/// `count + 1` equally spaced abscissae from `a` to `b` inclusive, with the
/// end points hit exactly.
pub fn linspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    (0..=count)
        .map(|k| {
            if k == count {
                b
            } else {
                a + (b - a) * (k as f64 / count as f64)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let xs = linspace(0.0, 2.0, 20);
        let ys = integrate(|_, y: &[f64; 1]| [y[0]], [1.0], &xs, &OdeOptions::default()).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((y[0] - x.exp()).abs() < 1e-10 * x.exp(), "{x}: {}", y[0]);
        }
    }

    #[test]
    fn harmonic_oscillator_backwards() {
        let end = integrate_to(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [0.0, 1.0],
            -10.0,
            &OdeOptions::default(),
        )
        .unwrap();
        assert!((end[0] - (-10.0f64).sin()).abs() < 1e-9);
        assert!((end[1] - (-10.0f64).cos()).abs() < 1e-9);
    }

    #[test]
    fn rejects_non_monotone_output() {
        let r = integrate(
            |_, y: &[f64; 1]| [y[0]],
            [1.0],
            &[0.0, 1.0, 0.5],
            &OdeOptions::default(),
        );
        assert!(r.is_err());
    }

    #[test]
    fn linspace_hits_end_points() {
        let xs = linspace(-3.0, 0.7, 37);
        assert_eq!(xs.len(), 38);
        assert_eq!(xs[0], -3.0);
        assert_eq!(xs[37], 0.7);
    }
}
