//! The decaying solution of `−W″ + (x² − λ)W = 0` at `h = 1`, matched to the
//! ground state of `x² + tα` left of the α-bump.

use serde::{Deserialize, Serialize};

use crate::eigensolve::Eigenfunction;
use crate::fit;
use crate::ode::{self, OdeOptions};
use crate::report::Assertion;
use crate::{Error, Result};

/// Point where `W` is matched to the eigenfunction.
pub const MATCH_POINT: f64 = -3.0;
pub const SAMPLE_SPACING: f64 = 1e-3;
/// Sup-norm tolerance of the matching identities.
pub const IDENTITY_TOL: f64 = 1e-7;
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeberSample {
    pub x: f64,
    pub w: f64,
    pub dw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeberSolution {
    pub lambda1: f64,
    pub x_left: f64,
    pub x_right: f64,
    pub samples: Vec<WeberSample>,
    /// The first critical point sits at `−a`.
    pub a: f64,
    pub critical_points: Vec<f64>,
    pub zeros: Vec<f64>,
    /// First zero right of 3.
    pub z0: Option<f64>,
    /// `u₁(0)/W(0)` when built from an eigenfunction.
    pub c: Option<f64>,
    /// Slope of `log W + x²/2` against `log|x|` on `[x_left, x_left + 2]`.
    pub decay_power: f64,
    /// `(power, rate)` from `log|W| ≈ k + power·log x + rate·x²` on
    /// `[x_right − 2, x_right]`.
    pub growth_exponent_fit: (f64, f64),
    /// Slope of `log|W| − x²/2` against `log x` on the same window.
    pub growth_power: f64,
}

/// Quintic Hermite interpolation on `[0, d]` from values and first two
/// derivatives at both ends.
fn hermite5(d: f64, left: [f64; 3], right: [f64; 3], t: f64) -> f64 {
    let (t2, t3) = (t * t, t * t * t);
    let (t4, t5) = (t3 * t, t3 * t2);
    let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
    let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
    let h2 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
    let h3 = 0.5 * (t3 - 2.0 * t4 + t5);
    let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
    let h5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
    left[0] * h0
        + d * left[1] * h1
        + d * d * left[2] * h2
        + d * d * right[2] * h3
        + d * right[1] * h4
        + right[0] * h5
}

impl WeberSolution {
    fn q(&self, x: f64) -> f64 {
        x * x - self.lambda1
    }

    /// `[W, W′, W″, W‴, W⁗]` at sample `k`, the higher ones from the equation.
    fn jet(&self, k: usize) -> [f64; 5] {
        let s = self.samples[k];
        let q = self.q(s.x);
        let d2 = q * s.w;
        let d3 = 2.0 * s.x * s.w + q * s.dw;
        let d4 = 2.0 * s.w + 4.0 * s.x * s.dw + q * d2;
        [s.w, s.dw, d2, d3, d4]
    }

    fn locate(&self, x: f64) -> Option<(usize, f64, f64)> {
        let n = self.samples.len();
        if n < 2 || x < self.x_left || x > self.x_right {
            return None;
        }
        let step = (self.x_right - self.x_left) / (n - 1) as f64;
        let k = (((x - self.x_left) / step).floor() as usize).min(n - 2);
        let d = self.samples[k + 1].x - self.samples[k].x;
        Some((k, d, (x - self.samples[k].x) / d))
    }

    /// `W(x)` between samples.
    pub fn eval(&self, x: f64) -> Option<f64> {
        let (k, d, t) = self.locate(x)?;
        let (l, r) = (self.jet(k), self.jet(k + 1));
        Some(hermite5(d, [l[0], l[1], l[2]], [r[0], r[1], r[2]], t))
    }

    /// `W′(x)` between samples.
    pub fn eval_derivative(&self, x: f64) -> Option<f64> {
        let (k, d, t) = self.locate(x)?;
        let (l, r) = (self.jet(k), self.jet(k + 1));
        Some(hermite5(d, [l[1], l[2], l[3]], [r[1], r[2], r[3]], t))
    }

    fn is_boundary_case(&self) -> bool {
        (self.lambda1 - 1.0).abs() <= 1e-12
    }

    /// Largest `|W″ − (x² − λ)W|` over interior samples, with `W″` from a
    /// fourth-order central difference of `W′`, relative to
    /// `|W|(1 + |x² − λ|) + |W′|`.
    pub fn ode_residual(&self) -> (f64, f64) {
        let s = &self.samples;
        let (mut worst, mut at) = (0.0f64, self.x_left);
        for k in 2..s.len().saturating_sub(2) {
            let d = s[k + 1].x - s[k].x;
            let d2 = (-s[k + 2].dw + 8.0 * s[k + 1].dw - 8.0 * s[k - 1].dw + s[k - 2].dw) / (12.0 * d);
            let q = self.q(s[k].x);
            let scale = s[k].w.abs() * (1.0 + q.abs()) + s[k].dw.abs();
            let r = (d2 - q * s[k].w).abs() / scale;
            if r > worst {
                worst = r;
                at = s[k].x;
            }
        }
        (worst, at)
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "W", "dW"])?;
        for s in &self.samples {
            w.write_record(&[
                format!("{:.17e}", s.x),
                format!("{:.17e}", s.w),
                format!("{:.17e}", s.dw),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Asymptotic seed `(√2|x|)^ν e^{−x²/2}(1 − ν(ν−1)/(4x²))`, `ν = (λ−1)/2`,
/// and its derivative, divided by the leading factor so the seed is O(1).
fn seed(lambda: f64, x: f64) -> (f64, f64) {
    let nu = 0.5 * (lambda - 1.0);
    // With z = −√2 x, W(x) = f(z) = z^ν e^{−z²/4} (1 − ν(ν−1)/(2z²)).
    let z = -std::f64::consts::SQRT_2 * x;
    let corr = 1.0 - nu * (nu - 1.0) / (2.0 * z * z);
    let dcorr = nu * (nu - 1.0) / (z * z * z);
    let df = (nu / z - 0.5 * z) * corr + dcorr;
    (corr, -std::f64::consts::SQRT_2 * df)
}

fn zero_crossings(xs: &[f64], vals: &[f64], refine: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let mut out = Vec::new();
    for k in 0..vals.len().saturating_sub(1) {
        let (a, b) = (vals[k], vals[k + 1]);
        if (a > 0.0) != (b > 0.0) {
            out.push(refine(xs[k], xs[k + 1]));
        }
    }
    out
}

fn bisect_root(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let positive_lo = f(lo) > 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == positive_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Integrates rightward from `x_left` and scales so that `W(−3) = w_at_match`.
///
/// `1 ≤ λ < 3`, `x_left ≤ −8`, `x_right > 3`.
pub fn solve_weber_normalized(
    lambda1: f64,
    x_left: f64,
    x_right: f64,
    w_at_match: f64,
) -> Result<WeberSolution> {
    solve_weber_sampled(lambda1, x_left, x_right, w_at_match, SAMPLE_SPACING)
}

/// [`solve_weber_normalized`] with a chosen sample spacing, which also caps
/// the integrator step.
pub fn solve_weber_sampled(
    lambda1: f64,
    x_left: f64,
    x_right: f64,
    w_at_match: f64,
    spacing: f64,
) -> Result<WeberSolution> {
    if !(spacing > 0.0 && spacing <= 0.01) {
        return Err(Error::Precondition(format!("sample spacing {spacing} outside (0, 0.01]")));
    }
    if !(1.0..3.0).contains(&lambda1) {
        return Err(Error::Precondition(format!(
            "λ₁ = {lambda1} outside [1, 3)"
        )));
    }
    if !(x_left <= -8.0) || !(x_right > 3.0) {
        return Err(Error::Precondition(format!(
            "need x_left <= -8 and x_right > 3, got [{x_left}, {x_right}]"
        )));
    }
    if !(w_at_match.is_finite() && w_at_match > 0.0) {
        return Err(Error::Precondition(format!(
            "normalisation value {w_at_match} must be positive"
        )));
    }
    // W is carried relative to its seed magnitude; the largest value reached is
    // about e^{(x_left² + x_right²)/2} times the seed.
    let log_span = 0.5 * (x_left * x_left + x_right * x_right);
    if log_span > 650.0 {
        return Err(Error::Overflow(format!(
            "[{x_left}, {x_right}] spans e^{log_span:.0}, beyond double range"
        )));
    }
    let count = ((x_right - x_left) / spacing).round().max(1.0) as usize;
    let xs: Vec<f64> = (0..=count)
        .map(|k| (x_left * (count - k) as f64 + x_right * k as f64) / count as f64)
        .collect();
    let (w0, dw0) = seed(lambda1, x_left);
    let opts = OdeOptions {
        tol: 1e-13,
        rtol: 1e-13,
        max_step: spacing,
        ..OdeOptions::default()
    };
    let ys = ode::integrate(
        |x, y: &[f64; 2]| [y[1], (x * x - lambda1) * y[0]],
        [w0, dw0],
        &xs,
        &opts,
    )?;
    let k_match = xs
        .iter()
        .position(|&x| (x - MATCH_POINT).abs() < 1e-12)
        .ok_or_else(|| Error::Precondition("sample grid misses x = -3".into()))?;
    let scale = w_at_match / ys[k_match][0];
    let samples: Vec<WeberSample> = xs
        .iter()
        .zip(&ys)
        .map(|(&x, y)| WeberSample {
            x,
            w: scale * y[0],
            dw: scale * y[1],
        })
        .collect();
    if samples.iter().any(|s| !s.w.is_finite() || !s.dw.is_finite()) {
        return Err(Error::Overflow("non-finite Weber samples".into()));
    }

    let mut sol = WeberSolution {
        lambda1,
        x_left,
        x_right,
        samples,
        a: f64::NAN,
        critical_points: Vec::new(),
        zeros: Vec::new(),
        z0: None,
        c: None,
        decay_power: f64::NAN,
        growth_exponent_fit: (f64::NAN, f64::NAN),
        growth_power: f64::NAN,
    };
    let ws: Vec<f64> = sol.samples.iter().map(|s| s.w).collect();
    let dws: Vec<f64> = sol.samples.iter().map(|s| s.dw).collect();
    let critical = zero_crossings(&xs, &dws, |a, b| {
        bisect_root(|x| sol.eval_derivative(x).unwrap_or(0.0), a, b)
    });
    let zeros = zero_crossings(&xs, &ws, |a, b| bisect_root(|x| sol.eval(x).unwrap_or(0.0), a, b));
    sol.a = critical.first().map_or(f64::NAN, |x| -x);
    sol.z0 = zeros.iter().copied().find(|&z| z > 3.0);
    sol.critical_points = critical;
    sol.zeros = zeros;

    let window = |lo: f64, hi: f64| -> Vec<WeberSample> {
        sol.samples
            .iter()
            .copied()
            .filter(|s| s.x >= lo - 1e-12 && s.x <= hi + 1e-12 && s.w != 0.0)
            .collect()
    };
    let left = window(x_left, x_left + 2.0);
    let lx: Vec<f64> = left.iter().map(|s| s.x.abs().ln()).collect();
    let ly: Vec<f64> = left.iter().map(|s| s.w.abs().ln() + 0.5 * s.x * s.x).collect();
    sol.decay_power = fit::line(&lx, &ly)?.slope;

    let right = window((x_right - 2.0).max(0.5), x_right);
    let rx: Vec<f64> = right.iter().map(|s| s.x).collect();
    let ry: Vec<f64> = right.iter().map(|s| s.w.abs().ln()).collect();
    let rl: Vec<f64> = rx.iter().map(|x| x.ln()).collect();
    let shifted: Vec<f64> = rx.iter().zip(&ry).map(|(x, y)| y - 0.5 * x * x).collect();
    sol.growth_power = fit::line(&rl, &shifted)?.slope;
    let (coef, _) = fit::linear_model(&rx, &ry, &[&|_| 1.0, &|x: f64| x.ln(), &|x: f64| x * x])?;
    sol.growth_exponent_fit = (coef[1], coef[2]);
    Ok(sol)
}

/// `W` normalised to `u₁(−3)`, with `c = u₁(0)/W(0)` recorded.
pub fn solve_weber(lambda1: f64, x_left: f64, x_right: f64, u1: &Eigenfunction) -> Result<WeberSolution> {
    let u_match = u1
        .at(MATCH_POINT)
        .ok_or_else(|| Error::Precondition("eigenfunction grid misses x = -3".into()))?;
    let mut sol = solve_weber_normalized(lambda1, x_left, x_right, u_match)?;
    let u0 = u1
        .at(0.0)
        .ok_or_else(|| Error::Precondition("eigenfunction grid misses x = 0".into()))?;
    let w0 = sol.eval(0.0).expect("0 lies inside the solved range");
    sol.c = Some(u0 / w0);
    Ok(sol)
}

/// The five shape properties plus the equation residual.
pub fn check_properties(w: &WeberSolution) -> Vec<Assertion> {
    let mut out = Vec::new();
    let boundary = w.is_boundary_case();

    let (res, res_at) = w.ode_residual();
    out.push(
        Assertion::at_most("Weber equation residual", "ODE residual", res, RESIDUAL_TOL)
            .with_detail_suffix(format!("worst at x = {res_at:.3}")),
    );

    let mut min_w = f64::INFINITY;
    let mut min_at = w.x_left;
    for s in w.samples.iter().filter(|s| s.x <= 3.0) {
        if s.w < min_w {
            min_w = s.w;
            min_at = s.x;
        }
    }
    out.push(Assertion::new(
        "W > 0 on [x_left, 3]",
        "positivity",
        min_w > 0.0,
        format!("min W = {min_w:.6e} at x = {min_at:.4}"),
    ));

    let unique = w.critical_points.len() == 1;
    let mut detail = format!("critical points at {:?}", w.critical_points);
    let mut ok = unique;
    if unique {
        detail.push_str(&format!(", a = {:.9}", w.a));
        if boundary {
            ok &= w.a.abs() < 1e-9;
        } else {
            ok &= w.a > 0.0 && w.a.abs() < w.lambda1.sqrt();
            detail.push_str(&format!(", sqrt(lambda1) = {:.9}", w.lambda1.sqrt()));
        }
    }
    out.push(Assertion::new("unique critical point", "single maximum at -a", ok, detail));

    if boundary {
        // A growing component of relative size δ = |λ₁ − 1| (or rounding)
        // overtakes the Gaussian near x = √ln(1/δ); zeros past that point
        // belong to the perturbed λ, not to the Gaussian.
        let delta = (w.lambda1 - 1.0).abs().max(f64::EPSILON);
        let resolved = (1.0 / delta).ln().sqrt() - 0.5;
        let early: Vec<f64> = w.zeros.iter().copied().filter(|&z| z <= resolved).collect();
        out.push(Assertion::new(
            "single zero beyond 3",
            "zero and divergence",
            early.is_empty(),
            format!(
                "lambda1 = 1 boundary case: W is the Gaussian and has no zero up to x = {resolved:.2}; zeros at {:?}",
                w.zeros
            ),
        ));
    } else {
        let detail = format!("zeros at {:?}", w.zeros);
        let mut ok = w.zeros.len() == 1 && w.z0.is_some();
        if let Some(z0) = w.z0 {
            let beyond: Vec<&WeberSample> = w.samples.iter().filter(|s| s.x > z0).collect();
            ok &= beyond.iter().all(|s| s.w < 0.0 && s.dw < 0.0);
            ok &= beyond.last().is_some_and(|s| s.w.abs() > 1e3 * w.samples[0].w.abs());
        }
        out.push(Assertion::new("single zero beyond 3", "zero and divergence", ok, detail));
    }

    let expected = 0.5 * (w.lambda1 - 1.0);
    let tol = 0.05 * expected.abs() + 1e-6;
    out.push(
        Assertion::at_most(
            "decay exponent",
            "left asymptotics",
            (w.decay_power - expected).abs(),
            tol,
        )
        .with_detail_suffix(format!("fitted {:.6e}, expected {expected:.6e}", w.decay_power)),
    );

    if boundary {
        out.push(Assertion::new(
            "growth exponent",
            "right asymptotics",
            true,
            "lambda1 = 1 boundary case: no growing component".into(),
        ));
    } else {
        let expected = -0.5 * (w.lambda1 + 1.0);
        out.push(
            Assertion::at_most(
                "growth exponent",
                "right asymptotics",
                (w.growth_power - expected).abs(),
                0.05 * expected.abs(),
            )
            .with_detail_suffix(format!(
                "fitted {:.6}, expected {expected:.6}; rate {:.6}",
                w.growth_power, w.growth_exponent_fit.1
            )),
        );
    }
    out
}

/// Outcome of [`compute_c`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    pub c: f64,
    /// `sup |u₁ − W|` on `[x_left, −3]`, and where.
    pub left_mismatch: (f64, f64),
    /// `sup |u₁(x) − c W(−x)|` on `[−2, 4]`, and where.
    pub right_mismatch: (f64, f64),
    /// `|u₁′(−a) + c W′(a)|` at the grid node nearest `−a`.
    pub derivative_mismatch: f64,
    pub assertions: Vec<Assertion>,
}

impl Matching {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }
}

/// Fourth-order central derivative of a grid function at node `i`.
fn grid_derivative(u: &Eigenfunction, i: usize) -> Option<f64> {
    if i < 2 || i + 2 >= u.values.len() {
        return None;
    }
    let v = &u.values;
    Some((-v[i + 2] + 8.0 * v[i + 1] - 8.0 * v[i - 1] + v[i - 2]) / (12.0 * u.grid.dx()))
}

/// `c = u₁(0)/W(0)` and the two matching identities `u₁ = W` left of the
/// α-bump and `u₁ = c W(−·)` right of it, plus the derivative identity at `−a`.
pub fn compute_c(w: &WeberSolution, u1: &Eigenfunction) -> Result<Matching> {
    let u_match = u1
        .at(MATCH_POINT)
        .ok_or_else(|| Error::Precondition("eigenfunction grid misses x = -3".into()))?;
    let w_match = w.eval(MATCH_POINT).expect("-3 lies inside the solved range");
    if (u_match - w_match).abs() > 1e-12 * u_match.abs() {
        return Err(Error::Precondition(format!(
            "W and u1 are not normalised at -3: {w_match} vs {u_match}"
        )));
    }
    let u0 = u1
        .at(0.0)
        .ok_or_else(|| Error::Precondition("eigenfunction grid misses x = 0".into()))?;
    let c = u0 / w.eval(0.0).expect("0 lies inside the solved range");

    let mut left = (0.0f64, f64::NAN);
    let mut right = (0.0f64, f64::NAN);
    for (x, u) in u1.points() {
        if x >= w.x_left && x <= MATCH_POINT + 1e-12 {
            let d = (u - w.eval(x).expect("inside range")).abs();
            if d > left.0 {
                left = (d, x);
            }
        }
        if (-2.0 - 1e-12..=4.0 + 1e-12).contains(&x) {
            let Some(wr) = w.eval(-x) else { continue };
            let d = (u - c * wr).abs();
            if d > right.0 {
                right = (d, x);
            }
        }
    }

    let i = ((-w.a - u1.grid.x(0)) / u1.grid.dx()).round() as usize;
    let xi = u1.grid.x(i);
    let du = grid_derivative(u1, i)
        .ok_or_else(|| Error::Precondition("critical point too close to the grid edge".into()))?;
    let dw = w
        .eval_derivative(-xi)
        .ok_or_else(|| Error::Precondition("reflected critical point outside W range".into()))?;
    let derivative_mismatch = (du + c * dw).abs();

    let assertions = vec![
        Assertion::at_most(
            "u1 = W on [x_left, -3]",
            "left matching identity",
            left.0,
            IDENTITY_TOL,
        )
        .with_detail_suffix(format!("worst at x = {:.3}", left.1)),
        Assertion::at_most(
            "u1 = c W(-x) on [-2, 4]",
            "right matching identity",
            right.0,
            IDENTITY_TOL,
        )
        .with_detail_suffix(format!("worst at x = {:.3}", right.1)),
        Assertion::at_most(
            "u1'(-a) = -c W'(a)",
            "derivative matching identity",
            derivative_mismatch,
            IDENTITY_TOL,
        )
        .with_detail_suffix(format!("at grid node x = {xi:.4}, a = {:.6}", w.a)),
    ];
    Ok(Matching {
        c,
        left_mismatch: left,
        right_mismatch: right,
        derivative_mismatch,
        assertions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_is_exact_for_quintics() {
        let p = |x: f64| 1.0 - 2.0 * x + 0.5 * x.powi(3) + x.powi(5);
        let dp = |x: f64| -2.0 + 1.5 * x * x + 5.0 * x.powi(4);
        let d2p = |x: f64| 3.0 * x + 20.0 * x.powi(3);
        let (a, b) = (0.3, 0.8);
        for k in 0..=10 {
            let t = k as f64 / 10.0;
            let x = a + t * (b - a);
            let v = hermite5(b - a, [p(a), dp(a), d2p(a)], [p(b), dp(b), d2p(b)], t);
            assert!((v - p(x)).abs() < 1e-14, "{x}");
        }
    }

    #[test]
    fn gaussian_at_the_boundary_case() {
        let u_match = (-4.5f64).exp();
        let w = solve_weber_normalized(1.0, -8.0, 4.0, u_match).unwrap();
        // The growing partner amplifies rounding like e^{x²} to the right of 0,
        // so agreement is only checked up to x = 2.
        for s in w.samples.iter().filter(|s| s.x >= -6.0 && s.x <= 2.0) {
            let exact = (-0.5 * s.x * s.x).exp();
            assert!((s.w - exact).abs() < 1e-10 * exact, "{} {}", s.x, s.w);
        }
        assert_eq!(w.critical_points.len(), 1);
        assert!(w.a.abs() < 1e-9, "{}", w.a);
        assert!(w.zeros.is_empty());
        let report = check_properties(&w);
        assert!(report.iter().all(|a| a.passed), "{report:#?}");
    }

    #[test]
    fn preconditions() {
        assert!(solve_weber_normalized(3.0, -8.0, 8.0, 1.0).is_err());
        assert!(solve_weber_normalized(1.5, -7.0, 8.0, 1.0).is_err());
        assert!(solve_weber_normalized(1.5, -8.0, 8.0, -1.0).is_err());
        assert!(matches!(
            solve_weber_normalized(1.5, -8.0, 40.0, 1.0),
            Err(Error::Overflow(_))
        ));
    }

    #[test]
    fn interpolant_matches_samples_and_equation() {
        let w = solve_weber_normalized(1.2, -8.0, 8.0, 0.01).unwrap();
        let k = 7000;
        let s = w.samples[k];
        assert_eq!(w.eval(s.x).unwrap(), s.w);
        // Between samples: compare with a direct solve to that abscissa.
        let mid = 0.5 * (w.samples[k].x + w.samples[k + 1].x);
        let y = ode::integrate_to(
            |x, y: &[f64; 2]| [y[1], (x * x - 1.2) * y[0]],
            s.x,
            [s.w, s.dw],
            mid,
            &OdeOptions {
                tol: 1e-15,
                rtol: 1e-15,
                ..OdeOptions::default()
            },
        )
        .unwrap();
        assert!((w.eval(mid).unwrap() - y[0]).abs() < 1e-13 * y[0].abs().max(1e-3));
        assert!((w.eval_derivative(mid).unwrap() - y[1]).abs() < 1e-12 * y[1].abs().max(1e-3));
    }

    #[test]
    fn shape_needs_lambda_near_one() {
        // Far from 1 the decaying solution crosses zero well left of 3.
        let w = solve_weber_normalized(1.5, -8.0, 8.0, 0.01).unwrap();
        let first = w.zeros[0];
        assert!(first > 0.8 && first < 1.1, "{first}");
        let report = check_properties(&w);
        assert!(report.iter().any(|a| !a.passed));
    }

    #[test]
    fn residual_is_small() {
        let w = solve_weber_normalized(1.3, -8.0, 8.0, 0.01).unwrap();
        let (r, _) = w.ode_residual();
        assert!(r < RESIDUAL_TOL, "{r}");
    }
}
