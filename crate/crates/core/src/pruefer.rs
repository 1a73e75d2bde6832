//! Prüfer angle integration, an independent shooting eigensolver, and the
//! angle/solution comparison checks on the left of the Weber maximum.
//!
//! With `u = r sin θ`, `u′ = r cos θ`, the equation `u″ + Q u = 0` becomes
//! `θ′ = Q sin²θ + cos²θ` and `(log r)′ = (1 − Q) sin θ cos θ`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::ode::{self, OdeOptions};
use crate::potential::PotentialSpec;
use crate::report::Assertion;
use crate::{Error, Result};

/// Sample spacing of traces.
pub const SAMPLE_SPACING: f64 = 1e-3;
/// Slack for the comparison inequalities.
pub const COMPARISON_TOL: f64 = 1e-9;

/// Coefficient `Q` of `u″ + Q u = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CoefficientQ {
    Constant(f64),
    /// `(lambda − V(x))/h²`.
    Schroedinger {
        lambda: f64,
        h: f64,
        potential: PotentialSpec,
    },
}

impl CoefficientQ {
    /// `λ − x²` at `h = 1`.
    pub fn harmonic(lambda: f64) -> Self {
        Self::Schroedinger {
            lambda,
            h: 1.0,
            potential: PotentialSpec::harmonic(),
        }
    }

    /// `λ − V(x)` at `h = 1`.
    pub fn with_potential(lambda: f64, potential: PotentialSpec) -> Self {
        Self::Schroedinger {
            lambda,
            h: 1.0,
            potential,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Constant(q) => *q,
            Self::Schroedinger {
                lambda,
                h,
                potential,
            } => (lambda - potential.eval(x)) / (h * h),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrueferSample {
    pub x: f64,
    pub theta: f64,
    pub log_r: f64,
}

/// Angle path sampled on a uniform grid from `start.0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrueferTrace {
    pub q: CoefficientQ,
    pub start: (f64, f64),
    pub samples: Vec<PrueferSample>,
}

impl PrueferTrace {
    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.x)
    }

    pub fn end(&self) -> f64 {
        self.samples.last().map_or(self.start.0, |s| s.x)
    }

    /// Index of the sample at `x`, if `x` is (to rounding) a sample point.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let n = self.samples.len();
        if n < 2 {
            return (n == 1 && (self.samples[0].x - x).abs() < 1e-12).then_some(0);
        }
        let step = (self.end() - self.start.0) / (n - 1) as f64;
        let k = ((x - self.start.0) / step).round();
        if k < 0.0 || k as usize >= n {
            return None;
        }
        let k = k as usize;
        ((self.samples[k].x - x).abs() <= 1e-9 * step.abs().max(1.0)).then_some(k)
    }

    /// Number of interior zeros of `u`: multiples of π strictly crossed.
    pub fn zero_count(&self) -> usize {
        let mut count = 0;
        for w in self.samples.windows(2) {
            let (a, b) = ((w[0].theta / PI).floor(), (w[1].theta / PI).floor());
            if b > a {
                count += (b - a) as usize;
            }
        }
        count
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "theta", "log_r"])?;
        for s in &self.samples {
            w.write_record(&[
                format!("{:.17e}", s.x),
                format!("{:.17e}", s.theta),
                format!("{:.17e}", s.log_r),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `count + 1` points from `x0` to `x1` with spacing at most `spacing`,
/// computed from integer weights so that the end points are exact.
fn sample_points(x0: f64, x1: f64, spacing: f64) -> Vec<f64> {
    let count = (((x1 - x0) / spacing) - 1e-9).ceil().max(1.0) as usize;
    (0..=count)
        .map(|k| (x0 * (count - k) as f64 + x1 * k as f64) / count as f64)
        .collect()
}

fn angle_rhs(q: &CoefficientQ) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] + '_ {
    move |x, y| {
        let (s, c) = y[0].sin_cos();
        let qv = q.eval(x);
        [qv * s * s + c * c, (1.0 - qv) * s * c]
    }
}

/// Integrates the angle equation from `(x0, θ0)` to `x1` with default
/// tolerances, sampled every [`SAMPLE_SPACING`]. `log r` starts at 0.
pub fn integrate_angle(q: CoefficientQ, x0: f64, theta0: f64, x1: f64) -> Result<PrueferTrace> {
    integrate_angle_with(q, x0, theta0, x1, SAMPLE_SPACING, &OdeOptions::default())
}

pub fn integrate_angle_with(
    q: CoefficientQ,
    x0: f64,
    theta0: f64,
    x1: f64,
    spacing: f64,
    opts: &OdeOptions,
) -> Result<PrueferTrace> {
    if !(x0 < x1) {
        return Err(Error::Precondition(format!(
            "angle integration needs x0 < x1, got {x0} and {x1}"
        )));
    }
    if !(spacing > 0.0) {
        return Err(Error::Precondition("sample spacing must be positive".into()));
    }
    let xs = sample_points(x0, x1, spacing);
    let ys = ode::integrate(angle_rhs(&q), [theta0, 0.0], &xs, opts)?;
    Ok(PrueferTrace {
        q,
        start: (x0, theta0),
        samples: xs
            .iter()
            .zip(&ys)
            .map(|(&x, y)| PrueferSample {
                x,
                theta: y[0],
                log_r: y[1],
            })
            .collect(),
    })
}

/// `θ(x1)` alone.
pub fn final_angle(q: &CoefficientQ, x0: f64, theta0: f64, x1: f64, opts: &OdeOptions) -> Result<f64> {
    let y = ode::integrate_to(
        |x, y: &[f64; 1]| {
            let (s, c) = y[0].sin_cos();
            [q.eval(x) * s * s + c * c]
        },
        x0,
        [theta0],
        x1,
        opts,
    )?;
    Ok(y[0])
}

/// Shooting eigenvalue with a resolution estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shot {
    pub j: usize,
    pub lambda: f64,
    /// `|λ(tol) − λ(100·tol)|` plus the bisection width.
    pub error_estimate: f64,
}

fn bisect_shot(
    p: &PotentialSpec,
    h: f64,
    j: usize,
    half_length: f64,
    opts: &OdeOptions,
) -> Result<(f64, f64)> {
    let target = j as f64 * PI;
    let angle = |lambda: f64| {
        let q = CoefficientQ::Schroedinger {
            lambda,
            h,
            potential: *p,
        };
        final_angle(&q, -half_length, 0.0, half_length, opts)
    };
    // V ≥ x² puts λ_j above (2j − 1)h; V ≤ x² + t·max α + ε·max β bounds it above.
    let bump_max = p.t * p.alpha.amplitude.max(0.0) + p.eps * p.beta.amplitude.max(0.0);
    let mut lo = (2 * j - 2) as f64 * h;
    let mut hi = (2 * j) as f64 * h + bump_max;
    if angle(lo)? >= target || angle(hi)? < target {
        return Err(Error::Bracket(format!(
            "eigenvalue {j} not bracketed by [{lo}, {hi}] at h = {h}"
        )));
    }
    let tol = 1e-13 * hi.max(1.0);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if angle(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi), hi - lo))
}

/// `j`-th Dirichlet eigenvalue on `[−L, L]` (1-based) by bisection on
/// `θ(L) − jπ` with `θ(−L) = 0`.
pub fn shoot_eigenvalue(p: &PotentialSpec, h: f64, j: usize, half_length: f64) -> Result<Shot> {
    if j == 0 {
        return Err(Error::Precondition("eigenvalue index is 1-based".into()));
    }
    if !(h > 0.0) || !(half_length > 0.0) {
        return Err(Error::Precondition(format!(
            "need h > 0 and L > 0, got h = {h}, L = {half_length}"
        )));
    }
    let opts = OdeOptions {
        tol: 1e-12,
        rtol: 1e-13,
        ..OdeOptions::default()
    };
    let loose = OdeOptions {
        tol: 1e-10,
        rtol: 1e-11,
        ..opts
    };
    let (fine, rough) = rayon::join(
        || bisect_shot(p, h, j, half_length, &opts),
        || bisect_shot(p, h, j, half_length, &loose),
    );
    let (lambda, width) = fine?;
    let (rough, _) = rough?;
    Ok(Shot {
        j,
        lambda,
        error_estimate: (lambda - rough).abs() + width,
    })
}

fn q_ordering(q_big: &CoefficientQ, q_small: &CoefficientQ, x0: f64, x1: f64) -> Result<()> {
    for x in sample_points(x0, x1, SAMPLE_SPACING / 4.0) {
        let (b, s) = (q_big.eval(x), q_small.eval(x));
        if s > b + 1e-14 * b.abs().max(1.0) {
            return Err(Error::Precondition(format!(
                "coefficient ordering fails at x = {x:.6}: {s} > {b}"
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleComparison {
    pub big: PrueferTrace,
    pub small: PrueferTrace,
    /// `min (θ_big − θ_small)` over the samples.
    pub min_margin: f64,
    pub max_margin: f64,
    pub worst_x: f64,
    pub assertion: Assertion,
}

/// Integrates both angles from the same start and checks
/// `θ_small ≤ θ_big + 1e−9` at every sample.
pub fn compare_angles(
    q_big: CoefficientQ,
    q_small: CoefficientQ,
    x0: f64,
    theta0: f64,
    x1: f64,
) -> Result<AngleComparison> {
    q_ordering(&q_big, &q_small, x0, x1)?;
    let (big, small) = rayon::join(
        || integrate_angle(q_big, x0, theta0, x1),
        || integrate_angle(q_small, x0, theta0, x1),
    );
    let (big, small) = (big?, small?);
    let (mut min_margin, mut max_margin, mut worst_x) = (f64::INFINITY, f64::NEG_INFINITY, x0);
    for (b, s) in big.samples.iter().zip(&small.samples) {
        let m = b.theta - s.theta;
        if m < min_margin {
            min_margin = m;
            worst_x = b.x;
        }
        max_margin = max_margin.max(m);
    }
    let assertion = Assertion::new(
        "angle comparison",
        "theta_small <= theta_big",
        min_margin >= -COMPARISON_TOL,
        format!(
            "min(theta_big - theta_small) = {min_margin:.3e} at x = {worst_x:.4}, max = {max_margin:.3e} on [{x0}, {x1}]"
        ),
    )
    .with_margin(min_margin + COMPARISON_TOL);
    Ok(AngleComparison {
        big,
        small,
        min_margin,
        max_margin,
        worst_x,
        assertion,
    })
}

/// Rebuilds `u` on every sample from `(log u)′ = cot θ` with `u(start) = u0`.
///
/// Panels use the end-point corrected trapezoid rule, which is fourth order
/// here because `(cot θ)′ = −(Q + cot²θ)` is available exactly.
pub fn reconstruct(trace: &PrueferTrace, u0: f64) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(trace.samples.len());
    let mut log_u = 0.0;
    let mut prev: Option<(f64, f64, f64)> = None;
    for s in &trace.samples {
        let sin = s.theta.sin();
        if sin.abs() < 1e-12 {
            return Err(Error::Precondition(format!(
                "solution vanishes near x = {:.6}; cot θ is unbounded",
                s.x
            )));
        }
        let cot = s.theta.cos() / sin;
        let dcot = -(trace.q.eval(s.x) + cot * cot);
        if let Some((x, f, df)) = prev {
            let dx = s.x - x;
            log_u += 0.5 * dx * (f + cot) + dx * dx / 12.0 * (df - dcot);
        }
        out.push(u0 * log_u.exp());
        prev = Some((s.x, cot, dcot));
    }
    Ok(out)
}

/// `u = r sin θ` from the carried `log r`, scaled so that `u(start) = u0`.
pub fn reconstruct_polar(trace: &PrueferTrace, u0: f64) -> Vec<f64> {
    let first = &trace.samples[0];
    let scale = u0 / (first.log_r.exp() * first.theta.sin());
    trace
        .samples
        .iter()
        .map(|s| scale * s.log_r.exp() * s.theta.sin())
        .collect()
}

/// Direct solve of `u″ = −Q u` at the abscissae `xs`; returns `(u, u′)`.
pub fn direct_solution(
    q: &CoefficientQ,
    u0: f64,
    du0: f64,
    xs: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<[f64; 2]>> {
    ode::integrate(|x, y: &[f64; 2]| [y[1], -q.eval(x) * y[0]], [u0, du0], xs, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionComparison {
    pub interval: (f64, f64),
    pub xs: Vec<f64>,
    pub u_big: Vec<f64>,
    pub u_small: Vec<f64>,
    /// `min (u_small − u_big)` over the interval.
    pub min_margin: f64,
    pub max_margin: f64,
    /// Largest disagreement between the angle reconstruction and the direct solve.
    pub oracle_mismatch: f64,
    pub assertions: Vec<Assertion>,
}

impl SolutionComparison {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }
}

/// Reconstructs both solutions with `u(start) = u_small_start` and checks
/// `u_small ≥ u_big − 1e−9` on `interval`.
pub fn compare_solutions(
    u_small_start: f64,
    big: &PrueferTrace,
    small: &PrueferTrace,
    interval: (f64, f64),
) -> Result<SolutionComparison> {
    if big.start != small.start || big.samples.len() != small.samples.len() {
        return Err(Error::Precondition(
            "traces must share start point, start angle and sampling".into(),
        ));
    }
    let (x0, theta0) = big.start;
    if !(theta0 > 0.0 && theta0 <= FRAC_PI_2) {
        return Err(Error::Precondition(format!(
            "start angle {theta0} outside (0, π/2]"
        )));
    }
    let (a, b) = interval;
    if a < x0 - 1e-12 || b > big.end() + 1e-12 || a > b {
        return Err(Error::Precondition(format!(
            "interval [{a}, {b}] not inside the traced range [{x0}, {}]",
            big.end()
        )));
    }
    for trace in [big, small] {
        for s in trace.samples.iter().filter(|s| s.x >= a && s.x <= b) {
            if !(s.theta > 0.0 && s.theta <= FRAC_PI_2 + COMPARISON_TOL) {
                return Err(Error::Precondition(format!(
                    "angle {:.12} leaves (0, π/2] at x = {:.6}",
                    s.theta, s.x
                )));
            }
        }
    }

    let u_big_all = reconstruct(big, u_small_start)?;
    let u_small_all = reconstruct(small, u_small_start)?;

    let xs_all: Vec<f64> = big.xs().collect();
    let opts = OdeOptions {
        tol: 1e-12,
        rtol: 1e-13,
        ..OdeOptions::default()
    };
    let du0 = u_small_start * theta0.cos() / theta0.sin();
    let mut oracle_mismatch = 0.0f64;
    for (trace, rebuilt) in [(big, &u_big_all), (small, &u_small_all)] {
        let direct = direct_solution(&trace.q, u_small_start, du0, &xs_all, &opts)?;
        for (d, r) in direct.iter().zip(rebuilt) {
            oracle_mismatch = oracle_mismatch.max((d[0] - r).abs());
        }
    }

    let mut xs = Vec::new();
    let mut u_big = Vec::new();
    let mut u_small = Vec::new();
    let (mut min_margin, mut max_margin, mut worst_x) = (f64::INFINITY, f64::NEG_INFINITY, a);
    for (i, &x) in xs_all.iter().enumerate() {
        if x < a - 1e-12 || x > b + 1e-12 {
            continue;
        }
        let m = u_small_all[i] - u_big_all[i];
        if m < min_margin {
            min_margin = m;
            worst_x = x;
        }
        max_margin = max_margin.max(m);
        xs.push(x);
        u_big.push(u_big_all[i]);
        u_small.push(u_small_all[i]);
    }
    if xs.is_empty() {
        return Err(Error::Precondition(format!(
            "no samples inside [{a}, {b}]"
        )));
    }
    let assertions = vec![
        Assertion::new(
            "solution comparison",
            "u_small >= u_big",
            min_margin >= -COMPARISON_TOL,
            format!(
                "min(u_small - u_big) = {min_margin:.3e} at x = {worst_x:.4}, max = {max_margin:.3e} on [{a:.4}, {b:.4}]"
            ),
        )
        .with_margin(min_margin + COMPARISON_TOL),
        Assertion::at_most(
            "angle reconstruction vs direct solve",
            "reconstruction consistency",
            oracle_mismatch,
            1e-8,
        ),
    ];
    Ok(SolutionComparison {
        interval,
        xs,
        u_big,
        u_small,
        min_margin,
        max_margin,
        oracle_mismatch,
        assertions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    /// Classical RK4 at a fixed step; used as a brute-force reference.
    fn rk4_angle(q: f64, x0: f64, theta0: f64, x1: f64, steps: usize) -> f64 {
        let f = |th: f64| q * th.sin().powi(2) + th.cos().powi(2);
        let h = (x1 - x0) / steps as f64;
        let mut th = theta0;
        for _ in 0..steps {
            let k1 = f(th);
            let k2 = f(th + 0.5 * h * k1);
            let k3 = f(th + 0.5 * h * k2);
            let k4 = f(th + h * k3);
            th += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        th
    }

    #[test]
    fn unit_coefficient_rotates_uniformly() {
        let tr = integrate_angle(CoefficientQ::Constant(1.0), -1.0, 0.3, 2.0).unwrap();
        for s in &tr.samples {
            assert!((s.theta - (0.3 + s.x + 1.0)).abs() < 1e-12, "{}", s.x);
            assert!(s.log_r.abs() < 1e-12);
        }
    }

    #[test]
    fn zero_coefficient_matches_closed_form() {
        // Q = 0: tan θ = tan θ0 + (x − x0).
        let tr = integrate_angle(CoefficientQ::Constant(0.0), 0.0, FRAC_PI_4, 3.0).unwrap();
        let last = tr.samples.last().unwrap();
        assert!((last.theta - 4f64.atan()).abs() < 1e-11);
        assert!((last.theta - rk4_angle(0.0, 0.0, FRAC_PI_4, 3.0, 30_000)).abs() < 1e-11);
        // π/2 is a fixed point.
        let tr = integrate_angle(CoefficientQ::Constant(0.0), 0.0, FRAC_PI_2, 1.0).unwrap();
        assert!(tr.samples.iter().all(|s| (s.theta - FRAC_PI_2).abs() < 1e-14));
    }

    #[test]
    fn integration_is_deterministic() {
        let q = CoefficientQ::harmonic(1.3);
        let a = integrate_angle(q, -3.0, 0.4, 0.0).unwrap();
        let b = integrate_angle(q, -3.0, 0.4, 0.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_reversed_interval() {
        assert!(integrate_angle(CoefficientQ::Constant(1.0), 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn shooting_recovers_harmonic_levels() {
        let p = PotentialSpec::harmonic();
        let s1 = shoot_eigenvalue(&p, 1.0, 1, 8.0).unwrap();
        assert!((s1.lambda - 1.0).abs() < 1e-8, "{s1:?}");
        let s3 = shoot_eigenvalue(&p, 1.0, 3, 8.0).unwrap();
        assert!((s3.lambda - 5.0).abs() < 1e-8, "{s3:?}");
        assert!(s1.error_estimate >= 0.0);
    }

    #[test]
    fn identical_coefficients_give_zero_margin() {
        let q = CoefficientQ::harmonic(1.2);
        let c = compare_angles(q, q, -3.0, 0.5, 0.0).unwrap();
        assert_eq!(c.min_margin, 0.0);
        assert_eq!(c.max_margin, 0.0);
        assert!(c.assertion.passed);
    }

    #[test]
    fn larger_coefficient_turns_faster() {
        let c = compare_angles(
            CoefficientQ::Constant(1.0),
            CoefficientQ::Constant(0.0),
            0.0,
            FRAC_PI_4,
            1.0,
        )
        .unwrap();
        assert!(c.assertion.passed);
        let end_big = FRAC_PI_4 + 1.0;
        let end_small = rk4_angle(0.0, 0.0, FRAC_PI_4, 1.0, 10_000);
        let last = c.big.samples.len() - 1;
        assert!((c.big.samples[last].theta - end_big).abs() < 1e-11);
        assert!((c.small.samples[last].theta - end_small).abs() < 1e-11);
        assert!(c.small.samples[1..].iter().zip(&c.big.samples[1..]).all(|(s, b)| s.theta < b.theta));
    }

    #[test]
    fn ordering_violation_is_rejected() {
        let r = compare_angles(
            CoefficientQ::Constant(0.0),
            CoefficientQ::Constant(1.0),
            0.0,
            0.5,
            1.0,
        );
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn reconstruction_matches_gaussian() {
        // λ = 1: e^{−x²/2} has cot θ = −x.
        let x0 = -3.0;
        let theta0 = (1.0f64 / 3.0).atan();
        let tr = integrate_angle(CoefficientQ::harmonic(1.0), x0, theta0, 0.0).unwrap();
        let u0 = (-4.5f64).exp();
        let u = reconstruct(&tr, u0).unwrap();
        let polar = reconstruct_polar(&tr, u0);
        for ((s, v), p) in tr.samples.iter().zip(&u).zip(&polar) {
            let exact = (-0.5 * s.x * s.x).exp();
            assert!((v - exact).abs() < 1e-10, "{} {v} {exact}", s.x);
            assert!((p - exact).abs() < 1e-9);
        }
    }

    #[test]
    fn identical_equations_give_identical_solutions() {
        let q = CoefficientQ::harmonic(1.1);
        let c = compare_angles(q, q, -3.0, 0.4, -0.2).unwrap();
        let s = compare_solutions(0.01, &c.big, &c.small, (-3.0, -0.2)).unwrap();
        assert_eq!(s.min_margin, 0.0);
        assert!(s.passed(), "{:?}", s.assertions);
    }

    #[test]
    fn angle_outside_quadrant_is_rejected() {
        let q = CoefficientQ::Constant(1.0);
        let c = compare_angles(q, q, 0.0, 1.0, 2.0).unwrap();
        assert!(compare_solutions(1.0, &c.big, &c.small, (0.0, 2.0)).is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let tr = integrate_angle(CoefficientQ::Constant(1.0), 0.0, 0.0, 0.01).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,theta,log_r\n"));
        assert_eq!(text.lines().count(), 1 + tr.samples.len());
    }

    #[test]
    fn zero_count_tracks_multiples_of_pi() {
        let tr = integrate_angle(CoefficientQ::Constant(1.0), 0.0, 0.1, 7.0).unwrap();
        assert_eq!(tr.zero_count(), 2);
    }
}
