//! Harmonic potential `x²` with two compactly supported smooth bumps.
//!
//! The pair `V± = x² + t·α(x) + ε·β(±x)` is built from a left bump α living
//! in (−3, −2) and a right bump β living in (3, 4). `V⁻` mirrors β onto
//! (−4, −3) while leaving α in place.

use serde::{Deserialize, Serialize};

use crate::report::Assertion;

/// Anything that can be sampled as a real potential on the line.
pub trait Potential: Sync {
    fn eval(&self, x: f64) -> f64;
}

impl<F: Fn(f64) -> f64 + Sync> Potential for F {
    fn eval(&self, x: f64) -> f64 {
        self(x)
    }
}

/// Smooth mollifier `amplitude · exp(1 − 1/(1 − u²))`, `u = (x − center)/half_width`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub center: f64,
    pub half_width: f64,
    pub amplitude: f64,
}

impl BumpSpec {
    pub const fn new(center: f64, half_width: f64, amplitude: f64) -> Self {
        Self {
            center,
            half_width,
            amplitude,
        }
    }

    /// Default left bump on (−3, −2).
    pub const fn default_alpha() -> Self {
        Self::new(-2.5, 0.5, 1.0)
    }

    /// Default right bump on (3, 4).
    pub const fn default_beta() -> Self {
        Self::new(3.5, 0.5, 1.0)
    }

    /// Open support interval.
    pub fn support(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.half_width;
        let s = 1.0 - u * u;
        if s <= 0.0 {
            return 0.0;
        }
        self.amplitude * (1.0 - 1.0 / s).exp()
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.half_width;
        let s = 1.0 - u * u;
        if s <= 0.0 {
            return 0.0;
        }
        let value = self.amplitude * (1.0 - 1.0 / s).exp();
        -value * 2.0 * u / (s * s * self.half_width)
    }

    /// `max |b′|`, located by dense sampling plus a golden-section polish.
    pub fn max_abs_derivative(&self) -> f64 {
        if self.amplitude == 0.0 {
            return 0.0;
        }
        // |b'| is symmetric in u; maximise on u ∈ (0, 1).
        let g = |u: f64| {
            let s = 1.0 - u * u;
            if s <= 0.0 {
                0.0
            } else {
                (1.0 - 1.0 / s).exp() * 2.0 * u / (s * s)
            }
        };
        let samples = 2000;
        let (mut best_u, mut best) = (0.0, 0.0);
        for k in 1..samples {
            let u = k as f64 / samples as f64;
            let v = g(u);
            if v > best {
                best = v;
                best_u = u;
            }
        }
        let (mut lo, mut hi) = (
            (best_u - 1.0 / samples as f64).max(0.0),
            (best_u + 1.0 / samples as f64).min(1.0),
        );
        let ratio = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let a = hi - ratio * (hi - lo);
            let b = lo + ratio * (hi - lo);
            if g(a) < g(b) {
                lo = a;
            } else {
                hi = b;
            }
        }
        best = best.max(g(0.5 * (lo + hi)));
        self.amplitude * best / self.half_width
    }
}

/// `x² + t·α(x) + ε·β(±x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialSpec {
    pub t: f64,
    pub eps: f64,
    /// `false` for V⁺, `true` for V⁻.
    pub reflect_beta: bool,
    pub alpha: BumpSpec,
    pub beta: BumpSpec,
}

pub const DEFAULT_T: f64 = 0.05;
pub const DEFAULT_EPS: f64 = 0.05;

/// Allowed supports: α inside (−3, −2), β inside (3, 4).
pub const ALPHA_WINDOW: (f64, f64) = (-3.0, -2.0);
pub const BETA_WINDOW: (f64, f64) = (3.0, 4.0);

impl Default for PotentialSpec {
    fn default() -> Self {
        Self::plus(DEFAULT_T, DEFAULT_EPS)
    }
}

impl PotentialSpec {
    pub fn harmonic() -> Self {
        Self::plus(0.0, 0.0)
    }

    pub fn plus(t: f64, eps: f64) -> Self {
        Self {
            t,
            eps,
            reflect_beta: false,
            alpha: BumpSpec::default_alpha(),
            beta: BumpSpec::default_beta(),
        }
    }

    pub fn minus(t: f64, eps: f64) -> Self {
        Self {
            reflect_beta: true,
            ..Self::plus(t, eps)
        }
    }

    /// The partner potential with β reflected the other way.
    pub fn partner(&self) -> Self {
        Self {
            reflect_beta: !self.reflect_beta,
            ..*self
        }
    }

    pub fn with_t(self, t: f64) -> Self {
        Self { t, ..self }
    }

    pub fn with_eps(self, eps: f64) -> Self {
        Self { eps, ..self }
    }

    pub fn is_harmonic(&self) -> bool {
        (self.t == 0.0 || self.alpha.amplitude == 0.0)
            && (self.eps == 0.0 || self.beta.amplitude == 0.0)
    }

    fn beta_arg(&self, x: f64) -> f64 {
        if self.reflect_beta {
            -x
        } else {
            x
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        x * x + self.t * self.alpha.eval(x) + self.eps * self.beta.eval(self.beta_arg(x))
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let beta_term = self.beta.derivative(self.beta_arg(x));
        let beta_term = if self.reflect_beta {
            -beta_term
        } else {
            beta_term
        };
        2.0 * x + self.t * self.alpha.derivative(x) + self.eps * beta_term
    }

    /// Checks every standing assumption on the pair and lists each outcome.
    pub fn validate(&self) -> ValidationReport {
        let mut checks = Vec::new();

        let finite = [
            self.t,
            self.eps,
            self.alpha.center,
            self.alpha.half_width,
            self.alpha.amplitude,
            self.beta.center,
            self.beta.half_width,
            self.beta.amplitude,
        ]
        .iter()
        .all(|v| v.is_finite());
        checks.push(Assertion::new(
            "parameters-finite",
            "potential.PotentialSpec",
            finite,
            "all parameters finite".into(),
        ));

        checks.push(Assertion::new(
            "amplitudes-nonnegative",
            "potential.PotentialSpec",
            self.t >= 0.0
                && self.eps >= 0.0
                && self.alpha.amplitude >= 0.0
                && self.beta.amplitude >= 0.0,
            format!(
                "t = {}, eps = {}, alpha.amplitude = {}, beta.amplitude = {}",
                self.t, self.eps, self.alpha.amplitude, self.beta.amplitude
            ),
        ));

        for (name, bump, window) in [
            ("alpha-support", &self.alpha, ALPHA_WINDOW),
            ("beta-support", &self.beta, BETA_WINDOW),
        ] {
            let (lo, hi) = bump.support();
            let ok = bump.half_width > 0.0 && lo >= window.0 && hi <= window.1;
            checks.push(Assertion::new(
                name,
                "potential.PotentialSpec",
                ok,
                format!(
                    "support ({lo}, {hi}) must lie in ({}, {})",
                    window.0, window.1
                ),
            ));
        }

        if !finite {
            return ValidationReport { checks };
        }

        // |2x| ≥ 4 on supp α and ≥ 6 on supp β.
        let alpha_slope = self.t * self.alpha.max_abs_derivative();
        let beta_slope = self.eps * self.beta.max_abs_derivative();
        checks.push(
            Assertion::new(
                "alpha-slope-bound",
                "potential.PotentialSpec",
                alpha_slope < 4.0,
                format!("t * max|alpha'| = {alpha_slope:.6e} < 4"),
            )
            .with_margin(4.0 - alpha_slope),
        );
        checks.push(
            Assertion::new(
                "beta-slope-bound",
                "potential.PotentialSpec",
                beta_slope < 6.0,
                format!("eps * max|beta'| = {beta_slope:.6e} < 6"),
            )
            .with_margin(6.0 - beta_slope),
        );

        // Outside [-R, R] the bumps vanish and V' = 2x.
        let reach = [
            self.alpha.support().0.abs(),
            self.alpha.support().1.abs(),
            self.beta.support().0.abs(),
            self.beta.support().1.abs(),
        ]
        .into_iter()
        .fold(1.0_f64, f64::max)
            + 0.5;
        let step = 5e-4;
        let steps = (reach / step).ceil() as usize;
        let mut worst: Option<(f64, f64)> = None;
        let mut min_ratio = f64::INFINITY;
        for k in 1..=steps {
            for x in [k as f64 * step, -(k as f64) * step] {
                let d = self.derivative(x);
                let ratio = d / x;
                if ratio < min_ratio {
                    min_ratio = ratio;
                }
                if ratio <= 0.0 && worst.map_or(true, |(_, r)| ratio < r) {
                    worst = Some((x, ratio));
                }
            }
        }
        let detail = match worst {
            Some((x, _)) => format!(
                "V' has the wrong sign at x = {x:.4} (V' = {:.4e})",
                self.derivative(x)
            ),
            None => format!("sign(V') = sign(x) on [-{reach}, {reach}] at step {step}"),
        };
        checks.push(
            Assertion::new(
                "single-critical-point",
                "potential.PotentialSpec",
                worst.is_none(),
                detail,
            )
            .with_margin(min_ratio),
        );

        ValidationReport { checks }
    }
}

impl Potential for PotentialSpec {
    fn eval(&self, x: f64) -> f64 {
        PotentialSpec::eval(self, x)
    }
}

/// Outcome of [`PotentialSpec::validate`].
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Assertion>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Assertion> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn into_result(self) -> crate::Result<()> {
        if self.passed() {
            return Ok(());
        }
        let msg = self
            .failures()
            .map(|c| format!("{}: {}", c.name, c.detail))
            .collect::<Vec<_>>()
            .join("; ");
        Err(crate::Error::InvalidPotential(msg))
    }
}

/// Direction of a first-order perturbation `V + s·δV`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Perturbation {
    /// `δV(x) = b(x)`, or `b(−x)` when `reflected`.
    Bump { bump: BumpSpec, reflected: bool },
    /// `δV ≡ c` on the whole line.
    Constant(f64),
}

impl Perturbation {
    pub fn bump(bump: BumpSpec, reflected: bool) -> Self {
        Self::Bump { bump, reflected }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Self::Bump { bump, reflected } => bump.eval(if reflected { -x } else { x }),
            Self::Constant(c) => c,
        }
    }

    pub fn max_value(&self) -> f64 {
        match *self {
            Self::Bump { bump, .. } => bump.amplitude.max(0.0),
            Self::Constant(c) => c,
        }
    }
}

/// `base(x) + amount · direction(x)`; `amount` may be negative.
#[derive(Debug, Clone, Copy)]
pub struct Perturbed<'a, P: Potential + ?Sized> {
    pub base: &'a P,
    pub direction: Perturbation,
    pub amount: f64,
}

impl<P: Potential + ?Sized> Potential for Perturbed<'_, P> {
    fn eval(&self, x: f64) -> f64 {
        self.base.eval(x) + self.amount * self.direction.eval(x)
    }
}
