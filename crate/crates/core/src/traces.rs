//! Spectral sums `ν_h(f) = Σ f(λ_j)`, the leading phase-space term
//! `a₀(f) = ∬ f(ξ² + V)`, and the isospectral distance with its decay fit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigensolve::{spectrum, SolverConfig, Spectrum};
use crate::fit;
use crate::potential::PotentialSpec;
use crate::quadrature;
use crate::{Error, Result};

/// Tail allowance for [`spectral_density`].
pub const TAIL_TOL: f64 = 1e-14;
/// Smallest gap treated as signal.
pub const MIN_NOISE_FLOOR: f64 = 1e-12;
/// Largest tolerated Weyl-fit residual, relative to the intercept; above it
/// discretisation error is contaminating the sums.
pub const WEYL_FIT_RESIDUAL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    /// `e^{−sE}`.
    Exponential { scale: f64 },
    /// Unit mollifier supported on `(lo, hi)`.
    Bump { lo: f64, hi: f64 },
    Zero,
}

impl TestFunction {
    pub fn eval(&self, e: f64) -> f64 {
        match *self {
            Self::Exponential { scale } => (-scale * e).exp(),
            Self::Bump { lo, hi } => {
                let u = (2.0 * e - lo - hi) / (hi - lo);
                let s = 1.0 - u * u;
                if s <= 0.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / s).exp()
                }
            }
            Self::Zero => 0.0,
        }
    }

    pub fn derivative(&self, e: f64) -> f64 {
        match *self {
            Self::Exponential { scale } => -scale * (-scale * e).exp(),
            Self::Bump { lo, hi } => {
                let w = 0.5 * (hi - lo);
                let u = (e - 0.5 * (lo + hi)) / w;
                let s = 1.0 - u * u;
                if s <= 0.0 {
                    0.0
                } else {
                    -(1.0 - 1.0 / s).exp() * 2.0 * u / (s * s * w)
                }
            }
            Self::Zero => 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Exponential { scale } if !(scale > 0.0 && scale.is_finite()) => Err(
                Error::Precondition(format!("exponential scale must be positive, got {scale}")),
            ),
            Self::Bump { lo, hi } if !(lo < hi && lo.is_finite() && hi.is_finite()) => Err(
                Error::Precondition(format!("bump support ({lo}, {hi}) is empty")),
            ),
            _ => Ok(()),
        }
    }

    /// Energy beyond which `f` is negligible (or zero).
    fn cutoff(&self) -> f64 {
        match *self {
            Self::Exponential { scale } => 40.0 / scale,
            Self::Bump { hi, .. } => hi,
            Self::Zero => 0.0,
        }
    }

    /// Bound on `Σ_{j > count} f(λ_j)` given that none of those eigenvalues
    /// lies below `energy` and `λ_j ≥ (2j − 1)h`.
    fn tail_bound(&self, h: f64, count: usize, energy: f64) -> f64 {
        match *self {
            Self::Exponential { scale } => {
                // Terms with (2j − 1)h < energy are bounded by e^{−s·energy};
                // the rest form a geometric series.
                let first_free = (((energy / h) + 1.0) / 2.0).ceil().max(count as f64 + 1.0);
                let capped = (first_free - count as f64 - 1.0).max(0.0);
                let ratio = (-2.0 * scale * h).exp();
                capped * (-scale * energy).exp()
                    + (-scale * (2.0 * first_free - 1.0) * h).exp() / (1.0 - ratio)
            }
            Self::Bump { hi, .. } => {
                if energy >= hi {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Self::Zero => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Density {
    pub value: f64,
    pub tail_bound: f64,
    /// Propagated eigenvalue error, `Σ |f′(λ_j)|·err_j`.
    pub error_estimate: f64,
    pub count: usize,
    pub energy: f64,
}

/// `Σ_j f(λ_j)` over the Richardson spectrum with a certified tail.
pub fn spectral_density(
    p: &PotentialSpec,
    h: f64,
    f: TestFunction,
    config: &SolverConfig,
) -> Result<Density> {
    f.validate()?;
    if let TestFunction::Zero = f {
        return Ok(Density {
            value: 0.0,
            tail_bound: 0.0,
            error_estimate: 0.0,
            count: 0,
            energy: 0.0,
        });
    }
    let mut energy = f.cutoff();
    for _ in 0..8 {
        // λ_j ≥ (2j − 1)h bounds the count below `energy` without solving.
        let count_bound = ((energy / h + 1.0) / 2.0).floor() as usize;
        if count_bound > config.max_eigenvalues {
            return Err(Error::WindowTooLarge {
                energy,
                count: count_bound,
                cap: config.max_eigenvalues,
            });
        }
        if f.tail_bound(h, count_bound, energy) <= TAIL_TOL {
            break;
        }
        energy *= 1.25;
    }
    let s = spectrum(p, h, energy, config)?;
    let tail_bound = f.tail_bound(h, s.len(), energy);
    if tail_bound > TAIL_TOL {
        return Err(Error::Precondition(format!(
            "tail bound {tail_bound:.3e} above {TAIL_TOL:e} at E = {energy}"
        )));
    }
    // Sum small terms first.
    let value = s.eigenvalues.iter().rev().map(|l| f.eval(*l)).sum();
    let error_estimate = s
        .eigenvalues
        .iter()
        .zip(&s.error_estimates)
        .map(|(l, e)| f.derivative(*l).abs() * e)
        .sum();
    Ok(Density {
        value,
        tail_bound,
        error_estimate,
        count: s.len(),
        energy,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeylTerm {
    pub value: f64,
    pub error: f64,
}

const WEYL_TOL: f64 = 1e-11;

/// `a₀(f) = ∫∫ f(ξ² + V(x)) dξ dx` by nested adaptive Gauss–Kronrod.
pub fn weyl_term(p: &PotentialSpec, f: TestFunction) -> Result<WeylTerm> {
    f.validate()?;
    let (e_lo, e_hi) = match f {
        TestFunction::Zero => return Ok(WeylTerm { value: 0.0, error: 0.0 }),
        TestFunction::Exponential { .. } => (f64::NEG_INFINITY, f.cutoff() + 5.0),
        TestFunction::Bump { lo, hi } => (lo, hi),
    };
    // Inner: 2∫_{ξ ≥ 0} f(ξ² + v) over the range where f can be non-zero.
    let inner = |v: f64| -> Result<f64> {
        if v >= e_hi {
            return Ok(0.0);
        }
        let a = if v < e_lo { (e_lo - v).sqrt() } else { 0.0 };
        let b = (e_hi - v).sqrt();
        Ok(2.0 * quadrature::integrate(|xi| f.eval(xi * xi + v), a, b, 1e-15, 4000)?.value)
    };
    // V ≥ x² confines the outer integral to |x| < √e_hi.
    let reach = e_hi.max(0.0).sqrt();
    let mut cuts = vec![-reach, reach, 0.0];
    for bump in [p.alpha, p.beta] {
        let (a, b) = bump.support();
        cuts.extend([a, b, -a, -b]);
    }
    cuts.retain(|c| c.abs() <= reach);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let tol = WEYL_TOL / cuts.len() as f64;
    let mut value = 0.0;
    let mut error = 0.0;
    let failure = std::cell::Cell::new(None);
    for w in cuts.windows(2) {
        let q = quadrature::integrate(
            |x| match inner(p.eval(x)) {
                Ok(v) => v,
                Err(e) => {
                    failure.set(Some(e.to_string()));
                    0.0
                }
            },
            w[0],
            w[1],
            tol,
            4000,
        )?;
        value += q.value;
        error += q.error;
    }
    if let Some(msg) = failure.into_inner() {
        return Err(Error::Precondition(format!("inner quadrature failed: {msg}")));
    }
    Ok(WeylTerm { value, error })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeylFit {
    pub a0_quadrature: f64,
    /// `(h, (2πh)·ν_h(f))`.
    pub entries: Vec<(f64, f64)>,
    /// Coefficients of `c₀ + c₁h² + c₂h⁴`.
    pub coefficients: [f64; 3],
    pub stderr: [f64; 3],
    pub max_residual: f64,
}

impl WeylFit {
    pub fn a1(&self) -> f64 {
        self.coefficients[1]
    }
}

/// Fits `(2πh)·ν_h(f) ≈ a₀ + a₁h² + a₂h⁴` over `h_grid`.
pub fn weyl_consistency(
    p: &PotentialSpec,
    f: TestFunction,
    h_grid: &[f64],
    config: &SolverConfig,
) -> Result<WeylFit> {
    if h_grid.len() < 6 || h_grid.iter().any(|h| !(0.02..=0.5).contains(h)) {
        return Err(Error::Precondition(
            "h grid needs at least 6 values inside [0.02, 0.5]".into(),
        ));
    }
    let a0 = weyl_term(p, f)?;
    let entries: Vec<(f64, f64)> = h_grid
        .par_iter()
        .map(|&h| {
            let d = spectral_density(p, h, f, config)?;
            Ok((h, 2.0 * std::f64::consts::PI * h * d.value))
        })
        .collect::<Result<_>>()?;
    let hs: Vec<f64> = entries.iter().map(|e| e.0).collect();
    let ys: Vec<f64> = entries.iter().map(|e| e.1).collect();
    if ys.iter().all(|y| *y == 0.0) {
        return Ok(WeylFit {
            a0_quadrature: a0.value,
            entries,
            coefficients: [0.0; 3],
            stderr: [0.0; 3],
            max_residual: 0.0,
        });
    }
    let (c, se) = fit::linear_model(&hs, &ys, &[&|_| 1.0, &|h| h * h, &|h| h.powi(4)])?;
    let max_residual = hs
        .iter()
        .zip(&ys)
        .map(|(h, y)| (y - c[0] - c[1] * h * h - c[2] * h.powi(4)).abs())
        .fold(0.0, f64::max);
    if max_residual > WEYL_FIT_RESIDUAL * c[0].abs().max(1.0) {
        return Err(Error::Fit(format!(
            "Weyl fit residual {max_residual:.3e} exceeds {WEYL_FIT_RESIDUAL:e} of the intercept"
        )));
    }
    Ok(WeylFit {
        a0_quadrature: a0.value,
        entries,
        coefficients: [c[0], c[1], c[2]],
        stderr: [se[0], se[1], se[2]],
        max_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distance {
    /// `max_j |λ_j⁺ − λ_j⁻|` over the common window.
    pub value: f64,
    /// 1-based index attaining the maximum.
    pub index: usize,
    /// Correlated error bound of the maximising difference.
    pub error_estimate: f64,
    pub count: usize,
}

/// Index-paired sup distance between two spectra on identical grids,
/// restricted to eigenvalues below `energy`.
pub fn isospectral_distance(plus: &Spectrum, minus: &Spectrum, energy: f64) -> Result<Distance> {
    let diffs = plus.correlated_difference(minus)?;
    let count = plus
        .eigenvalues
        .iter()
        .zip(&minus.eigenvalues)
        .take_while(|(a, b)| **a < energy && **b < energy)
        .count();
    let mut best = Distance {
        value: 0.0,
        index: 0,
        error_estimate: 0.0,
        count,
    };
    for (j, d) in diffs.iter().take(count).enumerate() {
        best.error_estimate = best.error_estimate.max(d.bound());
        if d.value.abs() > best.value || best.index == 0 {
            best.value = d.value.abs();
            best.index = j + 1;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapEntry {
    pub h: f64,
    pub energy: f64,
    pub d: f64,
    pub error_estimate: f64,
    pub noise_floor: f64,
    pub usable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// `D ≈ prefactor·e^{−rate/h}`.
    pub prefactor: f64,
    pub rate: f64,
    pub r_squared: f64,
    /// Quadratic coefficient of `log D` in `1/h`, times the squared span of
    /// `1/h`: the bend of the data away from a straight line, in log units.
    pub curvature: f64,
}

impl DecayFit {
    pub fn looks_exponential(&self) -> bool {
        self.r_squared >= 0.98 && self.curvature.abs() < 0.5
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapCurve {
    pub entries: Vec<GapEntry>,
    pub fit: Option<DecayFit>,
    pub noise_floor: f64,
}

impl GapCurve {
    pub fn usable(&self) -> impl Iterator<Item = &GapEntry> {
        self.entries.iter().filter(|e| e.usable)
    }

    /// For each `N`, whether `D(h)/h^N` strictly decreases as `h` decreases
    /// over the usable entries.
    pub fn superpolynomial_witness(&self, powers: &[i32]) -> Vec<(i32, bool)> {
        let mut pts: Vec<(f64, f64)> = self.usable().map(|e| (e.h, e.d)).collect();
        pts.sort_by(|a, b| b.0.total_cmp(&a.0));
        powers
            .iter()
            .map(|&n| {
                let scaled: Vec<f64> = pts.iter().map(|(h, d)| d / h.powi(n)).collect();
                (n, scaled.windows(2).all(|w| w[1] < w[0]))
            })
            .collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["h", "E", "D", "error_estimate", "noise_floor", "usable"])?;
        for e in &self.entries {
            w.write_record(&[
                format!("{:.17e}", e.h),
                format!("{}", e.energy),
                format!("{:.17e}", e.d),
                format!("{:.6e}", e.error_estimate),
                format!("{:.6e}", e.noise_floor),
                e.usable.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `m` log-spaced values from `hi` down to `lo`, both included.
pub fn log_spaced(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    if m == 1 {
        return vec![hi];
    }
    (0..m)
        .map(|k| {
            if k == m - 1 {
                lo
            } else {
                (hi.ln() + (lo.ln() - hi.ln()) * k as f64 / (m - 1) as f64).exp()
            }
        })
        .collect()
}

/// `D(h)` for V⁺ = `p` and its partner over `h_list`, then the decay fit
/// on entries above the noise floor (when at least five are usable).
pub fn gap_sweep(
    p: &PotentialSpec,
    h_list: &[f64],
    energy: f64,
    config: &SolverConfig,
) -> Result<GapCurve> {
    let q = p.partner();
    let entries: Vec<GapEntry> = h_list
        .par_iter()
        .map(|&h| {
            let (sp, sm) = rayon::join(
                || spectrum(p, h, energy, config),
                || spectrum(&q, h, energy, config),
            );
            let d = isospectral_distance(&sp?, &sm?, energy)?;
            let noise_floor = MIN_NOISE_FLOOR.max(10.0 * d.error_estimate);
            Ok(GapEntry {
                h,
                energy,
                d: d.value,
                error_estimate: d.error_estimate,
                noise_floor,
                usable: d.value > noise_floor,
            })
        })
        .collect::<Result<_>>()?;
    let noise_floor = entries.iter().map(|e| e.noise_floor).fold(0.0, f64::max);
    let usable: Vec<(f64, f64)> = entries.iter().filter(|e| e.usable).map(|e| (e.h, e.d)).collect();
    let fit = if usable.len() >= 5 {
        Some(fit_gap_decay(&usable)?)
    } else {
        None
    };
    Ok(GapCurve {
        entries,
        fit,
        noise_floor,
    })
}

/// Least squares of `log D` against `1/h`.
pub fn fit_gap_decay(entries: &[(f64, f64)]) -> Result<DecayFit> {
    if entries.len() < 5 {
        return Err(Error::Fit(format!(
            "decay fit needs at least 5 entries above the noise floor, got {}",
            entries.len()
        )));
    }
    if entries.iter().any(|(h, d)| !(*h > 0.0) || !(*d > 0.0)) {
        return Err(Error::Fit("decay fit needs positive h and D".into()));
    }
    let xs: Vec<f64> = entries.iter().map(|(h, _)| 1.0 / h).collect();
    let ys: Vec<f64> = entries.iter().map(|(_, d)| d.ln()).collect();
    let line = fit::line(&xs, &ys)?;
    let (quad, _) = fit::linear_model(&xs, &ys, &[&|_| 1.0, &|x| x, &|x| x * x])?;
    let span = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - xs.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(DecayFit {
        prefactor: line.intercept.exp(),
        rate: -line.slope,
        r_squared: line.r_squared,
        curvature: quad[2] * span * span,
    })
}
