//! Dirichlet finite-difference eigensolver for `−h² d²/dx² + V(x)`.
//!
//! The operator is discretised with the three-point Laplacian on a uniform
//! grid over `[−L, L]`. Eigenvalues come from Sturm-sequence bisection and
//! eigenvectors from a twisted factorization (one step of inverse iteration
//! started from the optimal unit vector).
//!
//! All recurrences on the discretised operator are carried in the ratio form
//! `s_i = u_{i+1}/u_i − 1`. With `b = h²/dx²` the plain pivot recurrence
//! works with quantities of size `2b` and loses `ε·b` of absolute accuracy,
//! while `s_i` is `O(dx)` and is updated without cancellation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::potential::{Potential, PotentialSpec};
use crate::{Error, Result};

/// Default truncation half-length.
pub const DEFAULT_HALF_LENGTH: f64 = 8.0;
/// Default fine-grid interior point count (16000 intervals on `[−8, 8]`, `dx = 1e−3`).
pub const DEFAULT_FINE_POINTS: usize = 15_999;
/// Default cap on the number of eigenvalues in one window.
pub const DEFAULT_MAX_EIGENVALUES: usize = 5_000;

const PIVOT_GUARD: f64 = 1e-280;

/// Uniform grid of `n` interior points on `[−L, L]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub half_length: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(half_length: f64, n: usize) -> Result<Self> {
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half length must be positive, got {half_length}"
            )));
        }
        if n < 3 {
            return Err(Error::InvalidGrid(format!("need n >= 3, got {n}")));
        }
        Ok(Self { half_length, n })
    }

    pub fn intervals(&self) -> usize {
        self.n + 1
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_length / self.intervals() as f64
    }

    /// Interior point `i` (0-based). Computed from an integer numerator so
    /// that `x(n − 1 − i) == −x(i)` holds bit for bit.
    pub fn x(&self, i: usize) -> f64 {
        let m = self.intervals() as i64;
        let k = 2 * (i as i64 + 1) - m;
        k as f64 * self.half_length / m as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Grid with twice the spacing, or `None` if the interval count is odd.
    pub fn coarsened(&self) -> Option<Self> {
        let m = self.intervals();
        if m % 2 != 0 || m / 2 < 4 {
            return None;
        }
        Some(Self {
            half_length: self.half_length,
            n: m / 2 - 1,
        })
    }

    /// Grid with half the spacing.
    pub fn refined(&self) -> Self {
        Self {
            half_length: self.half_length,
            n: 2 * self.intervals() - 1,
        }
    }

    /// Index of the grid point equal to `x`, if there is one.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let pos = (x + self.half_length) / self.dx() - 1.0;
        let i = pos.round();
        if i < 0.0 || i >= self.n as f64 {
            return None;
        }
        let i = i as usize;
        ((self.x(i) - x).abs() <= 1e-12 * self.half_length).then_some(i)
    }
}

/// Discretisation settings shared by every experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub half_length: f64,
    /// Interior points of the fine grid; the coarse grid has half the intervals.
    pub n: usize,
    /// Bisection width; `None` selects `1e−13·max(1, E)`.
    pub tol: Option<f64>,
    pub max_eigenvalues: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            half_length: DEFAULT_HALF_LENGTH,
            n: DEFAULT_FINE_POINTS,
            tol: None,
            max_eigenvalues: DEFAULT_MAX_EIGENVALUES,
        }
    }
}

impl SolverConfig {
    pub fn with_n(self, n: usize) -> Self {
        Self { n, ..self }
    }

    pub fn with_half_length(self, half_length: f64) -> Self {
        Self {
            half_length,
            ..self
        }
    }

    pub fn tolerance(&self, energy: f64) -> f64 {
        self.tol.unwrap_or(1e-13 * energy.abs().max(1.0))
    }

    /// `(coarse, fine)` on `[−L, L]`. An odd interval count is rounded down
    /// by one point so the fine spacing is exactly half the coarse one.
    pub fn grids(&self) -> Result<(Grid, Grid)> {
        let n = if (self.n + 1) % 2 == 0 { self.n } else { self.n - 1 };
        let fine = Grid::new(self.half_length, n)?;
        let coarse = fine
            .coarsened()
            .ok_or_else(|| Error::InvalidGrid(format!("cannot coarsen n = {n}")))?;
        Ok((coarse, fine))
    }

    /// Grids for an energy window: `L = max(L₀, √E + 4)` at no coarser spacing
    /// than the configured one.
    pub fn grids_for_window(&self, energy: f64) -> Result<(Grid, Grid)> {
        let half_length = self.half_length.max(energy.max(0.0).sqrt() + 4.0);
        if half_length == self.half_length {
            return self.grids();
        }
        let (_, base) = self.grids()?;
        let mut intervals = (2.0 * half_length / base.dx()).ceil() as usize;
        intervals += intervals % 2;
        Self {
            half_length,
            n: intervals - 1,
            ..*self
        }
        .grids()
    }
}

/// Symmetric tridiagonal discretisation of `−h² d²/dx² + V`.
#[derive(Debug, Clone)]
pub struct TridiagonalOperator {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
    pub h: f64,
    pub grid: Grid,
    /// `V(x_i)`.
    pub potential: Vec<f64>,
    /// `dx²/h²`.
    scale: f64,
}

/// Builds the operator on `grid`.
pub fn discretize<P: Potential + ?Sized>(
    potential: &P,
    h: f64,
    grid: Grid,
) -> Result<TridiagonalOperator> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Precondition(format!("h must be positive, got {h}")));
    }
    let dx = grid.dx();
    let b = h * h / (dx * dx);
    let values: Vec<f64> = (0..grid.n).map(|i| potential.eval(grid.x(i))).collect();
    Ok(TridiagonalOperator {
        diag: values.iter().map(|v| 2.0 * b + v).collect(),
        offdiag: vec![-b; grid.n - 1],
        h,
        grid,
        potential: values,
        scale: dx * dx / (h * h),
    })
}

impl TridiagonalOperator {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `h²/dx²`, the magnitude of the off-diagonal.
    pub fn coupling(&self) -> f64 {
        1.0 / self.scale
    }

    /// Rejects windows whose top energy is within 10 of the wall value `V(±L)`.
    pub fn check_window(&self, energy: f64) -> Result<()> {
        let wall = self.potential[0].min(self.potential[self.len() - 1]);
        if wall < energy + 10.0 {
            return Err(Error::InvalidGrid(format!(
                "V at the truncation boundary is {wall:.3}, need at least E + 10 = {:.3}",
                energy + 10.0
            )));
        }
        Ok(())
    }

    fn g(&self, i: usize, lambda: f64) -> f64 {
        (self.potential[i] - lambda) * self.scale
    }

    /// Number of eigenvalues strictly below `lambda` (negative pivots of `T − λ`).
    pub fn count_below(&self, lambda: f64) -> usize {
        let mut count = 0;
        // s/(1+s) for the previous row; the Dirichlet boundary contributes 1.
        let mut carry = 1.0;
        for i in 0..self.len() {
            let s = self.g(i, lambda) + carry;
            let p = guarded(1.0 + s);
            if p < 0.0 {
                count += 1;
            }
            carry = s / p;
        }
        count
    }

    /// [`count_below`](Self::count_below) for several shifts in one sweep.
    /// The shifts run as independent recurrences in lock step, which hides
    /// the division latency; each lane performs exactly the scalar arithmetic.
    pub fn count_below_many(&self, lambdas: &[f64]) -> Vec<usize> {
        const LANES: usize = 8;
        let sweep = |chunk: &[f64]| {
            let mut shift = [chunk[chunk.len() - 1]; LANES];
            shift[..chunk.len()].copy_from_slice(chunk);
            let mut count = [0usize; LANES];
            let mut carry = [1.0f64; LANES];
            for &v in &self.potential {
                for l in 0..LANES {
                    let s = (v - shift[l]) * self.scale + carry[l];
                    let p = guarded(1.0 + s);
                    count[l] += (p < 0.0) as usize;
                    carry[l] = s / p;
                }
            }
            count[..chunk.len()].to_vec()
        };
        lambdas
            .par_chunks(LANES)
            .flat_map_iter(sweep)
            .collect()
    }

    /// Eigenvalues with 0-based indices `0..count`, bisected in lock step
    /// inside `[lo, hi]` to width `tol`.
    fn bisect_all(&self, count: usize, lo: f64, hi: f64, tol: f64) -> Vec<f64> {
        let mut lo = vec![lo; count];
        let mut hi = vec![hi; count];
        loop {
            let active: Vec<usize> = (0..count)
                .filter(|&k| {
                    let mid = 0.5 * (lo[k] + hi[k]);
                    hi[k] - lo[k] > tol && mid > lo[k] && mid < hi[k]
                })
                .collect();
            if active.is_empty() {
                break;
            }
            let mids: Vec<f64> = active.iter().map(|&k| 0.5 * (lo[k] + hi[k])).collect();
            let counts = self.count_below_many(&mids);
            for ((&k, &mid), &c) in active.iter().zip(&mids).zip(&counts) {
                if c > k {
                    hi[k] = mid;
                } else {
                    lo[k] = mid;
                }
            }
        }
        lo.iter().zip(&hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    /// Lower bound for the spectrum (Gershgorin; the diagonal minus twice the
    /// coupling is exactly `V`).
    fn spectral_floor(&self) -> f64 {
        let vmin = self.potential.iter().cloned().fold(f64::INFINITY, f64::min);
        vmin - 1e-9 * vmin.abs().max(1.0)
    }

    /// All eigenvalues below `energy`, each bisected to width `tol`.
    pub fn eigenvalues_below(&self, energy: f64, tol: f64, cap: usize) -> Result<Vec<f64>> {
        if !(tol >= 0.0) {
            return Err(Error::Precondition(format!("tol must be >= 0, got {tol}")));
        }
        let count = self.count_below(energy);
        if count > cap {
            return Err(Error::WindowTooLarge {
                energy,
                count,
                cap,
            });
        }
        let mut values = self.bisect_all(count, self.spectral_floor(), energy, tol);
        values.sort_by(|a, b| a.total_cmp(b));
        Ok(values)
    }

    /// Lowest `count` eigenvalues regardless of energy.
    pub fn lowest(&self, count: usize, tol: f64) -> Vec<f64> {
        let floor = self.spectral_floor();
        let mut top = floor.abs().max(1.0);
        while self.count_below(top) < count {
            top *= 2.0;
        }
        self.bisect_all(count, floor, top, tol)
    }

    /// Forward ratios `s⁺_i = u_i/u_{i−1} − 1` from the left wall.
    fn forward_ratios(&self, lambda: f64) -> Vec<f64> {
        let n = self.len();
        let mut s = vec![f64::INFINITY; n];
        let mut carry = 1.0;
        for i in 0..n {
            // s[i+1] comes from row i.
            let next = self.g(i, lambda) + carry;
            let p = guarded(1.0 + next);
            carry = next / p;
            if i + 1 < n {
                s[i + 1] = next;
            }
        }
        s
    }

    /// Backward ratios `s⁻_i = u_i/u_{i+1} − 1` from the right wall.
    fn backward_ratios(&self, lambda: f64) -> Vec<f64> {
        let n = self.len();
        let mut s = vec![f64::INFINITY; n];
        let mut carry = 1.0;
        for i in (0..n).rev() {
            let next = self.g(i, lambda) + carry;
            let p = guarded(1.0 + next);
            carry = next / p;
            if i > 0 {
                s[i - 1] = next;
            }
        }
        s
    }

    /// L²-normalised eigenvector (`dx·Σu² = 1`) for an eigenvalue `lambda`
    /// accurate to bisection width, via a twisted factorization of `T − λ`.
    pub fn eigenvector(&self, lambda: f64) -> Result<Vec<f64>> {
        let n = self.len();
        let fwd = self.forward_ratios(lambda);
        let bwd = self.backward_ratios(lambda);
        let ratio = |s: f64| if s.is_infinite() { 1.0 } else { s / guarded(1.0 + s) };

        // γ_k/u_k = g_k + s⁺_k/(1+s⁺_k) + s⁻_k/(1+s⁻_k); twist where it is smallest.
        let twist = (0..n)
            .map(|k| (k, (self.g(k, lambda) + ratio(fwd[k]) + ratio(bwd[k])).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(k, _)| k)
            .unwrap_or(0);

        // log|u| and sign, anchored at u_twist = 1.
        let mut log_mag = vec![0.0; n];
        let mut sign = vec![1.0; n];
        for i in (0..twist).rev() {
            // u_i = u_{i+1} / (1 + s⁺_{i+1})
            let p = guarded(1.0 + fwd[i + 1]);
            log_mag[i] = log_mag[i + 1] - p.abs().ln();
            sign[i] = sign[i + 1] * p.signum();
        }
        for i in twist + 1..n {
            // u_i = u_{i−1} / (1 + s⁻_{i−1})
            let p = guarded(1.0 + bwd[i - 1]);
            log_mag[i] = log_mag[i - 1] - p.abs().ln();
            sign[i] = sign[i - 1] * p.signum();
        }
        let top = log_mag.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut u: Vec<f64> = log_mag
            .iter()
            .zip(&sign)
            .map(|(l, s)| s * (l - top).exp())
            .collect();

        let dx = self.grid.dx();
        let norm = (dx * u.iter().map(|v| v * v).sum::<f64>()).sqrt();
        let leading = u
            .iter()
            .find(|v| v.abs() > 1e-8)
            .copied()
            .unwrap_or(1.0)
            .signum();
        for v in &mut u {
            *v *= leading / norm;
        }

        let residual = self.relative_residual(&u, lambda);
        let bound = self.residual_bound(lambda);
        if !(residual <= bound) {
            return Err(Error::NoConvergence { lambda, residual });
        }
        Ok(u)
    }

    /// Accepted eigenvector residual: `1e−10·max(1, |λ|)` plus the rounding
    /// floor `16·ε·‖T‖` of any vector stored in double precision.
    pub fn residual_bound(&self, lambda: f64) -> f64 {
        let vmax = self.potential.iter().cloned().fold(0.0, f64::max);
        let norm = 4.0 * self.coupling() + vmax;
        1e-10 * lambda.abs().max(1.0) + 16.0 * f64::EPSILON * norm
    }

    /// `‖(T − λ)u‖ / ‖u‖`, with the second difference formed from first
    /// differences so that the large coupling does not amplify rounding.
    pub fn relative_residual(&self, u: &[f64], lambda: f64) -> f64 {
        let n = self.len();
        let b = self.coupling();
        let at = |i: isize| {
            if i < 0 || i >= n as isize {
                0.0
            } else {
                u[i as usize]
            }
        };
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..n {
            let ii = i as isize;
            let second = (at(ii) - at(ii - 1)) - (at(ii + 1) - at(ii));
            let r = b * (second + self.g(i, lambda) * u[i]);
            num += r * r;
            den += u[i] * u[i];
        }
        (num / den).sqrt()
    }
}

fn guarded(p: f64) -> f64 {
    if p.abs() < PIVOT_GUARD {
        -PIVOT_GUARD
    } else {
        p
    }
}

/// Negative-pivot count for an arbitrary symmetric tridiagonal matrix.
pub fn sturm_count(diag: &[f64], offdiag: &[f64], lambda: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..diag.len() {
        let coupling = if i == 0 {
            0.0
        } else {
            offdiag[i - 1] * offdiag[i - 1] / q
        };
        q = diag[i] - lambda - coupling;
        if q.abs() < PIVOT_GUARD {
            q = -PIVOT_GUARD;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Eigenvalues of `T` with Richardson extrapolation over two grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub h: f64,
    /// Extrapolated eigenvalues `(4λ_fine − λ_coarse)/3`, increasing.
    pub eigenvalues: Vec<f64>,
    /// Per-eigenvalue `|λ_fine − λ_coarse|/3`.
    pub error_estimates: Vec<f64>,
    pub fine: Vec<f64>,
    pub coarse: Vec<f64>,
    pub energy: f64,
    /// Bisection width used on both grids.
    pub tol: f64,
    pub coarse_grid: Grid,
    pub fine_grid: Grid,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Largest per-eigenvalue error estimate.
    pub fn error_estimate(&self) -> f64 {
        self.error_estimates.iter().cloned().fold(0.0, f64::max)
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.eigenvalues.windows(2).all(|w| w[0] < w[1])
    }

    /// Entry-wise `self − other` extrapolated from the fine and coarse
    /// differences, with error `|D_fine − D_coarse|/3`. Both spectra must
    /// come from the same grids so that the `O(dx²)` terms cancel.
    pub fn correlated_difference(&self, other: &Spectrum) -> Result<Vec<Difference>> {
        if self.fine_grid != other.fine_grid || self.coarse_grid != other.coarse_grid {
            return Err(Error::Precondition(
                "correlated differences need identical grids".into(),
            ));
        }
        let count = self.len().min(other.len());
        Ok((0..count)
            .map(|j| {
                let d_fine = self.fine[j] - other.fine[j];
                let d_coarse = self.coarse[j] - other.coarse[j];
                Difference {
                    value: (4.0 * d_fine - d_coarse) / 3.0,
                    error_estimate: (d_fine - d_coarse).abs() / 3.0,
                    // Each midpoint is within tol/2; the extrapolation weights sum to 5/3.
                    resolution: 5.0 / 6.0 * (self.tol + other.tol),
                }
            })
            .collect())
    }

    /// CSV rows `h, j, lambda, error_estimate` (j is 1-based).
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["h", "j", "lambda", "error_estimate"])?;
        for (j, (l, e)) in self.eigenvalues.iter().zip(&self.error_estimates).enumerate() {
            w.write_record([
                format!("{}", self.h),
                format!("{}", j + 1),
                format!("{l:.17e}"),
                format!("{e:.6e}"),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A correlated eigenvalue difference and its Richardson error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Difference {
    pub value: f64,
    pub error_estimate: f64,
    /// Worst-case bisection error carried into `value`.
    pub resolution: f64,
}

impl Difference {
    /// Richardson estimate plus bisection resolution.
    pub fn bound(&self) -> f64 {
        self.error_estimate + self.resolution
    }
}

/// Richardson-refined spectrum below `energy` from a coarse/fine grid pair
/// sharing `L` with spacing ratio exactly 2.
pub fn refine<P: Potential + ?Sized>(
    potential: &P,
    h: f64,
    energy: f64,
    coarse: Grid,
    fine: Grid,
    tol: f64,
    cap: usize,
) -> Result<Spectrum> {
    if coarse.half_length != fine.half_length || fine.coarsened() != Some(coarse) {
        return Err(Error::Precondition(format!(
            "grids must share L and have spacing ratio 2 (coarse n = {}, fine n = {})",
            coarse.n, fine.n
        )));
    }
    let op_coarse = discretize(potential, h, coarse)?;
    let op_fine = discretize(potential, h, fine)?;
    op_fine.check_window(energy)?;
    let (lc, lf) = rayon::join(
        || op_coarse.eigenvalues_below(energy, tol, cap),
        || op_fine.eigenvalues_below(energy, tol, cap),
    );
    let (mut lc, mut lf) = (lc?, lf?);
    let count = lc.len().min(lf.len());
    lc.truncate(count);
    lf.truncate(count);
    let eigenvalues = lf
        .iter()
        .zip(&lc)
        .map(|(f, c)| (4.0 * f - c) / 3.0)
        .collect();
    let error_estimates = lf.iter().zip(&lc).map(|(f, c)| (f - c).abs() / 3.0).collect();
    Ok(Spectrum {
        h,
        eigenvalues,
        error_estimates,
        fine: lf,
        coarse: lc,
        energy,
        tol,
        coarse_grid: coarse,
        fine_grid: fine,
    })
}

/// [`refine`] with grids and tolerance taken from `config`.
pub fn spectrum<P: Potential + ?Sized>(
    potential: &P,
    h: f64,
    energy: f64,
    config: &SolverConfig,
) -> Result<Spectrum> {
    let (coarse, fine) = config.grids_for_window(energy)?;
    refine(
        potential,
        h,
        energy,
        coarse,
        fine,
        config.tolerance(energy),
        config.max_eigenvalues,
    )
}

/// `λ₁ − h` measured against the harmonic ground state on the same grids.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundStateExcess {
    pub h: f64,
    pub lambda1: f64,
    /// Per-eigenvalue Richardson estimate of `λ₁` alone.
    pub direct_error: f64,
    pub excess: f64,
    /// Error of `excess`: the correlated difference bound plus the residual
    /// error of the harmonic level, whose exact value `h` is known.
    pub error_estimate: f64,
}

impl GroundStateExcess {
    /// `excess / error_estimate`.
    pub fn ratio(&self) -> f64 {
        self.excess / self.error_estimate
    }
}

/// The harmonic oscillator is a control variate for `λ₁`: the `O(dx²)`
/// discretisation error is almost the same for both ground states and
/// cancels in the difference.
pub fn ground_state_excess(p: &PotentialSpec, h: f64, config: &SolverConfig) -> Result<GroundStateExcess> {
    let energy = 2.0 * h + p.t.abs() * p.alpha.amplitude.abs() + p.eps.abs() * p.beta.amplitude.abs();
    let (coarse, fine) = config.grids_for_window(energy)?;
    let cap = config.max_eigenvalues;
    let harmonic = PotentialSpec::harmonic();
    let (sp, s0) = rayon::join(
        || refine(p, h, energy, coarse, fine, 0.0, cap),
        || refine(&harmonic, h, energy, coarse, fine, 0.0, cap),
    );
    let (sp, s0) = (sp?, s0?);
    if sp.is_empty() || s0.is_empty() {
        return Err(Error::Precondition(format!("no eigenvalue below {energy} at h = {h}")));
    }
    let d = sp.correlated_difference(&s0)?[0];
    let harmonic_error = (s0.eigenvalues[0] - h).abs();
    Ok(GroundStateExcess {
        h,
        lambda1: sp.eigenvalues[0],
        direct_error: sp.error_estimates[0],
        excess: d.value + (s0.eigenvalues[0] - h),
        error_estimate: d.bound() + harmonic_error,
    })
}

/// Richardson-extrapolated `j`-th eigenfunction (1-based) sampled on the
/// coarse grid, with the extrapolated eigenvalue.
#[derive(Debug, Clone)]
pub struct Eigenfunction {
    pub lambda: f64,
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl Eigenfunction {
    pub fn at(&self, x: f64) -> Option<f64> {
        self.grid.index_of(x).map(|i| self.values[i])
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| (self.grid.x(i), *v))
    }
}

pub fn eigenfunction<P: Potential + ?Sized>(
    potential: &P,
    h: f64,
    j: usize,
    config: &SolverConfig,
) -> Result<Eigenfunction> {
    if j == 0 {
        return Err(Error::Precondition("eigenvalue index is 1-based".into()));
    }
    let (coarse, fine) = config.grids()?;
    let op_coarse = discretize(potential, h, coarse)?;
    let op_fine = discretize(potential, h, fine)?;
    let (lc, lf) = rayon::join(|| op_coarse.lowest(j, 0.0), || op_fine.lowest(j, 0.0));
    let (lc, lf) = (lc[j - 1], lf[j - 1]);
    let (uc, uf) = rayon::join(|| op_coarse.eigenvector(lc), || op_fine.eigenvector(lf));
    let (uc, uf) = (uc?, uf?);
    let values = uc
        .iter()
        .enumerate()
        .map(|(i, c)| (4.0 * uf[2 * i + 1] - c) / 3.0)
        .collect();
    Ok(Eigenfunction {
        lambda: (4.0 * lf - lc) / 3.0,
        grid: coarse,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PotentialSpec;
    use proptest::prelude::*;

    fn harmonic_op(h: f64, n: usize) -> TridiagonalOperator {
        discretize(&PotentialSpec::harmonic(), h, Grid::new(8.0, n).unwrap()).unwrap()
    }

    /// Coefficients (ascending powers of λ) of det(T − λ) by the continuant recurrence.
    fn char_poly(diag: &[f64], off: &[f64]) -> Vec<f64> {
        let mut prev2 = vec![1.0];
        let mut prev = vec![diag[0], -1.0];
        for i in 1..diag.len() {
            let mut next = vec![0.0; prev.len() + 1];
            for (k, c) in prev.iter().enumerate() {
                next[k] += diag[i] * c;
                next[k + 1] -= c;
            }
            for (k, c) in prev2.iter().enumerate() {
                next[k] -= off[i - 1] * off[i - 1] * c;
            }
            prev2 = prev;
            prev = next;
        }
        prev
    }

    /// Durand–Kerner on the monic polynomial, then Newton polish.
    fn poly_roots(coeffs: &[f64]) -> Vec<f64> {
        use num_complex_free::C;
        let n = coeffs.len() - 1;
        let lead = coeffs[n];
        let monic: Vec<f64> = coeffs.iter().map(|c| c / lead).collect();
        let eval = |z: C| {
            let mut acc = C(0.0, 0.0);
            for c in monic.iter().rev() {
                acc = acc.mul(z).add(C(*c, 0.0));
            }
            acc
        };
        let radius = 1.0 + monic[..n].iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let mut z: Vec<C> = (0..n)
            .map(|k| {
                let a = 0.4 + 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                C(radius * a.cos(), radius * a.sin())
            })
            .collect();
        for _ in 0..2000 {
            for i in 0..n {
                let mut den = C(1.0, 0.0);
                for j in 0..n {
                    if i != j {
                        den = den.mul(z[i].sub(z[j]));
                    }
                }
                z[i] = z[i].sub(eval(z[i]).div(den));
            }
        }
        let mut roots: Vec<f64> = z.iter().map(|c| c.0).collect();
        roots.sort_by(|a, b| a.total_cmp(b));
        roots
    }

    /// det(T − λ) and its λ-derivative by the continuant recurrence.
    fn det_and_slope(diag: &[f64], off: &[f64], lambda: f64) -> (f64, f64) {
        let (mut p2, mut p1) = (1.0, diag[0] - lambda);
        let (mut d2, mut d1) = (0.0, -1.0);
        for i in 1..diag.len() {
            let e2 = off[i - 1] * off[i - 1];
            let p = (diag[i] - lambda) * p1 - e2 * p2;
            let d = (diag[i] - lambda) * d1 - p1 - e2 * d2;
            (p2, p1, d2, d1) = (p1, p, d1, d);
        }
        (p1, d1)
    }

    fn polish(diag: &[f64], off: &[f64], mut roots: Vec<f64>) -> Vec<f64> {
        for r in &mut roots {
            for _ in 0..8 {
                let (p, dp) = det_and_slope(diag, off, *r);
                if dp != 0.0 {
                    *r -= p / dp;
                }
            }
        }
        roots.sort_by(|a, b| a.total_cmp(b));
        roots
    }

    mod num_complex_free {
        #[derive(Clone, Copy)]
        pub struct C(pub f64, pub f64);
        impl C {
            pub fn add(self, o: C) -> C {
                C(self.0 + o.0, self.1 + o.1)
            }
            pub fn sub(self, o: C) -> C {
                C(self.0 - o.0, self.1 - o.1)
            }
            pub fn mul(self, o: C) -> C {
                C(self.0 * o.0 - self.1 * o.1, self.0 * o.1 + self.1 * o.0)
            }
            pub fn div(self, o: C) -> C {
                let d = o.0 * o.0 + o.1 * o.1;
                C(
                    (self.0 * o.0 + self.1 * o.1) / d,
                    (self.1 * o.0 - self.0 * o.1) / d,
                )
            }
        }
    }

    #[test]
    fn grid_is_symmetric() {
        let g = Grid::new(8.0, 15_999).unwrap();
        for i in 0..g.n {
            assert_eq!(g.x(g.n - 1 - i), -g.x(i));
        }
        assert_eq!(g.dx(), 1e-3);
        assert_eq!(g.index_of(-3.0).map(|i| g.x(i)), Some(-3.0));
        assert_eq!(g.coarsened().unwrap().n, 7_999);
        assert_eq!(g.coarsened().unwrap().refined(), g);
        assert!(Grid::new(8.0, 16_000).unwrap().coarsened().is_none());
        assert!(Grid::new(8.0, 2).is_err());
    }

    #[test]
    fn discretize_entries() {
        let op = harmonic_op(1.0, 4000);
        let dx = op.grid.dx();
        for i in [0, 17, 2000, 3999] {
            let x = op.grid.x(i);
            assert_eq!(op.diag[i], 2.0 / (dx * dx) + x * x);
        }
        assert!(op.offdiag.iter().all(|&e| e == -1.0 / (dx * dx)));

        let p = PotentialSpec::default();
        let op = discretize(&p, 0.3, Grid::new(8.0, 999).unwrap()).unwrap();
        let floor = 2.0 * 0.09 / (op.grid.dx() * op.grid.dx());
        assert!(op.diag.iter().all(|&d| d >= floor));
    }

    #[test]
    fn reflected_operator_has_reversed_diagonal() {
        let g = Grid::new(8.0, 3001).unwrap();
        let a = discretize(&PotentialSpec::plus(0.0, 0.05), 1.0, g).unwrap();
        let b = discretize(&PotentialSpec::minus(0.0, 0.05), 1.0, g).unwrap();
        let reversed: Vec<f64> = a.diag.iter().rev().cloned().collect();
        assert_eq!(b.diag, reversed);
    }

    #[test]
    fn count_below_examples() {
        let op = harmonic_op(1.0, 4000);
        assert_eq!(op.count_below(0.0), 0);
        assert_eq!(op.count_below(6.0), 3);
        let op = harmonic_op(0.5, 4000);
        assert_eq!(op.count_below(2.0), 2);
    }

    #[test]
    fn eigenvalues_below_examples() {
        let op = harmonic_op(1.0, 7999);
        let vals = op.eigenvalues_below(10.0, 1e-12, 100).unwrap();
        assert_eq!(vals.len(), 5);
        for (j, v) in vals.iter().enumerate() {
            // three-point Laplacian error is O(dx²) with dx = 2e-3
            assert!((v - (2 * j + 1) as f64).abs() < 1e-4, "{j}: {v}");
        }
        let op = harmonic_op(0.1, 7999);
        let vals = op.eigenvalues_below(1.0, 1e-13, 100).unwrap();
        assert_eq!(vals.len(), 5);
        for (j, v) in vals.iter().enumerate() {
            assert!((v - 0.1 * (2 * j + 1) as f64).abs() < 1e-4, "{j}: {v}");
        }
        assert!(matches!(
            op.eigenvalues_below(1.0, 1e-13, 3),
            Err(Error::WindowTooLarge { count: 5, .. })
        ));
    }

    #[test]
    fn perturbed_ground_state_lies_between_harmonic_levels() {
        let s = spectrum(&PotentialSpec::default(), 1.0, 4.0, &SolverConfig::default()).unwrap();
        assert!(s.eigenvalues[0] > 1.0 && s.eigenvalues[0] < 3.0);
        assert!(s.is_strictly_increasing());
    }

    #[test]
    fn refine_examples() {
        let s = spectrum(&PotentialSpec::harmonic(), 1.0, 2.0, &SolverConfig::default()).unwrap();
        assert!((s.eigenvalues[0] - 1.0).abs() < 1e-10, "{}", s.eigenvalues[0]);
        assert!(s.error_estimates.iter().all(|&e| e >= 0.0));

        let g = Grid::new(8.0, 7999).unwrap();
        let r = refine(&PotentialSpec::harmonic(), 1.0, 2.0, g, g, 1e-12, 10);
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn window_margin_is_enforced() {
        let op = harmonic_op(1.0, 999);
        assert!(op.check_window(50.0).is_ok());
        assert!(op.check_window(60.0).is_err());
    }

    #[test]
    fn harmonic_eigenvectors() {
        let cfg = SolverConfig::default();
        let ground = eigenfunction(&PotentialSpec::harmonic(), 1.0, 1, &cfg).unwrap();
        let u0 = ground.at(0.0).unwrap();
        assert!((u0 * u0 - std::f64::consts::PI.powf(-0.5)).abs() < 1e-6);

        let excited = eigenfunction(&PotentialSpec::harmonic(), 1.0, 2, &cfg).unwrap();
        assert!(excited.at(0.0).unwrap().abs() < 1e-8);
    }

    #[test]
    fn perturbed_ground_state_is_positive() {
        let cfg = SolverConfig::default();
        let (_, fine) = cfg.grids().unwrap();
        let op = discretize(&PotentialSpec::default(), 1.0, fine).unwrap();
        let lambda = op.lowest(1, 0.0)[0];
        let u = op.eigenvector(lambda).unwrap();
        assert!(u.iter().all(|&v| v > 0.0));
        let norm: f64 = fine.dx() * u.iter().map(|v| v * v).sum::<f64>();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigenvector_rejects_non_eigenvalue() {
        let op = harmonic_op(1.0, 3999);
        assert!(matches!(
            op.eigenvector(2.0),
            Err(Error::NoConvergence { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn tiny_operators_match_characteristic_polynomial(
            n in 3usize..=8,
            half_length in 1.0f64..4.0,
            h in 0.3f64..1.5,
            t in 0.0f64..2.0,
            eps in 0.0f64..2.0,
            reflect in any::<bool>(),
        ) {
            let mut p = PotentialSpec::plus(t, eps);
            p.reflect_beta = reflect;
            // Widen the bumps so they are seen by a coarse grid.
            p.alpha.half_width = 0.5;
            let op = discretize(&p, h, Grid::new(half_length, n).unwrap()).unwrap();
            let top = op.diag.iter().cloned().fold(0.0, f64::max) + 2.0 * op.coupling() + 1.0;
            let ours = op.eigenvalues_below(top, 1e-15, 100).unwrap();
            let oracle = polish(&op.diag, &op.offdiag, poly_roots(&char_poly(&op.diag, &op.offdiag)));
            prop_assert_eq!(ours.len(), n);
            // Roots of a near-double factor are ill-conditioned in coefficient form.
            prop_assume!(oracle.windows(2).all(|w| w[1] - w[0] > 1e-3));
            let scale = top.max(1.0);
            for (a, b) in ours.iter().zip(&oracle) {
                prop_assert!((a - b).abs() <= 1e-12 * scale, "{} vs {}", a, b);
            }
        }

        #[test]
        fn ratio_count_matches_pivot_count(
            lambda in -1.0f64..40.0,
            h in 0.2f64..1.0,
        ) {
            let op = discretize(&PotentialSpec::default(), h, Grid::new(8.0, 1999).unwrap()).unwrap();
            prop_assert_eq!(op.count_below(lambda), sturm_count(&op.diag, &op.offdiag, lambda));
        }

        #[test]
        fn batched_count_matches_scalar_count(
            lambdas in proptest::collection::vec(-1.0f64..60.0, 1..20),
            h in 0.2f64..1.0,
        ) {
            let op = discretize(&PotentialSpec::default(), h, Grid::new(8.0, 999).unwrap()).unwrap();
            let batched = op.count_below_many(&lambdas);
            for (l, c) in lambdas.iter().zip(&batched) {
                prop_assert_eq!(*c, op.count_below(*l));
            }
        }
    }
}
