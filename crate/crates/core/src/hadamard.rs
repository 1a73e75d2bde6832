//! First variation of an eigenvalue under a potential perturbation,
//! `dλ_j/ds = ∫ δV |u_j|²`, and a central-difference oracle for it.

use serde::{Deserialize, Serialize};

use crate::eigensolve::{discretize, SolverConfig, TridiagonalOperator};
use crate::potential::{BumpSpec, Perturbation, Perturbed, Potential, PotentialSpec};
use crate::{Error, Result};

pub const DEFAULT_EPS_FD: f64 = 1e-5;

/// `dx·Σ δV(xᵢ) u(xᵢ)²` with the solver's normalisation.
fn quadrature(op: &TridiagonalOperator, u: &[f64], direction: &Perturbation) -> f64 {
    let dx = op.grid.dx();
    u.iter()
        .enumerate()
        .map(|(i, ui)| direction.eval(op.grid.x(i)) * ui * ui)
        .sum::<f64>()
        * dx
}

fn eigenpair(op: &TridiagonalOperator, j: usize) -> Result<(f64, Vec<f64>)> {
    let lambda = op.lowest(j, 0.0)[j - 1];
    Ok((lambda, op.eigenvector(lambda)?))
}

fn check_index(j: usize) -> Result<()> {
    if j == 0 {
        return Err(Error::Precondition("eigenvalue index is 1-based".into()));
    }
    Ok(())
}

/// The formula on the fine grid and its Richardson companion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Variation {
    /// Fine-grid quadrature; the discrete derivative of the fine-grid eigenvalue.
    pub value: f64,
    /// `(4·fine − coarse)/3`.
    pub extrapolated: f64,
    /// `|fine − coarse|/3`.
    pub error_estimate: f64,
}

/// `∫ δV |u_j|²` for the `j`-th eigenfunction (1-based) of `p`.
pub fn variational_derivative<P: Potential + ?Sized>(
    p: &P,
    h: f64,
    j: usize,
    direction: Perturbation,
    config: &SolverConfig,
) -> Result<Variation> {
    check_index(j)?;
    let (coarse, fine) = config.grids()?;
    let (oc, of) = (discretize(p, h, coarse)?, discretize(p, h, fine)?);
    let (rc, rf) = rayon::join(|| eigenpair(&oc, j), || eigenpair(&of, j));
    let ((_, uc), (_, uf)) = (rc?, rf?);
    let (c, f) = (quadrature(&oc, &uc, &direction), quadrature(&of, &uf, &direction));
    Ok(Variation {
        value: f,
        extrapolated: (4.0 * f - c) / 3.0,
        error_estimate: (f - c).abs() / 3.0,
    })
}

/// `(λ_j(+s) − λ_j(−s))/(2s)` on the fine grid, eigenvalues bisected to full
/// precision.
pub fn fd_oracle<P: Potential + ?Sized>(
    p: &P,
    h: f64,
    j: usize,
    direction: Perturbation,
    eps_fd: f64,
    config: &SolverConfig,
) -> Result<f64> {
    check_index(j)?;
    if !(eps_fd > 0.0) {
        return Err(Error::Precondition(format!("eps_fd = {eps_fd} must be positive")));
    }
    let (_, fine) = config.grids()?;
    let shifted = |amount: f64| -> Result<Vec<f64>> {
        let q = Perturbed {
            base: p,
            direction,
            amount,
        };
        Ok(discretize(&q, h, fine)?.lowest(j + 1, 0.0))
    };
    let (base, (plus, minus)) = rayon::join(
        || shifted(0.0),
        || rayon::join(|| shifted(eps_fd), || shifted(-eps_fd)),
    );
    let (base, plus, minus) = (base?, plus?, minus?);
    // The shifted eigenvalue must stay closer to its own level than to either neighbour.
    let below = if j >= 2 { base[j - 1] - base[j - 2] } else { f64::INFINITY };
    let above = base[j] - base[j - 1];
    let half_gap = 0.5 * below.min(above);
    for (label, shifted) in [("+", &plus), ("-", &minus)] {
        if (shifted[j - 1] - base[j - 1]).abs() >= half_gap {
            return Err(Error::Precondition(format!(
                "eigenvalue {j} moves by more than half a gap at {label}{eps_fd:e}"
            )));
        }
    }
    Ok((plus[j - 1] - minus[j - 1]) / (2.0 * eps_fd))
}

/// One formula/oracle comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationResult {
    pub j: usize,
    pub h: f64,
    pub formula_value: f64,
    pub oracle_value: f64,
    pub eps_fd: f64,
    /// `|formula − oracle|`.
    pub discrepancy: f64,
    /// Richardson error of the formula, for reference.
    pub quadrature_error: f64,
}

impl VariationResult {
    pub fn relative_discrepancy(&self) -> f64 {
        self.discrepancy / self.formula_value.abs()
    }
}

/// Formula and oracle at each `eps_fd`, same grid.
pub fn compare<P: Potential + ?Sized>(
    p: &P,
    h: f64,
    j: usize,
    direction: Perturbation,
    eps_list: &[f64],
    config: &SolverConfig,
) -> Result<Vec<VariationResult>> {
    let formula = variational_derivative(p, h, j, direction, config)?;
    eps_list
        .iter()
        .map(|&eps_fd| {
            let oracle = fd_oracle(p, h, j, direction, eps_fd, config)?;
            Ok(VariationResult {
                j,
                h,
                formula_value: formula.value,
                oracle_value: oracle,
                eps_fd,
                discrepancy: (formula.value - oracle).abs(),
                quadrature_error: formula.error_estimate,
            })
        })
        .collect()
}

/// `log₂` of successive discrepancy ratios for halved `eps_fd`.
pub fn observed_orders(results: &[VariationResult]) -> Vec<f64> {
    results
        .windows(2)
        .map(|w| (w[0].discrepancy / w[1].discrepancy).ln() / (w[0].eps_fd / w[1].eps_fd).ln())
        .collect()
}

pub fn write_csv<W: std::io::Write>(rows: &[VariationResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["j", "h", "eps_fd", "formula", "oracle", "discrepancy"])?;
    for r in rows {
        w.write_record(&[
            r.j.to_string(),
            format!("{}", r.h),
            format!("{:e}", r.eps_fd),
            format!("{:.17e}", r.formula_value),
            format!("{:.17e}", r.oracle_value),
            format!("{:.6e}", r.discrepancy),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Directional derivatives along `β(x)` and `β(−x)` for the ground state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub d_plus: f64,
    pub d_minus: f64,
    /// `d_plus − d_minus = ∫β(x)(u₁(x)² − u₁(−x)²)`, Richardson-extrapolated.
    pub gap: f64,
    /// Richardson error of the gap plus a rounding floor.
    pub gap_error: f64,
}

/// Ground-state derivatives of the `ε = 0` base along both β directions.
pub fn asymmetry_witness(
    p_base: &PotentialSpec,
    h: f64,
    beta: BumpSpec,
    config: &SolverConfig,
) -> Result<Witness> {
    if p_base.eps != 0.0 {
        return Err(Error::Precondition(format!(
            "base potential must have eps = 0, got {}",
            p_base.eps
        )));
    }
    let (coarse, fine) = config.grids()?;
    let (oc, of) = (discretize(p_base, h, coarse)?, discretize(p_base, h, fine)?);
    let (rc, rf) = rayon::join(|| eigenpair(&oc, 1), || eigenpair(&of, 1));
    let ((_, uc), (_, uf)) = (rc?, rf?);
    let plus = Perturbation::bump(beta, false);
    let minus = Perturbation::bump(beta, true);
    let pair = |op: &TridiagonalOperator, u: &[f64]| (quadrature(op, u, &plus), quadrature(op, u, &minus));
    let ((pc, mc), (pf, mf)) = (pair(&oc, &uc), pair(&of, &uf));
    let extrapolate = |f: f64, c: f64| (4.0 * f - c) / 3.0;
    let (gf, gc) = (pf - mf, pc - mc);
    let d_plus = extrapolate(pf, pc);
    let d_minus = extrapolate(mf, mc);
    let floor = 4.0 * f64::EPSILON * (of.len() as f64).sqrt() * d_plus.abs().max(d_minus.abs());
    Ok(Witness {
        d_plus,
        d_minus,
        gap: extrapolate(gf, gc),
        gap_error: (gf - gc).abs() / 3.0 + floor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature;

    fn small_config() -> SolverConfig {
        SolverConfig::default().with_n(3_999)
    }

    #[test]
    fn zero_amplitude_gives_zero() {
        let p = PotentialSpec::plus(0.05, 0.0);
        let flat = Perturbation::bump(BumpSpec::new(3.5, 0.5, 0.0), false);
        let cfg = small_config();
        assert_eq!(variational_derivative(&p, 1.0, 1, flat, &cfg).unwrap().value, 0.0);
        assert_eq!(fd_oracle(&p, 1.0, 1, flat, 1e-5, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn constant_direction_gives_one() {
        let p = PotentialSpec::plus(0.05, 0.0);
        let v = variational_derivative(&p, 1.0, 2, Perturbation::Constant(1.0), &small_config()).unwrap();
        assert!((v.value - 1.0).abs() < 1e-10, "{v:?}");
    }

    #[test]
    fn harmonic_ground_state_matches_gaussian_quadrature() {
        let beta = BumpSpec::default_beta();
        let v = variational_derivative(
            &PotentialSpec::harmonic(),
            1.0,
            1,
            Perturbation::bump(beta, false),
            &SolverConfig::default(),
        )
        .unwrap();
        let exact = quadrature::integrate(
            |x| beta.eval(x) * (-x * x).exp() / std::f64::consts::PI.sqrt(),
            3.0,
            4.0,
            1e-18,
            10_000,
        )
        .unwrap()
        .value;
        assert!((v.extrapolated - exact).abs() < 1e-9 * exact, "{} {exact}", v.extrapolated);
    }

    #[test]
    fn oracle_agrees_with_formula() {
        let p = PotentialSpec::plus(0.05, 0.0);
        let dir = Perturbation::bump(BumpSpec::default_beta(), false);
        let r = compare(&p, 1.0, 1, dir, &[1e-5], &SolverConfig::default()).unwrap();
        assert!(r[0].relative_discrepancy() < 1e-4, "{r:?}");
    }

    #[test]
    fn ordering_change_is_rejected() {
        let p = PotentialSpec::harmonic();
        let r = fd_oracle(&p, 1.0, 2, Perturbation::Constant(1.0), 1.5, &small_config());
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn symmetric_base_has_no_witness() {
        let w = asymmetry_witness(
            &PotentialSpec::harmonic(),
            1.0,
            BumpSpec::default_beta(),
            &SolverConfig::default(),
        )
        .unwrap();
        assert!(w.gap.abs() < 1e-12, "{w:?}");
        assert!((w.d_plus - w.d_minus).abs() < 1e-12);
    }

    #[test]
    fn witness_needs_unperturbed_beta() {
        let r = asymmetry_witness(
            &PotentialSpec::plus(0.05, 0.05),
            1.0,
            BumpSpec::default_beta(),
            &small_config(),
        );
        assert!(r.is_err());
    }
}
