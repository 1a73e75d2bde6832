//! Small least-squares fits.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Standard error of the slope (0 with two points).
    pub slope_stderr: f64,
}

/// Ordinary least squares `y ≈ intercept + slope·x`.
pub fn line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Fit(format!(
            "line fit needs at least two paired points, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    let slope_stderr = if xs.len() > 2 {
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LineFit {
        slope,
        intercept,
        r_squared,
        slope_stderr,
    })
}

/// Least-squares coefficients of `y ≈ Σ c_k·basis_k(x)`, with their standard
/// errors. Solved through the normal equations with partial pivoting, which
/// is adequate for the handful of well-scaled columns used here.
pub fn linear_model(
    xs: &[f64],
    ys: &[f64],
    basis: &[&dyn Fn(f64) -> f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = basis.len();
    if xs.len() != ys.len() || xs.len() < m || m == 0 {
        return Err(Error::Fit(format!(
            "{} points cannot determine {m} coefficients",
            xs.len()
        )));
    }
    let rows: Vec<Vec<f64>> = xs.iter().map(|&x| basis.iter().map(|b| b(x)).collect()).collect();
    let mut a = vec![vec![0.0; 2 * m]; m];
    let mut rhs = vec![0.0; m];
    for (row, y) in rows.iter().zip(ys) {
        for i in 0..m {
            rhs[i] += row[i] * y;
            for k in 0..m {
                a[i][k] += row[i] * row[k];
            }
        }
    }
    // Augment with the identity to read off (AᵀA)⁻¹ for the standard errors.
    for (i, r) in a.iter_mut().enumerate() {
        r[m + i] = 1.0;
    }
    let mut b = rhs.clone();
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))
            .expect("non-empty range");
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::Fit("singular normal equations".into()));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in 0..m {
            if r == col {
                continue;
            }
            let f = a[r][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..2 * m {
                a[r][k] -= f * a[col][k];
            }
            b[r] -= f * b[col];
        }
    }
    let coeffs: Vec<f64> = (0..m).map(|i| b[i] / a[i][i]).collect();
    let sse: f64 = rows
        .iter()
        .zip(ys)
        .map(|(row, y)| {
            let fit: f64 = row.iter().zip(&coeffs).map(|(r, c)| r * c).sum();
            (y - fit).powi(2)
        })
        .sum();
    let dof = xs.len() - m;
    let sigma2 = if dof > 0 { sse / dof as f64 } else { 0.0 };
    let stderr = (0..m).map(|i| (sigma2 * a[i][m + i] / a[i][i]).sqrt()).collect();
    Ok((coeffs, stderr))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let xs = [1.0, 2.0, 3.0, 5.0];
        let ys: Vec<f64> = xs.iter().map(|x| 0.5 - 2.0 * x).collect();
        let f = line(&xs, &ys).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-14);
        assert!((f.intercept - 0.5).abs() < 1e-14);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
    }

    #[test]
    fn quadratic_model_recovers_coefficients() {
        let xs: Vec<f64> = (0..9).map(|k| 0.1 * k as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - x * x + 0.25 * x.powi(4)).collect();
        let (c, se) = linear_model(&xs, &ys, &[&|_| 1.0, &|x| x * x, &|x| x.powi(4)]).unwrap();
        assert!((c[0] - 3.0).abs() < 1e-12);
        assert!((c[1] + 1.0).abs() < 1e-10);
        assert!((c[2] - 0.25).abs() < 1e-9);
        assert!(se.iter().all(|s| *s < 1e-8));
    }

    #[test]
    fn degenerate_input_is_an_error() {
        assert!(line(&[1.0], &[2.0]).is_err());
        assert!(line(&[1.0, 1.0], &[2.0, 3.0]).is_err());
    }
}
