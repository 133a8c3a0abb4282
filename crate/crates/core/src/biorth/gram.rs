use serde::Serialize;

use super::linalg::{cholesky, mat_mul};
use crate::error::{Error, Result};
use crate::moment::least_squares;
use crate::scalar::Real;
use crate::transform::Horizon;

/// Gram matrix of `{e^{-x_n t}}` over `(0, T)` or `(0, ∞)`.
#[derive(Clone, Debug)]
pub struct GramSystem<T> {
    pub exponents: Vec<T>,
    pub horizon: Option<Horizon>,
    pub matrix: Vec<Vec<T>>,
    pub bits: u32,
}

/// `G_ij = (1 - e^{-(x_i+x_j)T}) / (x_i + x_j)`, or `1/(x_i + x_j)` for `T = ∞`.
pub fn gram<T: Real>(exponents: Vec<T>, horizon: Horizon) -> Result<GramSystem<T>> {
    if exponents.is_empty() {
        return Err(Error::InvalidArgument("Gram system needs at least one exponent".into()));
    }
    if let Horizon::Finite(h) = horizon {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidArgument(format!("horizon must be positive, got {h}")));
        }
    }
    for (i, x) in exponents.iter().enumerate() {
        if !(*x > T::zero()) || !x.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "exponents must be positive; entry {} is {}",
                i + 1,
                x.to_f64_lossy()
            )));
        }
        if exponents[..i].iter().any(|y| y == x) {
            return Err(Error::DuplicateExponent {
                value: x.to_f64_lossy(),
            });
        }
    }
    let n = exponents.len();
    let mut matrix = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s = exponents[i].clone() + exponents[j].clone();
            let v = match horizon {
                Horizon::Infinite => T::one() / s,
                Horizon::Finite(h) => (T::one() - (-(s.clone() * T::of(h))).exp()) / s,
            };
            matrix[i][j] = v.clone();
            matrix[j][i] = v;
        }
    }
    Ok(GramSystem {
        exponents,
        horizon: Some(horizon),
        matrix,
        bits: T::MANTISSA_BITS,
    })
}

impl<T: Real> GramSystem<T> {
    /// Gram matrix of an arbitrary family, given directly.
    pub fn from_matrix(matrix: Vec<Vec<T>>) -> Result<Self> {
        let n = matrix.len();
        if n == 0 || matrix.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("Gram matrix must be square and nonempty".into()));
        }
        for i in 0..n {
            for j in 0..i {
                if matrix[i][j] != matrix[j][i] {
                    return Err(Error::InvalidArgument(format!("Gram matrix is not symmetric at ({}, {})", i + 1, j + 1)));
                }
            }
        }
        Ok(GramSystem {
            exponents: Vec::new(),
            horizon: None,
            matrix,
            bits: T::MANTISSA_BITS,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.len()
    }
}

/// Minimal biorthogonal norms `‖ψ_n‖ = ((G⁻¹)_nn)^{1/2}` with residuals.
#[derive(Clone, Debug, Serialize)]
pub struct BiorthReport {
    pub bits: u32,
    pub n: Vec<usize>,
    pub norms: Vec<f64>,
    pub log_norms: Vec<f64>,
    /// `max_m |⟨ψ_n, e_m⟩ - δ_nm|` per index.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub condition: f64,
}

pub const RESIDUAL_TOL: f64 = 1e-20;


/// Full inverse with residual `max |G⁻¹G - I|`; escalation-aware errors.
pub(crate) struct CheckedInverse<T> {
    pub inverse: Vec<Vec<T>>,
    /// `G⁻¹G`.
    pub product: Vec<Vec<T>>,
    pub residual: f64,
    pub condition: f64,
}

pub(crate) fn checked_inverse<T: Real>(matrix: &[Vec<T>], tolerance: f64) -> Result<CheckedInverse<T>> {
    let bits = T::MANTISSA_BITS;
    let chol = cholesky(matrix).map_err(|p| Error::NotPositiveDefinite {
        bits,
        pivot: p.pivot + 1,
        value: p.value,
        condition: p.condition,
    })?;
    let condition = chol.condition_estimate();
    let inv = chol.inverse();
    let prod = mat_mul(&inv, matrix);
    let mut residual = 0.0f64;
    for (i, row) in prod.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let target = if i == j { T::one() } else { T::zero() };
            residual = residual.max((v.clone() - target).abs().to_f64_lossy());
        }
    }
    if !(residual <= tolerance) {
        return Err(Error::ResidualTooLarge {
            bits,
            residual,
            tolerance,
        });
    }
    Ok(CheckedInverse {
        inverse: inv,
        product: prod,
        residual,
        condition,
    })
}

pub fn min_norm_biorth<T: Real>(gs: &GramSystem<T>) -> Result<BiorthReport> {
    min_norm_biorth_with(gs, RESIDUAL_TOL)
}

pub fn min_norm_biorth_with<T: Real>(gs: &GramSystem<T>, tolerance: f64) -> Result<BiorthReport> {
    let CheckedInverse {
        inverse: inv,
        product: prod,
        condition,
        ..
    } = checked_inverse(&gs.matrix, tolerance)?;
    let n = gs.dim();
    let mut norms = Vec::with_capacity(n);
    let mut log_norms = Vec::with_capacity(n);
    let mut residuals = Vec::with_capacity(n);
    for i in 0..n {
        let d = inv[i][i].clone();
        if !(d > T::zero()) {
            return Err(Error::NotPositiveDefinite {
                bits: T::MANTISSA_BITS,
                pivot: i + 1,
                value: d.to_f64_lossy(),
                condition,
            });
        }
        log_norms.push((d.ln() * T::of(0.5)).to_f64_lossy());
        norms.push(d.sqrt().to_f64_lossy());
        let r = prod[i]
            .iter()
            .enumerate()
            .map(|(j, v)| {
                let target = if i == j { T::one() } else { T::zero() };
                (v.clone() - target).abs().to_f64_lossy()
            })
            .fold(0.0, f64::max);
        residuals.push(r);
    }
    let max_residual = residuals.iter().cloned().fold(0.0, f64::max);
    Ok(BiorthReport {
        bits: T::MANTISSA_BITS,
        n: (1..=n).collect(),
        norms,
        log_norms,
        residuals,
        max_residual,
        condition,
    })
}

/// Diagonal of the inverse Cauchy matrix `1/(x_i + x_j)`, in log space.
#[derive(Clone, Debug, Serialize)]
pub struct CauchyDiag {
    pub n: Vec<usize>,
    /// `ln (C⁻¹)_nn`.
    pub log_diag: Vec<f64>,
    /// `ln ‖ψ_n‖ = ln (C⁻¹)_nn / 2`.
    pub log_norms: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Relative gap below which two exponents count as nearly coincident.
pub const COINCIDENCE_GAP: f64 = 1e-8;

/// `(C⁻¹)_nn = 2x_n Π_{k≠n} [(x_k + x_n)/(x_k - x_n)]²` for every index.
pub fn cauchy_diag<T: Real>(x: &[T]) -> Result<CauchyDiag> {
    cauchy_diag_at(x, &(1..=x.len()).collect::<Vec<_>>())
}

/// [`cauchy_diag`] restricted to the listed (1-based) indices of the family.
pub fn cauchy_diag_at<T: Real>(x: &[T], indices: &[usize]) -> Result<CauchyDiag> {
    let (logs, warnings) = cauchy_log_diag(x, indices)?;
    let log_diag: Vec<f64> = logs.iter().map(Real::to_f64_lossy).collect();
    let log_norms = log_diag.iter().map(|v| 0.5 * v).collect();
    Ok(CauchyDiag {
        n: indices.to_vec(),
        log_diag,
        log_norms,
        warnings,
    })
}

/// `ln (C⁻¹)_nn` at the working precision, with conditioning warnings.
pub fn cauchy_log_diag<T: Real>(x: &[T], indices: &[usize]) -> Result<(Vec<T>, Vec<String>)> {
    let mut warnings = Vec::new();
    for (i, v) in x.iter().enumerate() {
        if !(*v > T::zero()) || !v.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "exponents must be positive; entry {} is {}",
                i + 1,
                v.to_f64_lossy()
            )));
        }
    }
    let mut log_diag = Vec::with_capacity(indices.len());
    for &n in indices {
        if n == 0 || n > x.len() {
            return Err(Error::InvalidArgument(format!("index {n} outside 1..={}", x.len())));
        }
        let xn = x[n - 1].clone();
        let mut acc = (T::of(2.0) * xn.clone()).ln();
        for (k, xk) in x.iter().enumerate() {
            if k == n - 1 {
                continue;
            }
            let gap = (xk.clone() - xn.clone()).abs();
            if gap.is_zero() {
                return Err(Error::DuplicateExponent {
                    value: xn.to_f64_lossy(),
                });
            }
            let sum = xk.clone() + xn.clone();
            if gap.clone() < T::of(COINCIDENCE_GAP) * sum.clone() {
                warnings.push(format!(
                    "exponents {} and {} nearly coincide (relative gap {:e}); the diagonal is ill-conditioned",
                    n,
                    k + 1,
                    (gap.clone() / sum.clone()).to_f64_lossy()
                ));
            }
            acc += T::of(2.0) * (sum / gap).ln();
        }
        log_diag.push(acc);
    }
    Ok((log_diag, warnings))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GrowthFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square deviation from the fitted line.
    pub residual: f64,
    pub first: usize,
    pub last: usize,
}

pub const MIN_FIT_POINTS: usize = 8;

/// Least-squares line through `(n, ln‖ψ_n‖)` over `range` (inclusive,
/// 1-based), by default the upper half of the listed indices.
pub fn growth_fit(n: &[usize], log_norms: &[f64], range: Option<(usize, usize)>) -> Result<GrowthFit> {
    if n.len() != log_norms.len() {
        return Err(Error::LengthMismatch {
            expected: n.len(),
            got: log_norms.len(),
        });
    }
    if n.len() < MIN_FIT_POINTS {
        return Err(Error::InvalidArgument(format!(
            "growth fit needs at least {MIN_FIT_POINTS} indices, got {}",
            n.len()
        )));
    }
    let (lo, hi) = range.unwrap_or_else(|| {
        let mut sorted = n.to_vec();
        sorted.sort_unstable();
        (sorted[sorted.len() / 2], sorted[sorted.len() - 1])
    });
    let (xs, ys): (Vec<f64>, Vec<f64>) = n
        .iter()
        .zip(log_norms)
        .filter(|(k, _)| (lo..=hi).contains(*k))
        .map(|(k, v)| (*k as f64, *v))
        .unzip();
    if xs.len() < 2 {
        return Err(Error::InvalidArgument(format!("fit range {lo}..={hi} holds fewer than two indices")));
    }
    let (slope, intercept) = least_squares(&xs, &ys);
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum::<f64>()
        / xs.len() as f64)
        .sqrt();
    Ok(GrowthFit {
        slope,
        intercept,
        residual,
        first: lo,
        last: hi,
    })
}

pub fn growth_fit_report(report: &BiorthReport, range: Option<(usize, usize)>) -> Result<GrowthFit> {
    growth_fit(&report.n, &report.log_norms, range)
}

/// Exponent family by rule.
#[derive(Clone, Debug, PartialEq, serde::Deserialize, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ExponentFamily {
    /// `x_n = n²π² - shift`, `n = 1..=count`.
    PiSquared { count: usize, shift: f64 },
    Explicit { values: Vec<f64> },
}

impl ExponentFamily {
    pub fn values<T: Real>(&self) -> Vec<T> {
        match self {
            ExponentFamily::PiSquared { count, shift } => (1..=*count)
                .map(|n| {
                    let pi = T::pi();
                    T::of_usize(n * n) * pi.clone() * pi - T::of(*shift)
                })
                .collect(),
            ExponentFamily::Explicit { values } => values.iter().map(|v| T::of(*v)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ExponentFamily::PiSquared { count, .. } => *count,
            ExponentFamily::Explicit { values } => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Mp256;

    #[test]
    fn two_by_two_cauchy() {
        let gs = gram(vec![1.0f64, 2.0], Horizon::Infinite).unwrap();
        assert_eq!(gs.matrix, vec![vec![0.5, 1.0 / 3.0], vec![1.0 / 3.0, 0.25]]);
        let r = min_norm_biorth_with(&gs, 1e-12).unwrap();
        assert!((r.norms[0].powi(2) - 18.0).abs() < 1e-12);
        let c = cauchy_diag(&[1.0f64, 2.0]).unwrap();
        assert!((c.log_diag[0] - 18f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn single_exponent() {
        let gs = gram(vec![Mp256::of(1.0)], Horizon::Infinite).unwrap();
        let r = min_norm_biorth(&gs).unwrap();
        assert!((r.norms[0].powi(2) - 2.0).abs() < 1e-15);
        assert!((cauchy_diag(&[1.0f64]).unwrap().log_diag[0] - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn duplicates_and_signs_are_rejected() {
        assert!(matches!(
            gram(vec![1.0f64, 1.0], Horizon::Infinite),
            Err(Error::DuplicateExponent { .. })
        ));
        assert!(gram(vec![-1.0f64], Horizon::Infinite).is_err());
        assert!(cauchy_diag(&[2.0f64, 2.0]).is_err());
        let near = cauchy_diag(&[1.0f64, 1.0 + 1e-12]).unwrap();
        assert!(!near.warnings.is_empty());
    }

    #[test]
    fn finite_horizon_entries_increase() {
        let x = vec![1.0f64, 4.0, 9.0];
        let inf = gram(x.clone(), Horizon::Infinite).unwrap();
        let mut prev = gram(x.clone(), Horizon::Finite(0.1)).unwrap();
        for t in [0.5, 1.0, 5.0, 50.0] {
            let g = gram(x.clone(), Horizon::Finite(t)).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    assert!(g.matrix[i][j] >= prev.matrix[i][j]);
                    assert!(g.matrix[i][j] <= inf.matrix[i][j]);
                }
            }
            prev = g;
        }
    }

    #[test]
    fn fit_needs_eight_points() {
        let n: Vec<usize> = (1..=7).collect();
        assert!(growth_fit(&n, &[0.0; 7], None).is_err());
        let n: Vec<usize> = (1..=10).collect();
        let y: Vec<f64> = n.iter().map(|&k| 2.0 * k as f64 + 1.0).collect();
        let fit = growth_fit(&n, &y, None).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12 && (fit.intercept - 1.0).abs() < 1e-12);
        assert_eq!((fit.first, fit.last), (6, 10));
    }
}
