use std::sync::Arc;

use super::conv::{convolve, convolve_exp, convolve_with_ek};
use super::grid::{trapezoid, SampledFunction, TimeGrid};
use super::volterra::volterra_solve;
use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_TERMS: usize = 10_000;

/// Convolution powers `L^{⋆1}, ..., L^{⋆K}`, truncated by the majorant
/// `(sup|L| T)^k / k!`.
///
/// The powers do not depend on `μ²`, so one instance serves every mode.
#[derive(Clone, Debug)]
pub struct ConvolutionPowers<T> {
    powers: Vec<SampledFunction<T>>,
}

impl<T: Real> ConvolutionPowers<T> {
    pub fn new(l: &SampledFunction<T>, tol: &T) -> Result<Self> {
        let terms = series_length(&l.sup_norm(), l.grid().horizon(), tol)?;
        let mut powers = Vec::with_capacity(terms);
        powers.push(l.clone());
        for k in 1..terms {
            let next = convolve(l, &powers[k - 1])?;
            powers.push(next);
        }
        Ok(ConvolutionPowers { powers })
    }

    /// Truncation index `K`: terms `1..=K` are summed.
    pub fn terms(&self) -> usize {
        self.powers.len()
    }

    /// `L^{⋆k}` for `1 <= k <= terms()`.
    pub fn power(&self, k: usize) -> &SampledFunction<T> {
        &self.powers[k - 1]
    }

    pub fn grid(&self) -> &Arc<TimeGrid<T>> {
        self.powers[0].grid()
    }
}

/// Smallest `K >= 3` whose first omitted term bound `(sT)^{K+1}/(K+1)!` is below `tol`.
pub fn series_length<T: Real>(sup: &T, horizon: &T, tol: &T) -> Result<usize> {
    if !(tol.is_finite() && tol.is_positive()) {
        return Err(Error::InvalidArgument(format!(
            "series tolerance must be positive, got {tol}"
        )));
    }
    let x = sup.clone() * horizon.clone();
    let mut bound = T::one();
    for k in 1..=MAX_TERMS {
        bound *= x.clone() / T::of_usize(k);
        // bound = x^k/k!, the first omitted term when K = k - 1
        if k >= 4 && bound < *tol {
            return Ok(k - 1);
        }
    }
    Err(Error::InvalidArgument(format!(
        "series majorant with sup|L|*T = {x} needs more than {MAX_TERMS} terms"
    )))
}

/// `H` from the convolution series together with its truncation index.
#[derive(Clone, Debug)]
pub struct SeriesResult<T> {
    pub h: SampledFunction<T>,
    pub terms: usize,
}

/// `H = -Σ_{k>=1} L^{⋆k} ⋆ e_{k-1}`.
pub fn h_series<T: Real>(l: &SampledFunction<T>, mu2: &T, tol: &T) -> Result<SeriesResult<T>> {
    let powers = ConvolutionPowers::new(l, tol)?;
    Ok(h_series_from(&powers, mu2))
}

pub fn h_series_from<T: Real>(powers: &ConvolutionPowers<T>, mu2: &T) -> SeriesResult<T> {
    let grid = powers.grid();
    let mut acc = vec![T::zero(); grid.len()];
    for k in 1..=powers.terms() {
        let term = convolve_with_ek(powers.power(k), mu2, k - 1);
        for (a, v) in acc.iter_mut().zip(term.values()) {
            *a -= v.clone();
        }
    }
    SeriesResult {
        h: SampledFunction::from_parts(grid.clone(), acc),
        terms: powers.terms(),
    }
}

/// `H` as the resolvent of `Z = -L⋆e_0`, i.e. `H + Z⋆H = Z`.
pub fn h_direct<T: Real>(l: &SampledFunction<T>, mu2: &T) -> Result<SampledFunction<T>> {
    let z = z_kernel(l, mu2);
    volterra_solve(&z, &z)
}

/// `Z(t) = -∫_0^t L(t-s) e^{-μ² s} ds`.
pub fn z_kernel<T: Real>(l: &SampledFunction<T>, mu2: &T) -> SampledFunction<T> {
    convolve_exp(l, mu2).neg()
}

/// Lower-triangular table `G(t_i, s_j) = -Σ_k L^{⋆k}(t_i - s_j) s_j^k/k!`, `j <= i`.
#[derive(Clone, Debug)]
pub struct GKernel<T> {
    grid: Arc<TimeGrid<T>>,
    rows: Vec<Vec<T>>,
    terms: usize,
}

impl<T: Real> GKernel<T> {
    pub fn grid(&self) -> &Arc<TimeGrid<T>> {
        &self.grid
    }

    pub fn terms(&self) -> usize {
        self.terms
    }

    /// `G(t_i, s_j)`; zero above the diagonal.
    pub fn at(&self, i: usize, j: usize) -> T {
        if j > i {
            T::zero()
        } else {
            self.rows[i][j].clone()
        }
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.rows[i]
    }

    /// `∫_0^{t_i} G(t_i, s) e^{-μ² s} ds` by the trapezoid rule at every node.
    pub fn apply_exp(&self, mu2: &T) -> SampledFunction<T> {
        let w: Vec<T> = self.grid.times().map(|s| (-(mu2.clone() * s)).exp()).collect();
        let dt = self.grid.dt();
        let values = self
            .rows
            .iter()
            .map(|row| {
                let prod: Vec<T> = row.iter().zip(&w).map(|(g, e)| g.clone() * e.clone()).collect();
                trapezoid(&prod, dt)
            })
            .collect();
        SampledFunction::from_parts(self.grid.clone(), values)
    }
}

pub fn g_kernel<T: Real>(l: &SampledFunction<T>, tol: &T) -> Result<GKernel<T>> {
    let powers = ConvolutionPowers::new(l, tol)?;
    Ok(g_kernel_from(&powers))
}

pub fn g_kernel_from<T: Real>(powers: &ConvolutionPowers<T>) -> GKernel<T> {
    let grid = powers.grid().clone();
    let n = grid.len();
    // s^k/k! per column
    let monomials: Vec<Vec<T>> = grid
        .times()
        .map(|s| {
            let mut m = Vec::with_capacity(powers.terms());
            let mut p = T::one();
            for k in 1..=powers.terms() {
                p *= s.clone() / T::of_usize(k);
                m.push(p.clone());
            }
            m
        })
        .collect();
    let rows = (0..n)
        .map(|i| {
            (0..=i)
                .map(|j| {
                    let mut g = T::zero();
                    for k in 1..=powers.terms() {
                        g -= powers.power(k).at(i - j).clone() * monomials[j][k - 1].clone();
                    }
                    g
                })
                .collect()
        })
        .collect();
    GKernel {
        grid,
        rows,
        terms: powers.terms(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncation_rule() {
        assert_eq!(series_length(&0.0f64, &1.0, &1e-12).unwrap(), 3);
        let k = series_length(&1.0f64, &1.0, &1e-12).unwrap();
        // 1/15! ~ 7.6e-13 < 1e-12 <= 1/14!
        assert_eq!(k, 14);
        assert!(series_length(&1.0f64, &1.0, &0.0).is_err());
    }

    #[test]
    fn zero_l_gives_zero_h() {
        let g = TimeGrid::new(1.0f64, 20).unwrap();
        let l = SampledFunction::zeros(&g);
        assert_eq!(h_series(&l, &3.0, &1e-12).unwrap().h.sup_norm(), 0.0);
        assert_eq!(h_direct(&l, &3.0).unwrap().sup_norm(), 0.0);
        let gk = g_kernel(&l, &1e-12).unwrap();
        assert_eq!(gk.at(5, 2), 0.0);
    }

    #[test]
    fn g_vanishes_at_s_zero() {
        let g = TimeGrid::new(1.0f64, 50).unwrap();
        let l = SampledFunction::from_fn(&g, |t| -(-t).exp()).unwrap();
        let gk = g_kernel(&l, &1e-12).unwrap();
        for i in 0..g.len() {
            assert_eq!(gk.at(i, 0), 0.0);
        }
    }
}
