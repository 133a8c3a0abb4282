use std::sync::Arc;

use super::conv::convolve;
use super::grid::{SampledFunction, TimeGrid};
use super::memory::MemoryKernel;
use super::volterra::volterra_solve;
use crate::error::Result;
use crate::scalar::Real;

/// `a = M(0)`, the resolvent `R = M - M⋆R` and `L = R'`.
#[derive(Clone, Debug)]
pub struct ResolventTriple<T> {
    pub a: T,
    pub r: SampledFunction<T>,
    pub l: SampledFunction<T>,
}

impl<T: Real> ResolventTriple<T> {
    pub fn grid(&self) -> &Arc<TimeGrid<T>> {
        self.r.grid()
    }

    /// `sup |R + M⋆R - M|` against the given kernel samples.
    pub fn identity_residual(&self, m: &SampledFunction<T>) -> Result<T> {
        let lhs = self.r.add(&convolve(m, &self.r)?)?;
        lhs.sup_distance(m)
    }
}

/// Resolvent of an analytic kernel. `L` comes from differentiating the
/// resolvent identity, `L = M' - M(0) R - M'⋆R`.
pub fn resolvent_of<T: Real>(m: &MemoryKernel, grid: &Arc<TimeGrid<T>>) -> Result<ResolventTriple<T>> {
    m.validate()?;
    let ms = m.sample(grid);
    let dm = m.sample_derivative(grid);
    let a: T = m.at_zero();
    let r = volterra_solve(&ms, &ms)?;
    let l = dm.sub(&r.scaled(&a))?.sub(&convolve(&dm, &r)?)?;
    Ok(ResolventTriple { a, r, l })
}

/// Resolvent of a kernel known only through samples; `L` by central differences.
pub fn resolvent_from_samples<T: Real>(m: &SampledFunction<T>) -> Result<ResolventTriple<T>> {
    let r = volterra_solve(m, m)?;
    let l = central_difference(&r);
    Ok(ResolventTriple {
        a: m.at(0).clone(),
        r,
        l,
    })
}

/// Second-order differences: central inside, one-sided three-point at the ends.
pub fn central_difference<T: Real>(f: &SampledFunction<T>) -> SampledFunction<T> {
    let v = f.values();
    let n = v.len();
    let dt = f.grid().dt().clone();
    let two_dt = T::of(2.0) * dt.clone();
    let d: Vec<T> = if n < 3 {
        let s = (v[1].clone() - v[0].clone()) / dt;
        vec![s; n]
    } else {
        let (three, four) = (T::of(3.0), T::of(4.0));
        (0..n)
            .map(|i| {
                if i == 0 {
                    (-(three.clone() * v[0].clone()) + four.clone() * v[1].clone() - v[2].clone())
                        / two_dt.clone()
                } else if i == n - 1 {
                    (three.clone() * v[n - 1].clone() - four.clone() * v[n - 2].clone() + v[n - 3].clone())
                        / two_dt.clone()
                } else {
                    (v[i + 1].clone() - v[i - 1].clone()) / two_dt.clone()
                }
            })
            .collect()
    };
    SampledFunction::from_parts(f.grid().clone(), d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_kernel() {
        let g = TimeGrid::new(1.0f64, 10).unwrap();
        let rt = resolvent_of(&MemoryKernel::Zero, &g).unwrap();
        assert_eq!(rt.a, 0.0);
        assert_eq!(rt.r.sup_norm(), 0.0);
        assert_eq!(rt.l.sup_norm(), 0.0);
    }

    #[test]
    fn constant_kernel_gives_decaying_exponential() {
        let g = TimeGrid::new(1.0f64, 1000).unwrap();
        let rt = resolvent_of(&MemoryKernel::Constant { c: 1.0 }, &g).unwrap();
        for (t, (r, l)) in g.times().zip(rt.r.values().iter().zip(rt.l.values())) {
            assert!((r - (-t).exp()).abs() < 1e-6);
            assert!((l + (-t).exp()).abs() < 1e-6);
        }
    }

    #[test]
    fn differences_of_quadratic_are_exact() {
        let g = TimeGrid::new(1.0f64, 8).unwrap();
        let f = SampledFunction::from_fn(&g, |t| 3.0 * t * t - t).unwrap();
        let d = central_difference(&f);
        for (t, v) in g.times().zip(d.values()) {
            assert!((v - (6.0 * t - 1.0)).abs() < 1e-12);
        }
    }
}
