use super::conv::dot_rev;
use super::grid::SampledFunction;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Solves `y + K⋆y = f` with trapezoid weights and an implicit diagonal.
///
/// Step `k` reads
/// `y_k (1 + dt K_0/2) = f_k - dt (K_k y_0/2 + Σ_{j=1}^{k-1} K_{k-j} y_j)`.
pub fn volterra_solve<T: Real>(
    kernel: &SampledFunction<T>,
    forcing: &SampledFunction<T>,
) -> Result<SampledFunction<T>> {
    kernel.ensure_same_grid(forcing)?;
    let dt = kernel.grid().dt().clone();
    let k = kernel.values();
    let f = forcing.values();
    let half = T::of(0.5);
    let diag = T::one() + half.clone() * dt.clone() * k[0].clone();
    if diag.abs() <= T::of(64.0) * T::epsilon() {
        let k0 = k[0].to_f64_lossy().abs();
        return Err(Error::DegenerateStep {
            diagonal: diag.to_f64_lossy(),
            max_step: if k0 > 0.0 { 1.0 / k0 } else { f64::INFINITY },
        });
    }
    let mut y: Vec<T> = Vec::with_capacity(f.len());
    y.push(f[0].clone());
    for n in 1..f.len() {
        let s = half.clone() * k[n].clone() * y[0].clone() + dot_rev(&k[1..n], &y[1..n]);
        y.push((f[n].clone() - dt.clone() * s) / diag.clone());
    }
    if let Some(index) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    Ok(SampledFunction::from_parts(kernel.grid().clone(), y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{convolve, TimeGrid};

    #[test]
    fn zero_kernel_is_identity() {
        let g = TimeGrid::new(1.0f64, 20).unwrap();
        let f = SampledFunction::from_fn(&g, |t| t.sin()).unwrap();
        let y = volterra_solve(&SampledFunction::zeros(&g), &f).unwrap();
        assert_eq!(y.values(), f.values());
    }

    #[test]
    fn discrete_equation_holds_exactly() {
        let g = TimeGrid::new(2.0f64, 64).unwrap();
        let k = SampledFunction::from_fn(&g, |t| (-t).exp() + t).unwrap();
        let f = SampledFunction::from_fn(&g, |t| t.cos()).unwrap();
        let y = volterra_solve(&k, &f).unwrap();
        let r = y.add(&convolve(&k, &y).unwrap()).unwrap().sub(&f).unwrap();
        assert!(r.sup_norm() < 1e-13);
    }

    #[test]
    fn degenerate_diagonal_is_reported() {
        let g = TimeGrid::new(1.0f64, 10).unwrap();
        // 1 + 0.1 * (-20) / 2 = 0
        let k = SampledFunction::constant(&g, -20.0);
        let err = volterra_solve(&k, &SampledFunction::constant(&g, 1.0)).unwrap_err();
        assert!(matches!(err, Error::DegenerateStep { .. }));
        assert!(err.to_string().contains("smaller than"));
    }
}
