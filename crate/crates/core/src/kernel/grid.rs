use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Uniform partition `{0, dt, ..., T}` of `[0, T]`.
#[derive(Clone, PartialEq)]
pub struct TimeGrid<T> {
    horizon: T,
    steps: usize,
    dt: T,
}

impl<T: Real> TimeGrid<T> {
    pub fn new(horizon: T, steps: usize) -> Result<Arc<Self>> {
        if steps == 0 {
            return Err(Error::InvalidGrid("step count must be positive".into()));
        }
        if !(horizon.is_finite() && horizon > T::zero()) {
            return Err(Error::InvalidGrid(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        let dt = horizon.clone() / T::of_usize(steps);
        Ok(Arc::new(TimeGrid { horizon, steps, dt }))
    }

    pub fn horizon(&self) -> &T {
        &self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> &T {
        &self.dt
    }

    /// Number of nodes, `steps + 1`.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, k: usize) -> T {
        if k == self.steps {
            self.horizon.clone()
        } else {
            self.dt.clone() * T::of_usize(k)
        }
    }

    pub fn times(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.len()).map(move |k| self.time(k))
    }

    /// Index of the node at time `t`, rejecting times that are not nodes.
    pub fn node_index(&self, t: &T) -> Result<usize> {
        let ratio = t.clone() / self.dt.clone();
        let r = ratio.to_f64_lossy();
        let k = r.round();
        let tol = 1e-9 * (1.0 + r.abs());
        if !(k >= 0.0 && k <= self.steps as f64 && (r - k).abs() <= tol) {
            return Err(Error::OffGrid {
                time: t.to_f64_lossy(),
                dt: self.dt.to_f64_lossy(),
            });
        }
        Ok(k as usize)
    }
}

impl<T: fmt::Debug> fmt::Debug for TimeGrid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TimeGrid(T={:?}, steps={})", self.horizon, self.steps)
    }
}

/// Finite samples of a scalar function of time on a shared grid.
#[derive(Clone, Debug)]
pub struct SampledFunction<T> {
    grid: Arc<TimeGrid<T>>,
    values: Vec<T>,
}

impl<T: Real> SampledFunction<T> {
    pub fn new(grid: Arc<TimeGrid<T>>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(SampledFunction { grid, values })
    }

    /// Trusted constructor for values produced by this crate's own kernels.
    pub(crate) fn from_parts(grid: Arc<TimeGrid<T>>, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        SampledFunction { grid, values }
    }

    pub fn from_fn(grid: &Arc<TimeGrid<T>>, mut f: impl FnMut(T) -> T) -> Result<Self> {
        let values = grid.times().map(&mut f).collect();
        Self::new(grid.clone(), values)
    }

    pub fn zeros(grid: &Arc<TimeGrid<T>>) -> Self {
        Self::from_parts(grid.clone(), vec![T::zero(); grid.len()])
    }

    pub fn constant(grid: &Arc<TimeGrid<T>>, c: T) -> Self {
        Self::from_parts(grid.clone(), vec![c; grid.len()])
    }

    pub fn grid(&self) -> &Arc<TimeGrid<T>> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn at(&self, k: usize) -> &T {
        &self.values[k]
    }

    pub fn last(&self) -> &T {
        self.values.last().expect("grids have at least two nodes")
    }

    pub fn ensure_same_grid(&self, other: &Self) -> Result<()> {
        same_grid(&self.grid, &other.grid)
    }

    pub fn map(&self, f: impl Fn(&T) -> T) -> Self {
        Self::from_parts(self.grid.clone(), self.values.iter().map(f).collect())
    }

    pub fn scaled(&self, c: &T) -> Self {
        self.map(|v| v.clone() * c.clone())
    }

    pub fn neg(&self) -> Self {
        self.map(|v| -v.clone())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.clone() + b.clone())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.clone() - b.clone())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(&T, &T) -> T) -> Result<Self> {
        self.ensure_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| f(a, b))
            .collect();
        Ok(Self::from_parts(self.grid.clone(), values))
    }

    pub fn sup_norm(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |m, v| T::max_of(m, v.abs()))
    }

    /// `sup |self - other|`.
    pub fn sup_distance(&self, other: &Self) -> Result<T> {
        Ok(self.sub(other)?.sup_norm())
    }

    /// Trapezoidal approximation of `∫_0^T self(t) dt`.
    pub fn integral(&self) -> T {
        trapezoid(&self.values, self.grid.dt())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(Real::to_f64_lossy).collect()
    }
}

pub(crate) fn same_grid<T: Real>(a: &Arc<TimeGrid<T>>, b: &Arc<TimeGrid<T>>) -> Result<()> {
    if Arc::ptr_eq(a, b) || **a == **b {
        Ok(())
    } else {
        Err(Error::GridMismatch {
            left: format!("{a:?}"),
            right: format!("{b:?}"),
        })
    }
}

pub(crate) fn trapezoid<T: Real>(values: &[T], dt: &T) -> T {
    let n = values.len();
    if n < 2 {
        return T::zero();
    }
    let half = T::of(0.5);
    let mut s = half.clone() * (values[0].clone() + values[n - 1].clone());
    for v in &values[1..n - 1] {
        s += v.clone();
    }
    s * dt.clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_cover_interval() {
        let g = TimeGrid::new(2.0f64, 8).unwrap();
        let t: Vec<f64> = g.times().collect();
        assert_eq!(t.len(), 9);
        assert_eq!(t[0], 0.0);
        assert_eq!(t[8], 2.0);
        assert_eq!(*g.dt(), 0.25);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(TimeGrid::new(1.0f64, 0).is_err());
        assert!(TimeGrid::new(-1.0f64, 10).is_err());
        assert!(TimeGrid::new(f64::NAN, 10).is_err());
    }

    #[test]
    fn node_lookup() {
        let g = TimeGrid::new(1.0f64, 10).unwrap();
        assert_eq!(g.node_index(&0.3).unwrap(), 3);
        assert_eq!(g.node_index(&1.0).unwrap(), 10);
        assert!(matches!(g.node_index(&0.35), Err(Error::OffGrid { .. })));
        assert!(g.node_index(&1.1).is_err());
    }

    #[test]
    fn samples_must_be_finite_and_sized() {
        let g = TimeGrid::new(1.0f64, 2).unwrap();
        assert!(matches!(
            SampledFunction::new(g.clone(), vec![0.0, 1.0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            SampledFunction::new(g, vec![0.0, f64::INFINITY, 1.0]),
            Err(Error::NonFinite { index: 1 })
        ));
    }

    #[test]
    fn grids_compare_by_value() {
        let a = TimeGrid::new(1.0f64, 4).unwrap();
        let b = TimeGrid::new(1.0f64, 4).unwrap();
        let c = TimeGrid::new(1.0f64, 5).unwrap();
        let f = SampledFunction::zeros(&a);
        assert!(f.add(&SampledFunction::zeros(&b)).is_ok());
        assert!(matches!(
            f.add(&SampledFunction::zeros(&c)),
            Err(Error::GridMismatch { .. })
        ));
    }
}
