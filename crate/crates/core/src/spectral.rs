//! Dirichlet eigenpairs on `(0, 1)` and boundary traces.
//!
//! `φ_n(x) = √2 sin(nπx)`, `λ_n² = n²π²`, `μ_n² = λ_n² - a`. The normal
//! derivative uses the outward normal: `-∂_x` at `x = 0`, `+∂_x` at `x = 1`,
//! so `γ₁φ_n(0) = -√2 nπ` and `γ₁φ_n(1) = √2 nπ (-1)^n`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{SampledFunction, TimeGrid};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    Left,
    Right,
}

impl Endpoint {
    pub const BOTH: [Endpoint; 2] = [Endpoint::Left, Endpoint::Right];

    pub fn position(self) -> f64 {
        match self {
            Endpoint::Left => 0.0,
            Endpoint::Right => 1.0,
        }
    }

    fn index(self) -> usize {
        match self {
            Endpoint::Left => 0,
            Endpoint::Right => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Mode {
    pub n: usize,
    /// `M(0)`.
    pub a: f64,
    pub lambda2: f64,
    pub mu2: f64,
}

impl Mode {
    pub fn new(n: usize, a: f64) -> Self {
        let lambda2 = (n * n) as f64 * std::f64::consts::PI.powi(2);
        Mode {
            n,
            a,
            lambda2,
            mu2: lambda2 - a,
        }
    }

    /// `λ_n²` evaluated at the precision of `T`.
    pub fn lambda2_in<T: Real>(&self) -> T {
        let pi = T::pi();
        T::of_usize(self.n * self.n) * pi.clone() * pi
    }

    pub fn mu2_in<T: Real>(&self) -> T {
        self.lambda2_in::<T>() - T::of(self.a)
    }

    /// Outward normal derivative `γ₁φ_n` at an endpoint.
    pub fn trace<T: Real>(&self, end: Endpoint) -> T {
        let mag = T::of(2.0).sqrt() * T::of_usize(self.n) * T::pi();
        match end {
            Endpoint::Left => -mag,
            Endpoint::Right if self.n % 2 == 0 => mag,
            Endpoint::Right => -mag,
        }
    }

    pub fn eigenfunction(&self, x: f64) -> f64 {
        std::f64::consts::SQRT_2 * (self.n as f64 * std::f64::consts::PI * x).sin()
    }
}

/// Modes `1..=N` with the first index whose shifted frequency is positive.
#[derive(Clone, Debug, Serialize)]
pub struct ModeSet {
    pub modes: Vec<Mode>,
    /// `N₀`; `None` when no listed mode has `μ² > 0`.
    pub first_positive: Option<usize>,
}

pub fn dirichlet_modes_1d(count: usize, a: f64) -> Result<ModeSet> {
    if count == 0 {
        return Err(Error::InvalidArgument("need at least one mode".into()));
    }
    if !a.is_finite() {
        return Err(Error::InvalidArgument(format!("M(0) must be finite, got {a}")));
    }
    let modes: Vec<Mode> = (1..=count).map(|n| Mode::new(n, a)).collect();
    let first_positive = modes.iter().find(|m| m.mu2 > 0.0).map(|m| m.n);
    Ok(ModeSet {
        modes,
        first_positive,
    })
}

/// Boundary data `f(x, t)` at `x ∈ {0, 1}`; inactive endpoints are zero.
#[derive(Clone, Debug)]
pub struct BoundaryControl<T> {
    values: [SampledFunction<T>; 2],
    active: [bool; 2],
}

impl<T: Real> BoundaryControl<T> {
    pub fn new(left: SampledFunction<T>, right: SampledFunction<T>) -> Result<Self> {
        left.ensure_same_grid(&right)?;
        let active = [left.sup_norm() > T::zero(), right.sup_norm() > T::zero()];
        Ok(BoundaryControl {
            values: [left, right],
            active,
        })
    }

    pub fn zero(grid: &Arc<TimeGrid<T>>) -> Self {
        BoundaryControl {
            values: [SampledFunction::zeros(grid), SampledFunction::zeros(grid)],
            active: [false, false],
        }
    }

    /// Data on a single endpoint, zero on the other.
    pub fn only(end: Endpoint, f: SampledFunction<T>) -> Self {
        let zero = SampledFunction::zeros(f.grid());
        let mut values = [zero.clone(), zero];
        let mut active = [false, false];
        values[end.index()] = f;
        active[end.index()] = true;
        BoundaryControl { values, active }
    }

    pub fn at(&self, end: Endpoint) -> &SampledFunction<T> {
        &self.values[end.index()]
    }

    pub fn is_active(&self, end: Endpoint) -> bool {
        self.active[end.index()]
    }

    pub fn grid(&self) -> &Arc<TimeGrid<T>> {
        self.values[0].grid()
    }
}

/// `g_n(t) = Σ_{x∈Γ} γ₁φ_n(x) f(x, t)`.
pub fn trace_pairing<T: Real>(mode: &Mode, f: &BoundaryControl<T>) -> SampledFunction<T> {
    let gl: T = mode.trace(Endpoint::Left);
    let gr: T = mode.trace(Endpoint::Right);
    f.at(Endpoint::Left)
        .zip_with(f.at(Endpoint::Right), |l, r| gl.clone() * l.clone() + gr.clone() * r.clone())
        .expect("boundary data share a grid by construction")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceBounds {
    pub min: f64,
    pub max: f64,
    pub per_mode: Vec<f64>,
}

/// `Σ_{x∈Γ} |γ₁φ_n(x)/λ_n|²` over the listed modes.
pub fn trace_bound_check(modes: &[Mode]) -> Result<TraceBounds> {
    if modes.is_empty() {
        return Err(Error::InvalidArgument("trace bounds need at least one mode".into()));
    }
    let per_mode: Vec<f64> = modes
        .iter()
        .map(|m| {
            let lambda = m.lambda2.sqrt();
            Endpoint::BOTH
                .iter()
                .map(|&e| (m.trace::<f64>(e) / lambda).powi(2))
                .sum()
        })
        .collect();
    let min = per_mode.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = per_mode.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(TraceBounds { min, max, per_mode })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn modes_and_threshold() {
        let set = dirichlet_modes_1d(5, 20.0).unwrap();
        assert_eq!(set.first_positive, Some(2));
        assert!(set.modes[0].mu2 < 0.0);
        let one = dirichlet_modes_1d(1, 0.0).unwrap();
        assert_eq!(one.modes[0].lambda2, PI * PI);
        assert_eq!(one.modes[0].mu2, PI * PI);
        assert!(dirichlet_modes_1d(0, 0.0).is_err());
    }

    #[test]
    fn traces_follow_outward_normal() {
        for n in 1..6 {
            let m = Mode::new(n, 0.0);
            let h = 1e-6;
            let d0 = (m.eigenfunction(h) - m.eigenfunction(0.0)) / h;
            let d1 = (m.eigenfunction(1.0) - m.eigenfunction(1.0 - h)) / h;
            assert!((m.trace::<f64>(Endpoint::Left) + d0).abs() < 1e-3 * n as f64 * n as f64);
            assert!((m.trace::<f64>(Endpoint::Right) - d1).abs() < 1e-3 * n as f64 * n as f64);
        }
    }

    #[test]
    fn trace_bounds_are_four() {
        let set = dirichlet_modes_1d(50, 1.0).unwrap();
        let b = trace_bound_check(&set.modes).unwrap();
        assert!((b.min - 4.0).abs() < 1e-12 && (b.max - 4.0).abs() < 1e-12);
        assert!(trace_bound_check(&[]).is_err());
    }

    #[test]
    fn pairing_parity() {
        let g = TimeGrid::new(1.0f64, 4).unwrap();
        let f = BoundaryControl::only(Endpoint::Right, SampledFunction::constant(&g, 1.0));
        let g1 = trace_pairing(&Mode::new(1, 0.0), &f);
        let g2 = trace_pairing(&Mode::new(2, 0.0), &f);
        assert!(*g1.at(2) < 0.0 && *g2.at(2) > 0.0);
        let left = BoundaryControl::only(Endpoint::Left, SampledFunction::constant(&g, 1.0));
        let v = trace_pairing(&Mode::new(1, 0.0), &left);
        assert!((v.at(0) + 2f64.sqrt() * PI).abs() < 1e-14);
        assert!(!left.is_active(Endpoint::Right));
    }
}
