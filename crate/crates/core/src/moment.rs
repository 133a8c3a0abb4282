//! Moment problem for null controllability.
//!
//! Mode `n` reaches zero at `T` exactly when
//! `∫_0^T Σ_{x∈Γ} f(x, T-s) E_n(x, s) ds = μ_n² d_n`, with
//! `E_n(x, s) = μ_n² γ₁φ_n(x) P_n(s)` and the profile `P_n = e_0 - H_n⋆e_0`.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{conv_at, convolve_exp, e_k, GKernel, MemoryKernel, ResolventTriple, SampledFunction, TimeGrid};
use crate::scalar::Real;
use crate::spectral::{BoundaryControl, Endpoint, Mode};
use crate::transform::{ExpSum, RationalModel};

/// `P_n = e_0 - H_n⋆e_0`, with `H_n⋆e_0` by product integration.
pub fn profile<T: Real>(mode: &Mode, h: &SampledFunction<T>) -> SampledFunction<T> {
    let mu2: T = mode.mu2_in();
    e_k(h.grid(), &mu2, 0)
        .sub(&convolve_exp(h, &mu2))
        .expect("same grid")
}

/// `d_n = [e_0 - e_0⋆R - H_n⋆(e_0 - e_0⋆R)](T) ξ_n`, evaluated as
/// `[P_n - P_n⋆R](T) ξ_n` so that every `e^{-μ²t}` factor is integrated exactly.
pub fn rhs_d<T: Real>(mode: &Mode, rt: &ResolventTriple<T>, h: &SampledFunction<T>, xi: &T) -> Result<T> {
    rt.r.ensure_same_grid(h)?;
    let mu2: T = mode.mu2_in();
    let grid = h.grid();
    let last = grid.steps();
    let e0 = e_k(grid, &mu2, 0);
    let y = convolve_exp(h, &mu2);
    let e0r = convolve_exp(&rt.r, &mu2);
    let yr = conv_at(y.values(), rt.r.values(), last, grid.dt());
    let unit = e0.at(last).clone() - y.at(last).clone() - e0r.at(last).clone() + yr;
    Ok(unit * xi.clone())
}

/// Time profile of `E_n` at both endpoints, `μ_n² γ₁φ_n(x) P_n(s)`.
pub fn moment_kernels<T: Real>(mode: &Mode, h: &SampledFunction<T>) -> [SampledFunction<T>; 2] {
    let p = profile(mode, h);
    let mu2: T = mode.mu2_in();
    Endpoint::BOTH.map(|e| p.scaled(&(mu2.clone() * mode.trace::<T>(e))))
}

/// `∫_0^T Σ_x f(x, T-s) E_n(x, s) ds`.
pub fn moment_pairing<T: Real>(mode: &Mode, h: &SampledFunction<T>, f: &BoundaryControl<T>) -> Result<T> {
    f.at(Endpoint::Left).ensure_same_grid(h)?;
    let mu2: T = mode.mu2_in();
    let grid = h.grid();
    let last = grid.steps();
    let y = convolve_exp(h, &mu2);
    let mut total = T::zero();
    for e in Endpoint::BOTH {
        if !f.is_active(e) {
            continue;
        }
        let fx = f.at(e);
        // ∫ f(T-s) e_0(s) ds exactly against the exponential, ∫ f(T-s) (H⋆e_0)(s) ds by trapezoid
        let direct = convolve_exp(fx, &mu2).at(last).clone();
        let memory = conv_at(fx.values(), y.values(), last, grid.dt());
        total += mode.trace::<T>(e) * (direct - memory);
    }
    Ok(mu2 * total)
}

/// `χ(x, r) ↦ χ(x, r) - ∫_r^T G(s, r) χ(x, s) ds` at both endpoints.
pub fn reduce_scalar<T: Real>(chi: &[SampledFunction<T>; 2], g: &GKernel<T>) -> Result<[SampledFunction<T>; 2]> {
    let probe = SampledFunction::zeros(g.grid());
    for c in chi {
        c.ensure_same_grid(&probe)?;
    }
    let grid = g.grid();
    let n = grid.len();
    let dt = grid.dt().clone();
    let half = T::of(0.5);
    let reduce = |c: &SampledFunction<T>| {
        let v = c.values();
        let values = (0..n)
            .map(|j| {
                let mut s = T::zero();
                if j + 1 < n {
                    s += half.clone() * (g.at(j, j) * v[j].clone() + g.at(n - 1, j) * v[n - 1].clone());
                    for i in j + 1..n - 1 {
                        s += g.at(i, j) * v[i].clone();
                    }
                }
                v[j].clone() - dt.clone() * s
            })
            .collect();
        SampledFunction::from_parts(grid.clone(), values)
    };
    Ok([reduce(&chi[0]), reduce(&chi[1])])
}

/// `∫_0^T Σ_x γ₁φ_n(x) χ̃(x, r) μ_n² e^{-μ_n² r} dr`, the pairing of reduced
/// profiles against the scalar family `μ_n² e^{-μ_n² r}`.
pub fn scalar_pairing<T: Real>(mode: &Mode, reduced: &[SampledFunction<T>; 2]) -> T {
    let mu2: T = mode.mu2_in();
    let last = reduced[0].grid().steps();
    let mut total = T::zero();
    for (i, e) in Endpoint::BOTH.into_iter().enumerate() {
        // ∫ χ̃(r) e^{-μ² r} dr = (χ̃(T - ·) ⋆ e_0)(T)
        let rev: Vec<T> = reduced[i].values().iter().rev().cloned().collect();
        let rev = SampledFunction::from_parts(reduced[i].grid().clone(), rev);
        total += mode.trace::<T>(e) * convolve_exp(&rev, &mu2).at(last).clone();
    }
    mu2 * total
}

/// Regime of the moment asymptotics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Memory,
    Memoryless,
}

#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticRow {
    pub n: usize,
    pub mu2: f64,
    pub d: f64,
    /// `μ_n² d_n / ξ_n`.
    pub ratio: f64,
    /// `r_n = μ_n² d_n / ξ_n + R(T)`.
    pub residual: f64,
    /// `r_n μ_n²`, the sequence the theory says is bounded.
    pub scaled: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticReport {
    pub horizon: f64,
    pub r_at_t: f64,
    pub regime: Regime,
    pub rows: Vec<AsymptoticRow>,
    pub sup_scaled: f64,
    /// Least-squares slope of `r_n μ_n²` against `n`.
    pub scaled_slope: f64,
}

/// Relative size below which `R(T)` counts as zero.
pub const RESOLVENT_ZERO_TOL: f64 = 1e-6;

/// `R(T)` with the nonvanishing guard. `Ok(None)` means the memoryless regime.
pub fn resolvent_at_horizon<T: Real>(rt: &ResolventTriple<T>) -> Result<Option<f64>> {
    let scale = rt.r.sup_norm().to_f64_lossy().max(rt.a.to_f64_lossy().abs());
    let r_t = rt.r.last().to_f64_lossy();
    if scale == 0.0 {
        return Ok(None);
    }
    if r_t.abs() <= RESOLVENT_ZERO_TOL * scale {
        return Err(Error::ResolventVanishes {
            horizon: rt.grid().horizon().to_f64_lossy(),
            value: r_t.abs(),
        });
    }
    Ok(Some(r_t))
}

/// Tabulates `μ_n² d_n/ξ_n` against `-R(T)` for the given modes and their `H_n`.
pub fn dn_asymptotic_check<T: Real>(
    modes: &[Mode],
    hs: &[SampledFunction<T>],
    rt: &ResolventTriple<T>,
) -> Result<AsymptoticReport> {
    if modes.len() != hs.len() {
        return Err(Error::LengthMismatch {
            expected: modes.len(),
            got: hs.len(),
        });
    }
    let r_t = resolvent_at_horizon(rt)?;
    let regime = if r_t.is_some() { Regime::Memory } else { Regime::Memoryless };
    let r_t = r_t.unwrap_or(0.0);
    let mut rows = Vec::with_capacity(modes.len());
    for (m, h) in modes.iter().zip(hs) {
        if m.mu2 <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "mode {} has mu^2 = {} <= 0; asymptotics need modes past N0",
                m.n, m.mu2
            )));
        }
        let d = rhs_d(m, rt, h, &T::one())?.to_f64_lossy();
        let ratio = m.mu2 * d;
        let residual = ratio + r_t;
        rows.push(AsymptoticRow {
            n: m.n,
            mu2: m.mu2,
            d,
            ratio,
            residual,
            scaled: residual * m.mu2,
        });
    }
    let sup_scaled = rows.iter().map(|r| r.scaled.abs()).fold(0.0, f64::max);
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.scaled).collect();
    let scaled_slope = if rows.len() >= 2 { least_squares(&xs, &ys).0 } else { 0.0 };
    Ok(AsymptoticReport {
        horizon: rt.grid().horizon().to_f64_lossy(),
        r_at_t: r_t,
        regime,
        rows,
        sup_scaled,
        scaled_slope,
    })
}

/// Scope threshold: the first index with `μ² > 0` and `|r_n| < |R(T)|/2`,
/// from which on the diagonal map `ξ_n ↦ μ_n² d_n` stays uniformly invertible.
pub fn scope_threshold(report: &AsymptoticReport) -> Option<usize> {
    match report.regime {
        Regime::Memoryless => report.rows.iter().find(|r| r.mu2 > 0.0).map(|r| r.n),
        Regime::Memory => {
            let half = report.r_at_t.abs() / 2.0;
            // every later row must satisfy the bound as well
            let mut first = None;
            for r in &report.rows {
                if r.mu2 > 0.0 && r.residual.abs() < half {
                    first.get_or_insert(r.n);
                } else {
                    first = None;
                }
            }
            first
        }
    }
}

/// Diagonal map `ξ_n ↦ c_n = μ_n² d_n = q_n ξ_n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagonalMap {
    pub factors: Vec<f64>,
}

impl DiagonalMap {
    pub fn from_report(report: &AsymptoticReport) -> Self {
        DiagonalMap {
            factors: report.rows.iter().map(|r| r.ratio).collect(),
        }
    }

    pub fn forward(&self, xi: &[f64]) -> Vec<f64> {
        self.factors.iter().zip(xi).map(|(q, x)| q * x).collect()
    }

    pub fn inverse(&self, c: &[f64]) -> Result<Vec<f64>> {
        self.factors
            .iter()
            .zip(c)
            .map(|(q, c)| {
                if *q == 0.0 {
                    Err(Error::InvalidArgument("diagonal factor vanishes".into()))
                } else {
                    Ok(c / q)
                }
            })
            .collect()
    }
}

/// Initial-data sequence `ξ_n`.
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InitialData {
    /// `ξ_n = scale / n^power`.
    Power { scale: f64, power: f64 },
    /// `ξ_n = scale (-1)^{n+1} / n^power`.
    Alternating { scale: f64, power: f64 },
    Explicit { values: Vec<f64> },
}

impl Default for InitialData {
    fn default() -> Self {
        InitialData::Power { scale: 1.0, power: 1.0 }
    }
}

impl InitialData {
    pub fn coefficient(&self, n: usize) -> f64 {
        match self {
            InitialData::Power { scale, power } => scale / (n as f64).powf(*power),
            InitialData::Alternating { scale, power } => {
                let s = if n % 2 == 1 { 1.0 } else { -1.0 };
                s * scale / (n as f64).powf(*power)
            }
            InitialData::Explicit { values } => values.get(n - 1).copied().unwrap_or(0.0),
        }
    }
}

/// Moment problem over a grid: per-mode `d_n` and the kernel profiles.
#[derive(Clone, Debug)]
pub struct MomentProblem<T> {
    pub grid: Arc<TimeGrid<T>>,
    pub modes: Vec<Mode>,
    pub xi: Vec<f64>,
    pub d: Vec<T>,
    pub profiles: Vec<SampledFunction<T>>,
    pub scope: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentDumpMode {
    pub n: usize,
    pub mu2: f64,
    pub d_n: f64,
    pub trace_factors: [f64; 2],
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentDumpGrid {
    pub horizon: f64,
    pub steps: usize,
    pub dt: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentDump {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub scope: Option<usize>,
    pub modes: Vec<MomentDumpMode>,
    pub grid: MomentDumpGrid,
}

impl<T: Real> MomentProblem<T> {
    pub fn build(modes: &[Mode], hs: &[SampledFunction<T>], rt: &ResolventTriple<T>, xi: &InitialData) -> Result<Self> {
        if modes.len() != hs.len() {
            return Err(Error::LengthMismatch {
                expected: modes.len(),
                got: hs.len(),
            });
        }
        let mut d = Vec::with_capacity(modes.len());
        let mut profiles = Vec::with_capacity(modes.len());
        let xs: Vec<f64> = modes.iter().map(|m| xi.coefficient(m.n)).collect();
        for ((m, h), x) in modes.iter().zip(hs).zip(&xs) {
            d.push(rhs_d(m, rt, h, &T::of(*x))?);
            profiles.push(profile(m, h));
        }
        Ok(MomentProblem {
            grid: rt.grid().clone(),
            modes: modes.to_vec(),
            xi: xs,
            d,
            profiles,
            scope: None,
        })
    }

    pub fn with_scope(mut self, scope: Option<usize>) -> Self {
        self.scope = scope;
        self
    }

    pub fn dump(&self) -> MomentDump {
        MomentDump {
            horizon: self.grid.horizon().to_f64_lossy(),
            scope: self.scope,
            modes: self
                .modes
                .iter()
                .zip(&self.d)
                .map(|(m, d)| MomentDumpMode {
                    n: m.n,
                    mu2: m.mu2,
                    d_n: d.to_f64_lossy(),
                    trace_factors: Endpoint::BOTH.map(|e| m.trace::<f64>(e)),
                })
                .collect(),
            grid: MomentDumpGrid {
                horizon: self.grid.horizon().to_f64_lossy(),
                steps: self.grid.steps(),
                dt: self.grid.dt().to_f64_lossy(),
            },
        }
    }
}

/// Exact moment data from the rational transform of the kernel: profiles
/// `P_n` and unit free responses `D_n = d_n/ξ_n` as exponential sums.
#[derive(Clone, Debug)]
pub struct ExactMoments<T> {
    pub modes: Vec<Mode>,
    pub profiles: Vec<ExpSum<T>>,
    pub unit_d: Vec<T>,
    pub horizon: f64,
}

impl<T: Real> ExactMoments<T> {
    pub fn new(kernel: &MemoryKernel, modes: &[Mode], horizon: f64) -> Result<Self> {
        kernel.validate()?;
        let model = RationalModel::<T>::new(kernel);
        let t = T::of(horizon);
        let mut profiles = Vec::with_capacity(modes.len());
        let mut unit_d = Vec::with_capacity(modes.len());
        for m in modes {
            let l2: T = m.lambda2_in();
            profiles.push(model.profile(&l2)?);
            unit_d.push(model.free_response(&l2)?.eval(&t));
        }
        Ok(ExactMoments {
            modes: modes.to_vec(),
            profiles,
            unit_d,
            horizon,
        })
    }
}

/// Slope and intercept of the least-squares line through `(x, y)`.
pub(crate) fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{h_direct, resolvent_of};

    #[test]
    fn memoryless_targets_are_heat_exponentials() {
        let g = TimeGrid::new(1.0f64, 100).unwrap();
        let rt = resolvent_of(&MemoryKernel::Zero, &g).unwrap();
        let m = Mode::new(1, 0.0);
        let h = SampledFunction::zeros(&g);
        let d = rhs_d(&m, &rt, &h, &2.0).unwrap();
        assert!((d - 2.0 * (-m.lambda2).exp()).abs() < 1e-18);
        assert_eq!(rhs_d(&m, &rt, &h, &0.0).unwrap(), 0.0);
        let k = moment_kernels(&m, &h);
        assert!((k[0].at(0) - m.mu2 * m.trace::<f64>(Endpoint::Left)).abs() < 1e-12);
    }

    #[test]
    fn vanishing_resolvent_is_guarded() {
        // R(t) = e^{-2t} - ... ; a kernel whose resolvent changes sign
        let kernel = MemoryKernel::ExpSum {
            terms: vec![
                crate::kernel::ExpTerm { c: 1.0, b: 0.0 },
                crate::kernel::ExpTerm { c: -2.0, b: 3.0 },
            ],
        };
        let exact = RationalModel::<f64>::new(&kernel).resolvent().unwrap();
        // bisection for the sign change of the exact resolvent
        let (mut lo, mut hi) = (0.0f64, 5.0f64);
        assert!(exact.eval(&lo) * exact.eval(&hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if exact.eval(&lo) * exact.eval(&mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let g = TimeGrid::new(lo, 4000).unwrap();
        let rt = resolvent_of(&kernel, &g).unwrap();
        assert!(matches!(resolvent_at_horizon(&rt), Err(Error::ResolventVanishes { .. })));
    }

    #[test]
    fn diagonal_map_round_trip() {
        let g = TimeGrid::new(1.0f64, 400).unwrap();
        let rt = resolvent_of(&MemoryKernel::Constant { c: 1.0 }, &g).unwrap();
        let modes: Vec<Mode> = (1..=6).map(|n| Mode::new(n, 1.0)).collect();
        let hs: Vec<_> = modes.iter().map(|m| h_direct(&rt.l, &m.mu2).unwrap()).collect();
        let report = dn_asymptotic_check(&modes, &hs, &rt).unwrap();
        assert_eq!(report.regime, Regime::Memory);
        let map = DiagonalMap::from_report(&report);
        let xi: Vec<f64> = (1..=6).map(|n| 1.0 / n as f64).collect();
        let back = map.inverse(&map.forward(&xi)).unwrap();
        for (a, b) in xi.iter().zip(&back) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(scope_threshold(&report).is_some());
    }
}
