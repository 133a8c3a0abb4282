use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gram::{checked_inverse, CheckedInverse, RESIDUAL_TOL};
use super::linalg::mat_vec;
use super::precision::{escalate, Attempt, PrecisionTask};
use crate::dynamics::{l2, solve_mode, tail_estimate};
use crate::error::{Error, Result};
use crate::kernel::{resolvent_of, MemoryKernel, SampledFunction, TimeGrid};
use crate::moment::{least_squares, ExactMoments, InitialData, MomentProblem};
use crate::scalar::Real;
use crate::spectral::{trace_pairing, BoundaryControl, Endpoint, Mode};
use crate::transform::{Horizon, RationalModel};

/// Truncated minimal-norm control problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlSetup {
    pub kernel: MemoryKernel,
    pub horizon: f64,
    pub xi: InitialData,
    pub endpoints: Vec<Endpoint>,
    /// Modes whose state at `T` enters the deficiency; at least `N_active`.
    pub check_modes: usize,
}

impl ControlSetup {
    pub fn new(kernel: MemoryKernel, horizon: f64, xi: InitialData) -> Self {
        ControlSetup {
            kernel,
            horizon,
            xi,
            endpoints: Endpoint::BOTH.to_vec(),
            check_modes: 0,
        }
    }

    fn check_count(&self, n_active: usize) -> usize {
        self.check_modes.max(2 * n_active)
    }

    fn validate(&self, n_active: usize) -> Result<()> {
        self.kernel.validate()?;
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!("horizon must be positive, got {}", self.horizon)));
        }
        if n_active == 0 {
            return Err(Error::InvalidArgument("at least one active mode is required".into()));
        }
        if self.endpoints.is_empty() {
            return Err(Error::InvalidArgument("at least one control endpoint is required".into()));
        }
        Ok(())
    }
}

/// Minimal-norm control steering modes `1..=N_active` to zero at `T`.
///
/// The control is `f(x, t) = Σ_j c_j γ₁φ_j(x) P_j(T - t)`; `A c = b` with
/// `A_nj = Σ_x γ₁φ_n(x) γ₁φ_j(x) ⟨P_n, P_j⟩` and `b_n = ξ_n D_n(T)`.
#[derive(Clone, Debug, Serialize)]
pub struct ControlResult {
    pub n_active: usize,
    pub bits: u32,
    pub norm: f64,
    pub log_norm: f64,
    pub coefficients: Vec<f64>,
    /// `max |A c - b| / max |b|`.
    pub residual: f64,
    /// `max |A⁻¹A - I|`.
    pub inverse_residual: f64,
    pub condition: f64,
    /// `w_n(T)` for the checked modes.
    pub terminal: Vec<f64>,
    /// `ℓ²` norm of `-w_n(T)/λ_n²` over the active modes.
    pub deficiency_active: f64,
    /// Same over all checked modes, combined with the tail estimate.
    pub deficiency: f64,
    pub tail: f64,
    pub attempts: Vec<Attempt>,
}

pub fn min_norm_control_at<T: Real>(setup: &ControlSetup, n_active: usize, tolerance: f64) -> Result<ControlResult> {
    setup.validate(n_active)?;
    let a: f64 = setup.kernel.at_zero();
    let check = setup.check_count(n_active);
    let modes: Vec<Mode> = (1..=check).map(|n| Mode::new(n, a)).collect();
    let em = ExactMoments::<T>::new(&setup.kernel, &modes, setup.horizon)?;
    let horizon = Horizon::Finite(setup.horizon);
    let traces: Vec<Vec<T>> = modes
        .iter()
        .map(|m| setup.endpoints.iter().map(|&e| m.trace::<T>(e)).collect())
        .collect();
    let cross: Vec<Vec<T>> = (0..check)
        .into_par_iter()
        .map(|n| {
            (0..n_active)
                .map(|j| {
                    let tt = traces[n]
                        .iter()
                        .zip(&traces[j])
                        .fold(T::zero(), |s, (x, y)| s + x.clone() * y.clone());
                    if tt.is_zero() {
                        T::zero()
                    } else {
                        tt * em.profiles[n].inner(&em.profiles[j], horizon)
                    }
                })
                .collect()
        })
        .collect();
    let gram: Vec<Vec<T>> = cross[..n_active].to_vec();
    let target: Vec<T> = modes
        .iter()
        .zip(&em.unit_d)
        .map(|(m, d)| T::of(setup.xi.coefficient(m.n)) * d.clone())
        .collect();
    let CheckedInverse {
        inverse,
        residual: inverse_residual,
        condition,
        ..
    } = checked_inverse(&gram, tolerance)?;
    let b = &target[..n_active];
    let c = mat_vec(&inverse, b);
    let ac = mat_vec(&gram, &c);
    let scale = b.iter().cloned().fold(T::zero(), |m, v| T::max_of(m, v.abs()));
    let residual = if scale.is_zero() {
        0.0
    } else {
        ac.iter()
            .zip(b)
            .map(|(x, y)| ((x.clone() - y.clone()).abs() / scale.clone()).to_f64_lossy())
            .fold(0.0, f64::max)
    };
    if !(residual <= tolerance) {
        return Err(Error::ResidualTooLarge {
            bits: T::MANTISSA_BITS,
            residual,
            tolerance,
        });
    }
    let norm2 = c.iter().zip(b).fold(T::zero(), |s, (x, y)| s + x.clone() * y.clone());
    let norm2 = T::max_of(norm2, T::zero());
    let reached = mat_vec(&cross, &c);
    let terminal: Vec<f64> = target
        .iter()
        .zip(&reached)
        .map(|(t, r)| (t.clone() - r.clone()).to_f64_lossy())
        .collect();
    let image: Vec<f64> = terminal.iter().zip(&modes).map(|(w, m)| -w / m.lambda2).collect();
    let r_at_t = RationalModel::<f64>::new(&setup.kernel).resolvent()?.eval(&setup.horizon);
    let tail = tail_estimate(check, a, setup.horizon, r_at_t, |n| setup.xi.coefficient(n));
    let checked = l2(&image);
    Ok(ControlResult {
        n_active,
        bits: T::MANTISSA_BITS,
        norm: norm2.sqrt().to_f64_lossy(),
        log_norm: if norm2.is_zero() {
            f64::NEG_INFINITY
        } else {
            (norm2.ln() * T::of(0.5)).to_f64_lossy()
        },
        coefficients: c.iter().map(Real::to_f64_lossy).collect(),
        residual,
        inverse_residual,
        condition,
        terminal,
        deficiency_active: l2(&image[..n_active]),
        deficiency: (checked * checked + tail * tail).sqrt(),
        tail,
        attempts: Vec::new(),
    })
}

struct ControlTask<'a> {
    setup: &'a ControlSetup,
    n_active: usize,
}

impl PrecisionTask for ControlTask<'_> {
    type Output = ControlResult;

    fn run<T: Real>(&self) -> Result<ControlResult> {
        min_norm_control_at::<T>(self.setup, self.n_active, RESIDUAL_TOL)
    }
}

/// [`min_norm_control_at`] from `bits` upward until the residual checks pass.
pub fn min_norm_control(setup: &ControlSetup, n_active: usize, bits: u32) -> Result<ControlResult> {
    let run = escalate(bits, &ControlTask { setup, n_active })?;
    let mut out = run.output;
    out.attempts = run.attempts;
    Ok(out)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SweepVerdict {
    /// `max/min` of the norms over the last six `N_active`.
    pub tail_ratio: f64,
    pub bounded: bool,
    /// Least-squares slope of `ln ‖f‖` against `N_active`.
    pub log_slope: f64,
    pub monotone: bool,
}

pub const BOUNDED_RATIO: f64 = 2.0;
pub const BLOWUP_SLOPE: f64 = 1.0;

#[derive(Clone, Debug, Serialize)]
pub struct ControlSweep {
    pub results: Vec<ControlResult>,
    pub verdict: SweepVerdict,
}

/// Controls for `N_active = 1..=n_max`, solved independently in parallel.
pub fn control_sweep(setup: &ControlSetup, n_max: usize, bits: u32) -> Result<ControlSweep> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("sweep needs at least one active mode".into()));
    }
    let results = (1..=n_max)
        .into_par_iter()
        .map(|n| min_norm_control(setup, n, bits))
        .collect::<Result<Vec<_>>>()?;
    let verdict = sweep_verdict(&results);
    Ok(ControlSweep { results, verdict })
}

pub fn sweep_verdict(results: &[ControlResult]) -> SweepVerdict {
    let norms: Vec<f64> = results.iter().map(|r| r.norm).collect();
    let last = &norms[norms.len().saturating_sub(6)..];
    let max = last.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = last.iter().cloned().fold(f64::INFINITY, f64::min);
    let tail_ratio = max / min;
    let x: Vec<f64> = results.iter().map(|r| r.n_active as f64).collect();
    let y: Vec<f64> = results.iter().map(|r| r.log_norm).collect();
    let (log_slope, _) = least_squares(&x, &y);
    SweepVerdict {
        tail_ratio,
        bounded: tail_ratio <= BOUNDED_RATIO,
        log_slope,
        monotone: norms.windows(2).all(|w| w[1] >= w[0]),
    }
}

/// Memory against memoryless on the same horizon and initial data.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ContrastVerdict {
    pub memoryless_bounded: bool,
    pub memoryless_ratio: f64,
    pub memory_blowup_slope: f64,
    pub memory_monotone: bool,
    /// Bounded baseline, monotone memory norms and slope above one.
    pub blowup_exhibited: bool,
}

pub fn contrast(memoryless: &SweepVerdict, memory: &SweepVerdict) -> ContrastVerdict {
    ContrastVerdict {
        memoryless_bounded: memoryless.bounded,
        memoryless_ratio: memoryless.tail_ratio,
        memory_blowup_slope: memory.log_slope,
        memory_monotone: memory.monotone,
        blowup_exhibited: memoryless.bounded && memory.monotone && memory.log_slope > BLOWUP_SLOPE,
    }
}

/// Terminal state obtained by feeding the synthesized control through the
/// time-stepping modal solver.
#[derive(Clone, Debug, Serialize)]
pub struct ClosedLoop {
    pub steps: usize,
    pub terminal: Vec<f64>,
    pub deficiency: f64,
}

pub fn closed_loop(setup: &ControlSetup, result: &ControlResult, steps: usize) -> Result<ClosedLoop> {
    let a: f64 = setup.kernel.at_zero();
    let check = result.terminal.len();
    let modes: Vec<Mode> = (1..=check).map(|n| Mode::new(n, a)).collect();
    let active: Vec<Mode> = modes[..result.n_active].to_vec();
    let em = ExactMoments::<f64>::new(&setup.kernel, &active, setup.horizon)?;
    let grid = TimeGrid::new(setup.horizon, steps)?;
    let control_at = |end: Endpoint| {
        if !setup.endpoints.contains(&end) {
            return SampledFunction::zeros(&grid);
        }
        SampledFunction::from_fn(&grid, |t| {
            active
                .iter()
                .zip(&em.profiles)
                .zip(&result.coefficients)
                .map(|((m, p), c)| c * m.trace::<f64>(end) * p.eval(&(setup.horizon - t)))
                .sum()
        })
        .expect("finite control")
    };
    let f = BoundaryControl::new(control_at(Endpoint::Left), control_at(Endpoint::Right))?;
    let rt = resolvent_of(&setup.kernel, &grid)?;
    let terminal = modes
        .par_iter()
        .map(|m| {
            let g = trace_pairing(m, &f);
            solve_mode(m, &rt, &setup.xi.coefficient(m.n), &g).map(|w| *w.w.last())
        })
        .collect::<Result<Vec<f64>>>()?;
    let image: Vec<f64> = terminal.iter().zip(&modes).map(|(w, m)| -w / m.lambda2).collect();
    Ok(ClosedLoop {
        steps,
        deficiency: l2(&image),
        terminal,
    })
}

/// Control Gram matrix from sampled profiles by trapezoid quadrature.
pub fn quadrature_gram(mp: &MomentProblem<f64>, n_active: usize, endpoints: &[Endpoint]) -> Result<Vec<Vec<f64>>> {
    if n_active == 0 || n_active > mp.modes.len() {
        return Err(Error::InvalidArgument(format!(
            "N_active = {n_active} outside 1..={}",
            mp.modes.len()
        )));
    }
    let rows = (0..n_active)
        .into_par_iter()
        .map(|n| {
            (0..n_active)
                .map(|j| {
                    let tt: f64 = endpoints
                        .iter()
                        .map(|&e| mp.modes[n].trace::<f64>(e) * mp.modes[j].trace::<f64>(e))
                        .sum();
                    let prod = mp.profiles[n].zip_with(&mp.profiles[j], |x, y| x * y)?;
                    Ok(tt * prod.integral())
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Mp256;

    fn heat(xi: InitialData) -> ControlSetup {
        ControlSetup::new(MemoryKernel::Zero, 1.0, xi)
    }

    #[test]
    fn single_mode_closed_form() {
        let setup = heat(InitialData::default());
        let r = min_norm_control_at::<Mp256>(&setup, 1, 1e-20).unwrap();
        let m = Mode::new(1, 0.0);
        let l2 = m.lambda2;
        let kernel_norm2 = 2.0 * m.trace::<f64>(Endpoint::Left).powi(2) * (1.0 - (-2.0 * l2).exp()) / (2.0 * l2);
        let target = (-l2).exp();
        assert!((r.norm - target / kernel_norm2.sqrt()).abs() < 1e-14 * r.norm);
        assert!(r.terminal[0].abs() < 1e-30);
    }

    #[test]
    fn zero_data_needs_no_control() {
        let setup = heat(InitialData::Explicit { values: vec![] });
        let r = min_norm_control_at::<f64>(&setup, 2, 1e-10).unwrap();
        assert_eq!(r.norm, 0.0);
        assert_eq!(r.deficiency, 0.0);
    }

    #[test]
    fn memoryless_closed_loop_reaches_zero() {
        let setup = heat(InitialData::default());
        let r = min_norm_control(&setup, 3, 256).unwrap();
        let cl = closed_loop(&setup, &r, 4000).unwrap();
        assert!(cl.deficiency < 1e-4, "{}", cl.deficiency);
    }
}
