//! Modal dynamics of the heat equation with memory.
//!
//! Mode `n` satisfies `w_n + Z_n⋆w_n = k_n` with `Z_n = -L⋆e_0` and
//! `k_n = (e_0 - e_0⋆R) ξ_n - e_0⋆g_n`, `e_0(t) = e^{-μ_n² t}`. The same
//! equation can be solved by time-stepping or written out with the resolvent
//! `H_n` of `Z_n` as `w_n = k_n - H_n⋆k_n`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{convolve, convolve_exp, e_k, volterra_solve, z_kernel, ResolventTriple, SampledFunction};
use crate::scalar::Real;
use crate::spectral::Mode;

#[derive(Clone, Debug)]
pub struct ModalTrajectory<T> {
    pub mode: Mode,
    pub w: SampledFunction<T>,
}

/// Memoryless mode: `e^{-λ²t} ξ - ∫_0^t e^{-λ²(t-s)} g(s) ds`.
pub fn heat_mode<T: Real>(mode: &Mode, xi: &T, g: &SampledFunction<T>) -> ModalTrajectory<T> {
    let lambda2: T = mode.lambda2_in();
    let forced = convolve_exp(g, &lambda2);
    let free = e_k(g.grid(), &lambda2, 0);
    let w = free
        .zip_with(&forced, |e, c| e.clone() * xi.clone() - c.clone())
        .expect("same grid");
    ModalTrajectory { mode: *mode, w }
}

/// Right-hand side `k_n = (e_0 - e_0⋆R) ξ - e_0⋆g`.
pub fn modal_forcing<T: Real>(
    mode: &Mode,
    rt: &ResolventTriple<T>,
    xi: &T,
    g: &SampledFunction<T>,
) -> Result<SampledFunction<T>> {
    rt.r.ensure_same_grid(g)?;
    let mu2: T = mode.mu2_in();
    let free = e_k(g.grid(), &mu2, 0).sub(&convolve_exp(&rt.r, &mu2))?;
    let forced = convolve_exp(g, &mu2);
    free.zip_with(&forced, |u, c| u.clone() * xi.clone() - c.clone())
}

/// Time-stepping solution of the modal Volterra equation.
pub fn solve_mode<T: Real>(
    mode: &Mode,
    rt: &ResolventTriple<T>,
    xi: &T,
    g: &SampledFunction<T>,
) -> Result<ModalTrajectory<T>> {
    let k = modal_forcing(mode, rt, xi, g)?;
    let z = z_kernel(&rt.l, &mode.mu2_in());
    let w = volterra_solve(&z, &k)?;
    Ok(ModalTrajectory { mode: *mode, w })
}

/// Closed form `w_n = k_n - H_n⋆k_n`; no Volterra solve.
pub fn explicit_mode<T: Real>(
    mode: &Mode,
    rt: &ResolventTriple<T>,
    h: &SampledFunction<T>,
    xi: &T,
    g: &SampledFunction<T>,
) -> Result<ModalTrajectory<T>> {
    let k = modal_forcing(mode, rt, xi, g)?;
    let w = k.sub(&convolve(h, &k)?)?;
    Ok(ModalTrajectory { mode: *mode, w })
}

/// `sup_t |w_n + Z_n⋆w_n - k_n|` with `Z_n⋆w_n` rebuilt as `-L⋆(e_0⋆w_n)`,
/// an association order independent of the solver.
pub fn modal_residual<T: Real>(
    traj: &ModalTrajectory<T>,
    rt: &ResolventTriple<T>,
    xi: &T,
    g: &SampledFunction<T>,
) -> Result<T> {
    let mu2: T = traj.mode.mu2_in();
    let k = modal_forcing(&traj.mode, rt, xi, g)?;
    let zw = convolve(&rt.l, &convolve_exp(&traj.w, &mu2))?.neg();
    traj.w.add(&zw)?.sup_distance(&k)
}

/// Modal expansion `w(x, t) = Σ φ_n(x) w_n(t)` over modes `1..=N`.
#[derive(Clone, Debug)]
pub struct FieldSolution<T> {
    modes: Vec<ModalTrajectory<T>>,
    points: usize,
}

pub const DEFAULT_SPATIAL_POINTS: usize = 201;

impl<T: Real> FieldSolution<T> {
    pub fn new(modes: Vec<ModalTrajectory<T>>) -> Result<Self> {
        Self::with_points(modes, DEFAULT_SPATIAL_POINTS)
    }

    pub fn with_points(modes: Vec<ModalTrajectory<T>>, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::InvalidArgument("spatial grid needs at least two points".into()));
        }
        for (i, m) in modes.iter().enumerate() {
            if m.mode.n != i + 1 {
                return Err(Error::InvalidArgument(format!(
                    "modal indices must run 1, 2, ... without gaps; position {} holds n = {}",
                    i + 1,
                    m.mode.n
                )));
            }
            if i > 0 {
                m.w.ensure_same_grid(&modes[0].w)?;
            }
        }
        Ok(FieldSolution { modes, points })
    }

    pub fn modes(&self) -> &[ModalTrajectory<T>] {
        &self.modes
    }
}

/// Field and `A⁻¹` image at one time node.
#[derive(Clone, Debug, Serialize)]
pub struct Snapshot {
    pub time: f64,
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    /// `-w_n(t)/λ_n²`.
    pub inverse_image: Vec<f64>,
    /// `ℓ²` norm of the truncated `A⁻¹` image.
    pub deficiency: f64,
}

pub fn assemble<T: Real>(field: &FieldSolution<T>, t: f64) -> Result<Snapshot> {
    let Some(first) = field.modes.first() else {
        return Ok(Snapshot {
            time: t,
            x: Vec::new(),
            w: Vec::new(),
            inverse_image: Vec::new(),
            deficiency: 0.0,
        });
    };
    let k = first.w.grid().node_index(&T::of(t))?;
    let coeffs: Vec<f64> = field.modes.iter().map(|m| m.w.at(k).to_f64_lossy()).collect();
    let x: Vec<f64> = (0..field.points)
        .map(|i| i as f64 / (field.points - 1) as f64)
        .collect();
    let w = x
        .iter()
        .map(|&xi| {
            field
                .modes
                .iter()
                .zip(&coeffs)
                .map(|(m, c)| m.mode.eigenfunction(xi) * c)
                .sum()
        })
        .collect();
    let inverse_image: Vec<f64> = field
        .modes
        .iter()
        .zip(&coeffs)
        .map(|(m, c)| -c / m.mode.lambda2)
        .collect();
    let deficiency = l2(&inverse_image);
    Ok(Snapshot {
        time: t,
        x,
        w,
        inverse_image,
        deficiency,
    })
}

/// Estimate of the `A⁻¹` image of the uncontrolled modes `n > last`:
/// `(Σ_{n>last} [|ξ_n| (e^{-μ_n² T} + |R(T)|/μ_n²) / λ_n²]²)^{1/2}`.
///
/// The bracket is the leading behaviour of the free response at `T`.
pub fn tail_estimate(last: usize, a: f64, horizon: f64, r_at_t: f64, xi: impl Fn(usize) -> f64) -> f64 {
    let stop = 20 * last + 1000;
    let mut sum = 0.0;
    for n in last + 1..=stop {
        let m = Mode::new(n, a);
        if m.mu2 <= 0.0 {
            continue;
        }
        let free = (-m.mu2 * horizon).exp() + r_at_t.abs() / m.mu2;
        sum += (xi(n).abs() * free / m.lambda2).powi(2);
    }
    sum.sqrt()
}

pub(crate) fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{resolvent_of, MemoryKernel, TimeGrid};

    #[test]
    fn heat_mode_closed_forms() {
        let g = TimeGrid::new(0.5f64, 50).unwrap();
        let m = Mode::new(1, 0.0);
        let zero = SampledFunction::zeros(&g);
        let free = heat_mode(&m, &1.0, &zero);
        for (t, v) in g.times().zip(free.w.values()) {
            assert!((v - (-m.lambda2 * t).exp()).abs() < 1e-15);
        }
        let one = SampledFunction::constant(&g, 1.0);
        let forced = heat_mode(&m, &0.0, &one);
        for (t, v) in g.times().zip(forced.w.values()) {
            let exact = -(1.0 - (-m.lambda2 * t).exp()) / m.lambda2;
            assert!((v - exact).abs() < 1e-15);
        }
        assert_eq!(heat_mode(&m, &0.0, &zero).w.sup_norm(), 0.0);
    }

    #[test]
    fn zero_memory_matches_heat_mode_bitwise() {
        let g = TimeGrid::new(1.0f64, 200).unwrap();
        let rt = resolvent_of(&MemoryKernel::Zero, &g).unwrap();
        let forcing = SampledFunction::from_fn(&g, |t| (3.0 * t).sin()).unwrap();
        for n in 1..4 {
            let m = Mode::new(n, 0.0);
            let a = solve_mode(&m, &rt, &0.7, &forcing).unwrap();
            let b = heat_mode(&m, &0.7, &forcing);
            assert_eq!(a.w.values(), b.w.values());
        }
    }

    #[test]
    fn steady_ramp_fixes_trace_sign() {
        // w(x, t) = x solves the heat equation with f(0) = 0, f(1) = 1
        let g = TimeGrid::new(0.3f64, 300).unwrap();
        let f = crate::spectral::BoundaryControl::only(
            crate::spectral::Endpoint::Right,
            SampledFunction::constant(&g, 1.0),
        );
        for n in 1..6 {
            let m = Mode::new(n, 0.0);
            let xi = std::f64::consts::SQRT_2 * if n % 2 == 1 { 1.0 } else { -1.0 }
                / (n as f64 * std::f64::consts::PI);
            let gn = crate::spectral::trace_pairing(&m, &f);
            let w = heat_mode(&m, &xi, &gn);
            assert!((w.w.last() - xi).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn assembly_reports_deficiency() {
        let g = TimeGrid::new(1.0f64, 10).unwrap();
        let m = Mode::new(1, 0.0);
        let traj = ModalTrajectory {
            mode: m,
            w: SampledFunction::constant(&g, 1.0),
        };
        let field = FieldSolution::new(vec![traj]).unwrap();
        let snap = assemble(&field, 1.0).unwrap();
        assert!((snap.deficiency - 1.0 / m.lambda2).abs() < 1e-15);
        assert_eq!(snap.x.len(), 201);
        assert!(assemble(&field, 0.55).is_err());
        let gap = ModalTrajectory {
            mode: Mode::new(2, 0.0),
            w: SampledFunction::zeros(&g),
        };
        assert!(FieldSolution::new(vec![gap]).is_err());
    }
}
