use heatmem::biorth::{
    closed_loop, contrast, control_sweep, cauchy_diag_at, escalate, gram, growth_fit, growth_fit_report,
    min_norm_biorth, BiorthReport, ControlSetup, ControlSweep, ExponentFamily, GrowthFit, PrecisionTask,
};
use heatmem::dynamics::{assemble, explicit_mode, heat_mode, solve_mode, FieldSolution, ModalTrajectory};
use heatmem::kernel::{h_direct, h_series_from, resolvent_of, ConvolutionPowers};
use heatmem::moment::{dn_asymptotic_check, scope_threshold, DiagonalMap, MomentProblem, Regime};
use heatmem::spectral::{dirichlet_modes_1d, trace_pairing};
use heatmem::{
    BoundaryControl, Error, Grid, Horizon, MemoryKernel, Mode, RationalModel, Real, Resolvent, Result, Samples,
    TimeGrid,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{echo, ExperimentConfig, HorizonSpec, ScopePolicy, Signal};
use crate::output::{Artifacts, Cell, Csv};

/// Upper index of the extended family behind the reference slope.
pub const REFERENCE_FAMILY: usize = 100_000;

fn start(cfg: &ExperimentConfig) -> Artifacts {
    let mut out = Artifacts::new();
    out.text("config.toml", echo(cfg));
    out
}

fn grid(cfg: &ExperimentConfig, steps: usize) -> Result<std::sync::Arc<Grid>> {
    TimeGrid::new(cfg.horizon, steps)
}

fn refinement_steps(cfg: &ExperimentConfig) -> Vec<usize> {
    (0..cfg.refine_levels).map(|k| cfg.steps << k).collect()
}

/// Observed orders `log2(e_{k-1}/e_k)` of successive errors.
fn orders(errors: &[f64]) -> Vec<Option<f64>> {
    (0..errors.len())
        .map(|k| (k > 0 && errors[k] > 0.0).then(|| (errors[k - 1] / errors[k]).log2()))
        .collect()
}

fn refinement_table(steps: &[usize], horizon: f64, errors: &[f64], label: &str) -> (Csv, Vec<Option<f64>>) {
    let ords = orders(errors);
    let mut t = Csv::new(&["steps", "dt", label, "order"]);
    for ((s, e), o) in steps.iter().zip(errors).zip(&ords) {
        t.row(&[
            Cell::Int(*s),
            Cell::Num(horizon / *s as f64),
            Cell::Num(*e),
            o.map_or(Cell::Empty, Cell::Num),
        ]);
    }
    (t, ords)
}

#[derive(Serialize)]
struct RefinementSummary {
    steps: Vec<usize>,
    errors: Vec<f64>,
    orders: Vec<Option<f64>>,
}

struct Oracle {
    r: heatmem::ExpSum<f64>,
    l: heatmem::ExpSum<f64>,
}

fn oracle(kernel: &MemoryKernel) -> Option<Oracle> {
    let r = RationalModel::<f64>::new(kernel).resolvent().ok()?;
    let l = r.derivative();
    Some(Oracle { r, l })
}

fn sup_error(f: &Samples, exact: &heatmem::ExpSum<f64>) -> f64 {
    f.grid()
        .times()
        .zip(f.values())
        .map(|(t, v)| (v - exact.eval(&t)).abs())
        .fold(0.0, f64::max)
}

#[derive(Serialize)]
struct ResolventSummary {
    a: f64,
    r_at_horizon: f64,
    identity_residual: f64,
    oracle: bool,
    sup_error_r: Option<f64>,
    sup_error_l: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    refinement: Option<RefinementSummary>,
}

pub fn resolvent(cfg: &ExperimentConfig, refine: bool) -> Result<Artifacts> {
    let g = grid(cfg, cfg.steps)?;
    let rt = resolvent_of(&cfg.kernel, &g)?;
    let m = cfg.kernel.sample(&g);
    let exact = oracle(&cfg.kernel);
    let mut header = vec!["t", "M", "R", "L"];
    if exact.is_some() {
        header.extend(["R_exact", "L_exact", "R_error"]);
    }
    let mut table = Csv::new(&header);
    for (k, t) in g.times().enumerate() {
        let mut row = vec![Cell::Num(t), Cell::Num(*m.at(k)), Cell::Num(*rt.r.at(k)), Cell::Num(*rt.l.at(k))];
        if let Some(o) = &exact {
            let r = o.r.eval(&t);
            row.extend([Cell::Num(r), Cell::Num(o.l.eval(&t)), Cell::Num(rt.r.at(k) - r)]);
        }
        table.row(&row);
    }
    let mut out = start(cfg);
    out.csv("resolvent.csv", table);
    let refinement = match (&exact, refine) {
        (Some(o), true) => {
            let steps = refinement_steps(cfg);
            let errors = steps
                .par_iter()
                .map(|&s| Ok(sup_error(&resolvent_of(&cfg.kernel, &grid(cfg, s)?)?.r, &o.r)))
                .collect::<Result<Vec<f64>>>()?;
            let (t, orders) = refinement_table(&steps, cfg.horizon, &errors, "sup_error_r");
            out.csv("refinement.csv", t);
            Some(RefinementSummary { steps, errors, orders })
        }
        (None, true) => {
            eprintln!("warning: no closed-form resolvent for this kernel; refinement table skipped");
            None
        }
        _ => None,
    };
    out.json(
        "summary.json",
        &ResolventSummary {
            a: rt.a,
            r_at_horizon: *rt.r.last(),
            identity_residual: rt.identity_residual(&m)?,
            oracle: exact.is_some(),
            sup_error_r: exact.as_ref().map(|o| sup_error(&rt.r, &o.r)),
            sup_error_l: exact.as_ref().map(|o| sup_error(&rt.l, &o.l)),
            refinement,
        },
    );
    Ok(out)
}

fn sample_signal(g: &std::sync::Arc<Grid>, s: &Signal) -> Result<Samples> {
    Samples::from_fn(g, |t| s.eval(t))
}

struct Simulation {
    solved: Vec<ModalTrajectory<f64>>,
    discrepancy: f64,
    baseline: Option<f64>,
}

fn simulate_on(cfg: &ExperimentConfig, steps: usize, with_explicit: bool) -> Result<Simulation> {
    let g = grid(cfg, steps)?;
    let rt: Resolvent = resolvent_of(&cfg.kernel, &g)?;
    let set = dirichlet_modes_1d(cfg.modes, cfg.kernel.at_zero())?;
    let f = BoundaryControl::new(sample_signal(&g, &cfg.forcing.left)?, sample_signal(&g, &cfg.forcing.right)?)?;
    let powers = if with_explicit {
        Some(ConvolutionPowers::new(&rt.l, &cfg.series_tol)?)
    } else {
        None
    };
    let memoryless = cfg.kernel.is_zero();
    let per_mode = set
        .modes
        .par_iter()
        .map(|m| {
            let xi = cfg.initial_data.coefficient(m.n);
            let gn = trace_pairing(m, &f);
            let w = solve_mode(m, &rt, &xi, &gn)?;
            let gap = match &powers {
                Some(p) => {
                    let h = h_series_from(p, &m.mu2).h;
                    explicit_mode(m, &rt, &h, &xi, &gn)?.w.sup_distance(&w.w)?
                }
                None => 0.0,
            };
            let base = if memoryless {
                Some(heat_mode(m, &xi, &gn).w.sup_distance(&w.w)?)
            } else {
                None
            };
            Ok((w, gap, base))
        })
        .collect::<Result<Vec<_>>>()?;
    let discrepancy = per_mode.iter().map(|p| p.1).fold(0.0, f64::max);
    let baseline = memoryless.then(|| per_mode.iter().filter_map(|p| p.2).fold(0.0, f64::max));
    Ok(Simulation {
        solved: per_mode.into_iter().map(|p| p.0).collect(),
        discrepancy,
        baseline,
    })
}

#[derive(Serialize)]
struct SimulateSummary {
    modes: usize,
    steps: usize,
    /// `sup_t max_n |w_solve - w_explicit|`.
    discrepancy: f64,
    /// Distance to the memoryless heat solution; only for the zero kernel.
    heat_baseline_discrepancy: Option<f64>,
    terminal: Vec<f64>,
    deficiency_at_horizon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    refinement: Option<RefinementSummary>,
}

fn deficiency(modes: &[ModalTrajectory<f64>], k: usize) -> f64 {
    modes
        .iter()
        .map(|m| (m.w.at(k) / m.mode.lambda2).powi(2))
        .sum::<f64>()
        .sqrt()
}

pub fn simulate(cfg: &ExperimentConfig, refine: bool) -> Result<Artifacts> {
    let sim = simulate_on(cfg, cfg.steps, true)?;
    let g = sim.solved[0].w.grid().clone();
    let mut header = vec!["t".to_string()];
    header.extend((1..=cfg.modes).map(|n| format!("w_{n}")));
    let mut traj = Csv::new(&header);
    let mut def = Csv::new(&["t", "deficiency"]);
    for (k, t) in g.times().enumerate() {
        let mut row = vec![Cell::Num(t)];
        row.extend(sim.solved.iter().map(|m| Cell::Num(*m.w.at(k))));
        traj.row(&row);
        def.row(&[Cell::Num(t), Cell::Num(deficiency(&sim.solved, k))]);
    }
    let snap = assemble(&FieldSolution::new(sim.solved.clone())?, cfg.horizon)?;
    let mut field = Csv::new(&["x", "w"]);
    for (x, w) in snap.x.iter().zip(&snap.w) {
        field.row(&[Cell::Num(*x), Cell::Num(*w)]);
    }
    let mut out = start(cfg);
    out.csv("trajectories.csv", traj);
    out.csv("deficiency.csv", def);
    out.csv("field.csv", field);
    let refinement = if refine {
        let steps = refinement_steps(cfg);
        let finals = steps
            .par_iter()
            .map(|&s| Ok(simulate_on(cfg, s, false)?.solved.iter().map(|m| *m.w.last()).collect()))
            .collect::<Result<Vec<Vec<f64>>>>()?;
        // change against the next finer grid
        let changes: Vec<f64> = finals
            .windows(2)
            .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .collect();
        let (t, orders) = refinement_table(&steps[..changes.len()], cfg.horizon, &changes, "terminal_change");
        out.csv("refinement.csv", t);
        Some(RefinementSummary {
            steps: steps[..changes.len()].to_vec(),
            errors: changes,
            orders,
        })
    } else {
        None
    };
    out.json(
        "summary.json",
        &SimulateSummary {
            modes: cfg.modes,
            steps: cfg.steps,
            discrepancy: sim.discrepancy,
            heat_baseline_discrepancy: sim.baseline,
            terminal: sim.solved.iter().map(|m| *m.w.last()).collect(),
            deficiency_at_horizon: snap.deficiency,
            refinement,
        },
    );
    Ok(out)
}

#[derive(Serialize)]
struct MomentSummary {
    regime: Regime,
    r_at_horizon: f64,
    /// `-R(T)`, the limit of `μ_n² d_n / ξ_n`.
    limit: f64,
    first_positive: Option<usize>,
    scope: Option<usize>,
    scope_policy: ScopePolicy,
    sup_scaled: f64,
    scaled_slope: f64,
}

pub fn moment(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let g = grid(cfg, cfg.steps)?;
    let rt = resolvent_of(&cfg.kernel, &g)?;
    let set = dirichlet_modes_1d(cfg.modes, cfg.kernel.at_zero())?;
    let modes: Vec<Mode> = set.modes.iter().filter(|m| m.mu2 > 0.0).copied().collect();
    if modes.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no mode among 1..={} has mu^2 > 0; raise --modes",
            cfg.modes
        )));
    }
    let hs = modes
        .par_iter()
        .map(|m| h_direct(&rt.l, &m.mu2))
        .collect::<Result<Vec<_>>>()?;
    let report = dn_asymptotic_check(&modes, &hs, &rt)?;
    let scope = match cfg.scope {
        ScopePolicy::Fixed(n) => Some(n),
        ScopePolicy::Auto(_) => scope_threshold(&report),
    };
    let problem = MomentProblem::build(&modes, &hs, &rt, &cfg.initial_data)?.with_scope(scope);
    let map = DiagonalMap::from_report(&report);
    let mut table = Csv::new(&["n", "mu2", "xi", "d_n", "limit_ratio", "residual", "scaled", "diagonal"]);
    let diagonal = map.forward(&problem.xi);
    for (i, r) in report.rows.iter().enumerate() {
        table.row(&[
            Cell::Int(r.n),
            Cell::Num(r.mu2),
            Cell::Num(problem.xi[i]),
            Cell::Num(problem.d[i]),
            Cell::Num(r.ratio),
            Cell::Num(r.residual),
            Cell::Num(r.scaled),
            Cell::Num(diagonal[i]),
        ]);
    }
    let mut out = start(cfg);
    out.csv("moments.csv", table);
    out.json("moment_problem.json", &problem.dump());
    out.json(
        "summary.json",
        &MomentSummary {
            regime: report.regime,
            r_at_horizon: report.r_at_t,
            limit: -report.r_at_t,
            first_positive: set.first_positive,
            scope,
            scope_policy: cfg.scope,
            sup_scaled: report.sup_scaled,
            scaled_slope: report.scaled_slope,
        },
    );
    Ok(out)
}

struct BiorthTask<'a> {
    family: &'a ExponentFamily,
    horizon: Horizon,
}

impl PrecisionTask for BiorthTask<'_> {
    type Output = BiorthReport;

    fn run<T: Real>(&self) -> Result<BiorthReport> {
        min_norm_biorth(&gram(self.family.values::<T>(), self.horizon)?)
    }
}

#[derive(Serialize)]
struct FitSummary {
    slope: f64,
    slope_over_pi: f64,
    intercept: f64,
    rms_residual: f64,
    first: usize,
    last: usize,
}

impl From<GrowthFit> for FitSummary {
    fn from(f: GrowthFit) -> Self {
        FitSummary {
            slope: f.slope,
            slope_over_pi: f.slope / std::f64::consts::PI,
            intercept: f.intercept,
            rms_residual: f.residual,
            first: f.first,
            last: f.last,
        }
    }
}

#[derive(Serialize)]
struct BiorthSummary {
    bits: u32,
    escalations: Vec<heatmem::biorth::Attempt>,
    max_residual: f64,
    condition: f64,
    /// Fit over the solved family.
    gram_fit: FitSummary,
    /// Fit over the closed-form diagonal of the family extended to
    /// `REFERENCE_FAMILY` indices; infinite horizon with `n²π² - shift` only.
    reference_fit: Option<FitSummary>,
}

fn fit_range(cfg: &ExperimentConfig) -> Option<(usize, usize)> {
    cfg.biorth.fit.map(|[a, b]| (a, b))
}

pub fn biorth(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let family = &cfg.biorth.family;
    let task = BiorthTask {
        family,
        horizon: cfg.biorth.horizon.horizon(),
    };
    let run = escalate(cfg.precision, &task)?;
    for a in &run.attempts {
        eprintln!("warning: {} bits insufficient ({}); escalating", a.bits, a.error);
    }
    let report = run.output;
    let gram_fit = growth_fit_report(&report, fit_range(cfg))?;
    let mut table = Csv::new(&["n", "norm", "log_norm", "residual"]);
    for i in 0..report.n.len() {
        table.row(&[
            Cell::Int(report.n[i]),
            Cell::Num(report.norms[i]),
            Cell::Num(report.log_norms[i]),
            Cell::Num(report.residuals[i]),
        ]);
    }
    let mut out = start(cfg);
    out.csv("biorth.csv", table);
    let reference_fit = match (family, cfg.biorth.horizon) {
        (ExponentFamily::PiSquared { count, shift }, HorizonSpec::Named(_)) => {
            let x: Vec<f64> = ExponentFamily::PiSquared {
                count: REFERENCE_FAMILY.max(*count),
                shift: *shift,
            }
            .values();
            let idx: Vec<usize> = (1..=*count).collect();
            let diag = cauchy_diag_at(&x, &idx)?;
            for w in &diag.warnings {
                eprintln!("warning: {w}");
            }
            let mut t = Csv::new(&["n", "log_norm"]);
            for (n, l) in diag.n.iter().zip(&diag.log_norms) {
                t.row(&[Cell::Int(*n), Cell::Num(*l)]);
            }
            out.csv("biorth_reference.csv", t);
            Some(growth_fit(&diag.n, &diag.log_norms, fit_range(cfg))?.into())
        }
        _ => None,
    };
    out.json(
        "summary.json",
        &BiorthSummary {
            bits: run.bits,
            escalations: run.attempts,
            max_residual: report.max_residual,
            condition: report.condition,
            gram_fit: gram_fit.into(),
            reference_fit,
        },
    );
    Ok(out)
}

fn sweep_table(sweep: &ControlSweep) -> Csv {
    let mut t = Csv::new(&["n_active", "norm", "log_norm", "residual", "deficiency", "bits"]);
    for r in &sweep.results {
        t.row(&[
            Cell::Int(r.n_active),
            Cell::Num(r.norm),
            Cell::Num(r.log_norm),
            Cell::Num(r.residual),
            Cell::Num(r.deficiency),
            Cell::Int(r.bits as usize),
        ]);
    }
    t
}

fn warn_escalations(label: &str, sweep: &ControlSweep) {
    for r in &sweep.results {
        for a in &r.attempts {
            eprintln!(
                "warning: {label} N = {}: {} bits insufficient ({}); escalating",
                r.n_active, a.bits, a.error
            );
        }
    }
}

#[derive(Serialize)]
struct SweepSummary {
    verdict: heatmem::biorth::SweepVerdict,
    /// Deficiency of the largest-`N` control replayed through the time-stepper.
    closed_loop_deficiency: f64,
}

#[derive(Serialize)]
struct ControlSummary {
    memory: SweepSummary,
    memoryless: Option<SweepSummary>,
    verdict: Option<heatmem::biorth::ContrastVerdict>,
}

fn run_sweep(cfg: &ExperimentConfig, kernel: MemoryKernel) -> Result<(ControlSweep, SweepSummary)> {
    let mut setup = ControlSetup::new(kernel, cfg.horizon, cfg.initial_data.clone());
    setup.endpoints = cfg.control.endpoints.clone();
    setup.check_modes = cfg.control.check_modes;
    let sweep = control_sweep(&setup, cfg.control.n_max, cfg.precision)?;
    let last = sweep.results.last().expect("n_max >= 1");
    let replay = closed_loop(&setup, last, cfg.steps)?;
    let summary = SweepSummary {
        verdict: sweep.verdict.clone(),
        closed_loop_deficiency: replay.deficiency,
    };
    Ok((sweep, summary))
}

pub fn control(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let (memory, memory_summary) = run_sweep(cfg, cfg.kernel.clone())?;
    warn_escalations("memory", &memory);
    let mut out = start(cfg);
    out.csv("control_memory.csv", sweep_table(&memory));
    let (memoryless, verdict) = if cfg.control.compare_memoryless {
        let (base, base_summary) = run_sweep(cfg, MemoryKernel::Zero)?;
        warn_escalations("memoryless", &base);
        out.csv("control_memoryless.csv", sweep_table(&base));
        let v = contrast(&base.verdict, &memory.verdict);
        (Some(base_summary), Some(v))
    } else {
        (None, None)
    };
    out.json(
        "summary.json",
        &ControlSummary {
            memory: memory_summary,
            memoryless,
            verdict,
        },
    );
    Ok(out)
}
