use heatmem::dynamics::{assemble, explicit_mode, solve_mode, FieldSolution};
use heatmem::kernel::{h_direct, resolvent_of, MemoryKernel, SampledFunction, TimeGrid};
use heatmem::spectral::{dirichlet_modes_1d, trace_pairing, BoundaryControl, Mode};

#[test]
fn free_modes_decay_for_nonnegative_kernels() {
    let g = TimeGrid::new(1.0f64, 1000).unwrap();
    let zero = SampledFunction::zeros(&g);
    for k in [
        MemoryKernel::Constant { c: 1.0 },
        MemoryKernel::exponential(1.0, 1.0),
        MemoryKernel::exponential(2.0, 3.0),
        MemoryKernel::Constant { c: 5.0 },
    ] {
        let a: f64 = k.at_zero();
        let rt = resolvent_of(&k, &g).unwrap();
        let set = dirichlet_modes_1d(8, a).unwrap();
        for m in set.modes.iter().filter(|m| m.n >= set.first_positive.unwrap()) {
            let w = solve_mode(m, &rt, &1.0, &zero).unwrap();
            assert!(f64::abs(*w.w.last()) <= 1.0, "{k:?} n = {}", m.n);
        }
    }
}

#[test]
fn trajectories_converge_at_second_order() {
    let kernel = MemoryKernel::exponential(1.0, 1.0);
    let m = Mode::new(2, 1.0);
    let run = |steps: usize| {
        let g = TimeGrid::new(1.0f64, steps).unwrap();
        let rt = resolvent_of(&kernel, &g).unwrap();
        let f = BoundaryControl::new(
            SampledFunction::from_fn(&g, |t| t.sin()).unwrap(),
            SampledFunction::zeros(&g),
        )
        .unwrap();
        let w = solve_mode(&m, &rt, &0.5, &trace_pairing(&m, &f)).unwrap().w;
        // values at t = 0.25, 0.5, ..., 1
        (1..=4).map(|q| *w.at(q * steps / 4)).collect::<Vec<f64>>()
    };
    let reference = run(6400);
    let errors: Vec<f64> = [100, 200, 400]
        .iter()
        .map(|&s| {
            run(s)
                .iter()
                .zip(&reference)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((1.8..2.2).contains(&order), "{errors:?}");
    }
}

#[test]
fn representations_agree_for_exponential_memory() {
    let g = TimeGrid::new(1.0f64, 1000).unwrap();
    let kernel = MemoryKernel::exponential(1.0, 1.0);
    let rt = resolvent_of(&kernel, &g).unwrap();
    let f = BoundaryControl::new(
        SampledFunction::from_fn(&g, |t| (3.0 * t).cos()).unwrap(),
        SampledFunction::from_fn(&g, |t| t).unwrap(),
    )
    .unwrap();
    for n in 1..=5 {
        let m = Mode::new(n, 1.0);
        let g_n = trace_pairing(&m, &f);
        let h = h_direct(&rt.l, &m.mu2).unwrap();
        let a = solve_mode(&m, &rt, &(1.0 / n as f64), &g_n).unwrap();
        let b = explicit_mode(&m, &rt, &h, &(1.0 / n as f64), &g_n).unwrap();
        assert!(a.w.sup_distance(&b.w).unwrap() < 1e-8);
    }
}

#[test]
fn assembly_at_time_zero_is_the_initial_expansion() {
    let g = TimeGrid::new(0.5f64, 100).unwrap();
    let rt = resolvent_of(&MemoryKernel::Constant { c: 1.0 }, &g).unwrap();
    let zero = SampledFunction::zeros(&g);
    let modes: Vec<_> = (1..=6)
        .map(|n| solve_mode(&Mode::new(n, 1.0), &rt, &(1.0 / n as f64), &zero).unwrap())
        .collect();
    let field = FieldSolution::new(modes).unwrap();
    let snap = assemble(&field, 0.0).unwrap();
    for (x, w) in snap.x.iter().zip(&snap.w) {
        let exact: f64 = (1..=6).map(|n| Mode::new(n, 1.0).eigenfunction(*x) / n as f64).sum();
        assert!((w - exact).abs() < 1e-13);
    }
    let later = assemble(&field, 0.5).unwrap();
    assert!(later.deficiency < snap.deficiency);
}
