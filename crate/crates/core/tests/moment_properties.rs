use std::f64::consts::PI;

use heatmem::dynamics::solve_mode;
use heatmem::kernel::{g_kernel, h_direct, resolvent_of, MemoryKernel, SampledFunction, TimeGrid};
use heatmem::moment::{
    dn_asymptotic_check, moment_pairing, reduce_scalar, scalar_pairing, scope_threshold, DiagonalMap,
    InitialData, MomentProblem, Regime,
};
use heatmem::spectral::{trace_pairing, BoundaryControl, Endpoint, Mode};

fn test_control(g: &std::sync::Arc<TimeGrid<f64>>) -> BoundaryControl<f64> {
    BoundaryControl::new(
        SampledFunction::from_fn(g, |t| (2.0 * t).sin() + 0.3).unwrap(),
        SampledFunction::from_fn(g, |t| 1.0 - t * t).unwrap(),
    )
    .unwrap()
}

#[test]
fn pairing_is_the_reachability_constraint() {
    let g = TimeGrid::new(1.0, 2000).unwrap();
    let rt = resolvent_of(&MemoryKernel::Constant { c: 1.0 }, &g).unwrap();
    let f = test_control(&g);
    for n in 1..=6 {
        let m = Mode::new(n, 1.0);
        let h = h_direct(&rt.l, &m.mu2).unwrap();
        let w = solve_mode(&m, &rt, &0.0, &trace_pairing(&m, &f)).unwrap();
        let pairing = moment_pairing(&m, &h, &f).unwrap();
        assert!((pairing / m.mu2 + w.w.last()).abs() <= 1e-6, "n = {n}");
    }
}

#[test]
fn scalar_reduction_preserves_the_pairing() {
    let g = TimeGrid::new(1.0, 1000).unwrap();
    let rt = resolvent_of(&MemoryKernel::Constant { c: 1.0 }, &g).unwrap();
    let gk = g_kernel(&rt.l, &1e-14).unwrap();
    let f = test_control(&g);
    let reversed = |e: Endpoint| {
        let v: Vec<f64> = f.at(e).values().iter().rev().copied().collect();
        SampledFunction::new(g.clone(), v).unwrap()
    };
    let chi = [reversed(Endpoint::Left), reversed(Endpoint::Right)];
    let reduced = reduce_scalar(&chi, &gk).unwrap();
    for n in 1..=5 {
        let m = Mode::new(n, 1.0);
        let h = h_direct(&rt.l, &m.mu2).unwrap();
        let full = moment_pairing(&m, &h, &f).unwrap();
        let scalar = scalar_pairing(&m, &reduced);
        assert!((full - scalar).abs() <= 1e-6, "n = {n}: {full} vs {scalar}");
    }
}

#[test]
fn asymptotic_law_has_one_constant() {
    let g = TimeGrid::new(1.0, 4000).unwrap();
    let rt = resolvent_of(&MemoryKernel::Constant { c: 1.0 }, &g).unwrap();
    let modes: Vec<Mode> = (1..=20).map(|n| Mode::new(n, 1.0)).collect();
    let hs: Vec<_> = modes.iter().map(|m| h_direct(&rt.l, &m.mu2).unwrap()).collect();
    let report = dn_asymptotic_check(&modes, &hs, &rt).unwrap();
    assert_eq!(report.regime, Regime::Memory);
    assert!((report.r_at_t - (-1.0f64).exp()).abs() < 1e-6);
    let c = report.sup_scaled;
    for r in &report.rows {
        assert!(r.residual.abs() * r.mu2 <= c);
        assert!((r.ratio + (-1.0f64).exp()).abs() <= c / r.mu2 + 1e-12);
    }
    let scope = scope_threshold(&report).unwrap();
    let map = DiagonalMap::from_report(&report);
    let xi: Vec<f64> = (1..=20).map(|n| InitialData::default().coefficient(n)).collect();
    let back = map.inverse(&map.forward(&xi)).unwrap();
    for (a, b) in xi.iter().zip(&back) {
        assert!((a - b).abs() <= 1e-14 * a.abs());
    }
    assert!(scope >= 1);
}

#[test]
fn memoryless_problem_and_dump() {
    let g = TimeGrid::new(0.1, 500).unwrap();
    let rt = resolvent_of(&MemoryKernel::Zero, &g).unwrap();
    let modes: Vec<Mode> = (1..=4).map(|n| Mode::new(n, 0.0)).collect();
    let hs: Vec<_> = modes.iter().map(|m| h_direct(&rt.l, &m.mu2).unwrap()).collect();
    let report = dn_asymptotic_check(&modes, &hs, &rt).unwrap();
    assert_eq!(report.regime, Regime::Memoryless);
    assert!(report.rows.iter().all(|r| (r.ratio - r.mu2 * (-r.mu2 * 0.1).exp()).abs() < 1e-12 * r.mu2));
    let mp = MomentProblem::build(&modes, &hs, &rt, &InitialData::default()).unwrap();
    let json = serde_json::to_value(mp.dump()).unwrap();
    assert_eq!(json["T"], 0.1);
    assert_eq!(json["modes"].as_array().unwrap().len(), 4);
    assert_eq!(json["grid"]["steps"], 500);
    let d1 = json["modes"][0]["d_n"].as_f64().unwrap();
    assert!((d1 - (-PI * PI * 0.1).exp()).abs() < 1e-14);
}
