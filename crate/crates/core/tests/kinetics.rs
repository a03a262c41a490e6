use awm_core::fp::tail_fit;
use awm_core::mc::{l1_distance, run_replicas};
use awm_core::{
    gini, oligarch_fraction_awm, steady_state, AgentEnsemble, GridSpec, ModelParams, RedistributionPolicy, SimConfig,
    SolverConfig,
};

fn solve(chi: f64, zeta: f64, lambda: f64) -> awm_core::SteadyStateReport {
    let params = ModelParams::new(zeta, lambda, 1000, 1000.0).unwrap();
    let r = steady_state(&params, &RedistributionPolicy::flat(chi), &SolverConfig::default(), None).unwrap();
    assert!(r.converged, "({chi}, {zeta}, {lambda}) did not converge");
    r
}

#[test]
fn condensate_follows_the_closed_form() {
    for (chi, zeta, lambda) in [(0.1, 0.2, 0.0), (0.1, 0.2, 0.5), (0.3, 0.4, 1.0), (0.2, 0.1, 0.0)] {
        let c = solve(chi, zeta, lambda).distribution.condensed_fraction;
        let want = oligarch_fraction_awm(chi, zeta, lambda).unwrap();
        assert!((c - want).abs() < 0.01, "({chi}, {zeta}, {lambda}): {c} vs {want}");
    }
}

#[test]
fn tail_curvature_tracks_the_rate_gap() {
    for (chi, zeta) in [(0.2, 0.1), (0.1, 0.2), (0.5, 0.3)] {
        let d = solve(chi, zeta, 0.0).distribution;
        let b_inf: f64 = d.node_masses().iter().zip(&d.grid).map(|(m, w)| 0.5 * m * w * w).sum::<f64>() / d.n_agents;
        let q = tail_fit(&d).unwrap().quadratic();
        let want = (chi - zeta).abs() / (2.0 * b_inf);
        assert!((q - want).abs() < 0.1 * want, "({chi}, {zeta}): {q} vs {want}");
    }
    let critical = tail_fit(&solve(0.15, 0.15, 0.0).distribution).unwrap().quadratic();
    assert!(critical.abs() < 0.1 * 0.05 / 2.0);
}

#[test]
fn small_ensemble_tracks_the_steady_state() {
    let params = ModelParams::new(0.1, 0.25, 2000, 2000.0).unwrap();
    let policy = RedistributionPolicy::flat(0.2);
    let grid = GridSpec::new(400, 2.0, 1000.0).unwrap();
    let fp = steady_state(&params, &policy, &SolverConfig { grid, ..SolverConfig::default() }, None).unwrap();
    let config = SimConfig { dt: 0.01, sweeps: 6000, seed: 5, snapshot_stride: 50, grid, ..SimConfig::default() };
    let set = run_replicas(&config, &params, &policy, &AgentEnsemble::equal(&params), 2).unwrap();
    let mu_bar = params.mu_bar();
    let edges: Vec<f64> = (0..=40).map(|i| -params.delta() + i as f64 * 0.25 * mu_bar).chain([1e9]).collect();
    let l1 = l1_distance(&set.late_average, &fp.distribution, &edges).unwrap();
    assert!(l1 < 0.08, "L1 = {l1}");
    assert!((gini(&set.late_average) - gini(&fp.distribution)).abs() < 0.02);
    for r in &set.runs {
        assert!(r.diagnostics.wealth_drift <= 1e-12);
    }
}
