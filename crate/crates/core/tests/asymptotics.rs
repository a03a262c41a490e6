use std::f64::consts::{PI, SQRT_2};

use awm_core::asymptotics::{
    crossover_wealth, forward_tail, forward_tail_from, incomplete_moment_ratio, invert_redistribution,
    validate_reduction, MomentInputs, TailFamily, TailFunction, CROSSOVER_BRACKET,
};
use awm_core::{steady_state, CatalogueFamily, GridSpec, ModelParams, RedistributionPolicy, SolverConfig};
use statrs::function::erf::erfc;

/// Closed forms for `f = w^2 / 2`:
/// m = 0: `w sqrt(pi/2) e^{w^2/2} erfc(w / sqrt 2)`,
/// m = 2: `1 + sqrt(pi/2) e^{w^2/2} erfc(w / sqrt 2) / w`.
fn gaussian_ratio(m: u32, w: f64) -> f64 {
    let mills = (PI / 2.0).sqrt() * (0.5 * w * w).exp() * erfc(w / SQRT_2);
    match m {
        0 => w * mills,
        2 => 1.0 + mills / w,
        _ => unreachable!(),
    }
}

#[test]
fn gaussian_incomplete_moments_match_erfc() {
    let tail = TailFunction::family(TailFamily::Gaussian { sigma: SQRT_2 }).unwrap();
    for m in [0u32, 2] {
        let mut prev = f64::INFINITY;
        for w in [3.0, 5.0, 10.0, 20.0] {
            let r = incomplete_moment_ratio(&tail, m as f64, w).unwrap();
            let oracle = gaussian_ratio(m, w);
            assert!((r - oracle).abs() <= 1e-9 * oracle, "m={m} w={w}: {r} vs {oracle}");
            assert!((r - 1.0).abs() < prev);
            prev = (r - 1.0).abs();
        }
        assert!(prev < 0.01);
    }
}

fn moments_with_offset() -> MomentInputs {
    MomentInputs::new(1.7, 0.9, 1.3, 0.4, 0.25).unwrap().with_d(-0.35)
}

#[test]
fn inverted_policies_reproduce_their_tails() {
    let m = moments_with_offset();
    let families = [
        TailFamily::Exponential { rate: 0.8 },
        TailFamily::Pareto { alpha: 1.0 },
        TailFamily::Lognormal { sigma: 1.5 },
        TailFamily::InverseGamma { alpha: 1.5, beta: 2.0 },
        TailFamily::HigherOrderGaussian { m: 2.0, sigma: 50.0 },
    ];
    for fam in families {
        let tail = TailFunction::family(fam).unwrap().with_mu_bar(m.mu_bar);
        let inv = invert_redistribution(&tail, &m).unwrap();
        let w0 = 2.0 * tail.threshold();
        for k in [1e2, 1e3, 1e4] {
            let w = k * m.mu_bar;
            let want = tail.f(w).unwrap() - tail.f(w0).unwrap();
            let got = forward_tail_from(&inv, &m, w0, w).unwrap();
            assert!((got - want).abs() <= 1e-8 * want.abs(), "{fam:?} at {w}: {got} vs {want}");
        }
    }
}

#[test]
fn lognormal_crossover_changes_regime() {
    let (b, sigma, zeta, eps) = (1.5, 1.0, 0.1, 0.02);
    let m = MomentInputs::new(b, 1.0, 1.0, 0.0, zeta).unwrap();
    let policy = RedistributionPolicy::catalogue(CatalogueFamily::Lognormal { sigma }, b, 0.0, zeta + eps).unwrap();
    let iota = |w: f64| 2.0 * b * w.ln() / (sigma * sigma * w * w);
    let w_eps = crossover_wealth(|w| iota(w) * w, eps, CROSSOVER_BRACKET).unwrap();
    // f' split into the part carried by iota and the eps w / B_inf part
    let split = |w: f64| {
        let h = 1e-4;
        let df = (forward_tail(&policy, &m, w * (1.0 + h)).unwrap()
            - forward_tail(&policy, &m, w * (1.0 - h)).unwrap())
            / (2.0 * h * w);
        let quad = eps * w / b;
        (df - quad, quad)
    };
    let (sub, quad) = split(w_eps / 10.0);
    assert!(sub >= 5.0 * quad, "below: {sub} vs {quad}");
    let (sub, quad) = split(10.0 * w_eps);
    assert!(quad >= 5.0 * sub, "above: {sub} vs {quad}");
    let (sub, quad) = split(w_eps);
    assert!((sub - quad).abs() < 1e-4 * quad);
}

#[test]
fn subcritical_steady_state_satisfies_reduction() {
    let params = ModelParams::new(0.1, 0.3, 1000, 1000.0).unwrap();
    let policy = RedistributionPolicy::flat(0.25);
    let config = SolverConfig { grid: GridSpec::new(800, 2.0, 1000.0).unwrap(), ..SolverConfig::default() };
    let r = steady_state(&params, &policy, &config, None).unwrap();
    assert!(r.converged);
    let m = MomentInputs::from_distribution(&r.distribution, &policy, params.zeta).unwrap();
    let rep = validate_reduction(&r.distribution, &m).unwrap();
    assert!(rep.x.len() > 50);
    assert!(rep.within(0.05), "max deviation {}", rep.max_deviation());
}
