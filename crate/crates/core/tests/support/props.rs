//! Property suites shared by the `properties` and `acceptance` targets.

use awm_core::fitting::{discrepancy, local_error};
use awm_core::lorenz::{ensemble_lorenz, gini_from_points, weighted_points};
use awm_core::mc::{rng_for, sweep, SweepScratch};
use awm_core::{compute_potentials, AgentEnsemble, ModelParams, RedistributionPolicy, SimConfig, WealthDistribution};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

pub const CASES: u32 = 1000;

pub struct Suite {
    pub name: &'static str,
    pub run: fn() -> Result<(), String>,
}

pub const SUITES: [Suite; 7] = [
    Suite { name: "conservation and debt floor", run: conservation },
    Suite { name: "determinism", run: determinism },
    Suite { name: "gini vs mean absolute difference", run: gini_oracle },
    Suite { name: "gini scale and order invariance", run: gini_invariance },
    Suite { name: "discrepancy metric", run: discrepancy_metric },
    Suite { name: "local error below vertical gap", run: local_error_bound },
    Suite { name: "potentials vs brute force", run: potentials_brute_force },
];

fn runner() -> TestRunner {
    let config = Config { cases: CASES, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

/// Agents as shifted wealths `x = w + delta >= 0`, mapped back to `w` for the given lambda.
fn ensemble(xs: &[f64], lambda: f64) -> (Vec<f64>, f64) {
    let sx: f64 = xs.iter().sum();
    let total = sx / (1.0 + lambda);
    let delta = lambda * total / xs.len() as f64;
    (xs.iter().map(|x| x - delta).collect(), total)
}

fn shifted_wealths(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), 1e-3..10.0f64, 10.0..1e3f64], 2..max)
        .prop_filter("positive total", |v| v.iter().sum::<f64>() > 0.0)
}

fn simulate(w: &[f64], total: f64, zeta: f64, lambda: f64, chi: f64, seed: u64, sweeps: u64) -> (Vec<f64>, f64) {
    let params = ModelParams::new(zeta, lambda, w.len(), total).unwrap();
    let mut e = AgentEnsemble::new(w.to_vec(), params.delta() * (1.0 + 1e-12)).unwrap();
    let cfg = SimConfig { dt: 0.01, seed, ..SimConfig::default() };
    let policy = RedistributionPolicy::flat(chi);
    let mut rng = rng_for(seed, 0);
    let mut scratch = SweepScratch::default();
    let mut drift: f64 = 0.0;
    for _ in 0..sweeps {
        let d = sweep(&mut e, &params, &policy, &cfg, &mut rng, &mut scratch).unwrap();
        drift = drift.max(d.wealth_drift);
    }
    (e.wealths, drift)
}

/// Lorenz value by linear interpolation through the origin.
fn lorenz_at(curve: &[(f64, f64)], f: f64) -> f64 {
    let mut prev = (0.0, 0.0);
    for &p in curve {
        if p.0 >= f {
            return if p.0 == prev.0 { p.1 } else { prev.1 + (f - prev.0) / (p.0 - prev.0) * (p.1 - prev.1) };
        }
        prev = p;
    }
    prev.1
}

fn conservation() -> Result<(), String> {
    let strat = (shifted_wealths(64), 0.0..4.0f64, 0.0..2.0f64, 0.0..2.0f64, any::<u64>());
    runner()
        .run(&strat, |(xs, zeta, lambda, chi, seed)| {
            let (w, total) = ensemble(&xs, lambda);
            let delta = lambda * total / w.len() as f64;
            let scale = xs.iter().sum::<f64>() / total;
            let (after, drift) = simulate(&w, total, zeta, lambda, chi, seed, 5);
            prop_assert!(drift <= 1e-12 * scale, "drift {drift}");
            let sum: f64 = after.iter().sum();
            prop_assert!((sum - total).abs() <= 1e-11 * total * scale);
            for &a in &after {
                prop_assert!(a >= -delta * (1.0 + 1e-12) - 1e-12, "{a} below {}", -delta);
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn determinism() -> Result<(), String> {
    let strat = (shifted_wealths(32), 0.0..4.0f64, 0.0..2.0f64, any::<u64>());
    runner()
        .run(&strat, |(xs, zeta, lambda, seed)| {
            let (w, total) = ensemble(&xs, lambda);
            let bits = |v: Vec<f64>| v.into_iter().map(f64::to_bits).collect::<Vec<_>>();
            let a = bits(simulate(&w, total, zeta, lambda, 0.3, seed, 3).0);
            let b = bits(simulate(&w, total, zeta, lambda, 0.3, seed, 3).0);
            prop_assert_eq!(a, b);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn gini_oracle() -> Result<(), String> {
    runner()
        .run(&shifted_wealths(200), |w| {
            let n = w.len() as f64;
            let mean = w.iter().sum::<f64>() / n;
            let mut md = 0.0;
            for a in &w {
                for b in &w {
                    md += (a - b).abs();
                }
            }
            let oracle = md / (2.0 * n * n * mean);
            let g = gini_from_points(&ensemble_lorenz(&w));
            prop_assert!((g - oracle).abs() < 1e-12, "{g} vs {oracle}");
            prop_assert!(g >= -1e-12 && g <= 1.0 - 1.0 / n + 1e-12);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn gini_invariance() -> Result<(), String> {
    use rand::seq::SliceRandom;
    runner()
        .run(&(shifted_wealths(200), 1e-3..1e3f64, any::<u64>()), |(w, k, seed)| {
            let g = gini_from_points(&ensemble_lorenz(&w));
            let scaled: Vec<f64> = w.iter().map(|v| v * k).collect();
            let mut shuffled = w.clone();
            shuffled.shuffle(&mut rng_for(seed, 1));
            prop_assert!((gini_from_points(&ensemble_lorenz(&scaled)) - g).abs() < 1e-12);
            prop_assert!((gini_from_points(&ensemble_lorenz(&shuffled)) - g).abs() < 1e-12);
            let d = WealthDistribution::from_ensemble(&w, 0.0).unwrap();
            prop_assert!((awm_core::gini(&d) - g).abs() < 1e-12);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn discrepancy_metric() -> Result<(), String> {
    let rec = |v: &Vec<f64>| weighted_points(&v.iter().map(|&x| (x, 1.0)).collect::<Vec<_>>());
    runner()
        .run(&(shifted_wealths(40), shifted_wealths(40), shifted_wealths(40)), |(a, b, c)| {
            let (la, lb, lc) = (rec(&a), rec(&b), rec(&c));
            prop_assert_eq!(discrepancy(&la, &la).unwrap(), 0.0);
            let ab = discrepancy(&la, &lb).unwrap();
            let ba = discrepancy(&lb, &la).unwrap();
            prop_assert!((ab - ba).abs() < 1e-15);
            prop_assert!((0.0..=0.5 + 1e-15).contains(&ab));
            let ac = discrepancy(&la, &lc).unwrap();
            let cb = discrepancy(&lc, &lb).unwrap();
            prop_assert!(ab <= ac + cb + 1e-14);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn local_error_bound() -> Result<(), String> {
    runner()
        .run(&(shifted_wealths(40), 0.0..1.0f64, 0.0..1.0f64), |(w, f, l)| {
            let model = ensemble_lorenz(&w);
            let gap = (l - lorenz_at(&model, f)).abs();
            prop_assert!(local_error((f, l), &model) <= gap + 1e-15);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn potentials_brute_force() -> Result<(), String> {
    runner()
        .run(&(shifted_wealths(1000), 0.0..2.0f64, 0.0..2.0f64), |(xs, lambda, chi)| {
            let (w, total) = ensemble(&xs, lambda);
            let n = w.len() as f64;
            let delta = lambda * total / n;
            let d = WealthDistribution::from_ensemble(&w, lambda).unwrap();
            let p = compute_potentials(&d, &RedistributionPolicy::flat(chi)).unwrap();
            let abs_wealth: f64 = w.iter().map(|v| v.abs()).sum();
            let half_sq_total: f64 = w.iter().map(|v| 0.5 * v * v).sum::<f64>() / n;
            let last = d.grid.len() - 1;
            for (i, &g) in d.grid.iter().enumerate() {
                // the floor node also holds agents that rounded onto it
                let at_or_above = w.iter().filter(|&&v| v >= g || i == 0).count() as f64 / n;
                let below = |v: f64| v <= g || i == last;
                let l: f64 = w.iter().filter(|&&v| below(v)).sum::<f64>() / total;
                let b: f64 = w.iter().filter(|&&v| below(v)).map(|v| 0.5 * v * v).sum::<f64>() / n;
                prop_assert!((p.a[i] - at_or_above).abs() <= 1e-12 * at_or_above.max(1.0 / n));
                prop_assert!((p.l[i] - l).abs() <= 1e-12 * abs_wealth / total);
                prop_assert!((p.b[i] - b).abs() <= 1e-12 * half_sq_total.max(f64::MIN_POSITIVE));
            }
            let t: f64 = w.iter().map(|v| chi * (v + delta)).sum();
            prop_assert!((p.t - t).abs() <= 1e-12 * chi * xs.iter().sum::<f64>());
            prop_assert!((p.l_inf - 1.0).abs() <= 1e-12 * abs_wealth / total);
            Ok(())
        })
        .map_err(|e| e.to_string())
}
