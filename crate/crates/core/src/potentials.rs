//! Pareto–Lorenz potentials: incomplete moments of the agent density.

use serde::{Deserialize, Serialize};

use crate::distribution::WealthDistribution;
use crate::error::{Error, Result};
use crate::policy::{eval_policy, RateFunction};

/// Lumped incomplete moments at every grid node.
///
/// `a[i]` is the fraction of agents at or above node `i`, `l[i]` the wealth share held
/// at or below it, `b[i]` half the mean square wealth at or below it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potentials {
    pub a: Vec<f64>,
    pub l: Vec<f64>,
    pub b: Vec<f64>,
    /// Total wealth collected for redistribution per unit time.
    pub t: f64,
    pub l_inf: f64,
    pub b_inf: f64,
}

/// Potentials of `dist`, with redistribution paid as `chi(w) (w + delta)`.
pub fn compute_potentials(dist: &WealthDistribution, policy: &dyn RateFunction) -> Result<Potentials> {
    let m = dist.node_masses();
    let n = dist.n_agents;
    let w_tot = dist.total_wealth;
    let delta = dist.delta();
    let k = m.len();

    let mut a = vec![0.0; k];
    let mut acc = 0.0;
    for i in (0..k).rev() {
        acc += m[i];
        a[i] = acc / n;
    }

    let mut l = vec![0.0; k];
    let mut b = vec![0.0; k];
    let (mut sl, mut sb, mut t) = (0.0, 0.0, 0.0);
    for i in 0..k {
        let w = dist.grid[i];
        sl += m[i] * w;
        sb += m[i] * w * w * 0.5;
        l[i] = sl / w_tot;
        b[i] = sb / n;
        if m[i] > 0.0 {
            t += m[i] * eval_policy(policy, w, delta)? * (w + delta);
        }
    }
    let c = dist.condensed_fraction;
    if c > 0.0 {
        let chi_inf = policy
            .asymptotic_rate()
            .ok_or_else(|| Error::Integrability("condensed wealth with a divergent redistribution rate".into()))?;
        t += chi_inf * c * w_tot;
    }
    if !t.is_finite() {
        return Err(Error::Integrability(format!("redistribution total is {t}")));
    }
    Ok(Potentials { l_inf: l[k - 1], b_inf: b[k - 1], a, l, b, t })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::RedistributionPolicy;

    #[test]
    fn three_agent_example() {
        let d = WealthDistribution::from_ensemble(&[1.0, 2.0, 3.0], 0.0).unwrap();
        let p = compute_potentials(&d, &RedistributionPolicy::flat(0.1)).unwrap();
        // node 2 holds wealth 2
        assert!((p.a[2] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p.l[2] - 0.5).abs() < 1e-15);
        assert!((p.b[2] - 2.5 / 3.0).abs() < 1e-15);
        assert!((p.t - 0.6).abs() < 1e-15);
        assert!((p.a[0] - 1.0).abs() < 1e-15);
        assert!((p.l_inf - 1.0).abs() < 1e-15);
    }

    #[test]
    fn condensate_needs_finite_limit() {
        let grid = vec![0.0, 1.0, 2.0];
        let d = WealthDistribution::from_node_masses(grid, &[0.0, 2.0, 0.0], 0.5, 2.0, 4.0, 0.0).unwrap();
        let p = compute_potentials(&d, &RedistributionPolicy::flat(0.1)).unwrap();
        assert!((p.l_inf - 0.5).abs() < 1e-15);
        assert!((p.t - (0.1 * 2.0 + 0.1 * 2.0)).abs() < 1e-15);
        let hog = RedistributionPolicy::catalogue(
            crate::policy::CatalogueFamily::HigherOrderGaussian { m: 2.0, sigma: 1.0 },
            1.0,
            0.0,
            0.1,
        )
        .unwrap();
        assert!(matches!(compute_potentials(&d, &hog), Err(Error::Integrability(_))));
    }
}
