//! Large-wealth analysis: tail exponents, inverse redistribution, crossover wealth and
//! numeric checks of the asymptotic assumptions.

mod checks;
mod inverse;
pub mod quad;
mod tail;

use serde::{Deserialize, Serialize};

use crate::distribution::WealthDistribution;
use crate::error::{Error, Result};
use crate::policy::RateFunction;
use crate::potentials::compute_potentials;

pub use checks::{
    check_assumptions, incomplete_moment_ratio, probe_ladder, validate_reduction, AssumptionReport, ConditionReport,
    Limit, ReductionReport, Verdict,
};
pub use inverse::{catalogue, invert_redistribution, Catalogued, InvertedPolicy};
pub use tail::{TailFamily, TailFunction};

/// Complete moments of a steady state in the shifted frame `x = w + delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentInputs {
    /// Half the mean square shifted wealth.
    pub b_inf: f64,
    /// Bulk share of shifted wealth (1 without a condensate).
    pub l_inf: f64,
    pub t_over_n: f64,
    pub mu_bar: f64,
    pub delta: f64,
    pub zeta: f64,
}

impl MomentInputs {
    /// Moments with the constant `D = 0`.
    pub fn new(b_inf: f64, l_inf: f64, mu_bar: f64, delta: f64, zeta: f64) -> Result<Self> {
        let m = MomentInputs { b_inf, l_inf, t_over_n: 2.0 * zeta * b_inf / mu_bar, mu_bar, delta, zeta };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.b_inf > 0.0
            && self.mu_bar > 0.0
            && (0.0..=1.0).contains(&self.l_inf)
            && self.delta >= 0.0
            && self.zeta >= 0.0
            && [self.b_inf, self.t_over_n, self.mu_bar, self.delta, self.zeta].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid moment inputs {self:?}")))
        }
    }

    /// Moments of `dist` under `policy` and advantage `zeta`.
    pub fn from_distribution(dist: &WealthDistribution, policy: &dyn RateFunction, zeta: f64) -> Result<Self> {
        let pot = compute_potentials(dist, policy)?;
        let delta = dist.delta();
        let n = dist.n_agents;
        let wbar = dist.total_wealth + n * delta;
        let (mut sx, mut sxx) = (0.0, 0.0);
        for (m, w) in dist.node_masses().iter().zip(&dist.grid) {
            let x = w + delta;
            sx += m * x;
            sxx += 0.5 * m * x * x;
        }
        let m = MomentInputs {
            b_inf: sxx / n,
            l_inf: (sx / wbar).min(1.0),
            t_over_n: pot.t / n,
            mu_bar: wbar / n,
            delta,
            zeta,
        };
        m.validate()?;
        Ok(m)
    }

    /// `D = T/N - 2 zeta B_inf / mu_bar`, the coefficient of the `1/w` redistribution term.
    pub fn d_constant(&self) -> f64 {
        self.t_over_n - 2.0 * self.zeta * self.b_inf / self.mu_bar
    }

    /// Same moments with `T/N` chosen so that `d_constant() == d`.
    pub fn with_d(mut self, d: f64) -> Self {
        self.t_over_n = d + 2.0 * self.zeta * self.b_inf / self.mu_bar;
        self
    }

    /// `zeta (2 L_inf - 1)`, the constant part of any critical policy.
    pub fn critical_rate(&self) -> f64 {
        self.zeta * (2.0 * self.l_inf - 1.0)
    }
}

/// Large-wealth exponent `f(w)` with `P ~ e^{-f}` induced by `policy`, with the
/// integration constant fixed by starting at the debt floor.
pub fn forward_tail(policy: &dyn RateFunction, moments: &MomentInputs, w: f64) -> Result<f64> {
    moments.validate()?;
    if let Some(chi) = policy.constant_rate() {
        let x = w + moments.delta;
        if x < 0.0 {
            return Err(Error::BelowDebtFloor { w, delta: moments.delta });
        }
        let k = chi - moments.critical_rate();
        return Ok((0.5 * k * x * x - moments.d_constant() * x) / moments.b_inf);
    }
    forward_tail_from(policy, moments, -moments.delta, w)
}

/// `f(w) - f(w0)` by adaptive quadrature of `f' = [(chi - zeta (2 L_inf - 1))(w + delta) - D] / B_inf`.
pub fn forward_tail_from(policy: &dyn RateFunction, moments: &MomentInputs, w0: f64, w: f64) -> Result<f64> {
    moments.validate()?;
    if !(w0 >= -moments.delta) {
        return Err(Error::BelowDebtFloor { w: w0, delta: moments.delta });
    }
    if !(w >= w0) {
        return Err(Error::Domain(format!("forward tail needs w >= w0, got {w} < {w0}")));
    }
    let (c0, d, delta) = (moments.critical_rate(), moments.d_constant(), moments.delta);
    let failure = std::sync::Mutex::new(None);
    let integrand = |s: f64| match policy.rate(s) {
        Ok(chi) => (chi - c0) * (s + delta) - d,
        Err(e) => {
            failure.lock().expect("poisoned").get_or_insert(e);
            f64::NAN
        }
    };
    let mut cuts = vec![w0];
    cuts.extend(policy.breakpoints().into_iter().filter(|&b| b > w0 && b < w));
    cuts.push(w);
    let mut total = 0.0;
    for pair in cuts.windows(2) {
        let q = quad::integrate(integrand, pair[0], pair[1], quad::QUAD_RTOL);
        if let Some(e) = failure.lock().expect("poisoned").take() {
            return Err(e);
        }
        total += q?.value;
    }
    Ok(total / moments.b_inf)
}

/// Default search bracket of `crossover_wealth`.
pub const CROSSOVER_BRACKET: (f64, f64) = (1e-6, 1e15);

/// Largest root `w_eps` of `g'(w) = eps w` inside `bracket`, found on a geometric
/// ladder and refined by bisection.
pub fn crossover_wealth(g_prime: impl Fn(f64) -> f64, eps: f64, bracket: (f64, f64)) -> Result<f64> {
    let (lo, hi) = bracket;
    if eps == 0.0 || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!("eps must be finite and nonzero, got {eps}")));
    }
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidParameter(format!("bad bracket [{lo}, {hi}]")));
    }
    let h = |w: f64| g_prime(w) - eps * w;
    let ratio = 1.01f64;
    let mut b = hi;
    let mut hb = h(b);
    while b > lo {
        let a = (b / ratio).max(lo);
        let ha = h(a);
        if ha.is_finite() && hb.is_finite() && (ha == 0.0 || ha.signum() != hb.signum()) {
            if hb == 0.0 {
                return Ok(b);
            }
            return Ok(bisect(&h, a, b, ha));
        }
        b = a;
        hb = ha;
    }
    Err(Error::NoCrossover(format!("g'(w) - {eps} w keeps one sign on [{lo}, {hi}]")))
}

fn bisect(h: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut ha: f64) -> f64 {
    if ha == 0.0 {
        return a;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let hm = h(m);
        if hm == 0.0 {
            return m;
        }
        if hm.signum() == ha.signum() {
            a = m;
            ha = hm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// `N A(w)`: the expected number of bulk agents richer than `w`.
pub fn agents_above(dist: &WealthDistribution, w: f64) -> f64 {
    dist.node_masses().iter().zip(&dist.grid).filter(|(_, &g)| g > w).map(|(m, _)| m).sum()
}

/// True when fewer than one agent is expected above `w_eps`.
pub fn crossover_unpopulated(dist: &WealthDistribution, w_eps: f64) -> bool {
    agents_above(dist, w_eps) < 1.0
}
