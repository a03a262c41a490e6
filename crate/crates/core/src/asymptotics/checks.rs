//! Numeric checks of the large-wealth assumptions and of the potential
//! approximations on a computed steady state.

use serde::{Deserialize, Serialize};

use super::quad::{integrate_tail, QUAD_RTOL};
use super::tail::TailFunction;
use super::MomentInputs;
use crate::distribution::WealthDistribution;
use crate::error::{Error, Result};
use crate::fp::top_decade;

/// Relative slack below which consecutive ratios count as unchanged.
const TREND_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Limit {
    Positive,
    Zero,
    One,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Satisfied,
    Violated,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub name: String,
    pub limit: Limit,
    pub ratios: Vec<f64>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub tail: String,
    pub probes: Vec<f64>,
    pub conditions: Vec<ConditionReport>,
    /// `(p, q)` with `f ~ w^p ln^q w`, when known.
    pub class: Option<(f64, f64)>,
    /// Whether `(p, q)` lies in the admissible class `p > 0`, or `p = 0, q > 1`.
    pub in_class: Option<bool>,
}

impl AssumptionReport {
    pub fn satisfied(&self) -> bool {
        self.in_class != Some(false) && self.conditions.iter().all(|c| c.verdict == Verdict::Satisfied)
    }
}

/// `w0, 2 w0, 4 w0, ...` with `count` entries.
pub fn probe_ladder(w0: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| w0 * 2f64.powi(k as i32)).collect()
}

/// Verdict for a sequence that must decrease toward zero, judged on its logarithms.
fn trend_to_zero(logs: &[f64]) -> Verdict {
    if logs.iter().any(|v| v.is_nan()) || logs.len() < 2 {
        return Verdict::Inconclusive;
    }
    let tol = |v: f64| TREND_TOL * v.abs().max(1.0);
    let decreasing = logs.windows(2).all(|p| p[1] < p[0] - tol(p[0]));
    let (first, last) = (logs[0], logs[logs.len() - 1]);
    if decreasing {
        Verdict::Satisfied
    } else if last >= first - tol(first) {
        Verdict::Violated
    } else {
        Verdict::Inconclusive
    }
}

/// Evaluate `f' > 0`, `f' >> sqrt|f''|` and `e^f >> w^2 / f'^2` on increasing probes.
pub fn check_assumptions(tail: &TailFunction, probes: &[f64]) -> Result<AssumptionReport> {
    if probes.len() < 2 || probes.windows(2).any(|p| !(p[1] > p[0])) {
        return Err(Error::InvalidParameter("probes must be at least two increasing wealths".into()));
    }
    let evals = probes.iter().map(|&w| tail.eval(w)).collect::<Result<Vec<_>>>()?;

    let slopes: Vec<f64> = evals.iter().map(|e| e[1]).collect();
    let positive = if slopes.iter().all(|&v| v > 0.0) { Verdict::Satisfied } else { Verdict::Violated };

    let curvature_logs: Vec<f64> = evals.iter().map(|e| 0.5 * e[2].abs().ln() - e[1].ln()).collect();
    let growth_logs: Vec<f64> =
        probes.iter().zip(&evals).map(|(&w, e)| 2.0 * w.ln() - e[0] - 2.0 * e[1].ln()).collect();

    let conditions = vec![
        ConditionReport { name: "f' > 0".into(), limit: Limit::Positive, ratios: slopes, verdict: positive },
        ConditionReport {
            name: "sqrt|f''| / f' -> 0".into(),
            limit: Limit::Zero,
            verdict: trend_to_zero(&curvature_logs),
            ratios: curvature_logs.iter().map(|v| v.exp()).collect(),
        },
        ConditionReport {
            name: "w^2 e^-f / f'^2 -> 0".into(),
            limit: Limit::Zero,
            verdict: trend_to_zero(&growth_logs),
            ratios: growth_logs.iter().map(|v| v.exp()).collect(),
        },
    ];
    let class = tail.power_log();
    Ok(AssumptionReport {
        tail: tail.name(),
        probes: probes.to_vec(),
        conditions,
        class,
        in_class: class.map(|(p, q)| p > 0.0 || (p == 0.0 && q > 1.0)),
    })
}

/// `∫_w^∞ x^m e^{-f(x)} dx` divided by its large-wealth estimate `w^m e^{-f(w)} / f'(w)`.
pub fn incomplete_moment_ratio(tail: &TailFunction, m: f64, w: f64) -> Result<f64> {
    if !(m >= 0.0 && m.is_finite()) {
        return Err(Error::InvalidParameter(format!("moment order must be >= 0, got {m}")));
    }
    let [f0, f1, _] = tail.eval(w)?;
    if !(f1 > 0.0) {
        return Err(Error::Domain(format!("f'({w}) = {f1} is not positive")));
    }
    let integrand = |x: f64| {
        let [f, _, _] = tail.eval_unchecked(x);
        (x / w).powf(m) * (f0 - f).exp()
    };
    let q = integrate_tail(integrand, w, 1.0 / f1, QUAD_RTOL)?;
    Ok(q.value * f1)
}

/// Potential approximations evaluated over the top resolved decade of a steady state,
/// in the shifted frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub x: Vec<f64>,
    /// `(B + x^2 A / 2) / B_inf`, limit 1.
    pub b_plus: Vec<f64>,
    /// `(B - x^2 A / 2) / B_inf`, limit 1.
    pub b_minus: Vec<f64>,
    /// `x A P / B_inf`, limit 0.
    pub xap: Vec<f64>,
    /// `[2 (B - x^2 A / 2) / mu_bar + (1 - 2L) x] / [2 B_inf / mu_bar + (1 - 2 L_inf) x]`, limit 1.
    pub drift: Vec<f64>,
}

impl ReductionReport {
    /// Largest distance of any diagnostic from its limit.
    pub fn max_deviation(&self) -> f64 {
        let one = |v: &Vec<f64>| v.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
        one(&self.b_plus)
            .max(one(&self.b_minus))
            .max(one(&self.drift))
            .max(self.xap.iter().map(|r| r.abs()).fold(0.0, f64::max))
    }

    pub fn within(&self, tol: f64) -> bool {
        self.max_deviation() <= tol
    }
}

pub fn validate_reduction(dist: &WealthDistribution, moments: &MomentInputs) -> Result<ReductionReport> {
    moments.validate()?;
    let (lo, hi) = top_decade(dist).ok_or_else(|| Error::Domain("distribution has no resolved top decade".into()))?;
    let masses = dist.node_masses();
    let delta = dist.delta();
    let n = dist.n_agents;
    let wbar = moments.mu_bar * n;
    let mut rep = ReductionReport { x: vec![], b_plus: vec![], b_minus: vec![], xap: vec![], drift: vec![] };
    // running sums up to and including each node
    let (mut below, mut sx, mut sxx) = (0.0, 0.0, 0.0);
    for i in 0..=hi {
        let x = dist.grid[i] + delta;
        let a = (n - below) / n;
        below += masses[i];
        sx += masses[i] * x;
        sxx += 0.5 * masses[i] * x * x;
        if i < lo {
            continue;
        }
        let (b, l) = (sxx / n, sx / wbar);
        let half = 0.5 * x * x * a.max(0.0);
        rep.x.push(x);
        rep.b_plus.push((b + half) / moments.b_inf);
        rep.b_minus.push((b - half) / moments.b_inf);
        rep.xap.push(x * a.max(0.0) * dist.density[i] / moments.b_inf);
        let mu = moments.mu_bar;
        rep.drift.push(
            (2.0 / mu * (b - half) + (1.0 - 2.0 * l) * x)
                / (2.0 * moments.b_inf / mu + (1.0 - 2.0 * moments.l_inf) * x),
        );
    }
    Ok(rep)
}
