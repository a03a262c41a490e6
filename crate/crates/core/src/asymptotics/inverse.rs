//! Redistribution functions that produce a prescribed tail.

use serde::{Deserialize, Serialize};

use super::tail::{TailFamily, TailFunction};
use super::MomentInputs;
use crate::error::{Error, Result};
use crate::policy::{CatalogueFamily, RateFunction, RedistributionPolicy};

/// `chi(w) = zeta (2 L_inf - 1) + iota(w)` with
/// `iota(w) = (B_inf f'(w) + D) / (w + delta)`.
#[derive(Debug, Clone)]
pub struct InvertedPolicy {
    pub tail: TailFunction,
    pub moments: MomentInputs,
}

pub fn invert_redistribution(tail: &TailFunction, moments: &MomentInputs) -> Result<InvertedPolicy> {
    moments.validate()?;
    Ok(InvertedPolicy { tail: tail.clone(), moments: *moments })
}

impl InvertedPolicy {
    /// The wealth-dependent part of the rate.
    pub fn iota(&self, w: f64) -> Result<f64> {
        let fp = self.tail.f_prime(w)?;
        let m = &self.moments;
        Ok((m.b_inf * fp + m.d_constant()) / (w + m.delta))
    }

    pub fn chi(&self, w: f64) -> Result<f64> {
        Ok(self.moments.critical_rate() + self.iota(w)?)
    }

    /// Tabulate `chi` on `grid` (all points above the tail threshold).
    pub fn to_sampled(&self, grid: &[f64]) -> Result<RedistributionPolicy> {
        let rates = grid.iter().map(|&w| self.chi(w)).collect::<Result<Vec<_>>>()?;
        RedistributionPolicy::sampled(grid.to_vec(), rates)
    }

    /// `to_sampled` on `points` geometrically spaced wealths in `[lo, hi]`.
    pub fn to_sampled_geometric(&self, lo: f64, hi: f64, points: usize) -> Result<RedistributionPolicy> {
        if !(lo > 0.0 && hi > lo) || points < 2 {
            return Err(Error::InvalidParameter(format!(
                "geometric grid needs 0 < lo < hi and >= 2 points, got [{lo}, {hi}] x {points}"
            )));
        }
        let r = (hi / lo).ln() / (points - 1) as f64;
        let mut grid: Vec<f64> = (0..points).map(|i| lo * (r * i as f64).exp()).collect();
        grid[points - 1] = hi;
        self.to_sampled(&grid)
    }
}

impl RateFunction for InvertedPolicy {
    fn rate(&self, w: f64) -> Result<f64> {
        self.chi(w)
    }

    fn asymptotic_rate(&self) -> Option<f64> {
        let c0 = self.moments.critical_rate();
        let (p, q) = self.tail.power_log()?;
        if p < 2.0 || (p == 2.0 && q < 0.0) {
            Some(c0)
        } else if p == 2.0 && q == 0.0 {
            // f'/w tends to f''
            let w = 1e12 * self.tail.threshold().max(1.0);
            Some(c0 + self.moments.b_inf * self.tail.eval_unchecked(w)[2])
        } else {
            None
        }
    }
}

/// A catalogue policy and whether it is critical (`lim chi = zeta (2 L_inf - 1)`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalogued {
    pub policy: RedistributionPolicy,
    pub critical: bool,
    /// `lim chi(w)`; `None` when the rate diverges.
    pub limit: Option<f64>,
}

/// Closed-form redistribution for a named tail family.
pub fn catalogue(family: CatalogueFamily, moments: &MomentInputs) -> Result<Catalogued> {
    family.validate()?;
    moments.validate()?;
    let c0 = moments.critical_rate();
    let policy = match family {
        CatalogueFamily::Exponential => RedistributionPolicy::flat(c0),
        _ => RedistributionPolicy::catalogue(family, moments.b_inf, moments.d_constant(), c0)?,
    };
    let limit = policy.asymptotic_rate();
    Ok(Catalogued { critical: family.is_critical(), limit, policy })
}

impl CatalogueFamily {
    /// The tail exponent this catalogue row was built from. Exponential tails need a
    /// rate, which the catalogue row does not carry.
    pub fn tail(&self, exponential_rate: f64) -> Result<TailFunction> {
        TailFunction::family(match *self {
            CatalogueFamily::Exponential => TailFamily::Exponential { rate: exponential_rate },
            CatalogueFamily::Lognormal { sigma } => TailFamily::Lognormal { sigma },
            CatalogueFamily::Pareto { alpha } => TailFamily::Pareto { alpha },
            CatalogueFamily::InverseGamma { alpha, beta } => TailFamily::InverseGamma { alpha, beta },
            CatalogueFamily::Gaussian { sigma } => TailFamily::Gaussian { sigma },
            CatalogueFamily::HigherOrderGaussian { m, sigma } => TailFamily::HigherOrderGaussian { m, sigma },
        })
    }
}
