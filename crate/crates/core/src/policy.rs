//! Redistribution policies: the rate `chi(w)` an agent of wealth `w` pays per transaction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Anything that can act as a redistribution rate `chi(w)`.
pub trait RateFunction: Send + Sync {
    fn rate(&self, w: f64) -> Result<f64>;

    /// `lim chi(w)` as `w -> inf`, or `None` when the rate diverges.
    fn asymptotic_rate(&self) -> Option<f64>;

    /// The rate when it does not depend on wealth.
    fn constant_rate(&self) -> Option<f64> {
        None
    }

    /// Wealths where the rate has a kink; quadratures split there.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Closed-form tail families with a known asymptotic redistribution rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CatalogueFamily {
    Exponential,
    Lognormal { sigma: f64 },
    Pareto { alpha: f64 },
    InverseGamma { alpha: f64, beta: f64 },
    Gaussian { sigma: f64 },
    HigherOrderGaussian { m: f64, sigma: f64 },
}

impl CatalogueFamily {
    pub fn name(&self) -> &'static str {
        match self {
            CatalogueFamily::Exponential => "exponential",
            CatalogueFamily::Lognormal { .. } => "lognormal",
            CatalogueFamily::Pareto { .. } => "pareto",
            CatalogueFamily::InverseGamma { .. } => "inverse_gamma",
            CatalogueFamily::Gaussian { .. } => "gaussian",
            CatalogueFamily::HigherOrderGaussian { .. } => "higher_order_gaussian",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidParameter(what));
        match *self {
            CatalogueFamily::Exponential => Ok(()),
            CatalogueFamily::Lognormal { sigma } | CatalogueFamily::Gaussian { sigma } => {
                if sigma > 0.0 && sigma.is_finite() {
                    Ok(())
                } else {
                    bad(format!("sigma must be > 0, got {sigma}"))
                }
            }
            CatalogueFamily::Pareto { alpha } => {
                if alpha > 0.0 && alpha.is_finite() {
                    Ok(())
                } else {
                    bad(format!("alpha must be > 0, got {alpha}"))
                }
            }
            CatalogueFamily::InverseGamma { alpha, beta } => {
                if alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite() {
                    Ok(())
                } else {
                    bad(format!("alpha and beta must be > 0, got {alpha}, {beta}"))
                }
            }
            CatalogueFamily::HigherOrderGaussian { m, sigma } => {
                if !(m > 1.0 && m.is_finite()) {
                    bad(format!("higher-order Gaussian needs m > 1, got {m}"))
                } else if !(sigma > 0.0 && sigma.is_finite()) {
                    bad(format!("sigma must be > 0, got {sigma}"))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Whether a tail of this family is reachable with `chi -> zeta`.
    pub fn is_critical(&self) -> bool {
        !matches!(self, CatalogueFamily::Gaussian { .. } | CatalogueFamily::HigherOrderGaussian { .. })
    }
}

/// Redistribution policy `chi(w)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RedistributionPolicy {
    Flat {
        chi: f64,
    },
    /// Asymptotic catalogue form, held constant at `chi(w_min)` below `w_min`.
    Catalogue {
        family: CatalogueFamily,
        b_inf: f64,
        d: f64,
        zeta: f64,
        w_min: f64,
    },
    /// Linear between knots, constant beyond either end.
    PiecewiseLinear {
        knots: Vec<(f64, f64)>,
    },
    /// Linear between samples, constant above the last sample, undefined below the first.
    Sampled {
        grid: Vec<f64>,
        rates: Vec<f64>,
    },
}

impl RedistributionPolicy {
    pub fn flat(chi: f64) -> Self {
        RedistributionPolicy::Flat { chi }
    }

    pub fn catalogue(family: CatalogueFamily, b_inf: f64, d: f64, zeta: f64) -> Result<Self> {
        family.validate()?;
        if !(b_inf > 0.0 && b_inf.is_finite()) {
            return Err(Error::InvalidParameter(format!("B_inf must be > 0, got {b_inf}")));
        }
        if !d.is_finite() || !(zeta >= 0.0 && zeta.is_finite()) {
            return Err(Error::InvalidParameter(format!("bad D = {d} or zeta = {zeta}")));
        }
        Ok(RedistributionPolicy::Catalogue { family, b_inf, d, zeta, w_min: 1.0 })
    }

    pub fn piecewise(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidParameter("piecewise policy needs knots".into()));
        }
        check_increasing(knots.iter().map(|k| k.0))?;
        if knots.iter().any(|k| !k.1.is_finite()) {
            return Err(Error::InvalidParameter("non-finite rate in knots".into()));
        }
        Ok(RedistributionPolicy::PiecewiseLinear { knots })
    }

    pub fn sampled(grid: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        if grid.is_empty() || grid.len() != rates.len() {
            return Err(Error::InvalidParameter(format!(
                "sampled policy needs matching non-empty grid and rates ({} vs {})",
                grid.len(),
                rates.len()
            )));
        }
        check_increasing(grid.iter().copied())?;
        if rates.iter().any(|r| !r.is_finite()) {
            return Err(Error::InvalidParameter("non-finite sampled rate".into()));
        }
        Ok(RedistributionPolicy::Sampled { grid, rates })
    }

    /// Flat rate when the policy is constant.
    pub fn flat_rate(&self) -> Option<f64> {
        match *self {
            RedistributionPolicy::Flat { chi } => Some(chi),
            _ => None,
        }
    }

    /// Read a sampled policy from a `w,chi` CSV.
    pub fn read_sampled_csv(path: &std::path::Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let mut grid = Vec::new();
        let mut rates = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |k: usize| -> Result<f64> {
                rec.get(k)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Record { line: i + 2, reason: format!("bad number in column {k}") })
            };
            grid.push(parse(0)?);
            rates.push(parse(1)?);
        }
        Self::sampled(grid, rates)
    }

    /// Write a `w,chi` CSV for any rate function on the given grid.
    pub fn write_sampled_csv(path: &std::path::Path, grid: &[f64], rate: &dyn RateFunction) -> Result<()> {
        let mut wtr = csv::Writer::from_path(path)?;
        wtr.write_record(["w", "chi"])?;
        for &w in grid {
            wtr.write_record([w.to_string(), rate.rate(w)?.to_string()])?;
        }
        wtr.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

fn check_increasing(xs: impl Iterator<Item = f64>) -> Result<()> {
    let mut prev = f64::NEG_INFINITY;
    for x in xs {
        if !x.is_finite() || x <= prev {
            return Err(Error::InvalidParameter("knots must be finite and strictly increasing".into()));
        }
        prev = x;
    }
    Ok(())
}

/// Catalogue rate at `w > 0`; the forms come from the inverse relation
/// `chi = zeta + D / w + B_inf f'(w) / w` for each family's `f`.
pub(crate) fn catalogue_rate(family: &CatalogueFamily, b_inf: f64, d: f64, zeta: f64, w: f64) -> f64 {
    match *family {
        CatalogueFamily::Exponential => zeta,
        CatalogueFamily::Lognormal { sigma } => zeta + d / w + 2.0 * b_inf / (sigma * sigma) * w.ln() / (w * w),
        CatalogueFamily::Pareto { alpha } => zeta + d / w + (alpha + 1.0) * b_inf / (w * w),
        CatalogueFamily::InverseGamma { alpha, beta } => {
            zeta + d / w + (alpha + 1.0) * b_inf / (w * w) - beta * b_inf / (w * w * w)
        }
        CatalogueFamily::Gaussian { sigma } => zeta + d / w + 2.0 * b_inf / (sigma * sigma),
        CatalogueFamily::HigherOrderGaussian { m, sigma } => {
            2.0 * m * b_inf / sigma.powf(2.0 * m) * w.powf(2.0 * m - 2.0)
        }
    }
}

fn interp(xs: impl Fn(usize) -> f64, ys: impl Fn(usize) -> f64, n: usize, w: f64) -> f64 {
    // index of the first knot strictly greater than w
    let (mut lo, mut hi) = (0usize, n);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if xs(mid) <= w {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    if lo == 0 {
        return ys(0);
    }
    if lo == n {
        return ys(n - 1);
    }
    let (x0, x1) = (xs(lo - 1), xs(lo));
    let t = (w - x0) / (x1 - x0);
    ys(lo - 1) + t * (ys(lo) - ys(lo - 1))
}

impl RateFunction for RedistributionPolicy {
    fn rate(&self, w: f64) -> Result<f64> {
        if !w.is_finite() {
            return Err(Error::Domain(format!("non-finite wealth {w}")));
        }
        match self {
            RedistributionPolicy::Flat { chi } => Ok(*chi),
            RedistributionPolicy::Catalogue { family, b_inf, d, zeta, w_min } => {
                Ok(catalogue_rate(family, *b_inf, *d, *zeta, w.max(*w_min)))
            }
            RedistributionPolicy::PiecewiseLinear { knots } => {
                Ok(interp(|i| knots[i].0, |i| knots[i].1, knots.len(), w))
            }
            RedistributionPolicy::Sampled { grid, rates } => {
                if w < grid[0] {
                    return Err(Error::Extrapolation { w, lo: grid[0], hi: grid[grid.len() - 1] });
                }
                Ok(interp(|i| grid[i], |i| rates[i], grid.len(), w))
            }
        }
    }

    fn asymptotic_rate(&self) -> Option<f64> {
        match self {
            RedistributionPolicy::Flat { chi } => Some(*chi),
            RedistributionPolicy::Catalogue { family, b_inf, zeta, .. } => match *family {
                CatalogueFamily::Gaussian { sigma } => Some(zeta + 2.0 * b_inf / (sigma * sigma)),
                CatalogueFamily::HigherOrderGaussian { .. } => None,
                _ => Some(*zeta),
            },
            RedistributionPolicy::PiecewiseLinear { knots } => knots.last().map(|k| k.1),
            RedistributionPolicy::Sampled { rates, .. } => rates.last().copied(),
        }
    }

    fn constant_rate(&self) -> Option<f64> {
        self.flat_rate()
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            RedistributionPolicy::Flat { .. } => Vec::new(),
            RedistributionPolicy::Catalogue { w_min, .. } => vec![*w_min],
            RedistributionPolicy::PiecewiseLinear { knots } => knots.iter().map(|k| k.0).collect(),
            RedistributionPolicy::Sampled { grid, .. } => grid.clone(),
        }
    }
}

/// Evaluate `chi(w)` for a society with debt floor `-delta`.
pub fn eval_policy(policy: &dyn RateFunction, w: f64, delta: f64) -> Result<f64> {
    if w < -delta {
        return Err(Error::BelowDebtFloor { w, delta });
    }
    policy.rate(w)
}
