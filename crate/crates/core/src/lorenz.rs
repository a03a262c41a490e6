//! Lorenz curves and the Gini coefficient.

use std::path::Path;

use crate::distribution::WealthDistribution;
use crate::error::{Error, Result};

/// Cumulative `(F, L)` points of weighted wealth records, poorest first.
///
/// Each record is `(wealth, weight)`; the origin is not included.
pub fn weighted_points(records: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut r = records.to_vec();
    r.sort_by(|x, y| x.0.total_cmp(&y.0));
    let total_weight: f64 = r.iter().map(|x| x.1).sum();
    let total_wealth: f64 = r.iter().map(|x| x.0 * x.1).sum();
    let (mut f, mut l) = (0.0, 0.0);
    let mut out = Vec::with_capacity(r.len());
    for (w, q) in r {
        f += q;
        l += w * q;
        out.push((f / total_weight, l / total_wealth));
    }
    if let Some(last) = out.last_mut() {
        *last = (1.0, 1.0);
    }
    out
}

/// Per-agent Lorenz curve of an ensemble, starting at the origin.
pub fn ensemble_lorenz(wealths: &[f64]) -> Vec<(f64, f64)> {
    let rec: Vec<(f64, f64)> = wealths.iter().map(|&w| (w, 1.0)).collect();
    let mut out = vec![(0.0, 0.0)];
    out.extend(weighted_points(&rec));
    out
}

/// Lorenz curve of a distribution from `(0, 0)` to `(1, 1 - c)`.
///
/// The condensate holds wealth but no agents, so the curve stops short of `(1, 1)`.
pub fn lorenz_curve(dist: &WealthDistribution) -> Vec<(f64, f64)> {
    let m = dist.node_masses();
    let total: f64 = m.iter().sum();
    let mut out = vec![(0.0, 0.0)];
    let (mut f, mut l) = (0.0, 0.0);
    for (mi, w) in m.iter().zip(&dist.grid) {
        if *mi <= 0.0 {
            continue;
        }
        f += mi;
        l += mi * w;
        out.push((f / total, l / dist.total_wealth));
    }
    let end = (1.0, 1.0 - dist.condensed_fraction);
    if out.len() == 1 {
        out.push(end);
    } else {
        *out.last_mut().unwrap() = end;
    }
    out
}

/// `1 - 2 * area` under a curve by the trapezoid rule on its own points.
pub fn gini_from_points(points: &[(f64, f64)]) -> f64 {
    let area: f64 = points.windows(2).map(|p| 0.5 * (p[1].0 - p[0].0) * (p[1].1 + p[0].1)).sum();
    1.0 - 2.0 * area
}

pub fn gini(dist: &WealthDistribution) -> f64 {
    gini_from_points(&lorenz_curve(dist))
}

/// Write an `F,L` CSV.
pub fn write_lorenz_csv(path: &Path, points: &[(f64, f64)]) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(["F", "L"])?;
    for (f, l) in points {
        wtr.write_record([f.to_string(), l.to_string()])?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
