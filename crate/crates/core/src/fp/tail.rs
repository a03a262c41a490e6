//! Quadratic fit of the log-density over the top resolved decade.

use serde::{Deserialize, Serialize};

use crate::distribution::WealthDistribution;
use crate::error::{Error, Result};

/// Smallest density, relative to the peak, still treated as resolved.
pub(crate) const RESOLVED: f64 = 1e-250;

/// `-ln P(x) ~ c0 + c1 x + c2 x^2` on `[x_lo, x_hi]`, with `x = w + delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub x_lo: f64,
    pub x_hi: f64,
    pub coeffs: [f64; 3],
    pub points: usize,
}

impl TailFit {
    pub fn quadratic(&self) -> f64 {
        self.coeffs[2]
    }
}

/// Index range of the top resolved decade: nodes with positive density above
/// `RESOLVED * peak`, skipping the two nodes next to the absorbing boundary.
pub fn top_decade(dist: &WealthDistribution) -> Option<(usize, usize)> {
    let p = &dist.density;
    let peak = p.iter().cloned().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return None;
    }
    let n = p.len();
    let cap = n.saturating_sub(3);
    let hi = (0..=cap).rev().find(|&i| p[i] > RESOLVED * peak)?;
    let delta = dist.delta();
    let x_hi = dist.grid[hi] + delta;
    let lo = dist.grid.partition_point(|w| w + delta < 0.1 * x_hi);
    if hi < lo + 3 {
        return None;
    }
    Some((lo, hi))
}

pub fn tail_fit(dist: &WealthDistribution) -> Result<TailFit> {
    let (lo, hi) = top_decade(dist).ok_or_else(|| Error::Domain("too few resolved tail nodes to fit".into()))?;
    let delta = dist.delta();
    let scale = dist.grid[hi] + delta;
    // normal equations in u = x / scale
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    let mut points = 0;
    for i in lo..=hi {
        if !(dist.density[i] > 0.0) {
            continue;
        }
        let u = (dist.grid[i] + delta) / scale;
        let y = -dist.density[i].ln();
        let row = [1.0, u, u * u];
        for r in 0..3 {
            atb[r] += row[r] * y;
            for c in 0..3 {
                ata[r][c] += row[r] * row[c];
            }
        }
        points += 1;
    }
    if points < 3 {
        return Err(Error::Domain("too few positive tail nodes to fit".into()));
    }
    let sol = solve3(ata, atb).ok_or_else(|| Error::Domain("singular tail fit".into()))?;
    Ok(TailFit {
        x_lo: dist.grid[lo] + delta,
        x_hi: scale,
        coeffs: [sol[0], sol[1] / scale, sol[2] / (scale * scale)],
        points,
    })
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..3 {
            let f = a[r][col] / a[col][col];
            for c in col..3 {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..3).rev() {
        let s: f64 = (r + 1..3).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_a_gaussian() {
        let grid: Vec<f64> = (0..400).map(|i| i as f64 * 0.25).collect();
        let density: Vec<f64> = grid.iter().map(|x| (-(0.3 * x * x + 0.5 * x)).exp()).collect();
        let vol = crate::distribution::trapezoid_weights(&grid);
        let n: f64 = density.iter().zip(&vol).map(|(p, v)| p * v).sum();
        let w: f64 = density.iter().zip(&vol).zip(&grid).map(|((p, v), x)| p * v * x).sum();
        let d = WealthDistribution::new(grid, density, 0.0, n, w, 0.0).unwrap();
        let fit = tail_fit(&d).unwrap();
        assert!((fit.quadratic() - 0.3).abs() < 1e-9, "{fit:?}");
        assert!((fit.coeffs[1] - 0.5).abs() < 1e-7);
    }
}
