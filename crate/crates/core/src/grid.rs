//! Wealth grids: a uniform core near the debt floor joined to a geometric tail.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid in shifted wealth `x = w + delta`, with lengths in multiples of the shifted mean.
///
/// Nodes are uniform on `[0, core * mu_bar]` and then grow geometrically with a ratio
/// matched to the core spacing, so the spacing is continuous and roughly proportional
/// to `x` in the tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nodes: usize,
    pub core: f64,
    pub x_max: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { nodes: 800, core: 2.0, x_max: 1000.0 }
    }
}

/// Ratio `q > 1` with `h (q + q^2 + ... + q^n) = span`.
fn geometric_ratio(h: f64, n: usize, span: f64) -> f64 {
    let sum = |q: f64| {
        if (q - 1.0).abs() < 1e-14 {
            h * n as f64
        } else {
            h * q * (q.powi(n as i32) - 1.0) / (q - 1.0)
        }
    };
    if sum(1.0) >= span {
        return 1.0;
    }
    let (mut lo, mut hi) = (1.0, 2.0);
    while sum(hi) < span {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sum(mid) < span {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

impl GridSpec {
    pub fn new(nodes: usize, core: f64, x_max: f64) -> Result<Self> {
        let g = GridSpec { nodes, core, x_max };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes < 8 {
            return Err(Error::InvalidParameter(format!("grid needs at least 8 nodes, got {}", self.nodes)));
        }
        if !(self.core > 0.0 && self.x_max > self.core && self.x_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "grid needs 0 < core < x_max, got core = {}, x_max = {}",
                self.core, self.x_max
            )));
        }
        Ok(())
    }

    /// Shifted nodes `0 = x_0 < ... < x_{M-1} = x_max * mu_bar`.
    pub fn shifted_nodes(&self, mu_bar: f64) -> Result<Vec<f64>> {
        self.validate()?;
        let (xc, xm) = (self.core * mu_bar, self.x_max * mu_bar);
        let cells = self.nodes - 1;
        // choose the core cell count so the geometric ratio continues the core spacing
        let mismatch = |nc: usize| {
            let h = xc / nc as f64;
            geometric_ratio(h, cells - nc, xm - xc) - (1.0 + 1.0 / nc as f64)
        };
        let (mut lo, mut hi) = (1usize, cells - 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if mismatch(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let nc = if mismatch(lo).abs() < mismatch(hi).abs() { lo } else { hi };
        let h = xc / nc as f64;
        let q = geometric_ratio(h, cells - nc, xm - xc);
        let mut x = Vec::with_capacity(self.nodes);
        for i in 0..=nc {
            x.push(h * i as f64);
        }
        let mut step = h;
        for _ in 0..cells - nc {
            step *= q;
            let next = x[x.len() - 1] + step;
            x.push(next);
        }
        x[0] = 0.0;
        x[nc] = xc;
        x[cells] = xm;
        Ok(x)
    }

    /// Wealth nodes starting at the debt floor `-delta`.
    pub fn wealth_nodes(&self, mu_bar: f64, delta: f64) -> Result<Vec<f64>> {
        let mut x = self.shifted_nodes(mu_bar)?;
        for v in &mut x {
            *v -= delta;
        }
        x[0] = -delta;
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_monotone() {
        for &m in &[8usize, 50, 200, 2000] {
            let g = GridSpec::new(m, 2.0, 1000.0).unwrap();
            let x = g.shifted_nodes(1.5).unwrap();
            assert_eq!(x.len(), m);
            assert_eq!(x[0], 0.0);
            assert_eq!(x[m - 1], 1500.0);
            assert!(x.windows(2).all(|p| p[1] > p[0]));
        }
    }

    #[test]
    fn spacing_is_smooth() {
        let x = GridSpec::new(400, 2.0, 1000.0).unwrap().shifted_nodes(1.0).unwrap();
        let h: Vec<f64> = x.windows(2).map(|p| p[1] - p[0]).collect();
        let worst = h.windows(2).map(|p| p[1] / p[0]).fold(0.0f64, f64::max);
        assert!(worst < 1.2, "spacing jumps by {worst}");
    }

    #[test]
    fn wealth_grid_starts_at_floor() {
        let w = GridSpec::default().wealth_nodes(1.5, 0.5).unwrap();
        assert_eq!(w[0], -0.5);
    }
}
