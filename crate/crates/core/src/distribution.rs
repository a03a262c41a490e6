//! Discrete wealth distributions on a nonuniform grid.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for the agent-count and wealth invariants.
pub const INVARIANT_RTOL: f64 = 1e-9;

/// An agent is treated as condensed when its wealth exceeds this multiple of the mean.
pub const CONDENSATION_MULTIPLE: f64 = 100.0;

/// Density `P_i` at grid nodes `w_0 = -delta < w_1 < ...`, plus the condensed wealth fraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WealthDistribution {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub condensed_fraction: f64,
    pub n_agents: f64,
    pub total_wealth: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct Sidecar {
    n_agents: f64,
    total_wealth: f64,
    condensed_fraction: f64,
    lambda: f64,
}

/// Trapezoid weights: `sum_i f_i * vol_i` is the trapezoid integral of nodal values `f_i`.
pub fn trapezoid_weights(grid: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let mut vol = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let h = grid[i + 1] - grid[i];
        vol[i] += 0.5 * h;
        vol[i + 1] += 0.5 * h;
    }
    vol
}

impl WealthDistribution {
    /// Build and validate.
    pub fn new(
        grid: Vec<f64>,
        density: Vec<f64>,
        condensed_fraction: f64,
        n_agents: f64,
        total_wealth: f64,
        lambda: f64,
    ) -> Result<Self> {
        let d = WealthDistribution { grid, density, condensed_fraction, n_agents, total_wealth, lambda };
        d.validate()?;
        Ok(d)
    }

    /// Build from lumped node masses (agents per node) instead of densities.
    pub fn from_node_masses(
        grid: Vec<f64>,
        masses: &[f64],
        condensed_fraction: f64,
        n_agents: f64,
        total_wealth: f64,
        lambda: f64,
    ) -> Result<Self> {
        if grid.len() != masses.len() {
            return Err(Error::InvalidDistribution("grid and masses differ in length".into()));
        }
        let vol = trapezoid_weights(&grid);
        let density = masses.iter().zip(&vol).map(|(m, v)| m / v).collect();
        Self::new(grid, density, condensed_fraction, n_agents, total_wealth, lambda)
    }

    /// Exact representation of a finite ensemble: one node per distinct wealth
    /// (plus the floor `-delta`), each carrying its agents as lumped mass.
    pub fn from_ensemble(wealths: &[f64], lambda: f64) -> Result<Self> {
        if wealths.len() < 2 {
            return Err(Error::InvalidDistribution("need at least two agents".into()));
        }
        if wealths.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidDistribution("non-finite wealth".into()));
        }
        let n = wealths.len() as f64;
        let total: f64 = wealths.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidDistribution(format!("total wealth must be positive, got {total}")));
        }
        let delta = lambda * total / n;
        let mut sorted = wealths.to_vec();
        sorted.sort_by(f64::total_cmp);
        if sorted[0] < -delta * (1.0 + 1e-12) - 1e-300 {
            return Err(Error::BelowDebtFloor { w: sorted[0], delta });
        }
        let mut grid = vec![-delta];
        let mut masses = vec![0.0];
        for &w in &sorted {
            let last = grid.len() - 1;
            if w <= grid[last] {
                masses[last] += 1.0;
            } else {
                grid.push(w);
                masses.push(1.0);
            }
        }
        if grid.len() < 2 {
            // every agent sits on the floor; add an empty node above it
            grid.push(-delta + total.abs().max(1.0));
            masses.push(0.0);
        }
        let mut d = Self::from_node_masses(grid, &masses, 0.0, n, total, lambda)?;
        // the floor node may have absorbed rounding; keep the grid start exact
        d.grid[0] = -delta;
        Ok(d)
    }

    /// Cloud-in-cell histogram of an ensemble on a fixed grid starting at `-delta`.
    ///
    /// Agents richer than `CONDENSATION_MULTIPLE` times the mean wealth are removed
    /// from the density and their wealth is reported as the condensed fraction.
    pub fn histogram(wealths: &[f64], lambda: f64, grid: &[f64]) -> Result<Self> {
        if grid.len() < 2 {
            return Err(Error::InvalidDistribution("histogram grid needs two nodes".into()));
        }
        let n = wealths.len() as f64;
        let total: f64 = wealths.iter().sum();
        let mean = total / n;
        let threshold = CONDENSATION_MULTIPLE * mean;
        let (lo, hi) = (grid[0], grid[grid.len() - 1]);
        let mut masses = vec![0.0; grid.len()];
        let mut condensed_wealth = 0.0;
        let mut bulk = 0.0;
        for &w in wealths {
            if w > threshold {
                condensed_wealth += w;
                continue;
            }
            if !(w >= lo && w <= hi) {
                return Err(Error::Range { w, lo, hi });
            }
            let k = grid.partition_point(|&g| g <= w).clamp(1, grid.len() - 1);
            let t = (w - grid[k - 1]) / (grid[k] - grid[k - 1]);
            masses[k - 1] += 1.0 - t;
            masses[k] += t;
            bulk += 1.0;
        }
        let c = condensed_wealth / total;
        Self::from_node_masses(grid.to_vec(), &masses, c, bulk, total, lambda)
    }

    pub fn delta(&self) -> f64 {
        -self.grid[0]
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Mean wealth over all agents, condensed or not: `W / N`.
    pub fn mean(&self) -> f64 {
        self.total_wealth / self.n_agents
    }

    pub fn weights(&self) -> Vec<f64> {
        trapezoid_weights(&self.grid)
    }

    /// Agents lumped at each node.
    pub fn node_masses(&self) -> Vec<f64> {
        self.weights().iter().zip(&self.density).map(|(v, p)| v * p).collect()
    }

    /// Quadrature of the density.
    pub fn agent_count(&self) -> f64 {
        self.node_masses().iter().sum()
    }

    /// Quadrature of `P w` (excludes the condensate).
    pub fn bulk_wealth(&self) -> f64 {
        self.node_masses().iter().zip(&self.grid).map(|(m, w)| m * w).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: String| Err(Error::InvalidDistribution(s));
        if self.grid.len() < 2 || self.grid.len() != self.density.len() {
            return bad(format!(
                "grid ({}) and density ({}) must match with at least two nodes",
                self.grid.len(),
                self.density.len()
            ));
        }
        if self.grid.windows(2).any(|p| !(p[1] > p[0])) || self.grid.iter().any(|g| !g.is_finite()) {
            return bad("grid must be finite and strictly increasing".into());
        }
        if let Some(p) = self.density.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return bad(format!("density must be finite and nonnegative, found {p}"));
        }
        if !(0.0..=1.0).contains(&self.condensed_fraction) {
            return bad(format!("condensed fraction {} outside [0, 1]", self.condensed_fraction));
        }
        if !(self.total_wealth > 0.0) || !(self.n_agents >= 0.0) || !(self.lambda >= 0.0) {
            return bad("need W > 0, N >= 0, lambda >= 0".into());
        }
        let count = self.agent_count();
        if (count - self.n_agents).abs() > INVARIANT_RTOL * self.n_agents.max(1.0) {
            return bad(format!("density integrates to {count}, expected {} agents", self.n_agents));
        }
        let wealth = self.bulk_wealth() + self.condensed_fraction * self.total_wealth;
        let scale = self.total_wealth.max(self.delta().abs() * self.n_agents);
        if (wealth - self.total_wealth).abs() > INVARIANT_RTOL * scale {
            return bad(format!("wealth integrates to {wealth}, expected {}", self.total_wealth));
        }
        Ok(())
    }

    /// Linear interpolation of the density; zero outside the grid.
    pub fn density_at(&self, w: f64) -> f64 {
        let g = &self.grid;
        if w < g[0] || w > g[g.len() - 1] {
            return 0.0;
        }
        let k = g.partition_point(|&x| x <= w).clamp(1, g.len() - 1);
        let t = (w - g[k - 1]) / (g[k] - g[k - 1]);
        self.density[k - 1] * (1.0 - t) + self.density[k] * t
    }

    /// Sidecar path paired with a distribution CSV.
    pub fn sidecar_path(csv_path: &Path) -> PathBuf {
        csv_path.with_extension("json")
    }

    /// Write `w,density` CSV and the JSON sidecar next to it.
    pub fn write(&self, csv_path: &Path) -> Result<()> {
        let mut wtr = csv::Writer::from_path(csv_path)?;
        wtr.write_record(["w", "density"])?;
        for (w, p) in self.grid.iter().zip(&self.density) {
            wtr.write_record([w.to_string(), p.to_string()])?;
        }
        wtr.flush().map_err(|e| Error::io(csv_path, e))?;
        let side = Sidecar {
            n_agents: self.n_agents,
            total_wealth: self.total_wealth,
            condensed_fraction: self.condensed_fraction,
            lambda: self.lambda,
        };
        let sp = Self::sidecar_path(csv_path);
        std::fs::write(&sp, serde_json::to_string_pretty(&side)?).map_err(|e| Error::io(&sp, e))?;
        Ok(())
    }

    pub fn read(csv_path: &Path) -> Result<Self> {
        let sp = Self::sidecar_path(csv_path);
        let text = std::fs::read_to_string(&sp).map_err(|e| Error::io(&sp, e))?;
        let side: Sidecar = serde_json::from_str(&text)?;
        let mut rdr = csv::Reader::from_path(csv_path)?;
        let mut grid = Vec::new();
        let mut density = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let field = |k: usize| -> Result<f64> {
                rec.get(k)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| Error::Record { line: i + 2, reason: format!("column {k} is not a number") })
            };
            grid.push(field(0)?);
            density.push(field(1)?);
        }
        Self::new(grid, density, side.condensed_fraction, side.n_agents, side.total_wealth, side.lambda)
    }
}
