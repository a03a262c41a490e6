//! Grid solver for the nonlocal Fokker–Planck equation of the wealth density.
//!
//! The density is evolved in shifted wealth `x = w + delta` with a conservative
//! finite-volume flux, a reflecting wall at the debt floor and an absorbing upper
//! boundary whose outflow feeds the condensed (oligarch) fraction.

mod operator;
mod tail;

pub use operator::FluxScheme;
pub use tail::{tail_fit, top_decade, TailFit};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::distribution::WealthDistribution;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::model::ModelParams;
use crate::policy::RateFunction;
use operator::{assemble, cfl_bound, fluxes, solve_tridiagonal, Faces, Frame};

/// Allowed mass drift per step before renormalization, relative to `N`.
const MASS_DRIFT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeScheme {
    /// Forward Euler; `dt` must respect the CFL bound.
    Explicit,
    /// Backward Euler in the flux with potentials lagged one step.
    #[default]
    SemiImplicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub grid: GridSpec,
    pub dt: f64,
    pub max_steps: u64,
    /// Stop when relative L1 change per unit time and the residual both drop below this.
    pub steady_tol: f64,
    /// Also require the largest relative density change per unit time over resolved
    /// nodes (density above `1e-250` of the peak) to drop below this; infinity disables it.
    pub tail_tol: f64,
    pub scheme: TimeScheme,
    pub flux: FluxScheme,
    /// Fraction of the CFL bound the explicit scheme may use.
    pub cfl_safety: f64,
    /// Step growth factor per step for the semi-implicit scheme, capped at `dt_max`.
    pub dt_growth: f64,
    pub dt_max: f64,
    /// Condensed fraction of the default initial condition.
    pub c_init: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            grid: GridSpec::default(),
            dt: 0.05,
            max_steps: 200_000,
            steady_tol: 1e-7,
            tail_tol: 1e-6,
            scheme: TimeScheme::SemiImplicit,
            flux: FluxScheme::ExponentialFitting,
            cfl_safety: 0.4,
            dt_growth: 1.05,
            dt_max: 100.0,
            c_init: 0.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        let ok = self.dt > 0.0
            && self.dt.is_finite()
            && self.max_steps > 0
            && self.steady_tol > 0.0
            && self.tail_tol > 0.0
            && self.cfl_safety > 0.0
            && self.dt_growth >= 1.0
            && self.dt_max >= self.dt
            && (0.0..1.0).contains(&self.c_init);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid solver configuration {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SteadyStateReport {
    pub distribution: WealthDistribution,
    /// Grid-weighted L1 norm of the zero-flux defect.
    pub residual: f64,
    /// Wealth absorbed at the upper boundary over the run, as a fraction of `W`.
    pub condensed_flux_total: f64,
    pub steps: u64,
    pub converged: bool,
    /// Model time reached.
    pub time: f64,
    /// Relative L1 change per unit time at the last step.
    pub change_rate: f64,
}

/// Scalar part of a steady-state report, as written next to the distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub residual: f64,
    pub condensed_fraction: f64,
    pub condensed_flux_total: f64,
    pub steps: u64,
    pub converged: bool,
    pub time: f64,
    pub change_rate: f64,
}

impl SteadyStateReport {
    pub fn summary(&self) -> ReportSummary {
        ReportSummary {
            residual: self.residual,
            condensed_fraction: self.distribution.condensed_fraction,
            condensed_flux_total: self.condensed_flux_total,
            steps: self.steps,
            converged: self.converged,
            time: self.time,
            change_rate: self.change_rate,
        }
    }

    /// Write the distribution CSV (with sidecar) and a JSON report.
    pub fn write(&self, csv_path: &Path, report_path: &Path) -> Result<()> {
        self.distribution.write(csv_path)?;
        let text = serde_json::to_string_pretty(&self.summary())?;
        std::fs::write(report_path, text).map_err(|e| Error::io(report_path, e))
    }
}

/// Exact solution of `dc/dt = c (a - b c)` over one step.
fn logistic(c: f64, a: f64, b: f64, dt: f64) -> f64 {
    if c <= 0.0 {
        return 0.0;
    }
    if (a * dt).abs() < 1e-12 {
        return c / (1.0 + b * c * dt);
    }
    let e = (a * dt).exp();
    if !e.is_finite() {
        return a / b;
    }
    a * c * e / (a + b * c * (e - 1.0))
}

/// Reweight masses by `exp(kappa x)` so their mean matches `target`, keeping their sum.
fn tilt_to_mean(x: &[f64], masses: &mut [f64], target: f64) -> Result<()> {
    let total: f64 = masses.iter().sum();
    let mean0: f64 = masses.iter().zip(x).map(|(m, x)| m * x).sum::<f64>() / total;
    if (mean0 - target).abs() <= 1e-15 * target.abs().max(1.0) {
        return Ok(());
    }
    let mut kappa = 0.0;
    let mut w = masses.to_vec();
    for _ in 0..100 {
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for (i, m) in masses.iter().enumerate() {
            let u = m * (kappa * (x[i] - mean0)).exp();
            w[i] = u;
            s0 += u;
            s1 += u * x[i];
            s2 += u * x[i] * x[i];
        }
        let mean = s1 / s0;
        let var = (s2 / s0 - mean * mean).max(0.0);
        let g = mean - target;
        if g.abs() <= 1e-14 * target.abs().max(1.0) {
            let scale = total / s0;
            for (m, u) in masses.iter_mut().zip(&w) {
                *m = u * scale;
            }
            return Ok(());
        }
        if !(var > 0.0) || !kappa.is_finite() {
            break;
        }
        kappa -= g / var;
    }
    Err(Error::Discretization(format!("cannot reconcile bulk mean wealth {mean0} with target {target}")))
}

/// State of one solve.
struct Solver<'a> {
    frame: Frame,
    policy: &'a dyn RateFunction,
    chi_inf: Option<f64>,
    config: SolverConfig,
    masses: Vec<f64>,
    c: f64,
    absorbed_wealth: f64,
    faces: Faces,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    rhs: Vec<f64>,
    scratch: Vec<f64>,
    lambda: f64,
    wealth_grid: Vec<f64>,
}

impl<'a> Solver<'a> {
    fn new(
        params: &ModelParams,
        policy: &'a dyn RateFunction,
        config: &SolverConfig,
        dist: &WealthDistribution,
    ) -> Result<Self> {
        params.validate()?;
        config.validate()?;
        dist.validate()?;
        let delta = params.delta();
        if (dist.delta() - delta).abs() > 1e-12 * delta.max(params.mu())
            || (dist.n_agents - params.n_agents as f64).abs() > 1e-9 * dist.n_agents
            || (dist.total_wealth - params.total_wealth).abs() > 1e-12 * params.total_wealth
        {
            return Err(Error::Argument("distribution does not match the model parameters (floor, N or W)".into()));
        }
        let frame = Frame::new(params, &dist.grid);
        let mut masses = dist.node_masses();
        let last = masses.len() - 1;
        masses[last] = 0.0;
        let mut s = Solver {
            frame,
            policy,
            chi_inf: policy.asymptotic_rate(),
            config: *config,
            masses,
            c: dist.condensed_fraction,
            absorbed_wealth: 0.0,
            faces: Faces::default(),
            lower: Vec::new(),
            diag: Vec::new(),
            upper: Vec::new(),
            rhs: Vec::new(),
            scratch: Vec::new(),
            lambda: params.lambda,
            wealth_grid: dist.grid.clone(),
        };
        if s.chi_inf.is_none() {
            s.c = 0.0;
        }
        s.reconcile()?;
        Ok(s)
    }

    /// Restore exact agent count and total wealth.
    fn reconcile(&mut self) -> Result<()> {
        let f = &self.frame;
        let total: f64 = self.masses.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Discretization("density vanished".into()));
        }
        let scale = f.n / total;
        for m in &mut self.masses {
            *m *= scale;
        }
        let target = (f.wbar - self.c * f.w) / f.n;
        if !(target > 0.0) {
            return Err(Error::Infeasible(format!("condensed fraction {} leaves no wealth for the bulk", self.c)));
        }
        tilt_to_mean(&f.x, &mut self.masses, target)
    }

    fn density(&self, out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.masses.iter().zip(&self.frame.vol).map(|(m, v)| m / v));
    }

    /// Advance by `dt`; returns the relative L1 change per unit time and the largest
    /// relative change per unit time on resolved nodes.
    fn step(&mut self, dt: f64) -> Result<(f64, f64)> {
        assemble(&self.frame, &self.masses, self.c, self.policy, self.chi_inf, self.config.flux, &mut self.faces)?;
        let mut p = Vec::new();
        self.density(&mut p);
        let target = bulk_wealth_rate(&self.frame, self.c, self.chi_inf);
        self.faces.balance(&self.frame, &p, target);
        let m = self.masses.len();
        let k = m - 1; // unknowns 0..k-1, node k is held at zero
        let fc = &self.faces;
        let old = self.masses.clone();
        let absorbed;
        match self.config.scheme {
            TimeScheme::Explicit => {
                let bound = self.config.cfl_safety * cfl_bound(&self.frame, fc);
                if dt > bound {
                    return Err(Error::StepSize(format!("explicit step {dt} exceeds the stability bound {bound}")));
                }
                p[k] = 0.0;
                let flux = fluxes(fc, &p);
                for i in 0..k {
                    let inflow = if i > 0 { flux[i - 1] } else { 0.0 };
                    self.masses[i] = old[i] + dt * (inflow - flux[i]);
                }
                absorbed = dt * flux[k - 1];
            }
            TimeScheme::SemiImplicit => {
                let vol = &self.frame.vol;
                self.lower.clear();
                self.diag.clear();
                self.upper.clear();
                self.rhs.clear();
                for i in 0..k {
                    let left = if i > 0 { fc.beta[i - 1] } else { 0.0 };
                    self.diag.push(vol[i] + dt * (fc.alpha[i] + left));
                    self.lower.push(if i > 0 { -dt * fc.alpha[i - 1] } else { 0.0 });
                    self.upper.push(if i + 1 < k { -dt * fc.beta[i] } else { 0.0 });
                    self.rhs.push(old[i]);
                }
                solve_tridiagonal(&self.lower, &self.diag, &self.upper, &mut self.rhs, &mut self.scratch);
                for i in 0..k {
                    self.masses[i] = self.rhs[i] * vol[i];
                }
                absorbed = dt * fc.alpha[k - 1] * self.rhs[k - 1];
            }
        }
        self.masses[k] = 0.0;

        let peak = self.masses.iter().cloned().fold(0.0, f64::max);
        for mi in &mut self.masses {
            if *mi < 0.0 {
                if *mi < -1e-12 * peak {
                    return Err(Error::Discretization(format!(
                        "negative mass {mi} (peak {peak}); reduce dt or refine the grid"
                    )));
                }
                *mi = 0.0;
            }
        }
        let before: f64 = old.iter().sum();
        let after: f64 = self.masses.iter().sum();
        if (after + absorbed - before).abs() > MASS_DRIFT_TOL * self.frame.n {
            return Err(Error::Discretization(format!(
                "agent count drifted by {} in one step",
                after + absorbed - before
            )));
        }

        let c_old = self.c;
        let gained = absorbed.max(0.0) * self.frame.x[k];
        self.absorbed_wealth += gained;
        if let Some(chi_inf) = self.chi_inf {
            let a = self.frame.zeta - chi_inf;
            let b = self.frame.zeta * self.frame.w / self.frame.wbar;
            self.c = logistic(self.c, a, b, dt) + gained / self.frame.w;
            if self.c > 1.0 {
                return Err(Error::Infeasible(format!(
                    "condensed fraction reached {}; parameters lie outside the model's range",
                    self.c
                )));
            }
        }
        self.reconcile()?;

        let change: f64 = self.masses.iter().zip(&old).map(|(a, b)| (a - b).abs()).sum::<f64>() / self.frame.n;
        let peak = self.masses.iter().zip(&self.frame.vol).map(|(m, v)| m / v).fold(0.0, f64::max);
        let mut tail = 0.0f64;
        for ((a, b), v) in self.masses.iter().zip(&old).zip(&self.frame.vol) {
            if a / v > tail::RESOLVED * peak {
                tail = tail.max((a - b).abs() / a);
            }
        }
        Ok((change / dt + (self.c - c_old).abs() / dt, tail / dt))
    }

    fn distribution(&self) -> Result<WealthDistribution> {
        WealthDistribution::from_node_masses(
            self.wealth_grid.clone(),
            &self.masses,
            self.c,
            self.frame.n,
            self.frame.w,
            self.lambda,
        )
    }
}

/// Rate of change of bulk shifted wealth implied by the condensate's logistic growth.
fn bulk_wealth_rate(frame: &Frame, c: f64, chi_inf: Option<f64>) -> f64 {
    match chi_inf {
        Some(chi) if c > 0.0 => {
            let a = frame.zeta - chi;
            let b = frame.zeta * frame.w / frame.wbar;
            -frame.w * c * (a - b * c)
        }
        _ => 0.0,
    }
}

/// Default starting density: exponential in shifted wealth with the shifted mean,
/// truncated at the grid top and carrying condensed fraction `c_init`.
pub fn initial_condition(params: &ModelParams, grid: &GridSpec, c_init: f64) -> Result<WealthDistribution> {
    params.validate()?;
    let mu_bar = params.mu_bar();
    let wgrid = grid.wealth_nodes(mu_bar, params.delta())?;
    let frame = Frame::new(params, &wgrid);
    let mut masses: Vec<f64> = frame.x.iter().zip(&frame.vol).map(|(x, v)| (-x / mu_bar).exp() * v).collect();
    let last = masses.len() - 1;
    masses[last] = 0.0;
    let total: f64 = masses.iter().sum();
    let n = params.n_agents as f64;
    for m in &mut masses {
        *m *= n / total;
    }
    let target = (frame.wbar - c_init * frame.w) / n;
    tilt_to_mean(&frame.x, &mut masses, target)?;
    WealthDistribution::from_node_masses(wgrid, &masses, c_init, n, params.total_wealth, params.lambda)
}

/// Advance `dist` to time `t_final`.
pub fn evolve(
    dist: &WealthDistribution,
    params: &ModelParams,
    policy: &dyn RateFunction,
    config: &SolverConfig,
    t_final: f64,
) -> Result<WealthDistribution> {
    if !(t_final >= 0.0) {
        return Err(Error::InvalidParameter(format!("t_final must be >= 0, got {t_final}")));
    }
    let mut s = Solver::new(params, policy, config, dist)?;
    let mut t = 0.0;
    while t < t_final {
        let dt = config.dt.min(t_final - t);
        s.step(dt)?;
        t += dt;
        if t_final - t < 1e-12 * t_final {
            break;
        }
    }
    s.distribution()
}

/// March to a steady state.
///
/// Non-convergence within `max_steps` is reported through `converged = false`.
pub fn steady_state(
    params: &ModelParams,
    policy: &dyn RateFunction,
    config: &SolverConfig,
    initial: Option<&WealthDistribution>,
) -> Result<SteadyStateReport> {
    let start;
    let dist = match initial {
        Some(d) => d,
        None => {
            start = initial_condition(params, &config.grid, config.c_init)?;
            &start
        }
    };
    let mut s = Solver::new(params, policy, config, dist)?;
    let mut dt = config.dt;
    let mut t = 0.0;
    let mut steps = 0;
    let mut change = f64::INFINITY;
    let mut res = f64::INFINITY;
    let mut converged = false;
    while steps < config.max_steps {
        let (bulk, tail) = s.step(dt)?;
        change = bulk;
        steps += 1;
        t += dt;
        if change <= config.steady_tol && tail <= config.tail_tol {
            res = residual(&s.distribution()?, params, policy, config.flux)?;
            if res <= config.steady_tol {
                converged = true;
                break;
            }
        }
        if config.scheme == TimeScheme::SemiImplicit {
            dt = (dt * config.dt_growth).min(config.dt_max);
        }
    }
    let distribution = s.distribution()?;
    if !converged {
        res = residual(&distribution, params, policy, config.flux)?;
    }
    Ok(SteadyStateReport {
        distribution,
        residual: res,
        condensed_flux_total: s.absorbed_wealth / params.total_wealth,
        steps,
        converged,
        time: t,
        change_rate: change,
    })
}

/// Grid-weighted L1 norm of the zero-flux condition, `sum |F| h / (N mu_bar)`
/// over interior faces (the absorbing top face excluded).
pub fn residual(
    dist: &WealthDistribution,
    params: &ModelParams,
    policy: &dyn RateFunction,
    flux: FluxScheme,
) -> Result<f64> {
    let frame = Frame::new(params, &dist.grid);
    let masses = dist.node_masses();
    let mut faces = Faces::default();
    let chi_inf = policy.asymptotic_rate();
    assemble(&frame, &masses, dist.condensed_fraction, policy, chi_inf, flux, &mut faces)?;
    let target = bulk_wealth_rate(&frame, dist.condensed_fraction, chi_inf);
    faces.balance(&frame, &dist.density, target);
    let f = fluxes(&faces, &dist.density);
    let k = f.len();
    let sum: f64 = (0..k - 1).map(|i| f[i].abs() * (frame.x[i + 1] - frame.x[i])).sum();
    Ok(sum / (frame.n * frame.mu_bar))
}
