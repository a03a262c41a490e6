//! Fitting the flat-redistribution model to empirical Lorenz curves.

mod metric;
mod report;
pub mod search;

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fp::{steady_state, SolverConfig, SteadyStateReport};
use crate::grid::GridSpec;
use crate::lorenz::{gini_from_points, lorenz_curve, weighted_points};
use crate::model::{oligarch_fraction_awm, ModelParams};
use crate::policy::RedistributionPolicy;

pub use metric::{discrepancy, local_error, mean_local_error};
pub use report::{criticality_report, CriticalityReport, ReferenceFit, ReportRow, REFERENCE_FITS};
use search::{halton_starts, nelder_mead, SimplexOptions};

/// An empirical Lorenz curve without its origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalLorenz {
    pub points: Vec<(f64, f64)>,
    pub source: Option<String>,
    pub weighted: bool,
}

impl EmpiricalLorenz {
    pub fn new(points: Vec<(f64, f64)>, source: Option<String>, weighted: bool) -> Result<Self> {
        let e = EmpiricalLorenz { points, source, weighted };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.points;
        let Some(&last) = p.last() else {
            return Err(Error::Argument("empirical Lorenz curve has no points".into()));
        };
        if p.iter().any(|q| !(q.0.is_finite() && q.1.is_finite())) {
            return Err(Error::Argument("empirical Lorenz curve has non-finite points".into()));
        }
        if !(p[0].0 > 0.0) || p.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::Argument("empirical F values must be positive and strictly increasing".into()));
        }
        if last != (1.0, 1.0) {
            return Err(Error::Argument(format!("empirical Lorenz curve must end at (1, 1), got {last:?}")));
        }
        Ok(())
    }

    /// Curve of `(wealth, weight)` records.
    pub fn from_records(records: &[(f64, f64)]) -> Result<Self> {
        for (i, &(w, q)) in records.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::Parse(format!("record {}: wealth {w} is not finite", i + 1)));
            }
            if !(q > 0.0 && q.is_finite()) {
                return Err(Error::Record { line: i + 1, reason: format!("weight {q} must be positive") });
            }
        }
        if records.len() < 2 {
            return Err(Error::Argument(format!("need at least 2 records, got {}", records.len())));
        }
        let total: f64 = records.iter().map(|r| r.0 * r.1).sum();
        if !(total > 0.0) {
            return Err(Error::Argument(format!("total wealth must be positive, got {total}")));
        }
        let weighted = records.iter().any(|r| r.1 != records[0].1);
        EmpiricalLorenz::new(weighted_points(records), None, weighted)
    }

    /// Read an `F,L` CSV. A leading `(0, 0)` row is dropped.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let mut points = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            let num = |k: usize| -> Result<f64> {
                let s = rec.get(k).ok_or_else(|| Error::Record { line, reason: "expected 2 columns".into() })?;
                s.trim().parse().map_err(|_| Error::Parse(format!("line {line}: cannot parse {s:?}")))
            };
            points.push((num(0)?, num(1)?));
        }
        if points.first() == Some(&(0.0, 0.0)) {
            points.remove(0);
        }
        EmpiricalLorenz::new(points, Some(path.display().to_string()), false)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        crate::lorenz::write_lorenz_csv(path, &self.points)
    }

    /// Gini of the curve through the origin and the points.
    pub fn gini(&self) -> f64 {
        let mut pts = vec![(0.0, 0.0)];
        pts.extend(&self.points);
        gini_from_points(&pts)
    }
}

/// Read a `wealth,weight` survey CSV (header required).
pub fn load_survey(path: &Path) -> Result<EmpiricalLorenz> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Parse(format!("{}: missing `{name}` column", path.display())))
    };
    let (wi, qi) = (col("wealth")?, col("weight")?);
    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let field = |k: usize| rec.get(k).unwrap_or("").trim();
        let w: f64 = field(wi).parse().map_err(|_| Error::Parse(format!("line {line}: bad wealth {:?}", field(wi))))?;
        if !w.is_finite() {
            return Err(Error::Parse(format!("line {line}: wealth {w} is not finite")));
        }
        let q: f64 =
            field(qi).parse().map_err(|_| Error::Record { line, reason: format!("bad weight {:?}", field(qi)) })?;
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::Record { line, reason: format!("weight {q} must be positive") });
        }
        records.push((w, q));
    }
    let mut e = EmpiricalLorenz::from_records(&records)?;
    e.source = Some(path.display().to_string());
    Ok(e)
}

/// Model parameters `{chi, zeta, lambda}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theta {
    pub chi: f64,
    pub zeta: f64,
    pub lambda: f64,
}

impl Theta {
    pub fn new(chi: f64, zeta: f64, lambda: f64) -> Self {
        Theta { chi, zeta, lambda }
    }

    fn key(&self) -> [i64; 3] {
        [self.chi, self.zeta, self.lambda].map(|v| (v * 1e4).round() as i64)
    }

    /// Rounded to 4 decimals, the resolution of the objective cache.
    pub fn quantized(&self) -> Theta {
        let k = self.key();
        Theta::new(k[0] as f64 / 1e4, k[1] as f64 / 1e4, k[2] as f64 / 1e4)
    }
}

/// Number of agents and total wealth used for model solves; Lorenz curves do not depend on them.
const MODEL_AGENTS: usize = 1000;
const MODEL_WEALTH: f64 = 1000.0;

/// Solver settings for objective evaluations: a 200-node grid, no far-tail criterion.
pub fn fit_solver_config() -> SolverConfig {
    SolverConfig {
        grid: GridSpec { nodes: 200, ..GridSpec::default() },
        steady_tol: 1e-7,
        tail_tol: 1e300,
        ..SolverConfig::default()
    }
}

/// Model Lorenz curve at `theta`, closed by the condensate's vertical segment to `(1, 1)`.
#[derive(Debug, Clone)]
pub struct ModelCurve {
    pub points: Vec<(f64, f64)>,
    pub gini: f64,
    pub condensed_fraction: f64,
    pub report: SteadyStateReport,
}

pub fn model_lorenz(theta: &Theta, solver: &SolverConfig) -> Result<ModelCurve> {
    let params = ModelParams::new(theta.zeta, theta.lambda, MODEL_AGENTS, MODEL_WEALTH)?;
    let policy = RedistributionPolicy::flat(theta.chi);
    let report = steady_state(&params, &policy, solver, None)?;
    if !report.converged {
        return Err(Error::Discretization(format!(
            "steady state at {theta:?} did not converge (change rate {:e})",
            report.change_rate
        )));
    }
    let mut points = lorenz_curve(&report.distribution);
    if points.last().is_some_and(|p| p.1 < 1.0) {
        points.push((1.0, 1.0));
    }
    Ok(ModelCurve {
        gini: gini_from_points(&points),
        condensed_fraction: report.distribution.condensed_fraction,
        points,
        report,
    })
}

/// Search box: `chi ∈ [chi.0, chi.1]` etc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub chi: (f64, f64),
    pub zeta: (f64, f64),
    pub lambda: (f64, f64),
}

impl Default for SearchBox {
    fn default() -> Self {
        SearchBox { chi: (0.01, 4.0), zeta: (0.01, 4.0), lambda: (0.0, 2.0) }
    }
}

impl SearchBox {
    pub fn validate(&self) -> Result<()> {
        let ok = |r: (f64, f64), min: f64| r.0 >= min && r.1 > r.0 && r.1.is_finite();
        if ok(self.chi, f64::MIN_POSITIVE) && ok(self.zeta, f64::MIN_POSITIVE) && ok(self.lambda, 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid search box {self:?}")))
        }
    }

    fn ranges(&self) -> [(f64, f64); 3] {
        [self.chi, self.zeta, self.lambda]
    }

    pub fn from_unit(&self, u: &[f64; 3]) -> Theta {
        let r = self.ranges();
        let v: [f64; 3] = std::array::from_fn(|k| r[k].0 + u[k] * (r[k].1 - r[k].0));
        Theta::new(v[0], v[1], v[2])
    }

    pub fn to_unit(&self, t: &Theta) -> [f64; 3] {
        let r = self.ranges();
        let v = [t.chi, t.zeta, t.lambda];
        std::array::from_fn(|k| (v[k] - r[k].0) / (r[k].1 - r[k].0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub search: SearchBox,
    /// Quasi-random points evaluated before refinement.
    pub samples: usize,
    /// Best samples refined by the simplex search.
    pub starts: usize,
    /// Objective evaluations allowed per simplex run.
    pub max_evals: usize,
    /// Simplex size (fraction of the box) at which a run stops.
    pub x_tol: f64,
    pub f_tol: f64,
    pub seed: u64,
    pub solver: SolverConfig,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            search: SearchBox::default(),
            samples: 24,
            starts: 3,
            max_evals: 300,
            x_tol: 2e-4,
            f_tol: 1e-9,
            seed: 0,
            solver: fit_solver_config(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartTrace {
    pub start: Theta,
    pub best: Theta,
    pub j: f64,
    pub evals: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitTrace {
    /// Distinct steady-state solves.
    pub solves: usize,
    pub cache_hits: usize,
    pub failures: usize,
    pub starts: Vec<StartTrace>,
    /// First few failure messages.
    pub failure_messages: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub chi_opt: f64,
    pub zeta_opt: f64,
    pub lambda_opt: f64,
    /// Discrepancy at the optimum.
    pub j: f64,
    pub g_fit: f64,
    pub avg_local_error: f64,
    pub criticality_ratio: f64,
    /// Condensed wealth share predicted for the fitted parameters.
    pub oligarch_c: f64,
    /// The optimum lies within 1e-3 (box fraction) of a face of the search box.
    pub boundary_hit: bool,
    pub trace: FitTrace,
}

impl FitResult {
    pub fn theta(&self) -> Theta {
        Theta::new(self.chi_opt, self.zeta_opt, self.lambda_opt)
    }
}

const BOUNDARY_SLACK: f64 = 1e-3;
const KEPT_FAILURES: usize = 8;

/// Memoized discrepancy objective, safe to share across threads. Counters are
/// derived from the set of distinct keys, so they do not depend on scheduling.
struct Objective<'a> {
    target: &'a EmpiricalLorenz,
    solver: &'a SolverConfig,
    cache: Mutex<HashMap<[i64; 3], std::result::Result<f64, String>>>,
    calls: AtomicUsize,
}

impl Objective<'_> {
    fn eval(&self, theta: &Theta) -> f64 {
        self.calls.fetch_add(1, Ordering::Relaxed);
        let key = theta.key();
        if let Some(v) = self.cache.lock().expect("poisoned").get(&key) {
            return *v.as_ref().unwrap_or(&f64::INFINITY);
        }
        let q = theta.quantized();
        let v = model_lorenz(&q, self.solver)
            .and_then(|m| discrepancy(&self.target.points, &m.points))
            .map_err(|e| format!("{q:?}: {e}"));
        let j = *v.as_ref().unwrap_or(&f64::INFINITY);
        self.cache.lock().expect("poisoned").insert(key, v);
        j
    }

    /// `(solves, hits, failure messages in key order)`.
    fn tally(self) -> (usize, usize, Vec<String>) {
        let cache = self.cache.into_inner().expect("poisoned");
        let mut failed: Vec<(&[i64; 3], &String)> =
            cache.iter().filter_map(|(k, v)| v.as_ref().err().map(|e| (k, e))).collect();
        failed.sort();
        let failures = failed.into_iter().map(|(_, e)| e.clone()).collect();
        (cache.len(), self.calls.into_inner() - cache.len(), failures)
    }
}

fn better(a: &(Theta, f64), b: &(Theta, f64)) -> bool {
    let ka = [a.0.chi, a.0.zeta, a.0.lambda];
    let kb = [b.0.chi, b.0.zeta, b.0.lambda];
    a.1 < b.1 || (a.1 == b.1 && ka < kb)
}

/// Multi-start minimization of the discrepancy over the search box.
pub fn fit(target: &EmpiricalLorenz, config: &FitConfig) -> Result<FitResult> {
    target.validate()?;
    config.search.validate()?;
    config.solver.validate()?;
    if config.samples == 0 || config.starts == 0 || config.max_evals < 4 {
        return Err(Error::InvalidParameter("fit needs samples, starts > 0 and max_evals >= 4".into()));
    }
    let obj =
        Objective { target, solver: &config.solver, cache: Mutex::new(HashMap::new()), calls: AtomicUsize::new(0) };
    let bx = &config.search;
    let mut rng = rand_pcg::Pcg64::seed_from_u64(config.seed);
    let samples = halton_starts(config.samples, &mut rng);
    let scored: Vec<([f64; 3], f64)> = samples.par_iter().map(|u| (*u, obj.eval(&bx.from_unit(u)))).collect();
    let mut ranked: Vec<([f64; 3], f64)> = scored.into_iter().filter(|s| s.1.is_finite()).collect();
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.partial_cmp(&b.0).expect("finite")));
    ranked.truncate(config.starts);

    let opts =
        SimplexOptions { max_evals: config.max_evals, x_tol: config.x_tol, f_tol: config.f_tol, initial_step: 0.05 };
    let runs: Vec<StartTrace> = ranked
        .par_iter()
        .map(|(u0, _)| {
            // restart from the best vertex until a fresh simplex stops improving
            let (mut x, mut f, mut used) = (*u0, f64::INFINITY, 0);
            while used < config.max_evals {
                let o = SimplexOptions { max_evals: config.max_evals - used, ..opts };
                let r = nelder_mead(|u| obj.eval(&bx.from_unit(u)), x, &o);
                used += r.evals;
                let improved = r.f < f - config.f_tol;
                if r.f < f {
                    (x, f) = (r.x, r.f);
                }
                if !improved {
                    break;
                }
            }
            StartTrace { start: bx.from_unit(u0).quantized(), best: bx.from_unit(&x).quantized(), j: f, evals: used }
        })
        .collect();

    let (solves, cache_hits, failures) = obj.tally();
    let best =
        runs.iter()
            .filter(|r| r.j.is_finite())
            .map(|r| (r.best, r.j))
            .reduce(|a, b| if better(&b, &a) { b } else { a });
    let Some((theta, j)) = best else {
        return Err(Error::Fit(format!(
            "all {solves} objective evaluations failed; first failures: {}",
            failures.iter().take(KEPT_FAILURES).cloned().collect::<Vec<_>>().join("; ")
        )));
    };

    let model = model_lorenz(&theta, &config.solver)?;
    let u = bx.to_unit(&theta);
    let trace = FitTrace {
        solves,
        cache_hits,
        failures: failures.len(),
        starts: runs,
        failure_messages: failures.into_iter().take(KEPT_FAILURES).collect(),
    };
    Ok(FitResult {
        chi_opt: theta.chi,
        zeta_opt: theta.zeta,
        lambda_opt: theta.lambda,
        j,
        g_fit: model.gini,
        avg_local_error: mean_local_error(&target.points, &model.points),
        criticality_ratio: theta.chi / theta.zeta,
        oligarch_c: oligarch_fraction_awm(theta.chi, theta.zeta, theta.lambda)?,
        boundary_hit: u.iter().any(|v| !(BOUNDARY_SLACK..=1.0 - BOUNDARY_SLACK).contains(v)),
        trace,
    })
}

/// Model Lorenz curve at `theta` sampled at `F = k / points` plus `F = 1 - 10^(-j/4)`,
/// `j = 8..=24`, so the condensate's jump at `F = 1` stays resolved.
pub fn synthetic_lorenz(theta: &Theta, solver: &SolverConfig, points: usize) -> Result<EmpiricalLorenz> {
    let model = model_lorenz(theta, solver)?;
    let n = points.max(1);
    let mut fs: Vec<f64> = (1..n).map(|k| k as f64 / n as f64).collect();
    fs.extend((8..=24).map(|j| 1.0 - 10f64.powf(-(j as f64) / 4.0)));
    fs.sort_by(f64::total_cmp);
    fs.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let mut grid: Vec<(f64, f64)> = fs.into_iter().map(|f| (f, interpolate(&model.points, f))).collect();
    grid.push((1.0, 1.0));
    EmpiricalLorenz::new(grid, Some(format!("model {theta:?}")), false)
}

fn interpolate(points: &[(f64, f64)], f: f64) -> f64 {
    let i = points.partition_point(|p| p.0 < f);
    if i == 0 {
        return points[0].1;
    }
    if i == points.len() {
        return points[points.len() - 1].1;
    }
    let (p, q) = (points[i - 1], points[i]);
    if q.0 == p.0 {
        return q.1;
    }
    p.1 + (f - p.0) / (q.0 - p.0) * (q.1 - p.1)
}
