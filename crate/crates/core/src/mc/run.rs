use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{rng_for, sweep, AgentEnsemble, SimConfig, SweepDiagnostics, SweepScratch};
use crate::distribution::WealthDistribution;
use crate::error::{Error, Result};
use crate::lorenz::{ensemble_lorenz, gini_from_points};
use crate::model::ModelParams;
use crate::policy::RateFunction;

/// Inequality summary of an ensemble at one sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub sweep: u64,
    pub gini: f64,
    pub top1_share: f64,
    pub top10_share: f64,
    pub total_wealth: f64,
}

pub fn summarize(wealths: &[f64], sweep: u64) -> Summary {
    let total: f64 = wealths.iter().sum();
    let mut sorted = wealths.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let top = (n / 10).max(1);
    let top10: f64 = sorted[n - top..].iter().sum();
    Summary {
        sweep,
        gini: gini_from_points(&ensemble_lorenz(&sorted)),
        top1_share: sorted[n - 1] / total,
        top10_share: top10 / total,
        total_wealth: total,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunOutput {
    pub replica: u64,
    pub summaries: Vec<Summary>,
    /// Evenly spaced histogram snapshots `(sweep, distribution)`.
    pub snapshots: Vec<(u64, WealthDistribution)>,
    /// Histogram averaged over every recorded sweep in the second half of the run.
    pub late_average: WealthDistribution,
    pub final_ensemble: AgentEnsemble,
    pub diagnostics: SweepDiagnostics,
}

impl RunOutput {
    /// Late-time condensed wealth fraction.
    pub fn condensed_estimate(&self) -> f64 {
        self.late_average.condensed_fraction
    }
}

/// Running sum of histograms on a fixed grid.
struct HistogramMean {
    masses: Vec<f64>,
    condensed: f64,
    agents: f64,
    count: usize,
}

impl HistogramMean {
    fn new(len: usize) -> Self {
        HistogramMean { masses: vec![0.0; len], condensed: 0.0, agents: 0.0, count: 0 }
    }

    fn add(&mut self, d: &WealthDistribution) {
        for (s, m) in self.masses.iter_mut().zip(d.node_masses()) {
            *s += m;
        }
        self.condensed += d.condensed_fraction;
        self.agents += d.n_agents;
        self.count += 1;
    }

    fn merge(&mut self, other: &HistogramMean) {
        for (s, m) in self.masses.iter_mut().zip(&other.masses) {
            *s += m;
        }
        self.condensed += other.condensed;
        self.agents += other.agents;
        self.count += other.count;
    }

    fn finish(&self, grid: &[f64], total_wealth: f64, lambda: f64) -> Result<WealthDistribution> {
        let k = self.count as f64;
        let masses: Vec<f64> = self.masses.iter().map(|m| m / k).collect();
        WealthDistribution::from_node_masses(
            grid.to_vec(),
            &masses,
            self.condensed / k,
            self.agents / k,
            total_wealth,
            lambda,
        )
    }
}

/// Run one trajectory on stream 0 of the configured seed.
pub fn run(
    config: &SimConfig,
    params: &ModelParams,
    policy: &dyn RateFunction,
    initial: &AgentEnsemble,
) -> Result<RunOutput> {
    run_stream(config, params, policy, initial, 0).map(|(out, _)| out)
}

fn run_stream(
    config: &SimConfig,
    params: &ModelParams,
    policy: &dyn RateFunction,
    initial: &AgentEnsemble,
    replica: u64,
) -> Result<(RunOutput, HistogramMean)> {
    config.validate()?;
    params.validate()?;
    if initial.len() != params.n_agents {
        return Err(Error::InvalidParameter(format!(
            "ensemble has {} agents, parameters say {}",
            initial.len(),
            params.n_agents
        )));
    }
    let grid = config.grid.wealth_nodes(params.mu_bar(), params.delta())?;
    let mut rng = rng_for(config.seed, replica);
    let mut ensemble = initial.clone();
    let mut scratch = SweepScratch::default();
    let mut diagnostics = SweepDiagnostics::default();
    let mut summaries = vec![summarize(&ensemble.wealths, 0)];
    let mut snapshots = Vec::new();
    let mut mean = HistogramMean::new(grid.len());
    let snap_every = if config.histogram_snapshots == 0 {
        u64::MAX
    } else {
        (config.sweeps / config.histogram_snapshots as u64).max(1)
    };
    let late_start = config.sweeps / 2;
    for s in 1..=config.sweeps {
        let d = sweep(&mut ensemble, params, policy, config, &mut rng, &mut scratch)?;
        diagnostics.merge(&d);
        let record = s % config.snapshot_stride == 0 || s == config.sweeps;
        if record {
            summaries.push(summarize(&ensemble.wealths, s));
        }
        let want_snapshot = s % snap_every == 0 && snapshots.len() < config.histogram_snapshots;
        let want_mean = record && s > late_start;
        if want_snapshot || want_mean {
            let h = WealthDistribution::histogram(&ensemble.wealths, params.lambda, &grid)?;
            if want_mean {
                mean.add(&h);
            }
            if want_snapshot {
                snapshots.push((s, h));
            }
        }
    }
    let late_average = mean.finish(&grid, params.total_wealth, params.lambda)?;
    Ok((RunOutput { replica, summaries, snapshots, late_average, final_ensemble: ensemble, diagnostics }, mean))
}

/// Independent replicas on separate streams of the same seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicaSet {
    pub runs: Vec<RunOutput>,
    /// Late-time histogram averaged over all replicas.
    pub late_average: WealthDistribution,
}

pub fn run_replicas(
    config: &SimConfig,
    params: &ModelParams,
    policy: &dyn RateFunction,
    initial: &AgentEnsemble,
    replicas: usize,
) -> Result<ReplicaSet> {
    if replicas == 0 {
        return Err(Error::InvalidParameter("need at least one replica".into()));
    }
    let results: Vec<(RunOutput, HistogramMean)> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| run_stream(config, params, policy, initial, r))
        .collect::<Result<_>>()?;
    let grid = results[0].0.late_average.grid.clone();
    let mut total = HistogramMean::new(grid.len());
    for (_, m) in &results {
        total.merge(m);
    }
    let late_average = total.finish(&grid, params.total_wealth, params.lambda)?;
    Ok(ReplicaSet { runs: results.into_iter().map(|(r, _)| r).collect(), late_average })
}

/// L1 distance between the agent-share histograms of two distributions on common bins.
///
/// Node masses are assigned to the bin containing the node; nodes outside `edges`
/// fall into the nearest end bin.
pub fn l1_distance(a: &WealthDistribution, b: &WealthDistribution, edges: &[f64]) -> Result<f64> {
    if edges.len() < 2 || edges.windows(2).any(|e| !(e[1] > e[0])) {
        return Err(Error::InvalidParameter("bin edges must be increasing".into()));
    }
    let bins = edges.len() - 1;
    let binned = |d: &WealthDistribution| {
        let mut out = vec![0.0; bins];
        let n: f64 = d.node_masses().iter().sum();
        for (m, w) in d.node_masses().iter().zip(&d.grid) {
            let k = edges.partition_point(|e| e <= w).clamp(1, bins) - 1;
            out[k] += m / n;
        }
        out
    };
    let (ha, hb) = (binned(a), binned(b));
    Ok(ha.iter().zip(&hb).map(|(x, y)| (x - y).abs()).sum())
}

pub fn write_trajectory_csv(path: &Path, summaries: &[Summary]) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(["sweep", "gini", "top1_share", "top10_share", "total_wealth"])?;
    for s in summaries {
        wtr.write_record([
            s.sweep.to_string(),
            s.gini.to_string(),
            s.top1_share.to_string(),
            s.top10_share.to_string(),
            s.total_wealth.to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
