use std::path::{Path, PathBuf};

use anyhow::Context as _;
use awm_core::asymptotics::{catalogue, forward_tail, probe_ladder, Catalogued, Verdict};
use awm_core::fitting::{
    criticality_report, fit_solver_config, model_lorenz, synthetic_lorenz, ReportRow, REFERENCE_FITS,
};
use awm_core::fp::tail_fit;
use awm_core::lorenz::write_lorenz_csv;
use awm_core::mc::{run_replicas, write_trajectory_csv, RNG_ALGORITHM};
use awm_core::{
    check_assumptions, gini, invert_redistribution, load_survey, lorenz_curve, steady_state, validate_reduction,
    AgentEnsemble, EmpiricalLorenz, FitConfig, FitResult, GridSpec, ModelParams, MomentInputs, RateFunction,
    RedistributionPolicy, SimConfig, SolverConfig, TailFamily, Theta, WealthDistribution,
};
use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::run::{Context, Run};
use crate::specs::{catalogue_of, closed_form, parse_policy, parse_tail, tail_function};
use crate::Usage;

/// Library validation failures caused by flag values are usage errors.
fn usage<T>(r: awm_core::Result<T>) -> anyhow::Result<T> {
    r.map_err(|e| Usage(e.to_string()).into())
}

#[derive(Debug, Clone, Args, Serialize)]
#[group(required = true, multiple = false)]
pub struct PolicyArgs {
    /// Flat redistribution rate.
    #[arg(long)]
    pub chi: Option<f64>,
    /// Policy spec: flat:X, <family>:k=v,..., piecewise:w=chi,..., file:PATH.
    #[arg(long)]
    pub policy: Option<String>,
}

impl PolicyArgs {
    fn resolve(&self, zeta: f64) -> anyhow::Result<RedistributionPolicy> {
        match (&self.chi, &self.policy) {
            (Some(chi), _) => parse_policy(&format!("flat:{chi}"), zeta),
            (None, Some(spec)) => parse_policy(spec, zeta),
            (None, None) => Err(Usage("one of --chi or --policy is required".into()).into()),
        }
    }

    fn file(&self) -> Option<&Path> {
        self.policy.as_deref().and_then(|s| s.strip_prefix("file:")).map(|p| Path::new(p.trim()))
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GridArgs {
    /// Grid nodes.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Width of the uniform core, in mean shifted wealths.
    #[arg(long)]
    pub core: Option<f64>,
    /// Grid cap, in mean shifted wealths.
    #[arg(long)]
    pub x_max: Option<f64>,
}

impl GridArgs {
    fn resolve(&self, default: GridSpec) -> anyhow::Result<GridSpec> {
        usage(GridSpec::new(
            self.nodes.unwrap_or(default.nodes),
            self.core.unwrap_or(default.core),
            self.x_max.unwrap_or(default.x_max),
        ))
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    /// Wealth-attained advantage.
    #[arg(long)]
    pub zeta: f64,
    /// Debt limit as a multiple of mean wealth.
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    /// Number of agents.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Total wealth (default: one unit per agent).
    #[arg(long)]
    pub total_wealth: Option<f64>,
}

impl ModelArgs {
    fn params(&self) -> anyhow::Result<ModelParams> {
        usage(ModelParams::new(self.zeta, self.lambda, self.n, self.total_wealth.unwrap_or(self.n as f64)))
    }
}

fn policy_input(run: &mut Run, p: &PolicyArgs) -> anyhow::Result<()> {
    if let Some(path) = p.file() {
        run.input(path)?;
    }
    Ok(())
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct Simulate {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub policy: PolicyArgs,
    /// Time step per transaction.
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    #[arg(long, default_value_t = 10_000)]
    pub sweeps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub replicas: u64,
    /// Sweeps between trajectory rows (default: sweeps / 500).
    #[arg(long)]
    pub stride: Option<u64>,
    /// Histogram snapshots kept per replica.
    #[arg(long, default_value_t = 10)]
    pub snapshots: usize,
    /// Most sub-transactions a strongly biased exchange is split into.
    #[arg(long)]
    pub max_substeps: Option<u32>,
    #[command(flatten)]
    pub grid: GridArgs,
}

pub fn simulate(ctx: &Context, a: Simulate) -> anyhow::Result<()> {
    let params = a.model.params()?;
    let mut run = Run::open(ctx, "simulate", &a)?;
    policy_input(&mut run, &a.policy)?;
    let policy = a.policy.resolve(a.model.zeta)?;
    let defaults = SimConfig::default();
    let config = SimConfig {
        dt: a.dt,
        sweeps: a.sweeps,
        seed: a.seed,
        snapshot_stride: a.stride.unwrap_or((a.sweeps / 500).max(1)),
        grid: a.grid.resolve(defaults.grid)?,
        max_substeps: a.max_substeps.unwrap_or(defaults.max_substeps),
        histogram_snapshots: a.snapshots,
    };
    usage(config.validate())?;
    run.seed = Some(config.seed);
    run.rng = Some(RNG_ALGORITHM);
    run.grid = serde_json::to_value(config.grid)?;
    run.resolved = json!({ "model": params, "policy": policy, "sim": config, "replicas": a.replicas });

    let set = run_replicas(&config, &params, &policy, &AgentEnsemble::equal(&params), a.replicas as usize)?;
    let mut finals = vec![];
    for r in &set.runs {
        let name = if r.replica == 0 { "trajectory.csv".to_string() } else { format!("trajectory-{}.csv", r.replica) };
        write_trajectory_csv(&run.output(&name)?, &r.summaries)?;
        for (sweep, h) in &r.snapshots {
            write_distribution(&mut run, &format!("snapshots/r{}-s{sweep}.csv", r.replica), h)?;
        }
        let last = r.summaries.last().copied();
        if let Some(s) = last {
            println!(
                "replica {}: gini {:.4} top1_share {:.4} top10_share {:.4}",
                r.replica, s.gini, s.top1_share, s.top10_share
            );
        }
        finals.push(json!({
            "replica": r.replica,
            "final": last,
            "condensed_estimate": r.condensed_estimate(),
            "diagnostics": r.diagnostics,
        }));
        if r.diagnostics.clamps > 0 {
            eprintln!("awm: warning: replica {} clamped {} biased exchanges", r.replica, r.diagnostics.clamps);
        }
    }
    write_distribution(&mut run, "late_average.csv", &set.late_average)?;
    run.write_json(
        "summary.json",
        &json!({
            "replicas": finals,
            "late_average": { "gini": gini(&set.late_average), "condensed_fraction": set.late_average.condensed_fraction },
        }),
    )?;
    run.finish()?;
    Ok(())
}

fn write_distribution(run: &mut Run, name: &str, d: &WealthDistribution) -> anyhow::Result<()> {
    let p = run.output(name)?;
    d.write(&p)?;
    let side = Path::new(name).with_extension("json");
    run.output(&side.to_string_lossy())?;
    Ok(())
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct Steady {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Step limit; hitting it is reported, not an error.
    #[arg(long)]
    pub max_steps: Option<u64>,
    /// Convergence tolerance on the change rate and residual.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Initial time step.
    #[arg(long)]
    pub dt: Option<f64>,
}

pub fn steady(ctx: &Context, a: Steady) -> anyhow::Result<()> {
    let params = a.model.params()?;
    let mut run = Run::open(ctx, "steady", &a)?;
    policy_input(&mut run, &a.policy)?;
    let policy = a.policy.resolve(a.model.zeta)?;
    let d = SolverConfig::default();
    let solver = SolverConfig {
        grid: a.grid.resolve(d.grid)?,
        max_steps: a.max_steps.unwrap_or(d.max_steps),
        steady_tol: a.tol.unwrap_or(d.steady_tol),
        dt: a.dt.unwrap_or(d.dt),
        ..d
    };
    usage(solver.validate())?;
    run.grid = serde_json::to_value(solver.grid)?;
    run.resolved = json!({ "model": params, "policy": policy, "solver": solver });

    let r = steady_state(&params, &policy, &solver, None)?;
    if !r.converged {
        eprintln!(
            "awm: warning: steady state not converged after {} steps (residual {:.3e}, change rate {:.3e})",
            r.steps, r.residual, r.change_rate
        );
    }
    write_distribution(&mut run, "distribution.csv", &r.distribution)?;
    write_lorenz_csv(&run.output("lorenz.csv")?, &lorenz_curve(&r.distribution))?;
    let moments = MomentInputs::from_distribution(&r.distribution, &policy, a.model.zeta).ok();
    let g = gini(&r.distribution);
    run.write_json(
        "report.json",
        &json!({
            "summary": r.summary(),
            "gini": g,
            "tail_fit": tail_fit(&r.distribution).ok(),
            "moments": moments,
        }),
    )?;
    println!(
        "converged {} after {} steps: condensed_fraction {:.4} gini {:.4}",
        r.converged, r.steps, r.distribution.condensed_fraction, g
    );
    run.finish()?;
    Ok(())
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MomentArgs {
    /// Take the moments from a distribution CSV (with its JSON sidecar).
    #[arg(long)]
    pub distribution: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub b_inf: f64,
    #[arg(long, default_value_t = 1.0)]
    pub l_inf: f64,
    #[arg(long, default_value_t = 1.0)]
    pub mu_bar: f64,
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    /// Coefficient of the 1/w redistribution term (default 0).
    #[arg(long = "d")]
    pub d: Option<f64>,
}

impl MomentArgs {
    fn resolve(&self, run: &mut Run, policy: Option<&RedistributionPolicy>, zeta: f64) -> anyhow::Result<MomentInputs> {
        let m = match &self.distribution {
            Some(path) => {
                run.input(path)?;
                let dist = WealthDistribution::read(path)?;
                let policy = policy.ok_or_else(|| Usage("--distribution needs --chi or --policy".into()))?;
                MomentInputs::from_distribution(&dist, policy, zeta)?
            }
            None => usage(MomentInputs::new(self.b_inf, self.l_inf, self.mu_bar, self.delta, zeta))?,
        };
        Ok(match self.d {
            Some(d) => m.with_d(d),
            None if self.distribution.is_none() => m.with_d(0.0),
            None => m,
        })
    }
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct Tail {
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[arg(long)]
    pub zeta: f64,
    #[command(flatten)]
    pub moments: MomentArgs,
    /// Wealths at which to evaluate f.
    #[arg(long, required = true, num_args = 1..)]
    pub w: Vec<f64>,
}

pub fn tail(ctx: &Context, a: Tail) -> anyhow::Result<()> {
    let mut run = Run::open(ctx, "tail", &a)?;
    policy_input(&mut run, &a.policy)?;
    let policy = a.policy.resolve(a.zeta)?;
    let m = a.moments.resolve(&mut run, Some(&policy), a.zeta)?;
    run.resolved = json!({ "policy": policy, "moments": m });
    let mut csv = String::from("w,f\n");
    let mut values = vec![];
    for &w in &a.w {
        let f = forward_tail(&policy, &m, w)?;
        println!("f({w}) = {f}");
        csv.push_str(&format!("{w},{f}\n"));
        values.push(json!({ "w": w, "f": f }));
    }
    run.write_text("tail.csv", &csv)?;
    run.write_json(
        "tail.json",
        &json!({ "policy": policy, "moments": m, "d": m.d_constant(), "critical_rate": m.critical_rate(), "values": values }),
    )?;
    run.finish()?;
    Ok(())
}

#[derive(Debug, Clone, Args, Serialize)]
#[group(id = "target", required = true, multiple = false)]
pub struct TailChoice {
    /// Tail spec: <family>[:k=v,...], e.g. pareto:alpha=1 or loglog.
    #[arg(long)]
    pub tail: Option<String>,
    /// Family name, with parameters from --alpha/--beta/--sigma/--m/--rate.
    #[arg(long)]
    pub family: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FamilyParams {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub m: Option<f64>,
    #[arg(long)]
    pub rate: Option<f64>,
}

fn resolve_tail(t: &TailChoice, p: &FamilyParams) -> anyhow::Result<TailFamily> {
    let spec = match (&t.tail, &t.family) {
        (Some(s), _) => s.clone(),
        (None, Some(f)) => {
            let kv: Vec<String> =
                [("alpha", p.alpha), ("beta", p.beta), ("sigma", p.sigma), ("m", p.m), ("rate", p.rate)]
                    .iter()
                    .filter_map(|(k, v)| v.map(|v| format!("{k}={v}")))
                    .collect();
            format!("{f}:{}", kv.join(","))
        }
        (None, None) => return Err(Usage("one of --tail or --family is required".into()).into()),
    };
    Ok(parse_tail(&spec)?)
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct Invert {
    #[command(flatten)]
    pub target: TailChoice,
    #[command(flatten)]
    pub family_params: FamilyParams,
    #[arg(long, default_value_t = 1.0)]
    pub zeta: f64,
    #[command(flatten)]
    pub moments: MomentArgs,
    /// Samples in the emitted policy CSV.
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    /// Upper end of the sampled policy (default: 10^4 mean shifted wealths).
    #[arg(long)]
    pub w_max: Option<f64>,
}

#[derive(Debug, Serialize)]
struct InvertReport {
    tail: TailFamily,
    threshold: f64,
    moments: MomentInputs,
    d: f64,
    critical_rate: f64,
    closed_form: Option<String>,
    catalogue: Option<Catalogued>,
    /// The sampled policy's common value when it is constant.
    flat: Option<f64>,
    asymptotic_rate: Option<f64>,
    sampled_range: (f64, f64),
}

pub fn invert(ctx: &Context, a: Invert) -> anyhow::Result<()> {
    let family = resolve_tail(&a.target, &a.family_params)?;
    let mut run = Run::open(ctx, "invert", &a)?;
    let mut m = a.moments.resolve(&mut run, None, a.zeta)?;
    if let (TailFamily::Exponential { rate }, None) = (family, a.moments.d) {
        // the exponential row is the one whose 1/w term cancels
        m = m.with_d(-m.b_inf * rate);
    }
    let tail = tail_function(family)?;
    let inv = invert_redistribution(&tail, &m)?;
    let lo = (1.001 * tail.threshold()).max(0.1 * m.mu_bar);
    let hi = a.w_max.unwrap_or(1e4 * m.mu_bar);
    if !(hi > lo) || a.points < 2 {
        return Err(Usage(format!("sampled range [{lo}, {hi}] with {} points is empty", a.points)).into());
    }
    let sampled = inv.to_sampled_geometric(lo, hi, a.points)?;
    let RedistributionPolicy::Sampled { grid, rates } = &sampled else { unreachable!() };
    RedistributionPolicy::write_sampled_csv(&run.output("policy.csv")?, grid, &sampled)?;
    let r0 = rates[0];
    let flat = rates.iter().all(|r| (r - r0).abs() <= 1e-12 * r0.abs().max(1e-300)).then_some(r0);
    let cat = catalogue_of(&family);
    let catalogued = match cat {
        Some(c) => Some(catalogue(c, &m)?),
        None => None,
    };
    let report = InvertReport {
        tail: family,
        threshold: tail.threshold(),
        moments: m,
        d: m.d_constant(),
        critical_rate: m.critical_rate(),
        closed_form: cat.as_ref().map(closed_form),
        catalogue: catalogued,
        flat,
        asymptotic_rate: inv.asymptotic_rate(),
        sampled_range: (lo, hi),
    };
    match (flat, &report.closed_form) {
        (Some(chi), _) => println!("policy: flat, chi = {chi}"),
        (None, Some(cf)) => println!("policy: {cf}"),
        (None, None) => println!("policy: sampled on [{lo}, {hi}]"),
    }
    run.resolved = json!({ "moments": m });
    run.write_json("invert.json", &report)?;
    run.finish()?;
    Ok(())
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct Check {
    #[command(flatten)]
    pub target: TailChoice,
    #[command(flatten)]
    pub family_params: FamilyParams,
    /// First probe wealth (default: 10 max(threshold, 1)).
    #[arg(long)]
    pub w0: Option<f64>,
    /// Number of doubling probes.
    #[arg(long, default_value_t = 12)]
    pub probes: usize,
    /// Also check the potential reductions on this steady-state distribution.
    #[arg(long, requires = "zeta")]
    pub distribution: Option<PathBuf>,
    #[arg(long)]
    pub chi: Option<f64>,
    #[arg(long, conflicts_with = "chi")]
    pub policy: Option<String>,
    #[arg(long)]
    pub zeta: Option<f64>,
}

pub fn check(ctx: &Context, a: Check) -> anyhow::Result<()> {
    let family = resolve_tail(&a.target, &a.family_params)?;
    let tail = tail_function(family)?;
    let w0 = a.w0.unwrap_or(10.0 * tail.threshold().max(1.0));
    if !(w0 > tail.threshold()) || a.probes < 2 {
        return Err(Usage(format!("need >= 2 probes starting above {}", tail.threshold())).into());
    }
    let mut run = Run::open(ctx, "check", &a)?;
    let report = usage(check_assumptions(&tail, &probe_ladder(w0, a.probes)))?;
    let verdict = if report.in_class == Some(false) {
        "outside_class"
    } else if report.satisfied() {
        "satisfied"
    } else if report.conditions.iter().any(|c| c.verdict == Verdict::Violated) {
        "violated"
    } else {
        "inconclusive"
    };
    println!("verdict: {verdict}");
    let reduction = match &a.distribution {
        None => None,
        Some(path) => {
            run.input(path)?;
            let zeta = a.zeta.expect("clap enforces --zeta");
            let policy = PolicyArgs { chi: a.chi, policy: a.policy.clone() };
            let policy = policy.resolve(zeta)?;
            let dist = WealthDistribution::read(path)?;
            let m = MomentInputs::from_distribution(&dist, &policy, zeta)?;
            let r = validate_reduction(&dist, &m)?;
            println!("potential reductions: max deviation {:.3e} over {} nodes", r.max_deviation(), r.x.len());
            Some(json!({ "max_deviation": r.max_deviation(), "within_5_percent": r.within(0.05), "detail": r }))
        }
    };
    run.write_json("check.json", &json!({ "verdict": verdict, "assumptions": report, "reduction": reduction }))?;
    run.finish()?;
    Ok(())
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
#[command(group = clap::ArgGroup::new("source").required(true).multiple(false))]
pub struct Fit {
    /// Survey CSV (`wealth,weight` header) or Lorenz CSV (`F,L`).
    #[arg(long, group = "source")]
    pub data: Option<PathBuf>,
    /// Fit the model curve at "chi,zeta,lambda" instead of data.
    #[arg(long, group = "source")]
    pub synthetic: Option<String>,
    /// Points in a synthetic curve.
    #[arg(long, default_value_t = 100)]
    pub points: usize,
    /// Row label for reports (default: data file stem, or "synthetic").
    #[arg(long)]
    pub label: Option<String>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub starts: Option<usize>,
    #[arg(long)]
    pub max_evals: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// `fit.json`: a fit result with its label.
#[derive(Debug, Serialize, Deserialize)]
pub struct FitFile {
    pub label: String,
    #[serde(flatten)]
    pub result: FitResult,
}

fn read_target(path: &Path) -> anyhow::Result<EmpiricalLorenz> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let header = text.lines().next().unwrap_or("").to_ascii_lowercase();
    let curve = if header.split(',').any(|h| h.trim() == "wealth") {
        load_survey(path)?
    } else {
        EmpiricalLorenz::read_csv(path)?
    };
    Ok(curve)
}

fn parse_theta(s: &str) -> Result<Theta, Usage> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Usage(format!("--synthetic expects chi,zeta,lambda, got {s:?}")))?;
    match v[..] {
        [chi, zeta, lambda] => Ok(Theta::new(chi, zeta, lambda)),
        _ => Err(Usage(format!("--synthetic expects three numbers, got {}", v.len()))),
    }
}

pub fn fit(ctx: &Context, a: Fit) -> anyhow::Result<()> {
    let d = FitConfig::default();
    let config = FitConfig {
        samples: a.samples.unwrap_or(d.samples),
        starts: a.starts.unwrap_or(d.starts),
        max_evals: a.max_evals.unwrap_or(d.max_evals),
        seed: a.seed.unwrap_or(d.seed),
        ..d
    };
    let mut run = Run::open(ctx, "fit", &a)?;
    let (target, label) = match (&a.data, &a.synthetic) {
        (Some(path), _) => {
            run.input(path)?;
            let stem = path.file_stem().map_or("data".into(), |s| s.to_string_lossy().into_owned());
            (read_target(path)?, stem)
        }
        (None, Some(s)) => {
            let theta = parse_theta(s)?;
            (synthetic_lorenz(&theta, &fit_solver_config(), a.points)?, "synthetic".to_string())
        }
        (None, None) => return Err(Usage("one of --data or --synthetic is required".into()).into()),
    };
    run.seed = Some(config.seed);
    run.rng = Some(RNG_ALGORITHM);
    run.grid = serde_json::to_value(config.solver.grid)?;
    run.resolved = serde_json::to_value(&config)?;
    let result = awm_core::fit(&target, &config)?;
    if result.boundary_hit {
        eprintln!("awm: warning: optimum lies on the search box boundary");
    }
    println!(
        "chi {:.4} zeta {:.4} lambda {:.4} J {:.3e} G {:.4}",
        result.chi_opt, result.zeta_opt, result.lambda_opt, result.j, result.g_fit
    );
    target.write_csv(&run.output("lorenz_data.csv")?)?;
    let model = model_lorenz(&result.theta(), &config.solver)?;
    write_lorenz_csv(&run.output("lorenz_model.csv")?, &model.points)?;
    run.write_json("fit.json", &FitFile { label: a.label.clone().unwrap_or(label), result })?;
    run.finish()?;
    Ok(())
}

#[derive(Debug, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct Report {
    /// fit.json files from `awm fit`.
    pub files: Vec<PathBuf>,
    /// Append the built-in reference fits.
    #[arg(long)]
    pub reference: bool,
}

pub fn report(ctx: &Context, a: Report) -> anyhow::Result<()> {
    if a.files.is_empty() && !a.reference {
        return Err(Usage("give fit result files or --reference".into()).into());
    }
    let mut run = Run::open(ctx, "report", &a)?;
    let mut rows = vec![];
    for path in &a.files {
        run.input(path)?;
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let f: FitFile =
            serde_json::from_str(&text).with_context(|| format!("{} is not a fit result", path.display()))?;
        rows.push(ReportRow::from_fit(f.label, &f.result));
    }
    if a.reference {
        rows.extend(REFERENCE_FITS.iter().map(ReportRow::from));
    }
    let table = criticality_report(rows)?;
    run.write_text("table.csv", &table.table_csv())?;
    run.write_text("scatter.csv", &table.scatter_csv())?;
    println!("{} rows", table.rows.len());
    run.finish()?;
    Ok(())
}
