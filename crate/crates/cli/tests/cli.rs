use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn awm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_awm")).args(args).env_remove("AWM_OUT").output().unwrap()
}

/// Run a command into a fresh run directory and require success.
fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut full = vec!["--run-dir", dir.to_str().unwrap()];
    full.extend_from_slice(args);
    let out = awm(&full);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap()
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

fn last_row(csv: &Path) -> Vec<String> {
    let text = std::fs::read_to_string(csv).unwrap();
    text.lines().last().unwrap().split(',').map(String::from).collect()
}

#[test]
fn missing_zeta_is_a_usage_error() {
    let out = awm(&["simulate", "--n", "1000", "--chi", "0.1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--zeta"));
}

#[test]
fn invalid_values_are_usage_errors() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path().to_str().unwrap();
    for args in [
        vec!["steady", "--chi", "0.1", "--zeta", "-1"],
        vec!["steady", "--policy", "pareto:alpha=1,gamma=2", "--zeta", "0.1"],
        vec!["simulate", "--zeta", "0.1", "--chi", "0.1", "--dt", "0"],
        vec!["check", "--tail", "hog:m=1"],
        vec!["invert", "--family", "pareto", "--alpha", "-2"],
        vec!["fit", "--synthetic", "1,2"],
        vec!["report"],
    ] {
        let mut full = vec!["--out", d];
        full.extend(args.iter().copied());
        let out = awm(&full);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn unreadable_inputs_are_runtime_failures() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path().to_str().unwrap();
    let missing = tmp.path().join("absent.csv");
    let m = missing.to_str().unwrap();
    let policy = format!("file:{m}");
    for args in [vec!["fit", "--data", m], vec!["steady", "--policy", &policy, "--zeta", "0.1"], vec!["report", m]] {
        let mut full = vec!["--out", d];
        full.extend(args.iter().copied());
        assert_eq!(awm(&full).status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn version_reports_the_manifest_schema() {
    let out = awm(&["--version"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("awm ") && text.contains("schema 1"), "{text}");
}

#[test]
fn simulate_writes_trajectory_snapshots_and_manifest() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("run");
    run_in(
        &dir,
        &[
            "simulate", "--n", "1000", "--zeta", "0.2", "--chi", "0.1", "--lambda", "0", "--sweeps", "5000", "--seed",
            "7",
        ],
    );
    let traj = std::fs::read_to_string(dir.join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("sweep,gini,top1_share,top10_share,total_wealth\n"));
    let last = last_row(&dir.join("trajectory.csv"));
    assert_eq!(last[0], "5000");
    let total: f64 = last[4].parse().unwrap();
    assert!((total - 1000.0).abs() < 1e-9 * 1000.0);
    let manifest = json(dir.join("manifest.json"));
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["seed"], 7);
    assert!(manifest["rng"].as_str().unwrap().contains("Pcg64"));
    assert_eq!(manifest["grid"]["nodes"], 400);
    let outputs = manifest["outputs"].as_object().unwrap();
    assert_eq!(outputs.keys().filter(|k| k.starts_with("snapshots/") && k.ends_with(".csv")).count(), 10);
    for (name, digest) in outputs {
        assert_eq!(digest.as_str().unwrap().len(), 64, "{name}");
        assert!(dir.join(name).is_file(), "{name}");
    }
}

#[test]
fn same_seed_reproduces_every_output() {
    let tmp = TempDir::new().unwrap();
    let args = [
        "simulate",
        "--n",
        "300",
        "--zeta",
        "0.2",
        "--chi",
        "0.1",
        "--sweeps",
        "2000",
        "--seed",
        "7",
        "--replicas",
        "2",
    ];
    let digests = |name: &str, seed: &str| {
        let dir = tmp.path().join(name);
        let mut a = args.to_vec();
        let k = a.len() - 3;
        a[k] = seed;
        run_in(&dir, &a);
        json(dir.join("manifest.json"))["outputs"].clone()
    };
    let first = digests("a", "7");
    assert_eq!(first, digests("b", "7"));
    assert_ne!(first["trajectory.csv"], digests("c", "8")["trajectory.csv"]);
}

#[test]
fn long_supercritical_run_builds_half_wealth_oligarch() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("run");
    // small dt: the oligarch's exchanges must stay weakly biased
    run_in(
        &dir,
        &[
            "simulate", "--n", "1000", "--zeta", "0.2", "--chi", "0.1", "--dt", "5e-4", "--sweeps", "300000", "--seed",
            "7",
        ],
    );
    let top1: f64 = last_row(&dir.join("trajectory.csv"))[2].parse().unwrap();
    assert!((top1 - 0.5).abs() <= 0.05, "top1 share {top1}");
}

#[test]
fn steady_states_on_both_sides_of_the_transition() {
    let tmp = TempDir::new().unwrap();
    for (chi, zeta, lo, hi) in [("0.3", "0.1", 0.0, 0.01), ("0.1", "0.2", 0.45, 0.55)] {
        let dir = tmp.path().join(chi);
        run_in(&dir, &["steady", "--chi", chi, "--zeta", zeta]);
        let report = json(dir.join("report.json"));
        assert_eq!(report["summary"]["converged"], true);
        let c = num(&report["summary"]["condensed_fraction"]);
        assert!((lo..=hi).contains(&c), "({chi}, {zeta}): c = {c}");
        assert!(dir.join("distribution.csv").is_file() && dir.join("distribution.json").is_file());
        // the condensate holds wealth but no agents
        let lorenz = last_row(&dir.join("lorenz.csv"));
        assert_eq!(lorenz[0].parse::<f64>().unwrap(), 1.0);
        assert!((lorenz[1].parse::<f64>().unwrap() - (1.0 - c)).abs() < 1e-12);
    }
}

#[test]
fn unconverged_steady_state_is_a_result() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("run");
    let out = run_in(&dir, &["steady", "--chi", "0.1", "--zeta", "0.2", "--max-steps", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    assert_eq!(json(dir.join("report.json"))["summary"]["converged"], false);
}

#[test]
fn steady_state_is_digest_reproducible_and_leaves_inputs_alone() {
    let tmp = TempDir::new().unwrap();
    let policy = tmp.path().join("policy.csv");
    std::fs::write(&policy, "w,chi\n0,0.3\n5,0.25\n50,0.2\n").unwrap();
    let before = std::fs::read(&policy).unwrap();
    let spec = format!("file:{}", policy.display());
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        run_in(dir, &["steady", "--policy", &spec, "--zeta", "0.1", "--nodes", "300"]);
    }
    let (ma, mb) = (json(a.join("manifest.json")), json(b.join("manifest.json")));
    assert_eq!(ma["outputs"], mb["outputs"]);
    assert_eq!(ma["inputs"].as_object().unwrap().len(), 1);
    assert_eq!(std::fs::read(&policy).unwrap(), before);
}

#[test]
fn output_root_comes_from_the_environment() {
    let tmp = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_awm"))
        .args(["tail", "--chi", "0.3", "--zeta", "0.1", "--w", "10"])
        .env("AWM_OUT", tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let dirs: Vec<_> = std::fs::read_dir(tmp.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(dirs.len(), 1);
    assert!(dirs[0].to_str().unwrap().starts_with("tail-"));
}

#[test]
fn tail_with_unit_moments() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("run");
    run_in(&dir, &["tail", "--chi", "0.3", "--zeta", "0.1", "--w", "10", "20"]);
    // f' = (chi - zeta) w / B_inf, integrated from the debt floor at 0
    let values = json(dir.join("tail.json"))["values"].clone();
    for (v, want) in values.as_array().unwrap().iter().zip([10.0, 40.0]) {
        assert!((num(&v["f"]) - want).abs() < 1e-9 * want, "{v}");
    }
    let dir = tmp.path().join("with_d");
    run_in(&dir, &["tail", "--chi", "0.3", "--zeta", "0.1", "--d", "-0.5", "--w", "10"]);
    assert!((num(&json(dir.join("tail.json"))["values"][0]["f"]) - 15.0).abs() < 1e-9 * 15.0);
}

#[test]
fn exponential_tail_inverts_to_a_flat_policy() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("run");
    let out = run_in(&dir, &["invert", "--tail", "exponential", "--zeta", "0.3"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("flat"));
    let report = json(dir.join("invert.json"));
    assert!((num(&report["flat"]) - 0.3).abs() < 1e-12);
    assert_eq!(report["catalogue"]["policy"]["kind"], "flat");
    let text = std::fs::read_to_string(dir.join("policy.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 200);
    for r in rows {
        let chi: f64 = r.split(',').nth(1).unwrap().parse().unwrap();
        assert!((chi - 0.3).abs() < 1e-12, "{r}");
    }
}

#[test]
fn pareto_family_flags_give_the_catalogue_row() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("run");
    run_in(&dir, &["invert", "--family", "pareto", "--alpha", "1"]);
    let report = json(dir.join("invert.json"));
    assert!(report["flat"].is_null());
    assert!(report["closed_form"].as_str().unwrap().contains("2 B_inf / w^2"));
    assert_eq!(report["catalogue"]["critical"], true);
    // unit moments, D = 0: chi(w) = zeta + 2 / w^2
    let text = std::fs::read_to_string(dir.join("policy.csv")).unwrap();
    for r in text.lines().skip(1) {
        let v: Vec<f64> = r.split(',').map(|x| x.parse().unwrap()).collect();
        let want = 1.0 + 2.0 / (v[0] * v[0]);
        assert!((v[1] - want).abs() < 1e-9 * want, "{r}");
    }
}

#[test]
fn log_tail_lies_outside_the_admissible_class() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("loglog");
    let out = run_in(&dir, &["check", "--tail", "loglog"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("outside_class"));
    let report = json(dir.join("check.json"));
    assert_eq!(report["verdict"], "outside_class");
    assert_eq!(report["assumptions"]["in_class"], false);
    let dir = tmp.path().join("gaussian");
    run_in(&dir, &["check", "--tail", "gaussian:sigma=2"]);
    assert_eq!(json(dir.join("check.json"))["verdict"], "satisfied");
}

#[test]
fn check_runs_the_reductions_on_a_steady_state() {
    let tmp = TempDir::new().unwrap();
    let steady = tmp.path().join("steady");
    run_in(&steady, &["steady", "--chi", "0.2", "--zeta", "0.1", "--nodes", "2000"]);
    let dist = steady.join("distribution.csv");
    let dir = tmp.path().join("check");
    run_in(
        &dir,
        &["check", "--tail", "gaussian", "--distribution", dist.to_str().unwrap(), "--chi", "0.2", "--zeta", "0.1"],
    );
    let report = json(dir.join("check.json"));
    assert_eq!(report["reduction"]["within_5_percent"], true, "{}", report["reduction"]["max_deviation"]);
}

#[test]
fn fit_recovers_greece() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("run");
    run_in(&dir, &["fit", "--synthetic", "1.944,2.000,0.650", "--label", "Greece"]);
    let f = json(dir.join("fit.json"));
    assert_eq!(f["label"], "Greece");
    assert!(num(&f["j"]) <= 1e-3);
    for (key, want) in [("chi_opt", 1.944), ("zeta_opt", 2.0), ("lambda_opt", 0.65)] {
        let got = num(&f[key]);
        assert!((got - want).abs() <= 0.05 * want, "{key}: {got} vs {want}");
    }
    assert!(dir.join("lorenz_data.csv").is_file() && dir.join("lorenz_model.csv").is_file());
}

#[test]
fn fit_result_does_not_depend_on_jobs() {
    let tmp = TempDir::new().unwrap();
    let fit = |jobs: &str| {
        let dir = tmp.path().join(jobs);
        let mut args = vec!["--jobs", jobs, "--run-dir", dir.to_str().unwrap()];
        args.extend(["fit", "--synthetic", "0.5,0.6,0.3", "--samples", "8", "--starts", "2", "--max-evals", "60"]);
        let out = awm(&args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(dir.join("fit.json")).unwrap()
    };
    assert_eq!(fit("1"), fit("8"));
}

#[test]
fn fit_reads_survey_and_lorenz_files() {
    let tmp = TempDir::new().unwrap();
    let survey = tmp.path().join("survey.csv");
    let mut text = String::from("wealth,weight\n");
    for i in 0..200 {
        text.push_str(&format!("{},{}\n", (i as f64 * 0.05).exp(), 1.0 + (i % 3) as f64));
    }
    std::fs::write(&survey, text).unwrap();
    let lorenz = tmp.path().join("curve.csv");
    std::fs::write(&lorenz, "F,L\n0,0\n0.25,0.05\n0.5,0.15\n0.75,0.35\n0.9,0.55\n1,1\n").unwrap();
    for (name, path) in [("survey", &survey), ("curve", &lorenz)] {
        let dir = tmp.path().join(format!("fit-{name}"));
        run_in(
            &dir,
            &["fit", "--data", path.to_str().unwrap(), "--samples", "6", "--starts", "1", "--max-evals", "40"],
        );
        let f = json(dir.join("fit.json"));
        assert_eq!(f["label"], name);
        assert!(num(&f["j"]).is_finite());
        let inputs = json(dir.join("manifest.json"))["inputs"].clone();
        assert_eq!(inputs.as_object().unwrap().len(), 1);
    }
}

#[test]
fn report_tabulates_fits_and_references() {
    let tmp = TempDir::new().unwrap();
    let fit_dir = tmp.path().join("fit");
    run_in(
        &fit_dir,
        &[
            "fit",
            "--synthetic",
            "0.5,0.6,0.3",
            "--samples",
            "6",
            "--starts",
            "1",
            "--max-evals",
            "40",
            "--label",
            "Mock",
        ],
    );
    let dir = tmp.path().join("report");
    run_in(&dir, &["report", fit_dir.join("fit.json").to_str().unwrap(), "--reference"]);
    let table = std::fs::read_to_string(dir.join("table.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "label,chi_opt,zeta_opt,lambda_opt,G_fit,avg_local_error_pct");
    assert_eq!(lines.len(), 16);
    assert!(lines[1].starts_with("Mock,"));
    assert!(lines.iter().any(|l| l.starts_with("Greece,1.944,2.000,0.650,0.553,")));
    let scatter = std::fs::read_to_string(dir.join("scatter.csv")).unwrap();
    assert!(scatter.starts_with("label,zeta_opt,chi_opt,chi_reference\n"));
    assert_eq!(scatter.lines().count(), 16);
}
