//! Experiment dispatch and report emission.
//!
//! Data outputs (CSV and optional JSON mirrors) are deterministic
//! functions of (config, seed) and are written atomically; the manifest
//! additionally records wall time, so only the data files are byte-stable
//! across reruns.

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{CliError, Result};
use replab_core::dims::dimension_report;
use replab_core::formats::{parse_class, parse_distribution};
use replab_core::harness::{
    empirical_list, empirical_stability, jump_probe, output_distribution, total_variation,
};
use replab_core::learners::{
    ClassErrorWrapper, ErmLearner, LearningRule, ListFromStable, MajorityBoost,
    RandomThresholdStable, StabilityParams,
};
use replab_core::model::{
    median_threshold_distribution, mix_with_point_mass, threshold_class, DomainPoint, Example,
    FiniteDistribution, HypothesisClass,
};
use replab_core::seed::RandomSeed;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const OUT_ENV: &str = "REPLAB_OUT";

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Directory against which relative `file:` specs are resolved.
    pub config_dir: PathBuf,
    pub seed_override: Option<u64>,
    pub include_failures: bool,
    pub json: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub direction: String,
    pub bound: f64,
    pub value: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment_id: String,
    pub kind: String,
    pub config_hash: String,
    pub version: String,
    pub seed: u64,
    pub wall_time_ms: u64,
    pub outputs: Vec<String>,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, PartialEq)]
enum Cell {
    Real(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Real(x) => fmt_real(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Real(x) => Some(*x),
            Cell::Int(i) => Some(*i as f64),
            Cell::Text(_) => None,
        }
    }
}

/// 12 significant digits, scientific, '.' separator: byte-stable across
/// platforms.
fn fmt_real(x: f64) -> String {
    format!("{x:.11e}")
}

struct ExperimentResult {
    header: String,
    csv_rows: Vec<String>,
    metrics: Vec<(String, Cell)>,
    trials: u64,
}

pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunManifest> {
    let started = Instant::now();
    let seed_value = match opts.seed_override {
        Some(s) => s,
        None => cfg.u64_or("seed", 0)?,
    };
    let seed = RandomSeed::new(seed_value);
    let result = match cfg.kind {
        ExperimentKind::Dims => run_dims(cfg, opts)?,
        ExperimentKind::Stability => run_stability(cfg, opts, seed)?,
        ExperimentKind::Listrep => run_listrep(cfg, opts, seed)?,
        ExperimentKind::Boost => run_boost(cfg, opts, seed)?,
        ExperimentKind::Reduction => run_reduction(cfg, opts, seed)?,
        ExperimentKind::Jumpprobe => run_jumpprobe(cfg, opts, seed)?,
    };

    let checks = evaluate_checks(cfg, &result)?;
    fs::create_dir_all(&opts.out_dir).map_err(|e| CliError::io(&opts.out_dir, e))?;

    let mut outputs = Vec::new();
    let csv_path = opts.out_dir.join(format!("{}.csv", cfg.id));
    let mut csv = String::new();
    csv.push_str(&result.header);
    csv.push('\n');
    for row in &result.csv_rows {
        csv.push_str(row);
        csv.push('\n');
    }
    write_atomic(&csv_path, csv.as_bytes())?;
    outputs.push(csv_path.to_string_lossy().into_owned());

    if opts.json {
        let json_path = opts.out_dir.join(format!("{}.json", cfg.id));
        let mut metrics = serde_json::Map::new();
        for (k, v) in &result.metrics {
            metrics.insert(
                k.clone(),
                match v {
                    Cell::Real(x) => serde_json::json!(fmt_real(*x)),
                    Cell::Int(i) => serde_json::json!(i),
                    Cell::Text(s) => serde_json::json!(s),
                },
            );
        }
        let doc = serde_json::json!({
            "experiment_id": cfg.id,
            "kind": cfg.kind.to_string(),
            "seed": seed_value,
            "trials": result.trials,
            "metrics": metrics,
        });
        let mut body = serde_json::to_string_pretty(&doc).expect("static shape");
        body.push('\n');
        write_atomic(&json_path, body.as_bytes())?;
        outputs.push(json_path.to_string_lossy().into_owned());
    }

    let manifest = RunManifest {
        experiment_id: cfg.id.clone(),
        kind: cfg.kind.to_string(),
        config_hash: cfg.content_hash(),
        version: VERSION.to_string(),
        seed: seed_value,
        wall_time_ms: started.elapsed().as_millis() as u64,
        outputs,
        checks,
    };
    let manifest_path = opts.out_dir.join(format!("{}.manifest.json", cfg.id));
    let mut body = serde_json::to_string_pretty(&manifest).expect("static shape");
    body.push('\n');
    write_atomic(&manifest_path, body.as_bytes())?;
    Ok(manifest)
}

fn evaluate_checks(cfg: &ExperimentConfig, result: &ExperimentResult) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (direction, metric, bound) in cfg.thresholds() {
        let value = result
            .metrics
            .iter()
            .find(|(k, _)| *k == metric)
            .and_then(|(_, v)| v.as_f64())
            .ok_or_else(|| {
                cfg.error_for(
                    &format!("{direction}_{metric}"),
                    format!("no numeric metric `{metric}` produced by this experiment"),
                )
            })?;
        let pass = if direction == "min" {
            value >= bound
        } else {
            value <= bound
        };
        checks.push(Check {
            name: metric,
            direction,
            bound,
            value,
            pass,
        });
    }
    Ok(checks)
}

fn metric_rows(cfg: &ExperimentConfig, result: &ExperimentResult, seed: u64) -> Vec<String> {
    result
        .metrics
        .iter()
        .map(|(k, v)| {
            format!(
                "{},{},{},{},{}",
                cfg.id,
                k,
                v.render(),
                result.trials,
                seed
            )
        })
        .collect()
}

fn finish_metric_style(
    cfg: &ExperimentConfig,
    metrics: Vec<(String, Cell)>,
    trials: u64,
    seed: u64,
) -> ExperimentResult {
    let mut result = ExperimentResult {
        header: "experiment_id,metric,value,trials,seed".to_string(),
        csv_rows: Vec::new(),
        metrics,
        trials,
    };
    result.csv_rows = metric_rows(cfg, &result, seed);
    result
}

fn resolve_path(opts: &RunOptions, p: &str) -> PathBuf {
    let path = Path::new(p);
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        opts.config_dir.join(path)
    }
}

fn load_class(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<HypothesisClass> {
    let spec = cfg.require("class")?;
    let bad = |r: String| cfg.error_for("class", r);
    if let Some(n) = spec.strip_prefix("threshold:") {
        let n: usize = n
            .parse()
            .map_err(|_| bad(format!("bad threshold size in `{spec}`")))?;
        return Ok(threshold_class(n)?);
    }
    if let Some(n) = spec.strip_prefix("full:") {
        let n: usize = n
            .parse()
            .map_err(|_| bad(format!("bad cube size in `{spec}`")))?;
        return Ok(HypothesisClass::full_cube(n)?);
    }
    if let Some(p) = spec.strip_prefix("file:") {
        let path = resolve_path(opts, p);
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        return Ok(parse_class(&text)?);
    }
    Err(bad(format!(
        "unknown class spec `{spec}` (expected threshold:N, full:N or file:PATH)"
    )))
}

fn load_distribution(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<FiniteDistribution> {
    let spec = cfg.require("distribution")?;
    let bad = |r: String| cfg.error_for("distribution", r);
    if let Some(m) = spec.strip_prefix("median:") {
        let m: usize = m
            .parse()
            .map_err(|_| bad(format!("bad median size in `{spec}`")))?;
        return Ok(median_threshold_distribution(m)?);
    }
    if let Some(rest) = spec.strip_prefix("point:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let parse = || -> Option<(usize, usize, bool)> {
            if parts.len() != 3 {
                return None;
            }
            let n = parts[0].parse().ok()?;
            let x = parts[1].parse().ok()?;
            let b = match parts[2] {
                "0" => false,
                "1" => true,
                _ => return None,
            };
            Some((n, x, b))
        };
        let (n, x, b) =
            parse().ok_or_else(|| bad(format!("expected point:N:x:b, got `{spec}`")))?;
        return Ok(FiniteDistribution::point_mass(n, Example::new(x, b))?);
    }
    if let Some(p) = spec.strip_prefix("file:") {
        let path = resolve_path(opts, p);
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        return Ok(parse_distribution(&text)?);
    }
    Err(bad(format!(
        "unknown distribution spec `{spec}` (expected median:M, point:N:x:b or file:PATH)"
    )))
}

fn build_learner(
    cfg: &ExperimentConfig,
    class: &HypothesisClass,
    epsilon: f64,
) -> Result<Box<dyn LearningRule>> {
    match cfg.str_or("learner", "stable") {
        "stable" => Ok(Box::new(RandomThresholdStable::new(class.clone(), epsilon)?)),
        "erm" => Ok(Box::new(ErmLearner::new(class.clone())?)),
        other => Err(cfg.error_for(
            "learner",
            format!("unknown learner `{other}` (expected stable or erm)"),
        )),
    }
}

fn require_epsilon(cfg: &ExperimentConfig) -> Result<f64> {
    cfg.require("epsilon")?;
    cfg.f64_or("epsilon", 0.0)
}

fn run_dims(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentResult> {
    let class = load_class(cfg, opts)?;
    let report = dimension_report(&class)?;
    let row = format!(
        "{},{},{},{},{}",
        cfg.id, report.vc, report.littlestone, report.threshold, report.bound_holds
    );
    Ok(ExperimentResult {
        header: "experiment_id,vc,littlestone,threshold,bound_holds".to_string(),
        csv_rows: vec![row],
        metrics: vec![
            ("vc".to_string(), Cell::Int(report.vc as i64)),
            ("littlestone".to_string(), Cell::Int(report.littlestone as i64)),
            ("threshold".to_string(), Cell::Int(report.threshold as i64)),
            (
                "bound_holds".to_string(),
                Cell::Int(report.bound_holds as i64),
            ),
        ],
        trials: 1,
    })
}

fn run_stability(
    cfg: &ExperimentConfig,
    opts: &RunOptions,
    seed: RandomSeed,
) -> Result<ExperimentResult> {
    let class = load_class(cfg, opts)?;
    let d = load_distribution(cfg, opts)?;
    let epsilon = require_epsilon(cfg)?;
    let trials = cfg.trials()?;
    let learner = build_learner(cfg, &class, epsilon)?;
    let n = cfg.u64_or("n", learner.sample_complexity(epsilon))?;
    let table = output_distribution(learner.as_ref(), &d, n, trials, seed)?;
    let report = empirical_stability(&table, &d, &class, epsilon, opts.include_failures)?;
    let metrics = vec![
        ("best_frequency".to_string(), Cell::Real(report.best_frequency)),
        ("best_loss".to_string(), Cell::Real(report.best_loss)),
        ("class_loss".to_string(), Cell::Real(report.class_loss)),
        ("failure_rate".to_string(), Cell::Real(report.failure_rate)),
        ("sample_size".to_string(), Cell::Int(n as i64)),
        (
            "best_hypothesis".to_string(),
            Cell::Text(
                report
                    .best_hypothesis
                    .map_or("-".to_string(), |h| h.to_string()),
            ),
        ),
    ];
    Ok(finish_metric_style(cfg, metrics, trials, seed.value()))
}

fn run_listrep(
    cfg: &ExperimentConfig,
    opts: &RunOptions,
    seed: RandomSeed,
) -> Result<ExperimentResult> {
    let class = load_class(cfg, opts)?;
    let d = load_distribution(cfg, opts)?;
    let epsilon = require_epsilon(cfg)?;
    let delta = cfg.f64_or("delta", 0.1)?;
    cfg.require("rho")?;
    let rho = cfg.f64_or("rho", 0.0)?;
    let trials = cfg.trials()?;
    let base = RandomThresholdStable::new(class.clone(), epsilon)?;
    let params = StabilityParams::derive(rho, epsilon, delta, &base, class.len())?;
    let list_bound = params.list_bound;
    let learner = ListFromStable::new(Box::new(base), params, class.clone())?;
    let n = learner.sample_complexity(epsilon);
    let table = output_distribution(&learner, &d, n, trials, seed)?;
    let report = empirical_list(&table, &d, &class, epsilon, delta, opts.include_failures)?;
    let max_list_frequency = table.max_frequency(opts.include_failures);
    let metrics = vec![
        ("list_size".to_string(), Cell::Int(report.list.len() as i64)),
        ("list_bound".to_string(), Cell::Int(list_bound as i64)),
        ("covered_mass".to_string(), Cell::Real(report.covered_mass)),
        ("failure_rate".to_string(), Cell::Real(report.failure_rate)),
        (
            "max_list_frequency".to_string(),
            Cell::Real(max_list_frequency),
        ),
        ("success".to_string(), Cell::Int(report.success as i64)),
        ("sample_size".to_string(), Cell::Int(n as i64)),
    ];
    Ok(finish_metric_style(cfg, metrics, trials, seed.value()))
}

fn run_boost(
    cfg: &ExperimentConfig,
    opts: &RunOptions,
    seed: RandomSeed,
) -> Result<ExperimentResult> {
    let class = load_class(cfg, opts)?;
    let d = load_distribution(cfg, opts)?;
    let epsilon = require_epsilon(cfg)?;
    let k = cfg.require_u64("k")?;
    if k == 0 {
        return Err(cfg.error_for("k", "must be at least 1"));
    }
    let trials = cfg.trials()?;
    let base = build_learner(cfg, &class, epsilon)?;
    let block = cfg.u64_or("n", base.sample_complexity(epsilon))?;
    let boosted = MajorityBoost::new(base, k)?;
    let n = k * block;
    let table = output_distribution(&boosted, &d, n, trials, seed)?;
    let report = empirical_stability(&table, &d, &class, epsilon, opts.include_failures)?;
    let metrics = vec![
        ("best_frequency".to_string(), Cell::Real(report.best_frequency)),
        ("best_loss".to_string(), Cell::Real(report.best_loss)),
        ("class_loss".to_string(), Cell::Real(report.class_loss)),
        ("failure_rate".to_string(), Cell::Real(report.failure_rate)),
        ("k".to_string(), Cell::Int(k as i64)),
        ("sample_size".to_string(), Cell::Int(n as i64)),
    ];
    Ok(finish_metric_style(cfg, metrics, trials, seed.value()))
}

fn run_reduction(
    cfg: &ExperimentConfig,
    opts: &RunOptions,
    seed: RandomSeed,
) -> Result<ExperimentResult> {
    let class = load_class(cfg, opts)?;
    let d = load_distribution(cfg, opts)?;
    let epsilon = require_epsilon(cfg)?;
    let gamma_prime = cfg.f64_or("gamma_prime", 0.3)?;
    let x_star = cfg.require_u64("x_star")? as usize;
    cfg.require("b_star")?;
    let b_star = match cfg.raw("b_star") {
        Some("0") => false,
        Some("1") => true,
        other => {
            return Err(cfg.error_for(
                "b_star",
                format!("expected 0 or 1, got `{}`", other.unwrap_or("")),
            ))
        }
    };
    let trials = cfg.trials()?;
    let inner = build_learner(cfg, &class, epsilon)?;
    let n = cfg.u64_or("n", inner.sample_complexity(epsilon))?;
    let wrapper = ClassErrorWrapper::new(inner, DomainPoint(x_star), b_star, gamma_prime)?;
    let mixed = mix_with_point_mass(&d, DomainPoint(x_star), b_star, gamma_prime)?;
    let wrapped_table = output_distribution(&wrapper, &d, n, trials, seed)?;
    let direct = build_learner(cfg, &class, epsilon)?;
    let direct_table =
        output_distribution(direct.as_ref(), &mixed, n, trials, seed.derive("direct", 0))?;
    let tv = total_variation(&wrapped_table, &direct_table);
    let report = empirical_stability(&wrapped_table, &mixed, &class, epsilon, opts.include_failures)?;
    let star_consistent = report
        .best_hypothesis
        .as_ref()
        .map(|h| h.label(DomainPoint(x_star)) == b_star);
    let metrics = vec![
        ("tv_distance".to_string(), Cell::Real(tv)),
        ("best_frequency".to_string(), Cell::Real(report.best_frequency)),
        ("best_loss".to_string(), Cell::Real(report.best_loss)),
        ("class_loss".to_string(), Cell::Real(report.class_loss)),
        ("failure_rate".to_string(), Cell::Real(report.failure_rate)),
        (
            "star_consistent".to_string(),
            Cell::Int(star_consistent.map_or(-1, i64::from)),
        ),
        ("sample_size".to_string(), Cell::Int(n as i64)),
    ];
    Ok(finish_metric_style(cfg, metrics, trials, seed.value()))
}

fn run_jumpprobe(
    cfg: &ExperimentConfig,
    opts: &RunOptions,
    seed: RandomSeed,
) -> Result<ExperimentResult> {
    let m = cfg.require_u64("m")?;
    let n = cfg.require_u64("n")?;
    let trials = cfg.trials()?;
    let epsilon = cfg.f64_or("epsilon", 0.1)?;
    let class = match cfg.raw("class") {
        Some(_) => load_class(cfg, opts)?,
        None => threshold_class(m as usize)?,
    };
    let learner = build_learner(cfg, &class, epsilon)?;
    let report = jump_probe(learner.as_ref(), m, n, trials, seed)?;
    let mut metrics = vec![
        ("t0".to_string(), Cell::Int(report.t0 as i64)),
        (
            "max_adjacent_gap".to_string(),
            Cell::Real(report.max_adjacent_gap),
        ),
        (
            "gap_location".to_string(),
            Cell::Int(report.gap_location as i64),
        ),
    ];
    for k in 1..=(n as usize + 1) {
        metrics.push((format!("p_{k}"), Cell::Real(report.p(k))));
        metrics.push((
            format!("cell_count_{k}"),
            Cell::Int(report.cell_counts[k - 1] as i64),
        ));
    }
    Ok(finish_metric_style(cfg, metrics, trials, seed.value()))
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))?;
    Ok(())
}

/// Concatenates per-experiment CSVs (repeating headers only on schema
/// change) and renders a pass/fail summary of the configured checks.
pub fn emit_report(manifests: &[RunManifest], out_dir: &Path) -> Result<String> {
    if manifests.is_empty() {
        return Err(CliError::Manifest {
            path: out_dir.to_path_buf(),
            reason: "no manifests to report on".to_string(),
        });
    }
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let mut combined = String::new();
    let mut last_header: Option<String> = None;
    let mut summary = String::new();
    let mut failures = 0usize;
    for m in manifests {
        for out in &m.outputs {
            if !out.ends_with(".csv") {
                continue;
            }
            let path = Path::new(out);
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let mut lines = text.lines();
            let header = lines.next().unwrap_or("").to_string();
            if last_header.as_deref() != Some(&header) {
                combined.push_str(&header);
                combined.push('\n');
                last_header = Some(header);
            }
            for line in lines {
                combined.push_str(line);
                combined.push('\n');
            }
        }
        writeln!(summary, "{} ({}):", m.experiment_id, m.kind).unwrap();
        if m.checks.is_empty() {
            summary.push_str("  no thresholds configured\n");
        }
        for c in &m.checks {
            if !c.pass {
                failures += 1;
            }
            writeln!(
                summary,
                "  [{}] {} {} {} (observed {})",
                if c.pass { "pass" } else { "FAIL" },
                c.name,
                if c.direction == "min" { ">=" } else { "<=" },
                fmt_real(c.bound),
                fmt_real(c.value),
            )
            .unwrap();
        }
    }
    writeln!(
        summary,
        "{} experiment(s), {} failed check(s)",
        manifests.len(),
        failures
    )
    .unwrap();
    write_atomic(&out_dir.join("combined.csv"), combined.as_bytes())?;
    write_atomic(&out_dir.join("summary.txt"), summary.as_bytes())?;
    Ok(summary)
}

pub fn load_manifest(path: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Manifest {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}
