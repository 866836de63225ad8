//! Acceptance gate: one test per criterion, each printing a pass/fail
//! line. Statistical checks use the pinned seeds and tolerances from the
//! bench definitions.

use rand::Rng;
use replab_core::dims::{
    check_log_threshold_bound, littlestone_dimension, oracle::deepest_shattered_tree,
    threshold_dimension, vc_dimension,
};
use replab_core::harness::{
    empirical_list, empirical_stability, jump_probe, output_distribution, total_variation,
    ListReport, OutputFrequencyTable, StabilityReport,
};
use replab_core::learners::{
    agnostic_from_realizable, stability_rho, ClassErrorWrapper, ConstantLearner, ErmLearner,
    LearnerOutput, LearningRule, ListFromStable, MajorityBoost, MixtureLearner,
    RandomThresholdStable, StabilityParams, ThreeWayRule,
};
use replab_core::model::{
    median_threshold_distribution, mix_with_point_mass, population_loss, threshold_class,
    DomainPoint, Example, FiniteDistribution, Hypothesis, HypothesisClass, Sample,
};
use replab_core::seed::RandomSeed;
use std::sync::OnceLock;
use std::time::Instant;

fn verdict(criterion: u32, desc: &str, failures: Vec<String>) {
    if failures.is_empty() {
        println!("criterion {criterion}: PASS - {desc}");
    } else {
        println!("criterion {criterion}: FAIL - {desc}");
    }
    assert!(failures.is_empty(), "criterion {criterion}: {failures:?}");
}

fn random_class(rng: &mut impl Rng) -> HypothesisClass {
    let n = rng.random_range(1..=6);
    let m = rng.random_range(1..=20);
    let members = (0..m)
        .map(|_| Hypothesis::from_bits((0..n).map(|_| rng.random()).collect()))
        .collect();
    HypothesisClass::new(n, members).unwrap()
}

#[test]
fn criterion_01_dimension_oracle_equivalence() {
    let started = Instant::now();
    let mut rng = RandomSeed::new(101).rng();
    let mut failures = Vec::new();
    for i in 0..500 {
        let c = random_class(&mut rng);
        let ldim = littlestone_dimension(&c).unwrap();
        let (oracle, _) = deepest_shattered_tree(&c).unwrap();
        if ldim != oracle {
            failures.push(format!("class {i}: ldim {ldim} != oracle {oracle}"));
        }
        let vc = vc_dimension(&c).unwrap();
        if vc > ldim {
            failures.push(format!("class {i}: vc {vc} > ldim {ldim}"));
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    if elapsed > 60.0 {
        failures.push(format!("runtime {elapsed:.1}s > 60s"));
    }
    verdict(1, "Littlestone matches brute-force oracle, vc <= ldim, on 500 random classes", failures);
}

#[test]
fn criterion_02_threshold_staircase_exactness() {
    let mut failures = Vec::new();
    for n in 1..=8usize {
        let c = threshold_class(n).unwrap();
        let td = threshold_dimension(&c).unwrap();
        if td != n as i32 {
            failures.push(format!("threshold_dimension(threshold_class({n})) = {td}"));
        }
        let want = ((n + 1) as u32).ilog2() as i32;
        let ldim = littlestone_dimension(&c).unwrap();
        if ldim != want {
            failures.push(format!("ldim(threshold_class({n})) = {ldim}, want {want}"));
        }
        let (oracle, _) = deepest_shattered_tree(&c).unwrap();
        if oracle != want {
            failures.push(format!("oracle ldim(threshold_class({n})) = {oracle}"));
        }
    }
    let mut rng = RandomSeed::new(102).rng();
    for i in 0..500 {
        let c = random_class(&mut rng);
        if !check_log_threshold_bound(&c).unwrap() {
            failures.push(format!("log-threshold bound violated on class {i}"));
        }
    }
    verdict(2, "threshold staircase dimensions exact; log bound on 500 random classes", failures);
}

fn stability_bench_class() -> HypothesisClass {
    threshold_class(7).unwrap()
}

fn stability_bench_distribution() -> FiniteDistribution {
    median_threshold_distribution(7).unwrap()
}

fn bench3() -> &'static (StabilityReport, f64) {
    static BENCH: OnceLock<(StabilityReport, f64)> = OnceLock::new();
    BENCH.get_or_init(|| {
        let started = Instant::now();
        let class = stability_bench_class();
        let d = stability_bench_distribution();
        let learner = RandomThresholdStable::new(class.clone(), 0.2).unwrap();
        let n = learner.sample_complexity(0.2);
        let table = output_distribution(&learner, &d, n, 2000, RandomSeed::new(11)).unwrap();
        let report = empirical_stability(&table, &d, &class, 0.2, false).unwrap();
        (report, started.elapsed().as_secs_f64())
    })
}

#[test]
fn criterion_03_finite_class_agnostic_stability() {
    let (report, elapsed) = bench3();
    let mut failures = Vec::new();
    if report.best_frequency < 0.03125 {
        failures.push(format!("best_frequency {} < 0.03125", report.best_frequency));
    }
    if !(report.best_loss <= report.class_loss + 0.2) {
        failures.push(format!(
            "best excess loss {} > 0.2",
            report.best_loss - report.class_loss
        ));
    }
    if *elapsed > 30.0 {
        failures.push(format!("runtime {elapsed:.1}s > 30s"));
    }
    verdict(3, "stable learner bench: best_frequency >= 1/(4|H|), excess <= eps", failures);
}

struct Bench4 {
    table: OutputFrequencyTable,
    report: ListReport,
    list_bound: u64,
    elapsed: f64,
}

fn bench4() -> &'static Bench4 {
    static BENCH: OnceLock<Bench4> = OnceLock::new();
    BENCH.get_or_init(|| {
        let rho = bench3().0.best_frequency;
        let started = Instant::now();
        let class = stability_bench_class();
        let d = stability_bench_distribution();
        let base = RandomThresholdStable::new(class.clone(), 0.2).unwrap();
        let params = StabilityParams::derive(rho, 0.2, 0.1, &base, class.len()).unwrap();
        let list_bound = params.list_bound;
        let learner = ListFromStable::new(Box::new(base), params, class.clone()).unwrap();
        let n = learner.sample_complexity(0.2);
        let table = output_distribution(&learner, &d, n, 1000, RandomSeed::new(11)).unwrap();
        let report = empirical_list(&table, &d, &class, 0.2, 0.1, false).unwrap();
        Bench4 {
            table,
            report,
            list_bound,
            elapsed: started.elapsed().as_secs_f64(),
        }
    })
}

#[test]
fn criterion_04_stability_to_list_replicability() {
    let b = bench4();
    let d = stability_bench_distribution();
    let class = stability_bench_class();
    let opt = replab_core::model::class_loss(&class, &d).unwrap();
    let mut failures = Vec::new();
    if b.report.failure_rate > 0.15 {
        failures.push(format!("failure_rate {}", b.report.failure_rate));
    }
    if b.report.list.len() as u64 > b.list_bound {
        failures.push(format!(
            "list size {} > bound {}",
            b.report.list.len(),
            b.list_bound
        ));
    }
    if b.report.covered_mass < 0.9 {
        failures.push(format!("covered_mass {}", b.report.covered_mass));
    }
    for h in &b.report.list {
        let excess = population_loss(h, &d).unwrap() - opt;
        if excess > 0.2 {
            failures.push(format!("list member {h} excess {excess}"));
        }
    }
    if b.elapsed > 300.0 {
        failures.push(format!("runtime {:.1}s > 300s", b.elapsed));
    }
    verdict(4, "list_from_stable bench: short low-loss list covers non-failure mass", failures);
}

#[test]
fn criterion_05_list_to_stability_pigeonhole() {
    let b = bench4();
    let (eff, denom) = b.table.effective(false);
    let max_list_freq = b
        .report
        .list
        .iter()
        .map(|h| {
            let key = h.to_string();
            eff.get(key.as_str()).copied().unwrap_or(0) as f64 / denom as f64
        })
        .fold(0.0f64, f64::max);
    let bound = b.report.covered_mass / b.list_bound as f64 - 0.02;
    let mut failures = Vec::new();
    if max_list_freq < bound {
        failures.push(format!("max list frequency {max_list_freq} < {bound}"));
    }
    verdict(5, "pigeonhole: max list frequency >= covered/L - 0.02", failures);
}

#[test]
fn criterion_06_majority_booster() {
    // base outputs two in-list hypotheses at 0.47 each and one out-of-list
    // hypothesis at 0.06
    let list = [
        Hypothesis::parse("0000").unwrap(),
        Hypothesis::parse("0011").unwrap(),
    ];
    let outcomes = vec![
        (list[0].clone(), 0.47),
        (list[1].clone(), 0.47),
        (Hypothesis::parse("1111").unwrap(), 0.06),
    ];
    let d = FiniteDistribution::point_mass(4, Example::new(0, false)).unwrap();
    let out_of_list = |k: u64| -> f64 {
        let base = MixtureLearner::new(outcomes.clone()).unwrap();
        let boosted = MajorityBoost::new(Box::new(base), k).unwrap();
        let table =
            output_distribution(&boosted, &d, k, 2000, RandomSeed::new(29 + k)).unwrap();
        let in_list: u64 = list
            .iter()
            .map(|h| table.counts.get(&h.to_string()).copied().unwrap_or(0))
            .sum();
        (table.trials - in_list) as f64 / table.trials as f64
    };
    let (o1, o5, o25) = (out_of_list(1), out_of_list(5), out_of_list(25));
    let mut failures = Vec::new();
    if (o1 - 0.06).abs() > 0.02 {
        failures.push(format!("base out-of-list {o1} not ~0.06"));
    }
    if !(o1 >= o5 && o5 >= o25) {
        failures.push(format!("not nonincreasing: {o1} {o5} {o25}"));
    }
    if o25 > o1 / 2.0 {
        failures.push(format!("k=25 rate {o25} > half of k=1 rate {o1}"));
    }
    verdict(6, "boosting drives out-of-list frequency down", failures);
}

#[test]
fn criterion_07_class_error_reduction() {
    let class = HypothesisClass::full_cube(2).unwrap();
    let d = FiniteDistribution::uniform(
        2,
        vec![Example::new(0, true), Example::new(1, false)],
    )
    .unwrap();
    let (x_star, b_star, gamma_prime, n, trials) = (DomainPoint(0), true, 0.3, 3, 20000);
    let seed = RandomSeed::new(37);
    let inner = RandomThresholdStable::new(class.clone(), 0.2).unwrap();
    let wrapper = ClassErrorWrapper::new(Box::new(inner), x_star, b_star, gamma_prime).unwrap();
    let wrapped_table = output_distribution(&wrapper, &d, n, trials, seed).unwrap();
    let mixed = mix_with_point_mass(&d, x_star, b_star, gamma_prime).unwrap();
    let direct = RandomThresholdStable::new(class.clone(), 0.2).unwrap();
    let direct_table =
        output_distribution(&direct, &mixed, n, trials, seed.derive("direct", 0)).unwrap();
    let tv = total_variation(&wrapped_table, &direct_table);
    let mut failures = Vec::new();
    if tv > 0.03 {
        failures.push(format!("tv distance {tv} > 0.03"));
    }
    for eps in [0.05, 0.1, 0.2, 0.3] {
        let report = empirical_stability(&wrapped_table, &mixed, &class, eps, false).unwrap();
        match report.best_hypothesis {
            Some(h) if h.label(x_star) == b_star => {}
            Some(h) => failures.push(format!("eps {eps}: best {h} disagrees at x*")),
            None => failures.push(format!("eps {eps}: no best hypothesis")),
        }
    }
    verdict(7, "wrapper matches mixed-distribution law; best hypothesis fixes (x*, b*)", failures);
}

#[test]
fn criterion_08_three_way_rule() {
    // singleton class mislabeling every atom: class_loss = 1 >= 2/3
    let class = HypothesisClass::new(3, vec![Hypothesis::parse("010").unwrap()]).unwrap();
    let d = FiniteDistribution::uniform(
        3,
        vec![
            Example::new(0, true),
            Example::new(1, false),
            Example::new(2, true),
        ],
    )
    .unwrap();
    let mut failures = Vec::new();
    let opt = replab_core::model::class_loss(&class, &d).unwrap();
    if opt < 2.0 / 3.0 {
        failures.push(format!("bench class_loss {opt} < 2/3"));
    }
    let inner = ErmLearner::new(class).unwrap();
    let rule = ThreeWayRule::new(Box::new(inner), 3);
    let table = output_distribution(&rule, &d, 5, 3000, RandomSeed::new(41)).unwrap();
    let good = [Hypothesis::all_zeros(3), Hypothesis::all_ones(3)]
        .into_iter()
        .any(|h| {
            let freq =
                table.counts.get(&h.to_string()).copied().unwrap_or(0) as f64 / 3000.0;
            freq >= 0.30 && population_loss(&h, &d).unwrap() <= 0.5
        });
    if !good {
        failures.push(format!(
            "no constant hypothesis with frequency >= 0.30 and loss <= 1/2: {:?}",
            table.counts
        ));
    }
    verdict(8, "three-way rule: a constant hypothesis is frequent and halfway accurate", failures);
}

#[test]
fn criterion_09_jump_probe() {
    let class = threshold_class(64).unwrap();
    let stable = RandomThresholdStable::new(class.clone(), 0.1).unwrap();
    let report = jump_probe(&stable, 64, 8, 4000, RandomSeed::new(31)).unwrap();
    let mut failures = Vec::new();
    if report.p(1) > 0.2 {
        failures.push(format!("p[1] = {}", report.p(1)));
    }
    if report.p(9) < 0.8 {
        failures.push(format!("p[9] = {}", report.p(9)));
    }
    if report.max_adjacent_gap < 1.0 / 16.0 {
        failures.push(format!("max gap {}", report.max_adjacent_gap));
    }
    let erm = ErmLearner::new(class).unwrap();
    let baseline = jump_probe(&erm, 64, 8, 4000, RandomSeed::new(32)).unwrap();
    for c in 1..9 {
        if baseline.p(c + 1) < baseline.p(c) - 0.05 {
            failures.push(format!(
                "ERM baseline not monotone at {c}: {} -> {}",
                baseline.p(c),
                baseline.p(c + 1)
            ));
        }
    }
    verdict(9, "jump probe: low start, high end, adjacent gap >= 1/16", failures);
}

struct FixedComplexity(u64);

impl LearningRule for FixedComplexity {
    fn run(&self, _sample: &Sample, _seed: RandomSeed) -> replab_core::Result<LearnerOutput> {
        ConstantLearner::new(Hypothesis::all_zeros(1)).run(_sample, _seed)
    }

    fn sample_complexity(&self, _epsilon: f64) -> u64 {
        self.0
    }
}

#[test]
fn criterion_10_rho_arithmetic() {
    let mut failures = Vec::new();
    for (d, n, want) in [
        (0u32, 1u64, 1.0 / 16.0),
        (1, 3, 1.0 / 1024.0),
        (2, 5, 1.0 / 98304.0),
    ] {
        if stability_rho(d, n) != want {
            failures.push(format!("stability_rho({d}, {n}) = {}", stability_rho(d, n)));
        }
        let (_, rho) = agnostic_from_realizable(Box::new(FixedComplexity(n)), d, 0.2).unwrap();
        if rho != want {
            failures.push(format!("agnostic_from_realizable rho {rho} for (d={d}, n={n})"));
        }
    }
    verdict(10, "rho formula exact at (0,1), (1,3), (2,5)", failures);
}

#[test]
fn criterion_11_reproducibility() {
    use std::fs;
    use std::process::Command;

    let bin = env!("CARGO_BIN_EXE_replab");
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/suite.cfg");
    let mut failures = Vec::new();
    let mut outputs: Vec<Vec<(String, Vec<u8>)>> = Vec::new();
    for pass in ["a", "b"] {
        let dir = std::env::temp_dir().join(format!(
            "replab-acceptance-{pass}-{}",
            std::process::id()
        ));
        let _ = fs::remove_dir_all(&dir);
        fs::create_dir_all(&dir).unwrap();
        for kind in ["dims", "stability", "listrep", "boost", "reduction", "jumpprobe"] {
            let out = Command::new(bin)
                .args([kind, "--config", config, "--out", dir.to_str().unwrap(), "--json"])
                .output()
                .unwrap();
            if !out.status.success() {
                failures.push(format!(
                    "{kind} failed: {}",
                    String::from_utf8_lossy(&out.stderr)
                ));
            }
        }
        let manifests: Vec<String> = fs::read_dir(&dir)
            .unwrap()
            .filter_map(|e| {
                let p = e.unwrap().path();
                p.to_str()
                    .filter(|s| s.ends_with(".manifest.json"))
                    .map(String::from)
            })
            .collect();
        let mut args = vec!["report", "--out", dir.to_str().unwrap()];
        let mut sorted = manifests.clone();
        sorted.sort();
        args.extend(sorted.iter().map(String::as_str));
        let out = Command::new(bin).args(&args).output().unwrap();
        if !out.status.success() {
            failures.push(format!(
                "report failed: {}",
                String::from_utf8_lossy(&out.stderr)
            ));
        }
        // the manifest carries wall time; the data outputs are the
        // byte-stability contract
        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(&dir)
            .unwrap()
            .filter_map(|e| {
                let p = e.unwrap().path();
                let name = p.file_name().unwrap().to_string_lossy().into_owned();
                if name.ends_with(".manifest.json") {
                    return None;
                }
                if name.ends_with(".csv") || name.ends_with(".json") || name.ends_with(".txt") {
                    Some((name, fs::read(&p).unwrap()))
                } else {
                    None
                }
            })
            .collect();
        files.sort();
        outputs.push(files);
        fs::remove_dir_all(&dir).unwrap();
    }
    let names: Vec<&String> = outputs[0].iter().map(|(n, _)| n).collect();
    if names.is_empty() {
        failures.push("suite produced no data outputs".to_string());
    }
    if outputs[0] != outputs[1] {
        for ((n1, b1), (_, b2)) in outputs[0].iter().zip(&outputs[1]) {
            if b1 != b2 {
                failures.push(format!("{n1} differs between runs"));
            }
        }
        if outputs[0].len() != outputs[1].len() {
            failures.push("output file sets differ".to_string());
        }
    }
    verdict(11, "suite rerun is byte-identical on every CSV/JSON output", failures);
}
