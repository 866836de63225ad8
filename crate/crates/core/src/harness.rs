//! Monte Carlo certification: output-distribution estimation, empirical
//! stability and list metrics, uniform-convergence gaps, and the
//! order-statistic jump probe.
//!
//! Trials are independent with derived seeds and merge by commutative
//! count addition, so reports are deterministic functions of the inputs
//! and the master seed regardless of scheduling.

use crate::learners::LearningRule;
use crate::model::{
    class_loss, draw_sample, empirical_loss, population_loss, DomainPoint, Example,
    FiniteDistribution, Hypothesis, HypothesisClass, Sample,
};
use crate::seed::RandomSeed;
use crate::{Error, Result};
use rand::Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;

/// Empirical output distribution of a learner: exact counts per serialized
/// hypothesis, plus which trials raised the failure flag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputFrequencyTable {
    pub trials: u64,
    /// All outputs, failed or not; values sum to `trials`.
    pub counts: BTreeMap<String, u64>,
    /// The failure-flagged subset of `counts`.
    pub failed_counts: BTreeMap<String, u64>,
    pub failure_flags: Vec<bool>,
}

impl OutputFrequencyTable {
    pub fn total_failed(&self) -> u64 {
        self.failed_counts.values().sum()
    }

    pub fn failure_rate(&self) -> f64 {
        self.total_failed() as f64 / self.trials as f64
    }

    /// Counts and denominator under the chosen failure policy: with
    /// `include_failures` everything counts against `trials`, otherwise
    /// failed outputs are dropped and the denominator shrinks to the
    /// non-failed trial count.
    pub fn effective(&self, include_failures: bool) -> (BTreeMap<&str, u64>, u64) {
        let mut eff: BTreeMap<&str, u64> = BTreeMap::new();
        for (k, &c) in &self.counts {
            let c = if include_failures {
                c
            } else {
                c - self.failed_counts.get(k).copied().unwrap_or(0)
            };
            if c > 0 {
                eff.insert(k, c);
            }
        }
        let denom = if include_failures {
            self.trials
        } else {
            self.trials - self.total_failed()
        };
        (eff, denom)
    }

    /// Largest frequency in the table under the given failure policy.
    pub fn max_frequency(&self, include_failures: bool) -> f64 {
        let (eff, denom) = self.effective(include_failures);
        if denom == 0 {
            return 0.0;
        }
        eff.values().copied().max().unwrap_or(0) as f64 / denom as f64
    }
}

/// Runs `trials` independent `(draw, learn)` pairs with derived seeds.
pub fn output_distribution(
    learner: &dyn LearningRule,
    d: &FiniteDistribution,
    n: u64,
    trials: u64,
    seed: RandomSeed,
) -> Result<OutputFrequencyTable> {
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    let outputs: Vec<(String, bool)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let sample = draw_sample(d, n, seed.derive("sample", i))?;
            let out = learner.run(&sample, seed.derive("learner", i))?;
            Ok((out.hypothesis.to_string(), out.failed))
        })
        .collect::<Result<_>>()?;
    let mut counts = BTreeMap::new();
    let mut failed_counts = BTreeMap::new();
    let mut failure_flags = Vec::with_capacity(outputs.len());
    for (key, failed) in outputs {
        if failed {
            *failed_counts.entry(key.clone()).or_insert(0) += 1;
        }
        *counts.entry(key).or_insert(0) += 1;
        failure_flags.push(failed);
    }
    Ok(OutputFrequencyTable {
        trials,
        counts,
        failed_counts,
        failure_flags,
    })
}

/// Total variation distance between the output laws of two tables
/// (failures included; each table uses its own trial count).
pub fn total_variation(a: &OutputFrequencyTable, b: &OutputFrequencyTable) -> f64 {
    let mut keys: Vec<&String> = a.counts.keys().chain(b.counts.keys()).collect();
    keys.sort();
    keys.dedup();
    0.5 * keys
        .iter()
        .map(|k| {
            let pa = a.counts.get(*k).copied().unwrap_or(0) as f64 / a.trials as f64;
            let pb = b.counts.get(*k).copied().unwrap_or(0) as f64 / b.trials as f64;
            (pa - pb).abs()
        })
        .sum::<f64>()
}

/// Certificate for the stability inequality: the most frequent output
/// among those with population loss within `epsilon` of the class loss.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub epsilon: f64,
    pub best_hypothesis: Option<Hypothesis>,
    pub best_frequency: f64,
    /// Population loss of the best hypothesis; NaN when none qualified.
    pub best_loss: f64,
    pub class_loss: f64,
    pub failure_rate: f64,
}

pub fn empirical_stability(
    table: &OutputFrequencyTable,
    d: &FiniteDistribution,
    class: &HypothesisClass,
    epsilon: f64,
    include_failures: bool,
) -> Result<StabilityReport> {
    let opt = class_loss(class, d)?;
    let (eff, denom) = table.effective(include_failures);
    let mut best: Option<(Hypothesis, u64, f64)> = None;
    for (key, &c) in &eff {
        let h = Hypothesis::parse(key)?;
        let loss = population_loss(&h, d)?;
        if loss > opt + epsilon {
            continue;
        }
        // keys iterate in canonical order, so strict improvement keeps
        // the canonical-first tie-break
        if best.as_ref().map_or(true, |&(_, bc, _)| c > bc) {
            best = Some((h, c, loss));
        }
    }
    let (best_hypothesis, best_frequency, best_loss) = match best {
        Some((h, c, loss)) if denom > 0 => (Some(h), c as f64 / denom as f64, loss),
        _ => (None, 0.0, f64::NAN),
    };
    Ok(StabilityReport {
        epsilon,
        best_hypothesis,
        best_frequency,
        best_loss,
        class_loss: opt,
        failure_rate: table.failure_rate(),
    })
}

/// Greedy minimal list of low-excess-loss hypotheses covering mass
/// `1 - delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct ListReport {
    pub epsilon: f64,
    pub delta: f64,
    pub list: Vec<Hypothesis>,
    pub covered_mass: f64,
    pub success: bool,
    pub failure_rate: f64,
}

pub fn empirical_list(
    table: &OutputFrequencyTable,
    d: &FiniteDistribution,
    class: &HypothesisClass,
    epsilon: f64,
    delta: f64,
    include_failures: bool,
) -> Result<ListReport> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::param("delta", "must lie in [0, 1]"));
    }
    let opt = class_loss(class, d)?;
    let (eff, denom) = table.effective(include_failures);
    let mut candidates: Vec<(Hypothesis, u64)> = Vec::new();
    for (key, &c) in &eff {
        let h = Hypothesis::parse(key)?;
        if population_loss(&h, d)? <= opt + epsilon {
            candidates.push((h, c));
        }
    }
    // decreasing frequency, canonical order within ties (stable sort over
    // the already-canonical candidate order)
    candidates.sort_by(|a, b| b.1.cmp(&a.1));
    let mut list = Vec::new();
    let mut covered = 0u64;
    let target = 1.0 - delta;
    for (h, c) in candidates {
        if denom > 0 && covered as f64 / denom as f64 >= target {
            break;
        }
        covered += c;
        list.push(h);
    }
    let covered_mass = if denom == 0 {
        0.0
    } else {
        covered as f64 / denom as f64
    };
    // delta = 1 is covered by the empty list
    if target <= 0.0 {
        list.clear();
    }
    Ok(ListReport {
        epsilon,
        delta,
        list,
        covered_mass: if target <= 0.0 { 0.0 } else { covered_mass },
        success: target <= 0.0 || covered_mass >= target,
        failure_rate: table.failure_rate(),
    })
}

/// Per-trial sup over the class of |empirical - population| loss.
pub fn uniform_convergence_gap(
    class: &HypothesisClass,
    d: &FiniteDistribution,
    n: u64,
    trials: u64,
    seed: RandomSeed,
) -> Result<Vec<f64>> {
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    let pops: Vec<f64> = class
        .members()
        .iter()
        .map(|h| population_loss(h, d))
        .collect::<Result<_>>()?;
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let s = draw_sample(d, n, seed.derive("ucg", i))?;
            let mut sup: f64 = 0.0;
            for (h, &p) in class.members().iter().zip(&pops) {
                sup = sup.max((empirical_loss(h, &s)? - p).abs());
            }
            Ok(sup)
        })
        .collect()
}

/// `1 + |{r in R : r <= x}|` for a sorted nonempty point set `R`.
pub fn ord_statistic(r: &[DomainPoint], x: DomainPoint) -> Result<usize> {
    if r.is_empty() {
        return Err(Error::EmptySample);
    }
    debug_assert!(r.windows(2).all(|w| w[0] < w[1]), "R must be sorted");
    Ok(1 + r.partition_point(|&p| p <= x))
}

/// Order-cell label frequencies for a learner trained on threshold-labeled
/// point sets.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpProbeReport {
    pub n: u64,
    pub t0: u64,
    /// `p[k - 1]` estimates the label-1 frequency at order `k`, for
    /// `k in [1, n + 1]`; NaN for cells never realized.
    pub p: Vec<f64>,
    /// Trials in which each order cell contained an available probe point.
    pub cell_counts: Vec<u64>,
    pub max_adjacent_gap: f64,
    /// Order index `c` attaining `|p[c+1] - p[c]| = max_adjacent_gap`.
    pub gap_location: usize,
}

impl JumpProbeReport {
    /// Label-1 frequency at order `k` (1-based).
    pub fn p(&self, k: usize) -> f64 {
        self.p[k - 1]
    }
}

/// Estimates the per-order label frequencies of the proof's threshold
/// instance: per trial, draws `n` distinct points from `[m]`, labels them
/// 0 below the `t0 = n/2`-th point and 1 from it on, trains `learner`,
/// then queries one uniformly random unused point from each order cell.
pub fn jump_probe(
    learner: &dyn LearningRule,
    m: u64,
    n: u64,
    trials: u64,
    seed: RandomSeed,
) -> Result<JumpProbeReport> {
    if n == 0 || n % 2 != 0 {
        return Err(Error::param("n", "must be positive and even"));
    }
    if m < 4 * n {
        return Err(Error::param("m", "domain must satisfy m >= 4n"));
    }
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    let t0 = n / 2;
    let cells = (n + 1) as usize;
    let per_trial: Vec<(Vec<u64>, Vec<u64>)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.derive("probe", i).rng();
            let r = draw_distinct_sorted(&mut rng, m, n);
            let sample = Sample::from_examples(
                r.iter()
                    .enumerate()
                    .map(|(j, &x)| Example::new(x as usize, j as u64 + 1 >= t0))
                    .collect(),
            );
            let h = learner
                .run(&sample, seed.derive("probe-run", i))?
                .hypothesis;
            let mut ones = vec![0u64; cells];
            let mut seen = vec![0u64; cells];
            for k in 1..=cells {
                if let Some(x) = sample_cell(&mut rng, &r, m, k) {
                    seen[k - 1] = 1;
                    if h.label(DomainPoint(x as usize)) {
                        ones[k - 1] = 1;
                    }
                }
            }
            Ok((ones, seen))
        })
        .collect::<Result<_>>()?;
    let mut ones = vec![0u64; cells];
    let mut seen = vec![0u64; cells];
    for (o, s) in per_trial {
        for k in 0..cells {
            ones[k] += o[k];
            seen[k] += s[k];
        }
    }
    let p: Vec<f64> = ones
        .iter()
        .zip(&seen)
        .map(|(&o, &s)| if s == 0 { f64::NAN } else { o as f64 / s as f64 })
        .collect();
    let mut max_adjacent_gap = 0.0;
    let mut gap_location = 1;
    for c in 1..cells {
        let gap = (p[c] - p[c - 1]).abs();
        if gap.is_finite() && gap > max_adjacent_gap {
            max_adjacent_gap = gap;
            gap_location = c;
        }
    }
    Ok(JumpProbeReport {
        n,
        t0,
        p,
        cell_counts: seen,
        max_adjacent_gap,
        gap_location,
    })
}

/// `n` distinct points drawn uniformly from `[0, m)`, sorted.
fn draw_distinct_sorted(rng: &mut impl Rng, m: u64, n: u64) -> Vec<u64> {
    use std::collections::BTreeSet;
    let mut picked = BTreeSet::new();
    while (picked.len() as u64) < n {
        picked.insert(rng.random_range(0..m));
    }
    picked.into_iter().collect()
}

/// A uniform point of `[0, m) \ R` whose order with respect to the sorted
/// `r` equals `k`, or `None` when that cell is empty.
fn sample_cell(rng: &mut impl Rng, r: &[u64], m: u64, k: usize) -> Option<u64> {
    let n = r.len();
    let (lo, hi) = if k == 1 {
        (0, r[0]) // [0, r_1)
    } else if k == n + 1 {
        (r[n - 1] + 1, m) // (r_n, m)
    } else {
        (r[k - 2] + 1, r[k - 1]) // (r_{k-1}, r_k)
    };
    if lo >= hi {
        return None;
    }
    Some(rng.random_range(lo..hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{ConstantLearner, ErmLearner};
    use crate::model::threshold_class;

    fn hyp(s: &str) -> Hypothesis {
        Hypothesis::parse(s).unwrap()
    }

    fn table(entries: &[(&str, u64)]) -> OutputFrequencyTable {
        let trials = entries.iter().map(|&(_, c)| c).sum();
        OutputFrequencyTable {
            trials,
            counts: entries
                .iter()
                .map(|&(k, c)| (k.to_string(), c))
                .collect(),
            failed_counts: BTreeMap::new(),
            failure_flags: vec![false; trials as usize],
        }
    }

    #[test]
    fn constant_learner_has_single_key() {
        let learner = ConstantLearner::new(hyp("0101"));
        let d = FiniteDistribution::point_mass(4, Example::new(0, false)).unwrap();
        let t = output_distribution(&learner, &d, 2, 50, RandomSeed::new(1)).unwrap();
        assert_eq!(t.counts.len(), 1);
        assert_eq!(t.counts["0101"], 50);
        assert_eq!(t.counts.values().sum::<u64>(), t.trials);
        assert_eq!(t.failure_rate(), 0.0);
    }

    #[test]
    fn stability_report_on_constructed_table() {
        // only 00 lies within the excess band under a point mass at (0, 0)
        let cls = HypothesisClass::new(2, vec![hyp("00"), hyp("11")]).unwrap();
        let d = FiniteDistribution::point_mass(2, Example::new(0, false)).unwrap();
        let t = table(&[("00", 70), ("11", 30)]);
        let r = empirical_stability(&t, &d, &cls, 0.2, false).unwrap();
        assert_eq!(r.best_hypothesis, Some(hyp("00")));
        assert_eq!(r.best_frequency, 0.7);
        assert_eq!(r.best_loss, 0.0);
        assert_eq!(r.class_loss, 0.0);

        let t = table(&[("11", 100)]);
        let r = empirical_stability(&t, &d, &cls, 0.2, false).unwrap();
        assert_eq!(r.best_hypothesis, None);
        assert_eq!(r.best_frequency, 0.0);
    }

    #[test]
    fn best_frequency_bounded_by_max_raw_frequency() {
        let cls = HypothesisClass::new(2, vec![hyp("00"), hyp("01"), hyp("11")]).unwrap();
        let d = FiniteDistribution::point_mass(2, Example::new(0, false)).unwrap();
        let t = table(&[("00", 40), ("01", 35), ("11", 25)]);
        let r = empirical_stability(&t, &d, &cls, 0.5, false).unwrap();
        assert!(r.best_frequency <= t.max_frequency(false) + 1e-12);
    }

    #[test]
    fn greedy_list_on_constructed_table() {
        let cls = HypothesisClass::new(2, vec![hyp("00"), hyp("01"), hyp("10")]).unwrap();
        let d = FiniteDistribution::point_mass(2, Example::new(0, false)).unwrap();
        let t = table(&[("00", 60), ("01", 35), ("10", 5)]);
        let r = empirical_list(&t, &d, &cls, 1.0, 0.1, false).unwrap();
        assert_eq!(r.list, vec![hyp("00"), hyp("01")]);
        assert_eq!(r.covered_mass, 0.95);
        assert!(r.success);
        // minimal-greedy: dropping the last element loses coverage
        assert!(0.60 < 1.0 - r.delta);

        let r = empirical_list(&t, &d, &cls, 1.0, 1.0, false).unwrap();
        assert!(r.list.is_empty());
        assert!(r.success);
    }

    #[test]
    fn failure_exclusion_shrinks_denominator() {
        let mut t = table(&[("00", 80), ("11", 20)]);
        t.failed_counts.insert("11".to_string(), 20);
        for f in t.failure_flags.iter_mut().skip(80) {
            *f = true;
        }
        let (eff, denom) = t.effective(false);
        assert_eq!(denom, 80);
        assert!(!eff.contains_key("11"));
        let (eff, denom) = t.effective(true);
        assert_eq!(denom, 100);
        assert_eq!(eff["11"], 20);
        assert_eq!(t.failure_rate(), 0.2);
    }

    #[test]
    fn uniform_convergence_concentrates() {
        let cls = threshold_class(3).unwrap();
        let d = FiniteDistribution::uniform(
            3,
            vec![
                Example::new(0, false),
                Example::new(1, true),
                Example::new(2, true),
            ],
        )
        .unwrap();
        let mut gaps = uniform_convergence_gap(&cls, &d, 1000, 200, RandomSeed::new(2)).unwrap();
        gaps.sort_by(f64::total_cmp);
        assert!(gaps[189] <= 0.08, "95th percentile {}", gaps[189]);
        assert!(gaps.iter().all(|&g| (0.0..=1.0).contains(&g)));
    }

    #[test]
    fn consistent_hypothesis_has_zero_gap() {
        let cls = HypothesisClass::new(2, vec![hyp("10")]).unwrap();
        let d = FiniteDistribution::point_mass(2, Example::new(0, true)).unwrap();
        let gaps = uniform_convergence_gap(&cls, &d, 5, 50, RandomSeed::new(3)).unwrap();
        assert!(gaps.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn ord_statistic_examples() {
        let r: Vec<DomainPoint> = [2, 5, 7].map(DomainPoint).to_vec();
        assert_eq!(ord_statistic(&r, DomainPoint(6)).unwrap(), 3);
        assert_eq!(ord_statistic(&r, DomainPoint(0)).unwrap(), 1);
        assert_eq!(ord_statistic(&r, DomainPoint(7)).unwrap(), 4);
        assert!(ord_statistic(&[], DomainPoint(0)).is_err());
    }

    #[test]
    fn jump_probe_constant_all_ones() {
        let learner = ConstantLearner::new(Hypothesis::all_ones(32));
        let r = jump_probe(&learner, 32, 8, 200, RandomSeed::new(4)).unwrap();
        for k in 1..=9 {
            assert_eq!(r.p(k), 1.0);
        }
        assert_eq!(r.max_adjacent_gap, 0.0);
    }

    #[test]
    fn jump_probe_erm_is_a_step() {
        let learner = ErmLearner::new(threshold_class(64).unwrap()).unwrap();
        let r = jump_probe(&learner, 64, 8, 800, RandomSeed::new(5)).unwrap();
        for c in 1..9 {
            assert!(r.p(c + 1) >= r.p(c) - 0.05, "p not nondecreasing at {c}");
        }
        assert_eq!(r.t0, 4);
        assert!(r.max_adjacent_gap >= 0.9, "gap {}", r.max_adjacent_gap);
        assert_eq!(r.gap_location, 4);
    }

    #[test]
    fn jump_probe_validates_parameters() {
        let learner = ConstantLearner::new(Hypothesis::all_ones(16));
        assert!(jump_probe(&learner, 16, 7, 10, RandomSeed::new(0)).is_err());
        assert!(jump_probe(&learner, 16, 8, 10, RandomSeed::new(0)).is_err());
    }
}
