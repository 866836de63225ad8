//! Learning rules: ERM, a globally stable learner for finite classes, the
//! majority-vote booster, the stability-to-list-replicability converter,
//! the three-way agnostic rule and the example-replacement wrapper.
//!
//! A learning rule is deterministic given `(Sample, RandomSeed)`; since
//! samples are canonical multisets, every rule is invariant under
//! reordering of the draws.

use crate::model::{empirical_loss, DomainPoint, Example, Hypothesis, HypothesisClass, Sample};
use crate::seed::RandomSeed;
use crate::{Error, Result};
use rand::Rng;
use std::collections::BTreeMap;

/// Result of one run of a learning rule.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerOutput {
    pub hypothesis: Hypothesis,
    /// Set by the list-replicable learner when no candidate passed its
    /// filters and it fell back to ERM.
    pub failed: bool,
    /// Empirical frequency of the chosen hypothesis among the inner runs,
    /// where applicable.
    pub p_hat: Option<f64>,
}

impl LearnerOutput {
    fn plain(hypothesis: Hypothesis) -> Self {
        LearnerOutput {
            hypothesis,
            failed: false,
            p_hat: None,
        }
    }
}

/// A randomized learning rule with a declared sample-complexity function.
pub trait LearningRule: Send + Sync {
    fn run(&self, sample: &Sample, seed: RandomSeed) -> Result<LearnerOutput>;
    fn sample_complexity(&self, epsilon: f64) -> u64;
}

/// Empirical risk minimization with canonical tie-break.
pub fn erm(class: &HypothesisClass, sample: &Sample) -> Result<Hypothesis> {
    if class.is_empty() {
        return Err(Error::EmptyClass);
    }
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut best: Option<(f64, &Hypothesis)> = None;
    for h in class.members() {
        let l = empirical_loss(h, sample)?;
        // strict improvement only: members are in canonical order
        if best.map_or(true, |(bl, _)| l < bl) {
            best = Some((l, h));
        }
    }
    Ok(best.expect("class nonempty").1.clone())
}

/// ERM as a [`LearningRule`].
pub struct ErmLearner {
    class: HypothesisClass,
}

impl ErmLearner {
    pub fn new(class: HypothesisClass) -> Result<Self> {
        if class.is_empty() {
            return Err(Error::EmptyClass);
        }
        Ok(ErmLearner { class })
    }
}

impl LearningRule for ErmLearner {
    fn run(&self, sample: &Sample, _seed: RandomSeed) -> Result<LearnerOutput> {
        Ok(LearnerOutput::plain(erm(&self.class, sample)?))
    }

    fn sample_complexity(&self, epsilon: f64) -> u64 {
        hoeffding_samples(2.0, epsilon, self.class.len())
    }
}

fn hoeffding_samples(constant: f64, epsilon: f64, class_size: usize) -> u64 {
    (constant / (epsilon * epsilon) * (8.0 * class_size as f64).ln()).ceil() as u64
}

/// A globally stable agnostic learner for a finite class.
///
/// On a sample it computes the minimum empirical loss `m_hat` over the
/// class, draws `j` uniformly from `{1, ..., K}` with `K = 2|H|`, sets the
/// slack `tau = eps/4 + j * eps/(4K)` (so the grid spans `(eps/4, eps/2]`),
/// and outputs the canonically first member with empirical loss at most
/// `m_hat + tau`. Randomizing the acceptance threshold makes some
/// low-excess-loss member come out with probability at least `1/(4|H|)`
/// regardless of how the empirical losses cluster; the bound is checked
/// empirically by the harness.
pub struct RandomThresholdStable {
    class: HypothesisClass,
    epsilon: f64,
}

impl RandomThresholdStable {
    pub fn new(class: HypothesisClass, epsilon: f64) -> Result<Self> {
        if class.is_empty() {
            return Err(Error::EmptyClass);
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::param("epsilon", "must lie in (0, 1)"));
        }
        Ok(RandomThresholdStable { class, epsilon })
    }

    pub fn class(&self) -> &HypothesisClass {
        &self.class
    }

    pub(crate) fn tau(epsilon: f64, grid: u64, j: u64) -> f64 {
        epsilon / 4.0 + j as f64 * epsilon / (4.0 * grid as f64)
    }
}

impl LearningRule for RandomThresholdStable {
    fn run(&self, sample: &Sample, seed: RandomSeed) -> Result<LearnerOutput> {
        let losses: Vec<f64> = self
            .class
            .members()
            .iter()
            .map(|h| empirical_loss(h, sample))
            .collect::<Result<_>>()?;
        let m_hat = losses.iter().cloned().fold(f64::INFINITY, f64::min);
        let grid = 2 * self.class.len() as u64;
        let j = seed.rng().random_range(1..=grid);
        let tau = Self::tau(self.epsilon, grid, j);
        let idx = losses
            .iter()
            .position(|&l| l <= m_hat + tau)
            .expect("the minimizer always qualifies");
        Ok(LearnerOutput::plain(self.class.members()[idx].clone()))
    }

    fn sample_complexity(&self, epsilon: f64) -> u64 {
        hoeffding_samples(8.0, epsilon, self.class.len())
    }
}

/// Most frequent hypothesis, ties broken canonically.
pub fn majority_vote(outputs: &[Hypothesis]) -> Result<Hypothesis> {
    if outputs.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut counts: BTreeMap<&Hypothesis, u64> = BTreeMap::new();
    for h in outputs {
        *counts.entry(h).or_insert(0) += 1;
    }
    let mut best: Option<(&Hypothesis, u64)> = None;
    for (h, c) in counts {
        if best.map_or(true, |(_, bc)| c > bc) {
            best = Some((h, c));
        }
    }
    Ok(best.expect("nonempty").0.clone())
}

/// Majority-vote booster: runs the base rule on `k` random blocks of the
/// sample and outputs the most frequent hypothesis.
pub struct MajorityBoost {
    base: Box<dyn LearningRule>,
    k: u64,
}

impl MajorityBoost {
    pub fn new(base: Box<dyn LearningRule>, k: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::param("k", "repetition count must be at least 1"));
        }
        Ok(MajorityBoost { base, k })
    }
}

impl LearningRule for MajorityBoost {
    fn run(&self, sample: &Sample, seed: RandomSeed) -> Result<LearnerOutput> {
        let total = sample.len();
        if total == 0 || total % self.k != 0 {
            return Err(Error::SampleSizeMismatch {
                got: total,
                want: total.div_ceil(self.k).max(1) * self.k,
            });
        }
        let block = total / self.k;
        let sizes = vec![block; self.k as usize];
        let mut rng = seed.derive("boost-split", 0).rng();
        let parts = sample.random_split(&sizes, &mut rng)?;
        let outputs: Vec<Hypothesis> = parts
            .iter()
            .enumerate()
            .map(|(i, p)| {
                self.base
                    .run(p, seed.derive("boost-run", i as u64))
                    .map(|o| o.hypothesis)
            })
            .collect::<Result<_>>()?;
        Ok(LearnerOutput::plain(majority_vote(&outputs)?))
    }

    fn sample_complexity(&self, epsilon: f64) -> u64 {
        self.k * self.base.sample_complexity(epsilon)
    }
}

/// Parameters of the stability-to-list-replicability conversion.
///
/// `rho_quarter` is the stability parameter evaluated at `epsilon / 4`
/// (constant over the benches in this crate), `list_bound = floor(1 /
/// rho_quarter)` bounds the list length, and `alpha = rho_quarter -
/// 1/(list_bound + 1) > 0` is the frequency margin.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityParams {
    pub rho_quarter: f64,
    pub epsilon: f64,
    pub delta: f64,
    /// Base-learner sample size (its complexity at `epsilon / 4`).
    pub n0: u64,
    /// Risk-filter sample size.
    pub n1: u64,
    /// Number of base repetitions.
    pub t: u64,
    pub list_bound: u64,
    pub alpha: f64,
}

impl StabilityParams {
    pub fn derive(
        rho_quarter: f64,
        epsilon: f64,
        delta: f64,
        base: &dyn LearningRule,
        class_size: usize,
    ) -> Result<Self> {
        if !(rho_quarter > 0.0 && rho_quarter <= 1.0) {
            return Err(Error::param("rho", "must lie in (0, 1]"));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::param("epsilon", "must lie in (0, 1)"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::param("delta", "must lie in (0, 1)"));
        }
        let list_bound = (1.0 / rho_quarter).floor() as u64;
        let alpha = rho_quarter - 1.0 / (list_bound + 1) as f64;
        if alpha <= 0.0 {
            return Err(Error::param("rho", "alpha = rho - 1/(L+1) must be positive"));
        }
        // Hoeffding for the VC-1 indicator family gives the repetition
        // count; Hoeffding + union over the finite class gives n1.
        let t = (32.0 / (alpha * alpha) * (16.0 / delta).ln()).ceil() as u64;
        let n1 = (32.0 / (epsilon * epsilon) * ((class_size as f64).ln() + (8.0 / delta).ln()))
            .ceil() as u64;
        Ok(StabilityParams {
            rho_quarter,
            epsilon,
            delta,
            n0: base.sample_complexity(epsilon / 4.0),
            n1,
            t,
            list_bound,
            alpha,
        })
    }
}

/// The list-replicable learner built from a stable learner.
///
/// Splits its sample into `t` blocks of size `n0` plus a filter block `Q`
/// of size `n1`, runs the base rule on every block, and outputs the
/// highest-frequency hypothesis whose empirical frequency is at least
/// `rho - alpha/2` and whose loss on `Q` is within `3 eps / 4` of the best
/// in-class loss on `Q`. When no hypothesis qualifies it falls back to
/// `erm(H, Q)` and raises the `failed` flag.
pub struct ListFromStable {
    base: Box<dyn LearningRule>,
    params: StabilityParams,
    class: HypothesisClass,
}

impl ListFromStable {
    pub fn new(
        base: Box<dyn LearningRule>,
        params: StabilityParams,
        class: HypothesisClass,
    ) -> Result<Self> {
        if class.is_empty() {
            return Err(Error::EmptyClass);
        }
        Ok(ListFromStable {
            base,
            params,
            class,
        })
    }

    pub fn params(&self) -> &StabilityParams {
        &self.params
    }
}

impl LearningRule for ListFromStable {
    fn run(&self, sample: &Sample, seed: RandomSeed) -> Result<LearnerOutput> {
        let p = &self.params;
        let want = p.t * p.n0 + p.n1;
        if sample.len() != want {
            return Err(Error::SampleSizeMismatch {
                got: sample.len(),
                want,
            });
        }
        let mut sizes = vec![p.n0; p.t as usize];
        sizes.push(p.n1);
        let mut rng = seed.derive("list-split", 0).rng();
        let parts = sample.random_split(&sizes, &mut rng)?;
        let (blocks, filter) = parts.split_at(p.t as usize);
        let q = &filter[0];

        let mut tally: BTreeMap<Hypothesis, u64> = BTreeMap::new();
        for (i, block) in blocks.iter().enumerate() {
            let out = self.base.run(block, seed.derive("list-run", i as u64))?;
            *tally.entry(out.hypothesis).or_insert(0) += 1;
        }

        let min_q = self
            .class
            .members()
            .iter()
            .map(|h| empirical_loss(h, q))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        let freq_floor = p.rho_quarter - p.alpha / 2.0;
        let loss_ceiling = min_q + 0.75 * p.epsilon;

        let mut chosen: Option<(&Hypothesis, u64)> = None;
        for (h, &c) in &tally {
            let p_hat = c as f64 / p.t as f64;
            if p_hat < freq_floor || empirical_loss(h, q)? > loss_ceiling {
                continue;
            }
            if chosen.map_or(true, |(_, bc)| c > bc) {
                chosen = Some((h, c));
            }
        }
        match chosen {
            Some((h, c)) => Ok(LearnerOutput {
                hypothesis: h.clone(),
                failed: false,
                p_hat: Some(c as f64 / p.t as f64),
            }),
            None => {
                let fallback = erm(&self.class, q)?;
                let c = tally.get(&fallback).copied().unwrap_or(0);
                Ok(LearnerOutput {
                    hypothesis: fallback,
                    failed: true,
                    p_hat: Some(c as f64 / p.t as f64),
                })
            }
        }
    }

    fn sample_complexity(&self, _epsilon: f64) -> u64 {
        self.params.t * self.params.n0 + self.params.n1
    }
}

/// With probability 1/3 each: the all-ones hypothesis, the all-zeros
/// hypothesis, or the inner rule's output.
pub struct ThreeWayRule {
    inner: Box<dyn LearningRule>,
    domain_size: usize,
}

impl ThreeWayRule {
    pub fn new(inner: Box<dyn LearningRule>, domain_size: usize) -> Self {
        ThreeWayRule { inner, domain_size }
    }
}

impl LearningRule for ThreeWayRule {
    fn run(&self, sample: &Sample, seed: RandomSeed) -> Result<LearnerOutput> {
        let branch = seed.derive("three-way", 0).rng().random_range(0u32..3);
        match branch {
            0 => Ok(LearnerOutput::plain(Hypothesis::all_ones(self.domain_size))),
            1 => Ok(LearnerOutput::plain(Hypothesis::all_zeros(self.domain_size))),
            _ => self.inner.run(sample, seed.derive("three-way-inner", 0)),
        }
    }

    fn sample_complexity(&self, epsilon: f64) -> u64 {
        self.inner.sample_complexity(epsilon)
    }
}

/// Replace each example with `(x_star, b_star)` independently with
/// probability `1 - gamma_prime`; returns the modified sample and the
/// number of replacements.
pub fn replace_with_point_mass(
    sample: &Sample,
    x_star: DomainPoint,
    b_star: bool,
    gamma_prime: f64,
    rng: &mut impl Rng,
) -> Result<(Sample, u64)> {
    if !(gamma_prime > 0.0 && gamma_prime <= 1.0) {
        return Err(Error::param("gamma_prime", "must lie in (0, 1]"));
    }
    let star = Example {
        point: x_star,
        label: b_star,
    };
    let mut replaced = 0u64;
    let mut counts: Vec<(Example, u64)> = Vec::with_capacity(sample.runs().len() + 1);
    for &(e, c) in sample.runs() {
        if e == star || gamma_prime == 1.0 {
            counts.push((e, c));
            continue;
        }
        let kept = sample_binomial(rng, c, gamma_prime);
        replaced += c - kept;
        if kept > 0 {
            counts.push((e, kept));
        }
    }
    if replaced > 0 {
        counts.push((star, replaced));
    }
    Ok((Sample::from_counts(counts), replaced))
}

fn sample_binomial(rng: &mut impl Rng, n: u64, p: f64) -> u64 {
    use rand_distr::{Binomial, Distribution};
    Binomial::new(n, p).expect("p validated by caller").sample(rng)
}

/// The example-replacement wrapper: runs the inner rule on a sample where
/// each example was independently replaced by `(x_star, b_star)` with
/// probability `1 - gamma_prime`. Its output on `D^n` is distributed like
/// the inner rule on `(D')^n` with `D' = mix_with_point_mass(D, x_star,
/// b_star, gamma_prime)`.
pub struct ClassErrorWrapper {
    inner: Box<dyn LearningRule>,
    x_star: DomainPoint,
    b_star: bool,
    gamma_prime: f64,
}

impl ClassErrorWrapper {
    pub fn new(
        inner: Box<dyn LearningRule>,
        x_star: DomainPoint,
        b_star: bool,
        gamma_prime: f64,
    ) -> Result<Self> {
        if !(gamma_prime > 0.0 && gamma_prime <= 1.0) {
            return Err(Error::param("gamma_prime", "must lie in (0, 1]"));
        }
        Ok(ClassErrorWrapper {
            inner,
            x_star,
            b_star,
            gamma_prime,
        })
    }
}

impl LearningRule for ClassErrorWrapper {
    fn run(&self, sample: &Sample, seed: RandomSeed) -> Result<LearnerOutput> {
        let mut rng = seed.derive("replace", 0).rng();
        let (modified, _) = replace_with_point_mass(
            sample,
            self.x_star,
            self.b_star,
            self.gamma_prime,
            &mut rng,
        )?;
        self.inner.run(&modified, seed.derive("wrapped-inner", 0))
    }

    fn sample_complexity(&self, epsilon: f64) -> u64 {
        self.inner.sample_complexity(epsilon)
    }
}

/// The guaranteed stability parameter of a realizable-case stable learner
/// applied directly to agnostic samples:
/// `rho = 1 / ((d+1) * 2^(2^d + 1) * 4^n)` for Littlestone bound `d` and
/// sample size `n`. Underflows to 0 for very large arguments.
pub fn stability_rho(d: u32, n: u64) -> f64 {
    if d >= 10 {
        return 0.0;
    }
    let exp = (1u32 << d) + 1;
    let denom = (d as f64 + 1.0) * 2f64.powi(exp as i32) * 4f64.powi(n.min(600) as i32);
    1.0 / denom
}

/// A realizable-case stable learner reinterpreted as an agnostic one: the
/// rule is unchanged but is run at the sample size for `epsilon / 2`, and
/// the explicit `rho` guarantee is returned alongside.
pub struct AgnosticFromRealizable {
    inner: Box<dyn LearningRule>,
}

impl LearningRule for AgnosticFromRealizable {
    fn run(&self, sample: &Sample, seed: RandomSeed) -> Result<LearnerOutput> {
        self.inner.run(sample, seed)
    }

    fn sample_complexity(&self, epsilon: f64) -> u64 {
        self.inner.sample_complexity(epsilon / 2.0)
    }
}

pub fn agnostic_from_realizable(
    base: Box<dyn LearningRule>,
    littlestone_bound: u32,
    epsilon: f64,
) -> Result<(AgnosticFromRealizable, f64)> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::param("epsilon", "must lie in (0, 1)"));
    }
    let n = base.sample_complexity(epsilon / 2.0);
    let rho = stability_rho(littlestone_bound, n);
    Ok((AgnosticFromRealizable { inner: base }, rho))
}

/// A learner that always outputs the same hypothesis; bench helper.
pub struct ConstantLearner {
    hypothesis: Hypothesis,
}

impl ConstantLearner {
    pub fn new(hypothesis: Hypothesis) -> Self {
        ConstantLearner { hypothesis }
    }
}

impl LearningRule for ConstantLearner {
    fn run(&self, _sample: &Sample, _seed: RandomSeed) -> Result<LearnerOutput> {
        Ok(LearnerOutput::plain(self.hypothesis.clone()))
    }

    fn sample_complexity(&self, _epsilon: f64) -> u64 {
        1
    }
}

/// A learner that ignores its sample and draws its output hypothesis from
/// a fixed table using the seed; used for calibrated booster benches.
pub struct MixtureLearner {
    outcomes: Vec<(Hypothesis, f64)>,
    cumulative: Vec<f64>,
}

impl MixtureLearner {
    pub fn new(outcomes: Vec<(Hypothesis, f64)>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::EmptyClass);
        }
        let sum: f64 = outcomes.iter().map(|&(_, p)| p).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!(
                "outcome weights sum to {sum}"
            )));
        }
        let mut cumulative = Vec::with_capacity(outcomes.len());
        let mut acc = 0.0;
        for &(_, p) in &outcomes {
            acc += p;
            cumulative.push(acc);
        }
        *cumulative.last_mut().unwrap() = 1.0;
        Ok(MixtureLearner {
            outcomes,
            cumulative,
        })
    }
}

impl LearningRule for MixtureLearner {
    fn run(&self, _sample: &Sample, seed: RandomSeed) -> Result<LearnerOutput> {
        let u: f64 = seed.rng().random();
        let idx = self
            .cumulative
            .partition_point(|&c| c <= u)
            .min(self.outcomes.len() - 1);
        Ok(LearnerOutput::plain(self.outcomes[idx].0.clone()))
    }

    fn sample_complexity(&self, _epsilon: f64) -> u64 {
        1
    }
}
