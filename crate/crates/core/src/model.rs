//! Domain model: hypotheses, classes, distributions, samples and losses.
//!
//! Domain points are the integers `0..N`. The threshold constructions from
//! the lower-bound experiments use 1-indexed positions `1..=N` internally;
//! the stored index of position `i` is `i - 1`.
//!
//! All values are immutable after construction and all operations are pure,
//! so everything here can be shared freely across threads.

use crate::seed::RandomSeed;
use crate::{Error, Result};
use rand::Rng;

/// A point of the finite domain `[N]`, stored zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DomainPoint(pub usize);

/// A total boolean labeling of a finite domain, as a bit vector.
///
/// The canonical order on hypotheses is the lexicographic order of the
/// 0/1 string; every tie-break in the crate refers to this single order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Hypothesis {
    bits: Vec<bool>,
}

impl Hypothesis {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Hypothesis { bits }
    }

    /// Parse a 0/1 string.
    pub fn parse(s: &str) -> Result<Self> {
        let mut bits = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                other => {
                    return Err(Error::param("hypothesis", format!("invalid bit `{other}`")))
                }
            }
        }
        Ok(Hypothesis { bits })
    }

    pub fn all_zeros(n: usize) -> Self {
        Hypothesis { bits: vec![false; n] }
    }

    pub fn all_ones(n: usize) -> Self {
        Hypothesis { bits: vec![true; n] }
    }

    /// The threshold hypothesis over `[n]` with cut `t` (1-indexed):
    /// position `i` is labeled 1 iff `i >= t`.
    pub fn threshold(n: usize, t: usize) -> Self {
        Hypothesis {
            bits: (1..=n).map(|i| i >= t).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn label(&self, x: DomainPoint) -> bool {
        self.bits[x.0]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// The pointwise complement.
    pub fn flipped(&self) -> Hypothesis {
        Hypothesis {
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }
}

impl std::fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// A set of distinct hypotheses over a common domain, stored in canonical
/// (lexicographic bit-string) order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HypothesisClass {
    domain_size: usize,
    members: Vec<Hypothesis>,
}

impl HypothesisClass {
    /// Build a class; members are sorted canonically and deduplicated.
    pub fn new(domain_size: usize, mut members: Vec<Hypothesis>) -> Result<Self> {
        for h in &members {
            if h.len() != domain_size {
                return Err(Error::DomainMismatch {
                    left: h.len(),
                    right: domain_size,
                });
            }
        }
        members.sort();
        members.dedup();
        Ok(HypothesisClass {
            domain_size,
            members,
        })
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn members(&self) -> &[Hypothesis] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, h: &Hypothesis) -> bool {
        self.members.binary_search(h).is_ok()
    }

    /// The full cube `{0,1}^n`; test helper for small `n`.
    pub fn full_cube(n: usize) -> Result<Self> {
        if n > 16 {
            return Err(Error::DeskScale(format!("full cube over {n} points")));
        }
        let members = (0u32..1 << n)
            .map(|m| Hypothesis::from_bits((0..n).map(|i| m >> i & 1 == 1).collect()))
            .collect();
        HypothesisClass::new(n, members)
    }
}

/// A labeled example `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Example {
    pub point: DomainPoint,
    pub label: bool,
}

impl Example {
    pub fn new(point: usize, label: bool) -> Self {
        Example {
            point: DomainPoint(point),
            label,
        }
    }
}

/// A multiset of examples in canonical sorted order (point index, then
/// label), run-length encoded.
///
/// Learning rules receive samples in this canonical form, which makes them
/// invariant under any reordering of the draws.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    runs: Vec<(Example, u64)>,
}

impl Sample {
    pub fn from_examples(mut examples: Vec<Example>) -> Self {
        examples.sort();
        let mut runs: Vec<(Example, u64)> = Vec::new();
        for e in examples {
            match runs.last_mut() {
                Some((last, c)) if *last == e => *c += 1,
                _ => runs.push((e, 1)),
            }
        }
        Sample { runs }
    }

    pub fn from_counts(mut counts: Vec<(Example, u64)>) -> Self {
        counts.retain(|&(_, c)| c > 0);
        counts.sort_by_key(|&(e, _)| e);
        let mut runs: Vec<(Example, u64)> = Vec::new();
        for (e, c) in counts {
            match runs.last_mut() {
                Some((last, acc)) if *last == e => *acc += c,
                _ => runs.push((e, c)),
            }
        }
        Sample { runs }
    }

    /// Total number of examples, with multiplicity.
    pub fn len(&self) -> u64 {
        self.runs.iter().map(|&(_, c)| c).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    /// Distinct examples with their multiplicities, in canonical order.
    pub fn runs(&self) -> &[(Example, u64)] {
        &self.runs
    }

    /// Expand to individual examples in canonical order.
    pub fn iter_examples(&self) -> impl Iterator<Item = Example> + '_ {
        self.runs
            .iter()
            .flat_map(|&(e, c)| std::iter::repeat(e).take(c as usize))
    }

    /// Partition into blocks of the given sizes by a uniformly random split.
    ///
    /// For an i.i.d. multiset this reproduces the joint law of independent
    /// blocks drawn directly from the source distribution: conditioned on
    /// the multiset, the draw order is exchangeable, so a uniform random
    /// partition into fixed-size blocks is distributed exactly like
    /// chunking the original (unsorted) draw sequence.
    pub fn random_split(&self, sizes: &[u64], rng: &mut impl Rng) -> Result<Vec<Sample>> {
        let total: u64 = sizes.iter().sum();
        if total != self.len() {
            return Err(Error::SampleSizeMismatch {
                got: self.len(),
                want: total,
            });
        }
        let mut remaining: Vec<u64> = self.runs.iter().map(|&(_, c)| c).collect();
        let mut pop: u64 = total;
        let mut out = Vec::with_capacity(sizes.len());
        for &m in sizes {
            let mut want = m;
            let mut tail = pop; // population not yet scanned within this block
            let mut counts = Vec::new();
            for (idx, &(ex, _)) in self.runs.iter().enumerate() {
                if want == 0 {
                    break;
                }
                let k = remaining[idx];
                if k == 0 {
                    continue;
                }
                // Draws from this run follow a hypergeometric law conditioned
                // on the draws already assigned within the block.
                let x = if tail == k {
                    want.min(k)
                } else {
                    sample_hypergeometric(rng, tail, k, want)
                };
                if x > 0 {
                    counts.push((ex, x));
                    remaining[idx] -= x;
                    want -= x;
                }
                tail -= k;
            }
            pop -= m;
            out.push(Sample::from_counts(counts));
        }
        Ok(out)
    }
}

fn sample_hypergeometric(rng: &mut impl Rng, total: u64, successes: u64, draws: u64) -> u64 {
    use rand_distr::{Distribution, Hypergeometric};
    if draws == 0 || successes == 0 {
        return 0;
    }
    let d = Hypergeometric::new(total, successes, draws)
        .expect("hypergeometric parameters maintained by caller");
    d.sample(rng)
}

/// A probability table over `(point, label)` atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDistribution {
    domain_size: usize,
    atoms: Vec<(Example, f64)>,
    cumulative: Vec<f64>,
}

const PROB_TOLERANCE: f64 = 1e-9;

impl FiniteDistribution {
    /// Build a distribution; atoms are sorted canonically and must be
    /// distinct, nonnegative and sum to 1 within `1e-9`.
    pub fn new(domain_size: usize, mut atoms: Vec<(Example, f64)>) -> Result<Self> {
        atoms.sort_by_key(|&(e, _)| e);
        let mut sum = 0.0;
        for w in atoms.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidDistribution(format!(
                    "duplicate atom ({}, {})",
                    w[0].0.point.0,
                    w[0].0.label as u8
                )));
            }
        }
        for &(e, p) in &atoms {
            if e.point.0 >= domain_size {
                return Err(Error::DomainMismatch {
                    left: e.point.0 + 1,
                    right: domain_size,
                });
            }
            if !(p >= 0.0) {
                return Err(Error::InvalidDistribution(format!(
                    "negative probability {p}"
                )));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > PROB_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {sum}"
            )));
        }
        let mut cumulative = Vec::with_capacity(atoms.len());
        let mut acc = 0.0;
        for &(_, p) in &atoms {
            acc += p;
            cumulative.push(acc);
        }
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        Ok(FiniteDistribution {
            domain_size,
            atoms,
            cumulative,
        })
    }

    /// Uniform distribution over the given atoms.
    pub fn uniform(domain_size: usize, examples: Vec<Example>) -> Result<Self> {
        let p = 1.0 / examples.len() as f64;
        FiniteDistribution::new(domain_size, examples.into_iter().map(|e| (e, p)).collect())
    }

    /// All probability on a single example.
    pub fn point_mass(domain_size: usize, example: Example) -> Result<Self> {
        FiniteDistribution::new(domain_size, vec![(example, 1.0)])
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn atoms(&self) -> &[(Example, f64)] {
        &self.atoms
    }

    fn check_domain(&self, h: &Hypothesis) -> Result<()> {
        if h.len() != self.domain_size {
            return Err(Error::DomainMismatch {
                left: h.len(),
                right: self.domain_size,
            });
        }
        Ok(())
    }
}

/// `Pr[h(x) != y]` for `(x, y)` drawn from `d`.
pub fn population_loss(h: &Hypothesis, d: &FiniteDistribution) -> Result<f64> {
    d.check_domain(h)?;
    Ok(d.atoms
        .iter()
        .filter(|&&(e, _)| h.label(e.point) != e.label)
        .map(|&(_, p)| p)
        .sum())
}

/// Fraction of examples in `s` mislabeled by `h`.
pub fn empirical_loss(h: &Hypothesis, s: &Sample) -> Result<f64> {
    if s.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut bad = 0u64;
    let mut total = 0u64;
    for &(e, c) in s.runs() {
        total += c;
        if h.label(e.point) != e.label {
            bad += c;
        }
    }
    Ok(bad as f64 / total as f64)
}

/// Minimum population loss over the members of `class`.
pub fn class_loss(class: &HypothesisClass, d: &FiniteDistribution) -> Result<f64> {
    if class.is_empty() {
        return Err(Error::EmptyClass);
    }
    let mut best = f64::INFINITY;
    for h in class.members() {
        let l = population_loss(h, d)?;
        if l < best {
            best = l;
        }
    }
    Ok(best)
}

/// Draw `n` i.i.d. examples, returned in canonical (sorted multiset)
/// form. Uses the multinomial decomposition into sequential binomial
/// counts per atom — the same law as per-example inverse-CDF draws on the
/// multiset, at constant cost per atom.
pub fn draw_sample(d: &FiniteDistribution, n: u64, seed: RandomSeed) -> Result<Sample> {
    use rand_distr::{Binomial, Distribution};
    if n == 0 {
        return Err(Error::param("n", "sample size must be at least 1"));
    }
    let mut rng = seed.rng();
    let mut counts = vec![0u64; d.atoms.len()];
    let mut left = n;
    let mut mass_left = 1.0f64;
    for (i, &(_, p)) in d.atoms.iter().enumerate() {
        if left == 0 {
            break;
        }
        if i + 1 == d.atoms.len() {
            counts[i] = left;
            break;
        }
        let cond = (p / mass_left).clamp(0.0, 1.0);
        let c = Binomial::new(left, cond)
            .expect("conditional probability clamped to [0, 1]")
            .sample(&mut rng);
        counts[i] = c;
        left -= c;
        mass_left = (mass_left - p).max(0.0);
    }
    Ok(Sample::from_counts(
        d.atoms
            .iter()
            .zip(counts)
            .map(|(&(e, _), c)| (e, c))
            .collect(),
    ))
}

/// The mixture `gamma_prime * d + (1 - gamma_prime) * point mass at
/// `(x_star, b_star)`, with atoms merged.
pub fn mix_with_point_mass(
    d: &FiniteDistribution,
    x_star: DomainPoint,
    b_star: bool,
    gamma_prime: f64,
) -> Result<FiniteDistribution> {
    if !(gamma_prime > 0.0 && gamma_prime <= 1.0) {
        return Err(Error::param("gamma_prime", "must lie in (0, 1]"));
    }
    if x_star.0 >= d.domain_size {
        return Err(Error::DomainMismatch {
            left: x_star.0 + 1,
            right: d.domain_size,
        });
    }
    let star = Example {
        point: x_star,
        label: b_star,
    };
    let mut atoms: Vec<(Example, f64)> = d
        .atoms
        .iter()
        .map(|&(e, p)| (e, p * gamma_prime))
        .collect();
    match atoms.iter_mut().find(|(e, _)| *e == star) {
        Some((_, p)) => *p += 1.0 - gamma_prime,
        None if gamma_prime < 1.0 => atoms.push((star, 1.0 - gamma_prime)),
        None => {}
    }
    FiniteDistribution::new(d.domain_size, atoms)
}

/// Condition `d` on the event that the example is consistent with `h_star`.
pub fn condition_on_consistency(
    d: &FiniteDistribution,
    h_star: &Hypothesis,
) -> Result<FiniteDistribution> {
    d.check_domain(h_star)?;
    let atoms: Vec<(Example, f64)> = d
        .atoms
        .iter()
        .filter(|&&(e, _)| h_star.label(e.point) == e.label)
        .cloned()
        .collect();
    let mass: f64 = atoms.iter().map(|&(_, p)| p).sum();
    if mass <= 0.0 {
        return Err(Error::ZeroConsistencyMass);
    }
    FiniteDistribution::new(
        d.domain_size,
        atoms.into_iter().map(|(e, p)| (e, p / mass)).collect(),
    )
}

/// The staircase class over `[n]`: `n + 1` hypotheses `h_t`, where `h_t`
/// labels position `i` (1-indexed) with 1 iff `i >= t`.
pub fn threshold_class(n: usize) -> Result<HypothesisClass> {
    if n == 0 {
        return Err(Error::param("n", "domain size must be at least 1"));
    }
    HypothesisClass::new(n, (1..=n + 1).map(|t| Hypothesis::threshold(n, t)).collect())
}

/// Uniform distribution over `[m]` labeled by the threshold at the median
/// `m* = floor(m / 2)` (1-indexed positions).
pub fn median_threshold_distribution(m: usize) -> Result<FiniteDistribution> {
    if m < 2 {
        return Err(Error::param("m", "needs at least 2 points"));
    }
    let m_star = m / 2;
    FiniteDistribution::uniform(
        m,
        (1..=m).map(|x| Example::new(x - 1, x >= m_star)).collect(),
    )
}
