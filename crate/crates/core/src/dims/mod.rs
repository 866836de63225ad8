//! Exact combinatorial dimension calculators at desk scale.
//!
//! All calculators are exponential-time exact searches; inputs are capped
//! at 16 domain points and 4096 hypotheses and rejected with a clear error
//! beyond that.

pub mod oracle;

use crate::model::{DomainPoint, HypothesisClass};
use crate::{Error, Result};
use std::collections::HashMap;

pub(crate) const MAX_POINTS: usize = 16;
pub(crate) const MAX_MEMBERS: usize = 4096;

/// A complete binary mistake tree. Internal nodes carry a domain point;
/// the left edge is labeled 0 and the right edge 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MistakeTree {
    Leaf,
    Node {
        point: DomainPoint,
        zero: Box<MistakeTree>,
        one: Box<MistakeTree>,
    },
}

impl MistakeTree {
    pub fn node(point: usize, zero: MistakeTree, one: MistakeTree) -> Self {
        MistakeTree::Node {
            point: DomainPoint(point),
            zero: Box::new(zero),
            one: Box::new(one),
        }
    }

    /// Depth if the tree is complete (every root-to-leaf path has the same
    /// length), `None` otherwise.
    pub fn depth(&self) -> Option<usize> {
        match self {
            MistakeTree::Leaf => Some(0),
            MistakeTree::Node { zero, one, .. } => {
                let (a, b) = (zero.depth()?, one.depth()?);
                (a == b).then_some(a + 1)
            }
        }
    }
}

/// Bit set over the member indices of a fixed class.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct MemberSet {
    words: Vec<u64>,
}

impl MemberSet {
    fn empty(n: usize) -> Self {
        MemberSet {
            words: vec![0; n.div_ceil(64)],
        }
    }

    fn full(n: usize) -> Self {
        let mut s = MemberSet::empty(n);
        for i in 0..n {
            s.insert(i);
        }
        s
    }

    fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1u64 << (i % 64);
    }

    fn and(&self, other: &MemberSet) -> MemberSet {
        MemberSet {
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a & b)
                .collect(),
        }
    }

    fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    fn count(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    fn key(&self) -> Box<[u64]> {
        self.words.clone().into_boxed_slice()
    }
}

/// Per-point member masks for a class, shared by the calculators.
pub(crate) struct ClassIndex {
    pub n_points: usize,
    pub n_members: usize,
    pub ones: Vec<MemberSet>,
    pub zeros: Vec<MemberSet>,
}

impl ClassIndex {
    pub(crate) fn build(class: &HypothesisClass) -> Result<Self> {
        let n_points = class.domain_size();
        let n_members = class.len();
        if n_points > MAX_POINTS || n_members > MAX_MEMBERS {
            return Err(Error::DeskScale(format!(
                "{n_points} points / {n_members} hypotheses exceed {MAX_POINTS} / {MAX_MEMBERS}"
            )));
        }
        let mut ones = vec![MemberSet::empty(n_members); n_points];
        let mut zeros = vec![MemberSet::empty(n_members); n_points];
        for (i, h) in class.members().iter().enumerate() {
            for x in 0..n_points {
                if h.label(DomainPoint(x)) {
                    ones[x].insert(i);
                } else {
                    zeros[x].insert(i);
                }
            }
        }
        Ok(ClassIndex {
            n_points,
            n_members,
            ones,
            zeros,
        })
    }

    pub(crate) fn all(&self) -> MemberSet {
        MemberSet::full(self.n_members)
    }
}

/// True iff every root-to-leaf path of `tree` is realized by some member
/// of `class`. Paths through out-of-domain points are unrealizable.
pub fn shatters_tree(class: &HypothesisClass, tree: &MistakeTree) -> bool {
    fn walk(idx: &ClassIndex, viable: MemberSet, t: &MistakeTree) -> bool {
        match t {
            MistakeTree::Leaf => !viable.is_empty(),
            MistakeTree::Node { point, zero, one } => {
                if point.0 >= idx.n_points {
                    return false;
                }
                walk(idx, viable.and(&idx.zeros[point.0]), zero)
                    && walk(idx, viable.and(&idx.ones[point.0]), one)
            }
        }
    }
    match ClassIndex::build(class) {
        Ok(idx) => {
            let all = idx.all();
            walk(&idx, all, tree)
        }
        Err(_) => false,
    }
}

/// Littlestone dimension by memoized recursion:
/// `ldim(H) = max_x 1 + min(ldim(H | h(x)=0), ldim(H | h(x)=1))` over points
/// splitting `H`, with 0 for a class nothing splits and -1 for the empty
/// class.
pub fn littlestone_dimension(class: &HypothesisClass) -> Result<i32> {
    let idx = ClassIndex::build(class)?;
    let mut memo: HashMap<Box<[u64]>, i32> = HashMap::new();
    Ok(ldim_rec(&idx, &idx.all(), &mut memo))
}

fn ldim_rec(idx: &ClassIndex, subset: &MemberSet, memo: &mut HashMap<Box<[u64]>, i32>) -> i32 {
    match subset.count() {
        0 => return -1,
        1 => return 0,
        _ => {}
    }
    let key = subset.key();
    if let Some(&d) = memo.get(&key) {
        return d;
    }
    let mut best = 0;
    for x in 0..idx.n_points {
        let s0 = subset.and(&idx.zeros[x]);
        let s1 = subset.and(&idx.ones[x]);
        if s0.is_empty() || s1.is_empty() {
            continue;
        }
        let d = 1 + ldim_rec(idx, &s0, memo).min(ldim_rec(idx, &s1, memo));
        if d > best {
            best = d;
        }
    }
    memo.insert(key, best);
    best
}

/// VC dimension by enumerating point subsets in increasing size.
pub fn vc_dimension(class: &HypothesisClass) -> Result<i32> {
    let idx = ClassIndex::build(class)?;
    if idx.n_members == 0 {
        return Ok(-1);
    }
    let n = idx.n_points;
    let mut vc = 0i32;
    for size in 1..=n {
        let mut found = false;
        for mask in 0u32..1 << n {
            if mask.count_ones() as usize != size {
                continue;
            }
            let pts: Vec<usize> = (0..n).filter(|&x| mask >> x & 1 == 1).collect();
            if is_shattered_set(class, &pts) {
                found = true;
                break;
            }
        }
        if !found {
            break;
        }
        vc = size as i32;
    }
    Ok(vc)
}

fn is_shattered_set(class: &HypothesisClass, pts: &[usize]) -> bool {
    let mut seen = vec![false; 1 << pts.len()];
    let mut distinct = 0;
    for h in class.members() {
        let mut pat = 0usize;
        for (i, &x) in pts.iter().enumerate() {
            if h.label(DomainPoint(x)) {
                pat |= 1 << i;
            }
        }
        if !seen[pat] {
            seen[pat] = true;
            distinct += 1;
            if distinct == 1 << pts.len() {
                return true;
            }
        }
    }
    false
}

/// Threshold dimension: the largest `k` admitting points
/// `x_1 < ... < x_k` and members `h_1, ..., h_k` with
/// `h_t(x_i) = 1 <=> i >= t`. The empty staircase is trivially present,
/// so the all-zeros class has threshold dimension 0.
pub fn threshold_dimension(class: &HypothesisClass) -> Result<i32> {
    let idx = ClassIndex::build(class)?;
    if idx.n_members == 0 {
        return Ok(0);
    }
    let mut best = 0usize;
    // rows[t-1]: members still able to play h_t; prefix_zero: members
    // labeling every chosen point 0 (candidates for the next new row).
    let mut rows: Vec<MemberSet> = Vec::new();
    dfs_threshold(&idx, 0, &mut rows, idx.all(), &mut best);
    Ok(best as i32)
}

fn dfs_threshold(
    idx: &ClassIndex,
    start: usize,
    rows: &mut Vec<MemberSet>,
    prefix_zero: MemberSet,
    best: &mut usize,
) {
    if rows.len() > *best {
        *best = rows.len();
    }
    for x in start..idx.n_points {
        // Appending x as x_{j+1}: existing rows need h_t(x) = 1, the new
        // row j+1 needs 0s on the prefix and 1 at x.
        let new_row = prefix_zero.and(&idx.ones[x]);
        if new_row.is_empty() {
            continue;
        }
        let narrowed: Vec<MemberSet> = rows.iter().map(|r| r.and(&idx.ones[x])).collect();
        if narrowed.iter().any(MemberSet::is_empty) {
            continue;
        }
        let saved = std::mem::replace(rows, narrowed);
        rows.push(new_row);
        let next_zero = prefix_zero.and(&idx.zeros[x]);
        dfs_threshold(idx, x + 1, rows, next_zero, best);
        *rows = saved;
    }
}

/// Checks that the threshold dimension is at least
/// `floor(log2 d)` where `d` is the Littlestone dimension. Vacuously true
/// when `d < 1`.
pub fn check_log_threshold_bound(class: &HypothesisClass) -> Result<bool> {
    let d = littlestone_dimension(class)?;
    if d < 1 {
        return Ok(true);
    }
    let bound = (d as u32).ilog2() as i32;
    Ok(threshold_dimension(class)? >= bound)
}

/// The three dimensions of a class plus the log-threshold inequality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimensionReport {
    pub vc: i32,
    pub littlestone: i32,
    pub threshold: i32,
    pub bound_holds: bool,
}

pub fn dimension_report(class: &HypothesisClass) -> Result<DimensionReport> {
    Ok(DimensionReport {
        vc: vc_dimension(class)?,
        littlestone: littlestone_dimension(class)?,
        threshold: threshold_dimension(class)?,
        bound_holds: check_log_threshold_bound(class)?,
    })
}
