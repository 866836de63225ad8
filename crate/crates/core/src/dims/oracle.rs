//! Reference checkers for the dimension calculators.
//!
//! These search for explicit shattered mistake trees and verify every
//! candidate with the definitional path check in [`shatters_tree`], rather
//! than evaluating the min-max recursion. Used to cross-check
//! [`littlestone_dimension`](super::littlestone_dimension).

use super::{shatters_tree, ClassIndex, MemberSet, MistakeTree};
use crate::model::HypothesisClass;
use crate::Result;
use std::collections::HashMap;

/// Search for a depth-`depth` mistake tree shattered by `class` and return
/// it as an explicit certificate, verified against the 2^depth path
/// definition.
pub fn find_shattered_tree(class: &HypothesisClass, depth: usize) -> Result<Option<MistakeTree>> {
    let idx = ClassIndex::build(class)?;
    if idx.n_members == 0 {
        return Ok(None);
    }
    let mut dead: HashMap<(Box<[u64]>, usize), ()> = HashMap::new();
    let tree = build(&idx, &idx.all(), depth, &mut dead);
    if let Some(t) = &tree {
        assert_eq!(t.depth(), Some(depth));
        assert!(shatters_tree(class, t), "certificate failed verification");
    }
    Ok(tree)
}

fn build(
    idx: &ClassIndex,
    viable: &MemberSet,
    depth: usize,
    dead: &mut HashMap<(Box<[u64]>, usize), ()>,
) -> Option<MistakeTree> {
    if viable.is_empty() {
        return None;
    }
    if depth == 0 {
        return Some(MistakeTree::Leaf);
    }
    let key = (viable.key(), depth);
    if dead.contains_key(&key) {
        return None;
    }
    for x in 0..idx.n_points {
        let v0 = viable.and(&idx.zeros[x]);
        let v1 = viable.and(&idx.ones[x]);
        if v0.is_empty() || v1.is_empty() {
            continue;
        }
        if let Some(zero) = build(idx, &v0, depth - 1, dead) {
            if let Some(one) = build(idx, &v1, depth - 1, dead) {
                return Some(MistakeTree::node(x, zero, one));
            }
        }
    }
    dead.insert(key, ());
    None
}

/// Maximum depth of any shattered mistake tree, with a certificate.
/// Returns `(-1, None)` for the empty class.
pub fn deepest_shattered_tree(class: &HypothesisClass) -> Result<(i32, Option<MistakeTree>)> {
    if class.is_empty() {
        return Ok((-1, None));
    }
    let mut best = (0, Some(MistakeTree::Leaf));
    let mut depth = 1;
    while let Some(tree) = find_shattered_tree(class, depth)? {
        best = (depth as i32, Some(tree));
        depth += 1;
    }
    Ok(best)
}

/// All mistake trees of the given depth over `[domain_size]`. Sizes grow
/// as `domain_size^(2^depth - 1)`; only usable for tiny instances.
pub fn enumerate_trees(domain_size: usize, depth: usize) -> Vec<MistakeTree> {
    if depth == 0 {
        return vec![MistakeTree::Leaf];
    }
    let subtrees = enumerate_trees(domain_size, depth - 1);
    let mut out = Vec::new();
    for x in 0..domain_size {
        for zero in &subtrees {
            for one in &subtrees {
                out.push(MistakeTree::node(x, zero.clone(), one.clone()));
            }
        }
    }
    out
}

/// Littlestone dimension by full tree enumeration; tiny instances only.
pub fn ldim_by_enumeration(class: &HypothesisClass, max_depth: usize) -> i32 {
    if class.is_empty() {
        return -1;
    }
    let mut best = 0;
    for d in 1..=max_depth {
        if enumerate_trees(class.domain_size(), d)
            .iter()
            .any(|t| shatters_tree(class, t))
        {
            best = d as i32;
        } else {
            break;
        }
    }
    best
}
