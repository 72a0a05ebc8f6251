//! Plane trees without unary vertices, their law under the stable tree's
//! `n`-leaf marginal, and the partition induced by the root's children.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::SetPartition;
use crate::rng::RngStream;
use crate::special::{ln_factorial, Alpha};

/// Largest leaf count for exhaustive enumeration.
pub const MAX_SKELETON_LEAVES: usize = 8;

/// Rooted plane tree; vertex 0 is the root and vertices are numbered in
/// depth-first preorder.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PlaneTree {
    children: Vec<Vec<usize>>,
}

impl PlaneTree {
    pub fn leaf() -> Self {
        PlaneTree { children: vec![Vec::new()] }
    }

    /// A new root whose children, left to right, are the given subtrees.
    pub fn join(subtrees: &[PlaneTree]) -> Self {
        let mut children = vec![Vec::with_capacity(subtrees.len())];
        for t in subtrees {
            let offset = children.len();
            children[0].push(offset);
            children.extend(t.children.iter().map(|c| c.iter().map(|v| v + offset).collect()));
        }
        PlaneTree { children }
    }

    pub fn num_vertices(&self) -> usize {
        self.children.len()
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.children[v].len()
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.children[v].is_empty()
    }

    /// Leaves in depth-first order.
    pub fn leaves(&self) -> Vec<usize> {
        (0..self.num_vertices()).filter(|&v| self.is_leaf(v)).collect()
    }

    pub fn num_leaves(&self) -> usize {
        self.children.iter().filter(|c| c.is_empty()).count()
    }

    pub fn has_unary_vertex(&self) -> bool {
        self.children.iter().any(|c| c.len() == 1)
    }

    /// Leaves of the subtree rooted at `v`, in depth-first order.
    pub fn subtree_leaves(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            if self.is_leaf(u) {
                out.push(u);
            }
            stack.extend(self.children[u].iter().rev());
        }
        out
    }

    /// Bracket notation: a leaf is `()`, an internal vertex wraps its children.
    pub fn to_brackets(&self) -> String {
        fn go(t: &PlaneTree, v: usize, out: &mut String) {
            out.push('(');
            for &c in t.children(v) {
                go(t, c, out);
            }
            out.push(')');
        }
        let mut s = String::new();
        go(self, 0, &mut s);
        s
    }
}

/// A plane tree with per-vertex marks and optional leaf labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkedTree {
    skeleton: PlaneTree,
    marks: Vec<f64>,
    /// `leaf_labels[i]` labels the `i`-th leaf in depth-first order.
    leaf_labels: Option<Vec<usize>>,
}

impl MarkedTree {
    pub fn new(skeleton: PlaneTree, marks: Vec<f64>, leaf_labels: Option<Vec<usize>>) -> Result<Self> {
        if skeleton.has_unary_vertex() {
            return Err(Error::Tree("vertex with out-degree 1".into()));
        }
        if marks.len() != skeleton.num_vertices() || marks.iter().any(|m| !(*m >= 0.0)) {
            return Err(Error::Tree("need one nonnegative mark per vertex".into()));
        }
        if let Some(labels) = &leaf_labels {
            let n = skeleton.num_leaves();
            let mut seen = vec![false; n + 1];
            if labels.len() != n || labels.iter().any(|&l| l == 0 || l > n || std::mem::replace(&mut seen[l], true)) {
                return Err(Error::Tree("leaf labels are not a bijection onto 1..n".into()));
            }
        }
        Ok(MarkedTree { skeleton, marks, leaf_labels })
    }

    /// Unmarked (all marks zero), unlabeled.
    pub fn unmarked(skeleton: PlaneTree) -> Result<Self> {
        let m = vec![0.0; skeleton.num_vertices()];
        Self::new(skeleton, m, None)
    }

    pub fn skeleton(&self) -> &PlaneTree {
        &self.skeleton
    }

    pub fn marks(&self) -> &[f64] {
        &self.marks
    }

    pub fn leaf_labels(&self) -> Option<&[usize]> {
        self.leaf_labels.as_deref()
    }
}

fn compositions(m: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![m]];
    }
    let mut out = Vec::new();
    for first in 1..=m - (parts - 1) {
        for mut rest in compositions(m - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn enumerate_memo(n: usize, memo: &mut HashMap<usize, Vec<PlaneTree>>) -> Vec<PlaneTree> {
    if let Some(v) = memo.get(&n) {
        return v.clone();
    }
    let mut out = Vec::new();
    if n == 1 {
        out.push(PlaneTree::leaf());
    } else {
        for c in 2..=n {
            for comp in compositions(n, c) {
                let pools: Vec<Vec<PlaneTree>> = comp.iter().map(|&m| enumerate_memo(m, memo)).collect();
                let mut idx = vec![0usize; c];
                loop {
                    let subtrees: Vec<PlaneTree> = idx.iter().zip(&pools).map(|(&i, p)| p[i].clone()).collect();
                    out.push(PlaneTree::join(&subtrees));
                    let mut j = c;
                    loop {
                        if j == 0 {
                            break;
                        }
                        j -= 1;
                        idx[j] += 1;
                        if idx[j] < pools[j].len() {
                            break;
                        }
                        idx[j] = 0;
                        if j == 0 {
                            j = usize::MAX;
                            break;
                        }
                    }
                    if j == usize::MAX {
                        break;
                    }
                }
            }
        }
    }
    memo.insert(n, out.clone());
    out
}

/// All plane trees with `n` leaves and no out-degree-1 vertex.
pub fn enumerate_skeletons(n: usize) -> Result<Vec<PlaneTree>> {
    if n == 0 || n > MAX_SKELETON_LEAVES {
        return Err(Error::invalid("n", format!("{n} is outside 1..={MAX_SKELETON_LEAVES}")));
    }
    Ok(enumerate_memo(n, &mut HashMap::new()))
}

/// Probability of a plane shape under the `n`-leaf marginal:
/// `n!/∏_{j<n}(jα-1) · ∏_v |(α-1)(α-2)…(α-c_v+1)|/c_v!`.
pub fn skeleton_probability(tree: &PlaneTree, alpha: Alpha) -> Result<f64> {
    if tree.has_unary_vertex() {
        return Err(Error::Tree("vertex with out-degree 1".into()));
    }
    let n = tree.num_leaves();
    if n < 2 {
        return Err(Error::Tree("need at least two leaves".into()));
    }
    let a = alpha.value();
    let mut ln = ln_factorial(n as u64);
    for j in 1..n {
        ln -= (j as f64 * a - 1.0).ln();
    }
    for v in 0..tree.num_vertices() {
        let c = tree.out_degree(v);
        if c == 0 {
            continue;
        }
        for i in 1..c {
            ln += (a - i as f64).abs().ln();
        }
        ln -= ln_factorial(c as u64);
    }
    Ok(ln.exp())
}

/// Enumerated skeletons with cumulative probabilities, for exact sampling.
#[derive(Debug, Clone)]
pub struct SkeletonTable {
    n: usize,
    trees: Vec<PlaneTree>,
    probabilities: Vec<f64>,
    cumulative: Vec<f64>,
}

impl SkeletonTable {
    pub fn new(n: usize, alpha: Alpha) -> Result<Self> {
        if !(2..=MAX_SKELETON_LEAVES).contains(&n) {
            return Err(Error::invalid("n", format!("{n} is outside 2..={MAX_SKELETON_LEAVES}")));
        }
        let trees = enumerate_skeletons(n)?;
        let probabilities: Vec<f64> = trees.iter().map(|t| skeleton_probability(t, alpha)).collect::<Result<_>>()?;
        let mut acc = 0.0;
        let cumulative = probabilities
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(SkeletonTable { n, trees, probabilities, cumulative })
    }

    pub fn trees(&self) -> &[PlaneTree] {
        &self.trees
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Sum of the unnormalised weights; one up to rounding.
    pub fn weight_sum(&self) -> f64 {
        *self.cumulative.last().expect("nonempty")
    }

    /// Index of a shape drawn from the table.
    pub fn sample_index(&self, rng: &mut RngStream) -> usize {
        let u = rng.open01() * self.weight_sum();
        self.cumulative.partition_point(|&c| c < u).min(self.trees.len() - 1)
    }

    /// A skeleton with uniformly permuted leaf labels, plus its shape index.
    pub fn sample(&self, rng: &mut RngStream) -> (usize, MarkedTree) {
        let i = self.sample_index(rng);
        let mut labels: Vec<usize> = (1..=self.n).collect();
        labels.shuffle(rng);
        let tree = MarkedTree::new(self.trees[i].clone(), vec![0.0; self.trees[i].num_vertices()], Some(labels))
            .expect("enumerated trees are valid");
        (i, tree)
    }
}

/// One labeled skeleton from the `n`-leaf marginal, `2 <= n <= 8`.
pub fn sample_skeleton(n: usize, alpha: Alpha, rng: &mut RngStream) -> Result<MarkedTree> {
    Ok(SkeletonTable::new(n, alpha)?.sample(rng).1)
}

/// Groups leaf labels by the root child whose subtree contains them.
pub fn first_split_partition(tree: &MarkedTree) -> Result<SetPartition> {
    let labels = tree.leaf_labels().ok_or_else(|| Error::Tree("first split needs leaf labels".into()))?;
    let sk = tree.skeleton();
    let n = sk.num_leaves();
    if n < 2 {
        return Err(Error::Tree("need at least two leaves".into()));
    }
    let leaf_rank: HashMap<usize, usize> = sk.leaves().into_iter().enumerate().map(|(i, v)| (v, i)).collect();
    let blocks =
        sk.children(0).iter().map(|&c| sk.subtree_leaves(c).iter().map(|v| labels[leaf_rank[v]]).collect()).collect();
    SetPartition::new(n, blocks)
}
