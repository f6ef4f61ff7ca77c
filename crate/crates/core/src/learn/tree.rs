//! Binary decision trees over numeric features.

use alloc::boxed::Box;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::num;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SplitRule {
    /// Highest gain ratio among features with at least average gain.
    GainRatio,
    /// Highest information gain.
    Gain,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct TreeParams {
    pub min_leaf: usize,
    pub rule: SplitRule,
    /// Random feature candidates per split; `None` tries every feature.
    pub features_per_split: Option<usize>,
    /// Confidence factor for pessimistic pruning; `None` leaves the tree unpruned.
    pub prune_confidence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        positives: usize,
        total: usize,
    },
    Split {
        feature: usize,
        /// Values `<= threshold` go left.
        threshold: f64,
        positives: usize,
        total: usize,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    fn counts(&self) -> (usize, usize) {
        match self {
            Node::Leaf { positives, total } | Node::Split { positives, total, .. } => (*positives, *total),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaves(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Split { left, right, .. } => left.leaves() + right.leaves(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: Node,
}

impl DecisionTree {
    /// Grows a tree on the rows named by `rows` (duplicates allowed).
    pub(crate) fn fit<R: Rng + ?Sized>(x: &[Vec<f64>], y: &[bool], rows: Vec<usize>, params: &TreeParams, rng: &mut R) -> Self {
        let d = x.first().map_or(0, Vec::len);
        let mut root = grow(x, y, rows, d, params, rng);
        if let Some(cf) = params.prune_confidence {
            prune(&mut root, cf);
        }
        DecisionTree { root }
    }

    /// Fraction of impacted training rows in the leaf reached by `row`.
    /// Missing values follow the branch that saw more training rows.
    pub fn probability(&self, row: &[Option<f64>]) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { positives, total } => return *positives as f64 / (*total).max(1) as f64,
                Node::Split {
                    feature, threshold, left, right, ..
                } => {
                    node = match row[*feature] {
                        Some(v) if v <= *threshold => left,
                        Some(_) => right,
                        None if left.counts().1 >= right.counts().1 => left,
                        None => right,
                    };
                }
            }
        }
    }
}

struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
    ratio: f64,
}

fn grow<R: Rng + ?Sized>(x: &[Vec<f64>], y: &[bool], rows: Vec<usize>, d: usize, params: &TreeParams, rng: &mut R) -> Node {
    let total = rows.len();
    let positives = rows.iter().filter(|&&r| y[r]).count();
    let leaf = Node::Leaf { positives, total };
    if positives == 0 || positives == total || total < 2 * params.min_leaf.max(1) {
        return leaf;
    }

    let features: Vec<usize> = match params.features_per_split {
        Some(k) if k < d => {
            let mut f = rand::seq::index::sample(rng, d, k.max(1)).into_vec();
            f.sort_unstable();
            f
        }
        _ => (0..d).collect(),
    };
    let parent_entropy = num::entropy_bits(&[positives, total - positives]);
    let candidates: Vec<Candidate> = features
        .iter()
        .filter_map(|&f| best_threshold(x, y, &rows, f, parent_entropy, params.min_leaf.max(1)))
        .filter(|c| c.gain > 1e-12)
        .collect();
    let chosen = match params.rule {
        SplitRule::Gain => candidates.iter().fold(None::<&Candidate>, |best, c| match best {
            Some(b) if b.gain >= c.gain => Some(b),
            _ => Some(c),
        }),
        SplitRule::GainRatio => {
            if candidates.is_empty() {
                None
            } else {
                let mean = candidates.iter().map(|c| c.gain).sum::<f64>() / candidates.len() as f64;
                candidates
                    .iter()
                    .filter(|c| c.gain >= mean - 1e-12)
                    .fold(None::<&Candidate>, |best, c| match best {
                        Some(b) if b.ratio >= c.ratio => Some(b),
                        _ => Some(c),
                    })
            }
        }
    };
    let Some(chosen) = chosen else { return leaf };
    let (feature, threshold) = (chosen.feature, chosen.threshold);
    let (l, r): (Vec<usize>, Vec<usize>) = rows.into_iter().partition(|&i| x[i][feature] <= threshold);
    Node::Split {
        feature,
        threshold,
        positives,
        total,
        left: Box::new(grow(x, y, l, d, params, rng)),
        right: Box::new(grow(x, y, r, d, params, rng)),
    }
}

/// Best binary cut of one feature by information gain.
fn best_threshold(x: &[Vec<f64>], y: &[bool], rows: &[usize], feature: usize, parent_entropy: f64, min_leaf: usize) -> Option<Candidate> {
    let mut sorted: Vec<(f64, bool)> = rows.iter().map(|&i| (x[i][feature], y[i])).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = sorted.len();
    let total_pos = sorted.iter().filter(|s| s.1).count();
    let nf = n as f64;
    let mut best: Option<Candidate> = None;
    let mut left_pos = 0;
    for i in 1..n {
        if sorted[i - 1].1 {
            left_pos += 1;
        }
        if sorted[i - 1].0 == sorted[i].0 || i < min_leaf || n - i < min_leaf {
            continue;
        }
        let right_pos = total_pos - left_pos;
        let (nl, nr) = (i as f64, (n - i) as f64);
        let child = nl / nf * num::entropy_bits(&[left_pos, i - left_pos]) + nr / nf * num::entropy_bits(&[right_pos, n - i - right_pos]);
        let gain = parent_entropy - child;
        if best.as_ref().is_none_or(|b| gain > b.gain) {
            let (lo, hi) = (sorted[i - 1].0, sorted[i].0);
            let mid = lo + (hi - lo) / 2.0;
            let threshold = if mid < hi { mid } else { lo };
            let iv = num::entropy_bits(&[i, n - i]);
            best = Some(Candidate {
                feature,
                threshold,
                gain,
                ratio: if iv > 0.0 { gain / iv } else { 0.0 },
            });
        }
    }
    best
}

/// Pessimistic subtree replacement; returns the estimated error count.
fn prune(node: &mut Node, cf: f64) -> f64 {
    let (positives, total) = node.counts();
    let leaf_errors = positives.min(total - positives);
    let leaf_estimate = leaf_errors as f64 + added_errors(total as f64, leaf_errors as f64, cf);
    let Node::Split { left, right, .. } = node else {
        return leaf_estimate;
    };
    let tree_estimate = prune(left, cf) + prune(right, cf);
    if leaf_estimate <= tree_estimate + 0.1 {
        *node = Node::Leaf { positives, total };
        leaf_estimate
    } else {
        tree_estimate
    }
}

/// Extra errors expected at confidence `cf` on top of `e` observed errors
/// among `n` instances (upper binomial bound, normal approximation).
pub(crate) fn added_errors(n: f64, e: f64, cf: f64) -> f64 {
    if n <= 0.0 {
        return 0.0;
    }
    if e < 1.0 {
        let base = n * (1.0 - num::powf(cf, 1.0 / n));
        if e == 0.0 {
            return base;
        }
        return base + e * (added_errors(n, 1.0, cf) - base);
    }
    if e + 0.5 >= n {
        return (n - e).max(0.0);
    }
    let z = num::normal_quantile(1.0 - cf);
    let f = (e + 0.5) / n;
    let r = (f + z * z / (2.0 * n) + z * num::sqrt(f / n - f * f / n + z * z / (4.0 * n * n))) / (1.0 + z * z / n);
    r * n - e
}
