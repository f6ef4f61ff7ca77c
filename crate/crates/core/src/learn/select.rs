//! Best-first wrapper feature selection.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{run_protocol, LearnError, LearnerSpec, ProtocolOptions};
use crate::dataset::{FeatureMatrix, SampleSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    /// Sorted feature indices of the best subset.
    pub subset: Vec<usize>,
    pub score: f64,
    /// Nodes taken off the open list and expanded.
    pub expansions: usize,
    /// Distinct subsets scored.
    pub evaluated: usize,
}

/// Orders `(subset, score)` pairs best first: higher score, then fewer
/// features, then lexicographically smaller index list.
fn rank(a: &(Vec<usize>, f64), b: &(Vec<usize>, f64)) -> Ordering {
    b.1.total_cmp(&a.1)
        .then(a.0.len().cmp(&b.0.len()))
        .then_with(|| a.0.cmp(&b.0))
}

/// Best-first search over subsets of `0..n`, starting from the empty set
/// and moving by adding or removing one feature. Stops once `stale_limit`
/// consecutive expansions fail to raise the best score by more than
/// `min_improvement` (relative), or when nothing is left to expand.
pub fn best_first<E>(
    n: usize,
    stale_limit: usize,
    min_improvement: f64,
    score: &mut dyn FnMut(&[usize]) -> Result<f64, E>,
) -> Result<SearchOutcome, E> {
    let mut visited: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    let start = score(&[])?;
    visited.insert(Vec::new(), start);
    let mut open: Vec<(Vec<usize>, f64)> = alloc::vec![(Vec::new(), start)];
    let mut best_score = start;
    let mut stale = 0;
    let mut expansions = 0;

    while !open.is_empty() && stale < stale_limit {
        open.sort_by(rank);
        let (node, _) = open.remove(0);
        expansions += 1;
        let mut improved = false;
        for f in 0..n {
            let mut child = node.clone();
            match child.binary_search(&f) {
                Ok(i) => {
                    child.remove(i);
                }
                Err(i) => child.insert(i, f),
            }
            if visited.contains_key(&child) {
                continue;
            }
            let s = score(&child)?;
            visited.insert(child.clone(), s);
            if s > best_score + min_improvement * best_score.abs() {
                best_score = s;
                improved = true;
            }
            open.push((child, s));
        }
        stale = if improved { 0 } else { stale + 1 };
    }

    let (subset, score) = visited
        .iter()
        .map(|(k, v)| (k.clone(), *v))
        .min_by(rank)
        .unwrap_or((Vec::new(), start));
    Ok(SearchOutcome {
        subset,
        score,
        expansions,
        evaluated: visited.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionOptions {
    /// Sampling used to score each candidate subset.
    pub search: SampleSpec,
    /// Repeats used to re-score the chosen subset.
    pub final_repeats: usize,
    pub stale_limit: usize,
    pub min_improvement: f64,
    pub protocol: ProtocolOptions,
}

impl Default for SelectionOptions {
    fn default() -> Self {
        SelectionOptions {
            search: SampleSpec { seed: 0, repeats: 5 },
            final_repeats: 20,
            stale_limit: 5,
            min_improvement: 0.001,
            protocol: ProtocolOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub learner: String,
    pub subset: Vec<String>,
    /// Mean F1 of the subset under the final repeat count.
    pub score: f64,
    /// Mean F1 seen during the search.
    pub search_score: f64,
    pub expansions: usize,
    pub evaluated: usize,
}

fn subset_score(spec: &LearnerSpec, matrix: &FeatureMatrix, names: &[String], sample: &SampleSpec, protocol: &ProtocolOptions) -> Result<f64, LearnError> {
    if names.is_empty() {
        return Ok(0.0);
    }
    let projected = matrix.project(names)?;
    Ok(run_protocol(spec, &projected, sample, protocol)?.mean.f1)
}

/// Wrapper selection scored by the mean F1 of the evaluation protocol.
/// The empty subset scores 0. Features are searched in name order.
pub fn wrapper_select(spec: &LearnerSpec, matrix: &FeatureMatrix, options: &SelectionOptions) -> Result<Selection, LearnError> {
    let mut names = matrix.features.clone();
    names.sort();
    let pick = |subset: &[usize]| -> Vec<String> { subset.iter().map(|&i| names[i].clone()).collect() };
    let outcome = best_first(names.len(), options.stale_limit, options.min_improvement, &mut |subset: &[usize]| {
        subset_score(spec, matrix, &pick(subset), &options.search, &options.protocol)
    })?;
    let subset = pick(&outcome.subset);
    let final_sample = SampleSpec {
        seed: options.search.seed,
        repeats: options.final_repeats,
    };
    let score = subset_score(spec, matrix, &subset, &final_sample, &options.protocol)?;
    Ok(Selection {
        learner: String::from(spec.kind.code()),
        subset,
        score,
        search_score: outcome.score,
        expansions: outcome.expansions,
        evaluated: outcome.evaluated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::convert::Infallible;

    #[test]
    fn flat_scorer_stops_after_stale_limit() {
        let mut calls = 0;
        let out = best_first::<Infallible>(6, 5, 0.001, &mut |_s: &[usize]| {
            calls += 1;
            Ok(0.5)
        })
        .unwrap();
        assert_eq!(out.expansions, 5);
        assert!(out.subset.is_empty());
        assert_eq!(out.evaluated, calls);
    }

    #[test]
    fn finds_planted_singleton() {
        let out = best_first::<Infallible>(4, 5, 0.001, &mut |s: &[usize]| {
            Ok(if s.contains(&2) { 1.0 - 0.01 * (s.len() - 1) as f64 } else { 0.1 * s.len() as f64 })
        })
        .unwrap();
        assert_eq!(out.subset, [2]);
        assert_eq!(out.score, 1.0);
    }

    #[test]
    fn ties_prefer_smaller_then_lexicographic() {
        let out = best_first::<Infallible>(3, 5, 0.001, &mut |s: &[usize]| Ok(if s.is_empty() { 0.0 } else { 1.0 })).unwrap();
        assert_eq!(out.subset, [0]);
    }
}
