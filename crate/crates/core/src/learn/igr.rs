//! Information gain ratio of single features against the impact label.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dataset::FeatureMatrix;
use crate::num::entropy_bits;

pub const DEFAULT_BINS: usize = 10;

/// Equal-frequency bin of every value: a value whose first occurrence in
/// sorted order has rank `r` among `n` present values lands in bin
/// `r · bins / n`, so equal values always share a bin. Missing values get
/// their own category.
fn categories(values: &[Option<f64>], bins: usize) -> Vec<Option<usize>> {
    let mut present: Vec<f64> = values.iter().flatten().copied().collect();
    present.sort_by(f64::total_cmp);
    let n = present.len();
    values
        .iter()
        .map(|v| {
            v.map(|v| {
                let rank = present.partition_point(|p| p.total_cmp(&v).is_lt());
                rank * bins.max(1) / n
            })
        })
        .collect()
}

/// Gain ratio of already-aligned feature values and labels.
pub fn igr_values(values: &[Option<f64>], labels: &[bool], bins: usize) -> f64 {
    let n = labels.len();
    if n == 0 {
        return 0.0;
    }
    let mut table: BTreeMap<Option<usize>, [usize; 2]> = BTreeMap::new();
    for (c, &l) in categories(values, bins).into_iter().zip(labels) {
        table.entry(c).or_default()[usize::from(l)] += 1;
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let nf = n as f64;
    let conditional: f64 = table
        .values()
        .map(|counts| (counts[0] + counts[1]) as f64 / nf * entropy_bits(counts))
        .sum();
    let ig = entropy_bits(&[pos, n - pos]) - conditional;
    let sizes: Vec<usize> = table.values().map(|c| c[0] + c[1]).collect();
    let iv = entropy_bits(&sizes);
    if iv <= 1e-12 {
        return 0.0;
    }
    (ig / iv).clamp(0.0, 1.0)
}

/// Gain ratio of a named matrix column; unknown names score 0.
pub fn igr(matrix: &FeatureMatrix, feature: &str, bins: usize) -> f64 {
    let Some(f) = matrix.feature_index(feature) else {
        return 0.0;
    };
    let values: Vec<Option<f64>> = matrix.rows.iter().map(|r| r.values[f]).collect();
    let labels: Vec<bool> = matrix.rows.iter().map(|r| r.impacted).collect();
    igr_values(&values, &labels, bins)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IgrEntry {
    pub feature: String,
    pub igr: f64,
    /// 1-based.
    pub rank: usize,
}

/// Every feature by descending gain ratio, ties by name.
pub fn igr_rank(matrix: &FeatureMatrix, bins: usize) -> Vec<IgrEntry> {
    let mut scored: Vec<(String, f64)> = matrix.features.iter().map(|f| (f.clone(), igr(matrix, f, bins))).collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored
        .into_iter()
        .enumerate()
        .map(|(i, (feature, igr))| IgrEntry { feature, igr, rank: i + 1 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn identical_to_label_is_one() {
        let labels = [true, false, true, false, true, false];
        let values: Vec<Option<f64>> = labels.iter().map(|&l| Some(if l { 1.0 } else { 0.0 })).collect();
        assert!((igr_values(&values, &labels, 10) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_is_zero() {
        let labels = [true, false, true, false];
        assert_eq!(igr_values(&[Some(3.0); 4], &labels, 10), 0.0);
    }

    #[test]
    fn ties_share_a_bin_and_missing_is_its_own_category() {
        let cats = categories(&[Some(1.0), Some(1.0), Some(2.0), None, Some(3.0)], 2);
        assert_eq!(cats, [Some(0), Some(0), Some(1), None, Some(1)]);
    }

    #[test]
    fn ranking_orders_by_score_then_name() {
        use crate::dataset::FeatureRow;
        let rows = (0..4)
            .map(|i| FeatureRow {
                requirement_key: "R-1".into(),
                class_path: "A".into(),
                sequence: 0,
                values: vec![Some(0.0), Some((i % 2) as f64), Some(0.0)],
                impacted: i % 2 == 1,
            })
            .collect();
        let m = FeatureMatrix {
            features: vec!["b".into(), "signal".into(), "a".into()],
            rows,
        };
        let r = igr_rank(&m, 10);
        let names: Vec<&str> = r.iter().map(|e| e.feature.as_str()).collect();
        assert_eq!(names, ["signal", "a", "b"]);
        assert_eq!(r.iter().map(|e| e.rank).collect::<Vec<_>>(), [1, 2, 3]);
    }
}
