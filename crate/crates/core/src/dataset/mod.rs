//! Labeled requirement–class feature matrices, the chronological split
//! and training-set undersampling.

mod build;

pub use build::{build_matrix, MatrixBuild, MatrixConfig, MatrixInputs, RequirementAudit, TlccGranularity};

use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub requirement_key: String,
    pub class_path: String,
    /// Commit position of the requirement's first linked commit.
    pub sequence: usize,
    /// One value per matrix feature; `None` is a missing value.
    pub values: Vec<Option<f64>>,
    pub impacted: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub features: Vec<String>,
    pub rows: Vec<FeatureRow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DatasetError {
    #[error("row {row} has {found} values for {expected} features")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("rows are not in chronological requirement order at row {0}")]
    NotChronological(usize),
    #[error("split leaves an empty side ({train} train rows, {test} test rows)")]
    DegenerateSplit { train: usize, test: usize },
    #[error("training data has no impacted rows")]
    NoPositives,
    #[error("only {negatives} non-impacted rows for {positives} impacted ones")]
    InsufficientNegatives { positives: usize, negatives: usize },
    #[error("unknown feature {0}")]
    UnknownFeature(String),
}

impl FeatureMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.rows.iter().filter(|r| r.impacted).count()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f == name)
    }

    pub fn check_rectangular(&self) -> Result<(), DatasetError> {
        let expected = self.features.len();
        match self.rows.iter().position(|r| r.values.len() != expected) {
            Some(row) => Err(DatasetError::RaggedRow {
                row,
                expected,
                found: self.rows[row].values.len(),
            }),
            None => Ok(()),
        }
    }

    /// Sequences never decrease and each requirement's rows are contiguous.
    pub fn check_chronological(&self) -> Result<(), DatasetError> {
        let mut seen: Vec<&str> = Vec::new();
        for (i, w) in self.rows.windows(2).enumerate() {
            if w[1].sequence < w[0].sequence {
                return Err(DatasetError::NotChronological(i + 1));
            }
            if w[1].requirement_key != w[0].requirement_key {
                seen.push(&w[0].requirement_key);
                if seen.contains(&w[1].requirement_key.as_str()) {
                    return Err(DatasetError::NotChronological(i + 1));
                }
            }
        }
        Ok(())
    }

    /// Keeps only the named features, in the given order.
    pub fn project(&self, names: &[String]) -> Result<FeatureMatrix, DatasetError> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| self.feature_index(n).ok_or_else(|| DatasetError::UnknownFeature(n.clone())))
            .collect::<Result<_, _>>()?;
        Ok(FeatureMatrix {
            features: names.to_vec(),
            rows: self
                .rows
                .iter()
                .map(|r| FeatureRow {
                    values: idx.iter().map(|&i| r.values[i]).collect(),
                    ..r.clone()
                })
                .collect(),
        })
    }

    fn with_rows(&self, rows: Vec<FeatureRow>) -> FeatureMatrix {
        FeatureMatrix {
            features: self.features.clone(),
            rows,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: FeatureMatrix,
    pub test: FeatureMatrix,
    /// Key of the first test requirement.
    pub boundary_key: String,
    /// `⌈fraction · rows⌉` before snapping to a requirement boundary.
    pub target_rows: usize,
}

/// Chronological train/test split. The cut is the requirement boundary
/// nearest to `⌈fraction · rows⌉`; ties favour the larger training side.
pub fn time_split(matrix: &FeatureMatrix, train_fraction: f64) -> Result<Split, DatasetError> {
    matrix.check_rectangular()?;
    matrix.check_chronological()?;
    let n = matrix.rows.len();
    let target = crate::num::ceil(train_fraction * n as f64) as usize;
    let cut = (1..n)
        .filter(|&i| matrix.rows[i].requirement_key != matrix.rows[i - 1].requirement_key)
        .min_by_key(|&i| (i.abs_diff(target), core::cmp::Reverse(i)));
    let Some(cut) = cut else {
        let train = if target >= n { n } else { 0 };
        return Err(DatasetError::DegenerateSplit { train, test: n - train });
    };
    Ok(Split {
        train: matrix.with_rows(matrix.rows[..cut].to_vec()),
        test: matrix.with_rows(matrix.rows[cut..].to_vec()),
        boundary_key: matrix.rows[cut].requirement_key.clone(),
        target_rows: target,
    })
}

/// Seed and repetition count for the undersampling protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub seed: u64,
    pub repeats: usize,
}

impl Default for SampleSpec {
    fn default() -> Self {
        SampleSpec { seed: 0, repeats: 20 }
    }
}

impl SampleSpec {
    /// `seed + k` for `k = 1..=repeats`.
    pub fn seeds(&self) -> Vec<u64> {
        (1..=self.repeats as u64).map(|k| self.seed.wrapping_add(k)).collect()
    }
}

/// Keeps every impacted row and an equal number of non-impacted rows
/// drawn without replacement; row order is preserved.
pub fn undersample(train: &FeatureMatrix, seed: u64) -> Result<FeatureMatrix, DatasetError> {
    let negatives: Vec<usize> = (0..train.rows.len()).filter(|&i| !train.rows[i].impacted).collect();
    let positives = train.rows.len() - negatives.len();
    if positives == 0 {
        return Err(DatasetError::NoPositives);
    }
    if negatives.len() < positives {
        return Err(DatasetError::InsufficientNegatives {
            positives,
            negatives: negatives.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep: Vec<usize> = rand::seq::index::sample(&mut rng, negatives.len(), positives)
        .into_iter()
        .map(|j| negatives[j])
        .collect();
    keep.extend((0..train.rows.len()).filter(|&i| train.rows[i].impacted));
    keep.sort_unstable();
    Ok(train.with_rows(keep.into_iter().map(|i| train.rows[i].clone()).collect()))
}
