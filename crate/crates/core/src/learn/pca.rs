//! Principal component projection of feature matrices.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::linalg::symmetric_eigen;
use super::LearnError;
use crate::dataset::{FeatureMatrix, FeatureRow};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca {
    pub input_features: Vec<String>,
    pub means: Vec<f64>,
    /// Unit component vectors, strongest first.
    pub components: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    /// Variance share of the kept components.
    pub explained: f64,
    /// Components discarded for a (numerically) zero eigenvalue.
    pub zero_eigenvalues: usize,
}

impl Pca {
    pub fn project(&self, row: &[Option<f64>]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| {
                c.iter()
                    .zip(row.iter().zip(&self.means))
                    .map(|(w, (v, m))| w * v.map_or(0.0, |v| v - m))
                    .sum()
            })
            .collect()
    }

    /// Projects every row; missing inputs count as the training mean.
    pub fn transform(&self, matrix: &FeatureMatrix) -> FeatureMatrix {
        FeatureMatrix {
            features: (1..=self.components.len()).map(|i| format!("PC{i}")).collect(),
            rows: matrix
                .rows
                .iter()
                .map(|r| FeatureRow {
                    values: self.project(&r.values).into_iter().map(Some).collect(),
                    ..r.clone()
                })
                .collect(),
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.zero_eigenvalues > 0
    }
}

/// Keeps the fewest leading components whose eigenvalues reach `variance`
/// of the total.
pub fn pca_fit(matrix: &FeatureMatrix, variance: f64) -> Result<Pca, LearnError> {
    let d = matrix.features.len();
    let n = matrix.rows.len();
    let x: Vec<Vec<f64>> = matrix
        .rows
        .iter()
        .map(|r| r.values.iter().map(|v| v.ok_or(LearnError::MissingValues)).collect())
        .collect::<Result<_, _>>()?;
    let means: Vec<f64> = (0..d).map(|f| x.iter().map(|r| r[f]).sum::<f64>() / n.max(1) as f64).collect();
    let denom = n.saturating_sub(1).max(1) as f64;
    let mut cov = alloc::vec![alloc::vec![0.0; d]; d];
    for r in &x {
        for i in 0..d {
            for j in 0..=i {
                cov[i][j] += (r[i] - means[i]) * (r[j] - means[j]) / denom;
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            cov[j][i] = cov[i][j];
        }
    }
    let (values, vectors) = symmetric_eigen(&cov, 1e-10);
    let top = values.first().copied().unwrap_or(0.0).max(0.0);
    let nonzero = values.iter().filter(|&&v| v > 1e-12 * top.max(f64::MIN_POSITIVE)).count();
    let total: f64 = values[..nonzero].iter().sum();
    let mut kept = 0;
    let mut acc = 0.0;
    while kept < nonzero && (acc < variance * total || kept == 0) {
        acc += values[kept];
        kept += 1;
    }
    Ok(Pca {
        input_features: matrix.features.clone(),
        means,
        components: vectors[..kept].to_vec(),
        eigenvalues: values[..kept].to_vec(),
        explained: if total > 0.0 { acc / total } else { 0.0 },
        zero_eigenvalues: d - nonzero,
    })
}

pub fn pca_reduce(matrix: &FeatureMatrix, variance: f64) -> Result<(FeatureMatrix, Pca), LearnError> {
    let pca = pca_fit(matrix, variance)?;
    Ok((pca.transform(matrix), pca))
}
