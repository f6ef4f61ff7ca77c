//! Ridge-penalised logistic regression fitted by Newton iterations.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::linalg::solve_spd;
use crate::num;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Logistic {
    /// Training means, also used for missing values.
    pub means: Vec<f64>,
    /// Training standard deviations; zero marks an ignored feature.
    pub scales: Vec<f64>,
    /// Weights on standardised features.
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Penalised negative log-likelihood.
fn loss(z: &[Vec<f64>], y: &[bool], w: &[f64], b: f64, ridge: f64) -> f64 {
    let nll: f64 = z
        .iter()
        .zip(y)
        .map(|(row, &label)| {
            let eta = b + dot(row, w);
            if label {
                num::softplus(-eta)
            } else {
                num::softplus(eta)
            }
        })
        .sum();
    nll + ridge * w.iter().map(|v| v * v).sum::<f64>()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Logistic {
    pub(crate) fn fit(x: &[Vec<f64>], y: &[bool], ridge: f64, max_iterations: usize, tolerance: f64) -> Self {
        let n = x.len();
        let d = x.first().map_or(0, Vec::len);
        let means: Vec<f64> = (0..d).map(|f| x.iter().map(|r| r[f]).sum::<f64>() / n as f64).collect();
        let scales: Vec<f64> = (0..d)
            .map(|f| {
                let var = x.iter().map(|r| (r[f] - means[f]) * (r[f] - means[f])).sum::<f64>() / n as f64;
                num::sqrt(var)
            })
            .collect();
        let z: Vec<Vec<f64>> = x
            .iter()
            .map(|r| (0..d).map(|f| if scales[f] > 0.0 { (r[f] - means[f]) / scales[f] } else { 0.0 }).collect())
            .collect();

        let mut w = vec![0.0; d];
        let mut b = 0.0;
        let mut current = loss(&z, y, &w, b, ridge);
        let mut iterations = 0;
        let mut converged = false;
        while iterations < max_iterations {
            iterations += 1;
            // Parameter vector is [w_1..w_d, b].
            let mut grad = vec![0.0; d + 1];
            let mut hess = vec![vec![0.0; d + 1]; d + 1];
            for (row, &label) in z.iter().zip(y) {
                let p = num::sigmoid(b + dot(row, &w));
                let r = p - if label { 1.0 } else { 0.0 };
                let s = (p * (1.0 - p)).max(1e-12);
                for i in 0..=d {
                    let xi = if i < d { row[i] } else { 1.0 };
                    grad[i] += r * xi;
                    for j in 0..=i {
                        let xj = if j < d { row[j] } else { 1.0 };
                        hess[i][j] += s * xi * xj;
                    }
                }
            }
            for i in 0..d {
                grad[i] += 2.0 * ridge * w[i];
                hess[i][i] += 2.0 * ridge;
            }
            for i in 0..=d {
                for j in 0..i {
                    hess[j][i] = hess[i][j];
                }
            }
            let Some(step) = solve_spd(&hess, &grad) else { break };
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..30 {
                let nw: Vec<f64> = (0..d).map(|i| w[i] - t * step[i]).collect();
                let nb = b - t * step[d];
                let l = loss(&z, y, &nw, nb, ridge);
                if l.is_finite() && l <= current {
                    accepted = Some((nw, nb, l));
                    break;
                }
                t *= 0.5;
            }
            let Some((nw, nb, l)) = accepted else {
                converged = true;
                break;
            };
            let delta = current - l;
            w = nw;
            b = nb;
            current = l;
            if delta <= tolerance * current.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        Logistic {
            means,
            scales,
            weights: w,
            intercept: b,
            iterations,
            converged,
        }
    }

    /// Probability of the impacted class; missing values take the training mean.
    pub fn probability(&self, row: &[Option<f64>]) -> f64 {
        let eta: f64 = self.intercept
            + row
                .iter()
                .enumerate()
                .map(|(f, v)| match v {
                    Some(v) if self.scales[f] > 0.0 => self.weights[f] * (v - self.means[f]) / self.scales[f],
                    _ => 0.0,
                })
                .sum::<f64>();
        num::sigmoid(eta)
    }
}
