//! Gaussian naive Bayes.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::num;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub mean: f64,
    pub variance: f64,
}

impl Gaussian {
    fn ln_density(&self, x: f64) -> f64 {
        let d = x - self.mean;
        -0.5 * num::ln(2.0 * core::f64::consts::PI * self.variance) - d * d / (2.0 * self.variance)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayes {
    /// `ln P(impacted)` and `ln P(not impacted)`.
    pub ln_prior: [f64; 2],
    /// Per feature, the `[impacted, not impacted]` densities; `None` for
    /// features that were constant in training.
    pub densities: Vec<Option<[Gaussian; 2]>>,
}

impl NaiveBayes {
    pub(crate) fn fit(x: &[Vec<f64>], y: &[bool]) -> Self {
        let d = x.first().map_or(0, Vec::len);
        let n = x.len() as f64;
        let pos = y.iter().filter(|&&v| v).count() as f64;
        let ln_prior = [num::ln(pos / n), num::ln((n - pos) / n)];
        let densities = (0..d)
            .map(|f| {
                let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r[f]), hi.max(r[f])));
                let range = hi - lo;
                if !(range > 0.0) {
                    return None;
                }
                let floor = 1e-9 * range * range;
                let fit = |class: bool| {
                    let vals: Vec<f64> = x.iter().zip(y).filter(|(_, &l)| l == class).map(|(r, _)| r[f]).collect();
                    let m = vals.iter().sum::<f64>() / vals.len() as f64;
                    let var = vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / vals.len() as f64;
                    Gaussian {
                        mean: m,
                        variance: var.max(floor),
                    }
                };
                Some([fit(true), fit(false)])
            })
            .collect();
        NaiveBayes { ln_prior, densities }
    }

    /// Posterior probability of the impacted class. Missing values drop
    /// their likelihood term.
    pub fn probability(&self, row: &[Option<f64>]) -> f64 {
        let mut lp = self.ln_prior;
        for (g, v) in self.densities.iter().zip(row) {
            if let (Some(g), Some(v)) = (g, v) {
                lp[0] += g[0].ln_density(*v);
                lp[1] += g[1].ln_density(*v);
            }
        }
        num::sigmoid(lp[0] - lp[1])
    }
}
