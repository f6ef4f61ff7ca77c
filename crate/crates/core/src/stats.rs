//! Rank-based group comparison and exact tests on 2×2 tables.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("need at least two groups")]
    TooFewGroups,
    #[error("group {0} is empty")]
    EmptyGroup(usize),
    #[error("need at least three observations in total")]
    TooFewObservations,
    #[error("observation {index} of group {group} is not finite")]
    NonFinite { group: usize, index: usize },
    #[error("a row or column margin of the table is zero")]
    ZeroMargin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KruskalWallis {
    pub h: f64,
    pub df: usize,
    pub p: f64,
    /// Every observation was equal; `h = 0`, `p = 1`.
    pub degenerate: bool,
    /// Some group has fewer than five observations, so the chi-square
    /// approximation is rough.
    pub small_sample: bool,
}

/// Midranks (1-based) of `values`, plus `Σ (t³ − t)` over tie groups.
fn midranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = alloc::vec![0.0; values.len()];
    let mut ties = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        let t = (j - i + 1) as f64;
        ties += t * t * t - t;
        i = j + 1;
    }
    (ranks, ties)
}

/// Kruskal–Wallis H with tie correction and its chi-square p-value.
pub fn kruskal_wallis(groups: &[Vec<f64>]) -> Result<KruskalWallis, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups);
    }
    for (g, group) in groups.iter().enumerate() {
        if group.is_empty() {
            return Err(StatsError::EmptyGroup(g));
        }
        if let Some(index) = group.iter().position(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite { group: g, index });
        }
    }
    let all: Vec<f64> = groups.iter().flatten().copied().collect();
    let n = all.len();
    if n < 3 {
        return Err(StatsError::TooFewObservations);
    }
    let df = groups.len() - 1;
    let small_sample = groups.iter().any(|g| g.len() < 5);
    let (ranks, ties) = midranks(&all);
    let nf = n as f64;
    let correction = 1.0 - ties / (nf * nf * nf - nf);
    if correction <= 1e-12 {
        return Ok(KruskalWallis {
            h: 0.0,
            df,
            p: 1.0,
            degenerate: true,
            small_sample,
        });
    }
    let centre = (nf + 1.0) / 2.0;
    let mut offset = 0;
    let mut sum = 0.0;
    for g in groups {
        let mean_rank = ranks[offset..offset + g.len()].iter().sum::<f64>() / g.len() as f64;
        sum += g.len() as f64 * (mean_rank - centre) * (mean_rank - centre);
        offset += g.len();
    }
    let h = (12.0 / (nf * (nf + 1.0)) * sum / correction).max(0.0);
    Ok(KruskalWallis {
        h,
        df,
        p: chi_square_sf(h, df as f64),
        degenerate: false,
        small_sample,
    })
}

/// Upper tail of the chi-square distribution.
pub fn chi_square_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_q(df / 2.0, x / 2.0).clamp(0.0, 1.0)
}

/// Regularised upper incomplete gamma `Q(a, x)`.
fn gamma_q(a: f64, x: f64) -> f64 {
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_fraction(a, x)
    }
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..1000 {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if num::abs(term) < num::abs(sum) * 1e-16 {
            break;
        }
    }
    sum * num::exp(-x + a * num::ln(x) - num::ln_gamma(a))
}

fn gamma_q_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..1000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if num::abs(d) < TINY {
            d = TINY;
        }
        c = b + an / c;
        if num::abs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if num::abs(delta - 1.0) < 1e-16 {
            break;
        }
    }
    num::exp(-x + a * num::ln(x) - num::ln_gamma(a)) * h
}

fn ln_choose(n: u64, k: u64) -> f64 {
    let lf = |v: u64| num::ln_gamma(v as f64 + 1.0);
    lf(n) - lf(k) - lf(n - k)
}

/// Two-sided Fisher exact p-value for `[[a, b], [c, d]]`: the total
/// probability of same-margin tables no more likely than the observed one.
pub fn fisher_exact_2x2(a: u64, b: u64, c: u64, d: u64) -> Result<f64, StatsError> {
    let (r1, r2, c1, c2) = (a + b, c + d, a + c, b + d);
    if r1 == 0 || r2 == 0 || c1 == 0 || c2 == 0 {
        return Err(StatsError::ZeroMargin);
    }
    let n = r1 + r2;
    let ln_p = |x: u64| ln_choose(r1, x) + ln_choose(r2, c1 - x) - ln_choose(n, c1);
    let observed = ln_p(a);
    let lo = r1.saturating_sub(c2);
    let hi = r1.min(c1);
    let p: f64 = (lo..=hi)
        .map(ln_p)
        .filter(|&lp| lp <= observed + 1e-7)
        .map(num::exp)
        .sum();
    Ok(p.min(1.0))
}
