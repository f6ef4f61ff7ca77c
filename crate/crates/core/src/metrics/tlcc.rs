//! Temporal locality of class changes over a requirement sequence.
//!
//! `flags[i - 1]` is `T(i)`: whether requirement `i` (1-based, oldest
//! first) touched the class. Requirement `N` is the most recent one.

use thiserror::Error;

use crate::num;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum TlccError {
    #[error("class history is empty")]
    EmptyHistory,
}

/// Fraction of requirements that touched the class.
pub fn tlcc_scp(flags: &[bool]) -> Result<f64, TlccError> {
    weighted(flags, |_| 1.0)
}

/// Touches weighted by `1 / (1 + N - i)`.
pub fn tlcc_lin(flags: &[bool]) -> Result<f64, TlccError> {
    weighted(flags, |lag| 1.0 / (1.0 + lag as f64))
}

/// Touches weighted by `1 / ln(1 + N - i)`. The most recent requirement
/// has `ln 1 = 0` in the denominator and contributes nothing.
pub fn tlcc_log(flags: &[bool]) -> Result<f64, TlccError> {
    weighted(flags, |lag| if lag == 0 { 0.0 } else { 1.0 / num::ln(1.0 + lag as f64) })
}

/// `lag = N - i`, zero for the most recent requirement.
fn weighted(flags: &[bool], weight: impl Fn(usize) -> f64) -> Result<f64, TlccError> {
    let n = flags.len();
    if n == 0 {
        return Err(TlccError::EmptyHistory);
    }
    let total = flags
        .iter()
        .enumerate()
        .filter(|(_, &t)| t)
        .map(|(i, _)| weight(n - 1 - i))
        .fold(0.0, |acc, w| acc + w);
    Ok(total / n as f64)
}
