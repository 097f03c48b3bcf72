//! Wilcoxon signed-rank test for paired samples.
//!
//! Zero differences are dropped and tied absolute differences share their
//! average rank. For up to [`EXACT_MAX_N`] pairs the p-value is exact: the
//! null distribution of the positive rank sum is counted over all `2^n` sign
//! assignments of the observed rank multiset (ties included). Above that a
//! tie-corrected normal approximation with continuity correction is used.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest sample size that gets an exact p-value.
pub const EXACT_MAX_N: usize = 20;
/// Largest sample size served by [`critical_value`].
pub const CRITICAL_TABLE_MAX_N: usize = 30;
/// Relative tolerance under which two absolute differences are tied, or a
/// difference counts as zero.
pub const DEFAULT_TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alternative {
    /// x tends to exceed y.
    Greater,
    Less,
    TwoSided,
}

impl std::str::FromStr for Alternative {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greater" => Ok(Alternative::Greater),
            "less" => Ok(Alternative::Less),
            "two-sided" => Ok(Alternative::TwoSided),
            other => Err(Error::InvalidInput(format!(
                "unknown alternative {other:?} (expected greater, less or two-sided)"
            ))),
        }
    }
}

impl std::fmt::Display for Alternative {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Alternative::Greater => "greater",
            Alternative::Less => "less",
            Alternative::TwoSided => "two-sided",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ExactEnumeration,
    NormalApproximation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WilcoxonOutcome {
    /// Pairs left after dropping zero differences.
    pub n_effective: usize,
    pub n_zero: usize,
    pub w_plus: f64,
    pub w_minus: f64,
    /// `min(w_plus, w_minus)` two-sided, `w_minus` for greater, `w_plus` for less.
    pub w_statistic: f64,
    pub p_value: f64,
    pub method: Method,
    pub alternative: Alternative,
    /// Signed rank of each non-zero pair, input order.
    pub signed_ranks: Vec<f64>,
}

pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64], alternative: Alternative) -> Result<WilcoxonOutcome> {
    wilcoxon_signed_rank_with_tolerance(x, y, alternative, DEFAULT_TIE_TOLERANCE)
}

pub fn wilcoxon_signed_rank_with_tolerance(
    x: &[f64],
    y: &[f64],
    alternative: Alternative,
    tie_tolerance: f64,
) -> Result<WilcoxonOutcome> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "paired samples differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::InvalidInput("need at least two pairs".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("paired samples must be finite".into()));
    }

    let diffs: Vec<f64> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| (*a - *b).abs() > tie_tolerance * a.abs().max(b.abs()))
        .map(|(a, b)| a - b)
        .collect();
    let n = diffs.len();
    let n_zero = x.len() - n;
    if n == 0 {
        return Err(Error::AllZeroDifferences);
    }

    let (ranks2, tie_groups) = doubled_ranks(&diffs, tie_tolerance);
    let total2: u64 = ranks2.iter().sum();
    let w_plus2: u64 = diffs.iter().zip(&ranks2).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let w_plus = w_plus2 as f64 / 2.0;
    let w_minus = (total2 - w_plus2) as f64 / 2.0;

    let (p_value, method) = if n <= EXACT_MAX_N {
        (exact_p(&ranks2, w_plus2, alternative), Method::ExactEnumeration)
    } else {
        (normal_p(n, &tie_groups, w_plus, alternative), Method::NormalApproximation)
    };

    let w_statistic = match alternative {
        Alternative::TwoSided => w_plus.min(w_minus),
        Alternative::Greater => w_minus,
        Alternative::Less => w_plus,
    };
    let signed_ranks = diffs
        .iter()
        .zip(&ranks2)
        .map(|(d, &r)| d.signum() * r as f64 / 2.0)
        .collect();

    Ok(WilcoxonOutcome {
        n_effective: n,
        n_zero,
        w_plus,
        w_minus,
        w_statistic,
        p_value: p_value.clamp(f64::MIN_POSITIVE, 1.0),
        method,
        alternative,
        signed_ranks,
    })
}

/// Twice the average rank of each `|d|` (integral even with ties), plus the
/// size of every tie group.
fn doubled_ranks(diffs: &[f64], tol: f64) -> (Vec<u64>, Vec<usize>) {
    let n = diffs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| diffs[a].abs().total_cmp(&diffs[b].abs()));
    let mut ranks2 = vec![0u64; n];
    let mut groups = Vec::new();
    let mut i = 0;
    while i < n {
        let base = diffs[order[i]].abs();
        let mut j = i + 1;
        while j < n && diffs[order[j]].abs() - base <= tol * diffs[order[j]].abs() {
            j += 1;
        }
        // ranks i+1 ..= j share (i + 1 + j) / 2
        let r2 = (i + 1 + j) as u64;
        for &k in &order[i..j] {
            ranks2[k] = r2;
        }
        groups.push(j - i);
        i = j;
    }
    (ranks2, groups)
}

/// Number of sign assignments giving each doubled positive rank sum.
fn rank_sum_counts(ranks2: &[u64]) -> Vec<u64> {
    let total: u64 = ranks2.iter().sum();
    let mut counts = vec![0u64; total as usize + 1];
    counts[0] = 1;
    let mut reach = 0usize;
    for &r in ranks2 {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] > 0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    counts
}

fn exact_p(ranks2: &[u64], w_plus2: u64, alternative: Alternative) -> f64 {
    let counts = rank_sum_counts(ranks2);
    let all = (1u64 << ranks2.len()) as f64;
    let w = w_plus2 as usize;
    let upper = counts[w..].iter().sum::<u64>() as f64 / all;
    let lower = counts[..=w].iter().sum::<u64>() as f64 / all;
    match alternative {
        Alternative::Greater => upper,
        Alternative::Less => lower,
        Alternative::TwoSided => (2.0 * upper.min(lower)).min(1.0),
    }
}

fn normal_p(n: usize, tie_groups: &[usize], w_plus: f64, alternative: Alternative) -> f64 {
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let tie_term: f64 = tie_groups.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
    let sd = var.sqrt();
    let std_normal = Normal::standard();
    let upper = std_normal.sf((w_plus - mean - 0.5) / sd);
    let lower = std_normal.cdf((w_plus - mean + 0.5) / sd);
    match alternative {
        Alternative::Greater => upper,
        Alternative::Less => lower,
        Alternative::TwoSided => (2.0 * upper.min(lower)).min(1.0),
    }
}

/// Critical value of the smaller-tail rank sum for `n` untied pairs: the
/// largest `w` with `P(W <= w) <= alpha` (one-sided) or `<= alpha / 2`
/// (two-sided). The null is rejected when the statistic is at most this.
/// `None` when `n` is outside `1..=30` or no `w` is small enough.
pub fn critical_value(n: usize, alpha: f64, two_sided: bool) -> Option<u64> {
    if n == 0 || n > CRITICAL_TABLE_MAX_N {
        return None;
    }
    let ranks: Vec<u64> = (1..=n as u64).collect();
    let counts = rank_sum_counts(&ranks);
    let all = 2f64.powi(n as i32);
    let level = if two_sided { alpha / 2.0 } else { alpha };
    let mut cumulative = 0u64;
    let mut best = None;
    for (w, &c) in counts.iter().enumerate() {
        cumulative += c;
        if cumulative as f64 / all <= level {
            best = Some(w as u64);
        } else {
            break;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_positive_differences() {
        let o = wilcoxon_signed_rank(&[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0], Alternative::Greater).unwrap();
        assert_eq!(o.w_minus, 0.0);
        assert_eq!(o.w_plus, 6.0);
        assert_eq!(o.p_value, 0.125);
        assert_eq!(o.method, Method::ExactEnumeration);
    }

    #[test]
    fn zero_pair_is_dropped() {
        let o = wilcoxon_signed_rank(&[1.0, 5.0, 3.0], &[0.0, 5.0, 1.0], Alternative::Greater).unwrap();
        assert_eq!(o.n_effective, 2);
        assert_eq!(o.n_zero, 1);
        assert_eq!(o.p_value, 0.25);
    }

    #[test]
    fn swapping_samples_swaps_sums() {
        let x = [0.3, 0.9, 0.1, 0.55, 0.7];
        let y = [0.2, 0.4, 0.5, 0.5, 0.1];
        let a = wilcoxon_signed_rank(&x, &y, Alternative::TwoSided).unwrap();
        let b = wilcoxon_signed_rank(&y, &x, Alternative::TwoSided).unwrap();
        assert_eq!(a.w_plus, b.w_minus);
        assert_eq!(a.w_minus, b.w_plus);
        assert_eq!(a.p_value, b.p_value);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            wilcoxon_signed_rank(&[1.0, 2.0], &[1.0, 2.0], Alternative::TwoSided),
            Err(Error::AllZeroDifferences)
        ));
        assert!(wilcoxon_signed_rank(&[1.0, 2.0], &[1.0], Alternative::TwoSided).is_err());
        assert!(wilcoxon_signed_rank(&[1.0], &[0.0], Alternative::TwoSided).is_err());
    }

    #[test]
    fn ties_share_average_rank() {
        let o = wilcoxon_signed_rank(&[1.0, -1.0, 2.0], &[0.0; 3], Alternative::TwoSided).unwrap();
        assert_eq!(o.signed_ranks, vec![1.5, -1.5, 3.0]);
        assert_eq!(o.w_plus + o.w_minus, 6.0);
    }

    #[test]
    fn decimal_ties_survive_float_subtraction() {
        // 0.970 - 0.957 and 0.973 - 0.960 differ in the last bits
        let o = wilcoxon_signed_rank(&[0.970, 0.973], &[0.957, 0.960], Alternative::Greater).unwrap();
        assert_eq!(o.signed_ranks, vec![1.5, 1.5]);
    }

    #[test]
    fn critical_values() {
        assert_eq!(critical_value(10, 0.01, false), Some(5));
        assert_eq!(critical_value(10, 0.05, false), Some(10));
        assert_eq!(critical_value(10, 0.05, true), Some(8));
        assert_eq!(critical_value(5, 0.05, true), None);
        assert_eq!(critical_value(5, 0.05, false), Some(0));
        assert_eq!(critical_value(31, 0.05, false), None);
    }

    #[test]
    fn normal_approximation_for_large_n() {
        let x: Vec<f64> = (1..=30).map(|i| i as f64).collect();
        let y = vec![0.0; 30];
        let o = wilcoxon_signed_rank(&x, &y, Alternative::Greater).unwrap();
        assert_eq!(o.method, Method::NormalApproximation);
        assert!(o.p_value > 0.0 && o.p_value < 1e-5);
        let o = wilcoxon_signed_rank(&x, &y, Alternative::Less).unwrap();
        assert!(o.p_value > 0.999);
    }
}
