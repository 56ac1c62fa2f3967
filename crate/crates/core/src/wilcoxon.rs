//! One-sided Wilcoxon signed-rank test for paired samples.

use statrs::distribution::{ContinuousCDF, Normal};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alternative {
    /// `x` tends to be smaller than `y`.
    Less,
    /// `x` tends to be larger than `y`.
    Greater,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedRank {
    /// Sum of ranks of positive differences `x - y`.
    pub w_plus: f64,
    /// Pairs with nonzero difference.
    pub n: usize,
    pub p_value: f64,
    /// Whether the p-value comes from the exact null distribution.
    pub exact: bool,
}

/// Exact null distribution is used up to this many nonzero pairs when there
/// are no tied magnitudes; otherwise a tie-corrected normal approximation.
const EXACT_LIMIT: usize = 50;

/// Paired one-sided signed-rank test. Zero differences are dropped and tied
/// magnitudes get average ranks.
///
/// # Panics
/// If the samples have different lengths or contain NaN.
pub fn signed_rank(x: &[f64], y: &[f64], alternative: Alternative) -> SignedRank {
    assert_eq!(x.len(), y.len(), "paired samples must have equal length");
    let mut d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|v| *v != 0.0).collect();
    assert!(d.iter().all(|v| !v.is_nan()), "differences must not be NaN");
    let n = d.len();
    if n == 0 {
        return SignedRank { w_plus: 0.0, n, p_value: 1.0, exact: true };
    }
    d.sort_by(|a, b| a.abs().total_cmp(&b.abs()));

    let mut ranks = vec![0.0; n];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && d[j + 1].abs() == d[i].abs() {
            j += 1;
        }
        let avg = (i + j + 2) as f64 / 2.0;
        ranks[i..=j].iter_mut().for_each(|r| *r = avg);
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let w_plus: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    // statistic whose small values favour the alternative
    let w = match alternative {
        Alternative::Less => w_plus,
        Alternative::Greater => total - w_plus,
    };

    if tie_term == 0.0 && n <= EXACT_LIMIT {
        return SignedRank { w_plus, n, p_value: exact_lower_tail(n, w.round() as usize), exact: true };
    }

    let mean = total / 2.0;
    let var = (n * (n + 1) * (2 * n + 1)) as f64 / 24.0 - tie_term / 48.0;
    let z = (w - mean + 0.5) / var.sqrt();
    let p = Normal::standard().cdf(z);
    SignedRank { w_plus, n, p_value: p.min(1.0), exact: false }
}

/// `P(W <= w)` for the signed-rank statistic with ranks `1..=n`.
fn exact_lower_tail(n: usize, w: usize) -> f64 {
    let max = n * (n + 1) / 2;
    let mut counts = vec![0.0f64; max + 1];
    counts[0] = 1.0;
    for r in 1..=n {
        for s in (r..=max).rev() {
            counts[s] += counts[s - r];
        }
    }
    let hits: f64 = counts[..=w.min(max)].iter().sum();
    hits / 2f64.powi(n as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_tail_matches_enumeration() {
        // brute force over all sign patterns for n = 6
        let n = 6;
        for w in 0..=21 {
            let mut hits = 0;
            for mask in 0u32..(1 << n) {
                let s: usize = (0..n).filter(|b| mask & (1 << b) != 0).map(|b| b + 1).sum();
                if s <= w {
                    hits += 1;
                }
            }
            assert!((exact_lower_tail(n, w) - hits as f64 / 64.0).abs() < 1e-15);
        }
    }

    #[test]
    fn clear_shift_is_significant() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| v + 1.0 + v * 0.01).collect();
        let r = signed_rank(&x, &y, Alternative::Less);
        assert_eq!(r.w_plus, 0.0);
        assert!(r.p_value < 1e-5);
        assert!(signed_rank(&x, &y, Alternative::Greater).p_value > 0.99);
    }

    #[test]
    fn identical_samples() {
        let x = [1.0, 2.0, 3.0];
        assert_eq!(signed_rank(&x, &x, Alternative::Less).p_value, 1.0);
    }

    #[test]
    fn ties_use_normal_approximation() {
        let x = [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        let y = [2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 0.0];
        let r = signed_rank(&x, &y, Alternative::Less);
        assert!(!r.exact);
        assert!(r.p_value < 0.05);
    }
}
