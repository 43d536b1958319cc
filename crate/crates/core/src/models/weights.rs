//! Class-balanced sample weights.

use alloc::vec;
use alloc::vec::Vec;

use crate::label::{ClassLabel, NUM_CLASSES};

/// Weight of each sample as an exact fraction `(numerator, denominator)`:
/// `N / (K * count(class))` with `N` samples and `K` distinct classes.
pub fn sample_weight_fractions(labels: &[ClassLabel]) -> Vec<(u64, u64)> {
    let mut counts = [0u64; NUM_CLASSES];
    for l in labels {
        counts[l.index()] += 1;
    }
    let n = labels.len() as u64;
    let k = counts.iter().filter(|&&c| c > 0).count() as u64;
    labels.iter().map(|l| (n, k * counts[l.index()])).collect()
}

/// `w_i = N / (K * count(class_i))`. Weights sum to `N` and every present
/// class carries the same total weight `N / K`. Empty input gives no
/// weights.
pub fn compute_sample_weights(labels: &[ClassLabel]) -> Vec<f64> {
    if labels.is_empty() {
        return vec![];
    }
    sample_weight_fractions(labels)
        .into_iter()
        .map(|(num, den)| num as f64 / den as f64)
        .collect()
}
