//! Clustering agreement scores.

use std::collections::BTreeMap;

fn choose2(x: u64) -> f64 {
    (x * x.saturating_sub(1)) as f64 / 2.0
}

/// Adjusted Rand index between two labelings of the same items.
///
/// Returns 1.0 when both labelings are a single cluster (or have fewer than
/// two items), matching the usual convention.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings must have equal length");
    let n = a.len() as u64;
    let mut table: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut rows: BTreeMap<usize, u64> = BTreeMap::new();
    let mut cols: BTreeMap<usize, u64> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&c| choose2(c)).sum();
    let sum_rows: f64 = rows.values().map(|&c| choose2(c)).sum();
    let sum_cols: f64 = cols.values().map(|&c| choose2(c)).sum();
    let total = choose2(n);
    if total == 0.0 {
        return 1.0;
    }
    let expected = sum_rows * sum_cols / total;
    let max = 0.5 * (sum_rows + sum_cols);
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

#[cfg(test)]
mod tests {
    use super::*;

    // reference values from sklearn.metrics.adjusted_rand_score
    #[test]
    fn matches_reference_values() {
        assert!((adjusted_rand_index(&[0, 0, 1, 1], &[0, 0, 1, 2]) - 0.5714285714285714).abs() < 1e-12);
        assert!((adjusted_rand_index(&[0, 0, 1, 1], &[1, 1, 0, 0]) - 1.0).abs() < 1e-12);
        assert!((adjusted_rand_index(&[0, 0, 0, 1, 1, 1], &[0, 1, 2, 0, 1, 2]) - (-0.36363636363636365)).abs() < 1e-12);
        assert!((adjusted_rand_index(&[0, 1, 2, 0, 1, 2, 0], &[0, 1, 1, 0, 2, 2, 0]) - 0.475).abs() < 1e-12);
    }

    #[test]
    fn permutation_invariant() {
        let a = [0, 0, 1, 2, 2, 1, 0];
        let b = [2, 2, 0, 1, 1, 0, 1];
        let relabeled: Vec<usize> = b.iter().map(|&x| (x + 1) % 3).collect();
        assert_eq!(adjusted_rand_index(&a, &b), adjusted_rand_index(&a, &relabeled));
    }
}
