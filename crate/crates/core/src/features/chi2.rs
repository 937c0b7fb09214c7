//! Chi-square relevance scores for feature selection.
//!
//! A feature column is turned into discrete levels (categories as-is,
//! numerics through equal-frequency bins fitted on the training rows), and
//! the score is Pearson's statistic over the level-by-label contingency
//! table.

use serde::{Deserialize, Serialize};

use super::schema::{FeatureDef, Value};

pub const DEFAULT_BINS: usize = 10;

/// Pearson's statistic over a table whose rows are feature levels and whose
/// columns are the (negative, positive) label counts.
///
/// Cells with zero expected count are skipped; their observed count is zero
/// too, since a zero row or column total forces it.
pub fn chi_square_table(table: &[[f64; 2]]) -> f64 {
    let col_totals = table
        .iter()
        .fold([0.0; 2], |acc, row| [acc[0] + row[0], acc[1] + row[1]]);
    let n = col_totals[0] + col_totals[1];
    if n == 0.0 {
        return 0.0;
    }
    let mut score = 0.0;
    for row in table {
        let row_total = row[0] + row[1];
        for (observed, col_total) in row.iter().zip(col_totals) {
            let expected = row_total * col_total / n;
            if expected > 0.0 {
                let d = observed - expected;
                score += d * d / expected;
            }
        }
    }
    score
}

/// Builds the level-by-label count table for a discretized column.
pub fn contingency_table(levels: &[u32], labels: &[bool]) -> Vec<[f64; 2]> {
    assert_eq!(levels.len(), labels.len(), "column and labels differ in length");
    let width = levels.iter().max().map_or(0, |&m| m as usize + 1);
    let mut table = vec![[0.0; 2]; width];
    for (&level, &label) in levels.iter().zip(labels) {
        table[level as usize][label as usize] += 1.0;
    }
    table.retain(|row| row[0] + row[1] > 0.0);
    table
}

/// Chi-square score of a discretized feature column against binary labels.
/// A constant column scores 0.
pub fn chi_square_score(levels: &[u32], labels: &[bool]) -> f64 {
    chi_square_table(&contingency_table(levels, labels))
}

/// Equal-frequency bin edges for one numeric column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bins {
    pub cuts: Vec<f64>,
}

impl Bins {
    /// Cut points at the `i/bins` quantiles of the observed values, with
    /// duplicates merged so heavily tied columns get fewer bins.
    pub fn fit(values: &[f64], bins: usize) -> Self {
        let mut sorted: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let mut cuts = Vec::new();
        if n > 0 && bins > 1 {
            for i in 1..bins {
                let c = sorted[(i * n / bins).min(n - 1)];
                if c > sorted[0] && cuts.last().is_none_or(|&last| c > last) {
                    cuts.push(c);
                }
            }
        }
        Bins { cuts }
    }

    pub fn level(&self, x: f64) -> u32 {
        self.cuts.partition_point(|&c| c <= x) as u32
    }
}

/// Maps a column of raw values to discrete levels. Missing values get their
/// own level past every real one.
pub fn discretize(def: &FeatureDef, column: &[Value], bins: usize) -> Vec<u32> {
    if def.is_numeric() {
        let observed: Vec<f64> = column.iter().filter_map(Value::as_f64).collect();
        let edges = Bins::fit(&observed, bins);
        let missing = edges.cuts.len() as u32 + 1;
        column
            .iter()
            .map(|v| v.as_f64().map_or(missing, |x| edges.level(x)))
            .collect()
    } else {
        let missing = def.levels() as u32;
        column
            .iter()
            .map(|v| match *v {
                Value::Category(c) => c.min(missing),
                _ => missing,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn expand(table: &[[u32; 2]]) -> (Vec<u32>, Vec<bool>) {
        let mut levels = Vec::new();
        let mut labels = Vec::new();
        for (level, row) in table.iter().enumerate() {
            for (label, &count) in row.iter().enumerate() {
                for _ in 0..count {
                    levels.push(level as u32);
                    labels.push(label == 1);
                }
            }
        }
        (levels, labels)
    }

    /// Hand-evaluated: every expected count is 15, four cells of (5^2)/15.
    #[test]
    fn two_by_two_reference_table() {
        let (levels, labels) = expand(&[[10, 20], [20, 10]]);
        let score = chi_square_score(&levels, &labels);
        assert!((score - 100.0 / 15.0).abs() < 1e-9, "{score}");
    }

    #[test]
    fn proportional_table_scores_zero() {
        let (levels, labels) = expand(&[[10, 20], [30, 60], [5, 10]]);
        assert!(chi_square_score(&levels, &labels).abs() < 1e-12);
    }

    #[test]
    fn constant_feature_scores_zero() {
        let levels = vec![3; 40];
        let labels: Vec<bool> = (0..40).map(|i| i % 3 == 0).collect();
        assert_eq!(chi_square_score(&levels, &labels), 0.0);
    }

    #[test]
    fn perfectly_predictive_binary_feature_scores_n() {
        let labels: Vec<bool> = (0..50).map(|i| i % 5 == 0).collect();
        let levels: Vec<u32> = labels.iter().map(|&y| y as u32).collect();
        let score = chi_square_score(&levels, &labels);
        assert!((score - 50.0).abs() < 1e-9);
    }

    #[test]
    fn equal_frequency_bins() {
        let values: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let bins = Bins::fit(&values, 10);
        assert_eq!(bins.cuts, vec![10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0]);
        let mut counts = [0; 10];
        for &v in &values {
            counts[bins.level(v) as usize] += 1;
        }
        assert_eq!(counts, [10; 10]);
    }

    #[test]
    fn tied_values_merge_bins() {
        let values = [1.0, 1.0, 1.0, 1.0, 2.0, 2.0];
        let bins = Bins::fit(&values, 10);
        assert_eq!(bins.cuts, vec![2.0]);
        assert_eq!(bins.level(1.0), 0);
        assert_eq!(bins.level(2.0), 1);
    }

    proptest! {
        #[test]
        fn score_is_nonnegative_and_label_symmetric(
            rows in proptest::collection::vec((0u32..5, any::<bool>()), 1..200)
        ) {
            let levels: Vec<u32> = rows.iter().map(|r| r.0).collect();
            let labels: Vec<bool> = rows.iter().map(|r| r.1).collect();
            let flipped: Vec<bool> = labels.iter().map(|y| !y).collect();
            let a = chi_square_score(&levels, &labels);
            let b = chi_square_score(&levels, &flipped);
            prop_assert!(a >= 0.0);
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a));
        }

        #[test]
        fn zero_iff_observed_equals_expected(
            table in proptest::collection::vec([0u32..20, 0u32..20], 1..6)
        ) {
            let t: Vec<[f64; 2]> = table.iter().map(|r| [r[0] as f64, r[1] as f64]).collect();
            let score = chi_square_table(&t);
            let cols = t.iter().fold([0.0; 2], |a, r| [a[0] + r[0], a[1] + r[1]]);
            let n = cols[0] + cols[1];
            let matches = n == 0.0 || t.iter().all(|r| {
                let rt = r[0] + r[1];
                (0..2).all(|j| (r[j] - rt * cols[j] / n).abs() < 1e-12)
            });
            prop_assert_eq!(score.abs() < 1e-12, matches);
        }
    }
}
