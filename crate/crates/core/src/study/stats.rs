//! Two-group tests and balance measures.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// Expected cell count below which the chi-square test applies Yates'
/// continuity correction.
pub const YATES_THRESHOLD: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Set when the test could not be computed; the p-value is then 1.
    pub skipped: bool,
    pub note: String,
}

impl TestResult {
    fn skipped(note: &str) -> TestResult {
        TestResult {
            statistic: 0.0,
            p_value: 1.0,
            skipped: true,
            note: note.to_string(),
        }
    }
}

/// Two-sided chi-square test of independence on a 2x2 table
/// `[[a, b], [c, d]]` (rows are groups, columns event / no event).
pub fn chi_square_2x2(a: u64, b: u64, c: u64, d: u64) -> TestResult {
    let cells = [a, b, c, d].map(|v| v as f64);
    let n: f64 = cells.iter().sum();
    let rows = [cells[0] + cells[1], cells[2] + cells[3]];
    let cols = [cells[0] + cells[2], cells[1] + cells[3]];
    if rows.contains(&0.0) || cols.contains(&0.0) {
        return TestResult::skipped("zero-variance outcome or empty group");
    }
    let expected = [rows[0] * cols[0] / n, rows[0] * cols[1] / n, rows[1] * cols[0] / n, rows[1] * cols[1] / n];
    let yates = expected.iter().any(|&e| e < YATES_THRESHOLD);
    let statistic: f64 = cells
        .iter()
        .zip(&expected)
        .map(|(o, e)| {
            let diff = if yates { ((o - e).abs() - 0.5).max(0.0) } else { (o - e).abs() };
            diff * diff / e
        })
        .sum();
    let p_value = 1.0 - ChiSquared::new(1.0).expect("one degree of freedom").cdf(statistic);
    TestResult {
        statistic,
        p_value,
        skipped: false,
        note: if yates { "chi-square with Yates correction" } else { "chi-square" }.into(),
    }
}

fn average_ranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        idx[i..=j].iter().for_each(|&k| ranks[k] = avg);
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    (ranks, tie_term)
}

/// Two-sided Wilcoxon rank-sum (Mann-Whitney U) test by normal
/// approximation with tie and continuity corrections.
pub fn rank_sum(x: &[f64], y: &[f64]) -> TestResult {
    let (n1, n2) = (x.len() as f64, y.len() as f64);
    if x.is_empty() || y.is_empty() {
        return TestResult::skipped("empty group");
    }
    let all: Vec<f64> = x.iter().chain(y).copied().collect();
    let (ranks, tie_term) = average_ranks(&all);
    let r1: f64 = ranks[..x.len()].iter().sum();
    let u = r1 - n1 * (n1 + 1.0) / 2.0;
    let n = n1 + n2;
    let variance = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if !(variance > 0.0) {
        return TestResult::skipped("zero-variance outcome");
    }
    let z = ((u - n1 * n2 / 2.0).abs() - 0.5).max(0.0) / variance.sqrt();
    let p_value = (2.0 * (1.0 - Normal::standard().cdf(z))).min(1.0);
    TestResult {
        statistic: u,
        p_value,
        skipped: false,
        note: "rank-sum, normal approximation".into(),
    }
}

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn variance(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

pub fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 0 {
        (s[m - 1] + s[m]) / 2.0
    } else {
        s[m]
    }
}

/// Standardized mean difference `(mean_t - mean_c) / sqrt((var_t + var_c) / 2)`.
/// `None` when both groups are constant at different values or either is
/// empty; 0 when both are constant at the same value.
pub fn standardized_mean_difference(treated: &[f64], control: &[f64]) -> Option<f64> {
    if treated.is_empty() || control.is_empty() {
        return None;
    }
    let diff = mean(treated) - mean(control);
    let pooled = ((variance(treated) + variance(control)) / 2.0).sqrt();
    if pooled > 0.0 {
        Some(diff / pooled)
    } else if diff == 0.0 {
        Some(0.0)
    } else {
        None
    }
}
