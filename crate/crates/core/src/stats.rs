//! Order statistics shared by window summaries and feature vectors.
//!
//! Median of an even-length sample is the mean of the two middle values;
//! variance is the population variance (divide by `n`).

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    sorted
}

fn median_of_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Median and population variance with a single sort.
pub fn median_and_variance(values: &[f64]) -> (f64, f64) {
    debug_assert!(!values.is_empty());
    let sorted = sorted(values);
    let med = median_of_sorted(&sorted);
    // Summation rounding would otherwise leave a residue for some constants.
    if sorted[0] == sorted[sorted.len() - 1] {
        return (med, 0.0);
    }
    // Summing in sorted order makes the result independent of input order.
    let m = mean(&sorted);
    let var = sorted.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / sorted.len() as f64;
    (med, var)
}

#[cfg(test)]
fn median(values: &[f64]) -> f64 {
    median_and_variance(values).0
}

#[cfg(test)]
fn population_variance(values: &[f64]) -> f64 {
    median_and_variance(values).1
}

pub fn min(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn max(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}
