//! Small numeric helpers.

/// Median of a slice, averaging the two middle values for even lengths.
/// Reorders the slice. Returns 0 for an empty slice.
pub fn median_in_place(values: &mut [f64]) -> f64 {
    let len = values.len();
    if len == 0 {
        return 0.0;
    }
    let mid = len / 2;
    let (lower, upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let hi = *upper;
    if len % 2 == 1 {
        hi
    } else {
        let lo = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + hi)
    }
}

pub fn median(values: &[f64]) -> f64 {
    median_in_place(&mut values.to_vec())
}

/// `ceil(c * ln(1/delta))`, at least 1.
pub fn log_repetitions(c: f64, delta: f64) -> usize {
    ((c * (1.0 / delta).ln()).ceil() as usize).max(1)
}
