//! Small summation and sample-statistics helpers shared by the analyzer and
//! the randomized audits.

/// Compensated (Neumaier) sum.
pub(crate) fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut compensation = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            compensation += (sum - t) + v;
        } else {
            compensation += (v - t) + sum;
        }
        sum = t;
    }
    sum + compensation
}

/// Sample mean and standard error of the mean (sample sd / √M).
///
/// Values are sorted before reduction, so the result does not depend on the
/// order in which they were supplied. The mean is accumulated as an offset
/// from the minimum, which makes a constant sample reproduce its value
/// exactly with zero standard error.
pub(crate) fn mean_and_stderr(values: &mut [f64]) -> (f64, f64) {
    let m = values.len();
    assert!(m > 0, "empty sample");
    values.sort_by(f64::total_cmp);
    let base = values[0];
    let offset = neumaier_sum(values.iter().map(|v| v - base)) / m as f64;
    let mean = base + offset;
    if m < 2 {
        return (mean, 0.0);
    }
    let ss = neumaier_sum(values.iter().map(|v| {
        let d = (v - base) - offset;
        d * d
    }));
    let sd = (ss / (m - 1) as f64).sqrt();
    (mean, sd / (m as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_sample_is_exact() {
        let mut v = vec![0.1; 7];
        assert_eq!(mean_and_stderr(&mut v), (0.1, 0.0));
    }

    #[test]
    fn two_point_sample() {
        let mut v = vec![2.0, 0.0];
        let (mean, se) = mean_and_stderr(&mut v);
        assert_eq!(mean, 1.0);
        assert!((se - 1.0).abs() < 1e-15);
    }

    #[test]
    fn order_does_not_matter() {
        let a: Vec<f64> = (0..101).map(|i| ((i * 37) % 101) as f64 * 0.013 + 1e-3).collect();
        let mut b = a.clone();
        b.reverse();
        let mut a = a;
        assert_eq!(mean_and_stderr(&mut a), mean_and_stderr(&mut b));
    }

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        assert_eq!(neumaier_sum([1.0, 1e100, 1.0, -1e100]), 2.0);
    }
}
