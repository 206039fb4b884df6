//! Small order statistics and moment helpers.

/// Median with the lower-middle convention for even counts.
/// Returns `None` for an empty slice. Reorders `values`.
pub fn lower_median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let k = (values.len() - 1) / 2;
    let (_, m, _) = values.select_nth_unstable_by(k, f64::total_cmp);
    Some(*m)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population central moments (mean, m2, m3).
pub fn central_moments(values: &[f64]) -> (f64, f64, f64) {
    let mu = mean(values);
    let n = values.len() as f64;
    let (mut m2, mut m3) = (0.0, 0.0);
    for &v in values {
        let d = v - mu;
        m2 += d * d;
        m3 += d * d * d;
    }
    (mu, m2 / n, m3 / n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lower_median_conventions() {
        assert_eq!(lower_median(&mut []), None);
        assert_eq!(lower_median(&mut [3.0]), Some(3.0));
        assert_eq!(lower_median(&mut [4.0, 1.0]), Some(1.0));
        assert_eq!(lower_median(&mut [5.0, 1.0, 3.0]), Some(3.0));
        assert_eq!(lower_median(&mut [4.0, 2.0, 3.0, 1.0]), Some(2.0));
        let mut nine = [100.0, 80.0, 100.0, 80.0, 80.0, 100.0, 80.0, 100.0, 80.0];
        assert_eq!(lower_median(&mut nine), Some(80.0));
    }

    #[test]
    fn moments_of_symmetric_set() {
        let (m, v, s) = central_moments(&[-1.0, 0.0, 1.0]);
        assert_eq!(m, 0.0);
        assert!((v - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(s, 0.0);
    }
}
