//! Small statistics helpers shared by the estimators and the runners.

/// 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `hits` successes out of `trials`.
pub fn wilson_interval(hits: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0).min(p), (center + half).min(1.0).max(p))
}

/// Median of a non-empty slice; NaNs sort last.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Least-squares slope of `y` against `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Slope of `log p` against `log n`.
pub fn log_log_slope(n: &[f64], p: &[f64]) -> f64 {
    let lx: Vec<f64> = n.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = p.iter().map(|v| v.ln()).collect();
    ols_slope(&lx, &ly)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_known_values() {
        // 50/100 at 95%
        let (lo, hi) = wilson_interval(50, 100, Z95);
        assert!((lo - 0.4038).abs() < 1e-4 && (hi - 0.5962).abs() < 1e-4);
        let (lo, hi) = wilson_interval(0, 1000, Z95);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.005);
        let (lo, hi) = wilson_interval(1000, 1000, Z95);
        assert!(lo < 1.0 && hi == 1.0);
    }

    #[test]
    fn median_and_slope() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        let n = [64.0, 256.0, 1024.0];
        let p: Vec<f64> = n.iter().map(|v: &f64| 3.0 * v.powf(-0.5)).collect();
        assert!((log_log_slope(&n, &p) + 0.5).abs() < 1e-12);
    }
}
