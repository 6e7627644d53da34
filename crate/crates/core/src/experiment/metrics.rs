use crate::{Error, Result};

/// RMS of `y - y_d` over samples `start..` of the common length.
pub fn rms_error(y: &[f64], y_d: &[f64], start: usize) -> Result<f64> {
    let n = y.len().min(y_d.len());
    if start >= n {
        return Err(Error::EmptyWindow);
    }
    let s: f64 = y[start..n]
        .iter()
        .zip(&y_d[start..n])
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    Ok((s / (n - start) as f64).sqrt())
}

/// RMS of the per-sample Euclidean error across axes (`y[axis][k]`).
pub fn rms_error_nd(y: &[Vec<f64>], y_d: &[Vec<f64>], start: usize) -> Result<f64> {
    if y.len() != y_d.len() || y.is_empty() {
        return Err(Error::DimensionMismatch {
            context: "axis count",
            expected: y_d.len(),
            found: y.len(),
        });
    }
    let n = y.iter().chain(y_d).map(Vec::len).min().unwrap_or(0);
    if start >= n {
        return Err(Error::EmptyWindow);
    }
    let s: f64 = (start..n)
        .map(|k| {
            y.iter()
                .zip(y_d)
                .map(|(a, b)| (a[k] - b[k]).powi(2))
                .sum::<f64>()
        })
        .sum();
    Ok((s / (n - start) as f64).sqrt())
}

/// Percentage reduction of `rms` relative to `baseline`; `None` when the baseline is zero.
pub fn reduction_pct(rms: f64, baseline: f64) -> Option<f64> {
    (baseline > 0.0).then(|| 100.0 * (1.0 - rms / baseline))
}
