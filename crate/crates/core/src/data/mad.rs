//! Median absolute deviation outlier rejection.

/// Consistency constant relating MAD to the standard deviation of a normal.
pub const MAD_NORMAL_SCALE: f64 = 0.6745;
/// Points further than this many scaled MADs from the median are outliers.
pub const MAD_CUTOFF: f64 = 3.0;

/// Median of a non-empty slice; the mean of the two middle values for even
/// lengths. Returns `None` for an empty slice.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

/// Median absolute deviation around the median.
pub fn mad(values: &[f64]) -> Option<f64> {
    let m = median(values)?;
    let dev: Vec<f64> = values.iter().map(|x| (x - m).abs()).collect();
    median(&dev)
}

/// Indices (ascending) of samples whose distance from the median exceeds
/// three scaled MADs. With MAD = 0 every value different from the median is
/// flagged.
pub fn mad_outliers(samples: &[f64]) -> Vec<usize> {
    let (Some(m), Some(mad)) = (median(samples), mad(samples)) else {
        return Vec::new();
    };
    let threshold = MAD_CUTOFF * mad / MAD_NORMAL_SCALE;
    samples
        .iter()
        .enumerate()
        .filter(|(_, x)| (*x - m).abs() > threshold)
        .map(|(i, _)| i)
        .collect()
}

/// Convenience for integer-second samples.
pub fn mad_outliers_secs(samples: &[i64]) -> Vec<usize> {
    let v: Vec<f64> = samples.iter().map(|&x| x as f64).collect();
    mad_outliers(&v)
}
