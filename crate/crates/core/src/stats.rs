//! Small statistical helpers: quantiles, Wilson intervals and log-log fits.

use serde::Serialize;

use crate::error::{Error, Result};

/// Linear-interpolation quantile (type 7) of an ascending slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    quantile_sorted(&v, q)
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// Wilson score interval for `hits` successes out of `n`.
pub fn wilson_interval(hits: u64, n: u64, z: f64) -> (f64, f64) {
    let n = n as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope from the residual variance.
    pub stderr: f64,
}

/// Ordinary least squares of `y` on `x`.
pub fn ols(x: &[f64], y: &[f64]) -> Result<SlopeFit> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::Degenerate(format!(
            "need at least 3 paired points for a slope, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("all abscissae coincide".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let stderr = (rss / (n - 2.0) / sxx).sqrt();
    Ok(SlopeFit {
        slope,
        intercept,
        stderr,
    })
}

/// OLS on `(ln x, ln y)`; rejects non-positive values.
pub fn fit_loglog(x: &[f64], y: &[f64]) -> Result<SlopeFit> {
    if let Some(v) = x.iter().chain(y).find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "value",
            value: *v,
            reason: "log-log fits need finite positive values",
        });
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    ols(&lx, &ly)
}
