//! Log-log slope fitting for regret curves. A cumulative-regret series that
//! grows like k^a shows up as a line of slope `a` in log-log coordinates;
//! fitting that line over the tail of a run is how sublinearity is checked
//! empirically.

use serde::Serialize;

use crate::error::{Error, Result};

/// Fewest positive points a fit may rest on.
pub const MIN_FIT_POINTS: usize = 50;

/// An ordinary-least-squares line through (log k, log R_k).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    /// Fitted exponent: R_k ~ k^slope over the window.
    pub slope: f64,
    /// Fitted log-scale offset.
    pub intercept: f64,
    /// Coefficient of determination of the log-log fit.
    pub r_squared: f64,
    /// Fraction of the series (by trailing index count) the fit used.
    pub window: f64,
    /// Positive points that actually entered the regression.
    pub points_used: usize,
}

/// Fit log R_k against log k by ordinary least squares over the trailing
/// `window` fraction of the series, using only points with R_k > 0 (the
/// logarithm is undefined elsewhere; early regret often dips negative while
/// cumulative loss is still below the optimal-rate line).
///
/// The default window in the experiment runner is 0.8: the first fifth of a
/// run is burn-in dominated by inner-loop transients and would bias the
/// exponent.
pub fn fit_slope(series: &[(u64, f64)], window: f64) -> Result<SlopeFit> {
    if !(window > 0.0 && window <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "window must lie in (0, 1], got {window}"
        )));
    }
    let take = ((series.len() as f64) * window).ceil() as usize;
    let start = series.len().saturating_sub(take);
    let points: Vec<(f64, f64)> = series[start..]
        .iter()
        .filter(|(k, r)| *k >= 1 && *r > 0.0)
        .map(|(k, r)| ((*k as f64).ln(), r.ln()))
        .collect();
    if points.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "slope fit needs at least {MIN_FIT_POINTS} positive points in the window, found {}",
            points.len()
        )));
    }

    let n = points.len() as f64;
    let mean_x = points.iter().map(|(x, _)| x).sum::<f64>() / n;
    let mean_y = points.iter().map(|(_, y)| y).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in &points {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::InsufficientData(
            "all window points share one abscissa; no slope is identifiable".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    // A constant series is fit exactly by the zero-slope line.
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(SlopeFit { slope, intercept, r_squared, window, points_used: points.len() })
}
