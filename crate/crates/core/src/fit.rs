//! Least-squares fits of decay curves.

use serde::Serialize;

use crate::error::{Error, Result};

/// Straight-line fit `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    /// Standard error of the slope from the residual scatter.
    pub stderr: f64,
    pub intercept: f64,
    pub points: usize,
}

/// Power-law fit of `|y|` against `t` in log-log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailFit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub points: usize,
    /// `log₁₀(t_last / t_first)` over the points used.
    pub decades: f64,
}

pub fn line_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() {
        return Err(Error::InvalidParameter(format!(
            "fit needs equal lengths, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::InvalidParameter("fit needs at least 2 points".into()));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("fit abscissae are all equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if n > 2 {
        let rss: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| (b - intercept - slope * a).powi(2))
            .sum();
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LineFit {
        slope,
        stderr,
        intercept,
        points: n,
    })
}

fn window(times: &[f64], values: &[f64], lo: f64, hi: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if times.len() != values.len() {
        return Err(Error::InvalidParameter(format!(
            "{} times but {} values",
            times.len(),
            values.len()
        )));
    }
    if !(lo < hi) {
        return Err(Error::InvalidParameter(format!("empty fit window [{lo}, {hi}]")));
    }
    // Grid points computed as multiples of a lifetime land a few ulps off
    // the edges they were meant to hit.
    let (lo, hi) = (lo * (1.0 - 1e-12), hi * (1.0 + 1e-12));
    Ok(times
        .iter()
        .zip(values)
        .filter(|(&t, _)| t >= lo && t <= hi)
        .map(|(&t, &v)| (t, v))
        .unzip())
}

/// Slope of `ln|y|` against `ln t` for `t ∈ [t_lo, t_hi]`.
///
/// Fails with [`Error::WindowTooShort`] when the samples inside the window
/// span less than one decade.
pub fn tail_fit(times: &[f64], values: &[f64], t_lo: f64, t_hi: f64) -> Result<TailFit> {
    if !(t_lo > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "log-log window must start above 0, got {t_lo}"
        )));
    }
    let (t, y) = window(times, values, t_lo, t_hi)?;
    let decades = match (t.first(), t.last()) {
        (Some(a), Some(b)) => (b / a).log10(),
        _ => 0.0,
    };
    if decades < 1.0 - 1e-9 {
        return Err(Error::WindowTooShort { decades });
    }
    if let Some(v) = y.iter().find(|v| !(v.abs() > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "log-log fit needs finite nonzero values, got {v}"
        )));
    }
    let lx: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.abs().ln()).collect();
    let f = line_fit(&lx, &ly)?;
    Ok(TailFit {
        slope: f.slope,
        stderr: f.stderr,
        intercept: f.intercept,
        points: f.points,
        decades,
    })
}

/// Slope of `ln y` against `t` for `t ∈ [t_lo, t_hi]`; `-Γ` for a pure
/// exponential decay.
pub fn exponential_fit(times: &[f64], values: &[f64], t_lo: f64, t_hi: f64) -> Result<LineFit> {
    let (t, y) = window(times, values, t_lo, t_hi)?;
    if let Some(v) = y.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "exponential fit needs positive values, got {v}"
        )));
    }
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    line_fit(&t, &ly)
}

/// First time from which `fraction` stays below `threshold` for the rest of
/// the samples. `fraction` is the exponential share `|exp|/|total|`.
pub fn post_exponential_onset(times: &[f64], fraction: &[f64], threshold: f64) -> Option<f64> {
    let last_above = fraction.iter().rposition(|&f| !(f < threshold));
    match last_above {
        None => times.first().copied(),
        Some(i) => times.get(i + 1).copied(),
    }
}
