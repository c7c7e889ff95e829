//! Fluctuation analysis (FA), detrended fluctuation analysis (DFA-1) and
//! detrending moving average (backward DMA).
//!
//! All three take an increment series, integrate it into a mean-centred
//! profile, and fit the log-log slope of a fluctuation function against scale.

use std::fmt;

use crate::error::{Error, Result};
use crate::series::ols_line;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FluctuationMethod {
    Fa,
    Dfa,
    Dma,
}

impl fmt::Display for FluctuationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FluctuationMethod::Fa => "FA",
            FluctuationMethod::Dfa => "DFA",
            FluctuationMethod::Dma => "DMA",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluctuationCurve {
    pub scales: Vec<usize>,
    pub fluctuations: Vec<f64>,
    /// Least-squares slope of `ln F` on `ln scale`.
    pub hurst: f64,
    pub method: FluctuationMethod,
}

/// `Y_t = sum_{i <= t} (x_i - mean(x))`.
pub fn profile(x: &[f64]) -> Result<Vec<f64>> {
    if x.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: x.len(),
        });
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    Ok(x.iter()
        .scan(0.0, |acc, v| {
            *acc += v - mean;
            Some(*acc)
        })
        .collect())
}

/// `count` geometrically spaced integer scales from `min` to `max`, deduplicated.
pub fn geometric_scales(min: usize, max: usize, count: usize) -> Vec<usize> {
    if count < 2 || max <= min {
        return vec![min];
    }
    let ratio = (max as f64 / min as f64).ln() / (count - 1) as f64;
    let mut scales: Vec<usize> = (0..count)
        .map(|i| (min as f64 * (ratio * i as f64).exp()).round() as usize)
        .collect();
    scales.dedup();
    scales
}

/// Default scale grid shared by all methods: 12 points from 8 to `N/4`.
pub fn default_scales(n: usize) -> Vec<usize> {
    geometric_scales(8, n / 4, 12)
}

fn check_scales(scales: &[usize], n: usize, min: usize) -> Result<()> {
    if scales.len() < 2 {
        return Err(Error::invalid("scales", "need at least two scales"));
    }
    if scales.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(
            "scales",
            "scales must be strictly increasing",
        ));
    }
    if scales[0] < min {
        return Err(Error::invalid(
            "scales",
            format!("smallest scale must be >= {min}"),
        ));
    }
    let max = scales[scales.len() - 1];
    if max > n / 4 {
        return Err(Error::invalid(
            "scales",
            format!("largest scale {max} exceeds N/4 = {}", n / 4),
        ));
    }
    Ok(())
}

/// Least-squares slope of `ln F` against `ln s`.
pub fn fit_loglog_slope(scales: &[usize], fluctuations: &[f64]) -> Result<f64> {
    if scales.len() != fluctuations.len() {
        return Err(Error::LengthMismatch {
            times: scales.len(),
            values: fluctuations.len(),
        });
    }
    if let Some(i) = fluctuations.iter().position(|f| f.is_nan() || *f <= 0.0) {
        return Err(Error::DegenerateFluctuation { scale: scales[i] });
    }
    let ls: Vec<f64> = scales.iter().map(|&s| (s as f64).ln()).collect();
    let lf: Vec<f64> = fluctuations.iter().map(|f| f.ln()).collect();
    ols_line(&ls, &lf).map(|l| l.slope)
}

/// Round-off level below which a fluctuation counts as zero, relative to the
/// profile's RMS.
const DEGENERATE_LEVEL: f64 = 1e-12;

fn curve(
    method: FluctuationMethod,
    scales: &[usize],
    fluctuations: Vec<f64>,
    profile: &[f64],
) -> Result<FluctuationCurve> {
    let rms = (profile.iter().map(|v| v * v).sum::<f64>() / profile.len() as f64).sqrt();
    if let Some(i) = fluctuations
        .iter()
        .position(|&f| f <= DEGENERATE_LEVEL * rms)
    {
        return Err(Error::DegenerateFluctuation { scale: scales[i] });
    }
    let hurst = fit_loglog_slope(scales, &fluctuations)?;
    Ok(FluctuationCurve {
        scales: scales.to_vec(),
        fluctuations,
        hurst,
        method,
    })
}

/// `F(s)^2 = mean_t (Y_{t+s} - Y_t)^2`.
pub fn fa(x: &[f64], scales: &[usize]) -> Result<FluctuationCurve> {
    let y = profile(x)?;
    check_scales(scales, y.len(), 1)?;
    let f = scales
        .iter()
        .map(|&s| {
            let terms = y.len() - s;
            let sum: f64 = y.windows(s + 1).map(|w| (w[s] - w[0]).powi(2)).sum();
            (sum / terms as f64).sqrt()
        })
        .collect();
    curve(FluctuationMethod::Fa, scales, f, &y)
}

/// DFA-1: RMS residual of per-window least-squares lines over non-overlapping
/// windows, taken from both ends of the profile.
pub fn dfa(x: &[f64], scales: &[usize]) -> Result<FluctuationCurve> {
    let y = profile(x)?;
    check_scales(scales, y.len(), 3)?;
    let n = y.len();
    let f = scales
        .iter()
        .map(|&s| {
            let windows = n / s;
            let tail = n - windows * s;
            let forward = (0..windows).map(|w| w * s);
            let backward = (0..windows).map(|w| tail + w * s);
            let total: f64 = forward
                .chain(backward)
                .map(|start| window_residual(&y[start..start + s]))
                .sum();
            (total / (2 * windows * s) as f64).sqrt()
        })
        .collect();
    curve(FluctuationMethod::Dfa, scales, f, &y)
}

/// Squared residual of the least-squares line through `w` against `0..len`.
fn window_residual(w: &[f64]) -> f64 {
    let n = w.len() as f64;
    let t_mean = (n - 1.0) / 2.0;
    let y_mean = w.iter().sum::<f64>() / n;
    let (sxx, sxy) = w.iter().enumerate().fold((0.0, 0.0), |(sxx, sxy), (i, v)| {
        let dt = i as f64 - t_mean;
        (sxx + dt * dt, sxy + dt * (v - y_mean))
    });
    let slope = sxy / sxx;
    w.iter()
        .enumerate()
        .map(|(i, v)| {
            let fit = y_mean + slope * (i as f64 - t_mean);
            (v - fit).powi(2)
        })
        .sum()
}

/// Backward DMA: `F(n)^2` is the mean of `(Y_i - MA_n(Y)_i)^2` over every `i`
/// with a full trailing `n`-point window.
pub fn dma(x: &[f64], windows: &[usize]) -> Result<FluctuationCurve> {
    let y = profile(x)?;
    check_scales(windows, y.len(), 2)?;
    let f = windows
        .iter()
        .map(|&w| {
            let mut sum: f64 = y[..w].iter().sum();
            let mut acc = 0.0;
            for i in (w - 1)..y.len() {
                if i >= w {
                    sum += y[i] - y[i - w];
                }
                let ma = sum / w as f64;
                acc += (y[i] - ma).powi(2);
            }
            (acc / (y.len() - w + 1) as f64).sqrt()
        })
        .collect();
    curve(FluctuationMethod::Dma, windows, f, &y)
}

pub fn analyse(method: FluctuationMethod, x: &[f64], scales: &[usize]) -> Result<FluctuationCurve> {
    match method {
        FluctuationMethod::Fa => fa(x, scales),
        FluctuationMethod::Dfa => dfa(x, scales),
        FluctuationMethod::Dma => dma(x, scales),
    }
}
