//! Hurst estimation for DSI processes with stationary increments inside
//! each scale interval.
//!
//! With `q` equally spaced samples per interval, the increments of interval
//! `k` are distributed as `lambda^H` times those of interval `k - 1`, so the
//! ratio of their sample variances estimates `lambda^{2H}`.

use std::fmt;

use crate::detrend::{eliminate_drift, fit_global_drift, fit_piecewise_drift};
use crate::error::{Error, Result};
use crate::scalegrid::{
    detect_scale_intervals, equally_spaced_grid, estimate_scale, resample_at, IntervalCount,
    Orientation, SamplingGrid, ScaleEstimate,
};
use crate::series::{
    difference, max_abs, sample_variance, snap_roundoff, DiffOrder, PiecewiseLinearDrift,
    ScalePartition, TimeSeries,
};

/// Which increments belong to a scale interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// Only differences of the interval's own `q` samples.
    #[default]
    Within,
    /// Also the difference reaching the first sample of the next interval.
    Cross,
}

/// Variances `S_k^2` per interval of the order-`r` differences of `y`.
///
/// `y` must hold the grid's `M q` points, optionally followed by the closing
/// breakpoint `a_M` (required for [`Boundary::Cross`]).
pub fn interval_increment_variances(
    y: &TimeSeries,
    grid: &SamplingGrid,
    order: DiffOrder,
    boundary: Boundary,
) -> Result<Vec<f64>> {
    let q = grid.q();
    let m = grid.num_intervals();
    let r = order.get();
    if q < r + 2 {
        return Err(Error::invalid(
            "q",
            format!("need q >= {} for order {r}, got {q}", r + 2),
        ));
    }
    let len = y.len();
    if len != m * q && len != m * q + 1 {
        return Err(Error::invalid(
            "y",
            format!("expected {} grid samples (+1 endpoint), got {len}", m * q),
        ));
    }
    let matches = grid
        .points()
        .iter()
        .zip(y.times())
        .all(|(g, t)| (g - t).abs() <= 1e-9 * g.abs().max(1.0));
    if !matches {
        return Err(Error::invalid("y", "series is not sampled on the grid"));
    }
    let values = y.values();
    (0..m)
        .map(|k| {
            let start = k * q;
            let stop = match boundary {
                Boundary::Within => start + q,
                Boundary::Cross => {
                    if start + q + 1 > len {
                        return Err(Error::invalid(
                            "boundary",
                            format!("interval {} has no cross-boundary sample", k + 1),
                        ));
                    }
                    start + q + 1
                }
            };
            let segment = &values[start..stop];
            let diffs = difference(segment, order)?;
            Ok(snap_roundoff(sample_variance(&diffs)?, max_abs(segment)))
        })
        .collect()
}

/// The scale(s) dividing the log variance ratios.
#[derive(Debug, Clone, PartialEq)]
pub enum ScaleChoice {
    /// One `lambda` for every pair.
    Single(f64),
    /// One `lambda_i` per consecutive pair of intervals.
    PerPair(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DsiEstimate {
    /// `S_k^2`, `k = 1..M`.
    pub interval_variances: Vec<f64>,
    /// `S_k^2 / S_{k-1}^2`, `k = 2..M`.
    pub mu_hats: Vec<f64>,
    /// `log(mu_hat) / (2 log lambda)` per pair.
    pub hurst_per_interval: Vec<f64>,
    pub hurst_mean: f64,
    /// Mean of `mu_hats`.
    pub mu_mean: f64,
    /// `log(mu_mean) / (2 log lambda_used)`.
    pub hurst_from_mu_mean: f64,
    /// Scale of each pair.
    pub lambda_per_pair: Vec<f64>,
    /// Mean of `lambda_per_pair`.
    pub lambda_used: f64,
    pub diff_order: DiffOrder,
}

pub fn estimate_dsi_hurst(
    variances: &[f64],
    scale: &ScaleChoice,
    order: DiffOrder,
) -> Result<DsiEstimate> {
    if variances.len() < 2 {
        return Err(Error::invalid(
            "variances",
            "need at least two scale intervals",
        ));
    }
    if let Some(k) = variances.iter().position(|&v| v.is_nan() || v <= 0.0) {
        return Err(Error::zero_variance(format!("scale interval {}", k + 1)));
    }
    let pairs = variances.len() - 1;
    let lambda_per_pair = match scale {
        ScaleChoice::Single(l) => vec![*l; pairs],
        ScaleChoice::PerPair(ls) => {
            if ls.len() != pairs {
                return Err(Error::invalid(
                    "lambda",
                    format!("{} per-pair scales for {pairs} pairs", ls.len()),
                ));
            }
            ls.clone()
        }
    };
    if let Some(l) = lambda_per_pair
        .iter()
        .find(|&&l| !(l > 1.0 && l.is_finite()))
    {
        return Err(Error::invalid(
            "lambda",
            format!("need lambda > 1, got {l}"),
        ));
    }
    let mu_hats: Vec<f64> = variances.windows(2).map(|w| w[1] / w[0]).collect();
    let hurst_per_interval: Vec<f64> = mu_hats
        .iter()
        .zip(&lambda_per_pair)
        .map(|(mu, l)| mu.ln() / (2.0 * l.ln()))
        .collect();
    let hurst_mean = hurst_per_interval.iter().sum::<f64>() / pairs as f64;
    let mu_mean = mu_hats.iter().sum::<f64>() / pairs as f64;
    let lambda_used = lambda_per_pair.iter().sum::<f64>() / pairs as f64;
    Ok(DsiEstimate {
        interval_variances: variances.to_vec(),
        hurst_from_mu_mean: mu_mean.ln() / (2.0 * lambda_used.ln()),
        mu_hats,
        hurst_per_interval,
        hurst_mean,
        mu_mean,
        lambda_per_pair,
        lambda_used,
        diff_order: order,
    })
}

/// Drift treatment before variance estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DriftMode {
    None,
    /// One line over the partition span.
    Global,
    /// One line per scale interval.
    #[default]
    Piecewise,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PartitionSource {
    Supplied(ScalePartition),
    Detect {
        count: IntervalCount,
        min_len: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DsiConfig {
    pub partition: PartitionSource,
    pub q: usize,
    pub order: DiffOrder,
    pub drift_mode: DriftMode,
    pub boundary: Boundary,
    /// Orientation of the scale estimate used to compute `H_i`.
    pub orientation: Orientation,
    /// Use the per-pair `lambda_i` instead of their mean.
    pub per_pair_lambda: bool,
}

impl DsiConfig {
    pub fn new(partition: PartitionSource, q: usize) -> Self {
        Self {
            partition,
            q,
            order: DiffOrder::First,
            drift_mode: DriftMode::Piecewise,
            boundary: Boundary::Within,
            orientation: Orientation::Forward,
            per_pair_lambda: false,
        }
    }
}

/// Pipeline step an error came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Partition,
    Scale,
    Drift,
    Resample,
    Variance,
    Estimate,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Partition => "partition",
            Stage::Scale => "scale",
            Stage::Drift => "drift",
            Stage::Resample => "resample",
            Stage::Variance => "variance",
            Stage::Estimate => "estimate",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{stage} stage: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, PipelineError>;
}

impl<T> AtStage<T> for Result<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, PipelineError> {
        self.map_err(|source| PipelineError { stage, source })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DsiReport {
    pub estimate: DsiEstimate,
    pub partition: ScalePartition,
    pub scale_forward: ScaleEstimate,
    pub scale_backward: ScaleEstimate,
    pub drift: Option<PiecewiseLinearDrift>,
    pub grid: SamplingGrid,
}

/// Partition, drift removal, grid resampling, variances, estimate.
pub fn dsi_pipeline(
    x: &TimeSeries,
    cfg: &DsiConfig,
) -> std::result::Result<DsiReport, PipelineError> {
    let partition = match &cfg.partition {
        PartitionSource::Supplied(p) => p.clone(),
        PartitionSource::Detect { count, min_len } => {
            detect_scale_intervals(x, *count, *min_len).at(Stage::Partition)?
        }
    };
    let scale_forward = estimate_scale(&partition, Orientation::Forward).at(Stage::Scale)?;
    let scale_backward = estimate_scale(&partition, Orientation::Backward).at(Stage::Scale)?;

    let span = x.restrict(partition.start(), partition.end());
    let drift = match cfg.drift_mode {
        DriftMode::None => None,
        DriftMode::Global => Some(fit_global_drift(&span).at(Stage::Drift)?),
        DriftMode::Piecewise => Some(fit_piecewise_drift(&span, &partition).at(Stage::Drift)?),
    };
    let y = match &drift {
        Some(g) => eliminate_drift(&span, g).at(Stage::Drift)?,
        None => span,
    };

    let grid = equally_spaced_grid(&partition, cfg.q).at(Stage::Resample)?;
    let points = match cfg.boundary {
        Boundary::Within => grid.points().to_vec(),
        Boundary::Cross => grid.points_with_endpoint(),
    };
    if y.is_empty() {
        return Err(PipelineError {
            stage: Stage::Resample,
            source: Error::TooShort { needed: 1, got: 0 },
        });
    }
    let resampled = resample_at(&y, &points).at(Stage::Resample)?;
    let variances = interval_increment_variances(&resampled, &grid, cfg.order, cfg.boundary)
        .at(Stage::Variance)?;

    let scale = match cfg.orientation {
        Orientation::Forward => &scale_forward,
        Orientation::Backward => &scale_backward,
    };
    let choice = if cfg.per_pair_lambda {
        ScaleChoice::PerPair(scale.per_pair_ratios.clone())
    } else {
        ScaleChoice::Single(scale.mean_ratio)
    };
    let estimate = estimate_dsi_hurst(&variances, &choice, cfg.order).at(Stage::Estimate)?;
    Ok(DsiReport {
        estimate,
        partition,
        scale_forward,
        scale_backward,
        drift,
        grid,
    })
}
