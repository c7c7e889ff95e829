//! Scale intervals: detection, the scale estimator, and sampling grids.

use std::ops::Range;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::series::{ScalePartition, TimeSeries};

/// Per-pair length ratios of consecutive scale intervals and their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleEstimate {
    pub per_pair_ratios: Vec<f64>,
    pub mean_ratio: f64,
}

/// Which way the length ratio of neighbouring intervals is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    /// `(a_{i+1} - a_i) / (a_i - a_{i-1})`: later over earlier.
    #[default]
    Forward,
    /// `(a_i - a_{i-1}) / (a_{i+1} - a_i)`: earlier over later.
    Backward,
}

pub fn estimate_scale(
    partition: &ScalePartition,
    orientation: Orientation,
) -> Result<ScaleEstimate> {
    if partition.num_intervals() < 2 {
        return Err(Error::invalid(
            "partition",
            "scale estimation needs at least 3 breakpoints",
        ));
    }
    let lengths = partition.lengths();
    if lengths.iter().any(|&l| l <= 0.0) {
        return Err(Error::invalid("partition", "zero-length scale interval"));
    }
    let per_pair_ratios: Vec<f64> = lengths
        .windows(2)
        .map(|w| match orientation {
            Orientation::Forward => w[1] / w[0],
            Orientation::Backward => w[0] / w[1],
        })
        .collect();
    let mean_ratio = per_pair_ratios.iter().sum::<f64>() / per_pair_ratios.len() as f64;
    Ok(ScaleEstimate {
        per_pair_ratios,
        mean_ratio,
    })
}

/// `q` equally spaced points in each scale interval.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingGrid {
    points: Vec<f64>,
    q: usize,
    partition: ScalePartition,
}

impl SamplingGrid {
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn partition(&self) -> &ScalePartition {
        &self.partition
    }

    pub fn num_intervals(&self) -> usize {
        self.partition.num_intervals()
    }

    /// The `q` points of interval `k` (0-based).
    pub fn interval_points(&self, k: usize) -> &[f64] {
        &self.points[k * self.q..(k + 1) * self.q]
    }

    /// Grid points followed by the closing breakpoint `a_M`.
    pub fn points_with_endpoint(&self) -> Vec<f64> {
        let mut pts = self.points.clone();
        pts.push(self.partition.end());
        pts
    }
}

/// For interval `[a_{k-1}, a_k)`: `a_{k-1} + (i - 1) d_k`, `i = 1..q`, with `d_k = (a_k - a_{k-1}) / q`.
pub fn equally_spaced_grid(partition: &ScalePartition, q: usize) -> Result<SamplingGrid> {
    if q < 2 {
        return Err(Error::invalid("q", format!("need q >= 2, got {q}")));
    }
    let mut points = Vec::with_capacity(q * partition.num_intervals());
    for k in 0..partition.num_intervals() {
        let (start, end) = partition.interval(k);
        let step = (end - start) / q as f64;
        points.extend((0..q).map(|i| start + i as f64 * step));
    }
    Ok(SamplingGrid {
        points,
        q,
        partition: partition.clone(),
    })
}

/// Points `alpha^{nT + k}` for `n` in `n_range` and `k = 0..T`.
pub fn geometric_grid(alpha: f64, per_interval: usize, n_range: Range<i32>) -> Result<Vec<f64>> {
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(Error::invalid(
            "alpha",
            format!("need alpha > 1, got {alpha}"),
        ));
    }
    if per_interval == 0 {
        return Err(Error::invalid(
            "T",
            "need at least one point per scale interval",
        ));
    }
    let t = per_interval as i32;
    Ok(n_range
        .flat_map(|n| (0..t).map(move |k| alpha.powi(n * t + k)))
        .collect())
}

/// Last-observation values of `x` at each grid point.
pub fn resample_on_grid(x: &TimeSeries, grid: &SamplingGrid) -> Result<TimeSeries> {
    resample_at(x, grid.points())
}

/// Last-observation resampling at arbitrary increasing `points`.
///
/// A sample time within `1e-9` (relative) above a point counts as at the
/// point, so grids computed in floating point still hit coinciding samples.
pub fn resample_at(x: &TimeSeries, points: &[f64]) -> Result<TimeSeries> {
    let times = x.times();
    let values = x.values();
    let mut out = Vec::with_capacity(points.len());
    for &p in points {
        let tol = 1e-9 * p.abs().max(1.0);
        let upto = times.partition_point(|&t| t <= p + tol);
        if upto == 0 {
            return Err(Error::invalid(
                "grid",
                format!("grid point {p} precedes the first sample at {}", times[0]),
            ));
        }
        out.push(values[upto - 1]);
    }
    TimeSeries::new(points.to_vec(), out)
}

/// How many scale intervals [`detect_scale_intervals`] should find.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntervalCount {
    Fixed(usize),
    /// Minimise `residual + penalty * M * ln(N) * sigma^2` over `M = 1..=max`.
    Auto {
        penalty: f64,
        max: usize,
    },
}

impl IntervalCount {
    pub fn auto() -> Self {
        IntervalCount::Auto {
            penalty: 1.0,
            max: 20,
        }
    }
}

/// Outcome of the piecewise-quadratic segmentation.
#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub partition: ScalePartition,
    /// Sample index at which each segment starts.
    pub starts: Vec<usize>,
    /// Total squared residual, in standardised value units.
    pub cost: f64,
}

pub fn detect_scale_intervals(
    x: &TimeSeries,
    count: IntervalCount,
    min_len: usize,
) -> Result<ScalePartition> {
    segment_quadratic(x, count, min_len).map(|s| s.partition)
}

/// Globally optimal split of `x` into segments each fitted by one
/// least-squares quadratic, by dynamic programming over sample indices.
pub fn segment_quadratic(
    x: &TimeSeries,
    count: IntervalCount,
    min_len: usize,
) -> Result<Segmentation> {
    if min_len < 4 {
        return Err(Error::invalid(
            "min_len",
            format!("need min_len >= 4, got {min_len}"),
        ));
    }
    let n = x.len();
    let max_m = match count {
        IntervalCount::Fixed(0) => return Err(Error::invalid("M", "need at least one interval")),
        IntervalCount::Fixed(m) => m,
        IntervalCount::Auto { penalty, max } => {
            if penalty.is_nan() || penalty < 0.0 || max == 0 {
                return Err(Error::invalid(
                    "M",
                    "auto selection needs penalty >= 0 and max >= 1",
                ));
            }
            max.min(n / min_len).max(1)
        }
    };
    if n < max_m * min_len || n < min_len {
        return Err(Error::TooShort {
            needed: max_m.max(1) * min_len,
            got: n,
        });
    }

    let z = standardise(x.values());
    let t = x.times();
    let table = DpTable::solve(t, &z, max_m, min_len);

    let m = match count {
        IntervalCount::Fixed(m) => m,
        IntervalCount::Auto { penalty, .. } => {
            let sigma2 =
                z.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / (2.0 * (n - 1) as f64);
            let weight = penalty * (n as f64).ln() * sigma2;
            (1..=max_m)
                .filter(|&m| table.cost(m).is_finite())
                .min_by(|&a, &b| {
                    let ca = table.cost(a) + weight * a as f64;
                    let cb = table.cost(b) + weight * b as f64;
                    ca.total_cmp(&cb)
                })
                .unwrap_or(1)
        }
    };
    let starts = table.starts(m);
    let mut breakpoints: Vec<f64> = starts.iter().map(|&i| t[i]).collect();
    breakpoints.push(t[n - 1]);
    Ok(Segmentation {
        partition: ScalePartition::new(breakpoints)?,
        cost: table.cost(m),
        starts,
    })
}

fn standardise(values: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let sd = if sd > 0.0 { sd } else { 1.0 };
    values.iter().map(|v| (v - mean) / sd).collect()
}

/// `best[m][j]`: least cost of covering samples `0..j` with `m` segments.
struct DpTable {
    best: Vec<Vec<f64>>,
    from: Vec<Vec<usize>>,
    n: usize,
}

impl DpTable {
    fn solve(t: &[f64], z: &[f64], max_m: usize, min_len: usize) -> Self {
        let n = t.len();
        let mut best = vec![vec![f64::INFINITY; n + 1]; max_m + 1];
        let mut from = vec![vec![usize::MAX; n + 1]; max_m + 1];
        best[0][0] = 0.0;
        for i in 0..n {
            // best[.][i] is final: every segment ending at i starts earlier
            if (0..max_m).all(|m| !best[m][i].is_finite()) {
                continue;
            }
            let mut acc = QuadraticAccumulator::new(t[i]);
            for j in i..n {
                acc.push(t[j], z[j]);
                let end = j + 1;
                if end - i < min_len {
                    continue;
                }
                let cost = acc.residual();
                for m in 1..=max_m {
                    let cand = best[m - 1][i] + cost;
                    if cand < best[m][end] {
                        best[m][end] = cand;
                        from[m][end] = i;
                    }
                }
            }
        }
        Self { best, from, n }
    }

    fn cost(&self, m: usize) -> f64 {
        self.best[m][self.n]
    }

    fn starts(&self, m: usize) -> Vec<usize> {
        let mut starts = Vec::with_capacity(m);
        let mut end = self.n;
        for level in (1..=m).rev() {
            let start = self.from[level][end];
            starts.push(start);
            end = start;
        }
        starts.reverse();
        starts
    }
}

/// Running moments for a quadratic fit, with times shifted to the segment start.
struct QuadraticAccumulator {
    origin: f64,
    span: f64,
    /// sum s^p for p = 0..=4
    s: [f64; 5],
    /// sum z s^p for p = 0..=2
    zs: [f64; 3],
    zz: f64,
}

impl QuadraticAccumulator {
    fn new(origin: f64) -> Self {
        Self {
            origin,
            span: 0.0,
            s: [0.0; 5],
            zs: [0.0; 3],
            zz: 0.0,
        }
    }

    fn push(&mut self, t: f64, z: f64) {
        let s = t - self.origin;
        self.span = s;
        let mut pow = 1.0;
        for p in 0..5 {
            self.s[p] += pow;
            if p < 3 {
                self.zs[p] += z * pow;
            }
            pow *= s;
        }
        self.zz += z * z;
    }

    /// Residual sum of squares of the least-squares quadratic.
    fn residual(&self) -> f64 {
        // rescale s -> s / span so the normal matrix is well conditioned
        let h = if self.span > 0.0 { self.span } else { 1.0 };
        let hp = [1.0, h, h * h, h * h * h, h * h * h * h];
        let m = |p: usize| self.s[p] / hp[p];
        let a = Matrix3::new(m(0), m(1), m(2), m(1), m(2), m(3), m(2), m(3), m(4));
        let b = Vector3::new(self.zs[0], self.zs[1] / hp[1], self.zs[2] / hp[2]);
        match a.cholesky() {
            Some(chol) => {
                let c = chol.solve(&b);
                (self.zz - b.dot(&c)).max(0.0)
            }
            None => f64::INFINITY,
        }
    }
}
