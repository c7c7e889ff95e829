//! Core containers and the elementary numerics every estimator shares.

use crate::error::{Error, Result};

/// Ordered `(time, value)` samples.
///
/// Times are strictly increasing and every entry is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::LengthMismatch {
                times: times.len(),
                values: values.len(),
            });
        }
        check_finite(&times)?;
        check_finite(&values)?;
        if let Some(i) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::NonIncreasingTimes { index: i + 1 });
        }
        Ok(Self { times, values })
    }

    /// Values at unit-spaced times `1, 2, ..., n`.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let times = (1..=values.len()).map(|t| t as f64).collect();
        Self::new(times, values)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.times, self.values)
    }

    /// Same times, new values. Used internally where the times are already validated.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.times.len());
        Self {
            times: self.times.clone(),
            values,
        }
    }

    /// Samples whose time lies in the closed range `[start, end]`.
    pub fn restrict(&self, start: f64, end: f64) -> Self {
        let (times, values) = self
            .times
            .iter()
            .zip(&self.values)
            .filter(|(t, _)| **t >= start && **t <= end)
            .map(|(t, v)| (*t, *v))
            .unzip();
        Self { times, values }
    }
}

fn check_finite(xs: &[f64]) -> Result<()> {
    match xs.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// Breakpoints `a_0 < a_1 < ... < a_M` delimiting `M` scale intervals.
///
/// Interval `k` (0-based) is the half-open `[a_k, a_{k+1})`, except the last
/// one which is closed at `a_M`, so every time in `[a_0, a_M]` belongs to
/// exactly one interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalePartition {
    breakpoints: Vec<f64>,
}

impl ScalePartition {
    pub fn new(breakpoints: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::invalid(
                "breakpoints",
                format!("need at least 2 breakpoints, got {}", breakpoints.len()),
            ));
        }
        check_finite(&breakpoints)?;
        if let Some(i) = breakpoints.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "breakpoints",
                format!("not strictly increasing at index {}", i + 1),
            ));
        }
        Ok(Self { breakpoints })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Number of scale intervals `M`.
    pub fn num_intervals(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn interval(&self, k: usize) -> (f64, f64) {
        (self.breakpoints[k], self.breakpoints[k + 1])
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.breakpoints.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn start(&self) -> f64 {
        self.breakpoints[0]
    }

    pub fn end(&self) -> f64 {
        self.breakpoints[self.breakpoints.len() - 1]
    }

    /// Index of the interval owning `t`, or `None` outside `[a_0, a_M]`.
    pub fn interval_of(&self, t: f64) -> Option<usize> {
        if t < self.start() || t > self.end() {
            return None;
        }
        let m = self.num_intervals();
        // first breakpoint strictly greater than t
        let upper = self.breakpoints.partition_point(|&a| a <= t);
        Some(upper.saturating_sub(1).min(m - 1))
    }
}

/// One line `alpha + beta * t` on `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftSegment {
    pub start: f64,
    pub end: f64,
    pub intercept: f64,
    pub slope: f64,
}

impl DriftSegment {
    pub fn eval(&self, t: f64) -> f64 {
        self.intercept + self.slope * t
    }
}

/// Drift `g(t) = sum_k (alpha_k + beta_k t) 1_{B_k}(t)` over ordered, disjoint segments.
///
/// Segments are half-open except the last, which also owns its end point.
/// Outside every segment the drift is undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearDrift {
    segments: Vec<DriftSegment>,
}

impl PiecewiseLinearDrift {
    pub fn new(segments: Vec<DriftSegment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::invalid(
                "segments",
                "drift needs at least one segment",
            ));
        }
        for (i, s) in segments.iter().enumerate() {
            let coords = [s.start, s.end, s.intercept, s.slope];
            if coords.iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFinite { index: i });
            }
            if s.end <= s.start {
                return Err(Error::invalid(
                    "segments",
                    format!("segment {i} has end <= start"),
                ));
            }
        }
        if let Some(i) = segments.windows(2).position(|w| w[1].start < w[0].end) {
            return Err(Error::invalid(
                "segments",
                format!("segments {} and {} overlap or are out of order", i, i + 1),
            ));
        }
        Ok(Self { segments })
    }

    /// A single line covering `[start, end]`.
    pub fn single(start: f64, end: f64, intercept: f64, slope: f64) -> Result<Self> {
        Self::new(vec![DriftSegment {
            start,
            end,
            intercept,
            slope,
        }])
    }

    /// One `(intercept, slope)` pair per interval of `partition`.
    pub fn on_partition(partition: &ScalePartition, lines: &[(f64, f64)]) -> Result<Self> {
        if lines.len() != partition.num_intervals() {
            return Err(Error::invalid(
                "lines",
                format!(
                    "{} lines for {} intervals",
                    lines.len(),
                    partition.num_intervals()
                ),
            ));
        }
        let segments = lines
            .iter()
            .enumerate()
            .map(|(k, &(intercept, slope))| {
                let (start, end) = partition.interval(k);
                DriftSegment {
                    start,
                    end,
                    intercept,
                    slope,
                }
            })
            .collect();
        Self::new(segments)
    }

    pub fn segments(&self) -> &[DriftSegment] {
        &self.segments
    }

    pub fn segment_of(&self, t: f64) -> Option<&DriftSegment> {
        let last = self.segments.len() - 1;
        self.segments.iter().enumerate().find_map(|(i, s)| {
            let inside = (s.start <= t && t < s.end) || (i == last && t == s.end);
            inside.then_some(s)
        })
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        self.segment_of(t)
            .map(|s| s.eval(t))
            .ok_or(Error::OutsideDrift { time: t })
    }
}

/// Order of differencing, restricted to 1 or 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DiffOrder {
    First,
    Second,
}

impl DiffOrder {
    pub fn new(r: usize) -> Result<Self> {
        match r {
            1 => Ok(DiffOrder::First),
            2 => Ok(DiffOrder::Second),
            _ => Err(Error::invalid(
                "r",
                format!("difference order must be 1 or 2, got {r}"),
            )),
        }
    }

    pub fn get(self) -> usize {
        match self {
            DiffOrder::First => 1,
            DiffOrder::Second => 2,
        }
    }
}

/// Order-`r` differences: `x[j+1] - x[j]` or `x[j+2] - 2x[j+1] + x[j]`.
pub fn difference(x: &[f64], r: DiffOrder) -> Result<Vec<f64>> {
    let r_ = r.get();
    if x.len() < r_ + 1 {
        return Err(Error::TooShort {
            needed: r_ + 1,
            got: x.len(),
        });
    }
    Ok(match r {
        DiffOrder::First => x.windows(2).map(|w| w[1] - w[0]).collect(),
        DiffOrder::Second => x.windows(3).map(|w| w[2] - 2.0 * w[1] + w[0]).collect(),
    })
}

/// Every `k`-th entry starting at the `k`-th (1-based): `x_k, x_2k, ..., x_{floor(N/k) k}`.
pub fn subsample(x: &[f64], k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::invalid("k", "stride must be at least 1"));
    }
    if x.len() < k {
        return Err(Error::TooShort {
            needed: k,
            got: x.len(),
        });
    }
    Ok(x.iter().skip(k - 1).step_by(k).copied().collect())
}

/// Divisor used by [`sample_variance_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VarianceDivisor {
    /// `1/n`, the convention of the variance-ratio estimators.
    #[default]
    Count,
    /// `1/(n-1)`.
    Unbiased,
}

/// `(1/n) sum (y_i - mean)^2`.
pub fn sample_variance(y: &[f64]) -> Result<f64> {
    sample_variance_with(y, VarianceDivisor::Count)
}

pub fn sample_variance_with(y: &[f64], divisor: VarianceDivisor) -> Result<f64> {
    if y.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: y.len(),
        });
    }
    check_finite(y)?;
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let ss: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok(match divisor {
        VarianceDivisor::Count => ss / n,
        VarianceDivisor::Unbiased => ss / (n - 1.0),
    })
}

/// `var` if it exceeds round-off for data of magnitude `scale`, else `0.0`.
pub(crate) fn snap_roundoff(var: f64, scale: f64) -> f64 {
    let floor = 1e-12 * scale;
    if var <= floor * floor {
        0.0
    } else {
        var
    }
}

pub(crate) fn max_abs(y: &[f64]) -> f64 {
    y.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub(crate) fn mean(y: &[f64]) -> f64 {
    y.iter().sum::<f64>() / y.len() as f64
}

/// Least-squares line `intercept + slope * t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub intercept: f64,
    pub slope: f64,
}

impl Line {
    pub fn eval(&self, t: f64) -> f64 {
        self.intercept + self.slope * t
    }
}

/// Ordinary least-squares line through `(t_i, x_i)`.
///
/// Computed on centred times, which is algebraically the normal-equation
/// solution but avoids the `sum t^2 - (sum t)^2 / n` cancellation.
pub fn ols_line(t: &[f64], x: &[f64]) -> Result<Line> {
    if t.len() != x.len() {
        return Err(Error::LengthMismatch {
            times: t.len(),
            values: x.len(),
        });
    }
    if t.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: t.len(),
        });
    }
    check_finite(t)?;
    check_finite(x)?;
    let t_mean = mean(t);
    let x_mean = mean(x);
    let (sxx, sxy) = t.iter().zip(x).fold((0.0, 0.0), |(sxx, sxy), (&ti, &xi)| {
        let dt = ti - t_mean;
        (sxx + dt * dt, sxy + dt * (xi - x_mean))
    });
    if sxx == 0.0 {
        return Err(Error::SingularDesign);
    }
    let slope = sxy / sxx;
    Ok(Line {
        intercept: x_mean - slope * t_mean,
        slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn differences_match_arithmetic() {
        let x = [1.0, 3.0, 6.0, 10.0];
        assert_eq!(
            difference(&x, DiffOrder::First).unwrap(),
            vec![2.0, 3.0, 4.0]
        );
        assert_eq!(difference(&x, DiffOrder::Second).unwrap(), vec![1.0, 1.0]);
        assert_eq!(
            difference(&[5.0; 6], DiffOrder::First).unwrap(),
            vec![0.0; 5]
        );
        assert!(matches!(
            difference(&[1.0, 2.0], DiffOrder::Second),
            Err(Error::TooShort { needed: 3, got: 2 })
        ));
    }

    #[test]
    fn diff_order_rejects_three() {
        assert!(DiffOrder::new(3).is_err());
        assert!(DiffOrder::new(0).is_err());
        assert_eq!(DiffOrder::new(2).unwrap().get(), 2);
    }

    #[test]
    fn subsample_index_rules() {
        let x = [0.0, 1.0, 4.0, 9.0, 16.0, 25.0];
        assert_eq!(subsample(&x, 2).unwrap(), vec![1.0, 9.0, 25.0]);
        assert_eq!(subsample(&x, 1).unwrap(), x.to_vec());
        let seven: Vec<f64> = (1..=7).map(f64::from).collect();
        assert_eq!(subsample(&seven, 3).unwrap(), vec![3.0, 6.0]);
        assert!(subsample(&x, 0).is_err());
        assert!(subsample(&x, 7).is_err());
    }

    #[test]
    fn variance_uses_count_divisor() {
        assert!((sample_variance(&[1.0, 2.0, 3.0]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(sample_variance(&[4.0; 5]).unwrap(), 0.0);
        assert_eq!(sample_variance(&[0.0, 2.0]).unwrap(), 1.0);
        assert_eq!(
            sample_variance_with(&[0.0, 2.0], VarianceDivisor::Unbiased).unwrap(),
            2.0
        );
        assert!(sample_variance(&[1.0]).is_err());
        assert!(matches!(
            sample_variance(&[1.0, f64::NAN]),
            Err(Error::NonFinite { index: 1 })
        ));
    }

    #[test]
    fn ols_exact_and_symmetric() {
        let t: Vec<f64> = (0..10).map(f64::from).collect();
        let x: Vec<f64> = t.iter().map(|t| 3.0 + 2.0 * t).collect();
        let line = ols_line(&t, &x).unwrap();
        assert!((line.intercept - 3.0).abs() < 1e-12);
        assert!((line.slope - 2.0).abs() < 1e-12);

        // symmetric about the midpoint of t
        let x: Vec<f64> = t.iter().map(|t| (t - 4.5).powi(2)).collect();
        assert!(ols_line(&t, &x).unwrap().slope.abs() < 1e-12);

        assert_eq!(
            ols_line(&[2.0, 2.0], &[1.0, 3.0]),
            Err(Error::SingularDesign)
        );
    }

    /// Raw 2x2 normal equations solved by Cramer's rule.
    fn normal_equations(t: &[f64], x: &[f64]) -> (f64, f64) {
        let n = t.len() as f64;
        let st: f64 = t.iter().sum();
        let stt: f64 = t.iter().map(|v| v * v).sum();
        let sx: f64 = x.iter().sum();
        let stx: f64 = t.iter().zip(x).map(|(a, b)| a * b).sum();
        let det = n * stt - st * st;
        ((stt * sx - st * stx) / det, (n * stx - st * sx) / det)
    }

    #[test]
    fn ols_matches_normal_equation_oracle() {
        let (a, b) = normal_equations(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]);
        // frozen from the oracle: a = -2/3, b = 3/2
        assert!((a + 2.0 / 3.0).abs() < 1e-14);
        assert!((b - 1.5).abs() < 1e-14);
        let line = ols_line(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap();
        assert!((line.intercept - a).abs() < 1e-12);
        assert!((line.slope - b).abs() < 1e-12);
    }

    #[test]
    fn timeseries_validation() {
        assert!(TimeSeries::new(vec![1.0, 2.0], vec![1.0]).is_err());
        assert!(matches!(
            TimeSeries::new(vec![1.0, 1.0], vec![1.0, 2.0]),
            Err(Error::NonIncreasingTimes { index: 1 })
        ));
        assert!(TimeSeries::new(vec![1.0, f64::INFINITY], vec![1.0, 2.0]).is_err());
        let ts = TimeSeries::from_values(vec![4.0, 5.0, 6.0]).unwrap();
        assert_eq!(ts.times(), &[1.0, 2.0, 3.0]);
        assert_eq!(ts.restrict(2.0, 3.0).values(), &[5.0, 6.0]);
    }

    #[test]
    fn partition_interval_ownership() {
        let p = ScalePartition::new(vec![0.0, 10.0, 30.0]).unwrap();
        assert_eq!(p.num_intervals(), 2);
        assert_eq!(p.interval_of(0.0), Some(0));
        assert_eq!(p.interval_of(9.999), Some(0));
        assert_eq!(p.interval_of(10.0), Some(1));
        assert_eq!(p.interval_of(30.0), Some(1));
        assert_eq!(p.interval_of(30.1), None);
        assert_eq!(p.interval_of(-1.0), None);
        assert!(ScalePartition::new(vec![1.0]).is_err());
        assert!(ScalePartition::new(vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn drift_evaluation_and_domain() {
        let p = ScalePartition::new(vec![0.0, 10.0, 30.0]).unwrap();
        let g = PiecewiseLinearDrift::on_partition(&p, &[(1.0, 0.5), (-2.0, 1.0)]).unwrap();
        assert_eq!(g.eval(4.0).unwrap(), 3.0);
        assert_eq!(g.eval(10.0).unwrap(), 8.0);
        assert_eq!(g.eval(30.0).unwrap(), 28.0);
        assert!(matches!(g.eval(31.0), Err(Error::OutsideDrift { .. })));
        let overlapping = vec![
            DriftSegment {
                start: 0.0,
                end: 2.0,
                intercept: 0.0,
                slope: 0.0,
            },
            DriftSegment {
                start: 1.0,
                end: 3.0,
                intercept: 0.0,
                slope: 0.0,
            },
        ];
        assert!(PiecewiseLinearDrift::new(overlapping).is_err());
    }

    proptest! {
        #[test]
        fn second_difference_is_iterated_first(x in prop::collection::vec(-1e3f64..1e3, 3..60)) {
            let once = difference(&x, DiffOrder::First).unwrap();
            let twice = difference(&once, DiffOrder::First).unwrap();
            let direct = difference(&x, DiffOrder::Second).unwrap();
            prop_assert_eq!(twice.len(), direct.len());
            for (a, b) in twice.iter().zip(&direct) {
                prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
            }
        }

        #[test]
        fn variance_is_affine_covariant(
            y in prop::collection::vec(-1e2f64..1e2, 2..50),
            c in -10.0f64..10.0,
            d in -1e3f64..1e3,
        ) {
            let base = sample_variance(&y).unwrap();
            let moved: Vec<f64> = y.iter().map(|v| c * v + d).collect();
            let got = sample_variance(&moved).unwrap();
            prop_assert!((got - c * c * base).abs() <= 1e-8 * (1.0 + c * c * base));
        }

        #[test]
        fn ols_residuals_have_zero_mean(
            x in prop::collection::vec(-1e3f64..1e3, 2..80),
        ) {
            let t: Vec<f64> = (0..x.len()).map(|i| i as f64 * 0.7 + 3.0).collect();
            let line = ols_line(&t, &x).unwrap();
            let resid: Vec<f64> = t.iter().zip(&x).map(|(t, x)| x - line.eval(*t)).collect();
            let range = x.iter().cloned().fold(f64::MIN, f64::max)
                - x.iter().cloned().fold(f64::MAX, f64::min);
            prop_assert!(mean(&resid).abs() <= 1e-10 * (1.0 + range));
        }

        #[test]
        fn subsample_length_is_floor(n in 1usize..200, k_frac in 0.0f64..1.0) {
            let k = 1 + ((n - 1) as f64 * k_frac) as usize;
            let x = vec![0.0; n];
            prop_assert_eq!(subsample(&x, k).unwrap().len(), n / k);
        }
    }
}
