//! Linear drift fitting and elimination.

use crate::error::{Error, Result};
use crate::series::{ols_line, PiecewiseLinearDrift, ScalePartition, TimeSeries};

/// One least-squares line over the full time span of `x`.
pub fn fit_global_drift(x: &TimeSeries) -> Result<PiecewiseLinearDrift> {
    let line = ols_line(x.times(), x.values())?;
    let times = x.times();
    PiecewiseLinearDrift::single(times[0], times[times.len() - 1], line.intercept, line.slope)
}

/// A separate least-squares line on each interval of `partition`.
pub fn fit_piecewise_drift(
    x: &TimeSeries,
    partition: &ScalePartition,
) -> Result<PiecewiseLinearDrift> {
    let m = partition.num_intervals();
    let mut members: Vec<(Vec<f64>, Vec<f64>)> = vec![(Vec::new(), Vec::new()); m];
    for (&t, &v) in x.times().iter().zip(x.values()) {
        if let Some(k) = partition.interval_of(t) {
            members[k].0.push(t);
            members[k].1.push(v);
        }
    }
    let lines = members
        .iter()
        .enumerate()
        .map(|(k, (t, v))| {
            if t.len() < 2 {
                return Err(Error::invalid(
                    "partition",
                    format!(
                        "scale interval {} holds {} sample(s), need 2",
                        k + 1,
                        t.len()
                    ),
                ));
            }
            ols_line(t, v).map(|l| (l.intercept, l.slope))
        })
        .collect::<Result<Vec<_>>>()?;
    PiecewiseLinearDrift::on_partition(partition, &lines)
}

/// `x(t) - g(t)` at every sample time.
pub fn eliminate_drift(x: &TimeSeries, drift: &PiecewiseLinearDrift) -> Result<TimeSeries> {
    let values = x
        .times()
        .iter()
        .zip(x.values())
        .map(|(&t, &v)| drift.eval(t).map(|g| v - g))
        .collect::<Result<Vec<_>>>()?;
    Ok(x.with_values(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::add_drift;
    use proptest::prelude::*;

    fn line_series(n: usize, a: f64, b: f64) -> TimeSeries {
        TimeSeries::from_values((1..=n).map(|t| a + b * t as f64).collect()).unwrap()
    }

    #[test]
    fn global_fit_exact_cases() {
        let g = fit_global_drift(&line_series(20, 3.0, 2.0)).unwrap();
        let s = g.segments()[0];
        assert!((s.intercept - 3.0).abs() < 1e-12 && (s.slope - 2.0).abs() < 1e-12);
        assert_eq!((s.start, s.end), (1.0, 20.0));

        let c = fit_global_drift(&line_series(5, 7.0, 0.0))
            .unwrap()
            .segments()[0];
        assert!((c.intercept - 7.0).abs() < 1e-12 && c.slope.abs() < 1e-12);

        let x = line_series(20, 3.0, 2.0);
        let resid = eliminate_drift(&x, &fit_global_drift(&x).unwrap()).unwrap();
        assert!(resid.values().iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn piecewise_fit_recovers_exact_lines() {
        let p = ScalePartition::new(vec![1.0, 11.0, 31.0, 40.0]).unwrap();
        let truth =
            PiecewiseLinearDrift::on_partition(&p, &[(1.0, 2.0), (-5.0, 0.5), (100.0, -3.0)])
                .unwrap();
        let zero = TimeSeries::from_values(vec![0.0; 40]).unwrap();
        let x = add_drift(&zero, &truth).unwrap();
        let fit = fit_piecewise_drift(&x, &p).unwrap();
        for (a, b) in fit.segments().iter().zip(truth.segments()) {
            assert!((a.intercept - b.intercept).abs() < 1e-9);
            assert!((a.slope - b.slope).abs() < 1e-11);
            assert_eq!((a.start, a.end), (b.start, b.end));
        }
    }

    #[test]
    fn one_interval_matches_global() {
        let x = TimeSeries::from_values((0..30).map(|i| ((i * 7) % 11) as f64).collect()).unwrap();
        let p = ScalePartition::new(vec![1.0, 30.0]).unwrap();
        assert_eq!(
            fit_piecewise_drift(&x, &p).unwrap(),
            fit_global_drift(&x).unwrap()
        );
    }

    #[test]
    fn sparse_interval_is_rejected() {
        let x = line_series(10, 0.0, 1.0);
        let p = ScalePartition::new(vec![1.0, 1.5, 10.0]).unwrap();
        assert!(fit_piecewise_drift(&x, &p).is_err());
    }

    #[test]
    fn uncovered_time_is_an_error() {
        let x = line_series(10, 0.0, 1.0);
        let g = PiecewiseLinearDrift::single(1.0, 5.0, 0.0, 1.0).unwrap();
        assert!(matches!(
            eliminate_drift(&x, &g),
            Err(Error::OutsideDrift { .. })
        ));
    }

    proptest! {
        #[test]
        fn segment_residuals_orthogonal(
            vals in prop::collection::vec(-100.0f64..100.0, 30..90),
            cut1 in 0.2f64..0.45,
            cut2 in 0.55f64..0.8,
        ) {
            let n = vals.len();
            let x = TimeSeries::from_values(vals).unwrap();
            let a1 = (1.0 + cut1 * n as f64).round();
            let a2 = (1.0 + cut2 * n as f64).round();
            let p = ScalePartition::new(vec![1.0, a1, a2, n as f64]).unwrap();
            let g = fit_piecewise_drift(&x, &p).unwrap();
            let r = eliminate_drift(&x, &g).unwrap();
            for k in 0..3 {
                let (t, e): (Vec<f64>, Vec<f64>) = r.times().iter().zip(r.values())
                    .filter(|(t, _)| p.interval_of(**t) == Some(k))
                    .map(|(t, v)| (*t, *v)).unzip();
                let sum: f64 = e.iter().sum();
                let cross: f64 = t.iter().zip(&e).map(|(t, e)| t * e).sum();
                prop_assert!(sum.abs() < 1e-10 * 100.0 * e.len() as f64);
                prop_assert!(cross.abs() < 1e-10 * 100.0 * n as f64 * e.len() as f64);
            }
            // nested models: piecewise fit never worse than the global line
            let rg = eliminate_drift(&x, &fit_global_drift(&x).unwrap()).unwrap();
            let ss = |s: &TimeSeries| s.values().iter().map(|v| v * v).sum::<f64>();
            prop_assert!(ss(&r) <= ss(&rg) * (1.0 + 1e-12) + 1e-9);
        }

        #[test]
        fn add_then_eliminate_is_identity(
            vals in prop::collection::vec(-10.0f64..10.0, 4..40),
            a in -50.0f64..50.0,
            b in -5.0f64..5.0,
        ) {
            let x = TimeSeries::from_values(vals).unwrap();
            let g = PiecewiseLinearDrift::single(1.0, x.len() as f64, a, b).unwrap();
            let back = eliminate_drift(&add_drift(&x, &g).unwrap(), &g).unwrap();
            for (u, v) in back.values().iter().zip(x.values()) {
                prop_assert!((u - v).abs() < 1e-10);
            }
        }
    }
}
