//! Strided variance-ratio Hurst estimator for self-similar processes with
//! stationary increments.
//!
//! For stride `k`, the order-`r` differences of the subsampled series
//! `V_i = Z_{ik}` are distributed as `k^H` times the unit-lag differences, so
//! `S^2_{r,k,2} / S^2_{r,k,1}` estimates `k^{2H}`. The per-stride estimates
//! `log(ratio) / (2 log k)` for `k = 2..K*` are averaged.

use crate::detrend::{eliminate_drift, fit_global_drift};
use crate::error::{Error, Result};
use crate::series::{
    difference, max_abs, sample_variance, snap_roundoff, subsample, DiffOrder, TimeSeries,
};

/// Smallest series length for which `K* >= 2`.
pub const MIN_LEN: usize = 60;

/// Range of unit-lag differences entering `S^2_{r,k,1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reference {
    /// The first `floor(N/k) - r` differences, matching the strided term count.
    #[default]
    Matched,
    /// All `N - r` differences.
    AllTerms,
}

/// `K* = min(20, floor(N / 30))`.
pub fn kstar(n: usize) -> Result<usize> {
    if n < MIN_LEN {
        return Err(Error::TooShort {
            needed: MIN_LEN,
            got: n,
        });
    }
    Ok((n / 30).min(20))
}

/// `(S^2_{r,k,2}, S^2_{r,k,1})` for stride `k`.
pub fn variance_ratio_pair(z: &[f64], k: usize, order: DiffOrder) -> Result<(f64, f64)> {
    variance_ratio_pair_with(z, k, order, Reference::Matched)
}

pub fn variance_ratio_pair_with(
    z: &[f64],
    k: usize,
    order: DiffOrder,
    reference: Reference,
) -> Result<(f64, f64)> {
    let r = order.get();
    let strided = subsample(z, k)?;
    let terms = strided.len().saturating_sub(r);
    if terms < 2 {
        return Err(Error::TooShort {
            needed: k * (r + 2),
            got: z.len(),
        });
    }
    let coarse = difference(&strided, order)?;
    let fine = match reference {
        Reference::Matched => difference(&z[..terms + r], order)?,
        Reference::AllTerms => difference(z, order)?,
    };
    let scale = max_abs(z);
    let s2 = snap_roundoff(sample_variance(&coarse)?, scale);
    let s1 = snap_roundoff(sample_variance(&fine)?, scale);
    if s1.is_nan() || s2.is_nan() || s1 <= 0.0 || s2 <= 0.0 {
        return Err(Error::zero_variance(format!("stride k = {k}")));
    }
    Ok((s2, s1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HsssiEstimate {
    /// `Ĥ'_k` for `k = 2..=K*`.
    pub per_k_hurst: Vec<f64>,
    /// `S^2_{r,k,2} / S^2_{r,k,1}` for `k = 2..=K*`.
    pub ratios: Vec<f64>,
    pub hurst: f64,
    pub k_star: usize,
    pub order: DiffOrder,
}

impl HsssiEstimate {
    /// Strides matching `per_k_hurst` and `ratios`.
    pub fn strides(&self) -> impl Iterator<Item = usize> {
        2..=self.k_star
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HsssiOptions {
    pub order: DiffOrder,
    /// Remove a global least-squares line first.
    pub detrend: bool,
    pub reference: Reference,
}

impl HsssiOptions {
    pub fn new(order: DiffOrder) -> Self {
        Self {
            order,
            detrend: true,
            reference: Reference::Matched,
        }
    }
}

pub fn estimate_hsssi(x: &TimeSeries, order: DiffOrder, detrend: bool) -> Result<HsssiEstimate> {
    estimate_hsssi_with(
        x,
        HsssiOptions {
            detrend,
            ..HsssiOptions::new(order)
        },
    )
}

pub fn estimate_hsssi_with(x: &TimeSeries, opts: HsssiOptions) -> Result<HsssiEstimate> {
    let k_star = kstar(x.len())?;
    let z = if opts.detrend {
        eliminate_drift(x, &fit_global_drift(x)?)?
    } else {
        x.clone()
    };
    estimate_from_values(z.values(), k_star, opts.order, opts.reference)
}

/// The estimator on equally spaced values, without detrending.
pub fn estimate_from_values(
    z: &[f64],
    k_star: usize,
    order: DiffOrder,
    reference: Reference,
) -> Result<HsssiEstimate> {
    if k_star < 2 {
        return Err(Error::invalid("K*", format!("need K* >= 2, got {k_star}")));
    }
    let ratios = (2..=k_star)
        .map(|k| variance_ratio_pair_with(z, k, order, reference).map(|(s2, s1)| s2 / s1))
        .collect::<Result<Vec<_>>>()?;
    let per_k_hurst: Vec<f64> = ratios
        .iter()
        .zip(2..=k_star)
        .map(|(ratio, k)| ratio.ln() / (2.0 * (k as f64).ln()))
        .collect();
    let hurst = per_k_hurst.iter().sum::<f64>() / per_k_hurst.len() as f64;
    Ok(HsssiEstimate {
        per_k_hurst,
        ratios,
        hurst,
        k_star,
        order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kstar_rule() {
        assert_eq!(kstar(10_000).unwrap(), 20);
        assert_eq!(kstar(300).unwrap(), 10);
        assert_eq!(kstar(60).unwrap(), 2);
        assert_eq!(kstar(89).unwrap(), 2);
        assert!(kstar(59).is_err());
    }

    #[test]
    fn squares_give_k_to_the_fourth() {
        let z: Vec<f64> = (1..=500).map(|j| (j * j) as f64).collect();
        for k in [2, 3, 7, 16] {
            let (s2, s1) = variance_ratio_pair(&z, k, DiffOrder::First).unwrap();
            let want = (k as f64).powi(4);
            assert!((s2 / s1 - want).abs() < 1e-9 * want);
        }
        let x = TimeSeries::from_values(z).unwrap();
        let est = estimate_hsssi(&x, DiffOrder::First, false).unwrap();
        assert_eq!(est.k_star, 16);
        assert!(est.per_k_hurst.iter().all(|h| (h - 2.0).abs() < 1e-10));
        assert!((est.hurst - 2.0).abs() < 1e-10);
    }

    #[test]
    fn constant_is_degenerate() {
        let z = vec![3.0; 100];
        assert!(matches!(
            variance_ratio_pair(&z, 2, DiffOrder::First),
            Err(Error::ZeroVariance { .. })
        ));
        // quadratic: second differences constant
        let q: Vec<f64> = (0..100).map(|j| (j * j) as f64).collect();
        assert!(variance_ratio_pair(&q, 3, DiffOrder::Second).is_err());
    }

    #[test]
    fn too_few_terms() {
        let z: Vec<f64> = (0..10).map(|j| (j as f64).sin()).collect();
        assert!(variance_ratio_pair(&z, 4, DiffOrder::Second).is_err());
        assert!(variance_ratio_pair(&z, 3, DiffOrder::First).is_ok());
    }

    #[test]
    fn mean_of_per_k_estimates() {
        let z: Vec<f64> = (0..300).map(|j| ((j * 37 % 101) as f64).sqrt()).collect();
        let est = estimate_from_values(&z, 10, DiffOrder::Second, Reference::Matched).unwrap();
        let sum: f64 = est
            .ratios
            .iter()
            .zip(est.strides())
            .map(|(r, k)| r.ln() / (k as f64).ln())
            .sum();
        // H' = (1 / (2(K* - 1))) sum log(ratio_k) / log k
        assert!((est.hurst - sum / (2.0 * 9.0)).abs() < 1e-14);
    }
}
