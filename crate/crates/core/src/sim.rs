//! Exact Gaussian process synthesis.
//!
//! Fractional Gaussian noise is drawn by circulant embedding of its
//! autocovariance (Davies–Harte), falling back to a dense Cholesky factor
//! when the embedding is not non-negative definite. Both routes are exact in
//! distribution. The simple Brownian DSI process is built from one Brownian
//! path rescaled by `lambda^{n(H - 1/2)}` on each scale interval
//! `[lambda^{n-1}, lambda^n)`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::series::{PiecewiseLinearDrift, ScalePartition, TimeSeries};

/// Largest `n` for which the O(n^3) Cholesky route is attempted.
pub const CHOLESKY_LIMIT: usize = 4096;

/// Relative tolerance below zero at which an embedding eigenvalue is clamped
/// rather than rejected.
const EIGEN_TOLERANCE: f64 = 1e-8;

/// Deterministic generator for replication `index` under master `seed`.
///
/// Each replication reads its own ChaCha stream, so results do not depend on
/// the order in which replications are evaluated.
pub fn replication_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Autocovariance of fractional Gaussian noise at lag `h`:
/// `(sigma^2 / 2)(|h+1|^{2H} - 2|h|^{2H} + |h-1|^{2H})`.
pub fn fgn_autocovariance(lag: f64, hurst: f64, sigma: f64) -> f64 {
    let h2 = 2.0 * hurst;
    let h = lag.abs();
    0.5 * sigma * sigma * ((h + 1.0).powf(h2) - 2.0 * h.powf(h2) + (h - 1.0).abs().powf(h2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbmSpec {
    pub n: usize,
    pub hurst: f64,
    pub sigma: f64,
    pub seed: u64,
}

impl FbmSpec {
    pub fn new(n: usize, hurst: f64, seed: u64) -> Self {
        Self {
            n,
            hurst,
            sigma: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid("n", format!("need n >= 2, got {}", self.n)));
        }
        if !(self.hurst > 0.0 && self.hurst < 1.0) {
            return Err(Error::invalid(
                "hurst",
                format!("fBm needs 0 < H < 1, got {}", self.hurst),
            ));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid(
                "sigma",
                format!("need sigma > 0, got {}", self.sigma),
            ));
        }
        Ok(())
    }
}

/// Which synthesis route to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Synthesis {
    /// Circulant embedding, Cholesky if the embedding fails.
    #[default]
    Auto,
    Circulant,
    Cholesky,
}

/// The route an [`FgnGenerator`] actually settled on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Circulant,
    Cholesky,
}

enum Engine {
    Circulant {
        /// `sqrt(eigenvalue / m)` of the embedding.
        weights: Vec<f64>,
        fft: Arc<dyn Fft<f64>>,
    },
    Cholesky {
        lower: DMatrix<f64>,
    },
}

/// Reusable fGn sampler for a fixed `(n, H, sigma)`.
///
/// Construction does the expensive part (eigen-decomposition or Cholesky);
/// [`FgnGenerator::sample`] is then O(n log n) or O(n^2).
pub struct FgnGenerator {
    n: usize,
    engine: Engine,
}

impl fmt::Debug for FgnGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FgnGenerator")
            .field("n", &self.n)
            .field("route", &self.route())
            .finish()
    }
}

impl FgnGenerator {
    pub fn new(n: usize, hurst: f64, sigma: f64) -> Result<Self> {
        Self::with_synthesis(n, hurst, sigma, Synthesis::Auto)
    }

    pub fn with_synthesis(n: usize, hurst: f64, sigma: f64, synthesis: Synthesis) -> Result<Self> {
        FbmSpec {
            n,
            hurst,
            sigma,
            seed: 0,
        }
        .validate()?;
        let engine = match synthesis {
            Synthesis::Cholesky => cholesky_engine(n, hurst, sigma)?,
            Synthesis::Circulant | Synthesis::Auto => match circulant_engine(n, hurst, sigma) {
                Ok(engine) => engine,
                Err(Embedding { min, max }) => {
                    if synthesis == Synthesis::Auto && n <= CHOLESKY_LIMIT {
                        cholesky_engine(n, hurst, sigma)?
                    } else {
                        return Err(Error::EmbeddingFailed {
                            min_eigenvalue: min,
                            max_eigenvalue: max,
                            n,
                            limit: CHOLESKY_LIMIT,
                        });
                    }
                }
            },
        };
        Ok(Self { n, engine })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn route(&self) -> Route {
        match self.engine {
            Engine::Circulant { .. } => Route::Circulant,
            Engine::Cholesky { .. } => Route::Cholesky,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match &self.engine {
            Engine::Circulant { weights, fft } => {
                let mut buf: Vec<Complex64> = weights
                    .iter()
                    .map(|w| {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        Complex64::new(w * re, w * im)
                    })
                    .collect();
                fft.process(&mut buf);
                buf[..self.n].iter().map(|c| c.re).collect()
            }
            Engine::Cholesky { lower } => {
                let z = DVector::from_fn(self.n, |_, _| rng.sample::<f64, _>(StandardNormal));
                (lower * z).iter().copied().collect()
            }
        }
    }
}

struct Embedding {
    min: f64,
    max: f64,
}

fn circulant_engine(n: usize, hurst: f64, sigma: f64) -> std::result::Result<Engine, Embedding> {
    // first row of the 2n x 2n circulant: g(0..=n) then g(n-1..=1)
    let m = 2 * n;
    let mut row: Vec<Complex64> = (0..m)
        .map(|j| {
            let lag = if j <= n { j } else { m - j };
            Complex64::new(fgn_autocovariance(lag as f64, hurst, sigma), 0.0)
        })
        .collect();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m);
    fft.process(&mut row);
    let eigen: Vec<f64> = row.iter().map(|c| c.re).collect();
    let max = eigen.iter().cloned().fold(f64::MIN, f64::max);
    let min = eigen.iter().cloned().fold(f64::MAX, f64::min);
    if min < -EIGEN_TOLERANCE * max {
        return Err(Embedding { min, max });
    }
    let weights = eigen
        .iter()
        .map(|&e| (e.max(0.0) / m as f64).sqrt())
        .collect();
    Ok(Engine::Circulant { weights, fft })
}

fn cholesky_engine(n: usize, hurst: f64, sigma: f64) -> Result<Engine> {
    if n > CHOLESKY_LIMIT {
        return Err(Error::invalid(
            "n",
            format!("Cholesky synthesis is capped at n <= {CHOLESKY_LIMIT}, got {n}"),
        ));
    }
    let gamma: Vec<f64> = (0..n)
        .map(|h| fgn_autocovariance(h as f64, hurst, sigma))
        .collect();
    let cov = DMatrix::from_fn(n, n, |i, j| gamma[i.abs_diff(j)]);
    let chol = cov.cholesky().ok_or(Error::CholeskyFailed { n })?;
    Ok(Engine::Cholesky { lower: chol.l() })
}

/// `n` fGn increments for `spec`, reproducible from `spec.seed`.
pub fn generate_fgn(spec: &FbmSpec) -> Result<Vec<f64>> {
    let generator = FgnGenerator::new(spec.n, spec.hurst, spec.sigma)?;
    Ok(generator.sample(&mut replication_rng(spec.seed, 0)))
}

/// fBm at times `1..=n` as the running sum of [`generate_fgn`] (with `B_H(0) = 0`).
pub fn generate_fbm(spec: &FbmSpec) -> Result<TimeSeries> {
    let increments = generate_fgn(spec)?;
    TimeSeries::from_values(cumulative_sum(&increments))
}

pub fn cumulative_sum(x: &[f64]) -> Vec<f64> {
    x.iter()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect()
}

/// Parameters of the simple Brownian DSI process
/// `X(t) = sum_n lambda^{n(H-1/2)} 1_{[lambda^{n-1}, lambda^n)}(t) B(t) + g(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimpleBmDsiSpec {
    pub hurst: f64,
    pub lambda: f64,
    /// Number of scale intervals `M`.
    pub intervals: usize,
    /// Samples per unit time.
    pub mesh: usize,
    pub drift: Option<PiecewiseLinearDrift>,
    pub seed: u64,
}

impl SimpleBmDsiSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.hurst > 0.0 && self.hurst.is_finite()) {
            return Err(Error::invalid(
                "hurst",
                format!("need H > 0, got {}", self.hurst),
            ));
        }
        if !(self.lambda > 1.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(
                "lambda",
                format!("need lambda > 1, got {}", self.lambda),
            ));
        }
        if self.intervals == 0 {
            return Err(Error::invalid(
                "intervals",
                "need at least one scale interval",
            ));
        }
        if self.mesh == 0 {
            return Err(Error::invalid(
                "mesh",
                "need at least one sample per unit time",
            ));
        }
        Ok(())
    }

    /// Breakpoints `1, lambda, ..., lambda^M`.
    pub fn partition(&self) -> Result<ScalePartition> {
        ScalePartition::new(
            (0..=self.intervals)
                .map(|n| self.lambda.powi(n as i32))
                .collect(),
        )
    }

    /// Mesh times `1 + j/mesh` lying in `[1, lambda^M)`.
    pub fn sample_times(&self) -> Vec<f64> {
        let end = self.lambda.powi(self.intervals as i32);
        let raw = (end - 1.0) * self.mesh as f64;
        let count = if (raw - raw.round()).abs() < 1e-9 {
            raw.round()
        } else {
            raw.ceil()
        } as usize;
        (0..count)
            .map(|j| 1.0 + j as f64 / self.mesh as f64)
            .collect()
    }
}

pub fn generate_simple_bm_dsi(spec: &SimpleBmDsiSpec) -> Result<TimeSeries> {
    spec.validate()?;
    let times = spec.sample_times();
    let partition = spec.partition()?;
    let mut rng = replication_rng(spec.seed, 0);
    let step_sd = (1.0 / spec.mesh as f64).sqrt();

    let exponent = spec.hurst - 0.5;
    let mut values = Vec::with_capacity(times.len());
    let mut brownian = 0.0;
    for (j, &t) in times.iter().enumerate() {
        let z: f64 = rng.sample(StandardNormal);
        // B(1) ~ N(0, 1), then N(0, 1/mesh) steps
        brownian += if j == 0 { z } else { step_sd * z };
        let n = partition
            .interval_of(t)
            .expect("mesh times lie inside [1, lambda^M)")
            + 1;
        let scale = spec.lambda.powf(n as f64 * exponent);
        values.push(scale * brownian);
    }
    let series = TimeSeries::new(times, values)?;
    match &spec.drift {
        Some(drift) => add_drift(&series, drift),
        None => Ok(series),
    }
}

/// `x(t) + g(t)` at every sample time.
pub fn add_drift(x: &TimeSeries, drift: &PiecewiseLinearDrift) -> Result<TimeSeries> {
    let values = x
        .times()
        .iter()
        .zip(x.values())
        .map(|(&t, &v)| drift.eval(t).map(|g| v + g))
        .collect::<Result<Vec<_>>>()?;
    Ok(x.with_values(values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn autocovariance_closed_forms() {
        assert!(fgn_autocovariance(1.0, 0.5, 1.0).abs() < 1e-15);
        assert!((fgn_autocovariance(0.0, 0.8, 1.0) - 1.0).abs() < 1e-15);
        let expected = 0.5 * (2f64.powf(1.6) - 2.0);
        assert!((fgn_autocovariance(1.0, 0.8, 1.0) - expected).abs() < 1e-15);
        // frozen: (2^1.6 - 2)/2
        assert!((expected - 0.515_716_566_510_398).abs() < 1e-12);
        assert!((fgn_autocovariance(0.0, 0.3, 2.0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn fgn_is_reproducible() {
        let spec = FbmSpec::new(500, 0.7, 42);
        assert_eq!(generate_fgn(&spec).unwrap(), generate_fgn(&spec).unwrap());
        let other = FbmSpec { seed: 43, ..spec };
        assert_ne!(generate_fgn(&spec).unwrap(), generate_fgn(&other).unwrap());
    }

    #[test]
    fn fbm_is_cumulative_fgn() {
        let spec = FbmSpec::new(64, 0.3, 7);
        let fgn = generate_fgn(&spec).unwrap();
        let fbm = generate_fbm(&spec).unwrap();
        assert_eq!(fbm.values()[0], fgn[0]);
        assert_eq!(fbm.times()[0], 1.0);
        assert_eq!(fbm.times()[63], 64.0);
        let last: f64 = fgn.iter().sum();
        assert!((fbm.values()[63] - last).abs() < 1e-12);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(FbmSpec::new(1, 0.5, 0).validate().is_err());
        assert!(FbmSpec::new(10, 1.0, 0).validate().is_err());
        assert!(FbmSpec::new(10, 0.0, 0).validate().is_err());
        assert!(FbmSpec {
            sigma: 0.0,
            ..FbmSpec::new(10, 0.5, 0)
        }
        .validate()
        .is_err());
    }

    #[test]
    fn routes_and_cholesky_cap() {
        for h in [0.1, 0.5, 0.9] {
            let g = FgnGenerator::new(256, h, 1.0).unwrap();
            assert_eq!(g.route(), Route::Circulant);
        }
        let g = FgnGenerator::with_synthesis(32, 0.7, 1.0, Synthesis::Cholesky).unwrap();
        assert_eq!(g.route(), Route::Cholesky);
        assert_eq!(g.sample(&mut replication_rng(1, 0)).len(), 32);
        assert!(
            FgnGenerator::with_synthesis(CHOLESKY_LIMIT + 1, 0.7, 1.0, Synthesis::Cholesky)
                .is_err()
        );
    }

    #[test]
    fn replication_streams_differ() {
        let g = FgnGenerator::new(16, 0.5, 1.0).unwrap();
        let a = g.sample(&mut replication_rng(9, 0));
        let b = g.sample(&mut replication_rng(9, 1));
        assert_ne!(a, b);
        assert_eq!(a, g.sample(&mut replication_rng(9, 0)));
    }

    #[test]
    fn simple_dsi_mesh_and_unit_scaling() {
        let spec = SimpleBmDsiSpec {
            hurst: 0.5,
            lambda: 2.0,
            intervals: 3,
            mesh: 4,
            drift: None,
            seed: 3,
        };
        let times = spec.sample_times();
        assert_eq!(times.len(), 28);
        assert_eq!(times[0], 1.0);
        assert_eq!(*times.last().unwrap(), 7.75);
        // H = 1/2: X is the raw Brownian path, increments have variance 1/mesh only
        let x = generate_simple_bm_dsi(&spec).unwrap();
        let with_h = generate_simple_bm_dsi(&SimpleBmDsiSpec {
            hurst: 0.9,
            ..spec.clone()
        })
        .unwrap();
        // same Brownian path, first interval scaled by 2^{0.4}
        let factor = 2f64.powf(0.4);
        assert!((with_h.values()[0] - factor * x.values()[0]).abs() < 1e-12);
    }

    #[test]
    fn drift_domain_must_cover_mesh() {
        let spec = SimpleBmDsiSpec {
            hurst: 0.5,
            lambda: 2.0,
            intervals: 2,
            mesh: 4,
            drift: Some(PiecewiseLinearDrift::single(1.0, 3.0, 0.0, 1.0).unwrap()),
            seed: 0,
        };
        assert!(matches!(
            generate_simple_bm_dsi(&spec),
            Err(Error::OutsideDrift { .. })
        ));
    }

    #[test]
    fn add_drift_arithmetic() {
        let x = TimeSeries::from_values(vec![0.0, 1.0, -1.0]).unwrap();
        let zero = PiecewiseLinearDrift::single(1.0, 3.0, 0.0, 0.0).unwrap();
        assert_eq!(add_drift(&x, &zero).unwrap(), x);
        let line = PiecewiseLinearDrift::single(1.0, 3.0, 3.0, 2.0).unwrap();
        assert_eq!(add_drift(&x, &line).unwrap().values(), &[5.0, 8.0, 8.0]);
    }
}
