//! Monte Carlo MSE comparison of the Hurst estimators on exact fBm.
//!
//! Every method sees the same simulated path for a given `(H, replication)`,
//! so MSE differences between methods are paired comparisons. Replications
//! draw from their own RNG stream and are aggregated in replication order,
//! making the table bit-identical for any thread count.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::baselines::{analyse, default_scales, FluctuationMethod};
use crate::error::Error;
use crate::hsssi::{estimate_hsssi_with, HsssiOptions, Reference, MIN_LEN};
use crate::series::{DiffOrder, TimeSeries};
use crate::sim::{cumulative_sum, replication_rng, FgnGenerator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchMethod {
    Fa,
    Dfa,
    Dma,
    Diff1,
    Diff2,
}

impl BenchMethod {
    pub const ALL: [BenchMethod; 5] = [
        BenchMethod::Fa,
        BenchMethod::Dfa,
        BenchMethod::Dma,
        BenchMethod::Diff1,
        BenchMethod::Diff2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchMethod::Fa => "FA",
            BenchMethod::Dfa => "DFA",
            BenchMethod::Dma => "DMA",
            BenchMethod::Diff1 => "diff1",
            BenchMethod::Diff2 => "diff2",
        }
    }
}

impl fmt::Display for BenchMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fa" => Ok(BenchMethod::Fa),
            "dfa" => Ok(BenchMethod::Dfa),
            "dma" => Ok(BenchMethod::Dma),
            "diff1" => Ok(BenchMethod::Diff1),
            "diff2" => Ok(BenchMethod::Diff2),
            other => Err(format!(
                "unknown method `{other}` (expected FA, DFA, DMA, diff1, diff2)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    /// Samples per path.
    pub n: usize,
    pub reps: usize,
    pub hurst_grid: Vec<f64>,
    pub methods: Vec<BenchMethod>,
    pub seed: u64,
    /// Slope of a linear drift added to every fBm path.
    pub drift: Option<f64>,
    /// Global OLS detrending inside `diff1` / `diff2`.
    pub detrend: bool,
    /// Unit-lag term range for `diff1` / `diff2`.
    pub reference: Reference,
}

impl BenchConfig {
    /// The 9 x 5 grid with `H = 0.1, ..., 0.9` and every method.
    pub fn full_grid(n: usize, reps: usize, seed: u64) -> Self {
        Self {
            n,
            reps,
            hurst_grid: (1..=9).map(|i| i as f64 / 10.0).collect(),
            methods: BenchMethod::ALL.to_vec(),
            seed,
            drift: None,
            detrend: true,
            reference: Reference::Matched,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |msg: String| Err(BenchError::InvalidConfig(msg));
        if self.reps < 10 {
            return bad(format!("reps must be >= 10, got {}", self.reps));
        }
        if self.n < MIN_LEN {
            return bad(format!("n must be >= {MIN_LEN}, got {}", self.n));
        }
        if self.hurst_grid.is_empty() {
            return bad("empty Hurst grid".into());
        }
        if let Some(h) = self.hurst_grid.iter().find(|h| !(**h > 0.0 && **h < 1.0)) {
            return bad(format!("Hurst value {h} outside (0, 1)"));
        }
        if self.methods.is_empty() {
            return bad("no methods selected".into());
        }
        if let Some(d) = self.drift {
            if !d.is_finite() {
                return bad("drift must be finite".into());
            }
        }
        let uses_baselines = self
            .methods
            .iter()
            .any(|m| matches!(m, BenchMethod::Fa | BenchMethod::Dfa | BenchMethod::Dma));
        if uses_baselines && default_scales(self.n).len() < 2 {
            return bad(format!(
                "n = {} too small for the FA/DFA/DMA scale grid",
                self.n
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MseRow {
    pub method: BenchMethod,
    pub hurst: f64,
    pub mse: f64,
    pub bias: f64,
    pub variance: f64,
    /// Replications with a valid estimate.
    pub reps: usize,
    /// Replications on which the estimator was degenerate.
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MseTable {
    pub rows: Vec<MseRow>,
}

impl MseTable {
    pub fn get(&self, method: BenchMethod, hurst: f64) -> Option<&MseRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && (r.hurst - hurst).abs() < 1e-12)
    }

    pub fn mse(&self, method: BenchMethod, hurst: f64) -> Option<f64> {
        self.get(method, hurst).map(|r| r.mse)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegenerateCell {
    pub method: BenchMethod,
    pub hurst: f64,
    pub failures: usize,
    pub reps: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BenchError {
    #[error("invalid benchmark config: {0}")]
    InvalidConfig(String),

    #[error("simulation failed at H = {hurst}: {source}")]
    Simulation {
        hurst: f64,
        #[source]
        source: Error,
    },

    #[error("estimators degenerate on more than 1% of replications: {}", describe(.0))]
    Degenerate(Vec<DegenerateCell>),
}

fn describe(cells: &[DegenerateCell]) -> String {
    cells
        .iter()
        .map(|c| format!("{} at H={} ({}/{})", c.method, c.hurst, c.failures, c.reps))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Sum by recursive halving; the result depends only on the order of `xs`.
fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

fn estimate(
    method: BenchMethod,
    path: &[f64],
    increments: &[f64],
    scales: &[usize],
    cfg: &BenchConfig,
) -> Option<f64> {
    let result = match method {
        BenchMethod::Fa => analyse(FluctuationMethod::Fa, increments, scales).map(|c| c.hurst),
        BenchMethod::Dfa => analyse(FluctuationMethod::Dfa, increments, scales).map(|c| c.hurst),
        BenchMethod::Dma => analyse(FluctuationMethod::Dma, increments, scales).map(|c| c.hurst),
        BenchMethod::Diff1 | BenchMethod::Diff2 => {
            let order = if method == BenchMethod::Diff1 {
                DiffOrder::First
            } else {
                DiffOrder::Second
            };
            let opts = HsssiOptions {
                order,
                detrend: cfg.detrend,
                reference: cfg.reference,
            };
            TimeSeries::from_values(path.to_vec())
                .and_then(|x| estimate_hsssi_with(&x, opts))
                .map(|e| e.hurst)
        }
    };
    result.ok().filter(|h| h.is_finite())
}

pub fn run_benchmark(cfg: &BenchConfig) -> Result<MseTable, BenchError> {
    cfg.validate()?;
    let scales = default_scales(cfg.n);
    let mut rows = Vec::with_capacity(cfg.hurst_grid.len() * cfg.methods.len());
    let mut degenerate = Vec::new();

    for &hurst in &cfg.hurst_grid {
        let generator = FgnGenerator::new(cfg.n, hurst, 1.0)
            .map_err(|source| BenchError::Simulation { hurst, source })?;
        let estimates: Vec<Vec<Option<f64>>> = (0..cfg.reps)
            .into_par_iter()
            .map(|rep| {
                let mut rng = replication_rng(cfg.seed, rep as u64);
                let mut increments = generator.sample(&mut rng);
                if let Some(slope) = cfg.drift {
                    increments.iter_mut().for_each(|v| *v += slope);
                }
                let path = cumulative_sum(&increments);
                cfg.methods
                    .iter()
                    .map(|&m| estimate(m, &path, &increments, &scales, cfg))
                    .collect()
            })
            .collect();

        for (j, &method) in cfg.methods.iter().enumerate() {
            let valid: Vec<f64> = estimates.iter().filter_map(|row| row[j]).collect();
            let failures = cfg.reps - valid.len();
            if failures * 100 > cfg.reps || valid.is_empty() {
                degenerate.push(DegenerateCell {
                    method,
                    hurst,
                    failures,
                    reps: cfg.reps,
                });
                continue;
            }
            let count = valid.len() as f64;
            let mean = pairwise_sum(&valid) / count;
            let centred: Vec<f64> = valid.iter().map(|h| (h - mean).powi(2)).collect();
            let variance = pairwise_sum(&centred) / count;
            let bias = mean - hurst;
            rows.push(MseRow {
                method,
                hurst,
                mse: bias * bias + variance,
                bias,
                variance,
                reps: valid.len(),
                failures,
            });
        }
    }

    if degenerate.is_empty() {
        Ok(MseTable { rows })
    } else {
        Err(BenchError::Degenerate(degenerate))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in BenchMethod::ALL {
            assert_eq!(m.name().parse::<BenchMethod>().unwrap(), m);
        }
        assert!("rs".parse::<BenchMethod>().is_err());
    }

    #[test]
    fn config_validation() {
        let ok = BenchConfig::full_grid(256, 10, 1);
        assert!(ok.validate().is_ok());
        assert!(BenchConfig {
            reps: 9,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(BenchConfig {
            n: 59,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(BenchConfig {
            hurst_grid: vec![1.0],
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(BenchConfig {
            methods: vec![],
            ..ok
        }
        .validate()
        .is_err());
    }

    #[test]
    fn pairwise_sum_matches_plain_sum() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 499_500.0);
    }

    #[test]
    fn small_table_shape_and_identity() {
        let cfg = BenchConfig {
            hurst_grid: vec![0.3, 0.7],
            ..BenchConfig::full_grid(256, 12, 5)
        };
        let table = run_benchmark(&cfg).unwrap();
        assert_eq!(table.rows.len(), 10);
        for row in &table.rows {
            assert_eq!(row.reps + row.failures, 12);
            let lhs = row.mse;
            let rhs = row.bias * row.bias + row.variance;
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.max(1e-300));
            assert!(row.mse >= 0.0);
        }
        assert_eq!(run_benchmark(&cfg).unwrap(), table);
    }
}
