//! Scale-interval detection, drift elimination and Hurst estimation for
//! discrete scale invariant (DSI) and self-similar time series.
//!
//! The crate is organised bottom-up:
//!
//! - [`series`]: time series containers and elementary numerics
//!   (differencing, subsampling, sample variance, least-squares lines).
//! - [`sim`]: exact fractional Gaussian noise / fractional Brownian motion
//!   synthesis and the simple Brownian DSI process with drift.
//! - [`scalegrid`]: scale-interval detection, the scale estimator and the
//!   geometric / equally spaced sampling grids.
//! - [`detrend`]: global and piecewise linear drift fitting and removal.
//! - [`dsi`]: the per-scale-interval variance ratio estimator.
//! - [`hsssi`]: the strided variance ratio estimator for self-similar
//!   processes with stationary increments (`diff1` / `diff2`).
//! - [`baselines`]: FA, DFA and DMA fluctuation analyses.
//! - [`bench`]: Monte Carlo MSE harness comparing all of the above.

pub mod baselines;
pub mod bench;
pub mod detrend;
pub mod dsi;
mod error;
pub mod hsssi;
pub mod scalegrid;
pub mod series;
pub mod sim;

pub use error::{Error, Result};
pub use series::{DiffOrder, DriftSegment, PiecewiseLinearDrift, ScalePartition, TimeSeries};
