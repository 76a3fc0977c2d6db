//! Seasonal Gaussian processes.
//!
//! A seasonal Gaussian process (sGP) solves `g'' + α² g = σ ξ` with
//! `g(0) = g'(0) = 0`, where `ξ` is white noise. Its sample paths are
//! quasi-periodic with period `2π/α`, and the amplitude may drift.
//!
//! - [`kernel`]: closed-form covariance and predictive standard deviation.
//! - [`statespace`]: the exact Markov representation of `(g, g')` with a sparse
//!   precision matrix, sampling and conditioning.
//! - [`fem`]: finite-element approximations with cubic and seasonal B-splines.
//! - [`prior`]: exponential priors set through `σ(h)`.
//! - [`inference`]: conjugate fits on a hyperparameter grid, forecasts.
//! - [`io`] and [`cli`]: data files, configuration and the `sgp` binary.
//! - [`oracle`]: slow reference computations used to validate the above.
//!
//! ```
//! use sgp::kernel::{covariance, SgpParams};
//! use sgp::statespace::{assemble_precision, LocationGrid, StateSpaceChain};
//!
//! let params = SgpParams::new(std::f64::consts::TAU, 1.0)?;
//! let grid = LocationGrid::new(vec![0.5, 1.2, 2.0])?;
//! let chain = StateSpaceChain::new(params, grid);
//! let cov = assemble_precision(&chain)?.g_covariance()?;
//! assert!((cov[(0, 2)] - covariance(&params, 0.5, 2.0)?).abs() < 1e-10);
//! # Ok::<(), sgp::Error>(())
//! ```

pub mod cli;
pub mod error;
pub mod fem;
pub mod inference;
pub mod io;
pub mod kernel;
pub mod linalg;
pub mod oracle;
pub mod prior;
pub mod statespace;

pub use error::{Error, Result};
