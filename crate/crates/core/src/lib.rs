//! Generalized fiducial inference toolkit.
//!
//! * [`gfd`]: grid densities, quantiles, equal-tailed intervals, total variation,
//!   the l2 D-operator and the linear-regression Jacobian.
//! * [`triangular`]: fiducial, modified fiducial and Bayesian distributions for
//!   the mode of the triangular law on `(0, 1)`.
//! * [`spline`]: free-knot truncated-power splines, their fiducial Jacobian,
//!   Fisher information and a Metropolis sampler for the fiducial distribution.
//! * [`bvm`]: the limiting Gaussian of a Bernstein-von Mises statement and the
//!   total-variation discrepancy against it.
//! * [`sim`]: the coverage study harness, reference values and CSV/JSON output.

pub mod bvm;
pub mod error;
pub mod gfd;
pub mod rng;
pub mod sim;
pub mod spline;
pub mod triangular;

pub use error::{Error, Result};
pub use gfd::{Grid, GridDensity, Interval, MixedDensity, Univariate};
