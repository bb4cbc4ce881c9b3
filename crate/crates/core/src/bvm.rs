//! Limiting Gaussian of a Bernstein-von Mises statement and the total
//! variation discrepancy between a computed distribution and that limit.
//!
//! In the local parameter `h = sqrt(n) (theta - theta0)` the limit is
//! `N(Delta_n, I^{-1})` with `Delta_n = n^{-1/2} sum_i I^{-1} score(y_i)`. On
//! the original scale it is `N(theta0 + Delta_n / sqrt(n), I^{-1} / n)`.
//! Grid versions are restricted to the grid and renormalised; the discarded
//! mass is available from [`truncation_mass`].

use nalgebra::{DMatrix, DVector};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::gfd::{tv_distance, Grid, GridDensity};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Local,
    Original,
}

/// The affine map `theta <-> h = sqrt(n) (theta - theta0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalScale {
    theta0: DVector<f64>,
    n: usize,
}

impl LocalScale {
    pub fn new(theta0: DVector<f64>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSample("local scale needs n >= 1".into()));
        }
        Ok(Self { theta0, n })
    }

    pub fn theta0(&self) -> &DVector<f64> {
        &self.theta0
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn root_n(&self) -> f64 {
        (self.n as f64).sqrt()
    }

    pub fn to_local(&self, theta: &DVector<f64>) -> DVector<f64> {
        (theta - &self.theta0) * self.root_n()
    }

    pub fn from_local(&self, h: &DVector<f64>) -> DVector<f64> {
        &self.theta0 + h / self.root_n()
    }

    /// Image of a 1-D grid under the local map.
    pub fn local_grid(&self, grid: &Grid) -> Result<Grid> {
        let t0 = self.scalar_theta0()?;
        let r = self.root_n();
        Grid::new(r * (grid.lo() - t0), r * (grid.hi() - t0), grid.len())
    }

    /// Preimage of a 1-D local grid.
    pub fn original_grid(&self, grid: &Grid) -> Result<Grid> {
        let t0 = self.scalar_theta0()?;
        let r = self.root_n();
        Grid::new(t0 + grid.lo() / r, t0 + grid.hi() / r, grid.len())
    }

    fn scalar_theta0(&self) -> Result<f64> {
        match self.theta0.len() {
            1 => Ok(self.theta0[0]),
            d => Err(Error::DimensionUnsupported(d)),
        }
    }
}

/// `sqrt(n)^{-1} sum_i I^{-1} score_i` for an `n x d` matrix of per-observation scores.
pub fn delta_n(scores: &DMatrix<f64>, info: &DMatrix<f64>) -> Result<DVector<f64>> {
    let d = info.nrows();
    if info.ncols() != d || scores.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "scores are {}x{}, information is {}x{}",
            scores.nrows(),
            scores.ncols(),
            info.nrows(),
            info.ncols()
        )));
    }
    let n = scores.nrows();
    if n == 0 {
        return Err(Error::InvalidSample("no scores".into()));
    }
    let chol = info.clone().cholesky().ok_or(Error::SingularInformation)?;
    let total: DVector<f64> = scores.row_sum().transpose();
    Ok(chol.solve(&total) / (n as f64).sqrt())
}

/// `N(Delta_n, I^{-1})` in the local parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianLimit {
    center: DVector<f64>,
    covariance: DMatrix<f64>,
    theta0: DVector<f64>,
    n: usize,
}

impl GaussianLimit {
    pub fn new(
        center: DVector<f64>,
        covariance: DMatrix<f64>,
        theta0: DVector<f64>,
        n: usize,
    ) -> Result<Self> {
        let d = center.len();
        if covariance.shape() != (d, d) || theta0.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "center has {d} entries, covariance is {:?}, theta0 has {}",
                covariance.shape(),
                theta0.len()
            )));
        }
        if n == 0 {
            return Err(Error::InvalidSample("limit needs n >= 1".into()));
        }
        let asym = (&covariance - covariance.transpose()).amax();
        if asym > 1e-12 * covariance.amax().max(1.0) || covariance.clone().cholesky().is_none() {
            return Err(Error::SingularInformation);
        }
        Ok(Self { center, covariance, theta0, n })
    }

    /// Builds the limit from per-observation scores and the Fisher information at `theta0`.
    pub fn from_scores(scores: &DMatrix<f64>, info: &DMatrix<f64>, theta0: DVector<f64>) -> Result<Self> {
        let center = delta_n(scores, info)?;
        let covariance = info.clone().try_inverse().ok_or(Error::SingularInformation)?;
        // Symmetrise away inversion round-off.
        let covariance = (&covariance + covariance.transpose()) * 0.5;
        Self::new(center, covariance, theta0, scores.nrows())
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn theta0(&self) -> &DVector<f64> {
        &self.theta0
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn local_scale(&self) -> LocalScale {
        LocalScale { theta0: self.theta0.clone(), n: self.n }
    }

    pub fn original_mean(&self) -> DVector<f64> {
        self.local_scale().from_local(&self.center)
    }

    pub fn original_covariance(&self) -> DMatrix<f64> {
        &self.covariance / self.n as f64
    }

    fn moments_1d(&self, scale: Scale) -> Result<(f64, f64)> {
        if self.dim() != 1 {
            return Err(Error::DimensionUnsupported(self.dim()));
        }
        Ok(match scale {
            Scale::Local => (self.center[0], self.covariance[(0, 0)].sqrt()),
            Scale::Original => {
                (self.original_mean()[0], self.original_covariance()[(0, 0)].sqrt())
            }
        })
    }
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn std_normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// Normal mass of `[a, b]`, using the upper tail when both ends are positive
/// so far-right cells do not cancel to zero.
fn normal_mass(a: f64, b: f64, mean: f64, sd: f64) -> f64 {
    let (za, zb) = ((a - mean) / sd, (b - mean) / sd);
    if za > 0.0 {
        std_normal_sf(za) - std_normal_sf(zb)
    } else {
        std_normal_cdf(zb) - std_normal_cdf(za)
    }
}

/// The 1-D limit on `grid` (interpreted in `scale`), restricted and renormalised.
pub fn gaussian_on_grid(lim: &GaussianLimit, grid: &Grid, scale: Scale) -> Result<GridDensity> {
    let (mean, sd) = lim.moments_1d(scale)?;
    let weights = (0..grid.len())
        .map(|i| normal_mass(grid.edge(i), grid.edge(i + 1), mean, sd).max(0.0))
        .collect();
    GridDensity::from_weights(*grid, weights)
}

/// Limit mass falling outside `grid`.
pub fn truncation_mass(lim: &GaussianLimit, grid: &Grid, scale: Scale) -> Result<f64> {
    let (mean, sd) = lim.moments_1d(scale)?;
    Ok(std_normal_cdf((grid.lo() - mean) / sd) + std_normal_sf((grid.hi() - mean) / sd))
}

/// Total variation between an original-scale grid density and the limit.
pub fn bvm_tv(gfd: &GridDensity, lim: &GaussianLimit) -> Result<f64> {
    bvm_tv_in(gfd, lim, Scale::Original)
}

/// As [`bvm_tv`] with `gfd` expressed in the given scale.
pub fn bvm_tv_in(gfd: &GridDensity, lim: &GaussianLimit, scale: Scale) -> Result<f64> {
    let gaussian = gaussian_on_grid(lim, gfd.grid(), scale)?;
    tv_distance(gfd, &gaussian)
}

/// Carries an original-scale density to the local scale (cell masses are unchanged).
pub fn to_local_density(d: &GridDensity, s: &LocalScale) -> Result<GridDensity> {
    d.with_grid(s.local_grid(d.grid())?)
}
