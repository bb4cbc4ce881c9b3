//! Fiducial and Bayesian inference for the mode of the triangular law on `(0, 1)`.
//!
//! Density `f(y, theta) = 2y/theta` on `(0, theta]` and `(2 - 2y)/(1 - theta)` on
//! `(theta, 1)`. Data are generated by inverting the CDF, `Y = G(U, theta)`, and
//! the fiducial Jacobian is the root mean square of `dG/dtheta` at the
//! observations:
//!
//! ```text
//! J(y, theta)^2 = (1/n) sum_{y_i <= theta} (y_i / (2 theta))^2
//!               + (1/n) sum_{y_i >  theta} ((1 - y_i) / (2 (1 - theta)))^2
//! ```
//!
//! Grid evaluation sorts the sample once and sweeps the grid with prefix sums,
//! so a whole density costs `O(n log n + m)` rather than `O(n m)`.

use nalgebra::{DMatrix, DVector};
use rand::RngCore;

use crate::bvm::GaussianLimit;
use crate::error::{Error, Result};
use crate::gfd::{Atom, Grid, GridDensity, MixedDensity};
use crate::rng::open_unit;

/// Mode of the triangular density, strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct TriangularParam(f64);

impl TriangularParam {
    pub fn new(theta: f64) -> Result<Self> {
        if theta > 0.0 && theta < 1.0 {
            Ok(Self(theta))
        } else {
            Err(Error::out_of_domain("theta", theta))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

fn check_observation(y: f64) -> Result<()> {
    if y > 0.0 && y < 1.0 {
        Ok(())
    } else {
        Err(Error::out_of_domain("y", y))
    }
}

pub fn pdf(y: f64, theta: TriangularParam) -> Result<f64> {
    check_observation(y)?;
    let t = theta.0;
    Ok(if y <= t { 2.0 * y / t } else { (2.0 - 2.0 * y) / (1.0 - t) })
}

/// CDF, clamped to 0 below the support and 1 above it.
pub fn cdf(y: f64, theta: TriangularParam) -> f64 {
    let t = theta.0;
    if y <= 0.0 {
        0.0
    } else if y >= 1.0 {
        1.0
    } else if y <= t {
        y * y / t
    } else {
        1.0 - (1.0 - y) * (1.0 - y) / (1.0 - t)
    }
}

/// Data-generating algorithm: the inverse CDF evaluated at `u`.
pub fn dga(u: f64, theta: TriangularParam) -> f64 {
    let t = theta.0;
    if u <= t {
        (u * t).sqrt()
    } else {
        1.0 - ((1.0 - u) * (1.0 - t)).sqrt()
    }
}

/// Score `d/dtheta log f(y, theta)`, with the left piece closed at `theta`.
pub fn score(y: f64, theta: TriangularParam) -> Result<f64> {
    check_observation(y)?;
    let t = theta.0;
    Ok(if y <= t { -1.0 / t } else { 1.0 / (1.0 - t) })
}

/// Fisher information `1 / (theta (1 - theta))`.
pub fn fisher_info(theta: TriangularParam) -> f64 {
    let t = theta.0;
    1.0 / (t * (1.0 - t))
}

/// Solution set of `y = G(u, theta)` in `theta` for a single observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InverseImage {
    Empty,
    Value(f64),
    AtZero,
    AtOne,
}

/// Inverse image of the DGA for one observation. The modified map sends the
/// two empty branches to the boundary points instead.
pub fn inverse_image(y: f64, u: f64, modified: bool) -> Result<InverseImage> {
    check_observation(y)?;
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::out_of_domain("u", u));
    }
    let lower = y * y;
    let upper = 1.0 - (1.0 - y) * (1.0 - y);
    let image = if u < lower {
        if modified { InverseImage::AtOne } else { InverseImage::Empty }
    } else if u > upper {
        if modified { InverseImage::AtZero } else { InverseImage::Empty }
    } else {
        let value = if u < y { lower / u } else { 1.0 - (1.0 - y) * (1.0 - y) / (1.0 - u) };
        // Branch boundaries land exactly on 0 or 1 (measure zero).
        match (modified, value) {
            (true, v) if v >= 1.0 => InverseImage::AtOne,
            (true, v) if v <= 0.0 => InverseImage::AtZero,
            (_, v) => InverseImage::Value(v),
        }
    };
    Ok(image)
}

/// Observations from the triangular model, with sorted prefix tables for grid sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangularSample {
    y: Vec<f64>,
    sorted: Vec<f64>,
    // sums over sorted[..k]
    log_y_prefix: Vec<f64>,
    sq_prefix: Vec<f64>,
    // sums over sorted[k..]
    log_1m_suffix: Vec<f64>,
    sq_1m_suffix: Vec<f64>,
}

impl TriangularSample {
    pub fn new(y: Vec<f64>) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::InvalidSample("need at least one observation".into()));
        }
        for &v in &y {
            check_observation(v)?;
        }
        let mut sorted = y.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let mut log_y_prefix = Vec::with_capacity(n + 1);
        let mut sq_prefix = Vec::with_capacity(n + 1);
        let (mut ly, mut sq) = (0.0, 0.0);
        log_y_prefix.push(0.0);
        sq_prefix.push(0.0);
        for &v in &sorted {
            ly += v.ln();
            sq += v * v;
            log_y_prefix.push(ly);
            sq_prefix.push(sq);
        }
        let mut log_1m_suffix = vec![0.0; n + 1];
        let mut sq_1m_suffix = vec![0.0; n + 1];
        for k in (0..n).rev() {
            let w = 1.0 - sorted[k];
            log_1m_suffix[k] = log_1m_suffix[k + 1] + w.ln();
            sq_1m_suffix[k] = sq_1m_suffix[k + 1] + w * w;
        }
        Ok(Self { y, sorted, log_y_prefix, sq_prefix, log_1m_suffix, sq_1m_suffix })
    }

    /// `n` draws `G(U_i, theta)` with `U_i` uniform on `(0, 1)`.
    pub fn simulate<R: RngCore + ?Sized>(theta: TriangularParam, n: usize, rng: &mut R) -> Result<Self> {
        let y = (0..n).map(|_| dga(open_unit(rng), theta)).collect();
        Self::new(y)
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// `min_i y_i^2`, the mass the modified GFD puts on 1.
    pub fn min_sq(&self) -> f64 {
        self.sorted[0] * self.sorted[0]
    }

    /// `min_i (1 - y_i)^2`, the mass the modified GFD puts on 0.
    pub fn min_sq_complement(&self) -> f64 {
        let w = 1.0 - self.sorted[self.sorted.len() - 1];
        w * w
    }
}

pub fn log_likelihood(sample: &TriangularSample, theta: TriangularParam) -> f64 {
    sample.y.iter().map(|&y| pdf(y, theta).expect("validated sample").ln()).sum()
}

/// Fiducial Jacobian, evaluated term by term.
pub fn jacobian(sample: &TriangularSample, theta: TriangularParam) -> f64 {
    let t = theta.0;
    let mean_sq = sample
        .y
        .iter()
        .map(|&y| if y <= t { (y / (2.0 * t)).powi(2) } else { ((1.0 - y) / (2.0 * (1.0 - t))).powi(2) })
        .sum::<f64>()
        / sample.len() as f64;
    mean_sq.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prior {
    Flat,
    /// `(theta (1 - theta))^{-1/2}`, i.e. Beta(1/2, 1/2). Each cell carries
    /// its exact Beta(1/2, 1/2) mass since the density is unbounded at 0 and 1.
    Jeffreys,
}

/// Grid-dependent tables shared by every density on a fixed grid.
#[derive(Debug, Clone)]
pub struct TriangularGrid {
    grid: Grid,
    points: Vec<f64>,
    ln_theta: Vec<f64>,
    ln_1m_theta: Vec<f64>,
    inv_4sq: Vec<f64>,
    inv_4sq_1m: Vec<f64>,
    ln_jeffreys: Vec<f64>,
}

fn arcsine_cdf(x: f64) -> f64 {
    std::f64::consts::FRAC_2_PI * x.sqrt().asin()
}

impl TriangularGrid {
    pub fn new(grid: Grid) -> Result<Self> {
        if grid.lo() < 0.0 || grid.hi() > 1.0 {
            return Err(Error::InvalidGrid(format!(
                "triangular parameter grid must lie in [0, 1], got [{}, {}]",
                grid.lo(),
                grid.hi()
            )));
        }
        let points: Vec<f64> = grid.points().collect();
        Ok(Self {
            grid,
            ln_theta: points.iter().map(|t| t.ln()).collect(),
            ln_1m_theta: points.iter().map(|t| (1.0 - t).ln()).collect(),
            inv_4sq: points.iter().map(|t| 0.25 / (t * t)).collect(),
            inv_4sq_1m: points.iter().map(|t| 0.25 / ((1.0 - t) * (1.0 - t))).collect(),
            ln_jeffreys: (0..grid.len())
                .map(|i| (arcsine_cdf(grid.edge(i + 1)) - arcsine_cdf(grid.edge(i))).ln())
                .collect(),
            points,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Calls `f(i, log_likelihood, jacobian_squared)` for every grid point.
    fn sweep(&self, sample: &TriangularSample, mut f: impl FnMut(usize, f64, f64)) {
        let n = sample.sorted.len();
        let nf = n as f64;
        let base = nf * std::f64::consts::LN_2;
        let mut k = 0;
        for (i, &t) in self.points.iter().enumerate() {
            while k < n && sample.sorted[k] <= t {
                k += 1;
            }
            let kf = k as f64;
            let loglik = base + sample.log_y_prefix[k] + sample.log_1m_suffix[k]
                - kf * self.ln_theta[i]
                - (nf - kf) * self.ln_1m_theta[i];
            let jac_sq = (sample.sq_prefix[k] * self.inv_4sq[i]
                + sample.sq_1m_suffix[k] * self.inv_4sq_1m[i])
                / nf;
            f(i, loglik, jac_sq);
        }
    }

    pub fn log_likelihood(&self, sample: &TriangularSample) -> Vec<f64> {
        let mut out = vec![0.0; self.points.len()];
        self.sweep(sample, |i, ll, _| out[i] = ll);
        out
    }

    pub fn log_jacobian(&self, sample: &TriangularSample) -> Vec<f64> {
        let mut out = vec![0.0; self.points.len()];
        self.sweep(sample, |i, _, j2| out[i] = 0.5 * j2.ln());
        out
    }

    /// Fiducial density `f(y, theta) J(y, theta)`, normalised on the grid.
    pub fn gfd(&self, sample: &TriangularSample) -> Result<GridDensity> {
        let mut logs = vec![0.0; self.points.len()];
        self.sweep(sample, |i, ll, j2| logs[i] = ll + 0.5 * j2.ln());
        GridDensity::normalize(self.grid, &logs)
    }

    /// Fiducial density with atoms `min (1 - y_i)^2` at 0 and `min y_i^2` at 1.
    pub fn modified_gfd(&self, sample: &TriangularSample) -> Result<MixedDensity> {
        let continuous = self.gfd(sample)?;
        let at_zero = sample.min_sq_complement();
        let at_one = sample.min_sq();
        let weight = 1.0 - at_zero - at_one;
        MixedDensity::new(
            continuous,
            weight,
            vec![
                Atom { location: self.grid.lo(), mass: at_zero },
                Atom { location: self.grid.hi(), mass: at_one },
            ],
        )
    }

    fn log_prior(&self, prior: Prior, i: usize) -> f64 {
        match prior {
            Prior::Flat => 0.0,
            Prior::Jeffreys => self.ln_jeffreys[i],
        }
    }

    /// The prior itself, i.e. the posterior of an empty sample.
    pub fn prior(&self, prior: Prior) -> Result<GridDensity> {
        let logs: Vec<f64> = (0..self.points.len()).map(|i| self.log_prior(prior, i)).collect();
        GridDensity::normalize(self.grid, &logs)
    }

    pub fn bayes_posterior(&self, sample: &TriangularSample, prior: Prior) -> Result<GridDensity> {
        let mut logs = vec![0.0; self.points.len()];
        self.sweep(sample, |i, ll, _| logs[i] = ll + self.log_prior(prior, i));
        GridDensity::normalize(self.grid, &logs)
    }
}

pub fn gfd(sample: &TriangularSample, grid: &Grid) -> Result<GridDensity> {
    TriangularGrid::new(*grid)?.gfd(sample)
}

pub fn modified_gfd(sample: &TriangularSample, grid: &Grid) -> Result<MixedDensity> {
    TriangularGrid::new(*grid)?.modified_gfd(sample)
}

pub fn bayes_posterior(sample: &TriangularSample, prior: Prior, grid: &Grid) -> Result<GridDensity> {
    TriangularGrid::new(*grid)?.bayes_posterior(sample, prior)
}

/// `N(Delta_n, I^{-1})` for the triangular model at `theta0`.
pub fn gaussian_limit(sample: &TriangularSample, theta0: TriangularParam) -> Result<GaussianLimit> {
    let scores: Vec<f64> = sample.y.iter().map(|&y| score(y, theta0)).collect::<Result<_>>()?;
    let scores = DMatrix::from_column_slice(scores.len(), 1, &scores);
    let info = DMatrix::from_element(1, 1, fisher_info(theta0));
    GaussianLimit::from_scores(&scores, &info, DVector::from_element(1, theta0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gfd::{equal_tailed_interval, tv_distance};
    use crate::rng::substream;

    fn p(t: f64) -> TriangularParam {
        TriangularParam::new(t).unwrap()
    }

    fn sample(y: &[f64]) -> TriangularSample {
        TriangularSample::new(y.to_vec()).unwrap()
    }

    #[test]
    fn param_and_sample_validation() {
        assert!(TriangularParam::new(0.0).is_err());
        assert!(TriangularParam::new(1.0).is_err());
        assert!(TriangularSample::new(vec![]).is_err());
        assert!(TriangularSample::new(vec![0.5, 1.0]).is_err());
    }

    #[test]
    fn pdf_examples() {
        assert!((pdf(0.25, p(0.5)).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(pdf(0.5, p(0.5)).unwrap(), 2.0);
        assert_eq!(pdf(0.3, p(0.3)).unwrap(), 2.0);
        assert!(pdf(0.0, p(0.5)).is_err());
        // midpoint rule on a fine grid, with a cell edge at theta
        for t in [0.1, 0.5, 0.9] {
            let m = 200_000;
            let total: f64 = (0..m).map(|i| pdf((i as f64 + 0.5) / m as f64, p(t)).unwrap()).sum::<f64>()
                / m as f64;
            assert!((total - 1.0).abs() < 1e-10, "theta={t}: {total}");
        }
    }

    #[test]
    fn cdf_examples() {
        assert!((cdf(0.3, p(0.3)) - 0.3).abs() < 1e-15);
        assert_eq!(cdf(1.0, p(0.4)), 1.0);
        assert!((cdf(1.0 - 1e-12, p(0.4)) - 1.0).abs() < 1e-12);
        assert_eq!(cdf(-2.0, p(0.4)), 0.0);
        assert!((cdf(0.25, p(0.5)) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn dga_examples_and_inversion() {
        assert_eq!(dga(0.5, p(0.5)), 0.5);
        assert!((dga(0.25, p(0.5)) - 0.125f64.sqrt()).abs() < 1e-15);
        for t in [0.1, 0.5, 0.9] {
            for j in 1..100 {
                let u = j as f64 / 100.0;
                assert!((cdf(dga(u, p(t)), p(t)) - u).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn inverse_image_examples() {
        assert_eq!(inverse_image(0.5, 0.25, false).unwrap(), InverseImage::Value(1.0));
        assert_eq!(inverse_image(0.5, 0.25, true).unwrap(), InverseImage::AtOne);
        assert_eq!(inverse_image(0.5, 0.5, false).unwrap(), InverseImage::Value(0.5));
        assert_eq!(inverse_image(0.9, 0.5, false).unwrap(), InverseImage::Empty);
        assert_eq!(inverse_image(0.9, 0.5, true).unwrap(), InverseImage::AtOne);
        assert_eq!(inverse_image(0.1, 0.5, false).unwrap(), InverseImage::Empty);
        assert_eq!(inverse_image(0.1, 0.5, true).unwrap(), InverseImage::AtZero);
        assert!(inverse_image(0.5, 0.0, false).is_err());
    }

    #[test]
    fn inverse_image_solves_dga() {
        for (y, u) in [(0.3, 0.2), (0.3, 0.4), (0.7, 0.6), (0.7, 0.85)] {
            match inverse_image(y, u, false).unwrap() {
                InverseImage::Value(t) => assert!((dga(u, p(t)) - y).abs() < 1e-12),
                other => panic!("({y},{u}) -> {other:?}"),
            }
        }
    }

    #[test]
    fn jacobian_examples() {
        assert_eq!(jacobian(&sample(&[0.5]), p(0.5)), 0.5);
        for t in [0.2, 0.77] {
            assert!((jacobian(&sample(&[t]), p(t)) - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn sweep_matches_direct_evaluation() {
        let s = sample(&[0.05, 0.31, 0.31, 0.6, 0.97, 0.42]);
        let tg = TriangularGrid::new(Grid::unit(257).unwrap()).unwrap();
        let ll = tg.log_likelihood(&s);
        let lj = tg.log_jacobian(&s);
        for (i, t) in tg.grid().points().enumerate() {
            assert!((ll[i] - log_likelihood(&s, p(t))).abs() < 1e-12);
            assert!((lj[i] - jacobian(&s, p(t)).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn gfd_single_observation_mode() {
        let d = gfd(&sample(&[0.5]), &Grid::unit(4096).unwrap()).unwrap();
        let (imax, _) = d
            .weights()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        let mode = d.grid().point(imax);
        assert!((0.4..=0.6).contains(&mode));
    }

    #[test]
    fn gfd_is_flat_posterior_times_jacobian() {
        let s = sample(&[0.2, 0.45, 0.8]);
        let grid = Grid::unit(512).unwrap();
        let g = gfd(&s, &grid).unwrap();
        let flat = bayes_posterior(&s, Prior::Flat, &grid).unwrap();
        let ratios: Vec<f64> = grid
            .points()
            .enumerate()
            .map(|(i, t)| g.weights()[i] / (flat.weights()[i] * jacobian(&s, p(t))))
            .collect();
        for r in &ratios {
            assert!((r / ratios[0] - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn flat_posterior_is_likelihood() {
        let grid = Grid::unit(1000).unwrap();
        let flat = bayes_posterior(&sample(&[0.5]), Prior::Flat, &grid).unwrap();
        let ratios: Vec<f64> = grid
            .points()
            .enumerate()
            .map(|(i, t)| flat.weights()[i] / pdf(0.5, p(t)).unwrap())
            .collect();
        for r in &ratios {
            assert!((r / ratios[0] - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn jeffreys_prior_is_arcsine() {
        let grid = Grid::unit(4096).unwrap();
        let prior = TriangularGrid::new(grid).unwrap().prior(Prior::Jeffreys).unwrap();
        // Beta(1/2, 1/2) cell mass from its CDF (2/pi) asin(sqrt(x))
        let cdf = |x: f64| 2.0 / std::f64::consts::PI * x.sqrt().asin();
        for (i, w) in prior.weights().iter().enumerate() {
            let exact = cdf(grid.edge(i + 1)) - cdf(grid.edge(i));
            assert!((w - exact).abs() < 1e-6, "cell {i}: {w} vs {exact}");
        }
    }

    /// High-resolution midpoint quadrature of the posterior mean. The Jeffreys
    /// case integrates over `phi` with `theta = sin^2 phi`, which absorbs the
    /// prior: `d theta / sqrt(theta (1 - theta)) = 2 d phi`.
    fn quadrature_mean(y: f64, jeffreys: bool) -> f64 {
        let m = 2_000_000;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..m {
            let u = (i as f64 + 0.5) / m as f64;
            let t = if jeffreys { (u * std::f64::consts::FRAC_PI_2).sin().powi(2) } else { u };
            let w = pdf(y, p(t)).unwrap();
            num += t * w;
            den += w;
        }
        num / den
    }

    #[test]
    fn posterior_means_match_quadrature() {
        let grid = Grid::unit(4096).unwrap();
        let s = sample(&[0.9]);
        let flat = bayes_posterior(&s, Prior::Flat, &grid).unwrap().mean();
        let jeff = bayes_posterior(&s, Prior::Jeffreys, &grid).unwrap().mean();
        let flat_q = quadrature_mean(0.9, false);
        let jeff_q = quadrature_mean(0.9, true);
        assert!((flat - flat_q).abs() < 1e-6, "{flat} vs {flat_q}");
        assert!((jeff - jeff_q).abs() < 1e-6, "{jeff} vs {jeff_q}");
        assert!((flat - jeff).abs() > 0.01);
    }

    #[test]
    fn modified_gfd_atoms() {
        let grid = Grid::unit(4096).unwrap();
        let d = modified_gfd(&sample(&[0.5]), &grid).unwrap();
        assert_eq!(d.atoms()[0], Atom { location: 0.0, mass: 0.25 });
        assert_eq!(d.atoms()[1], Atom { location: 1.0, mass: 0.25 });
        assert!((d.continuous_weight() - 0.5).abs() < 1e-15);

        let d = modified_gfd(&sample(&[0.9]), &grid).unwrap();
        assert!((d.atoms()[1].mass - 0.81).abs() < 1e-15);
        let iv = equal_tailed_interval(&d, 0.95).unwrap();
        assert_eq!(iv.hi, 1.0);

        let extreme = sample(&[1e-6, 0.4, 1.0 - 1e-6]);
        let d = modified_gfd(&extreme, &grid).unwrap();
        assert!(d.atoms().iter().all(|a| a.mass < 1e-11));
        let plain = gfd(&extreme, &grid).unwrap();
        assert!(tv_distance(&d.binned(), &plain).unwrap() < 1e-10);
    }

    #[test]
    fn modified_gfd_matches_inverse_image_at_n1() {
        // At n = 1 the modified fiducial law is the law of Q~_y(U).
        let y = 0.35;
        let grid = Grid::unit(400).unwrap();
        let d = modified_gfd(&sample(&[y]), &grid).unwrap();
        let mut rng = substream(99, 0);
        let draws = 200_000;
        let (mut zero, mut one, mut below) = (0usize, 0usize, 0usize);
        for _ in 0..draws {
            match inverse_image(y, open_unit(&mut rng), true).unwrap() {
                InverseImage::AtZero => zero += 1,
                InverseImage::AtOne => one += 1,
                InverseImage::Value(t) if t <= 0.5 => below += 1,
                _ => {}
            }
        }
        let se = (0.25 / draws as f64).sqrt();
        assert!((zero as f64 / draws as f64 - d.atoms()[0].mass).abs() < 4.0 * se);
        assert!((one as f64 / draws as f64 - d.atoms()[1].mass).abs() < 4.0 * se);
        let cdf_half = crate::gfd::Univariate::cdf_at(&d, 0.5).unwrap();
        assert!(((zero + below) as f64 / draws as f64 - cdf_half).abs() < 4.0 * se + 1e-3);
    }

    #[test]
    fn score_and_information() {
        assert_eq!(score(0.2, p(0.5)).unwrap(), -2.0);
        assert_eq!(score(0.8, p(0.5)).unwrap(), 2.0);
        assert_eq!(fisher_info(p(0.5)), 4.0);
        assert!((fisher_info(p(0.1)) - 1.0 / 0.09).abs() < 1e-12);
        assert!(score(1.2, p(0.5)).is_err());
    }

    #[test]
    fn gaussian_limit_center() {
        let s = sample(&[0.2, 0.8, 0.3, 0.9]);
        let lim = gaussian_limit(&s, p(0.5)).unwrap();
        // scores -2, 2, -2, 2 sum to zero
        assert_eq!(lim.center()[0], 0.0);
        assert!((lim.covariance()[(0, 0)] - 0.25).abs() < 1e-15);
        // centre on the original scale is 2 theta0 - F_n(theta0)
        let s = sample(&[0.2, 0.3, 0.4, 0.9]);
        let lim = gaussian_limit(&s, p(0.5)).unwrap();
        assert!((lim.original_mean()[0] - (1.0 - 0.75)).abs() < 1e-12);
    }
}
