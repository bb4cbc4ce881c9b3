//! Model-agnostic numerical machinery for one-dimensional fiducial and
//! posterior distributions.
//!
//! Densities are discretised on a [`Grid`] of equal-width cells and stored as
//! probability mass per cell, so every integral is a midpoint-rule sum. Within
//! a cell the mass is spread uniformly, which makes the CDF piecewise linear and
//! the quantile function its exact inverse.
//!
//! Total variation is reported as `sum |p - q|` (the `L1` distance between the
//! two laws), which ranges over `[0, 2]`. This is twice the "sup over events"
//! convention and coincides with `2 * integral (1 - p/q)_+ dQ`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Tolerance on total probability mass.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Equally spaced cell midpoints on `(lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    lo: f64,
    hi: f64,
    m: usize,
}

impl Grid {
    pub fn new(lo: f64, hi: f64, m: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(Error::InvalidGrid(format!("need lo < hi, got [{lo}, {hi}]")));
        }
        if m < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 cells, got {m}")));
        }
        Ok(Self { lo, hi, m })
    }

    /// Grid on the unit interval, the parameter space of the triangular model.
    pub fn unit(m: usize) -> Result<Self> {
        Self::new(0.0, 1.0, m)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / self.m as f64
    }

    /// Midpoint of cell `i`.
    pub fn point(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.spacing()
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.m).map(move |i| self.point(i))
    }

    /// Left edge of cell `i` (`i == len()` gives `hi`).
    pub fn edge(&self, i: usize) -> f64 {
        if i == self.m {
            self.hi
        } else {
            self.lo + i as f64 * self.spacing()
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

/// A probability distribution with a CDF and a (generalised) quantile function.
pub trait Univariate {
    fn support(&self) -> (f64, f64);

    fn cdf_at(&self, x: f64) -> Result<f64>;

    /// Smallest `x` with `cdf_at(x) >= q`.
    fn quantile(&self, q: f64) -> Result<f64>;
}

/// Normalised mass per grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    grid: Grid,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl GridDensity {
    /// Normalises `exp(log_values)` over the grid (log-sum-exp stabilised).
    pub fn normalize(grid: Grid, log_values: &[f64]) -> Result<Self> {
        if log_values.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} log values for a grid of {} cells",
                log_values.len(),
                grid.len()
            )));
        }
        if log_values.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(Error::InvalidDensity("log values must be finite or -inf".into()));
        }
        let max = log_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(Error::AllZero);
        }
        // The common cell width cancels in the ratio.
        let weights = log_values.iter().map(|v| (v - max).exp()).collect();
        Self::from_unnormalized(grid, weights)
    }

    /// Builds a density from nonnegative (possibly unnormalised) cell masses.
    pub fn from_weights(grid: Grid, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for a grid of {} cells",
                weights.len(),
                grid.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidDensity("weights must be finite and nonnegative".into()));
        }
        Self::from_unnormalized(grid, weights)
    }

    fn from_unnormalized(grid: Grid, mut weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if total.is_nan() || total <= 0.0 {
            return Err(Error::AllZero);
        }
        weights.iter_mut().for_each(|w| *w /= total);
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Ok(Self { grid, weights, cumulative })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Mass per unit length in cell `i`.
    pub fn density_at_cell(&self, i: usize) -> f64 {
        self.weights[i] / self.grid.spacing()
    }

    pub fn mean(&self) -> f64 {
        self.grid.points().zip(&self.weights).map(|(x, w)| x * w).sum()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        let h = self.grid.spacing();
        // Uniform spread within each cell adds h^2/12.
        self.grid
            .points()
            .zip(&self.weights)
            .map(|(x, w)| w * (x - mean).powi(2))
            .sum::<f64>()
            + h * h / 12.0
    }

    /// Mass of the cells whose midpoints lie in `[a, b]`.
    pub fn mass_between(&self, a: f64, b: f64) -> f64 {
        self.grid
            .points()
            .zip(&self.weights)
            .filter(|(x, _)| *x >= a && *x <= b)
            .map(|(_, w)| w)
            .sum()
    }

    /// Same masses on a relabelled grid (affine transport of the axis).
    pub fn with_grid(&self, grid: Grid) -> Result<Self> {
        if grid.len() != self.grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, weights: self.weights.clone(), cumulative: self.cumulative.clone() })
    }

    fn cumulative_before(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.cumulative[i - 1]
        }
    }
}

impl Univariate for GridDensity {
    fn support(&self) -> (f64, f64) {
        (self.grid.lo, self.grid.hi)
    }

    fn cdf_at(&self, x: f64) -> Result<f64> {
        if !self.grid.contains(x) {
            return Err(Error::out_of_domain("x", x));
        }
        if x == self.grid.hi {
            return Ok(1.0);
        }
        let pos = (x - self.grid.lo) / self.grid.spacing();
        let i = (pos.floor() as usize).min(self.grid.len() - 1);
        let frac = (pos - i as f64).clamp(0.0, 1.0);
        Ok((self.cumulative_before(i) + frac * self.weights[i]).min(1.0))
    }

    fn quantile(&self, q: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::out_of_domain("q", q));
        }
        let i = self.cumulative.partition_point(|&c| c < q);
        if i >= self.grid.len() {
            return Ok(self.grid.hi);
        }
        let w = self.weights[i];
        let frac = if w > 0.0 { ((q - self.cumulative_before(i)) / w).clamp(0.0, 1.0) } else { 0.0 };
        Ok(self.grid.lo + (i as f64 + frac) * self.grid.spacing())
    }
}

/// A point mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// A grid density mixed with point masses.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedDensity {
    continuous: GridDensity,
    continuous_weight: f64,
    atoms: Vec<Atom>,
}

impl MixedDensity {
    /// `continuous` is normalised; it carries total weight `continuous_weight`.
    pub fn new(continuous: GridDensity, continuous_weight: f64, mut atoms: Vec<Atom>) -> Result<Self> {
        if !(0.0..=1.0).contains(&continuous_weight) {
            return Err(Error::InvalidDensity(format!(
                "continuous weight {continuous_weight} outside [0, 1]"
            )));
        }
        for atom in &atoms {
            if !(atom.mass.is_finite() && atom.mass >= 0.0) {
                return Err(Error::InvalidDensity(format!("negative atom mass {}", atom.mass)));
            }
            if !continuous.grid.contains(atom.location) {
                return Err(Error::InvalidDensity(format!(
                    "atom at {} lies outside the grid",
                    atom.location
                )));
            }
        }
        let total = continuous_weight + atoms.iter().map(|a| a.mass).sum::<f64>();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDensity(format!("total mass {total} != 1")));
        }
        atoms.sort_by(|a, b| a.location.total_cmp(&b.location));
        Ok(Self { continuous, continuous_weight, atoms })
    }

    pub fn continuous(&self) -> &GridDensity {
        &self.continuous
    }

    pub fn continuous_weight(&self) -> f64 {
        self.continuous_weight
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Mass per cell of the continuous part plus each atom folded into the
    /// cell containing it. Useful for comparing against a plain grid density.
    pub fn binned(&self) -> GridDensity {
        let grid = self.continuous.grid;
        let mut weights: Vec<f64> =
            self.continuous.weights.iter().map(|w| w * self.continuous_weight).collect();
        for atom in &self.atoms {
            let pos = (atom.location - grid.lo) / grid.spacing();
            let i = (pos.floor().max(0.0) as usize).min(grid.len() - 1);
            weights[i] += atom.mass;
        }
        GridDensity::from_unnormalized(grid, weights).expect("mixed density has positive mass")
    }

    /// Continuous part expressed on the target quantile scale.
    fn continuous_quantile(&self, mass: f64) -> Result<f64> {
        if self.continuous_weight <= 0.0 {
            return Ok(self.continuous.grid.lo);
        }
        self.continuous.quantile((mass / self.continuous_weight).clamp(0.0, 1.0))
    }
}

impl Univariate for MixedDensity {
    fn support(&self) -> (f64, f64) {
        self.continuous.support()
    }

    fn cdf_at(&self, x: f64) -> Result<f64> {
        let cont = self.continuous.cdf_at(x)? * self.continuous_weight;
        let atoms: f64 = self.atoms.iter().filter(|a| a.location <= x).map(|a| a.mass).sum();
        Ok((cont + atoms).min(1.0))
    }

    fn quantile(&self, q: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::out_of_domain("q", q));
        }
        let mut atoms_below = 0.0;
        for atom in &self.atoms {
            let before = self.continuous_weight * self.continuous.cdf_at(atom.location)? + atoms_below;
            if q <= before {
                return self.continuous_quantile(q - atoms_below);
            }
            if q <= before + atom.mass {
                return Ok(atom.location);
            }
            atoms_below += atom.mass;
        }
        self.continuous_quantile(q - atoms_below)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
}

impl Interval {
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// `[quantile((1 - level)/2), quantile((1 + level)/2)]`.
pub fn equal_tailed_interval<D: Univariate + ?Sized>(d: &D, level: f64) -> Result<Interval> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::out_of_domain("level", level));
    }
    let tail = 0.5 * (1.0 - level);
    let lo = d.quantile(tail)?;
    let hi = d.quantile(1.0 - tail)?;
    Ok(Interval { lo, hi, level })
}

/// Inverse-CDF draw for a given uniform `u`.
pub fn sample<D: Univariate + ?Sized>(d: &D, u: f64) -> Result<f64> {
    d.quantile(u)
}

/// `sum |a_i - b_i|` over cells; see the module docs for the convention.
pub fn tv_distance(a: &GridDensity, b: &GridDensity) -> Result<f64> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    Ok(a.weights.iter().zip(&b.weights).map(|(p, q)| (p - q).abs()).sum())
}

/// `log D(M) = 1/2 log det(M^T M / n)` for an `n x k` matrix, `-inf` when the
/// columns are numerically dependent.
pub fn log_d_operator(m: &DMatrix<f64>) -> f64 {
    let (n, k) = m.shape();
    if k == 0 {
        return 0.0;
    }
    if n < k {
        return f64::NEG_INFINITY;
    }
    let r_diag = m.clone().qr().r().diagonal();
    let largest = r_diag.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let tol = n.max(k) as f64 * f64::EPSILON * largest;
    if largest == 0.0 || r_diag.iter().any(|v| v.abs() <= tol) {
        return f64::NEG_INFINITY;
    }
    r_diag.iter().map(|v| v.abs().ln()).sum::<f64>() - 0.5 * k as f64 * (n as f64).ln()
}

/// The l2 D-operator `det(M^T M / n)^{1/2}`; zero for rank-deficient `M`.
pub fn d_operator(m: &DMatrix<f64>) -> f64 {
    log_d_operator(m).exp()
}

/// Fiducial Jacobian of the Gaussian linear model `Y = X beta + sigma U`:
/// `n^{-1} sigma^{-1} det([X, y - X beta]^T [X, y - X beta])^{1/2}`.
///
/// The determinant does not depend on `beta`, so this equals
/// `n^{-1} sigma^{-1} det(X^T X)^{1/2} RSS^{1/2}` with RSS from the least-squares fit.
pub fn linreg_jacobian(
    x: &DMatrix<f64>,
    y: &[f64],
    beta: &[f64],
    sigma: f64,
) -> Result<f64> {
    let (n, k) = x.shape();
    if y.len() != n || beta.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "X is {n}x{k}, y has {}, beta has {}",
            y.len(),
            beta.len()
        )));
    }
    if n <= k {
        return Err(Error::DimensionMismatch(format!("need n > k, got n={n}, k={k}")));
    }
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::out_of_domain("sigma", sigma));
    }
    if log_d_operator(x) == f64::NEG_INFINITY {
        return Err(Error::SingularDesign);
    }
    let fitted = x * nalgebra::DVector::from_column_slice(beta);
    let mut aug = x.clone().insert_column(k, 0.0);
    for i in 0..n {
        aug[(i, k)] = y[i] - fitted[i];
    }
    // det(A^T A)^{1/2} = n^{(k+1)/2} D(A)
    let log_det_half = log_d_operator(&aug) + 0.5 * (k + 1) as f64 * (n as f64).ln();
    Ok((log_det_half - (n as f64).ln() - sigma.ln()).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn uniform(m: usize) -> GridDensity {
        GridDensity::normalize(Grid::unit(m).unwrap(), &vec![0.0; m]).unwrap()
    }

    fn beta21(m: usize) -> GridDensity {
        let grid = Grid::unit(m).unwrap();
        let logs: Vec<f64> = grid.points().map(f64::ln).collect();
        GridDensity::normalize(grid, &logs).unwrap()
    }

    #[test]
    fn grid_rejects_bad_bounds() {
        assert!(Grid::new(1.0, 0.0, 10).is_err());
        assert!(Grid::new(0.0, 1.0, 1).is_err());
        let g = Grid::unit(4).unwrap();
        let pts: Vec<f64> = g.points().collect();
        assert_eq!(pts, vec![0.125, 0.375, 0.625, 0.875]);
    }

    #[test]
    fn normalize_uniform_and_shift() {
        let d = uniform(4);
        assert_eq!(d.weights(), &[0.25; 4]);
        let grid = Grid::unit(5).unwrap();
        let base = [0.1, -3.0, 2.0, f64::NEG_INFINITY, 0.7];
        let shifted: Vec<f64> = base.iter().map(|v| v + 1234.5).collect();
        let a = GridDensity::normalize(grid, &base).unwrap();
        let b = GridDensity::normalize(grid, &shifted).unwrap();
        for (x, y) in a.weights().iter().zip(b.weights()) {
            assert!(close(*x, *y, 1e-13));
        }
        assert_eq!(a.weights()[3], 0.0);
    }

    #[test]
    fn normalize_all_neg_inf_is_all_zero() {
        let grid = Grid::unit(3).unwrap();
        let err = GridDensity::normalize(grid, &[f64::NEG_INFINITY; 3]).unwrap_err();
        assert!(matches!(err, Error::AllZero));
    }

    #[test]
    fn normalize_beta21_matches_closed_form() {
        let d = beta21(4096);
        let h = d.grid().spacing();
        for (x, w) in d.grid().points().zip(d.weights()) {
            assert!(close(*w, 2.0 * x * h, 1e-6));
        }
    }

    #[test]
    fn cdf_examples() {
        let u = uniform(4096);
        assert!(close(u.cdf_at(0.5).unwrap(), 0.5, 1e-12));
        assert_eq!(u.cdf_at(1.0).unwrap(), 1.0);
        assert!(matches!(u.cdf_at(1.5), Err(Error::OutOfDomain { .. })));
        let b = beta21(4096);
        assert!(close(b.cdf_at(0.5).unwrap(), 0.25, 1e-4));
        assert_eq!(b.cdf_at(1.0).unwrap(), 1.0);
    }

    #[test]
    fn quantile_examples() {
        let u = uniform(4096);
        let h = u.grid().spacing();
        assert!(close(u.quantile(0.975).unwrap(), 0.975, h));
        for x in [0.1, 0.33, 0.8] {
            let q = u.cdf_at(x).unwrap();
            assert!(close(u.quantile(q).unwrap(), x, h));
        }
        let b = beta21(4096);
        assert!(close(b.quantile(0.25).unwrap(), 0.5, 1e-3));
        assert_eq!(b.quantile(0.0).unwrap(), 0.0);
        assert_eq!(b.quantile(1.0).unwrap(), 1.0);
        assert!(b.quantile(-0.1).is_err());
    }

    #[test]
    fn equal_tailed_uniform() {
        let u = uniform(4096);
        let h = u.grid().spacing();
        let iv = equal_tailed_interval(&u, 0.95).unwrap();
        assert!(close(iv.lo, 0.025, h) && close(iv.hi, 0.975, h));
        assert!(equal_tailed_interval(&u, 1.0).is_err());
    }

    #[test]
    fn atom_absorbs_lower_tail() {
        let mixed =
            MixedDensity::new(uniform(1024), 0.5, vec![Atom { location: 0.0, mass: 0.5 }]).unwrap();
        let iv = equal_tailed_interval(&mixed, 0.95).unwrap();
        assert_eq!(iv.lo, 0.0);
        // upper tail: 0.975 = 0.5 + 0.5 x  =>  x = 0.95
        assert!(close(iv.hi, 0.95, 1.0 / 1024.0));
        assert_eq!(sample(&mixed, 0.3).unwrap(), 0.0);
        assert!(close(sample(&mixed, 0.75).unwrap(), 0.5, 1.0 / 1024.0));
    }

    #[test]
    fn mixed_density_validates_mass() {
        let err = MixedDensity::new(uniform(8), 0.5, vec![Atom { location: 0.0, mass: 0.4 }]);
        assert!(err.is_err());
        let err = MixedDensity::new(uniform(8), 0.5, vec![Atom { location: 2.0, mass: 0.5 }]);
        assert!(err.is_err());
    }

    #[test]
    fn mixed_cdf_and_binned() {
        let mixed = MixedDensity::new(
            uniform(100),
            0.6,
            vec![Atom { location: 1.0, mass: 0.3 }, Atom { location: 0.0, mass: 0.1 }],
        )
        .unwrap();
        assert!(close(mixed.cdf_at(0.0).unwrap(), 0.1, 1e-12));
        assert!(close(mixed.cdf_at(0.5).unwrap(), 0.4, 1e-12));
        assert!(close(mixed.cdf_at(1.0).unwrap(), 1.0, 1e-12));
        assert_eq!(mixed.quantile(0.95).unwrap(), 1.0);
        let binned = mixed.binned();
        assert!(close(binned.weights()[0], 0.006 + 0.1, 1e-12));
        assert!(close(binned.weights()[99], 0.006 + 0.3, 1e-12));
    }

    #[test]
    fn tv_examples() {
        let u = uniform(4096);
        assert_eq!(tv_distance(&u, &u).unwrap(), 0.0);
        let grid = Grid::unit(4).unwrap();
        let a = GridDensity::from_weights(grid, vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        let b = GridDensity::from_weights(grid, vec![0.0, 0.0, 3.0, 1.0]).unwrap();
        assert!(close(tv_distance(&a, &b).unwrap(), 2.0, 1e-15));
        assert!(close(tv_distance(&u, &beta21(4096)).unwrap(), 0.5, 1e-3));
        assert!(matches!(tv_distance(&u, &uniform(8)), Err(Error::GridMismatch)));
    }

    #[test]
    fn d_operator_examples() {
        let ones = DMatrix::from_element(7, 1, 1.0);
        assert!(close(d_operator(&ones), 1.0, 1e-14));
        let eye = DMatrix::<f64>::identity(2, 2);
        assert!(close(d_operator(&eye), 0.5, 1e-14));
        let dependent = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        assert_eq!(d_operator(&dependent), 0.0);
        let zero_col = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 2.0, 0.0, 3.0, 0.0]);
        assert_eq!(d_operator(&zero_col), 0.0);
    }

    #[test]
    fn linreg_jacobian_examples() {
        let x = DMatrix::from_element(4, 1, 1.0);
        assert_eq!(linreg_jacobian(&x, &[1.0; 4], &[3.0], 1.0).unwrap(), 0.0);
        let x = DMatrix::from_element(2, 1, 1.0);
        assert!(close(linreg_jacobian(&x, &[0.0, 2.0], &[0.3], 1.0).unwrap(), 1.0, 1e-12));
        let singular = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        assert!(matches!(
            linreg_jacobian(&singular, &[1.0, 2.0, 3.0], &[0.0, 0.0], 1.0),
            Err(Error::SingularDesign)
        ));
        assert!(linreg_jacobian(&x, &[0.0, 2.0], &[0.0], 0.0).is_err());
    }
}
