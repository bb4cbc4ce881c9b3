//! Free-knot regression splines in the truncated power basis
//! `{1, x, ..., x^p, (x - t_1)_+^p, ..., (x - t_K)_+^p}` with Gaussian noise.
//!
//! Parameter vectors are ordered `(t_1..t_K, alpha_0..alpha_{p+K}, sigma^2)`.
//!
//! The fiducial Jacobian is
//!
//! ```text
//! J(y, theta) = p^K / sigma * prod_k |alpha_{p+k}| * D([B_alpha, B_t, y])
//! ```
//!
//! where `D` is the l2 D-operator, `B_alpha` holds the basis, `B_t` holds
//! `(x - t_k)_+^{p-1}` and the last column is the raw response. For `p = 1`
//! the derivative column is the right-continuous step `1{x > t_k}`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::gfd::log_d_operator;
use crate::rng::substream;

/// Half-width of the default artificial-response box.
pub const DEFAULT_Q: f64 = 10.0;

/// Domain `[a, b]` together with the knot-separation constant `delta` and the
/// lower bound `xi` on the knot coefficients `|alpha_{p+k}|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplineDomain {
    pub a: f64,
    pub b: f64,
    pub delta: f64,
    pub xi: f64,
}

impl SplineDomain {
    /// Defaults: `delta = 0.05 (b - a)`, `xi = 1e-3`.
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidModel(format!("domain [{a}, {b}] is empty")));
        }
        Ok(Self { a, b, delta: 0.05 * (b - a), xi: 1e-3 })
    }

    pub fn with_delta(mut self, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && 2.0 * delta < self.b - self.a) {
            return Err(Error::InvalidModel(format!("delta {delta} does not fit the domain")));
        }
        self.delta = delta;
        Ok(self)
    }

    pub fn with_xi(mut self, xi: f64) -> Result<Self> {
        if !(xi > 0.0 && xi.is_finite()) {
            return Err(Error::InvalidModel(format!("xi must be positive, got {xi}")));
        }
        self.xi = xi;
        Ok(self)
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    /// Knots admissible under the separation constraint.
    pub fn admits_knots(&self, knots: &[f64]) -> bool {
        let inside = knots.iter().all(|&t| t >= self.a + self.delta && t <= self.b - self.delta);
        inside && knots.windows(2).all(|w| w[1] - w[0] > self.delta)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplineModel {
    degree: usize,
    knots: Vec<f64>,
    coefs: Vec<f64>,
    sigma: f64,
}

impl SplineModel {
    pub fn new(degree: usize, knots: Vec<f64>, coefs: Vec<f64>, sigma: f64) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidModel("degree must be at least 1".into()));
        }
        if knots.is_empty() {
            return Err(Error::InvalidModel("need at least one knot".into()));
        }
        if coefs.len() != degree + knots.len() + 1 {
            return Err(Error::InvalidModel(format!(
                "degree {degree} with {} knots needs {} coefficients, got {}",
                knots.len(),
                degree + knots.len() + 1,
                coefs.len()
            )));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidModel(format!("sigma must be positive, got {sigma}")));
        }
        if knots.iter().chain(&coefs).any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("non-finite knot or coefficient".into()));
        }
        Ok(Self { degree, knots, coefs, sigma })
    }

    /// Checks the knot set and the coefficient bound against `domain`.
    pub fn validate(&self, domain: &SplineDomain) -> Result<()> {
        if !self.knots.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidModel("knots must be strictly increasing".into()));
        }
        if !domain.admits_knots(&self.knots) {
            return Err(Error::InvalidModel(format!(
                "knots {:?} violate the separation {} on [{}, {}]",
                self.knots, domain.delta, domain.a, domain.b
            )));
        }
        self.check_knot_coefs(domain)
    }

    fn check_knot_coefs(&self, domain: &SplineDomain) -> Result<()> {
        match self.knot_coefs().iter().find(|c| c.abs() <= domain.xi) {
            Some(c) => Err(Error::InvalidModel(format!(
                "knot coefficient {c} is not bounded away from zero by {}",
                domain.xi
            ))),
            None => Ok(()),
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn kappa(&self) -> usize {
        self.knots.len()
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn coefs(&self) -> &[f64] {
        &self.coefs
    }

    /// `alpha_{p+1}, ..., alpha_{p+K}`.
    pub fn knot_coefs(&self) -> &[f64] {
        &self.coefs[self.degree + 1..]
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn n_coefs(&self) -> usize {
        self.coefs.len()
    }

    pub fn n_params(&self) -> usize {
        self.kappa() + self.n_coefs() + 1
    }

    /// `(t, alpha, sigma^2)`.
    pub fn param_vector(&self) -> Vec<f64> {
        let mut v = self.knots.clone();
        v.extend_from_slice(&self.coefs);
        v.push(self.sigma * self.sigma);
        v
    }

    pub fn eval(&self, x: f64) -> f64 {
        basis(x, &self.knots, self.degree).iter().zip(&self.coefs).map(|(b, a)| b * a).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplineData {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl SplineData {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::InvalidSample(format!("{} x values but {} y values", x.len(), y.len())));
        }
        if x.is_empty() {
            return Err(Error::InvalidSample("no observations".into()));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidSample("non-finite observation".into()));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// `(u)_+^power`, truncating before exponentiation; `(u)_+^0` is `1{u > 0}`.
fn truncated_power(u: f64, power: usize) -> f64 {
    if u <= 0.0 {
        0.0
    } else {
        u.powi(power as i32)
    }
}

/// Truncated power basis at `x`: monomials up to `degree`, then one term per knot.
pub fn basis(x: f64, knots: &[f64], degree: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(degree + knots.len() + 1);
    let mut pow = 1.0;
    for _ in 0..=degree {
        out.push(pow);
        pow *= x;
    }
    out.extend(knots.iter().map(|&t| truncated_power(x - t, degree)));
    out
}

/// Blocks of the fiducial design: `B_alpha` (n x (p+K+1)), `B_t` (n x K) and
/// the response column that stands in for the residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrices {
    pub b_alpha: DMatrix<f64>,
    pub b_t: DMatrix<f64>,
    pub b_sigma_tilde: DVector<f64>,
}

fn basis_matrix(x: &[f64], knots: &[f64], degree: usize) -> DMatrix<f64> {
    let cols = degree + knots.len() + 1;
    let mut m = DMatrix::zeros(x.len(), cols);
    for (i, &xi) in x.iter().enumerate() {
        for (j, v) in basis(xi, knots, degree).into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    m
}

fn knot_derivative_matrix(x: &[f64], knots: &[f64], degree: usize) -> DMatrix<f64> {
    DMatrix::from_fn(x.len(), knots.len(), |i, k| truncated_power(x[i] - knots[k], degree - 1))
}

pub fn design_matrices(data: &SplineData, model: &SplineModel) -> DesignMatrices {
    DesignMatrices {
        b_alpha: basis_matrix(&data.x, &model.knots, model.degree),
        b_t: knot_derivative_matrix(&data.x, &model.knots, model.degree),
        b_sigma_tilde: DVector::from_column_slice(&data.y),
    }
}

fn hstack(b_alpha: &DMatrix<f64>, b_t: &DMatrix<f64>, last: &[f64]) -> DMatrix<f64> {
    let n = b_alpha.nrows();
    let (ka, kt) = (b_alpha.ncols(), b_t.ncols());
    let mut m = DMatrix::zeros(n, ka + kt + 1);
    m.view_mut((0, 0), (n, ka)).copy_from(b_alpha);
    m.view_mut((0, ka), (n, kt)).copy_from(b_t);
    for i in 0..n {
        m[(i, ka + kt)] = last[i];
    }
    m
}

fn log_prefactor(model: &SplineModel) -> f64 {
    model.kappa() as f64 * (model.degree as f64).ln() - model.sigma.ln()
        + model.knot_coefs().iter().map(|c| c.abs().ln()).sum::<f64>()
}

/// Log of the fiducial Jacobian; `-inf` when the augmented design is singular.
pub fn log_jacobian(data: &SplineData, model: &SplineModel) -> f64 {
    let dm = design_matrices(data, model);
    let a = hstack(&dm.b_alpha, &dm.b_t, dm.b_sigma_tilde.as_slice());
    log_prefactor(model) + log_d_operator(&a)
}

/// Fiducial Jacobian; zero when the augmented design is singular.
pub fn jacobian(data: &SplineData, model: &SplineModel) -> f64 {
    log_jacobian(data, model).exp()
}

/// The Jacobian computed with the residual column `y - g(x)` instead of `y`.
pub fn jacobian_residual_form(data: &SplineData, model: &SplineModel) -> f64 {
    let dm = design_matrices(data, model);
    let resid: Vec<f64> = data.x.iter().zip(&data.y).map(|(&x, &y)| y - model.eval(x)).collect();
    let a = hstack(&dm.b_alpha, &dm.b_t, &resid);
    (log_prefactor(model) + log_d_operator(&a)).exp()
}

pub fn log_likelihood(data: &SplineData, model: &SplineModel) -> f64 {
    let n = data.len() as f64;
    let s2 = model.sigma * model.sigma;
    let rss: f64 = data.x.iter().zip(&data.y).map(|(&x, &y)| (y - model.eval(x)).powi(2)).sum();
    -0.5 * n * (2.0 * std::f64::consts::PI).ln() - 0.5 * n * s2.ln() - rss / (2.0 * s2)
}

/// Knot-dependent pieces of the fiducial log density, reused while only the
/// coefficients or the noise scale move.
struct KnotTerms<'a> {
    data: &'a SplineData,
    degree: usize,
    b_alpha: DMatrix<f64>,
    log_d: f64,
}

impl<'a> KnotTerms<'a> {
    fn new(data: &'a SplineData, knots: &[f64], degree: usize) -> Self {
        let b_alpha = basis_matrix(&data.x, knots, degree);
        let b_t = knot_derivative_matrix(&data.x, knots, degree);
        let log_d = log_d_operator(&hstack(&b_alpha, &b_t, &data.y));
        Self { data, degree, b_alpha, log_d }
    }

    fn log_density(&self, coefs: &[f64], sigma: f64) -> f64 {
        if self.log_d == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let n = self.data.len() as f64;
        let mut rss = 0.0;
        for (i, &y) in self.data.y.iter().enumerate() {
            let mut fit = 0.0;
            for (j, &a) in coefs.iter().enumerate() {
                fit += self.b_alpha[(i, j)] * a;
            }
            rss += (y - fit) * (y - fit);
        }
        let kappa = coefs.len() - self.degree - 1;
        let log_sigma = sigma.ln();
        let log_lik = -0.5 * n * (2.0 * std::f64::consts::PI).ln() - n * log_sigma
            - rss / (2.0 * sigma * sigma);
        let log_jac = kappa as f64 * (self.degree as f64).ln() - log_sigma
            + coefs[self.degree + 1..].iter().map(|c| c.abs().ln()).sum::<f64>()
            + self.log_d;
        log_lik + log_jac
    }
}

/// Unnormalised log fiducial density `log f(y, theta) + log J(y, theta)` over
/// `(t, alpha, sigma)`.
pub fn log_gfd_density(data: &SplineData, model: &SplineModel) -> f64 {
    KnotTerms::new(data, &model.knots, model.degree).log_density(&model.coefs, model.sigma)
}

/// Fisher information of `(t, alpha, sigma^2)` for responses observed at `x`:
/// `X^T X / sigma^2` for the mean parameters and `n / (2 sigma^4)` for `sigma^2`.
pub fn fisher_info(model: &SplineModel, domain: &SplineDomain, x: &[f64]) -> Result<DMatrix<f64>> {
    model.check_knot_coefs(domain)?;
    if x.is_empty() {
        return Err(Error::InvalidSample("no design points".into()));
    }
    let (kappa, ncoef) = (model.kappa(), model.n_coefs());
    let p = model.degree as f64;
    let mut xmat = DMatrix::zeros(x.len(), kappa + ncoef);
    for (i, &xi) in x.iter().enumerate() {
        for (k, (&t, &c)) in model.knots.iter().zip(model.knot_coefs()).enumerate() {
            xmat[(i, k)] = -p * c * truncated_power(xi - t, model.degree - 1);
        }
        for (j, b) in basis(xi, &model.knots, model.degree).into_iter().enumerate() {
            xmat[(i, kappa + j)] = b;
        }
    }
    if log_d_operator(&xmat) == f64::NEG_INFINITY {
        return Err(Error::SingularInformation);
    }
    let s2 = model.sigma * model.sigma;
    let dim = kappa + ncoef + 1;
    let mut info = DMatrix::zeros(dim, dim);
    info.view_mut((0, 0), (dim - 1, dim - 1)).copy_from(&(xmat.transpose() * &xmat / s2));
    info[(dim - 1, dim - 1)] = x.len() as f64 / (2.0 * s2 * s2);
    Ok(info)
}

/// `n` observations with `x` uniform on the domain and Gaussian noise.
pub fn simulate<R: Rng + ?Sized>(
    model: &SplineModel,
    domain: &SplineDomain,
    n: usize,
    rng: &mut R,
) -> Result<SplineData> {
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let xi = domain.a + domain.width() * rng.random::<f64>();
        let eps: f64 = rng.sample(StandardNormal);
        x.push(xi);
        y.push(model.eval(xi) + model.sigma * eps);
    }
    SplineData::new(x, y)
}

/// Artificial data that identify every parameter: `p + 1` points inside each
/// of the `K + 1` knot intervals (plus one extra in the widest), pairwise more
/// than `delta / 2` apart, and a response in `[-q, q]` orthogonal to the span
/// of `[B_alpha, B_t]`.
pub fn artificial_design(model: &SplineModel, domain: &SplineDomain, q: f64) -> Result<SplineData> {
    model.validate(domain)?;
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::out_of_domain("q", q));
    }
    let mut bounds = vec![domain.a];
    bounds.extend_from_slice(&model.knots);
    bounds.push(domain.b);
    let lengths: Vec<f64> = bounds.windows(2).map(|w| w[1] - w[0]).collect();
    let mut counts = vec![model.degree + 1; lengths.len()];
    let widest = lengths
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("at least two segments");
    counts[widest] += 1;

    let mut x = Vec::new();
    for ((w, &len), &count) in bounds.windows(2).zip(&lengths).zip(&counts) {
        let gap = len / count as f64;
        if gap <= domain.delta / 2.0 {
            return Err(Error::InfeasibleGeometry(format!(
                "segment [{}, {}] cannot hold {count} points more than {} apart",
                w[0],
                w[1],
                domain.delta / 2.0
            )));
        }
        x.extend((0..count).map(|j| w[0] + (j as f64 + 0.5) * gap));
    }

    let b = {
        let ba = basis_matrix(&x, &model.knots, model.degree);
        let bt = knot_derivative_matrix(&x, &model.knots, model.degree);
        let mut m = DMatrix::zeros(x.len(), ba.ncols() + bt.ncols());
        m.view_mut((0, 0), ba.shape()).copy_from(&ba);
        m.view_mut((0, ba.ncols()), bt.shape()).copy_from(&bt);
        m
    };
    let qmat = b.qr().q();
    let complement = (0..x.len())
        .map(|j| {
            let mut e = DVector::zeros(x.len());
            e[j] = 1.0;
            let proj = &qmat * (qmat.transpose() * &e);
            e - proj
        })
        .max_by(|u, v| u.norm().total_cmp(&v.norm()))
        .expect("non-empty design");
    let scale = q / complement.amax();
    let y = complement.iter().map(|v| v * scale).collect();
    SplineData::new(x, y)
}

/// Jacobian evaluated on [`artificial_design`].
pub fn artificial_design_jacobian(model: &SplineModel, domain: &SplineDomain, q: f64) -> Result<f64> {
    let data = artificial_design(model, domain, q)?;
    Ok(jacobian(&data, model))
}

fn least_squares(b: &DMatrix<f64>, y: &[f64]) -> Option<(DVector<f64>, f64)> {
    let yv = DVector::from_column_slice(y);
    let coefs = b.clone().svd(true, true).solve(&yv, 1e-12).ok()?;
    let rss = (&yv - b * &coefs).norm_squared();
    Some((coefs, rss))
}

/// A least-squares starting point: knots from a coordinate-wise grid search
/// over admissible positions, coefficients and noise scale from the fit.
pub fn least_squares_init(
    data: &SplineData,
    domain: &SplineDomain,
    degree: usize,
    kappa: usize,
) -> Result<SplineModel> {
    if degree == 0 || kappa == 0 {
        return Err(Error::InvalidModel("degree and knot count must be positive".into()));
    }
    let lo = domain.a + domain.delta;
    let hi = domain.b - domain.delta;
    let spacing = (hi - lo) / (kappa + 1) as f64;
    if spacing <= domain.delta {
        return Err(Error::InvalidModel(format!("{kappa} knots do not fit the domain")));
    }
    let mut knots: Vec<f64> = (1..=kappa).map(|k| lo + k as f64 * spacing).collect();
    let rss_at = |knots: &[f64]| {
        least_squares(&basis_matrix(&data.x, knots, degree), &data.y).map_or(f64::INFINITY, |(_, r)| r)
    };
    const CANDIDATES: usize = 64;
    for _ in 0..3 {
        for k in 0..kappa {
            let left = if k == 0 { lo } else { knots[k - 1] + domain.delta };
            let right = if k + 1 == kappa { hi } else { knots[k + 1] - domain.delta };
            let mut best = (rss_at(&knots), knots[k]);
            for c in 0..CANDIDATES {
                let t = left + (right - left) * (c as f64 + 0.5) / CANDIDATES as f64;
                let mut trial = knots.clone();
                trial[k] = t;
                if domain.admits_knots(&trial) {
                    let r = rss_at(&trial);
                    if r < best.0 {
                        best = (r, t);
                    }
                }
            }
            knots[k] = best.1;
        }
    }
    let (coefs, rss) = least_squares(&basis_matrix(&data.x, &knots, degree), &data.y)
        .ok_or(Error::SingularDesign)?;
    let mut coefs: Vec<f64> = coefs.iter().copied().collect();
    for c in &mut coefs[degree + 1..] {
        if c.abs() <= domain.xi {
            *c = 2.0 * domain.xi * if *c < 0.0 { -1.0 } else { 1.0 };
        }
    }
    let dof = data.len().saturating_sub(coefs.len()).max(1);
    let sigma = (rss / dof as f64).sqrt().max(1e-8);
    SplineModel::new(degree, knots, coefs, sigma)
}

/// Output of [`sample_gfd`]: post-warm-up draws and their log densities.
#[derive(Debug, Clone, PartialEq)]
pub struct FiducialChain {
    pub draws: Vec<SplineModel>,
    /// [`log_gfd_density`] at each draw.
    pub log_density: Vec<f64>,
    pub acceptance_rate: f64,
    pub seed: u64,
}

impl FiducialChain {
    /// Draws of parameter `j` in `(t, alpha, sigma^2)` order.
    pub fn param_draws(&self, j: usize) -> Vec<f64> {
        self.draws.iter().map(|m| m.param_vector()[j]).collect()
    }

    pub fn mean(&self, j: usize) -> f64 {
        let d = self.param_draws(j);
        d.iter().sum::<f64>() / d.len() as f64
    }

    pub fn sd(&self, j: usize) -> f64 {
        let d = self.param_draws(j);
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        let ss: f64 = d.iter().map(|v| (v - mean).powi(2)).sum();
        (ss / (d.len().max(2) - 1) as f64).sqrt()
    }

    /// Equal-tailed interval from the empirical quantiles of parameter `j`.
    pub fn interval(&self, j: usize, level: f64) -> Result<crate::gfd::Interval> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::out_of_domain("level", level));
        }
        let mut d = self.param_draws(j);
        d.sort_by(f64::total_cmp);
        let tail = 0.5 * (1.0 - level);
        Ok(crate::gfd::Interval {
            lo: empirical_quantile(&d, tail),
            hi: empirical_quantile(&d, 1.0 - tail),
            level,
        })
    }
}

/// Linear interpolation between order statistics.
fn empirical_quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    } else {
        sorted[i]
    }
}

const TARGET_ACCEPTANCE: f64 = 0.3;
const ADAPT_WINDOW: usize = 50;

/// Random-walk proposal for one parameter block.
struct BlockProposal {
    chol: DMatrix<f64>,
    scale: f64,
    accepted: usize,
    proposed: usize,
}

impl BlockProposal {
    fn diagonal(sds: &[f64]) -> Self {
        Self {
            chol: DMatrix::from_diagonal(&DVector::from_column_slice(sds)),
            scale: 1.0,
            accepted: 0,
            proposed: 0,
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let z = DVector::from_fn(self.chol.nrows(), |_, _| rng.sample::<f64, _>(StandardNormal));
        &self.chol * z * self.scale
    }

    fn adapt_scale(&mut self) {
        let rate = self.accepted as f64 / self.proposed.max(1) as f64;
        self.scale = (self.scale * (2.0 * (rate - TARGET_ACCEPTANCE)).exp()).clamp(1e-4, 1e4);
        self.accepted = 0;
        self.proposed = 0;
    }

    /// Switches to the empirical covariance of `history` (rows are states).
    fn adopt_covariance(&mut self, history: &[Vec<f64>]) {
        let d = self.chol.nrows();
        let count = history.len() as f64;
        let mut mean = DVector::zeros(d);
        for h in history {
            mean += DVector::from_column_slice(h);
        }
        mean /= count;
        let mut cov = DMatrix::zeros(d, d);
        for h in history {
            let c = DVector::from_column_slice(h) - &mean;
            cov += &c * c.transpose();
        }
        cov /= count - 1.0;
        let jitter = 1e-10 * cov.diagonal().amax().max(1e-300);
        for i in 0..d {
            cov[(i, i)] += jitter;
        }
        if let Some(ch) = cov.cholesky() {
            self.chol = ch.l();
            self.scale = 2.38 / (d as f64).sqrt();
        }
    }
}

/// Metropolis sampler for the fiducial distribution of `(t, alpha, sigma)`.
///
/// Three blocks (knots, coefficients, `log sigma`) are updated in turn with
/// Gaussian random-walk proposals. The first 20% of `steps` is warm-up: block
/// scales are tuned towards 30% acceptance, and halfway through the warm-up
/// each block switches to the covariance of the draws seen so far. Proposals
/// leaving the admissible region are rejected. Only post-warm-up states are
/// returned, and the chain is a deterministic function of `seed`.
pub fn sample_gfd(
    data: &SplineData,
    domain: &SplineDomain,
    init: &SplineModel,
    steps: usize,
    seed: u64,
) -> Result<FiducialChain> {
    init.validate(domain).map_err(|e| Error::InitInvalid(e.to_string()))?;
    if steps == 0 {
        return Err(Error::InitInvalid("need at least one step".into()));
    }
    let degree = init.degree;
    let mut knots = init.knots.clone();
    let mut coefs = init.coefs.clone();
    let mut log_sigma = init.sigma.ln();
    let mut terms = KnotTerms::new(data, &knots, degree);
    let mut log_target = terms.log_density(&coefs, init.sigma);
    if !log_target.is_finite() {
        return Err(Error::InitInvalid("fiducial density vanishes at the initial state".into()));
    }

    let coef_sds: Vec<f64> = {
        let b = &terms.b_alpha;
        match (b.transpose() * b).try_inverse() {
            Some(inv) => inv.diagonal().iter().map(|v| init.sigma * v.abs().sqrt()).collect(),
            None => vec![0.1; coefs.len()],
        }
    };
    let mut blocks = [
        BlockProposal::diagonal(&vec![0.01 * domain.width(); knots.len()]),
        BlockProposal::diagonal(&coef_sds),
        BlockProposal::diagonal(&[1.0 / (2.0 * data.len() as f64).sqrt()]),
    ];

    let warmup = steps / 5;
    let mut history: [Vec<Vec<f64>>; 3] = Default::default();
    let mut rng = substream(seed, 0);
    let mut draws = Vec::with_capacity(steps - warmup);
    let mut log_density = Vec::with_capacity(steps - warmup);
    let (mut accepted, mut proposed) = (0usize, 0usize);

    for it in 0..steps {
        for (b, block) in blocks.iter_mut().enumerate() {
            let step = block.draw(&mut rng);
            let log_u = rng.random::<f64>().ln();
            let accept = match b {
                0 => {
                    let cand: Vec<f64> = knots.iter().zip(step.iter()).map(|(t, d)| t + d).collect();
                    if domain.admits_knots(&cand) && cand.windows(2).all(|w| w[0] < w[1]) {
                        let cand_terms = KnotTerms::new(data, &cand, degree);
                        let lp = cand_terms.log_density(&coefs, log_sigma.exp());
                        if log_u < lp - log_target {
                            knots = cand;
                            terms = cand_terms;
                            log_target = lp;
                            true
                        } else {
                            false
                        }
                    } else {
                        false
                    }
                }
                1 => {
                    let cand: Vec<f64> = coefs.iter().zip(step.iter()).map(|(a, d)| a + d).collect();
                    if cand[degree + 1..].iter().all(|c| c.abs() > domain.xi) {
                        let lp = terms.log_density(&cand, log_sigma.exp());
                        if log_u < lp - log_target {
                            coefs = cand;
                            log_target = lp;
                            true
                        } else {
                            false
                        }
                    } else {
                        false
                    }
                }
                _ => {
                    let cand = log_sigma + step[0];
                    let lp = terms.log_density(&coefs, cand.exp());
                    // density of log sigma picks up the factor sigma
                    if log_u < (lp + cand) - (log_target + log_sigma) {
                        log_sigma = cand;
                        log_target = lp;
                        true
                    } else {
                        false
                    }
                }
            };
            if it < warmup {
                block.proposed += 1;
                block.accepted += accept as usize;
            } else {
                proposed += 1;
                accepted += accept as usize;
            }
        }

        if it < warmup {
            if it >= warmup / 4 {
                history[0].push(knots.clone());
                history[1].push(coefs.clone());
                history[2].push(vec![log_sigma]);
            }
            if (it + 1) % ADAPT_WINDOW == 0 {
                blocks.iter_mut().for_each(BlockProposal::adapt_scale);
            }
            if it + 1 == warmup / 2 && history[0].len() >= 2 * ADAPT_WINDOW {
                for (block, h) in blocks.iter_mut().zip(&history) {
                    block.adopt_covariance(h);
                }
            }
        } else {
            // Stored densities come from the same evaluation path as
            // `log_gfd_density`, so re-evaluation reproduces them exactly.
            draws.push(SplineModel {
                degree,
                knots: knots.clone(),
                coefs: coefs.clone(),
                sigma: log_sigma.exp(),
            });
            log_density.push(log_target);
        }
    }

    Ok(FiducialChain {
        draws,
        log_density,
        acceptance_rate: accepted as f64 / proposed.max(1) as f64,
        seed,
    })
}
