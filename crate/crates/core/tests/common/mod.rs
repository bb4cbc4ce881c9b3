#![allow(dead_code)]

use gfi_core::spline::{SplineData, SplineModel};
use nalgebra::DMatrix;

/// Determinant by Laplace expansion along the first row.
pub fn cofactor_det(m: &DMatrix<f64>) -> f64 {
    let k = m.nrows();
    if k == 1 {
        return m[(0, 0)];
    }
    (0..k)
        .map(|j| {
            let minor = m.clone().remove_row(0).remove_column(j);
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * m[(0, j)] * cofactor_det(&minor)
        })
        .sum()
}

/// Spline Jacobian from explicit loops and [`cofactor_det`].
pub fn naive_spline_jacobian(data: &SplineData, model: &SplineModel) -> f64 {
    let p = model.degree();
    let n = data.len();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for j in 0..=p {
        cols.push(data.x().iter().map(|x| x.powi(j as i32)).collect());
    }
    for &t in model.knots() {
        cols.push(data.x().iter().map(|&x| if x > t { (x - t).powi(p as i32) } else { 0.0 }).collect());
    }
    for &t in model.knots() {
        cols.push(data.x().iter().map(|&x| if x > t { (x - t).powi(p as i32 - 1) } else { 0.0 }).collect());
    }
    cols.push(data.y().to_vec());
    let k = cols.len();
    let gram = DMatrix::from_fn(k, k, |a, b| {
        cols[a].iter().zip(&cols[b]).map(|(u, v)| u * v).sum::<f64>() / n as f64
    });
    let det = cofactor_det(&gram).max(0.0);
    let prefactor = (p as f64).powi(model.kappa() as i32) / model.sigma()
        * model.knot_coefs().iter().map(|c| c.abs()).product::<f64>();
    prefactor * det.sqrt()
}

/// A random admissible model on `[0, 1]` and data at distinct design points.
pub fn random_fixture<R: rand::Rng>(rng: &mut R, degree: usize, kappa: usize, n: usize) -> (SplineData, SplineModel) {
    let spacing = 0.8 / kappa as f64;
    let knots: Vec<f64> = (0..kappa).map(|k| 0.1 + spacing * (k as f64 + rng.random_range(0.3..0.7))).collect();
    let mut coefs: Vec<f64> = (0..degree + kappa + 1).map(|_| rng.random_range(-2.0..2.0)).collect();
    for c in &mut coefs[degree + 1..] {
        *c = if *c < 0.0 { *c - 0.5 } else { *c + 0.5 };
    }
    let model = SplineModel::new(degree, knots, coefs, rng.random_range(0.2..1.5)).unwrap();
    let x: Vec<f64> = (0..n).map(|i| (i as f64 + rng.random_range(0.1..0.9)) / n as f64).collect();
    let y: Vec<f64> = x.iter().map(|&xi| model.eval(xi) + rng.random_range(-1.0..1.0)).collect();
    (SplineData::new(x, y).unwrap(), model)
}
