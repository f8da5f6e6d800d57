use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};
use crate::perm::{self, Permutation};

/// Mallows kernel `K(x, y) = exp(-theta k(x, y))` with a diagonal nugget.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MallowsKernelParams {
    pub theta: f64,
    pub nugget: f64,
}

impl MallowsKernelParams {
    pub fn new(theta: f64, nugget: f64) -> Self {
        Self { theta, nugget }
    }
}

pub fn mallows_kernel(x: &Permutation, y: &Permutation, theta: f64) -> f64 {
    (-theta * perm::distance(x, y) as f64).exp()
}

/// Kendall distance matrix of `design` (symmetric, zero diagonal).
pub fn distance_matrix(design: &[Permutation]) -> DMatrix<f64> {
    let n = design.len();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let u = perm::distance(&design[i], &design[j]) as f64;
            d[(i, j)] = u;
            d[(j, i)] = u;
        }
    }
    d
}

pub(crate) fn kernel_from_distances(distances: &DMatrix<f64>, params: MallowsKernelParams) -> DMatrix<f64> {
    let mut k = distances.map(|u| (-params.theta * u).exp());
    for i in 0..k.nrows() {
        k[(i, i)] += params.nugget;
    }
    k
}

pub fn kernel_matrix(design: &[Permutation], params: MallowsKernelParams) -> DMatrix<f64> {
    kernel_from_distances(&distance_matrix(design), params)
}

/// Smallest pivot (squared Cholesky diagonal entry) accepted as positive.
const MIN_PIVOT: f64 = 1e-14;

/// Cholesky factorization that also rejects numerically zero pivots.
pub(crate) fn factor(matrix: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    let chol = Cholesky::new(matrix)
        .ok_or_else(|| Error::Conditioning("Cholesky factorization failed".into()))?;
    let l = chol.l_dirty();
    if let Some(i) = (0..l.nrows()).find(|&i| {
        let d = l[(i, i)];
        !(d.is_finite() && d * d > MIN_PIVOT)
    }) {
        return Err(Error::Conditioning(format!("pivot {i} is numerically zero")));
    }
    Ok(chol)
}

pub(crate) fn log_det_of(chol: &Cholesky<f64, Dyn>) -> f64 {
    let l = chol.l_dirty();
    2.0 * (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>()
}

/// `log det` of the kernel matrix via its Cholesky factor.
pub fn log_det(design: &[Permutation], params: MallowsKernelParams) -> Result<f64> {
    Ok(log_det_of(&factor(kernel_matrix(design, params))?))
}
