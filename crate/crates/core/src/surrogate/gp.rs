//! Constant-mean Gaussian process with a Mallows kernel.
//!
//! For each candidate decay rate the mean and process variance are profiled
//! out in closed form (generalized least squares), and the rate with the
//! largest profile likelihood is kept.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::perm::{self, Permutation};

use super::kernel::{distance_matrix, factor, kernel_from_distances, log_det_of, MallowsKernelParams};

pub const DEFAULT_NUGGET: f64 = 1e-8;
pub const MAX_NUGGET: f64 = 1e-4;

/// 25 log-spaced decay rates on `[1e-3, 1e1]`.
pub fn default_theta_grid() -> Vec<f64> {
    let (lo, hi, k) = (-3.0f64, 1.0f64, 25);
    (0..k)
        .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (k - 1) as f64))
        .collect()
}

#[derive(Clone, Debug)]
pub struct GpModel {
    pub inputs: Vec<Permutation>,
    pub outputs: Vec<f64>,
    pub mu: f64,
    pub sigma2: f64,
    pub params: MallowsKernelParams,
    /// Profile log-likelihood at the selected parameters (up to a constant).
    pub log_likelihood: f64,
    chol: Cholesky<f64, Dyn>,
    /// `R^{-1} (y - mu 1)`.
    weights: DVector<f64>,
}

struct Profile {
    mu: f64,
    sigma2: f64,
    log_likelihood: f64,
    weights: DVector<f64>,
}

fn profile(chol: &Cholesky<f64, Dyn>, y: &DVector<f64>) -> Profile {
    let n = y.len();
    let ones = DVector::from_element(n, 1.0);
    let r_inv_one = chol.solve(&ones);
    let r_inv_y = chol.solve(y);
    let mu = ones.dot(&r_inv_y) / ones.dot(&r_inv_one);
    let resid = y - DVector::from_element(n, mu);
    let weights = chol.solve(&resid);
    let sigma2 = (resid.dot(&weights) / n as f64).max(0.0);
    let log_likelihood = -0.5 * (n as f64 * sigma2.ln() + log_det_of(chol));
    Profile {
        mu,
        sigma2,
        log_likelihood,
        weights,
    }
}

/// Factorizes the kernel matrix, raising the nugget tenfold from
/// [`DEFAULT_NUGGET`] up to [`MAX_NUGGET`] until it succeeds.
fn factor_with_nugget(distances: &DMatrix<f64>, theta: f64) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let mut nugget = DEFAULT_NUGGET;
    loop {
        match factor(kernel_from_distances(distances, MallowsKernelParams::new(theta, nugget))) {
            Ok(chol) => return Ok((chol, nugget)),
            Err(e) if nugget >= MAX_NUGGET => return Err(e),
            Err(_) => nugget *= 10.0,
        }
    }
}

/// Fits the GP, selecting `theta` from `theta_grid` by profile likelihood.
pub fn gp_fit(inputs: &[Permutation], outputs: &[f64], theta_grid: &[f64]) -> Result<GpModel> {
    if inputs.len() < 2 || inputs.len() != outputs.len() {
        return Err(Error::Domain(format!(
            "need at least 2 paired inputs and outputs, got {} and {}",
            inputs.len(),
            outputs.len()
        )));
    }
    if theta_grid.is_empty() || theta_grid.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::Domain("theta grid must be non-empty and positive".into()));
    }
    let distances = distance_matrix(inputs);
    let y = DVector::from_column_slice(outputs);

    let mut best: Option<(Profile, Cholesky<f64, Dyn>, MallowsKernelParams)> = None;
    let mut last_err = None;
    for &theta in theta_grid {
        let (chol, nugget) = match factor_with_nugget(&distances, theta) {
            Ok(f) => f,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let prof = profile(&chol, &y);
        let better = match &best {
            None => true,
            Some((b, _, _)) => prof.log_likelihood > b.log_likelihood,
        };
        if better {
            best = Some((prof, chol, MallowsKernelParams::new(theta, nugget)));
        }
    }
    let (prof, chol, params) = best.ok_or_else(|| {
        last_err.unwrap_or_else(|| Error::Conditioning("no decay rate could be fitted".into()))
    })?;
    Ok(GpModel {
        inputs: inputs.to_vec(),
        outputs: outputs.to_vec(),
        mu: prof.mu,
        sigma2: prof.sigma2,
        params,
        log_likelihood: prof.log_likelihood,
        chol,
        weights: prof.weights,
    })
}

impl GpModel {
    fn cross_kernel(&self, x: &Permutation) -> DVector<f64> {
        DVector::from_iterator(
            self.inputs.len(),
            self.inputs
                .iter()
                .map(|xi| (-self.params.theta * perm::distance(x, xi) as f64).exp()),
        )
    }

    /// Kriging mean and variance at `x`.
    pub fn predict(&self, x: &Permutation) -> (f64, f64) {
        let k = self.cross_kernel(x);
        let mean = self.mu + k.dot(&self.weights);
        let v = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&k)
            .expect("Cholesky factor has a positive diagonal");
        let variance = (self.sigma2 * (1.0 - v.norm_squared())).max(0.0);
        (mean, variance)
    }

    pub fn n(&self) -> usize {
        self.inputs.len()
    }
}

pub fn gp_predict(model: &GpModel, x: &Permutation) -> (f64, f64) {
    model.predict(x)
}

/// Expected improvement below `best_y` for a Gaussian prediction with the
/// given mean and standard deviation.
pub fn expected_improvement_from(mean: f64, sd: f64, best_y: f64) -> f64 {
    let gap = best_y - mean;
    if !(sd > 0.0) {
        return gap.max(0.0);
    }
    let z = gap / sd;
    let normal = Normal::standard();
    (gap * normal.cdf(z) + sd * normal.pdf(z)).max(0.0)
}

/// Expected improvement at `x` under `model`, minimization convention.
pub fn expected_improvement(model: &GpModel, x: &Permutation, best_y: f64) -> f64 {
    let (mean, var) = model.predict(x);
    expected_improvement_from(mean, var.sqrt(), best_y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anneal::seeded_rng;
    use crate::perm::random_permutation;
    use proptest::prelude::*;

    fn training(m: usize, n: usize, seed: u64) -> (Vec<Permutation>, Vec<f64>) {
        let mut rng = seeded_rng(seed);
        let mut xs: Vec<Permutation> = Vec::new();
        while xs.len() < n {
            let x = random_permutation(m, &mut rng).unwrap();
            if !xs.contains(&x) {
                xs.push(x);
            }
        }
        let ys = xs
            .iter()
            .map(|x| (0..m).map(|r| (r * x.at(r)) as f64).sum::<f64>().sin() * 3.0)
            .collect();
        (xs, ys)
    }

    #[test]
    fn grid_shape() {
        let g = default_theta_grid();
        assert_eq!(g.len(), 25);
        assert!((g[0] - 1e-3).abs() < 1e-15);
        assert!((g[24] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn constant_outputs() {
        let (xs, _) = training(5, 8, 1);
        let ys = vec![2.5; 8];
        let model = gp_fit(&xs, &ys, &default_theta_grid()).unwrap();
        assert!((model.mu - 2.5).abs() < 1e-9);
        assert!(model.sigma2 < 1e-12);
    }

    #[test]
    fn interpolates_training_points() {
        let (xs, ys) = training(6, 12, 2);
        let model = gp_fit(&xs, &ys, &default_theta_grid()).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            let (mean, var) = model.predict(x);
            assert!((mean - y).abs() < 1e-6, "{mean} vs {y}");
            assert!(var < 1e-6 * model.sigma2.max(1.0));
        }
    }

    #[test]
    fn far_points_revert_to_the_mean() {
        let (xs, ys) = training(6, 6, 3);
        // refit at a large fixed decay so correlations vanish
        let model = gp_fit(&xs, &ys, &[20.0]).unwrap();
        let mut rng = seeded_rng(4);
        let x = loop {
            let x = random_permutation(6, &mut rng).unwrap();
            if !xs.contains(&x) {
                break x;
            }
        };
        let (mean, var) = model.predict(&x);
        assert!((mean - model.mu).abs() < 1e-6);
        assert!((var - model.sigma2).abs() < 1e-6 * model.sigma2.max(1.0));
    }

    /// Dense Gaussian elimination with partial pivoting.
    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
                .unwrap();
            a.swap(col, piv);
            b.swap(col, piv);
            for row in col + 1..n {
                let f = a[row][col] / a[col][col];
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
            x[i] = (b[i] - s) / a[i][i];
        }
        x
    }

    #[test]
    fn predictions_match_dense_solve() {
        let (xs, ys) = training(6, 14, 5);
        let model = gp_fit(&xs, &ys, &[0.3]).unwrap();
        let theta = model.params.theta;
        let n = xs.len();
        let r: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let k = (-theta * perm::distance(&xs[i], &xs[j]) as f64).exp();
                        if i == j {
                            k + model.params.nugget
                        } else {
                            k
                        }
                    })
                    .collect()
            })
            .collect();
        let resid: Vec<f64> = ys.iter().map(|y| y - model.mu).collect();
        let w = dense_solve(r.clone(), resid);
        let mut rng = seeded_rng(6);
        for _ in 0..20 {
            let x = random_permutation(6, &mut rng).unwrap();
            let k: Vec<f64> = xs
                .iter()
                .map(|xi| (-theta * perm::distance(&x, xi) as f64).exp())
                .collect();
            let mean = model.mu + k.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
            let rk = dense_solve(r.clone(), k.clone());
            let var = (model.sigma2 * (1.0 - k.iter().zip(&rk).map(|(a, b)| a * b).sum::<f64>())).max(0.0);
            let (pm, pv) = model.predict(&x);
            assert!((pm - mean).abs() <= 1e-8 * mean.abs().max(1.0));
            assert!((pv - var).abs() <= 1e-8 * var.abs().max(model.sigma2));
        }
    }

    #[test]
    fn ei_edge_cases() {
        assert_eq!(expected_improvement_from(5.0, 0.0, 4.0), 0.0);
        assert_eq!(expected_improvement_from(3.0, 0.0, 4.0), 1.0);
    }

    proptest! {
        #[test]
        fn ei_nonnegative_and_increasing_in_sd(
            mean in -10.0f64..10.0, best in -10.0f64..10.0,
            sd in 0.01f64..5.0, extra in 0.01f64..5.0,
        ) {
            let a = expected_improvement_from(mean, sd, best);
            let b = expected_improvement_from(mean, sd + extra, best);
            prop_assert!(a >= 0.0);
            prop_assert!(b >= a - 1e-12);
        }
    }
}
