//! Mallows-kernel Gaussian-process surrogate and Bayesian optimization over
//! permutations, with a travelling-salesman test objective.

mod bo;
mod gp;
mod kernel;
mod tsp;

pub use bo::{holdout_rmse, initial_design, rep_seed, run_bo, run_bo_reps, BoConfig, BoTrace, InitMode};
pub use gp::{
    default_theta_grid, expected_improvement, expected_improvement_from, gp_fit, gp_predict, GpModel,
    DEFAULT_NUGGET, MAX_NUGGET,
};
pub use kernel::{distance_matrix, kernel_matrix, log_det, mallows_kernel, MallowsKernelParams};
pub use tsp::{tsp_objective, TspInstance};
