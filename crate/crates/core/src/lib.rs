//! Space-filling order-of-addition designs under Kendall tau distance
//! criteria.
//!
//! The crate builds foldover designs by simulated annealing over the
//! representative half ([`anneal`]), evaluates any design against the exact
//! distance-moment criteria and their model-based identities ([`criteria`]),
//! and uses the designs to seed Mallows-kernel Gaussian-process Bayesian
//! optimization over permutations ([`surrogate`]).

pub mod anneal;
pub mod bench;
pub mod criteria;
pub mod error;
pub mod foldover;
pub mod io;
pub mod perm;
pub mod surrogate;

pub use criteria::{Design, DistanceHistogram, Rational};
pub use error::{Error, Result};
pub use foldover::HalfDesign;
pub use perm::Permutation;
