use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::anneal::{odd_run_design, run_fsa_kd, seeded_rng, srs_design, AnnealConfig};
use crate::error::{Error, Result};
use crate::perm::{factorial, random_permutation, Permutation};

use super::gp::{default_theta_grid, expected_improvement, gp_fit, GpModel};
use super::tsp::{tsp_objective, TspInstance};

/// How the initial evaluations are chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMode {
    FsaKd,
    Srs,
}

impl fmt::Display for InitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitMode::FsaKd => "fsa-kd",
            InitMode::Srs => "srs",
        })
    }
}

impl FromStr for InitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fsa-kd" => Ok(InitMode::FsaKd),
            "srs" => Ok(InitMode::Srs),
            _ => Err(Error::Domain(format!("unknown init mode {s:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BoConfig {
    pub instance: TspInstance,
    pub n_init: usize,
    pub n_seq: usize,
    pub init: InitMode,
    pub restarts: usize,
    pub seed: u64,
    pub theta_grid: Vec<f64>,
}

impl BoConfig {
    /// 20 initial and 60 sequential evaluations, 10 local-search restarts.
    pub fn new(instance: TspInstance, init: InitMode, seed: u64) -> Self {
        Self {
            instance,
            n_init: 20,
            n_seq: 60,
            init,
            restarts: 10,
            seed,
            theta_grid: default_theta_grid(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BoTrace {
    /// Evaluated points in order: initial design, then sequential picks.
    pub evaluated: Vec<Permutation>,
    pub values: Vec<f64>,
    /// Running minimum of `values`.
    pub best_so_far: Vec<f64>,
}

/// Initial design of `n` distinct permutations for the given mode.
pub fn initial_design<R: Rng + ?Sized>(mode: InitMode, m: usize, n: usize, rng: &mut R) -> Result<Vec<Permutation>> {
    let design = match mode {
        InitMode::Srs => srs_design(n, m, rng)?,
        InitMode::FsaKd => {
            let mut cfg = AnnealConfig::new(m, n, 0);
            cfg.record_trace = false;
            if n % 2 == 0 {
                run_fsa_kd(&cfg, rng)?.design
            } else {
                odd_run_design(&cfg, rng)?.design
            }
        }
    };
    Ok(design.into_runs())
}

fn ei_local_search<R: Rng + ?Sized>(
    model: &GpModel,
    best_y: f64,
    m: usize,
    restarts: usize,
    rng: &mut R,
) -> Result<(Permutation, f64)> {
    let mut best: Option<(Permutation, f64)> = None;
    for _ in 0..restarts.max(1) {
        let mut x = random_permutation(m, rng)?;
        let mut ei = expected_improvement(model, &x, best_y);
        loop {
            let step = best_neighbor(&x, |y| Some(expected_improvement(model, y, best_y)));
            match step {
                Some((y, v)) if v > ei => {
                    x = y;
                    ei = v;
                }
                _ => break,
            }
        }
        if best.as_ref().is_none_or(|(_, b)| ei > *b) {
            best = Some((x, ei));
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Highest-scoring swap neighbor of `x`; `score` returns `None` to skip one.
fn best_neighbor(x: &Permutation, mut score: impl FnMut(&Permutation) -> Option<f64>) -> Option<(Permutation, f64)> {
    let m = x.m();
    let mut best: Option<(Permutation, f64)> = None;
    for s in 0..m {
        for t in s + 1..m {
            let y = x.swapped(s, t);
            if let Some(v) = score(&y) {
                if best.as_ref().is_none_or(|(_, b)| v > *b) {
                    best = Some((y, v));
                }
            }
        }
    }
    best
}

/// Bayesian optimization of a TSP tour with a Mallows-kernel GP and expected
/// improvement.
pub fn run_bo(cfg: &BoConfig) -> Result<BoTrace> {
    let m = cfg.instance.m();
    let total = cfg.n_init + cfg.n_seq;
    if cfg.n_init < 2 {
        return Err(Error::Domain(format!("need n_init >= 2, got {}", cfg.n_init)));
    }
    if factorial(m).is_some_and(|f| total as u128 > f) {
        return Err(Error::Domain(format!(
            "{total} distinct evaluations requested but m = {m} has only {} orders",
            factorial(m).unwrap_or_default()
        )));
    }
    let mut rng = seeded_rng(cfg.seed);
    let mut evaluated = initial_design(cfg.init, m, cfg.n_init, &mut rng)?;
    let mut seen: HashSet<Permutation> = evaluated.iter().cloned().collect();
    let mut values = evaluated
        .iter()
        .map(|x| tsp_objective(x, &cfg.instance))
        .collect::<Result<Vec<_>>>()?;

    for _ in 0..cfg.n_seq {
        let model = gp_fit(&evaluated, &values, &cfg.theta_grid)?;
        let best_y = values.iter().copied().fold(f64::INFINITY, f64::min);
        let (mut x, _) = ei_local_search(&model, best_y, m, cfg.restarts, &mut rng)?;
        if seen.contains(&x) {
            let score = |y: &Permutation| (!seen.contains(y)).then(|| expected_improvement(&model, y, best_y));
            x = match best_neighbor(&x, score) {
                Some((y, _)) => y,
                None => loop {
                    let y = random_permutation(m, &mut rng)?;
                    if !seen.contains(&y) {
                        break y;
                    }
                },
            };
        }
        values.push(tsp_objective(&x, &cfg.instance)?);
        seen.insert(x.clone());
        evaluated.push(x);
    }

    let best_so_far = values
        .iter()
        .scan(f64::INFINITY, |b, &v| {
            *b = b.min(v);
            Some(*b)
        })
        .collect();
    Ok(BoTrace {
        evaluated,
        values,
        best_so_far,
    })
}

/// Seed of replication `rep` derived from a base seed.
pub fn rep_seed(base: u64, rep: usize) -> u64 {
    base.wrapping_add((rep as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Independent replications of [`run_bo`], run in parallel, in rep order.
pub fn run_bo_reps(cfg: &BoConfig, reps: usize) -> Result<Vec<BoTrace>> {
    (0..reps)
        .into_par_iter()
        .map(|rep| {
            run_bo(&BoConfig {
                seed: rep_seed(cfg.seed, rep),
                ..cfg.clone()
            })
        })
        .collect()
}

/// Root-mean-square prediction error of `model` on `test` under the tour cost.
pub fn holdout_rmse(model: &GpModel, test: &[Permutation], inst: &TspInstance) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::Domain("empty test set".into()));
    }
    let mut sse = 0.0;
    for x in test {
        let err = model.predict(x).0 - tsp_objective(x, inst)?;
        sse += err * err;
    }
    Ok((sse / test.len() as f64).sqrt())
}
