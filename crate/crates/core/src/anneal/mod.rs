//! Simulated-annealing construction of space-filling designs.
//!
//! [`run_fsa_kd`] searches foldover designs through their representative half,
//! with moves that shift from global replacement to local swaps as the
//! temperature falls. [`ordinary_sa`] runs the same schedule over unrestricted
//! designs and [`srs_design`] is the unoptimized baseline.

mod moves;
mod ordinary;
mod state;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::criteria::{distance_histogram, summarize, CriteriaSummary, Design, Objective};
use crate::error::{Error, Result};
use crate::foldover::{expand, HalfDesign};
use crate::perm::{canonical_key, factorial, foldover, random_permutation};

pub use moves::{accept, incremental_distance, propose_move, swap_pair_set, Move, MoveKind};
pub use ordinary::{ordinary_sa, srs_design};
pub use state::{AnnealState, Candidate, OpCounters, UpdateMode};

/// Generator used for every seeded run.
pub type SearchRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SearchRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnnealConfig {
    pub m: usize,
    pub n: usize,
    pub t0: f64,
    pub t_min: f64,
    pub alpha: f64,
    pub max_iterations: u64,
    pub lambda: f64,
    pub seed: u64,
    pub update_mode: UpdateMode,
    /// Wall-clock cap on the search loop, if any.
    pub time_limit: Option<Duration>,
    pub record_trace: bool,
}

impl AnnealConfig {
    pub fn new(m: usize, n: usize, seed: u64) -> Self {
        Self {
            m,
            n,
            t0: 1.0,
            t_min: 1e-8,
            alpha: 0.997,
            max_iterations: 6000,
            lambda: 0.5,
            seed,
            update_mode: UpdateMode::Incremental,
            time_limit: None,
            record_trace: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.m < 3 {
            return Err(Error::Domain(format!("m must be at least 3, got {}", self.m)));
        }
        if !(self.t0 > 0.0 && self.t_min >= 0.0) {
            return Err(Error::Domain("temperatures must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Domain(format!(
                "cooling factor must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Domain(format!(
                "lambda must lie in [0, 1], got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRecord {
    pub iteration: u64,
    pub temperature: f64,
    pub phi: f64,
    pub best_phi: f64,
    pub best_k_min: u32,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct RunStats {
    /// Proposed moves, including those rejected for repeating a run.
    pub updates: u64,
    pub accepted: u64,
    pub invalid: u64,
    pub elapsed: Duration,
}

#[derive(Clone, Debug)]
pub struct AnnealOutcome {
    pub design: Design,
    /// Representative half of `design` for foldover searches.
    pub half: Option<HalfDesign>,
    pub summary: CriteriaSummary,
    pub best_phi: f64,
    pub trace: Vec<TraceRecord>,
    pub stats: RunStats,
    pub counters: OpCounters,
}

/// Draws `h` representatives one at a time, redrawing any that repeats a
/// representative or a representative's reverse. Gives up after `100 h`
/// consecutive failed draws.
pub fn initial_half<R: Rng + ?Sized>(m: usize, h: usize, rng: &mut R) -> Result<HalfDesign> {
    let mut keys = BTreeSet::new();
    let mut reps = Vec::with_capacity(h);
    let mut failures = 0usize;
    while reps.len() < h {
        let x = random_permutation(m, rng)?;
        let key = canonical_key(&x);
        if keys.contains(&key) {
            failures += 1;
            if failures >= 100 * h {
                return Err(Error::Infeasible(format!(
                    "no valid initial half-design of size {h} for m = {m} after {failures} draws"
                )));
            }
            continue;
        }
        failures = 0;
        keys.insert(key);
        keys.insert(canonical_key(&foldover(&x)));
        reps.push(x);
    }
    HalfDesign::new(reps)
}

pub(crate) fn check_capacity(m: usize, n: usize) -> Result<()> {
    if let Some(total) = factorial(m) {
        if n as u128 > total {
            return Err(Error::Infeasible(format!(
                "{n} distinct runs requested but only {total} orders exist for m = {m}"
            )));
        }
    }
    Ok(())
}

/// Foldover simulated annealing with the generator seeded from `cfg.seed`.
pub fn fsa_kd(cfg: &AnnealConfig) -> Result<AnnealOutcome> {
    run_fsa_kd(cfg, &mut seeded_rng(cfg.seed))
}

/// Foldover simulated annealing over the representative half-design.
pub fn run_fsa_kd<R: Rng + ?Sized>(cfg: &AnnealConfig, rng: &mut R) -> Result<AnnealOutcome> {
    let start = Instant::now();
    cfg.validate()?;
    if cfg.n % 2 != 0 {
        return Err(Error::Domain(format!(
            "foldover construction needs an even run size, got n = {}",
            cfg.n
        )));
    }
    let h = cfg.n / 2;
    if h < 2 {
        return Err(Error::Domain(format!("need n >= 4, got n = {}", cfg.n)));
    }
    check_capacity(cfg.m, cfg.n)?;
    let objective = Objective::foldover(cfg.n, cfg.m, cfg.lambda)?;
    if objective.is_degenerate() && cfg.lambda != 0.0 {
        log::warn!("m = 3: minimum-distance term is constant, lambda = {} ignored", cfg.lambda);
    }
    let mode = cfg.update_mode;

    let mut state = AnnealState::new(initial_half(cfg.m, h, rng)?);
    let mut phi = state.phi(&objective);
    let mut best_reps = state.reps().to_vec();
    let mut best_phi = phi;
    let mut best_k_min = state.k_min();
    let mut temperature = cfg.t0;
    let mut stats = RunStats::default();
    let mut trace = Vec::new();

    for iteration in 1..=cfg.max_iterations {
        if temperature < cfg.t_min {
            break;
        }
        if cfg.time_limit.is_some_and(|limit| start.elapsed() >= limit) {
            break;
        }
        let mv = propose_move(state.reps(), temperature, cfg.t0, rng);
        stats.updates += 1;
        match state.evaluate(&mv, mode) {
            None => stats.invalid += 1,
            Some(cand) => {
                let delta = objective.foldover_delta(cand.delta_k_min, cand.delta_g, h);
                if accept(delta, temperature, rng) {
                    state.commit(cand);
                    stats.accepted += 1;
                    phi = state.phi(&objective);
                    if phi > best_phi {
                        best_phi = phi;
                        best_k_min = state.k_min();
                        best_reps.clone_from_slice(state.reps());
                    }
                }
            }
        }
        if cfg.record_trace {
            trace.push(TraceRecord {
                iteration,
                temperature,
                phi,
                best_phi,
                best_k_min,
            });
        }
        temperature *= cfg.alpha;
    }

    let half = HalfDesign::from_valid(best_reps);
    let design = expand(&half);
    let summary = summarize(&design, cfg.lambda)?;
    stats.elapsed = start.elapsed();
    Ok(AnnealOutcome {
        design,
        half: Some(half),
        summary,
        best_phi,
        trace,
        stats,
        counters: state.counters,
    })
}

/// Result of the odd-run extension.
#[derive(Clone, Debug)]
pub struct OddOutcome {
    pub design: Design,
    /// Index of the row removed from the parent foldover design.
    pub deleted_row: usize,
    pub parent: AnnealOutcome,
    pub summary: CriteriaSummary,
}

/// Odd run sizes: anneal an `(n+1)`-run foldover design, then drop the row
/// whose removal leaves the largest `k_min` (ties: smaller `k_m2`, then the
/// lower row index).
pub fn odd_run_design<R: Rng + ?Sized>(cfg: &AnnealConfig, rng: &mut R) -> Result<OddOutcome> {
    let start = Instant::now();
    if cfg.n % 2 == 0 {
        return Err(Error::Domain(format!(
            "odd-run construction needs an odd run size, got n = {}",
            cfg.n
        )));
    }
    check_capacity(cfg.m, cfg.n + 1)?;
    let parent_cfg = AnnealConfig {
        n: cfg.n + 1,
        ..cfg.clone()
    };
    let parent = run_fsa_kd(&parent_cfg, rng)?;
    let (deleted_row, design) = best_deletion(&parent.design)?;
    let summary = summarize(&design, cfg.lambda)?;
    let mut parent = parent;
    parent.stats.elapsed = start.elapsed();
    Ok(OddOutcome {
        design,
        deleted_row,
        parent,
        summary,
    })
}

/// Leave-one-out search used by [`odd_run_design`].
pub fn best_deletion(parent: &Design) -> Result<(usize, Design)> {
    let mut best: Option<(u32, crate::criteria::Rational, usize, Design)> = None;
    for drop in 0..parent.n() {
        let runs = parent
            .runs()
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != drop)
            .map(|(_, x)| x.clone())
            .collect();
        let sub = Design::new(runs)?;
        let hist = distance_histogram(&sub);
        let (k_min, k_m2) = (hist.k_min()?, hist.k_m2()?);
        let better = match &best {
            None => true,
            Some((bk, bm, _, _)) => k_min > *bk || (k_min == *bk && k_m2 < *bm),
        };
        if better {
            best = Some((k_min, k_m2, drop, sub));
        }
    }
    let (_, _, drop, design) = best.expect("parent design has rows");
    Ok((drop, design))
}
