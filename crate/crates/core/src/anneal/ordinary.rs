use std::collections::HashSet;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::criteria::{summarize, Bounds, Design, Objective, Rational};
use crate::error::{Error, Result};
use crate::perm::{self, all_permutations, factorial, random_permutation, Permutation};

use super::moves::{accept, propose_move};
use super::{check_capacity, AnnealConfig, AnnealOutcome, OpCounters, RunStats, TraceRecord};

/// `n` distinct permutations drawn uniformly without replacement.
pub fn srs_design<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<Design> {
    if n < 2 {
        return Err(Error::Domain(format!("need n >= 2, got {n}")));
    }
    check_capacity(m, n)?;
    let total = factorial(m);
    let runs = match total {
        // dense request on a small space: shuffle the full design
        Some(total) if m <= 8 && 2 * n as u128 > total => {
            let mut all = all_permutations(m)?;
            let (picked, _) = all.partial_shuffle(rng, n);
            picked.to_vec()
        }
        _ => {
            let mut seen = HashSet::with_capacity(n);
            let mut runs = Vec::with_capacity(n);
            while runs.len() < n {
                let x = random_permutation(m, rng)?;
                if seen.insert(x.clone()) {
                    runs.push(x);
                }
            }
            runs
        }
    };
    Design::with_options(runs, true)
}

struct DesignStats {
    k_min: u32,
    square_sum: i128,
}

fn design_stats(runs: &[Permutation], counters: &mut OpCounters) -> Option<DesignStats> {
    let mut k_min = u32::MAX;
    let mut square_sum = 0i128;
    for i in 0..runs.len() {
        for j in i + 1..runs.len() {
            let u = perm::distance(&runs[i], &runs[j]);
            if u == 0 {
                return None;
            }
            k_min = k_min.min(u);
            square_sum += (u * u) as i128;
        }
    }
    let n = runs.len() as u64;
    counters.full_distances += n * (n - 1) / 2;
    Some(DesignStats { k_min, square_sum })
}

/// Simulated annealing over unrestricted `n`-run designs of distinct runs,
/// recomputing every pairwise distance for each candidate. Uses the same
/// moves and schedule as the foldover search and the foldover normalizers of
/// `(n, m)` as fixed scalars in the objective.
pub fn ordinary_sa<R: Rng + ?Sized>(cfg: &AnnealConfig, rng: &mut R) -> Result<AnnealOutcome> {
    let start = Instant::now();
    cfg.validate()?;
    let n = cfg.n;
    let objective = Objective::new(Bounds::normalizers(n, cfg.m), cfg.lambda)?;
    let pairs = (n * (n - 1) / 2) as i128;
    let k_m2 = |s: &DesignStats| Rational::new(s.square_sum, pairs);

    let mut counters = OpCounters::default();
    let mut runs = srs_design(n, cfg.m, rng)?.into_runs();
    let mut current = design_stats(&runs, &mut counters).expect("initial runs are distinct");
    let mut phi = objective.value(current.k_min, k_m2(&current));
    let mut best_runs = runs.clone();
    let mut best_phi = phi;
    let mut best_k_min = current.k_min;
    let mut temperature = cfg.t0;
    let mut stats = RunStats::default();
    let mut trace = Vec::new();
    let mut candidate = runs.clone();

    for iteration in 1..=cfg.max_iterations {
        if temperature < cfg.t_min {
            break;
        }
        if cfg.time_limit.is_some_and(|limit| start.elapsed() >= limit) {
            break;
        }
        let mv = propose_move(&runs, temperature, cfg.t0, rng);
        stats.updates += 1;
        candidate.clone_from_slice(&runs);
        candidate[mv.row] = mv.candidate;
        match design_stats(&candidate, &mut counters) {
            None => stats.invalid += 1,
            Some(next) => {
                let next_phi = objective.value(next.k_min, k_m2(&next));
                if accept(next_phi - phi, temperature, rng) {
                    std::mem::swap(&mut runs, &mut candidate);
                    current = next;
                    phi = next_phi;
                    stats.accepted += 1;
                    if phi > best_phi {
                        best_phi = phi;
                        best_k_min = current.k_min;
                        best_runs.clone_from_slice(&runs);
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

    let design = Design::with_options(best_runs, true)?;
    let summary = summarize(&design, cfg.lambda)?;
    stats.elapsed = start.elapsed();
    Ok(AnnealOutcome {
        design,
        half: None,
        summary,
        best_phi,
        trace,
        stats,
        counters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anneal::seeded_rng;
    use crate::criteria::distance_histogram;

    #[test]
    fn srs_is_distinct_and_exhaustive_when_full() {
        let d = srs_design(24, 4, &mut seeded_rng(1)).unwrap();
        let mut runs = d.runs().to_vec();
        runs.sort();
        assert_eq!(runs, all_permutations(4).unwrap());
        let d = srs_design(16, 8, &mut seeded_rng(1)).unwrap();
        assert_eq!(d.n(), 16);
        assert!(!d.has_repeats());
        assert!(matches!(
            srs_design(7, 3, &mut seeded_rng(1)),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn ordinary_sa_produces_distinct_runs() {
        let mut cfg = AnnealConfig::new(6, 9, 3);
        cfg.max_iterations = 1500;
        let out = ordinary_sa(&cfg, &mut seeded_rng(3)).unwrap();
        assert_eq!(out.design.n(), 9);
        assert!(!out.design.has_repeats());
        // objective agrees with a from-scratch evaluation
        let hist = distance_histogram(&out.design);
        let obj = Objective::new(Bounds::normalizers(9, 6), 0.5).unwrap();
        let phi = obj.value(hist.k_min().unwrap(), hist.k_m2().unwrap());
        assert_eq!(phi, out.best_phi);
        assert!(out.trace.windows(2).all(|w| w[1].best_phi >= w[0].best_phi));
    }
}
