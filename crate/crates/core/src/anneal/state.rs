//! Search state for the foldover annealer.
//!
//! Only the within-half distances are stored. `k_min` is tracked through a
//! count array over effective distances `min(u, q - u)` and `k_m2` through the
//! running numerator `sum g(u)`.

use crate::criteria::{Objective, Rational};
use crate::foldover::{foldover_k_m2, pair_weight, HalfDesign, HalfDistanceMatrix};
use crate::perm::{self, Permutation};

use super::moves::{incremental_distance, swap_pair_set, Move, MoveKind};

/// How candidate distances are obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateMode {
    /// Only the moved row's distances; swaps use the flipped-pair formula.
    #[default]
    Incremental,
    /// Recompute the whole half-distance matrix for every candidate.
    Full,
}

/// Work done by the state, for cost assertions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCounters {
    /// Kendall distances computed from scratch.
    pub full_distances: u64,
    /// Distances obtained through the flipped-pair update.
    pub incremental_distances: u64,
    /// Sign products evaluated by the flipped-pair update.
    pub sign_products: u64,
}

/// A scored candidate half-design differing from the current one in one row.
#[derive(Clone, Debug)]
pub struct Candidate {
    pub row: usize,
    pub replacement: Permutation,
    /// `k(x_r', x_j)` for all `j` (entry `row` is 0).
    pub row_distances: Vec<u32>,
    /// Whole matrix, present only in full-update mode.
    pub matrix: Option<HalfDistanceMatrix>,
    pub delta_g: i64,
    pub k_min: u32,
    pub delta_k_min: i64,
}

#[derive(Clone, Debug)]
pub struct AnnealState {
    reps: Vec<Permutation>,
    hdm: HalfDistanceMatrix,
    effective: Vec<u32>,
    weight_sum: i64,
    scratch: Vec<u32>,
    pub counters: OpCounters,
}

fn effective_counts(hdm: &HalfDistanceMatrix) -> Vec<u32> {
    let q = hdm.q();
    let mut counts = vec![0u32; q as usize / 2 + 1];
    for (_, _, u) in hdm.upper() {
        counts[u.min(q - u) as usize] += 1;
    }
    counts
}

fn first_nonzero(counts: &[u32], fallback: u32) -> u32 {
    counts
        .iter()
        .position(|&c| c > 0)
        .map_or(fallback, |r| r as u32)
}

impl AnnealState {
    pub fn new(half: HalfDesign) -> Self {
        let hdm = HalfDistanceMatrix::new(&half);
        let effective = effective_counts(&hdm);
        let weight_sum = hdm.weight_sum();
        let h = half.h() as u64;
        Self {
            scratch: effective.clone(),
            reps: half.reps().to_vec(),
            hdm,
            effective,
            weight_sum,
            counters: OpCounters {
                full_distances: h * (h - 1) / 2,
                ..Default::default()
            },
        }
    }

    pub fn reps(&self) -> &[Permutation] {
        &self.reps
    }

    pub fn h(&self) -> usize {
        self.reps.len()
    }

    pub fn q(&self) -> u32 {
        self.hdm.q()
    }

    pub fn matrix(&self) -> &HalfDistanceMatrix {
        &self.hdm
    }

    pub fn weight_sum(&self) -> i64 {
        self.weight_sum
    }

    pub fn effective_counts(&self) -> &[u32] {
        &self.effective
    }

    pub fn k_min(&self) -> u32 {
        first_nonzero(&self.effective, self.q())
    }

    pub fn k_m2(&self) -> Rational {
        foldover_k_m2(self.h(), self.q(), self.weight_sum)
    }

    pub fn phi(&self, objective: &Objective) -> f64 {
        objective.value(self.k_min(), self.k_m2())
    }

    pub fn half(&self) -> HalfDesign {
        HalfDesign::from_valid(self.reps.clone())
    }

    /// Scores `mv`. Returns `None` when the candidate would repeat a run in the
    /// expanded design, i.e. some new distance is `0` or `q`.
    pub fn evaluate(&mut self, mv: &Move, mode: UpdateMode) -> Option<Candidate> {
        match mode {
            UpdateMode::Incremental => self.evaluate_incremental(mv),
            UpdateMode::Full => self.evaluate_full(mv),
        }
    }

    fn evaluate_incremental(&mut self, mv: &Move) -> Option<Candidate> {
        let (r, h, q) = (mv.row, self.h(), self.q());
        let x_r = &self.reps[r];
        let mut row_distances = vec![0u32; h];
        match (mv.kind, mv.swap) {
            (MoveKind::LocalSwap, Some((s, t))) => {
                let pairs = swap_pair_set(x_r, s, t).expect("proposed swaps are ordered");
                for (j, x_j) in self.reps.iter().enumerate() {
                    if j == r {
                        continue;
                    }
                    row_distances[j] = incremental_distance(self.hdm.get(r, j), x_r, x_j, &pairs);
                    self.counters.incremental_distances += 1;
                    self.counters.sign_products += pairs.len() as u64;
                }
            }
            _ => {
                for (j, x_j) in self.reps.iter().enumerate() {
                    if j == r {
                        continue;
                    }
                    row_distances[j] = perm::distance(&mv.candidate, x_j);
                    self.counters.full_distances += 1;
                }
            }
        }
        if (0..h).any(|j| j != r && (row_distances[j] == 0 || row_distances[j] == q)) {
            return None;
        }

        self.scratch.copy_from_slice(&self.effective);
        let mut delta_g = 0i64;
        for j in (0..h).filter(|&j| j != r) {
            let (old, new) = (self.hdm.get(r, j), row_distances[j]);
            self.scratch[old.min(q - old) as usize] -= 1;
            self.scratch[new.min(q - new) as usize] += 1;
            delta_g += pair_weight(new, q) - pair_weight(old, q);
        }
        let k_min = first_nonzero(&self.scratch, q);
        Some(Candidate {
            row: r,
            replacement: mv.candidate.clone(),
            row_distances,
            matrix: None,
            delta_g,
            k_min,
            delta_k_min: k_min as i64 - self.k_min() as i64,
        })
    }

    fn evaluate_full(&mut self, mv: &Move) -> Option<Candidate> {
        let (r, h, q) = (mv.row, self.h(), self.q());
        let mut reps = self.reps.clone();
        reps[r] = mv.candidate.clone();
        let mut hdm = self.hdm.clone();
        for i in 0..h {
            for j in i + 1..h {
                let u = perm::distance(&reps[i], &reps[j]);
                if u == 0 || u == q {
                    return None;
                }
                hdm.set(i, j, u);
            }
        }
        self.counters.full_distances += (h * (h - 1) / 2) as u64;
        let k_min = first_nonzero(&effective_counts(&hdm), q);
        let row_distances = (0..h).map(|j| hdm.get(r, j)).collect();
        Some(Candidate {
            row: r,
            replacement: mv.candidate.clone(),
            row_distances,
            delta_g: hdm.weight_sum() - self.weight_sum,
            matrix: Some(hdm),
            k_min,
            delta_k_min: k_min as i64 - self.k_min() as i64,
        })
    }

    /// Makes `cand` the current half-design.
    pub fn commit(&mut self, cand: Candidate) {
        let (r, q) = (cand.row, self.q());
        match cand.matrix {
            Some(hdm) => {
                self.hdm = hdm;
                self.effective = effective_counts(&self.hdm);
                self.weight_sum = self.hdm.weight_sum();
            }
            None => {
                for j in (0..self.h()).filter(|&j| j != r) {
                    let (old, new) = (self.hdm.get(r, j), cand.row_distances[j]);
                    self.effective[old.min(q - old) as usize] -= 1;
                    self.effective[new.min(q - new) as usize] += 1;
                    self.hdm.set(r, j, new);
                }
                self.weight_sum += cand.delta_g;
            }
        }
        self.reps[r] = cand.replacement;
        debug_assert!(self.cache_is_consistent(), "annealer cache drifted");
    }

    /// True when the cached matrix, effective-distance counts and `sum g(u)`
    /// equal a from-scratch recomputation.
    pub fn cache_is_consistent(&self) -> bool {
        let fresh = HalfDistanceMatrix::new(&HalfDesign::from_valid(self.reps.clone()));
        fresh == self.hdm
            && effective_counts(&fresh) == self.effective
            && fresh.weight_sum() == self.weight_sum
    }
}
