//! Foldover designs `D = H ∪ H~`, stored by their representative half `H`.
//!
//! Every distance in the expanded design follows from the within-half
//! distances: mirrored pairs keep their distance, cross pairs map `u` to
//! `q - u`, and each run sits at distance `q` from its own reverse.

use std::collections::{BTreeMap, HashMap};


use crate::criteria::{Design, DistanceHistogram, Rational};
use crate::error::{Error, Result};
use crate::perm::{self, canonical_key, foldover, pair_count, Permutation};

/// `g(u) = u^2 + (q - u)^2`, a pair's contribution to the second-moment
/// numerator (counted twice in the expanded design).
pub fn pair_weight(u: u32, q: u32) -> i64 {
    let (u, v) = (u as i64, (q - u) as i64);
    u * u + v * v
}

/// Representative half of a foldover design.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HalfDesign {
    reps: Vec<Permutation>,
}

impl HalfDesign {
    /// Validates `reps`: at least two runs over a common `m`, no repeated run
    /// and no run together with its reverse.
    pub fn new(reps: Vec<Permutation>) -> Result<Self> {
        if reps.len() < 2 {
            return Err(Error::Domain(format!(
                "a half-design needs at least 2 runs, got {}",
                reps.len()
            )));
        }
        let m = reps[0].m();
        if let Some(bad) = reps.iter().find(|x| x.m() != m) {
            return Err(Error::Dimension {
                expected: m,
                found: bad.m(),
            });
        }
        let mut seen = BTreeMap::new();
        for (i, x) in reps.iter().enumerate() {
            if let Some(&j) = seen.get(&canonical_key(x)) {
                return Err(Error::InvalidHalf {
                    first: j,
                    second: i,
                    reason: "are identical",
                });
            }
            if let Some(&j) = seen.get(&canonical_key(&foldover(x))) {
                return Err(Error::InvalidHalf {
                    first: j,
                    second: i,
                    reason: "are reverses of each other",
                });
            }
            seen.insert(canonical_key(x), i);
        }
        Ok(Self { reps })
    }

    pub fn reps(&self) -> &[Permutation] {
        &self.reps
    }

    pub fn h(&self) -> usize {
        self.reps.len()
    }

    pub fn m(&self) -> usize {
        self.reps[0].m()
    }

    pub fn q(&self) -> usize {
        pair_count(self.m())
    }

    pub(crate) fn from_valid(reps: Vec<Permutation>) -> Self {
        debug_assert!(Self::new(reps.clone()).is_ok());
        Self { reps }
    }
}

/// Expands `H` into the `2h`-run design, `H` first and then the reverses in
/// the same order.
pub fn expand(half: &HalfDesign) -> Design {
    let mut runs = half.reps.clone();
    runs.extend(half.reps.iter().map(foldover));
    Design::new(runs).expect("a half-design has at least two runs")
}

/// Within-half Kendall distances, symmetric with zero diagonal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HalfDistanceMatrix {
    h: usize,
    q: u32,
    entries: Vec<u32>,
}

impl HalfDistanceMatrix {
    pub fn new(half: &HalfDesign) -> Self {
        let h = half.h();
        let mut out = Self {
            h,
            q: half.q() as u32,
            entries: vec![0; h * h],
        };
        for i in 0..h {
            for j in i + 1..h {
                out.set(i, j, perm::distance(&half.reps[i], &half.reps[j]));
            }
        }
        out
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.entries[i * self.h + j]
    }

    pub(crate) fn set(&mut self, i: usize, j: usize, u: u32) {
        self.entries[i * self.h + j] = u;
        self.entries[j * self.h + i] = u;
    }

    /// Iterates `(i, j, u)` over `i < j`.
    pub fn upper(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        (0..self.h).flat_map(move |i| (i + 1..self.h).map(move |j| (i, j, self.get(i, j))))
    }

    /// `sum_{i<j} g(u_ij)`.
    pub fn weight_sum(&self) -> i64 {
        self.upper().map(|(_, _, u)| pair_weight(u, self.q)).sum()
    }
}

/// Histogram of all `h(2h-1)` pairs of the expanded design.
pub fn full_histogram_from_half(hdm: &HalfDistanceMatrix) -> DistanceHistogram {
    let q = hdm.q();
    let mut hist = DistanceHistogram::empty(q as usize);
    for (_, _, u) in hdm.upper() {
        hist.add(u, 2);
        hist.add(q - u, 2);
    }
    hist.add(q, hdm.h() as u64);
    hist
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldoverMetrics {
    pub k_min: u32,
    pub k_ave: Rational,
    pub k_m2: Rational,
}

/// `k_ave` of any foldover design with `n = 2h` runs: `nq / (2(n-1))`.
pub fn foldover_k_ave(h: usize, q: u32) -> Rational {
    let n = 2 * h as i128;
    Rational::new(n * q as i128, 2 * (n - 1))
}

/// `k_m2 = {h q^2 + 2 sum g(u)} / {h(2h-1)}`.
pub fn foldover_k_m2(h: usize, q: u32, weight_sum: i64) -> Rational {
    let h_ = h as i128;
    let q_ = q as i128;
    Rational::new(h_ * q_ * q_ + 2 * weight_sum as i128, h_ * (2 * h_ - 1))
}

pub fn foldover_metrics(hdm: &HalfDistanceMatrix) -> FoldoverMetrics {
    let q = hdm.q();
    let k_min = hdm
        .upper()
        .map(|(_, _, u)| u.min(q - u))
        .min()
        .unwrap_or(q);
    FoldoverMetrics {
        k_min,
        k_ave: foldover_k_ave(hdm.h(), q),
        k_m2: foldover_k_m2(hdm.h(), q, hdm.weight_sum()),
    }
}

/// Recovers a representative half when `d` is a foldover design in any row
/// order: every run's reverse is present and no run repeats. The half keeps
/// the first-occurring run of each reversed pair.
pub fn detect_foldover(d: &Design) -> Option<HalfDesign> {
    if d.n() % 2 != 0 || d.n() < 4 {
        return None;
    }
    let mut index: HashMap<_, usize> = HashMap::with_capacity(d.n());
    for (i, x) in d.runs().iter().enumerate() {
        if index.insert(canonical_key(x), i).is_some() {
            return None;
        }
    }
    let mut taken = vec![false; d.n()];
    let mut reps = Vec::with_capacity(d.n() / 2);
    for (i, x) in d.runs().iter().enumerate() {
        if taken[i] {
            continue;
        }
        let j = *index.get(&canonical_key(&foldover(x)))?;
        taken[i] = true;
        taken[j] = true;
        reps.push(x.clone());
    }
    HalfDesign::new(reps).ok()
}
