//! Permutation primitives.
//!
//! A [`Permutation`] is one addition order over components `0..m`. Entry `r`
//! (0-based) is the component added in position `r`. The position map is kept
//! alongside the entries so pairwise-ordering queries are O(1).

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// Largest supported component count.
pub const MAX_COMPONENTS: usize = 64;

/// Number of component pairs, `m(m-1)/2`. Also the largest Kendall distance.
pub fn pair_count(m: usize) -> usize {
    m * (m.saturating_sub(1)) / 2
}

/// Lexicographic index of the pair `(a, b)`, `a < b < m`.
pub fn pair_index(a: usize, b: usize, m: usize) -> usize {
    debug_assert!(a < b && b < m);
    a * (2 * m - a - 1) / 2 + (b - a - 1)
}

/// `m!`, or `None` when it does not fit in a `u128`.
pub fn factorial(m: usize) -> Option<u128> {
    (1..=m as u128).try_fold(1u128, |acc, k| acc.checked_mul(k))
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    entries: Vec<u8>,
    positions: Vec<u8>,
}

impl Permutation {
    /// Builds a permutation from its entry sequence, checking that it is a
    /// bijection on `0..m` with `m >= 2`.
    pub fn new(entries: Vec<usize>) -> Result<Self> {
        let m = entries.len();
        if m < 2 {
            return Err(Error::InvalidPermutation(format!(
                "need at least 2 components, got {m}"
            )));
        }
        if m > MAX_COMPONENTS {
            return Err(Error::InvalidPermutation(format!(
                "at most {MAX_COMPONENTS} components supported, got {m}"
            )));
        }
        let mut positions = vec![u8::MAX; m];
        for (r, &c) in entries.iter().enumerate() {
            if c >= m {
                return Err(Error::InvalidPermutation(format!(
                    "label {c} out of range 0..{m}"
                )));
            }
            if positions[c] != u8::MAX {
                return Err(Error::InvalidPermutation(format!("label {c} repeated")));
            }
            positions[c] = r as u8;
        }
        Ok(Self {
            entries: entries.into_iter().map(|c| c as u8).collect(),
            positions,
        })
    }

    pub fn identity(m: usize) -> Result<Self> {
        Self::new((0..m).collect())
    }

    pub(crate) fn from_entries_unchecked(entries: Vec<u8>) -> Self {
        let mut positions = vec![0u8; entries.len()];
        for (r, &c) in entries.iter().enumerate() {
            positions[c as usize] = r as u8;
        }
        Self { entries, positions }
    }

    /// Number of components.
    pub fn m(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[u8] {
        &self.entries
    }

    /// Component placed at `position` (0-based).
    pub fn at(&self, position: usize) -> usize {
        self.entries[position] as usize
    }

    /// Position (0-based) of `component`.
    pub fn position_of(&self, component: usize) -> usize {
        self.positions[component] as usize
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.entries.iter().map(|&c| c as usize).collect()
    }

    /// True when component `a` is added before component `b`.
    pub fn precedes(&self, a: usize, b: usize) -> bool {
        self.positions[a] < self.positions[b]
    }

    /// Copy with the entries at positions `s` and `t` exchanged.
    pub fn swapped(&self, s: usize, t: usize) -> Self {
        let mut out = self.clone();
        out.entries.swap(s, t);
        out.positions[out.entries[s] as usize] = s as u8;
        out.positions[out.entries[t] as usize] = t as u8;
        out
    }

    /// Parses `"0123"` (single-digit labels) or `"0,1,2,3"`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let bad = |what: &str| Error::InvalidPermutation(format!("{text:?}: bad label {what:?}"));
        let entries = if text.contains(',') {
            text.split(',')
                .map(|t| t.trim().parse::<usize>().map_err(|_| bad(t)))
                .collect::<Result<Vec<_>>>()?
        } else {
            text.chars()
                .map(|c| c.to_digit(10).map(|d| d as usize).ok_or_else(|| bad(&c.to_string())))
                .collect::<Result<Vec<_>>>()?
        };
        Self::new(entries)
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation({self})")
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for Permutation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

/// Pairwise-ordering signs `z_ab(x)` for all `a < b`, in lexicographic pair
/// order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PwoVector {
    signs: Vec<i8>,
}

impl PwoVector {
    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    /// Inner product `z(x) . z(y)`.
    pub fn dot(&self, other: &PwoVector) -> i64 {
        self.signs
            .iter()
            .zip(&other.signs)
            .map(|(&a, &b)| (a as i64) * (b as i64))
            .sum()
    }
}

pub fn pwo_vector(x: &Permutation) -> PwoVector {
    let m = x.m();
    let mut signs = Vec::with_capacity(pair_count(m));
    for a in 0..m {
        for b in (a + 1)..m {
            signs.push(if x.precedes(a, b) { 1 } else { -1 });
        }
    }
    PwoVector { signs }
}

/// Kendall tau distance: the number of component pairs whose relative order
/// differs between `x` and `y`.
pub fn kendall_distance(x: &Permutation, y: &Permutation) -> Result<u32> {
    if x.m() != y.m() {
        return Err(Error::Dimension {
            expected: x.m(),
            found: y.m(),
        });
    }
    Ok(distance(x, y))
}

/// Unchecked Kendall distance; callers guarantee equal `m`.
///
/// Counts inversions of `y`'s positions read in `x`'s order, which is the same
/// pair-by-pair comparison of position maps.
pub(crate) fn distance(x: &Permutation, y: &Permutation) -> u32 {
    debug_assert_eq!(x.m(), y.m());
    let m = x.m();
    let mut seq = [0u8; MAX_COMPONENTS];
    for (r, &c) in x.entries.iter().enumerate() {
        seq[r] = y.positions[c as usize];
    }
    let mut count = 0u32;
    for i in 0..m {
        let si = seq[i];
        for &sj in &seq[i + 1..m] {
            count += (si > sj) as u32;
        }
    }
    count
}

/// The reverse order, `x~_r = x_{m+1-r}`.
pub fn foldover(x: &Permutation) -> Permutation {
    let mut entries = x.entries.clone();
    entries.reverse();
    Permutation::from_entries_unchecked(entries)
}

/// Total-order key identifying a permutation; equal keys iff equal orders.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalKey(Vec<u8>);

pub fn canonical_key(x: &Permutation) -> CanonicalKey {
    CanonicalKey(x.entries.clone())
}

/// Uniform random permutation of `0..m` (Fisher-Yates).
pub fn random_permutation<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<Permutation> {
    if !(2..=MAX_COMPONENTS).contains(&m) {
        return Err(Error::Domain(format!(
            "m must lie in 2..={MAX_COMPONENTS}, got {m}"
        )));
    }
    let mut entries: Vec<u8> = (0..m as u8).collect();
    entries.shuffle(rng);
    Ok(Permutation::from_entries_unchecked(entries))
}

/// All `m!` permutations in lexicographic order.
pub fn all_permutations(m: usize) -> Result<Vec<Permutation>> {
    if !(2..=10).contains(&m) {
        return Err(Error::Capability(format!(
            "full enumeration supported for 2 <= m <= 10, got {m}"
        )));
    }
    let mut current: Vec<u8> = (0..m as u8).collect();
    let mut out = Vec::with_capacity(factorial(m).unwrap() as usize);
    loop {
        out.push(Permutation::from_entries_unchecked(current.clone()));
        // next lexicographic permutation
        let Some(i) = (0..m - 1).rev().find(|&i| current[i] < current[i + 1]) else {
            break;
        };
        let j = (i + 1..m).rev().find(|&j| current[j] > current[i]).unwrap();
        current.swap(i, j);
        current[i + 1..].reverse();
    }
    Ok(out)
}
