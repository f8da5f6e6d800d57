use rand::Rng;

use crate::error::{Error, Result};
use crate::perm::{random_permutation, Permutation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MoveKind {
    /// Replace the row with a fresh uniform permutation.
    GlobalReplace,
    /// Exchange the entries at two positions of the row.
    LocalSwap,
}

/// A proposed change to one row of the current design.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Move {
    pub kind: MoveKind,
    pub row: usize,
    /// Positions `s < t` for a swap.
    pub swap: Option<(usize, usize)>,
    pub candidate: Permutation,
}

/// Draws a move for one of `rows`. A global replacement is chosen with
/// probability `temperature / initial_temperature`.
///
/// Draw order is fixed: move kind, row, then move details.
pub fn propose_move<R: Rng + ?Sized>(
    rows: &[Permutation],
    temperature: f64,
    initial_temperature: f64,
    rng: &mut R,
) -> Move {
    let global = rng.random::<f64>() < temperature / initial_temperature;
    let row = rng.random_range(0..rows.len());
    let current = &rows[row];
    let m = current.m();
    if global {
        Move {
            kind: MoveKind::GlobalReplace,
            row,
            swap: None,
            candidate: random_permutation(m, rng).expect("rows hold valid permutations"),
        }
    } else {
        let a = rng.random_range(0..m);
        let mut b = rng.random_range(0..m - 1);
        if b >= a {
            b += 1;
        }
        let (s, t) = (a.min(b), a.max(b));
        Move {
            kind: MoveKind::LocalSwap,
            row,
            swap: Some((s, t)),
            candidate: current.swapped(s, t),
        }
    }
}

/// Component pairs whose relative order flips when positions `s < t` of `x`
/// are exchanged: `{x_s, x_t}` plus `{x_s, x_l}` and `{x_t, x_l}` for every
/// `s < l < t`. Each pair is returned as `(min, max)`.
pub fn swap_pair_set(x: &Permutation, s: usize, t: usize) -> Result<Vec<(usize, usize)>> {
    if s >= t || t >= x.m() {
        return Err(Error::Domain(format!(
            "swap positions must satisfy s < t < m, got s = {s}, t = {t}, m = {}",
            x.m()
        )));
    }
    let norm = |a: usize, b: usize| (a.min(b), a.max(b));
    let (xs, xt) = (x.at(s), x.at(t));
    let mut pairs = Vec::with_capacity(2 * (t - s) - 1);
    pairs.push(norm(xs, xt));
    for l in s + 1..t {
        let xl = x.at(l);
        pairs.push(norm(xs, xl));
        pairs.push(norm(xt, xl));
    }
    Ok(pairs)
}

/// `k(x_r', x_j)` from `k(x_r, x_j)`: each flipped pair adds `+1` if `x_r`
/// and `x_j` agreed on it before the swap and `-1` otherwise.
pub fn incremental_distance(
    k_old: u32,
    x_r: &Permutation,
    x_j: &Permutation,
    pairs: &[(usize, usize)],
) -> u32 {
    let delta: i64 = pairs
        .iter()
        .map(|&(u, v)| {
            if x_r.precedes(u, v) == x_j.precedes(u, v) {
                1
            } else {
                -1
            }
        })
        .sum();
    (k_old as i64 + delta) as u32
}

/// Metropolis rule: always accept an improvement, otherwise accept with
/// probability `exp(delta / temperature)`. Draws from `rng` only in the
/// second case.
pub fn accept<R: Rng + ?Sized>(delta: f64, temperature: f64, rng: &mut R) -> bool {
    delta > 0.0 || rng.random::<f64>() < (delta / temperature).exp()
}
