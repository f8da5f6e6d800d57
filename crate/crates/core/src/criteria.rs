//! Design-level Kendall tau summaries and the model-based criteria they
//! determine.
//!
//! Every quantity except the composite objective is exact: distances are
//! integers and moments are [`Rational`]s, so the closed-form identities can be
//! checked for equality rather than within a tolerance.

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::perm::{self, all_permutations, factorial, pair_count, pwo_vector, Permutation};

pub type Rational = Ratio<i128>;

pub(crate) fn rat(n: i128) -> Rational {
    Rational::from_integer(n)
}

pub(crate) fn to_f64(r: &Rational) -> f64 {
    r.to_f64()
        .unwrap_or_else(|| *r.numer() as f64 / *r.denom() as f64)
}

/// An `n`-run order-of-addition design.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Design {
    runs: Vec<Permutation>,
}

impl Design {
    /// Builds a design, requiring `n >= 2` runs over a common `m`. Repeated
    /// runs are allowed.
    pub fn new(runs: Vec<Permutation>) -> Result<Self> {
        Self::with_options(runs, false)
    }

    /// Like [`Design::new`] but rejects repeated runs when `require_distinct`.
    pub fn with_options(runs: Vec<Permutation>, require_distinct: bool) -> Result<Self> {
        if runs.len() < 2 {
            return Err(Error::Domain(format!(
                "a design needs at least 2 runs, got {}",
                runs.len()
            )));
        }
        let m = runs[0].m();
        if let Some(bad) = runs.iter().find(|x| x.m() != m) {
            return Err(Error::Dimension {
                expected: m,
                found: bad.m(),
            });
        }
        if require_distinct {
            if let Some((i, j)) = first_repeat(&runs) {
                return Err(Error::Domain(format!("runs {i} and {j} are identical")));
            }
        }
        Ok(Self { runs })
    }

    pub fn runs(&self) -> &[Permutation] {
        &self.runs
    }

    pub fn n(&self) -> usize {
        self.runs.len()
    }

    pub fn m(&self) -> usize {
        self.runs[0].m()
    }

    pub fn q(&self) -> usize {
        pair_count(self.m())
    }

    pub fn has_repeats(&self) -> bool {
        first_repeat(&self.runs).is_some()
    }

    pub fn into_runs(self) -> Vec<Permutation> {
        self.runs
    }
}

fn first_repeat(runs: &[Permutation]) -> Option<(usize, usize)> {
    let mut keyed: Vec<(perm::CanonicalKey, usize)> = runs
        .iter()
        .enumerate()
        .map(|(i, x)| (perm::canonical_key(x), i))
        .collect();
    keyed.sort();
    keyed
        .windows(2)
        .find(|w| w[0].0 == w[1].0)
        .map(|w| (w[0].1, w[1].1))
}

/// Pairwise distances `k(x_i, x_j)` for `i < j` in row-major order.
pub fn pairwise_distances(d: &Design) -> Vec<u32> {
    let runs = d.runs();
    let mut out = Vec::with_capacity(d.n() * (d.n() - 1) / 2);
    for i in 0..runs.len() {
        for j in i + 1..runs.len() {
            out.push(perm::distance(&runs[i], &runs[j]));
        }
    }
    out
}

/// Counts `nu_r` of unordered run pairs at each Kendall distance `r = 0..=q`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DistanceHistogram {
    counts: Vec<u64>,
    total_pairs: u64,
}

impl DistanceHistogram {
    pub fn empty(q: usize) -> Self {
        Self {
            counts: vec![0; q + 1],
            total_pairs: 0,
        }
    }

    pub fn from_distances(q: usize, distances: impl IntoIterator<Item = u32>) -> Self {
        let mut h = Self::empty(q);
        for r in distances {
            h.add(r, 1);
        }
        h
    }

    pub fn add(&mut self, r: u32, times: u64) {
        self.counts[r as usize] += times;
        self.total_pairs += times;
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, r: usize) -> u64 {
        self.counts.get(r).copied().unwrap_or(0)
    }

    pub fn total_pairs(&self) -> u64 {
        self.total_pairs
    }

    pub fn q(&self) -> usize {
        self.counts.len() - 1
    }

    fn require_pairs(&self) -> Result<()> {
        if self.total_pairs == 0 {
            Err(Error::Domain("histogram has no run pairs".into()))
        } else {
            Ok(())
        }
    }

    /// Smallest distance attained by some pair.
    pub fn k_min(&self) -> Result<u32> {
        self.require_pairs()?;
        Ok(self.counts.iter().position(|&c| c > 0).unwrap() as u32)
    }

    /// Sum of distances over all pairs.
    pub fn first_sum(&self) -> i128 {
        self.counts
            .iter()
            .enumerate()
            .map(|(r, &c)| r as i128 * c as i128)
            .sum()
    }

    /// Sum of squared distances over all pairs.
    pub fn second_sum(&self) -> i128 {
        self.counts
            .iter()
            .enumerate()
            .map(|(r, &c)| (r * r) as i128 * c as i128)
            .sum()
    }

    pub fn k_ave(&self) -> Result<Rational> {
        self.require_pairs()?;
        Ok(Rational::new(self.first_sum(), self.total_pairs as i128))
    }

    pub fn k_m2(&self) -> Result<Rational> {
        self.require_pairs()?;
        Ok(Rational::new(self.second_sum(), self.total_pairs as i128))
    }
}

pub fn distance_histogram(d: &Design) -> DistanceHistogram {
    DistanceHistogram::from_distances(d.q(), pairwise_distances(d))
}

/// `tr(M^2)` for the pairwise-ordering model matrix `X = [1 | z(x_i)^T]`,
/// computed from the run Gram matrix: `tr((X^T X)^2) = ||X X^T||_F^2` with
/// entries `1 + z(x_i) . z(x_j)`. Uses the PWO vectors only, not distances.
pub fn ms_criterion_direct(d: &Design) -> Rational {
    let z: Vec<_> = d.runs().iter().map(pwo_vector).collect();
    let mut total: i128 = 0;
    for zi in &z {
        for zj in &z {
            let g = 1 + zi.dot(zj) as i128;
            total += g * g;
        }
    }
    rat(total)
}

/// `tr(M^2)` from the first two distance moments:
/// `4n(n-1) k_m2 - {2m(m-1)+4} n(n-1) k_ave + n^2 (m^2-m+2)^2 / 4`.
pub fn ms_criterion_identity(h: &DistanceHistogram, n: usize, m: usize) -> Result<Rational> {
    let (n, m) = (n as i128, m as i128);
    let k_ave = h.k_ave()?;
    let k_m2 = h.k_m2()?;
    let pairs = n * (n - 1);
    let tail = Rational::new(n * n * (m * m - m + 2) * (m * m - m + 2), 4);
    Ok(rat(4 * pairs) * k_m2 - rat((2 * m * (m - 1) + 4) * pairs) * k_ave + tail)
}

/// `tr(M_full^2) / (m!)^2 = (2m^3 + 3m^2 - 5m + 18) / 18`.
pub fn full_design_ms_normalized(m: usize) -> Rational {
    let m = m as i128;
    Rational::new(2 * m * m * m + 3 * m * m - 5 * m + 18, 18)
}

/// Lower bound on `k_m2` implied by `k_ave`:
/// `(m^2-m+2)/2 k_ave - nm(9m^3-22m^2+39m-26) / (144(n-1))`.
pub fn km2_lower_bound(k_ave: Rational, n: usize, m: usize) -> Rational {
    let (n, m) = (n as i128, m as i128);
    Rational::new(m * m - m + 2, 2) * k_ave
        - Rational::new(
            n * m * (9 * m * m * m - 22 * m * m + 39 * m - 26),
            144 * (n - 1),
        )
}

/// First two centralized wordlength quantities from the distance moments.
pub fn c1_c2(h: &DistanceHistogram, n: usize, m: usize) -> Result<(Rational, Rational)> {
    let q = pair_count(m) as i128;
    let (n_, m_) = (n as i128, m as i128);
    let k_ave = h.k_ave()?;
    let k_m2 = h.k_m2()?;
    let ratio = Rational::new(2 * (n_ - 1), n_);
    let c1 = rat(q) - ratio * k_ave;
    let c2 = Rational::new(q * (q - 1), 2) - rat(q) * ratio * k_ave + ratio * k_m2
        - Rational::new(m_ * (m_ - 1) * (m_ - 2), 18);
    Ok((c1, c2))
}

/// Largest `m` for which [`c1_c2_direct`] enumerates the full design.
pub const DIRECT_WORDLENGTH_MAX_M: usize = 7;

/// C1 and C2 straight from J-characteristics of the PWO columns, compared
/// against the full permutation design.
pub fn c1_c2_direct(d: &Design) -> Result<(Rational, Rational)> {
    let m = d.m();
    if m > DIRECT_WORDLENGTH_MAX_M {
        return Err(Error::Capability(format!(
            "direct wordlength evaluation enumerates S_m; m = {m} exceeds {DIRECT_WORDLENGTH_MAX_M}"
        )));
    }
    let full = all_permutations(m)?;
    let big_n = factorial(m).unwrap() as i128;
    let n = d.n() as i128;

    let (j1_full, j2_full) = j_characteristics(&full, m);
    let (j1, j2) = j_characteristics(d.runs(), m);

    // (J/n - J_full/N)^2 = (J N - J_full n)^2 / (nN)^2
    let sq_sum = |ours: &[i128], theirs: &[i128]| -> Rational {
        let num: i128 = ours
            .iter()
            .zip(theirs)
            .map(|(&a, &b)| {
                let t = a * big_n - b * n;
                t * t
            })
            .sum();
        Rational::new(num, (n * big_n) * (n * big_n))
    };
    Ok((sq_sum(&j1, &j1_full), sq_sum(&j2, &j2_full)))
}

/// J-characteristics for all single PWO columns and all unordered column
/// pairs, in lexicographic order.
fn j_characteristics(runs: &[Permutation], m: usize) -> (Vec<i128>, Vec<i128>) {
    let q = pair_count(m);
    let mut j1 = vec![0i128; q];
    let mut j2 = vec![0i128; q * (q.saturating_sub(1)) / 2];
    for x in runs {
        let z = pwo_vector(x);
        let s = z.signs();
        let mut k = 0;
        for a in 0..q {
            j1[a] += s[a] as i128;
            for b in a + 1..q {
                j2[k] += (s[a] * s[b]) as i128;
                k += 1;
            }
        }
    }
    (j1, j2)
}

/// Foldover-class benchmarks used to normalize the composite objective.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bounds {
    /// Upper bound on `k_min`, `floor(m(m-1)/4)`.
    pub b1: u32,
    /// Lower bound on `k_m2`.
    pub l2: Rational,
    /// Upper bound on `k_m2`.
    pub u2: Rational,
    /// The fixed `k_ave` of a foldover design, `nm(m-1)/(4(n-1))`.
    pub kave_bench: Rational,
}

impl Bounds {
    /// Evaluates the bound formulas for any `n >= 2`, `m >= 2` without the
    /// foldover parity restriction. Used for fixed normalizers.
    pub fn normalizers(n: usize, m: usize) -> Self {
        let (n, m) = (n as i128, m as i128);
        let mm = m * (m - 1);
        Self {
            b1: (mm / 4) as u32,
            l2: Rational::new(n * mm * (9 * m * m - 5 * m + 10), 144 * (n - 1)),
            u2: Rational::new(n * mm * mm - 4 * (n - 2) * (mm - 2), 8 * (n - 1)),
            kave_bench: Rational::new(n * mm, 4 * (n - 1)),
        }
    }
}

/// Bounds for an `n`-run foldover design; `n` must be even with `n >= 4`, and
/// `m >= 3`.
pub fn bounds(n: usize, m: usize) -> Result<Bounds> {
    if n % 2 != 0 {
        return Err(Error::Domain(format!(
            "bounds apply to foldover designs; n = {n} is odd"
        )));
    }
    if n < 4 {
        return Err(Error::Domain(format!("bounds require n >= 4, got {n}")));
    }
    if m < 3 {
        return Err(Error::Domain(format!("bounds require m >= 3, got {m}")));
    }
    Ok(Bounds::normalizers(n, m))
}

/// Weighted composite objective
/// `lambda (k_min-1)/(B1-1) + (1-lambda)(U2-k_m2)/(U2-L2)`.
///
/// With `B1 = 1` (`m = 3`) the minimum-distance term is dropped and the value
/// is the second term alone.
#[derive(Clone, Debug, PartialEq)]
pub struct Objective {
    pub bounds: Bounds,
    pub lambda: f64,
}

impl Objective {
    pub fn new(bounds: Bounds, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Domain(format!("lambda must lie in [0, 1], got {lambda}")));
        }
        Ok(Self { bounds, lambda })
    }

    /// Objective for foldover designs of size `n`.
    pub fn foldover(n: usize, m: usize, lambda: f64) -> Result<Self> {
        Self::new(bounds(n, m)?, lambda)
    }

    pub fn is_degenerate(&self) -> bool {
        self.bounds.b1 <= 1
    }

    /// `(U2 - k_m2)/(U2 - L2)`, or 1 when `U2 = L2` and `k_m2` is forced.
    fn spread_term(&self, k_m2: Rational) -> f64 {
        let b = &self.bounds;
        if b.u2 == b.l2 {
            return 1.0;
        }
        to_f64(&((b.u2 - k_m2) / (b.u2 - b.l2)))
    }

    fn separation_term(&self, k_min: u32) -> f64 {
        (k_min as f64 - 1.0) / (self.bounds.b1 as f64 - 1.0)
    }

    /// Raw objective value, unclamped.
    pub fn value(&self, k_min: u32, k_m2: Rational) -> f64 {
        if self.is_degenerate() {
            return self.spread_term(k_m2);
        }
        self.lambda * self.separation_term(k_min) + (1.0 - self.lambda) * self.spread_term(k_m2)
    }

    /// Reporting value: the second-moment term is clamped to `[0, 1]` when
    /// `k_m2` falls outside `[L2, U2]`.
    pub fn reported(&self, k_min: u32, k_m2: Rational) -> f64 {
        let spread = self.spread_term(k_m2).clamp(0.0, 1.0);
        if self.is_degenerate() {
            return spread;
        }
        self.lambda * self.separation_term(k_min) + (1.0 - self.lambda) * spread
    }

    /// Objective change for a one-row update of an `h`-row half-design, given
    /// the change in `k_min` and in the numerator `sum g(u)`.
    pub fn foldover_delta(&self, delta_k_min: i64, delta_g: i64, h: usize) -> f64 {
        let b = &self.bounds;
        let pairs = (h * (2 * h - 1)) as f64;
        let spread_range = to_f64(&(b.u2 - b.l2));
        let unit = if spread_range == 0.0 {
            0.0
        } else {
            2.0 * delta_g as f64 / (pairs * spread_range)
        };
        if self.is_degenerate() {
            return -unit;
        }
        let spread = (1.0 - self.lambda) * unit;
        self.lambda * delta_k_min as f64 / (b.b1 as f64 - 1.0) - spread
    }
}

/// Composite objective for a foldover-size design.
pub fn phi_lambda(k_min: u32, k_m2: Rational, n: usize, m: usize, lambda: f64) -> Result<f64> {
    Ok(Objective::foldover(n, m, lambda)?.value(k_min, k_m2))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriteriaSummary {
    pub k_min: u32,
    pub k_ave: Rational,
    pub k_m2: Rational,
    pub c1: Rational,
    pub c2: Rational,
    pub tr_m2: Rational,
    /// Reported (clamped) composite objective; `None` when the foldover bounds
    /// do not apply to this `(n, m)`.
    pub phi: Option<f64>,
    pub phi_raw: Option<f64>,
}

/// Evaluates every criterion for `d`. The composite objective uses the
/// foldover normalizers and is only reported when they apply.
pub fn summarize(d: &Design, lambda: f64) -> Result<CriteriaSummary> {
    let (n, m) = (d.n(), d.m());
    let hist = distance_histogram(d);
    let k_min = hist.k_min()?;
    let k_ave = hist.k_ave()?;
    let k_m2 = hist.k_m2()?;
    let (c1, c2) = c1_c2(&hist, n, m)?;
    let tr_m2 = ms_criterion_identity(&hist, n, m)?;
    let objective = match bounds(n, m) {
        Ok(b) => Some(Objective::new(b, lambda)?),
        Err(_) => None,
    };
    Ok(CriteriaSummary {
        k_min,
        k_ave,
        k_m2,
        c1,
        c2,
        tr_m2,
        phi: objective.as_ref().map(|o| o.reported(k_min, k_m2)),
        phi_raw: objective.as_ref().map(|o| o.value(k_min, k_m2)),
    })
}

impl CriteriaSummary {
    pub fn is_zero_c(&self) -> bool {
        self.c1.is_zero() && self.c2.is_zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design(rows: &[&str]) -> Design {
        Design::new(rows.iter().map(|r| Permutation::parse(r).unwrap()).collect()).unwrap()
    }

    pub(crate) fn d1() -> Design {
        design(&["0123", "1230", "2301", "3012"])
    }

    pub(crate) fn d2() -> Design {
        design(&["0123", "1302", "2031", "3210"])
    }

    fn r(n: i128, d: i128) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn example_histograms() {
        let h1 = distance_histogram(&d1());
        assert_eq!(h1.count(3), 4);
        assert_eq!(h1.count(4), 2);
        assert_eq!(h1.total_pairs(), 6);
        let h2 = distance_histogram(&d2());
        assert_eq!(h2.count(3), 4);
        assert_eq!(h2.count(6), 2);
        let same = design(&["0123", "0123"]);
        assert_eq!(distance_histogram(&same).counts(), &[1, 0, 0, 0, 0, 0, 0]);
    }

    #[test]
    fn example_moments() {
        let h1 = distance_histogram(&d1());
        assert_eq!(h1.k_min().unwrap(), 3);
        assert_eq!(h1.k_ave().unwrap(), r(10, 3));
        assert_eq!(h1.k_m2().unwrap(), r(34, 3));
        let h2 = distance_histogram(&d2());
        assert_eq!(h2.k_min().unwrap(), 3);
        assert_eq!(h2.k_ave().unwrap(), rat(4));
        assert_eq!(h2.k_m2().unwrap(), rat(18));

        let x = Permutation::parse("31420").unwrap();
        let pair = Design::new(vec![x.clone(), perm::foldover(&x)]).unwrap();
        let h = distance_histogram(&pair);
        assert_eq!(h.k_min().unwrap(), 10);
        assert_eq!(h.k_ave().unwrap(), rat(10));
        assert_eq!(h.k_m2().unwrap(), rat(100));
    }

    #[test]
    fn empty_histogram_is_an_error() {
        let h = DistanceHistogram::empty(6);
        assert!(h.k_min().is_err());
        assert!(h.k_ave().is_err());
    }

    #[test]
    fn ms_examples() {
        assert_eq!(ms_criterion_direct(&d1()), rat(208));
        let h1 = distance_histogram(&d1());
        assert_eq!(ms_criterion_identity(&h1, 4, 4).unwrap(), rat(208));
        let h2 = distance_histogram(&d2());
        assert_eq!(
            ms_criterion_identity(&h2, 4, 4).unwrap(),
            ms_criterion_direct(&d2())
        );
        // n identical runs: rank-one Gram with entries q + 1
        let same = design(&["2130", "2130", "2130"]);
        assert_eq!(ms_criterion_direct(&same), rat(9 * 49));
    }

    #[test]
    fn ms_full_design_m3() {
        let full = Design::new(all_permutations(3).unwrap()).unwrap();
        let h = distance_histogram(&full);
        let direct = ms_criterion_direct(&full);
        assert_eq!(ms_criterion_identity(&h, 6, 3).unwrap(), direct);
        assert_eq!(direct / rat(36), r(84, 18));
        assert_eq!(full_design_ms_normalized(3), r(84, 18));
    }

    #[test]
    fn wordlength_examples() {
        let h1 = distance_histogram(&d1());
        assert_eq!(c1_c2(&h1, 4, 4).unwrap(), (rat(1), r(2, 3)));
        assert_eq!(c1_c2_direct(&d1()).unwrap(), (rat(1), r(2, 3)));
        let h2 = distance_histogram(&d2());
        assert_eq!(c1_c2(&h2, 4, 4).unwrap().0, rat(0));
        assert_eq!(c1_c2_direct(&d2()).unwrap().0, rat(0));
        let full = Design::new(all_permutations(4).unwrap()).unwrap();
        assert_eq!(c1_c2_direct(&full).unwrap(), (rat(0), rat(0)));
        let full_h = distance_histogram(&full);
        assert_eq!(c1_c2(&full_h, 24, 4).unwrap(), (rat(0), rat(0)));
    }

    #[test]
    fn direct_wordlength_caps_m() {
        let runs: Vec<_> = (0..2)
            .map(|_| Permutation::identity(8).unwrap())
            .collect();
        let d = Design::new(runs).unwrap();
        assert!(matches!(c1_c2_direct(&d), Err(Error::Capability(_))));
    }

    #[test]
    fn bounds_examples() {
        let b = bounds(4, 4).unwrap();
        assert_eq!(b.b1, 3);
        assert_eq!(b.l2, r(134, 9));
        assert_eq!(b.u2, r(62, 3));
        assert_eq!(b.kave_bench, rat(4));
        assert!(b.l2 <= rat(18) && rat(18) <= b.u2);
        assert_eq!(bounds(8, 4).unwrap().kave_bench, r(24, 7));
        assert_eq!(bounds(6, 3).unwrap().b1, 1);
        assert!(bounds(5, 4).is_err());
        assert!(bounds(2, 4).is_err());
    }

    #[test]
    fn phi_examples() {
        let v = phi_lambda(3, rat(18), 4, 4, 0.5).unwrap();
        assert!((v - (0.5 + 0.5 * 6.0 / 13.0)).abs() < 1e-15);
        assert!((v - 0.7308).abs() < 1e-4);
        // lambda = 1 at k_min = B1
        assert_eq!(phi_lambda(3, rat(18), 4, 4, 1.0).unwrap(), 1.0);
        // lambda = 0 ignores k_min
        assert_eq!(
            phi_lambda(1, rat(18), 4, 4, 0.0).unwrap(),
            phi_lambda(3, rat(18), 4, 4, 0.0).unwrap()
        );
        assert!(phi_lambda(3, rat(18), 5, 4, 0.5).is_err());
        assert!(phi_lambda(3, rat(18), 4, 4, 1.5).is_err());
    }

    #[test]
    fn phi_degenerate_m3_uses_second_term() {
        let obj = Objective::foldover(4, 3, 0.9).unwrap();
        assert!(obj.is_degenerate());
        let b = &obj.bounds;
        let k_m2 = b.l2;
        assert_eq!(obj.value(1, k_m2), 1.0);
        // all six orders of m = 3: the second moment is forced
        let obj = Objective::foldover(6, 3, 0.5).unwrap();
        assert_eq!(obj.bounds.l2, obj.bounds.u2);
        assert_eq!(obj.value(1, obj.bounds.l2), 1.0);
        assert_eq!(obj.foldover_delta(0, 4, 3), 0.0);
    }

    #[test]
    fn reported_phi_clamps_second_term() {
        let obj = Objective::foldover(4, 4, 0.5).unwrap();
        let above = obj.bounds.u2 + rat(5);
        assert!(obj.value(3, above) < 0.5);
        assert_eq!(obj.reported(3, above), 0.5);
    }

    #[test]
    fn summary_of_d1() {
        let s = summarize(&d1(), 0.5).unwrap();
        assert_eq!(s.k_min, 3);
        assert_eq!(s.tr_m2, rat(208));
        assert_eq!((s.c1, s.c2), (rat(1), r(2, 3)));
        assert!(s.phi.is_some());
    }
}
