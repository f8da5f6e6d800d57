//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use oaforge::anneal::{seeded_rng, SearchRng};
use oaforge::perm::{foldover, random_permutation};
use oaforge::{Design, HalfDesign, Permutation, Rational};
use rand::Rng;

pub fn rng(seed: u64) -> SearchRng {
    seeded_rng(seed)
}

pub fn perm(s: &str) -> Permutation {
    Permutation::parse(s).unwrap()
}

pub fn design(rows: &[&str]) -> Design {
    Design::new(rows.iter().map(|r| perm(r)).collect()).unwrap()
}

pub fn d1() -> Design {
    design(&["0123", "1230", "2301", "3012"])
}

pub fn d2() -> Design {
    design(&["0123", "1302", "2031", "3210"])
}

pub fn r(n: i128, d: i128) -> Rational {
    Rational::new(n, d)
}

pub fn q_of(m: usize) -> u32 {
    (m * (m - 1) / 2) as u32
}

/// Pairs of positions `i < j` whose entries appear in the opposite order in `y`.
pub fn brute_kendall(x: &Permutation, y: &Permutation) -> u32 {
    let m = x.m();
    let mut pos_y = vec![0; m];
    for r in 0..m {
        pos_y[y.at(r)] = r;
    }
    let mut count = 0;
    for i in 0..m {
        for j in i + 1..m {
            if pos_y[x.at(i)] > pos_y[x.at(j)] {
                count += 1;
            }
        }
    }
    count
}

/// `+1` when `a` precedes `b`, for component pairs `a < b` in lexicographic order.
pub fn pwo_signs(x: &Permutation) -> Vec<i64> {
    let m = x.m();
    let pos: Vec<usize> = (0..m).map(|c| x.to_vec().iter().position(|&v| v == c).unwrap()).collect();
    let mut z = Vec::new();
    for a in 0..m {
        for b in a + 1..m {
            z.push(if pos[a] < pos[b] { 1 } else { -1 });
        }
    }
    z
}

pub fn dot(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `tr(M^2)` of the intercept-augmented PWO model: `sum_{i,j} (1 + z_i . z_j)^2`.
pub fn tr_m2_oracle(d: &Design) -> Rational {
    let z: Vec<Vec<i64>> = d.runs().iter().map(pwo_signs).collect();
    let mut total = 0i128;
    for a in &z {
        for b in &z {
            let g = 1 + dot(a, b) as i128;
            total += g * g;
        }
    }
    Rational::from_integer(total)
}

pub fn brute_distances(d: &Design) -> Vec<u32> {
    let runs = d.runs();
    let mut out = Vec::new();
    for i in 0..runs.len() {
        for j in i + 1..runs.len() {
            out.push(brute_kendall(&runs[i], &runs[j]));
        }
    }
    out
}

/// `(k_min, k_ave, k_m2)` from brute-force distances.
pub fn brute_moments(d: &Design) -> (u32, Rational, Rational) {
    let ds = brute_distances(d);
    let p = ds.len() as i128;
    let s1: i128 = ds.iter().map(|&u| u as i128).sum();
    let s2: i128 = ds.iter().map(|&u| (u as i128) * (u as i128)).sum();
    (*ds.iter().min().unwrap(), Rational::new(s1, p), Rational::new(s2, p))
}

/// `n` runs drawn uniformly with replacement.
pub fn random_design<R: Rng>(m: usize, n: usize, rng: &mut R) -> Design {
    Design::new((0..n).map(|_| random_permutation(m, rng).unwrap()).collect()).unwrap()
}

/// `n` distinct runs by rejection.
pub fn random_distinct_design<R: Rng>(m: usize, n: usize, rng: &mut R) -> Design {
    let mut runs: Vec<Permutation> = Vec::new();
    while runs.len() < n {
        let x = random_permutation(m, rng).unwrap();
        if !runs.contains(&x) {
            runs.push(x);
        }
    }
    Design::new(runs).unwrap()
}

/// `h` representatives with no repeat and no reversed pair, by rejection.
pub fn random_half<R: Rng>(m: usize, h: usize, rng: &mut R) -> HalfDesign {
    let mut reps: Vec<Permutation> = Vec::new();
    while reps.len() < h {
        let x = random_permutation(m, rng).unwrap();
        let rev = foldover(&x);
        if !reps.iter().any(|y| *y == x || *y == rev) {
            reps.push(x);
        }
    }
    HalfDesign::new(reps).unwrap()
}

/// Bound formulas of a foldover design, written out from scratch.
pub struct OracleBounds {
    pub b1: u32,
    pub l2: Rational,
    pub u2: Rational,
    pub k_ave: Rational,
}

pub fn oracle_bounds(n: usize, m: usize) -> OracleBounds {
    let (n, m) = (n as i128, m as i128);
    OracleBounds {
        b1: ((m * (m - 1)) / 4) as u32,
        l2: Rational::new(n * m * (m - 1) * (9 * m * m - 5 * m + 10), 144 * (n - 1)),
        u2: Rational::new(
            n * m * m * (m - 1) * (m - 1) - 4 * (n - 2) * (m * (m - 1) - 2),
            8 * (n - 1),
        ),
        k_ave: Rational::new(n * m * (m - 1), 4 * (n - 1)),
    }
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn dense_det(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    let mut det = 1.0;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            a.swap(piv, col);
            det = -det;
        }
        det *= a[col][col];
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    det
}

pub fn kernel_oracle(d: &Design, theta: f64, nugget: f64) -> Vec<Vec<f64>> {
    let runs = d.runs();
    (0..runs.len())
        .map(|i| {
            (0..runs.len())
                .map(|j| {
                    let k = (-theta * brute_kendall(&runs[i], &runs[j]) as f64).exp();
                    if i == j {
                        k + nugget
                    } else {
                        k
                    }
                })
                .collect()
        })
        .collect()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// One-sided paired t-test p-value for `H1: mean(diffs) > 0`.
pub fn paired_p_value(diffs: &[f64]) -> f64 {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    let n = diffs.len() as f64;
    let mu = mean(diffs);
    let var = diffs.iter().map(|d| (d - mu).powi(2)).sum::<f64>() / (n - 1.0);
    if var == 0.0 {
        return if mu > 0.0 { 0.0 } else { 1.0 };
    }
    let t = mu / (var / n).sqrt();
    let dist = StudentsT::new(0.0, 1.0, n - 1.0).unwrap();
    1.0 - dist.cdf(t)
}

/// Kernel determinant as an integer polynomial in `t = exp(-theta)`
/// (coefficient `j` multiplies `t^j`), by the Leibniz expansion.
pub fn det_polynomial(d: &Design) -> Vec<i64> {
    let runs = d.runs();
    let n = runs.len();
    let dist: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).map(|j| brute_kendall(&runs[i], &runs[j]) as usize).collect())
        .collect();
    let q = q_of(d.m()) as usize;
    let mut coeffs = vec![0i64; n * q + 1];
    let mut sigma: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    let mut sign = 1i64;
    let mut add = |sigma: &[usize], sign: i64| {
        let degree: usize = (0..n).map(|i| dist[i][sigma[i]]).sum();
        coeffs[degree] += sign;
    };
    add(&sigma, sign);
    // Heap's algorithm; every step is one transposition
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                sigma.swap(0, i);
            } else {
                sigma.swap(c[i], i);
            }
            sign = -sign;
            add(&sigma, sign);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    coeffs
}

pub fn eval_polynomial(coeffs: &[i64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c as f64)
}
