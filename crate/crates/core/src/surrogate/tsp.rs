use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::perm::Permutation;

/// Travelling-salesman instance: `cost[p][q]` is the cost of going from city
/// `p` to city `q`.
#[derive(Clone, Debug, PartialEq)]
pub struct TspInstance {
    m: usize,
    cost: Vec<f64>,
}

impl TspInstance {
    pub fn new(m: usize, cost: Vec<f64>) -> Result<Self> {
        if m < 2 {
            return Err(Error::Domain(format!("need at least 2 cities, got {m}")));
        }
        if cost.len() != m * m {
            return Err(Error::Domain(format!(
                "cost matrix needs {} entries, got {}",
                m * m,
                cost.len()
            )));
        }
        for p in 0..m {
            for q in 0..m {
                let c = cost[p * m + q];
                if !c.is_finite() || c < 0.0 {
                    return Err(Error::Domain(format!("cost ({p}, {q}) = {c} is invalid")));
                }
                if p == q && c != 0.0 {
                    return Err(Error::Domain(format!("cost ({p}, {p}) must be 0, got {c}")));
                }
            }
        }
        Ok(Self { m, cost })
    }

    /// Cities uniform on the unit square with Euclidean costs.
    pub fn random_euclidean<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<Self> {
        let pts: Vec<(f64, f64)> = (0..m).map(|_| (rng.random(), rng.random())).collect();
        let mut cost = vec![0.0; m * m];
        for p in 0..m {
            for q in 0..m {
                let (dx, dy) = (pts[p].0 - pts[q].0, pts[p].1 - pts[q].1);
                cost[p * m + q] = dx.hypot(dy);
            }
        }
        Self::new(m, cost)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn cost(&self, from: usize, to: usize) -> f64 {
        self.cost[from * self.m + to]
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.m).all(|p| (0..p).all(|q| self.cost(p, q) == self.cost(q, p)))
    }

    /// Plain-text matrix: first line `m`, then `m` comma-separated rows.
    /// Lines starting with `#` are comments.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", self.m);
        for p in 0..self.m {
            let row: Vec<String> = (0..self.m).map(|q| format!("{}", self.cost(p, q))).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (line, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "missing header with the city count".into(),
        })?;
        let m: usize = header.parse().map_err(|_| Error::Parse {
            line,
            message: format!("header {header:?} is not a city count"),
        })?;
        let mut cost = Vec::with_capacity(m * m);
        let mut rows = 0;
        for (line, text) in lines {
            let row: Vec<f64> = text
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse {
                    line,
                    message: format!("bad cost: {e}"),
                })?;
            if row.len() != m {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {m} costs, found {}", row.len()),
                });
            }
            cost.extend(row);
            rows += 1;
        }
        if rows != m {
            return Err(Error::Parse {
                line: text.lines().count(),
                message: format!("expected {m} rows, found {rows}"),
            });
        }
        Self::new(m, cost)
    }
}

/// Closed-tour cost `sum_r C(x_r, x_{r+1}) + C(x_m, x_1)`.
pub fn tsp_objective(x: &Permutation, inst: &TspInstance) -> Result<f64> {
    if x.m() != inst.m() {
        return Err(Error::Dimension {
            expected: inst.m(),
            found: x.m(),
        });
    }
    let m = x.m();
    Ok((0..m).map(|r| inst.cost(x.at(r), x.at((r + 1) % m))).sum())
}
