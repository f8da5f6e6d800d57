//! Budget-matched comparison of design-search methods.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::anneal::{odd_run_design, ordinary_sa, run_fsa_kd, seeded_rng, AnnealConfig, UpdateMode};
use crate::criteria::{summarize, to_f64};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchMethod {
    OrdinarySa,
    FoldoverFull,
    FoldoverIncremental,
}

impl BenchMethod {
    pub const ALL: [BenchMethod; 3] = [
        BenchMethod::OrdinarySa,
        BenchMethod::FoldoverFull,
        BenchMethod::FoldoverIncremental,
    ];
}

impl fmt::Display for BenchMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BenchMethod::OrdinarySa => "ordinary-sa",
            BenchMethod::FoldoverFull => "foldover-full",
            BenchMethod::FoldoverIncremental => "foldover-incremental",
        })
    }
}

impl FromStr for BenchMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BenchMethod::ALL
            .into_iter()
            .find(|m| m.to_string() == s)
            .ok_or_else(|| Error::Domain(format!("unknown method {s:?}")))
    }
}

/// Per-cell search budget.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Budget {
    Updates(u64),
    Seconds(f64),
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Budget::Updates(n) => write!(f, "updates:{n}"),
            Budget::Seconds(s) => write!(f, "seconds:{s}"),
        }
    }
}

impl FromStr for Budget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Domain(format!("budget must be updates:N or seconds:S, got {s:?}"));
        let (kind, value) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "updates" => value.parse().map(Budget::Updates).map_err(|_| bad()),
            "seconds" => match value.parse::<f64>() {
                Ok(v) if v > 0.0 && v.is_finite() => Ok(Budget::Seconds(v)),
                _ => Err(bad()),
            },
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchSpec {
    pub m_list: Vec<usize>,
    pub n_list: Vec<usize>,
    pub methods: Vec<BenchMethod>,
    pub reps: usize,
    pub budget: Budget,
    pub seed: u64,
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub m: usize,
    pub n: usize,
    pub method: BenchMethod,
    pub rep: usize,
    pub seed: u64,
    pub elapsed_seconds: f64,
    pub updates: u64,
    pub k_min: u32,
    pub k_m2: f64,
    pub phi: f64,
}

/// Seed of cell `(m, n, rep)`; every method sees the same seed.
pub fn cell_seed(base: u64, m: usize, n: usize, rep: usize) -> u64 {
    // splitmix64 over the packed key
    let mut z = base ^ ((m as u64) << 48) ^ ((n as u64) << 24) ^ rep as u64;
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn cell_config(m: usize, n: usize, seed: u64, lambda: f64, budget: Budget) -> AnnealConfig {
    let mut cfg = AnnealConfig::new(m, n, seed);
    cfg.lambda = lambda;
    cfg.record_trace = false;
    // the budget alone ends the search
    cfg.t_min = 0.0;
    match budget {
        Budget::Updates(k) => cfg.max_iterations = k,
        Budget::Seconds(s) => {
            cfg.max_iterations = u64::MAX;
            cfg.time_limit = Some(Duration::from_secs_f64(s));
        }
    }
    cfg
}

/// Runs one cell. Elapsed time covers initialization, search, construction
/// of the final design and its evaluation.
pub fn run_cell(m: usize, n: usize, method: BenchMethod, rep: usize, spec: &BenchSpec) -> Result<BenchRow> {
    let seed = cell_seed(spec.seed, m, n, rep);
    let mut cfg = cell_config(m, n, seed, spec.lambda, spec.budget);
    let mut rng = seeded_rng(seed);
    let start = Instant::now();
    let (design, updates) = match method {
        BenchMethod::OrdinarySa => {
            let out = ordinary_sa(&cfg, &mut rng)?;
            (out.design, out.stats.updates)
        }
        BenchMethod::FoldoverFull | BenchMethod::FoldoverIncremental => {
            cfg.update_mode = if method == BenchMethod::FoldoverFull {
                UpdateMode::Full
            } else {
                UpdateMode::Incremental
            };
            if n % 2 == 0 {
                let out = run_fsa_kd(&cfg, &mut rng)?;
                (out.design, out.stats.updates)
            } else {
                let out = odd_run_design(&cfg, &mut rng)?;
                (out.design, out.parent.stats.updates)
            }
        }
    };
    let summary = summarize(&design, spec.lambda)?;
    let elapsed = start.elapsed().as_secs_f64();
    let phi = summary.phi_raw.unwrap_or_else(|| {
        crate::criteria::Objective::new(crate::criteria::Bounds::normalizers(n, m), spec.lambda)
            .map(|o| o.value(summary.k_min, summary.k_m2))
            .unwrap_or(f64::NAN)
    });
    Ok(BenchRow {
        m,
        n,
        method,
        rep,
        seed,
        elapsed_seconds: elapsed,
        updates,
        k_min: summary.k_min,
        k_m2: to_f64(&summary.k_m2),
        phi,
    })
}

/// Runs every `(m, n, method, rep)` cell and returns rows sorted by that key.
/// Cells of the same rep are interleaved across methods so that drifting
/// machine load affects them alike.
pub fn run_bench(spec: &BenchSpec) -> Result<Vec<BenchRow>> {
    let mut cells = Vec::new();
    for &m in &spec.m_list {
        for &n in &spec.n_list {
            for rep in 0..spec.reps {
                for &method in &spec.methods {
                    cells.push((m, n, method, rep));
                }
            }
        }
    }
    let mut rows = cells
        .into_par_iter()
        .map(|(m, n, method, rep)| run_cell(m, n, method, rep, spec))
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|r| (r.m, r.n, r.method, r.rep));
    Ok(rows)
}

/// Like [`run_bench`] but on a dedicated pool of `jobs` threads.
pub fn run_bench_with_jobs(spec: &BenchSpec, jobs: usize) -> Result<Vec<BenchRow>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Domain(format!("cannot start {jobs} workers: {e}")))?;
    pool.install(|| run_bench(spec))
}

pub const CSV_HEADER: &str = "m,n,method,rep,seed,elapsed_seconds,updates,k_min,k_m2,phi";

pub fn rows_to_csv(rows: &[BenchRow]) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.6},{},{},{},{}",
            r.m, r.n, r.method, r.rep, r.seed, r.elapsed_seconds, r.updates, r.k_min, r.k_m2, r.phi
        );
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MethodMeans {
    pub cells: usize,
    pub elapsed_seconds: f64,
    pub updates: f64,
    pub k_min: f64,
    pub k_m2: f64,
    pub phi: f64,
}

fn means<'a>(rows: impl Iterator<Item = &'a BenchRow>) -> MethodMeans {
    let mut acc = MethodMeans::default();
    for r in rows {
        acc.cells += 1;
        acc.elapsed_seconds += r.elapsed_seconds;
        acc.updates += r.updates as f64;
        acc.k_min += r.k_min as f64;
        acc.k_m2 += r.k_m2;
        acc.phi += r.phi;
    }
    let c = acc.cells.max(1) as f64;
    MethodMeans {
        cells: acc.cells,
        elapsed_seconds: acc.elapsed_seconds / c,
        updates: acc.updates / c,
        k_min: acc.k_min / c,
        k_m2: acc.k_m2 / c,
        phi: acc.phi / c,
    }
}

/// Means per method over all cells.
pub fn method_means(rows: &[BenchRow]) -> BTreeMap<BenchMethod, MethodMeans> {
    let methods: std::collections::BTreeSet<_> = rows.iter().map(|r| r.method).collect();
    methods
        .into_iter()
        .map(|m| (m, means(rows.iter().filter(|r| r.method == m))))
        .collect()
}

/// Means per `(m, n, method)`.
pub fn cell_means(rows: &[BenchRow]) -> BTreeMap<(usize, usize, BenchMethod), MethodMeans> {
    let keys: std::collections::BTreeSet<_> = rows.iter().map(|r| (r.m, r.n, r.method)).collect();
    keys.into_iter()
        .map(|k| (k, means(rows.iter().filter(|r| (r.m, r.n, r.method) == k))))
        .collect()
}

/// Plain-text summary with one line per `(m, n, method)` and per method.
pub fn summary_table(rows: &[BenchRow]) -> String {
    let mut out = String::from("m,n,method,cells,mean_elapsed_seconds,mean_k_min,mean_k_m2,mean_phi\n");
    let line = |out: &mut String, m: &str, n: &str, method: BenchMethod, s: &MethodMeans| {
        let _ = writeln!(
            out,
            "{m},{n},{method},{},{:.6},{:.3},{:.4},{:.4}",
            s.cells, s.elapsed_seconds, s.k_min, s.k_m2, s.phi
        );
    };
    for ((m, n, method), s) in cell_means(rows) {
        line(&mut out, &m.to_string(), &n.to_string(), method, &s);
    }
    for (method, s) in method_means(rows) {
        line(&mut out, "all", "all", method, &s);
    }
    out
}
