//! Design files and metrics reports.
//!
//! A design file has one run per line as comma-separated component labels.
//! Lines starting with `#` are comments; `# key=value` comments carry
//! metadata (`m`, `n`, `seed`, `method`, `lambda`).

use std::fmt::Write as _;

use serde::Serialize;

use crate::criteria::{bounds, summarize, to_f64, CriteriaSummary, Design, Rational};
use crate::error::{Error, Result};
use crate::foldover::detect_foldover;
use crate::perm::Permutation;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DesignMeta {
    pub seed: Option<u64>,
    pub method: Option<String>,
    pub lambda: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DesignFile {
    pub design: Design,
    pub meta: DesignMeta,
}

pub fn write_design(design: &Design, meta: &DesignMeta) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# m={}", design.m());
    let _ = writeln!(out, "# n={}", design.n());
    if let Some(seed) = meta.seed {
        let _ = writeln!(out, "# seed={seed}");
    }
    if let Some(method) = &meta.method {
        let _ = writeln!(out, "# method={method}");
    }
    if let Some(lambda) = meta.lambda {
        let _ = writeln!(out, "# lambda={lambda}");
    }
    for x in design.runs() {
        let _ = writeln!(out, "{x}");
    }
    out
}

fn meta_value<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Parse {
        line,
        message: format!("bad value {value:?} for {key}"),
    })
}

pub fn parse_design(text: &str) -> Result<DesignFile> {
    let mut meta = DesignMeta::default();
    let mut declared_m: Option<(usize, usize)> = None;
    let mut declared_n: Option<(usize, usize)> = None;
    let mut runs: Vec<Permutation> = Vec::new();
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        last_line = line;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                let value = value.trim();
                match key.trim() {
                    "m" => declared_m = Some((line, meta_value(line, "m", value)?)),
                    "n" => declared_n = Some((line, meta_value(line, "n", value)?)),
                    "seed" => meta.seed = Some(meta_value(line, "seed", value)?),
                    "method" => meta.method = Some(value.to_string()),
                    "lambda" => meta.lambda = Some(meta_value(line, "lambda", value)?),
                    _ => {}
                }
            }
            continue;
        }
        let x = Permutation::parse(trimmed).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let expected = declared_m.map(|(_, m)| m).or(runs.first().map(Permutation::m));
        if let Some(m) = expected {
            if x.m() != m {
                return Err(Error::Parse {
                    line,
                    message: format!("run has {} components, expected {m}", x.m()),
                });
            }
        }
        runs.push(x);
    }
    if let Some((line, n)) = declared_n {
        if n != runs.len() {
            return Err(Error::Parse {
                line,
                message: format!("header declares n = {n} but the file has {} runs", runs.len()),
            });
        }
    }
    let design = Design::new(runs).map_err(|e| Error::Parse {
        line: last_line.max(1),
        message: e.to_string(),
    })?;
    Ok(DesignFile { design, meta })
}

/// A rational rendered exactly (`"p/q"`, or `"p"` for integers) and as a float.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactValue {
    pub exact: String,
    pub decimal: f64,
}

impl From<&Rational> for ExactValue {
    fn from(r: &Rational) -> Self {
        Self {
            exact: r.to_string(),
            decimal: to_f64(r),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsReport {
    #[serde(rename = "B1")]
    pub b1: u32,
    #[serde(rename = "L2")]
    pub l2: ExactValue,
    #[serde(rename = "U2")]
    pub u2: ExactValue,
    pub kave_bench: ExactValue,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsReport {
    pub m: usize,
    pub n: usize,
    pub method: Option<String>,
    pub seed: Option<u64>,
    pub lambda: f64,
    pub k_min: u32,
    pub k_ave: ExactValue,
    pub k_m2: ExactValue,
    pub c1: ExactValue,
    pub c2: ExactValue,
    pub tr_m2: ExactValue,
    pub phi: Option<f64>,
    pub bounds: Option<BoundsReport>,
    pub foldover: bool,
    pub warnings: Vec<String>,
    pub elapsed_seconds: Option<f64>,
    pub update_count: Option<u64>,
}

impl MetricsReport {
    /// Evaluates `design` and assembles the report. Run-time fields are left
    /// empty.
    pub fn new(design: &Design, meta: &DesignMeta, lambda: f64) -> Result<Self> {
        let summary = summarize(design, lambda)?;
        Ok(Self::from_summary(design, &summary, meta, lambda))
    }

    pub fn from_summary(design: &Design, s: &CriteriaSummary, meta: &DesignMeta, lambda: f64) -> Self {
        let mut warnings = Vec::new();
        if design.has_repeats() {
            warnings.push("design contains repeated runs; k_min is 0".to_string());
        }
        let bounds = bounds(design.n(), design.m()).ok().map(|b| BoundsReport {
            b1: b.b1,
            l2: (&b.l2).into(),
            u2: (&b.u2).into(),
            kave_bench: (&b.kave_bench).into(),
        });
        Self {
            m: design.m(),
            n: design.n(),
            method: meta.method.clone(),
            seed: meta.seed,
            lambda,
            k_min: s.k_min,
            k_ave: (&s.k_ave).into(),
            k_m2: (&s.k_m2).into(),
            c1: (&s.c1).into(),
            c2: (&s.c2).into(),
            tr_m2: (&s.tr_m2).into(),
            phi: s.phi,
            bounds,
            foldover: detect_foldover(design).is_some(),
            warnings,
            elapsed_seconds: None,
            update_count: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const D1: &str = "0,1,2,3\n1,2,3,0\n2,3,0,1\n3,0,1,2\n";

    #[test]
    fn d1_report() {
        let file = parse_design(D1).unwrap();
        let r = MetricsReport::new(&file.design, &file.meta, 0.5).unwrap();
        assert_eq!(r.k_min, 3);
        assert_eq!(r.k_ave.exact, "10/3");
        assert_eq!(r.k_m2.exact, "34/3");
        assert_eq!(r.c1.exact, "1");
        assert_eq!(r.c2.exact, "2/3");
        assert_eq!(r.tr_m2.exact, "208");
        assert!(!r.foldover);
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(json["bounds"]["B1"], 3);
        assert_eq!(json["bounds"]["L2"]["exact"], "134/9");
        assert_eq!(json["k_ave"]["decimal"], 10.0 / 3.0);
    }

    #[test]
    fn d2_is_foldover() {
        let file = parse_design("0123\n1302\n2031\n3210\n").unwrap();
        let r = MetricsReport::new(&file.design, &file.meta, 0.5).unwrap();
        assert!(r.foldover);
        assert_eq!(r.k_ave.exact, "4");
        assert!((r.phi.unwrap() - (0.5 + 0.5 * 6.0 / 13.0)).abs() < 1e-12);
    }

    #[test]
    fn duplicates_warn() {
        let file = parse_design("0,1,2\n0,1,2\n2,1,0\n").unwrap();
        let r = MetricsReport::new(&file.design, &file.meta, 0.5).unwrap();
        assert_eq!(r.k_min, 0);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn round_trip_with_metadata() {
        let file = parse_design(D1).unwrap();
        let meta = DesignMeta {
            seed: Some(7),
            method: Some("fsa-kd".into()),
            lambda: Some(0.25),
        };
        let text = write_design(&file.design, &meta);
        let back = parse_design(&text).unwrap();
        assert_eq!(back.design, file.design);
        assert_eq!(back.meta, meta);
        assert_eq!(write_design(&back.design, &back.meta), text);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases = [
            ("# m=4\n0,1,2,3\n0,1,2\n", 3),
            ("0,1,2\n\n0,1,1\n", 3),
            ("# seed=x\n0,1\n1,0\n", 1),
            ("# n=3\n0,1\n1,0\n", 1),
            ("0,1,2\n", 1),
        ];
        for (text, line) in cases {
            match parse_design(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }
}
