//! Summaries of JSON-lines run files.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;

use serde_json::{Map, Value};

use crate::error::{CliError, Result};

/// Diagnostic keys in output order.
pub const KEYS: [&str; 21] = [
    "t",
    "E",
    "K",
    "H1",
    "detS",
    "trS3",
    "g",
    "f",
    "lam2_q1.5",
    "lam2_q2",
    "lam2_q3",
    "lam2_qinf",
    "acc_q1.5",
    "acc_q2",
    "acc_q3",
    "acc_qinf",
    "ratio",
    "res_enstrophy",
    "res_orth",
    "res_vortdet",
    "res_isometry",
];

/// Slack for the monotonicity verdicts.
pub const MONOTONE_SLACK: f64 = 1e-6;

/// A parsed run file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunFile {
    pub records: Vec<Map<String, Value>>,
    pub report: Option<Map<String, Value>>,
}

impl RunFile {
    pub fn parse(text: &str, path: &str) -> Result<Self> {
        let err = |line: usize, message: String| CliError::Parse {
            path: path.to_string(),
            line,
            message,
        };
        let mut file = RunFile::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let v: Value = serde_json::from_str(raw).map_err(|e| err(line, e.to_string()))?;
            let Value::Object(map) = v else {
                return Err(err(line, "expected a JSON object".into()));
            };
            if map.get("report") == Some(&Value::Bool(true)) {
                if file.report.is_some() {
                    return Err(err(line, "second report line".into()));
                }
                file.report = Some(map);
                continue;
            }
            if file.report.is_some() {
                return Err(err(line, "record after the report line".into()));
            }
            for key in ["t", "E"] {
                if !map.get(key).is_some_and(Value::is_number) {
                    return Err(err(line, format!("record lacks numeric `{key}`")));
                }
            }
            if let Some(k) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
                return Err(err(line, format!("unknown key `{k}`")));
            }
            file.records.push(map);
        }
        if file.records.is_empty() {
            return Err(err(0, "no diagnostics records".into()));
        }
        Ok(file)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// `(t, value)` for every record carrying `key`.
    pub fn series(&self, key: &str) -> Vec<(f64, f64)> {
        self.records
            .iter()
            .filter_map(|r| Some((r.get("t")?.as_f64()?, r.get(key)?.as_f64()?)))
            .collect()
    }

    fn report_f64(&self, key: &str) -> Option<f64> {
        self.report.as_ref()?.get(key)?.as_f64()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stats {
    pub min: f64,
    pub max: f64,
    pub last: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Yes,
    No,
    NotApplicable,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Yes => "yes",
            Verdict::No => "no",
            Verdict::NotApplicable => "n/a",
        })
    }
}

/// Final accumulator value over its value at time `from`: half the envelope
/// time when the run got that far, else the first positive sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Growth {
    pub factor: f64,
    pub from: f64,
}

/// Everything `strainamp report` prints.
#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub records: usize,
    pub stats: Vec<(&'static str, Stats)>,
    pub e_non_increasing: Verdict,
    pub g_non_decreasing: Verdict,
    /// Over consecutive samples with perturbative ratio ≤ 2 when the ratio is recorded.
    pub f_non_decreasing: Verdict,
    pub envelope: Option<(u64, u64)>,
    pub acc_growth: Vec<(&'static str, Option<Growth>)>,
    pub outcome: Option<String>,
}

fn pairs_hold(pairs: impl Iterator<Item = (f64, f64)>, ok: impl Fn(f64, f64) -> bool) -> Verdict {
    let mut any = false;
    for (a, b) in pairs {
        any = true;
        if !ok(a, b) {
            return Verdict::No;
        }
    }
    if any {
        Verdict::Yes
    } else {
        Verdict::NotApplicable
    }
}

fn non_decreasing(s: &[(f64, f64)]) -> Verdict {
    pairs_hold(s.windows(2).map(|w| (w[0].1, w[1].1)), |a, b| {
        b >= a - MONOTONE_SLACK
    })
}

pub fn summarize(file: &RunFile) -> Summary {
    let stats = KEYS
        .iter()
        .filter_map(|&k| {
            let s = file.series(k);
            let last = s.last()?.1;
            let (min, max) = s
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, v)| {
                    (lo.min(v), hi.max(v))
                });
            Some((k, Stats { min, max, last }))
        })
        .collect();

    let e = file.series("E");
    let e_non_increasing = pairs_hold(e.windows(2).map(|w| (w[0].1, w[1].1)), |a, b| b <= a);
    let g_non_decreasing = non_decreasing(&file.series("g"));
    let f_non_decreasing = {
        let has_ratio = file.records.iter().any(|r| r.contains_key("ratio"));
        let small = |r: &Map<String, Value>| {
            r.get("ratio")
                .and_then(Value::as_f64)
                .is_some_and(|x| x <= 2.0)
        };
        let pairs = file
            .records
            .windows(2)
            .filter(|w| !has_ratio || (small(&w[0]) && small(&w[1])));
        let fv = |r: &Map<String, Value>| r.get("f").and_then(Value::as_f64);
        pairs_hold(
            pairs.filter_map(|w| Some((fv(&w[0])?, fv(&w[1])?))),
            |a, b| b >= a - MONOTONE_SLACK,
        )
    };

    let envelope = file
        .report_f64("envelope_samples")
        .zip(file.report_f64("envelope_passes"))
        .map(|(s, p)| (p as u64, s as u64));

    let t0 = e.first().map_or(0.0, |p| p.0);
    let t_last = e.last().map_or(0.0, |p| p.0);
    let half = file
        .report_f64("t_star_envelope")
        .map(|ts| t0 + 0.5 * ts)
        .filter(|&h| h < t_last);
    let acc_growth = ["acc_q1.5", "acc_q2", "acc_q3", "acc_qinf"]
        .into_iter()
        .map(|k| {
            let s = file.series(k);
            let last = s.last().copied();
            let base = match half {
                Some(h) => s.iter().rev().find(|p| p.0 <= h).copied(),
                None => s.iter().find(|p| p.1 > 0.0).copied(),
            };
            let growth = last
                .zip(base)
                .filter(|&(_, b)| b.1 > 0.0)
                .map(|(l, b)| Growth {
                    factor: l.1 / b.1,
                    from: b.0,
                });
            (k, growth)
        })
        .collect();

    Summary {
        records: file.records.len(),
        stats,
        e_non_increasing,
        g_non_decreasing,
        f_non_decreasing,
        envelope,
        acc_growth,
        outcome: file
            .report
            .as_ref()
            .and_then(|r| r.get("outcome")?.as_str().map(String::from)),
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        let _ = writeln!(out, "records: {}", self.records);
        if let Some(o) = &self.outcome {
            let _ = writeln!(out, "outcome: {o}");
        }
        let _ = writeln!(
            out,
            "{:<14} {:>14} {:>14} {:>14}",
            "key", "min", "max", "final"
        );
        for (k, s) in &self.stats {
            let _ = writeln!(
                out,
                "{k:<14} {:>14.6e} {:>14.6e} {:>14.6e}",
                s.min, s.max, s.last
            );
        }
        let _ = writeln!(out, "E monotone non-increasing: {}", self.e_non_increasing);
        let _ = writeln!(out, "g non-decreasing: {}", self.g_non_decreasing);
        let _ = writeln!(
            out,
            "f non-decreasing where ratio <= 2: {}",
            self.f_non_decreasing
        );
        match self.envelope {
            Some((p, s)) if s > 0 => {
                let _ = writeln!(
                    out,
                    "envelope pass fraction: {p}/{s} = {:.4}",
                    p as f64 / s as f64
                );
            }
            _ => {
                let _ = writeln!(out, "envelope pass fraction: n/a");
            }
        }
        for (k, g) in &self.acc_growth {
            match g {
                Some(g) => {
                    let _ = writeln!(out, "{k} growth: {:.4e} since t = {:.6e}", g.factor, g.from);
                }
                None => {
                    let _ = writeln!(out, "{k} growth: n/a");
                }
            }
        }
        f.write_str(out.trim_end())
    }
}
