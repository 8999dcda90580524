//! Flat `key = value` configuration. Repeating a grid key adds grid values;
//! a value of the form `start:stop:step` expands to an inclusive range.

use std::path::{Path, PathBuf};

use faer::c64;

use super::{CouplingSpec, Format, SweepConfig, TaskKind};
use crate::error::{Error, Result};
use crate::model::Decay;

const GRID_KEYS: [&str; 7] = [
    "g",
    "j_left",
    "j_right",
    "alpha",
    "alpha_over_g",
    "L",
    "fraction",
];
const SCALAR_KEYS: [&str; 19] = [
    "task",
    "reality_tol",
    "threshold",
    "trim",
    "profile",
    "dt",
    "t_max",
    "checkpoints",
    "degeneracy_tol",
    "avg_dt",
    "burn_in",
    "duration",
    "curve",
    "cft_trim",
    "output",
    "format",
    "workers",
    "seed",
    "timeout",
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry {
    /// 1-based source line, 0 for entries that did not come from a file.
    pub line: usize,
    pub key: String,
    pub value: String,
}

impl Entry {
    pub fn new(key: &str, value: &str) -> Self {
        Self {
            line: 0,
            key: key.to_string(),
            value: value.to_string(),
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Config {
            line: self.line,
            msg: format!("{}: {}", self.key, msg.into()),
        }
    }
}

pub fn parse_entries(text: &str) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
            line: k + 1,
            msg: format!("expected key = value, got '{line}'"),
        })?;
        let key = match key.trim() {
            "size" => "L",
            other => other,
        };
        if !GRID_KEYS.contains(&key) && !SCALAR_KEYS.contains(&key) {
            return Err(Error::Config {
                line: k + 1,
                msg: format!("unknown key '{key}'"),
            });
        }
        out.push(Entry {
            line: k + 1,
            key: key.to_string(),
            value: value.trim().to_string(),
        });
    }
    Ok(out)
}

pub fn load_config(path: &Path) -> Result<Vec<Entry>> {
    parse_entries(&std::fs::read_to_string(path)?)
}

/// `overrides` replace every `base` entry with the same key.
pub fn merge_entries(base: Vec<Entry>, overrides: Vec<Entry>) -> Vec<Entry> {
    let mut out: Vec<Entry> = base
        .into_iter()
        .filter(|e| !overrides.iter().any(|o| o.key == e.key))
        .collect();
    out.extend(overrides);
    out
}

fn parse_f64(e: &Entry, s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| e.err(format!("'{s}' is not a number")))
}

fn expand<T>(
    e: &Entry,
    parse: impl Fn(&str) -> Result<T>,
    step_of: impl Fn(f64, f64, f64) -> Vec<String>,
) -> Result<Vec<T>> {
    let parts: Vec<&str> = e.value.split(':').collect();
    match parts.len() {
        1 => Ok(vec![parse(&e.value)?]),
        3 => {
            let (a, b, s) = (
                parse_f64(e, parts[0])?,
                parse_f64(e, parts[1])?,
                parse_f64(e, parts[2])?,
            );
            if !(s > 0.0) || b < a {
                return Err(e.err("range needs start <= stop and a positive step"));
            }
            step_of(a, b, s).iter().map(|v| parse(v)).collect()
        }
        _ => Err(e.err("ranges are written start:stop:step")),
    }
}

fn float_range(a: f64, b: f64, s: f64) -> Vec<String> {
    let n = ((b - a) / s + 1e-9).floor() as usize;
    (0..=n).map(|i| (a + i as f64 * s).to_string()).collect()
}

fn floats(e: &Entry) -> Result<Vec<f64>> {
    expand(e, |s| parse_f64(e, s), float_range)
}

fn sizes(e: &Entry) -> Result<Vec<usize>> {
    expand(
        e,
        |s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| e.err(format!("'{s}' is not a size")))
        },
        |a, b, s| {
            float_range(a, b, s)
                .iter()
                .map(|v| (v.parse::<f64>().unwrap().round() as usize).to_string())
                .collect()
        },
    )
}

fn complex(e: &Entry) -> Result<(f64, f64)> {
    let z: c64 = e
        .value
        .replace(' ', "")
        .parse()
        .map_err(|_| e.err(format!("'{}' is not a complex number", e.value)))?;
    Ok((z.re, z.im))
}

fn boolean(e: &Entry) -> Result<bool> {
    match e.value.as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        v => Err(e.err(format!("'{v}' is not a boolean"))),
    }
}

/// Assembles a sweep. `task` (from the command line) wins over a `task` entry.
pub fn build_config(task: Option<TaskKind>, entries: &[Entry]) -> Result<SweepConfig> {
    for key in SCALAR_KEYS {
        let hits: Vec<&Entry> = entries.iter().filter(|e| e.key == key).collect();
        if hits.len() > 1 {
            return Err(hits[1].err("given more than once"));
        }
    }
    let task = match (task, entries.iter().find(|e| e.key == "task")) {
        (Some(t), _) => t,
        (None, Some(e)) => {
            TaskKind::parse(&e.value).map_err(|_| e.err(format!("unknown task '{}'", e.value)))?
        }
        (None, None) => {
            return Err(Error::Config {
                line: 0,
                msg: "no task given".into(),
            })
        }
    };
    let mut cfg = SweepConfig::new(task);
    let (mut g, mut jl, mut jr, mut ratio) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut fractions = Vec::new();
    for e in entries {
        let o = &mut cfg.options;
        match e.key.as_str() {
            "g" => g.extend(floats(e)?),
            "j_left" => jl.push(complex(e)?),
            "j_right" => jr.push(complex(e)?),
            "alpha" => {
                if e.value.contains(':') {
                    cfg.alphas.extend(floats(e)?.into_iter().map(Decay::Power));
                } else {
                    cfg.alphas
                        .push(Decay::parse(&e.value).map_err(|x| e.err(x.to_string()))?);
                }
            }
            "alpha_over_g" => ratio.extend(floats(e)?),
            "L" => cfg.sizes.extend(sizes(e)?),
            "fraction" => fractions.extend(floats(e)?),
            "task" => {}
            "reality_tol" => o.reality_tol = Some(parse_f64(e, &e.value)?),
            "threshold" => o.threshold = parse_f64(e, &e.value)?,
            "trim" => o.trim = parse_f64(e, &e.value)?,
            "profile" => o.profile = boolean(e)?,
            "dt" => o.dt = Some(parse_f64(e, &e.value)?),
            "t_max" => o.t_max = parse_f64(e, &e.value)?,
            "checkpoints" => o.checkpoints = sizes(e)?[0],
            "degeneracy_tol" => o.degeneracy_tol = parse_f64(e, &e.value)?,
            "avg_dt" => o.average.dt = parse_f64(e, &e.value)?,
            "burn_in" => o.average.burn_in = parse_f64(e, &e.value)?,
            "duration" => o.average.duration = parse_f64(e, &e.value)?,
            "curve" => o.curve = boolean(e)?,
            "cft_trim" => o.cft_trim = parse_f64(e, &e.value)?,
            "output" => cfg.output = Some(PathBuf::from(&e.value)),
            "format" => cfg.format = Format::parse(&e.value).map_err(|x| e.err(x.to_string()))?,
            "workers" => cfg.workers = e.value.parse().map_err(|_| e.err("not a count"))?,
            "seed" => cfg.seed = e.value.parse().map_err(|_| e.err("not an integer"))?,
            "timeout" => {
                cfg.timeout_secs = e
                    .value
                    .parse()
                    .map_err(|_| e.err("not a number of seconds"))?
            }
            other => return Err(e.err(format!("unknown key '{other}'"))),
        }
    }
    if !fractions.is_empty() {
        cfg.options.fractions = fractions;
    }
    cfg.couplings = if !jl.is_empty() || !jr.is_empty() {
        if jl.is_empty() || jr.is_empty() {
            return Err(Error::Config {
                line: 0,
                msg: "j_left and j_right must be given together".into(),
            });
        }
        jl.iter()
            .flat_map(|&l| {
                jr.iter().map(move |&r| CouplingSpec::Explicit {
                    j_left: l,
                    j_right: r,
                })
            })
            .collect()
    } else {
        g.into_iter()
            .map(|g| CouplingSpec::G { g })
            .chain(ratio.into_iter().map(|ratio| CouplingSpec::Ratio { ratio }))
            .collect()
    };
    cfg.validate().map_err(|e| Error::Config {
        line: 0,
        msg: e.to_string(),
    })?;
    Ok(cfg)
}
