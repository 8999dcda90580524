use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use super::record::{Payload, PointSpec, ResultRecord};
use super::{Format, TaskKind};
use crate::entanglement::{cft_fit_pooled, EntropyCurve};
use crate::error::{Error, Result};
use crate::localization::collapse_fit;
use crate::spectral::{dispersion_curve, predict_critical_length, winding_number, PolylogOptions};

const POINT_COLUMNS: [&str; 8] = [
    "j_left_re",
    "j_left_im",
    "j_right_re",
    "j_right_im",
    "g",
    "alpha",
    "L",
    "status",
];
const SERIES_COLUMNS: [&str; 6] = [
    "j_left_re",
    "j_left_im",
    "j_right_re",
    "j_right_im",
    "g",
    "alpha",
];
const DISPERSION_SAMPLES: usize = 256;
const WINDING_SAMPLES: usize = 4096;

fn task_columns(task: TaskKind) -> &'static [&'static str] {
    match task {
        TaskKind::Spectrum => &["k", "E_re", "E_im", "is_complex"],
        TaskKind::Localization => &[
            "fraction",
            "m",
            "E_re",
            "E_im",
            "is_complex",
            "xi",
            "fit_quality",
            "window_first",
            "window_last",
            "flagged",
        ],
        TaskKind::Transition => &["complex_fraction", "n_complex"],
        TaskKind::Dynamics => &["row", "t", "S_half", "method"],
        TaskKind::Entanglement => &["l", "S", "method", "gap", "complex_fraction"],
    }
}

fn num(x: f64) -> String {
    x.to_string()
}

fn series_prefix(p: &PointSpec) -> Vec<String> {
    vec![
        num(p.j_left.0),
        num(p.j_left.1),
        num(p.j_right.0),
        num(p.j_right.1),
        num(p.g),
        p.alpha.to_string(),
    ]
}

fn point_prefix(r: &ResultRecord) -> Vec<String> {
    let mut v = series_prefix(&r.point);
    v.push(r.point.size.to_string());
    v.push(match &r.error {
        None => "ok".to_string(),
        Some(e) => format!("error: {e}"),
    });
    v
}

fn method_name(m: crate::entanglement::SteadyMethod) -> String {
    serde_json::to_value(m)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidParameter(format!("csv: {other:?}")),
    }
}

/// Long-format CSV: one row per eigenvalue, tracked mode, checkpoint, or cut.
/// Wall times are left out so identical runs give identical bytes.
pub fn write_csv<W: Write>(records: &[ResultRecord], task: TaskKind, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let header: Vec<&str> = POINT_COLUMNS
        .iter()
        .chain(task_columns(task))
        .copied()
        .collect();
    out.write_record(&header).map_err(csv_err)?;
    let width = task_columns(task).len();
    for r in records {
        let prefix = point_prefix(r);
        let rows: Vec<Vec<String>> = match &r.payload {
            None => vec![vec![String::new(); width]],
            Some(Payload::Spectrum {
                eigenvalues,
                is_complex,
                ..
            }) => eigenvalues
                .iter()
                .zip(is_complex)
                .enumerate()
                .map(|(k, (e, c))| vec![(k + 1).to_string(), num(e.0), num(e.1), c.to_string()])
                .collect(),
            Some(Payload::Localization { modes }) => modes
                .iter()
                .map(|m| {
                    vec![
                        num(m.fraction),
                        m.mode.to_string(),
                        num(m.energy.0),
                        num(m.energy.1),
                        m.is_complex.to_string(),
                        num(m.xi),
                        num(m.fit_quality),
                        m.window.0.to_string(),
                        m.window.1.to_string(),
                        m.flagged.to_string(),
                    ]
                })
                .collect(),
            Some(Payload::Transition {
                complex_fraction,
                n_complex,
            }) => {
                vec![vec![num(*complex_fraction), n_complex.to_string()]]
            }
            Some(Payload::Dynamics {
                times,
                half_entropy,
                steady_method,
                steady_half_entropy,
                ..
            }) => {
                let mut rows: Vec<Vec<String>> = times
                    .iter()
                    .zip(half_entropy)
                    .map(|(t, s)| vec!["trajectory".into(), num(*t), num(*s), String::new()])
                    .collect();
                rows.push(vec![
                    "steady".into(),
                    num(f64::INFINITY),
                    num(*steady_half_entropy),
                    method_name(*steady_method),
                ]);
                rows
            }
            Some(Payload::Entanglement {
                method,
                gap,
                complex_fraction,
                cuts,
                entropy,
                ..
            }) => cuts
                .iter()
                .zip(entropy)
                .map(|(l, s)| {
                    vec![
                        l.to_string(),
                        num(*s),
                        method_name(*method),
                        num(*gap),
                        num(*complex_fraction),
                    ]
                })
                .collect(),
        };
        for row in rows {
            out.write_record(prefix.iter().chain(&row))
                .map_err(csv_err)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(records: &[ResultRecord], w: W) -> Result<()> {
    let mut w = w;
    serde_json::to_writer_pretty(&mut w, records)?;
    writeln!(w)?;
    Ok(())
}

pub fn read_json<R: Read>(r: R) -> Result<Vec<ResultRecord>> {
    Ok(serde_json::from_reader(r)?)
}

/// A plot-ready table derived from a whole record set.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivedTable {
    pub name: &'static str,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl DerivedTable {
    fn new(name: &'static str, extra: &[&str]) -> Self {
        let header = SERIES_COLUMNS
            .iter()
            .chain(extra)
            .map(|s| s.to_string())
            .collect();
        Self {
            name,
            header,
            rows: Vec::new(),
        }
    }

    pub fn write<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header).map_err(csv_err)?;
        for row in &self.rows {
            out.write_record(row).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Consecutive records sharing couplings and decay (records are grid sorted).
fn series(records: &[ResultRecord]) -> Vec<&[ResultRecord]> {
    records
        .chunk_by(|a, b| a.point.series_key() == b.point.series_key())
        .collect()
}

pub fn derived_tables(records: &[ResultRecord], task: TaskKind) -> Vec<DerivedTable> {
    match task {
        TaskKind::Spectrum => spectrum_tables(records),
        TaskKind::Transition => vec![transition_table(records)],
        TaskKind::Localization => localization_tables(records),
        TaskKind::Dynamics => Vec::new(),
        TaskKind::Entanglement => entanglement_tables(records),
    }
}

fn spectrum_tables(records: &[ResultRecord]) -> Vec<DerivedTable> {
    let mut frac = DerivedTable::new("fraction", &["L", "complex_fraction"]);
    let mut disp = DerivedTable::new("dispersion", &["k", "E_re", "E_im"]);
    let mut wind = DerivedTable::new("winding", &["winding"]);
    for s in series(records) {
        let prefix = series_prefix(&s[0].point);
        for r in s {
            if let Some(Payload::Spectrum {
                complex_fraction, ..
            }) = &r.payload
            {
                let mut row = prefix.clone();
                row.extend([r.point.size.to_string(), num(*complex_fraction)]);
                frac.rows.push(row);
            }
        }
        let Ok(p) = s[0].point.params() else { continue };
        if let Ok(curve) = dispersion_curve(&p, DISPERSION_SAMPLES, PolylogOptions::curve()) {
            for (k, e) in curve {
                let mut row = prefix.clone();
                row.extend([num(k), num(e.re), num(e.im)]);
                disp.rows.push(row);
            }
        }
        let mut row = prefix.clone();
        row.push(
            match winding_number(&p, None, WINDING_SAMPLES, PolylogOptions::curve()) {
                Ok(w) => w.to_string(),
                Err(e) => format!("error: {e}"),
            },
        );
        wind.rows.push(row);
    }
    vec![frac, disp, wind]
}

fn transition_table(records: &[ResultRecord]) -> DerivedTable {
    let mut t = DerivedTable::new(
        "critical",
        &[
            "alpha_over_g",
            "threshold",
            "critical_numeric",
            "critical_predicted",
            "half_complex",
        ],
    );
    for s in series(records) {
        let p0 = &s[0].point;
        let threshold = p0.options.threshold;
        let fractions: Vec<(usize, f64)> = s
            .iter()
            .filter_map(|r| match &r.payload {
                Some(Payload::Transition {
                    complex_fraction, ..
                }) => Some((r.point.size, *complex_fraction)),
                _ => None,
            })
            .collect();
        let first = |hit: &dyn Fn(f64) -> bool| {
            fractions
                .iter()
                .find(|(_, f)| hit(*f))
                .map_or(String::new(), |(l, _)| l.to_string())
        };
        let predicted = match p0.alpha.exponent() {
            Some(a) if p0.j_left.1 == 0.0 && p0.j_right.1 == 0.0 => {
                predict_critical_length(a, p0.g)
                    .ok()
                    .flatten()
                    .map_or(String::new(), num)
            }
            _ => String::new(),
        };
        let ratio = p0.alpha.exponent().map_or(String::new(), |a| num(a / p0.g));
        let mut row = series_prefix(p0);
        row.extend([
            ratio,
            num(threshold),
            first(&|f| f > threshold),
            predicted,
            first(&|f| f >= 0.5),
        ]);
        t.rows.push(row);
    }
    t
}

fn localization_tables(records: &[ResultRecord]) -> Vec<DerivedTable> {
    let mut collapse =
        DerivedTable::new("collapse", &["fraction", "m", "L", "L_over_xi", "log_term"]);
    let mut fits = DerivedTable::new(
        "collapse_fit",
        &[
            "fraction",
            "critical_size",
            "slope",
            "intercept",
            "residual",
            "points",
        ],
    );
    let mut profile = DerivedTable::new("profile", &["fraction", "L", "x", "rescaled_probability"]);
    for s in series(records) {
        let p0 = &s[0].point;
        let prefix = series_prefix(p0);
        for (k, &fraction) in p0.options.fractions.iter().enumerate() {
            let modes: Vec<(usize, &super::ModeRecord)> = s
                .iter()
                .filter_map(|r| match &r.payload {
                    Some(Payload::Localization { modes }) => {
                        modes.get(k).map(|m| (r.point.size, m))
                    }
                    _ => None,
                })
                .collect();
            for (l, m) in &modes {
                for (x, y) in m.profile.iter().flatten() {
                    let mut row = prefix.clone();
                    row.extend([num(fraction), l.to_string(), num(*x), num(*y)]);
                    profile.rows.push(row);
                }
            }
            let Some(lc) = modes.iter().find(|(_, m)| m.is_complex).map(|(l, _)| *l) else {
                continue;
            };
            if lc < 2 {
                continue;
            }
            for (l, m) in modes.iter().filter(|(l, _)| *l >= lc) {
                let mut row = prefix.clone();
                row.extend([
                    num(fraction),
                    m.mode.to_string(),
                    l.to_string(),
                    num(*l as f64 / m.xi),
                    num(((*l as f64 - 1.0) / (lc as f64 - 1.0)).ln()),
                ]);
                collapse.rows.push(row);
            }
            let xi: Vec<(usize, f64)> = modes.iter().map(|(l, m)| (*l, m.xi)).collect();
            let alpha = p0.alpha.exponent().unwrap_or(f64::INFINITY);
            if let Ok(c) = collapse_fit(alpha, lc as f64, &xi) {
                let mut row = prefix.clone();
                row.extend([
                    num(fraction),
                    lc.to_string(),
                    num(c.slope),
                    num(c.intercept),
                    num(c.residual),
                    c.points_used.to_string(),
                ]);
                fits.rows.push(row);
            }
        }
    }
    let mut out = vec![collapse, fits];
    if !profile.rows.is_empty() {
        out.push(profile);
    }
    out
}

fn entanglement_tables(records: &[ResultRecord]) -> Vec<DerivedTable> {
    let mut half = DerivedTable::new(
        "halfchain",
        &[
            "L",
            "S_half",
            "method",
            "complex_fraction",
            "crossover_size",
        ],
    );
    let mut cft = DerivedTable::new("cft", &["L", "c", "s0", "residual", "low_confidence"]);
    for s in series(records) {
        let prefix = series_prefix(&s[0].point);
        let mut curves = Vec::new();
        let crossover = s
            .iter()
            .find(|r| matches!(&r.payload, Some(Payload::Entanglement { complex_fraction, .. }) if *complex_fraction >= 0.5))
            .map_or(String::new(), |r| r.point.size.to_string());
        for r in s {
            let Some(Payload::Entanglement {
                method,
                complex_fraction,
                cuts,
                entropy,
                cft: fit,
                ..
            }) = &r.payload
            else {
                continue;
            };
            let l = r.point.size;
            if let Some(k) = cuts.iter().position(|&c| c == l / 2) {
                let mut row = prefix.clone();
                row.extend([
                    l.to_string(),
                    num(entropy[k]),
                    method_name(*method),
                    num(*complex_fraction),
                    crossover.clone(),
                ]);
                half.rows.push(row);
            }
            if let Some(f) = fit {
                let mut row = prefix.clone();
                row.extend([
                    l.to_string(),
                    num(f.c),
                    num(f.s0),
                    num(f.residual),
                    f.low_confidence.to_string(),
                ]);
                cft.rows.push(row);
                curves.push(EntropyCurve {
                    size: l,
                    cuts: cuts.clone(),
                    entropy: entropy.clone(),
                });
            }
        }
        // one fit over every size of the series
        if curves.len() > 1 {
            if let Ok(f) = cft_fit_pooled(&curves, s[0].point.options.cft_trim) {
                let mut row = prefix.clone();
                row.extend([
                    "all".to_string(),
                    num(f.c),
                    num(f.s0),
                    num(f.residual),
                    f.low_confidence.to_string(),
                ]);
                cft.rows.push(row);
            }
        }
    }
    vec![half, cft]
}

fn sibling(path: &Path, name: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("results");
    path.with_file_name(format!("{stem}.{name}.csv"))
}

/// Writes the records to `path` and each derived table next to it as
/// `<stem>.<table>.csv`. Returns the files written.
pub fn emit(
    records: &[ResultRecord],
    task: TaskKind,
    format: Format,
    path: &Path,
) -> Result<Vec<PathBuf>> {
    let mut written = vec![path.to_path_buf()];
    let file = BufWriter::new(File::create(path)?);
    match format {
        Format::Csv => write_csv(records, task, file)?,
        Format::Json => write_json(records, file)?,
    }
    for table in derived_tables(records, task) {
        let p = sibling(path, table.name);
        table.write(BufWriter::new(File::create(&p)?))?;
        written.push(p);
    }
    Ok(written)
}
