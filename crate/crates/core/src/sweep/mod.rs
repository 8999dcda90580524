//! Parameter sweeps over `(couplings, α, L)` grids, figure presets, and
//! result persistence.
//!
//! Every task is evaluated independently per grid point. Quantities that
//! live across sizes (critical lengths, collapse fits, crossover markers) are
//! derived from the sorted records at emission time, so the output never
//! depends on worker scheduling.

mod config;
mod emit;
mod presets;
mod record;

use std::fmt;
use std::path::PathBuf;
use std::sync::mpsc;
use std::time::{Duration, Instant};

use faer::c64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{default_dt, ProjectionOptions};
use crate::dynamics::{init_cdw, AverageOptions, Propagator};
use crate::entanglement::{cft_fit, left_block_entropy, steady_state_entropy, SteadyOptions};
use crate::error::{Error, Result};
use crate::localization::{fit_localization_length, rescaled_profile, WindowPolicy};
use crate::model::{build_full, Decay, ModelParams};
use crate::spectral::{complex_fraction, eig_dense, mode_index};

pub use config::{build_config, load_config, merge_entries, parse_entries, Entry};
pub use emit::{derived_tables, emit, read_json, write_csv, write_json, DerivedTable};
pub use presets::{figure_preset, PRESETS};
pub use record::{ModeRecord, Payload, PointSpec, ResultRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Spectrum,
    Localization,
    Transition,
    Dynamics,
    Entanglement,
}

impl TaskKind {
    pub const ALL: [TaskKind; 5] = [
        TaskKind::Spectrum,
        TaskKind::Localization,
        TaskKind::Transition,
        TaskKind::Dynamics,
        TaskKind::Entanglement,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Spectrum => "spectrum",
            TaskKind::Localization => "localization",
            TaskKind::Transition => "transition",
            TaskKind::Dynamics => "dynamics",
            TaskKind::Entanglement => "entanglement",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.as_str() == s.trim())
            .ok_or_else(|| Error::InvalidParameter(format!("unknown task '{s}'")))
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::InvalidParameter(format!("unknown format '{other}'"))),
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// How the couplings of a grid point are chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CouplingSpec {
    /// `J_L = e^g`, `J_R = e^{-g}`.
    G { g: f64 },
    Explicit {
        j_left: (f64, f64),
        j_right: (f64, f64),
    },
    /// `g = α / ratio` for each finite, non-zero decay exponent.
    Ratio { ratio: f64 },
}

impl CouplingSpec {
    /// `None` when the spec does not apply to this decay.
    fn resolve(&self, decay: Decay) -> Option<(c64, c64)> {
        match *self {
            CouplingSpec::G { g } => Some((c64::new(g.exp(), 0.0), c64::new((-g).exp(), 0.0))),
            CouplingSpec::Explicit { j_left, j_right } => {
                Some((c64::new(j_left.0, j_left.1), c64::new(j_right.0, j_right.1)))
            }
            CouplingSpec::Ratio { ratio } => match decay {
                Decay::Power(a) if a > 0.0 => {
                    let g = a / ratio;
                    Some((c64::new(g.exp(), 0.0), c64::new((-g).exp(), 0.0)))
                }
                _ => None,
            },
        }
    }
}

/// Task settings shared by every point of a sweep (echoed into each record).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskOptions {
    /// Defaults to `1e-8 · max(1, ‖H‖_F)` when absent.
    pub reality_tol: Option<f64>,
    /// Complex fraction above which a transition is declared.
    pub threshold: f64,
    /// Tracked modes, as fractions of the Re-sorted spectrum.
    pub fractions: Vec<f64>,
    pub trim: f64,
    pub profile: bool,
    /// Defaults to `0.05 / ‖H‖_F`.
    pub dt: Option<f64>,
    pub t_max: f64,
    pub checkpoints: usize,
    pub degeneracy_tol: f64,
    pub average: AverageOptions,
    /// Full `S(l)` curve and CFT fit instead of the half-chain value only.
    pub curve: bool,
    pub cft_trim: f64,
}

impl Default for TaskOptions {
    fn default() -> Self {
        Self {
            reality_tol: None,
            threshold: 0.0,
            fractions: vec![0.3, 0.8],
            trim: 0.1,
            profile: false,
            dt: None,
            t_max: 20.0,
            checkpoints: 10,
            degeneracy_tol: 1e-10,
            average: AverageOptions::default(),
            curve: true,
            cft_trim: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub task: TaskKind,
    pub couplings: Vec<CouplingSpec>,
    pub alphas: Vec<Decay>,
    pub sizes: Vec<usize>,
    pub options: TaskOptions,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub workers: usize,
    /// Seed for randomized oracle draws; echoed but unused by the grid tasks.
    pub seed: u64,
    pub timeout_secs: u64,
}

impl SweepConfig {
    pub fn new(task: TaskKind) -> Self {
        Self {
            task,
            couplings: vec![CouplingSpec::G { g: 0.25 }],
            alphas: Vec::new(),
            sizes: Vec::new(),
            options: TaskOptions::default(),
            output: None,
            format: Format::Csv,
            workers: 1,
            seed: 0,
            timeout_secs: 300,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.couplings.is_empty() || self.alphas.is_empty() || self.sizes.is_empty() {
            return bad("couplings, alpha and size grids must be nonempty".into());
        }
        if self.workers == 0 {
            return bad("worker count must be at least 1".into());
        }
        if self.timeout_secs == 0 {
            return bad("timeout must be positive".into());
        }
        let o = &self.options;
        let positive = [
            ("degeneracy_tol", o.degeneracy_tol),
            ("t_max", o.t_max),
            ("avg_dt", o.average.dt),
            ("duration", o.average.duration),
        ];
        for (name, v) in positive
            .into_iter()
            .chain(o.reality_tol.map(|t| ("reality_tol", t)))
            .chain(o.dt.map(|t| ("dt", t)))
        {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if !(o.threshold >= 0.0 && o.threshold < 1.0) {
            return bad(format!("threshold {} outside [0, 1)", o.threshold));
        }
        if !(o.average.burn_in >= 0.0) {
            return bad("burn_in must be non-negative".into());
        }
        if !(0.0..0.5).contains(&o.trim) || !(0.0..0.5).contains(&o.cft_trim) {
            return bad("trim fractions must lie in [0, 0.5)".into());
        }
        if self.task == TaskKind::Localization && o.fractions.is_empty() {
            return bad("localization needs at least one mode fraction".into());
        }
        if let Some(f) = o.fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
            return bad(format!("mode fraction {f} outside [0, 1]"));
        }
        if self.task == TaskKind::Dynamics && o.checkpoints == 0 {
            return bad("dynamics needs at least one checkpoint".into());
        }
        if let Some(l) = self.sizes.iter().find(|&&l| l < 2) {
            return bad(format!("size {l} is below 2"));
        }
        if matches!(self.task, TaskKind::Dynamics | TaskKind::Entanglement) {
            if let Some(l) = self.sizes.iter().find(|&&l| l % 2 != 0) {
                return bad(format!("half filling needs even sizes, got {l}"));
            }
        }
        for c in &self.couplings {
            let finite = match *c {
                CouplingSpec::G { g } => g.is_finite(),
                CouplingSpec::Explicit { j_left, j_right } => {
                    [j_left.0, j_left.1, j_right.0, j_right.1]
                        .iter()
                        .all(|x| x.is_finite())
                }
                CouplingSpec::Ratio { ratio } => ratio.is_finite() && ratio > 0.0,
            };
            if !finite {
                return bad(format!("invalid coupling spec {c:?}"));
            }
        }
        Ok(())
    }

    /// Grid points sorted by `(J_L, J_R, α, L)` with duplicates removed.
    pub fn points(&self) -> Result<Vec<PointSpec>> {
        self.validate()?;
        let mut pts = Vec::new();
        for c in &self.couplings {
            for &alpha in &self.alphas {
                let Some((jl, jr)) = c.resolve(alpha) else {
                    continue;
                };
                for &size in &self.sizes {
                    ModelParams::new(jl, jr, alpha, size)?;
                    pts.push(PointSpec {
                        task: self.task,
                        j_left: (jl.re, jl.im),
                        j_right: (jr.re, jr.im),
                        g: 0.5 * (jl.norm() / jr.norm()).ln(),
                        alpha,
                        size,
                        options: self.options.clone(),
                    });
                }
            }
        }
        pts.sort_by(|a, b| {
            a.sort_key()
                .partial_cmp(&b.sort_key())
                .expect("finite keys")
        });
        pts.dedup_by(|a, b| a.sort_key() == b.sort_key());
        if pts.is_empty() {
            return Err(Error::InvalidParameter(
                "the grid has no applicable points".into(),
            ));
        }
        Ok(pts)
    }
}

/// Evaluates one grid point.
pub fn run_point(spec: &PointSpec) -> Result<Payload> {
    let p = spec.params()?;
    let o = &spec.options;
    let h = build_full(&p)?;
    match spec.task {
        TaskKind::Spectrum => {
            let s = eig_dense(&h, o.reality_tol)?;
            Ok(Payload::Spectrum {
                eigenvalues: s.eigenvalues.iter().map(|e| (e.re, e.im)).collect(),
                is_complex: s.is_complex.clone(),
                complex_fraction: complex_fraction(&s),
                max_residual: s.max_residual,
                reality_tol: s.reality_tol,
            })
        }
        TaskKind::Transition => {
            let s = eig_dense(&h, o.reality_tol)?;
            Ok(Payload::Transition {
                complex_fraction: complex_fraction(&s),
                n_complex: s.complex_count(),
            })
        }
        TaskKind::Localization => {
            let s = eig_dense(&h, o.reality_tol)?;
            let modes = o
                .fractions
                .iter()
                .map(|&f| {
                    let m = mode_index(f, p.size);
                    let v = s.eigenvector(m - 1);
                    let fit = fit_localization_length(&v, WindowPolicy::Trim(o.trim))?;
                    let e = s.eigenvalues[m - 1];
                    Ok(ModeRecord {
                        fraction: f,
                        mode: m,
                        energy: (e.re, e.im),
                        is_complex: s.is_complex[m - 1],
                        xi: fit.xi,
                        fit_quality: fit.fit_quality,
                        window: fit.window,
                        flagged: fit.flagged,
                        profile: o.profile.then(|| rescaled_profile(&v)),
                    })
                })
                .collect::<Result<_>>()?;
            Ok(Payload::Localization { modes })
        }
        TaskKind::Dynamics => {
            let dt = o.dt.unwrap_or_else(|| default_dt(&h));
            let steps = (o.t_max / dt).ceil() as usize;
            let prop = Propagator::new(&h, dt)?;
            let mut state = init_cdw(p.size)?;
            let half = p.size / 2;
            let mut times = vec![0.0];
            let mut half_entropy = vec![left_block_entropy(&state, half)?];
            let mut done = 0;
            for k in 1..=o.checkpoints {
                let target = steps * k / o.checkpoints;
                state = prop.advance(&state, target - done)?;
                done = target;
                times.push(done as f64 * dt);
                half_entropy.push(left_block_entropy(&state, half)?);
            }
            let steady = steady_state_entropy(&p, &[half], steady_options(o))?;
            Ok(Payload::Dynamics {
                dt,
                times,
                half_entropy,
                steady_method: steady.method,
                steady_gap: steady.gap,
                steady_half_entropy: steady.entropy[0],
            })
        }
        TaskKind::Entanglement => {
            let cuts: Vec<usize> = if o.curve {
                (1..p.size).collect()
            } else {
                vec![p.size / 2]
            };
            let s = steady_state_entropy(&p, &cuts, steady_options(o))?;
            let cft = if o.curve {
                let curve = crate::entanglement::EntropyCurve {
                    size: p.size,
                    cuts: s.cuts.clone(),
                    entropy: s.entropy.clone(),
                };
                cft_fit(&curve, o.cft_trim).ok()
            } else {
                None
            };
            let spec_f = complex_fraction(&eig_dense(&h, o.reality_tol)?);
            Ok(Payload::Entanglement {
                method: s.method,
                gap: s.gap,
                complex_fraction: spec_f,
                cuts: s.cuts,
                entropy: s.entropy,
                cft,
            })
        }
    }
}

fn steady_options(o: &TaskOptions) -> SteadyOptions {
    SteadyOptions {
        projection: ProjectionOptions {
            degeneracy_tol: o.degeneracy_tol,
            allow_ties: false,
        },
        average: o.average,
    }
}

fn run_with_timeout(spec: &PointSpec, seconds: u64) -> Result<Payload> {
    let (tx, rx) = mpsc::channel();
    let owned = spec.clone();
    std::thread::spawn(move || {
        let _ = tx.send(run_point(&owned));
    });
    match rx.recv_timeout(Duration::from_secs(seconds)) {
        Ok(r) => r,
        Err(mpsc::RecvTimeoutError::Timeout) => Err(Error::Timeout { seconds }),
        Err(mpsc::RecvTimeoutError::Disconnected) => Err(Error::InvalidParameter(
            "grid point evaluation panicked".into(),
        )),
    }
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub records: Vec<ResultRecord>,
    pub failures: usize,
    /// Files written (main output first, then derived tables).
    pub written: Vec<PathBuf>,
}

impl SweepReport {
    pub fn all_ok(&self) -> bool {
        self.failures == 0
    }
}

/// Runs every grid point on a pool of `workers` threads. Failed points are
/// recorded, never fatal; the records come back in grid order.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepReport> {
    let points = config.points()?;
    if let Some(path) = &config.output {
        // fail fast on an unwritable destination
        std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let records: Vec<ResultRecord> = pool.install(|| {
        points
            .par_iter()
            .map(|spec| {
                let start = Instant::now();
                let outcome = run_with_timeout(spec, config.timeout_secs);
                ResultRecord::new(spec.clone(), outcome, start.elapsed().as_secs_f64())
            })
            .collect()
    });
    let failures = records.iter().filter(|r| r.error.is_some()).count();
    let written = match &config.output {
        Some(path) => emit(&records, config.task, config.format, path)?,
        None => Vec::new(),
    };
    Ok(SweepReport {
        records,
        failures,
        written,
    })
}
