use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nhse_core::sweep::{
    build_config, figure_preset, load_config, merge_entries, run_sweep, write_csv, write_json,
    Entry, Format, SweepConfig, TaskKind, PRESETS,
};

/// Spectra, localization, and entanglement sweeps for long-range
/// nonreciprocal chains.
#[derive(Parser)]
#[command(name = "nhse", version)]
struct Cli {
    /// key = value configuration file; command-line flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; derived tables are written next to it. Defaults to stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// csv or json.
    #[arg(long, global = true)]
    format: Option<String>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Per-point timeout in seconds.
    #[arg(long, global = true)]
    timeout: Option<u64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Open-chain eigenvalues and complex fraction per grid point.
    Spectrum(Grid),
    /// Localization lengths of tracked modes.
    Localization(Grid),
    /// Complex fraction versus size, with critical lengths.
    Transition(Grid),
    /// No-jump evolution from the charge-density wave.
    Dynamics(Grid),
    /// Steady-state entanglement entropy.
    Entanglement(Grid),
    /// Regenerate the data behind a figure.
    Figure {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(PRESETS))]
        preset: String,
    },
}

/// Grid values accept repeats, comma lists, and start:stop:step ranges.
#[derive(Args, Default)]
struct Grid {
    /// Nonreciprocity, with J_L = e^g and J_R = e^-g.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    g: Vec<String>,
    /// Explicit leftward coupling (complex, e.g. 1.2+0.1i); overrides --g.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    j_left: Vec<String>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    j_right: Vec<String>,
    /// Decay exponent; "inf" for nearest-neighbour hopping only.
    #[arg(long, value_delimiter = ',')]
    alpha: Vec<String>,
    /// Pairs each alpha with g = alpha / ratio.
    #[arg(long, value_delimiter = ',')]
    alpha_over_g: Vec<String>,
    /// System sizes.
    #[arg(long, short = 'L', value_delimiter = ',')]
    sizes: Vec<String>,
    /// Tracked mode positions in the Re-sorted spectrum.
    #[arg(long, value_delimiter = ',')]
    fraction: Vec<String>,
    #[arg(long)]
    reality_tol: Option<String>,
    #[arg(long)]
    threshold: Option<String>,
    #[arg(long)]
    degeneracy_tol: Option<String>,
    #[arg(long)]
    trim: Option<String>,
    /// Include rescaled probability profiles of tracked modes.
    #[arg(long)]
    profile: bool,
    #[arg(long)]
    dt: Option<String>,
    #[arg(long)]
    t_max: Option<String>,
    #[arg(long)]
    checkpoints: Option<String>,
    #[arg(long)]
    avg_dt: Option<String>,
    #[arg(long)]
    burn_in: Option<String>,
    #[arg(long)]
    duration: Option<String>,
    /// Only the half-chain entropy, no S(l) curve.
    #[arg(long)]
    half_only: bool,
    #[arg(long)]
    cft_trim: Option<String>,
}

impl Grid {
    fn entries(&self) -> Vec<Entry> {
        let mut out = Vec::new();
        let lists = [
            ("g", &self.g),
            ("j_left", &self.j_left),
            ("j_right", &self.j_right),
            ("alpha", &self.alpha),
            ("alpha_over_g", &self.alpha_over_g),
            ("L", &self.sizes),
            ("fraction", &self.fraction),
        ];
        for (key, values) in lists {
            out.extend(values.iter().map(|v| Entry::new(key, v)));
        }
        let scalars = [
            ("reality_tol", &self.reality_tol),
            ("threshold", &self.threshold),
            ("degeneracy_tol", &self.degeneracy_tol),
            ("trim", &self.trim),
            ("dt", &self.dt),
            ("t_max", &self.t_max),
            ("checkpoints", &self.checkpoints),
            ("avg_dt", &self.avg_dt),
            ("burn_in", &self.burn_in),
            ("duration", &self.duration),
            ("cft_trim", &self.cft_trim),
        ];
        for (key, value) in scalars {
            if let Some(v) = value {
                out.push(Entry::new(key, v));
            }
        }
        if self.profile {
            out.push(Entry::new("profile", "true"));
        }
        if self.half_only {
            out.push(Entry::new("curve", "false"));
        }
        out
    }
}

impl Cli {
    fn global_entries(&self) -> Vec<Entry> {
        let mut out = Vec::new();
        if let Some(p) = &self.output {
            out.push(Entry::new("output", &p.to_string_lossy()));
        }
        if let Some(f) = &self.format {
            out.push(Entry::new("format", f));
        }
        if let Some(w) = self.workers {
            out.push(Entry::new("workers", &w.to_string()));
        }
        if let Some(t) = self.timeout {
            out.push(Entry::new("timeout", &t.to_string()));
        }
        if let Some(s) = self.seed {
            out.push(Entry::new("seed", &s.to_string()));
        }
        out
    }

    fn sweep_config(&self) -> nhse_core::Result<SweepConfig> {
        let (task, grid) = match &self.command {
            Command::Spectrum(g) => (TaskKind::Spectrum, g),
            Command::Localization(g) => (TaskKind::Localization, g),
            Command::Transition(g) => (TaskKind::Transition, g),
            Command::Dynamics(g) => (TaskKind::Dynamics, g),
            Command::Entanglement(g) => (TaskKind::Entanglement, g),
            Command::Figure { preset } => {
                let mut cfg = figure_preset(preset)?;
                if let Some(p) = &self.output {
                    cfg.output = Some(p.clone());
                }
                if let Some(f) = &self.format {
                    cfg.format = Format::parse(f)?;
                }
                if let Some(w) = self.workers {
                    cfg.workers = w;
                }
                if let Some(t) = self.timeout {
                    cfg.timeout_secs = t;
                }
                if let Some(s) = self.seed {
                    cfg.seed = s;
                }
                cfg.validate()?;
                return Ok(cfg);
            }
        };
        let file = match &self.config {
            Some(path) => load_config(path)?,
            None => Vec::new(),
        };
        let mut flags = grid.entries();
        flags.extend(self.global_entries());
        build_config(Some(task), &merge_entries(file, flags))
    }
}

fn run(cli: &Cli) -> nhse_core::Result<bool> {
    let cfg = cli.sweep_config()?;
    let report = run_sweep(&cfg)?;
    if cfg.output.is_none() {
        let stdout = io::stdout();
        let mut out = BufWriter::new(stdout.lock());
        match cfg.format {
            Format::Csv => write_csv(&report.records, cfg.task, &mut out)?,
            Format::Json => write_json(&report.records, &mut out)?,
        }
        out.flush()?;
    }
    for r in report.records.iter().filter(|r| r.error.is_some()) {
        eprintln!(
            "failed: alpha={} g={} L={}: {}",
            r.point.alpha,
            r.point.g,
            r.point.size,
            r.error.as_deref().unwrap_or_default()
        );
    }
    eprintln!(
        "{} points, {} failed",
        report.records.len(),
        report.failures
    );
    for p in &report.written {
        eprintln!("wrote {}", p.display());
    }
    Ok(report.all_ok())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
