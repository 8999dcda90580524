use super::{CouplingSpec, SweepConfig, TaskKind};
use crate::error::{Error, Result};
use crate::model::Decay;

pub const PRESETS: [&str; 6] = ["fig1b", "fig2", "fig3b", "fig3cd", "fig4ab", "fig4de"];

/// Ready-to-run sweeps, one per standard figure.
pub fn figure_preset(name: &str) -> Result<SweepConfig> {
    let g = |g: f64| CouplingSpec::G { g };
    let cfg = match name {
        // rescaled probabilities at α = 0
        "fig1b" => {
            let mut c = SweepConfig {
                couplings: vec![g(0.25)],
                alphas: vec![Decay::Power(0.0)],
                sizes: (10..=60).step_by(10).collect(),
                ..SweepConfig::new(TaskKind::Localization)
            };
            c.options.fractions = vec![0.5];
            c.options.profile = true;
            c
        }
        "fig2" => SweepConfig {
            couplings: vec![g(0.25)],
            alphas: vec![Decay::Power(2.0)],
            sizes: vec![10, 20, 40, 60],
            ..SweepConfig::new(TaskKind::Spectrum)
        },
        // α/g = 2, 4, ..., 16 at g = 0.25
        "fig3b" => SweepConfig {
            couplings: vec![g(0.25)],
            alphas: (1..=8).map(|k| Decay::Power(0.5 * k as f64)).collect(),
            sizes: (2..=120).collect(),
            ..SweepConfig::new(TaskKind::Transition)
        },
        "fig3cd" => {
            let mut c = SweepConfig {
                couplings: vec![g(0.25)],
                alphas: vec![Decay::Power(2.0)],
                sizes: (10..=200).collect(),
                ..SweepConfig::new(TaskKind::Localization)
            };
            c.options.fractions = vec![0.0, 0.2, 0.4, 0.6, 0.8];
            c
        }
        "fig4ab" => SweepConfig {
            couplings: vec![g(0.3), g(0.6), g(1.2)],
            alphas: vec![Decay::Power(0.0)],
            sizes: (20..=100).step_by(20).collect(),
            ..SweepConfig::new(TaskKind::Entanglement)
        },
        // fixed g = 0.3 and fixed α/g = 10
        "fig4de" => {
            let mut c = SweepConfig {
                couplings: vec![g(0.3), CouplingSpec::Ratio { ratio: 10.0 }],
                alphas: [0.0, 1.0, 2.0, 3.0, 4.0]
                    .into_iter()
                    .map(Decay::Power)
                    .chain([Decay::NearestNeighbor])
                    .collect(),
                sizes: (10..=100).step_by(6).collect(),
                ..SweepConfig::new(TaskKind::Entanglement)
            };
            c.options.curve = false;
            c
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown preset '{other}' (known: {})",
                PRESETS.join(", ")
            )))
        }
    };
    cfg.validate()?;
    Ok(cfg)
}
