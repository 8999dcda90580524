use faer::c64;
use serde::{Deserialize, Serialize};

use super::{TaskKind, TaskOptions};
use crate::entanglement::{CftFit, SteadyMethod};
use crate::error::Result;
use crate::model::{Decay, ModelParams};

/// Everything needed to re-run one grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSpec {
    pub task: TaskKind,
    pub j_left: (f64, f64),
    pub j_right: (f64, f64),
    /// `½ ln(|J_L|/|J_R|)`, informational.
    pub g: f64,
    pub alpha: Decay,
    pub size: usize,
    pub options: TaskOptions,
}

impl PointSpec {
    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(
            c64::new(self.j_left.0, self.j_left.1),
            c64::new(self.j_right.0, self.j_right.1),
            self.alpha,
            self.size,
        )
    }

    pub(crate) fn alpha_key(&self) -> f64 {
        self.alpha.exponent().unwrap_or(f64::INFINITY)
    }

    pub(crate) fn sort_key(&self) -> (f64, f64, f64, f64, f64, usize) {
        (
            self.j_left.0,
            self.j_left.1,
            self.j_right.0,
            self.j_right.1,
            self.alpha_key(),
            self.size,
        )
    }

    /// Key shared by all sizes of one series.
    pub(crate) fn series_key(&self) -> (f64, f64, f64, f64, f64) {
        (
            self.j_left.0,
            self.j_left.1,
            self.j_right.0,
            self.j_right.1,
            self.alpha_key(),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeRecord {
    pub fraction: f64,
    pub mode: usize,
    pub energy: (f64, f64),
    pub is_complex: bool,
    #[serde(with = "lossless")]
    pub xi: f64,
    pub fit_quality: f64,
    pub window: (usize, usize),
    pub flagged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<Vec<(f64, f64)>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Spectrum {
        eigenvalues: Vec<(f64, f64)>,
        is_complex: Vec<bool>,
        complex_fraction: f64,
        max_residual: f64,
        reality_tol: f64,
    },
    Localization {
        modes: Vec<ModeRecord>,
    },
    Transition {
        complex_fraction: f64,
        n_complex: usize,
    },
    Dynamics {
        dt: f64,
        times: Vec<f64>,
        half_entropy: Vec<f64>,
        steady_method: SteadyMethod,
        #[serde(with = "lossless")]
        steady_gap: f64,
        steady_half_entropy: f64,
    },
    Entanglement {
        method: SteadyMethod,
        #[serde(with = "lossless")]
        gap: f64,
        complex_fraction: f64,
        cuts: Vec<usize>,
        entropy: Vec<f64>,
        cft: Option<CftFit>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub point: PointSpec,
    pub payload: Option<Payload>,
    pub error: Option<String>,
    pub version: String,
    pub wall_time: f64,
}

impl ResultRecord {
    pub fn new(point: PointSpec, outcome: Result<Payload>, wall_time: f64) -> Self {
        let (payload, error) = match outcome {
            Ok(p) => (Some(p), None),
            Err(e) => (None, Some(e.to_string())),
        };
        Self {
            point,
            payload,
            error,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time,
        }
    }
}

/// JSON has no infinities; these are written as strings instead.
mod lossless {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            Repr::Num(*x)
        } else {
            Repr::Text(x.to_string())
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}
