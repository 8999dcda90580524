//! Localization lengths of eigenstates and the size-scaling collapse above the
//! critical length.

use faer::c64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_full, Decay, ModelParams};
use crate::spectral::{eig_dense, mode_index};

/// Amplitudes below this fraction of the peak are floating-point noise.
const NOISE_FLOOR: f64 = 1e-14;
/// A site this much smaller than both neighbours is a node of the standing wave.
const NODE_RATIO: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum WindowPolicy {
    /// Drop `round(fraction · L)` sites at each end.
    Trim(f64),
    /// Inclusive 1-based site range.
    Sites { first: usize, last: usize },
}

impl Default for WindowPolicy {
    fn default() -> Self {
        WindowPolicy::Trim(0.1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationFit {
    /// 1-based index in the Re-sorted spectrum (0 for a bare vector).
    pub mode_index: usize,
    pub xi: f64,
    /// Coefficient of determination of the log-amplitude fit.
    pub fit_quality: f64,
    /// Inclusive 1-based site range.
    pub window: (usize, usize),
    /// Set when the envelope is not cleanly exponential (`fit_quality < 0.9`).
    pub flagged: bool,
}

/// Least-squares fit of `ln|ψ_j|` against `j`; `ξ = 1/|slope|`.
pub fn fit_localization_length(psi: &[c64], window: WindowPolicy) -> Result<LocalizationFit> {
    let n = psi.len();
    let (first, last) = match window {
        WindowPolicy::Trim(f) => {
            if !(0.0..0.5).contains(&f) {
                return Err(Error::InvalidParameter(format!(
                    "trim fraction {f} outside [0, 0.5)"
                )));
            }
            let k = (f * n as f64).round() as usize;
            (k + 1, n.saturating_sub(k))
        }
        WindowPolicy::Sites { first, last } => (first, last),
    };
    if first < 1 || last > n || first > last {
        return Err(Error::InvalidParameter(format!(
            "window {first}..={last} for {n} sites"
        )));
    }
    let amp: Vec<f64> = psi.iter().map(|z| z.norm()).collect();
    let peak = amp.iter().cloned().fold(0.0, f64::max);
    if !(peak > 0.0) || !peak.is_finite() {
        return Err(Error::InvalidParameter(
            "vector has no finite non-zero amplitude".into(),
        ));
    }
    let is_node = |j: usize| {
        let left = if j > 0 { amp[j - 1] } else { f64::INFINITY };
        let right = if j + 1 < n { amp[j + 1] } else { f64::INFINITY };
        amp[j] < NODE_RATIO * left.min(right)
    };
    let pts: Vec<(f64, f64)> = (first - 1..last)
        .filter(|&j| amp[j] > NOISE_FLOOR * peak && !is_node(j))
        .map(|j| ((j + 1) as f64, amp[j].ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: pts.len(),
        });
    }
    let line = linear_fit(&pts);
    let xi = if line.slope == 0.0 {
        f64::INFINITY
    } else {
        1.0 / line.slope.abs()
    };
    Ok(LocalizationFit {
        mode_index: 0,
        xi,
        fit_quality: line.r2,
        window: (first, last),
        flagged: line.r2 < 0.9,
    })
}

/// `ξ` where it is known in closed form: `L/(2|g|)` at `α = 0`, `1/|g|` for
/// nearest-neighbour hopping. Reciprocal chains give `+∞`.
pub fn analytic_xi(p: &ModelParams) -> Result<f64> {
    let g = p.g().abs();
    let xi = match p.decay {
        Decay::Power(a) if a == 0.0 => p.size as f64 / (2.0 * g),
        Decay::NearestNeighbor => 1.0 / g,
        Decay::Power(a) => {
            return Err(Error::InvalidParameter(format!(
                "no closed-form xi for alpha = {a}"
            )))
        }
    };
    Ok(if g == 0.0 { f64::INFINITY } else { xi })
}

/// `(j/L, L |ψ_j|²)`; at `α = 0` these curves coincide for every size.
pub fn rescaled_profile(psi: &[c64]) -> Vec<(f64, f64)> {
    let n = psi.len() as f64;
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    psi.iter()
        .enumerate()
        .map(|(j, z)| ((j + 1) as f64 / n, n * z.norm_sqr() / norm))
        .collect()
}

/// One tracked mode across sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationPoint {
    pub size: usize,
    pub energy: (f64, f64),
    pub is_complex: bool,
    pub fit: LocalizationFit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationSeries {
    pub fraction: f64,
    pub points: Vec<LocalizationPoint>,
}

impl LocalizationSeries {
    /// First size at which the tracked mode is complex.
    pub fn critical_size(&self) -> Option<usize> {
        self.points.iter().find(|p| p.is_complex).map(|p| p.size)
    }

    pub fn xi(&self) -> Vec<(usize, f64)> {
        self.points.iter().map(|p| (p.size, p.fit.xi)).collect()
    }
}

/// Fits the mode at `round(fraction · L)` for every size.
pub fn localization_vs_size(
    template: &ModelParams,
    fraction: f64,
    sizes: &[usize],
    window: WindowPolicy,
) -> Result<LocalizationSeries> {
    let points = sizes
        .iter()
        .map(|&l| {
            let spec = eig_dense(&build_full(&template.with_size(l)?)?, None)?;
            let m = mode_index(fraction, l);
            let mut fit = fit_localization_length(&spec.eigenvector(m - 1), window)?;
            fit.mode_index = m;
            let e = spec.eigenvalues[m - 1];
            Ok(LocalizationPoint {
                size: l,
                energy: (e.re, e.im),
                is_complex: spec.is_complex[m - 1],
                fit,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LocalizationSeries { fraction, points })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseResult {
    pub alpha: f64,
    pub critical_size: f64,
    /// Fitted `L_c / ξ_α`.
    pub intercept: f64,
    pub slope: f64,
    /// RMS deviation from the fitted line.
    pub residual: f64,
    pub points_used: usize,
}

/// Regresses `L/ξ` on `ln((L − 1)/(L_c − 1))` over the sizes `L ≥ L_c`.
pub fn collapse_fit(alpha: f64, critical_size: f64, xi: &[(usize, f64)]) -> Result<CollapseResult> {
    if !(critical_size > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "critical size {critical_size} must exceed 1"
        )));
    }
    let pts: Vec<(f64, f64)> = xi
        .iter()
        .filter(|&&(l, x)| l as f64 >= critical_size && x.is_finite() && x > 0.0)
        .map(|&(l, x)| {
            (
                ((l as f64 - 1.0) / (critical_size - 1.0)).ln(),
                l as f64 / x,
            )
        })
        .collect();
    if pts.len() < 4 {
        return Err(Error::InsufficientData {
            needed: 4,
            got: pts.len(),
        });
    }
    let line = linear_fit(&pts);
    Ok(CollapseResult {
        alpha,
        critical_size,
        intercept: line.intercept,
        slope: line.slope,
        residual: line.rms,
        points_used: pts.len(),
    })
}

pub(crate) struct Line {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub rms: f64,
}

pub(crate) fn linear_fit(pts: &[(f64, f64)]) -> Line {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r2 = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else if ss_res <= 1e-24 * n {
        1.0
    } else {
        0.0
    };
    Line {
        slope,
        intercept,
        r2,
        rms: (ss_res / n).sqrt(),
    }
}
