//! Von Neumann entropies of Gaussian states, CFT fits, and steady-state
//! entropy scaling with system size.

use std::f64::consts::PI;

use faer::{c64, Mat};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    init_cdw, steady_state_projection, time_average, AverageOptions, CorrelationMatrix,
    OrbitalState, ProjectionOptions,
};
use crate::error::{Error, Result};
use crate::linalg;
use crate::localization::linear_fit;
use crate::model::{build_full, Decay, ModelParams};
use crate::spectral::scan_fraction_at_least;

/// Occupations are clipped to `[ε, 1 − ε]` before taking logarithms.
pub const NU_CLIP: f64 = 1e-12;
const BLOCK_HERMITIAN_TOL: f64 = 1e-8;

fn binary_entropy(nu: f64) -> f64 {
    let nu = nu.clamp(NU_CLIP, 1.0 - NU_CLIP);
    -(nu * nu.ln() + (1.0 - nu) * (1.0 - nu).ln())
}

fn block_entropy(block: Mat<c64>) -> Result<f64> {
    let n = block.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in 0..=i {
            dev = dev.max((block[(i, j)] - block[(j, i)].conj()).norm());
        }
    }
    if dev > BLOCK_HERMITIAN_TOL {
        return Err(Error::NonHermitianBlock { deviation: dev });
    }
    Ok(linalg::hermitian_eigenvalues(block.as_ref())?
        .into_iter()
        .map(binary_entropy)
        .sum())
}

/// Entropy of the (1-based) `subsystem` sites.
pub fn entropy_from_correlation(c: &CorrelationMatrix, subsystem: &[usize]) -> Result<f64> {
    let n = c.dim();
    if subsystem.is_empty() || subsystem.len() >= n {
        return Err(Error::InvalidParameter(format!(
            "subsystem of {} sites is not a proper part of {n}",
            subsystem.len()
        )));
    }
    if let Some(&bad) = subsystem.iter().find(|&&s| s == 0 || s > n) {
        return Err(Error::InvalidParameter(format!(
            "site {bad} outside 1..={n}"
        )));
    }
    let block = Mat::from_fn(subsystem.len(), subsystem.len(), |a, b| {
        c.get(subsystem[a] - 1, subsystem[b] - 1)
    });
    block_entropy(block)
}

/// Entropy of sites `1..=l`, computed directly from the orbitals.
pub fn left_block_entropy(state: &OrbitalState, l: usize) -> Result<f64> {
    if l == 0 || l >= state.size() {
        return Err(Error::InvalidParameter(format!(
            "cut {l} outside 1..{}",
            state.size()
        )));
    }
    let qa = state.orbitals.subrows(0, l);
    // ((Q_A Q_A†)ᵀ) has the same spectrum as Q_A Q_A†
    block_entropy(qa * qa.adjoint())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyCurve {
    pub size: usize,
    pub cuts: Vec<usize>,
    pub entropy: Vec<f64>,
}

/// `S(l)` for the left blocks `l = 1..L−1`.
pub fn entropy_curve(state: &OrbitalState) -> Result<EntropyCurve> {
    let size = state.size();
    let cuts: Vec<usize> = (1..size).collect();
    let entropy = cuts
        .iter()
        .map(|&l| left_block_entropy(state, l))
        .collect::<Result<_>>()?;
    Ok(EntropyCurve {
        size,
        cuts,
        entropy,
    })
}

/// Same as [`entropy_curve`] through the full correlation matrix.
pub fn entropy_curve_from_correlation(c: &CorrelationMatrix) -> Result<EntropyCurve> {
    let size = c.dim();
    let cuts: Vec<usize> = (1..size).collect();
    let entropy = cuts
        .iter()
        .map(|&l| entropy_from_correlation(c, &(1..=l).collect::<Vec<_>>()))
        .collect::<Result<_>>()?;
    Ok(EntropyCurve {
        size,
        cuts,
        entropy,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CftFit {
    /// Effective central charge (six times the slope).
    pub c: f64,
    pub s0: f64,
    /// RMS deviation from the fitted form.
    pub residual: f64,
    pub window: (usize, usize),
    pub low_confidence: bool,
}

/// RMS residual above which a CFT fit is marked low-confidence.
pub const CFT_RESIDUAL_LIMIT: f64 = 0.05;

/// `ln[(2L/π) sin(πl/L)]`.
pub fn chord_log(l: usize, size: usize) -> f64 {
    let n = size as f64;
    ((2.0 * n / PI) * (PI * l as f64 / n).sin()).ln()
}

fn cft_points(curve: &EntropyCurve, trim: f64) -> Result<(Vec<(f64, f64)>, (usize, usize))> {
    if !(0.0..0.5).contains(&trim) {
        return Err(Error::InvalidParameter(format!(
            "trim {trim} outside [0, 0.5)"
        )));
    }
    let n = curve.size;
    let k = ((trim * n as f64).round() as usize).max(1);
    let pts = curve
        .cuts
        .iter()
        .zip(&curve.entropy)
        .filter(|(&l, _)| l >= k && l + k <= n)
        .map(|(&l, &s)| (chord_log(l, n), s))
        .collect();
    Ok((pts, (k, n - k)))
}

fn cft_line(pts: &[(f64, f64)], window: (usize, usize)) -> Result<CftFit> {
    if pts.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: pts.len(),
        });
    }
    let line = linear_fit(pts);
    Ok(CftFit {
        c: 6.0 * line.slope,
        s0: line.intercept,
        residual: line.rms,
        window,
        low_confidence: line.rms > CFT_RESIDUAL_LIMIT,
    })
}

/// Fits `S = (c/6) ln[(2L/π) sin(πl/L)] + s₀` over `k ≤ l ≤ L − k`,
/// `k = max(1, round(trim · L))`.
pub fn cft_fit(curve: &EntropyCurve, trim: f64) -> Result<CftFit> {
    let (pts, window) = cft_points(curve, trim)?;
    cft_line(&pts, window)
}

/// One `c` and `s₀` for several sizes at once, each curve trimmed as in
/// [`cft_fit`]. The reported window is the widest one.
pub fn cft_fit_pooled(curves: &[EntropyCurve], trim: f64) -> Result<CftFit> {
    let mut all = Vec::new();
    let mut window = (usize::MAX, 0);
    for c in curves {
        let (pts, (lo, hi)) = cft_points(c, trim)?;
        all.extend(pts);
        window = (window.0.min(lo), window.1.max(hi));
    }
    cft_line(&all, window)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SteadyMethod {
    Projection,
    /// Projection with a degenerate last slot resolved by ascending `Re E`.
    ProjectionTieBreak,
    TimeAverage,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SteadyOptions {
    pub projection: ProjectionOptions,
    pub average: AverageOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteadyEntropy {
    pub size: usize,
    pub method: SteadyMethod,
    /// Imaginary-part gap at half filling.
    pub gap: f64,
    pub cuts: Vec<usize>,
    pub entropy: Vec<f64>,
}

/// Half-filled steady-state entropies at the given cuts.
///
/// Uses the projection when the imaginary-part gap is open. At `α = 0` the
/// last slot is degenerate and the tie is broken deterministically; every
/// other gapless case falls back to a time average from the CDW state.
pub fn steady_state_entropy(
    p: &ModelParams,
    cuts: &[usize],
    opts: SteadyOptions,
) -> Result<SteadyEntropy> {
    let size = p.size;
    if size % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "half filling needs an even size, got {size}"
        )));
    }
    let h = build_full(p)?;
    let n = size / 2;
    let strict = steady_state_projection(&h, n, opts.projection);
    let (method, gap, proj) = match strict {
        Ok(ss) => (SteadyMethod::Projection, ss.gap, Some(ss.state)),
        Err(Error::AmbiguousSteadyState { gap }) if p.decay == Decay::Power(0.0) => {
            let tie = ProjectionOptions {
                allow_ties: true,
                ..opts.projection
            };
            (
                SteadyMethod::ProjectionTieBreak,
                gap,
                Some(steady_state_projection(&h, n, tie)?.state),
            )
        }
        Err(Error::AmbiguousSteadyState { gap }) => (SteadyMethod::TimeAverage, gap, None),
        Err(e) => return Err(e),
    };
    let entropy = match proj {
        Some(state) => cuts
            .iter()
            .map(|&l| left_block_entropy(&state, l))
            .collect::<Result<_>>()?,
        None => time_average(&h, &init_cdw(size)?, cuts, opts.average)?.mean,
    };
    Ok(SteadyEntropy {
        size,
        method,
        gap,
        cuts: cuts.to_vec(),
        entropy,
    })
}

/// Full steady-state curve `l = 1..L−1`.
pub fn steady_state_curve(
    p: &ModelParams,
    opts: SteadyOptions,
) -> Result<(SteadyEntropy, EntropyCurve)> {
    let cuts: Vec<usize> = (1..p.size).collect();
    let s = steady_state_entropy(p, &cuts, opts)?;
    let curve = EntropyCurve {
        size: p.size,
        cuts: s.cuts.clone(),
        entropy: s.entropy.clone(),
    };
    Ok((s, curve))
}

/// `S(L/2, L)` in the steady state for each (even) size, computed in parallel.
pub fn halfchain_entropy_vs_size(
    template: &ModelParams,
    sizes: &[usize],
    opts: SteadyOptions,
) -> Result<Vec<SteadyEntropy>> {
    if let Some(&odd) = sizes.iter().find(|&&l| l % 2 != 0) {
        return Err(Error::InvalidParameter(format!(
            "half filling needs even sizes, got {odd}"
        )));
    }
    sizes
        .par_iter()
        .map(|&l| steady_state_entropy(&template.with_size(l)?, &[l / 2], opts))
        .collect()
}

/// Slope of `S` against `ln L` over the sizes in `[lo, hi]`.
pub fn log_slope(series: &[(usize, f64)], lo: f64, hi: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|&&(l, _)| l as f64 >= lo && l as f64 <= hi)
        .map(|&(l, s)| ((l as f64).ln(), s))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: pts.len(),
        });
    }
    Ok(linear_fit(&pts).slope)
}

/// Smallest size whose spectrum is at least half complex; `None` if the range
/// ends first or the chain is reciprocal.
pub fn crossover_size(template: &ModelParams, sizes: &[usize]) -> Result<Option<usize>> {
    if template.g() == 0.0 {
        return Ok(None);
    }
    Ok(scan_fraction_at_least(template, sizes, 0.5)?.critical)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{correlation_from_orbitals, FockState};
    use crate::model::DenseMatrix;

    fn diag(values: &[f64]) -> CorrelationMatrix {
        let n = values.len();
        CorrelationMatrix(Mat::from_fn(n, n, |i, j| {
            c64::new(if i == j { values[i] } else { 0.0 }, 0.0)
        }))
    }

    #[test]
    fn product_state_has_no_entropy() {
        let c = diag(&[0.0, 1.0, 0.0, 1.0]);
        for sub in [vec![1], vec![2, 3], vec![1, 2, 3], vec![4]] {
            assert!(entropy_from_correlation(&c, &sub).unwrap() < 1e-9);
        }
    }

    #[test]
    fn half_filled_mode_gives_ln2() {
        let c = diag(&[0.5, 1.0]);
        let s = entropy_from_correlation(&c, &[1]).unwrap();
        assert!((s - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_subsystems() {
        let c = diag(&[0.5, 0.5, 0.5]);
        assert!(entropy_from_correlation(&c, &[]).is_err());
        assert!(entropy_from_correlation(&c, &[1, 2, 3]).is_err());
        assert!(entropy_from_correlation(&c, &[0]).is_err());
        let mut bad = diag(&[0.5, 0.5, 0.5]);
        bad.0[(0, 1)] = c64::new(0.1, 0.0);
        assert!(matches!(
            entropy_from_correlation(&bad, &[1, 2]),
            Err(Error::NonHermitianBlock { .. })
        ));
    }

    #[test]
    fn cft_self_fit() {
        let size = 64;
        let cuts: Vec<usize> = (1..size).collect();
        let entropy = cuts
            .iter()
            .map(|&l| chord_log(l, size) / 3.0 + 0.5)
            .collect();
        let f = cft_fit(
            &EntropyCurve {
                size,
                cuts,
                entropy,
            },
            0.1,
        )
        .unwrap();
        assert!((f.c - 2.0).abs() < 1e-10 && (f.s0 - 0.5).abs() < 1e-10);
        assert_eq!(f.window, (6, 58));
        assert!(!f.low_confidence);
    }

    #[test]
    fn pooled_fit_shares_one_line() {
        let curves: Vec<EntropyCurve> = [20, 36, 50]
            .into_iter()
            .map(|size| {
                let cuts: Vec<usize> = (1..size).collect();
                let entropy = cuts
                    .iter()
                    .map(|&l| chord_log(l, size) / 3.0 + 0.25)
                    .collect();
                EntropyCurve {
                    size,
                    cuts,
                    entropy,
                }
            })
            .collect();
        let f = cft_fit_pooled(&curves, 0.1).unwrap();
        assert!((f.c - 2.0).abs() < 1e-10 && (f.s0 - 0.25).abs() < 1e-10);
        assert_eq!(f.window, (2, 45));
        assert!(cft_fit_pooled(&[], 0.1).is_err());
    }

    #[test]
    fn curve_paths_agree_and_are_bounded() {
        let p = ModelParams::from_g(0.3, Decay::Power(0.0), 12).unwrap();
        let (s, curve) = steady_state_curve(&p, SteadyOptions::default()).unwrap();
        assert_eq!(s.method, SteadyMethod::ProjectionTieBreak);
        let h = build_full(&p).unwrap();
        let tie = ProjectionOptions {
            allow_ties: true,
            ..Default::default()
        };
        let state = steady_state_projection(&h, 6, tie).unwrap().state;
        let other = entropy_curve_from_correlation(&correlation_from_orbitals(&state)).unwrap();
        for (k, &l) in curve.cuts.iter().enumerate() {
            assert!((curve.entropy[k] - other.entropy[k]).abs() < 1e-10);
            let bound = l.min(12 - l) as f64 * 2f64.ln();
            assert!(curve.entropy[k] >= 0.0 && curve.entropy[k] <= bound + 1e-12);
            assert!((curve.entropy[k] - curve.entropy[12 - l - 1]).abs() < 1e-6);
        }
    }

    #[test]
    fn tie_break_choice_does_not_change_entropy() {
        // the two real modes competing for the last slot give the same curve
        let p = ModelParams::from_g(0.3, Decay::Power(0.0), 10).unwrap();
        let h = build_full(&p).unwrap();
        let spec = crate::spectral::eig_dense(&h, None).unwrap();
        let mut order: Vec<usize> = (0..10).collect();
        order.sort_by(|&a, &b| spec.eigenvalues[b].im.total_cmp(&spec.eigenvalues[a].im));
        let mut curves = Vec::new();
        for last in [order[4], order[5]] {
            let cols: Vec<usize> = order[..4].iter().cloned().chain([last]).collect();
            let v = Mat::from_fn(10, 5, |i, k| spec.eigenvectors[(i, cols[k])]);
            curves.push(
                entropy_curve(&OrbitalState::from_orbitals(v.as_ref(), 0.0).unwrap()).unwrap(),
            );
        }
        for k in 0..9 {
            assert!((curves[0].entropy[k] - curves[1].entropy[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn steady_state_matches_fock_oracle() {
        let p = ModelParams::new(
            c64::new(1.1, 0.4),
            c64::new(0.6, -0.3),
            Decay::Power(2.0),
            6,
        )
        .unwrap();
        let h: DenseMatrix = build_full(&p).unwrap();
        let ss = steady_state_projection(&h, 3, ProjectionOptions::default()).unwrap();
        let f = FockState::cdw(6).unwrap();
        let oracle = crate::dynamics::fock_steady_state(&h, 3, 1e-10).unwrap();
        assert_eq!(oracle.particles, f.particles);
        for l in 1..6 {
            let a = left_block_entropy(&ss.state, l).unwrap();
            let b = oracle.left_block_entropy(l).unwrap();
            assert!((a - b).abs() < 1e-6, "l={l}: {a} vs {b}");
        }
    }

    #[test]
    fn crossover_at_alpha_zero_is_immediate() {
        let p = ModelParams::from_g(0.4, Decay::Power(0.0), 4).unwrap();
        assert_eq!(crossover_size(&p, &[4, 6, 8]).unwrap(), Some(4));
        let p = ModelParams::from_g(0.0, Decay::Power(0.0), 4).unwrap();
        assert_eq!(crossover_size(&p, &[4, 6, 8]).unwrap(), None);
    }

    #[test]
    fn log_slope_of_exact_logarithm() {
        let series: Vec<(usize, f64)> = (10..=50)
            .step_by(10)
            .map(|l| (l, 0.3 * (l as f64).ln() + 1.0))
            .collect();
        assert!((log_slope(&series, 10.0, 50.0).unwrap() - 0.3).abs() < 1e-12);
        assert!(log_slope(&series, 60.0, 70.0).is_err());
    }
}
