//! Open-chain spectra and the quantities derived from them: reality of the
//! spectrum, critical lengths, the one-way-coupled chain's characteristic
//! equation, and the infinite-chain dispersion.

use std::f64::consts::PI;

use faer::{c64, Mat};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{build_full, Decay, DenseMatrix, ModelParams};

/// Eigenpairs sorted by ascending real part, ties broken by imaginary part.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<c64>,
    /// Unit-norm right eigenvectors, column `k` belongs to `eigenvalues[k]`.
    pub eigenvectors: Mat<c64>,
    pub is_complex: Vec<bool>,
    pub reality_tol: f64,
    /// Largest `‖H v − E v‖` over all pairs (zero for analytic spectra).
    pub max_residual: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvector(&self, k: usize) -> Vec<c64> {
        (0..self.eigenvectors.nrows())
            .map(|i| self.eigenvectors[(i, k)])
            .collect()
    }

    pub fn complex_count(&self) -> usize {
        self.is_complex.iter().filter(|&&c| c).count()
    }

    fn from_pairs(mut pairs: Vec<(c64, Vec<c64>)>, reality_tol: f64, max_residual: f64) -> Self {
        pairs.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
        let n = pairs.first().map_or(0, |p| p.1.len());
        let eigenvectors = Mat::from_fn(n, pairs.len(), |i, k| pairs[k].1[i]);
        let eigenvalues: Vec<c64> = pairs.iter().map(|p| p.0).collect();
        let is_complex = eigenvalues
            .iter()
            .map(|e| e.im.abs() > reality_tol)
            .collect();
        Self {
            eigenvalues,
            eigenvectors,
            is_complex,
            reality_tol,
            max_residual,
        }
    }
}

/// `1e-8 · max(1, ‖H‖_F)`.
pub fn default_reality_tol(h: &DenseMatrix) -> f64 {
    1e-8 * h.frobenius_norm().max(1.0)
}

/// 1-based index of the mode at `fraction` of the Re-sorted spectrum.
pub fn mode_index(fraction: f64, size: usize) -> usize {
    ((fraction * size as f64).round() as usize).clamp(1, size)
}

/// Dense non-Hermitian eigendecomposition (balanced, then Schur based).
pub fn eig_dense(h: &DenseMatrix, reality_tol: Option<f64>) -> Result<Spectrum> {
    let tol = reality_tol.unwrap_or_else(|| default_reality_tol(h));
    let raw = linalg::eig(h.as_ref())?;
    let n = h.dim();
    let mut worst = 0.0f64;
    let mut pairs = Vec::with_capacity(n);
    for k in 0..n {
        let v: Vec<c64> = (0..n).map(|i| raw.vectors[(i, k)]).collect();
        worst = worst.max(residual(h, raw.values[k], &v));
        pairs.push((raw.values[k], v));
    }
    Ok(Spectrum::from_pairs(pairs, tol, worst))
}

/// `‖H v − E v‖₂`.
pub fn residual(h: &DenseMatrix, e: c64, v: &[c64]) -> f64 {
    let m = h.as_ref();
    let n = h.dim();
    (0..n)
        .map(|i| {
            let hv: c64 = (0..n).map(|j| m[(i, j)] * v[j]).sum();
            (hv - e * v[i]).norm_sqr()
        })
        .sum::<f64>()
        .sqrt()
}

/// Closed-form eigenpairs of the all-to-all (`α = 0`) chain.
#[derive(Clone, Debug)]
pub struct AnalyticModes {
    pub spectrum: Spectrum,
    /// Index (in sorted order) of the mode with `r_m = 1`, present only for
    /// `J_L = J_R`; it is the uniform state with `E = J (L − 1)`.
    pub symmetric_mode: Option<usize>,
}

/// For `m = 1..L`: `r_m = (J_R/J_L)^{1/L} e^{2πi m/L}` (principal root),
/// `E_m = (r_m J_L − J_R)/(1 − r_m)` and `ψ_j ∝ r_m^j`.
pub fn analytic_alpha0_modes(p: &ModelParams, reality_tol: Option<f64>) -> Result<AnalyticModes> {
    if p.decay != Decay::Power(0.0) {
        return Err(Error::InvalidParameter(format!(
            "analytic modes need alpha = 0, got {}",
            p.decay
        )));
    }
    let n = p.size;
    let root = (p.j_right / p.j_left).powf(1.0 / n as f64);
    let tol = match reality_tol {
        Some(t) => t,
        None => default_reality_tol(&build_full(p)?),
    };
    let mut pairs = Vec::with_capacity(n);
    let mut symmetric = None;
    for m in 1..=n {
        let r = root * c64::cis(2.0 * PI * m as f64 / n as f64);
        let (e, r) = if (r - 1.0).norm() < 1e-14 {
            symmetric = Some(m);
            (p.j_left * (n as f64 - 1.0), c64::new(1.0, 0.0))
        } else {
            ((r * p.j_left - p.j_right) / (1.0 - r), r)
        };
        let mut v: Vec<c64> = (1..=n).map(|j| r.powi(j as i32)).collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= norm);
        pairs.push((e, v, m));
    }
    let marker = symmetric.map(|m| pairs[m - 1].0);
    let spectrum = Spectrum::from_pairs(
        pairs.into_iter().map(|(e, v, _)| (e, v)).collect(),
        tol,
        0.0,
    );
    let symmetric_mode = marker.and_then(|e0| spectrum.eigenvalues.iter().position(|&e| e == e0));
    Ok(AnalyticModes {
        spectrum,
        symmetric_mode,
    })
}

pub fn complex_fraction(spec: &Spectrum) -> f64 {
    if spec.is_empty() {
        return 0.0;
    }
    spec.complex_count() as f64 / spec.len() as f64
}

/// Complex fraction of the full Hamiltonian as a function of size.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionScan {
    pub sizes: Vec<usize>,
    pub complex_fraction: Vec<f64>,
    /// First size whose complex fraction exceeds the threshold, `None` if the
    /// window ends before the transition.
    pub critical: Option<usize>,
}

pub fn scan_critical_length(
    template: &ModelParams,
    sizes: &[usize],
    threshold: f64,
) -> Result<TransitionScan> {
    scan_with(template, sizes, |f| f > threshold)
}

/// Like [`scan_critical_length`] but with `fraction ≥ threshold`.
pub fn scan_fraction_at_least(
    template: &ModelParams,
    sizes: &[usize],
    threshold: f64,
) -> Result<TransitionScan> {
    scan_with(template, sizes, |f| f >= threshold)
}

fn scan_with(
    template: &ModelParams,
    sizes: &[usize],
    hit: impl Fn(f64) -> bool,
) -> Result<TransitionScan> {
    let mut fractions = Vec::with_capacity(sizes.len());
    let mut critical = None;
    for &l in sizes {
        let h = build_full(&template.with_size(l)?)?;
        let f = complex_fraction(&eig_dense(&h, None)?);
        if critical.is_none() && hit(f) {
            critical = Some(l);
        }
        fractions.push(f);
    }
    Ok(TransitionScan {
        sizes: sizes.to_vec(),
        complex_fraction: fractions,
        critical,
    })
}

/// Reality of one tracked mode across sizes.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeScan {
    pub fraction: f64,
    pub sizes: Vec<usize>,
    pub mode: Vec<usize>,
    pub energy: Vec<c64>,
    pub is_complex: Vec<bool>,
    /// First size at which the tracked mode's energy is complex.
    pub critical: Option<usize>,
}

pub fn scan_mode_critical_length(
    template: &ModelParams,
    sizes: &[usize],
    fraction: f64,
) -> Result<ModeScan> {
    let mut out = ModeScan {
        fraction,
        sizes: sizes.to_vec(),
        mode: Vec::new(),
        energy: Vec::new(),
        is_complex: Vec::new(),
        critical: None,
    };
    for &l in sizes {
        let spec = eig_dense(&build_full(&template.with_size(l)?)?, None)?;
        let m = mode_index(fraction, l);
        let c = spec.is_complex[m - 1];
        if c && out.critical.is_none() {
            out.critical = Some(l);
        }
        out.mode.push(m);
        out.energy.push(spec.eigenvalues[m - 1]);
        out.is_complex.push(c);
    }
    Ok(out)
}

/// Root `L_c ≥ 2` of `e^{(L_c − 2) g} = (L_c − 1)^α`; `None` when `g ≤ 0`
/// (no transition at any size).
pub fn predict_critical_length(alpha: f64, g: f64) -> Result<Option<f64>> {
    if !(alpha >= 0.0) || !alpha.is_finite() || g.is_nan() {
        return Err(Error::InvalidParameter(format!("alpha = {alpha}, g = {g}")));
    }
    if g <= 0.0 {
        return Ok(None);
    }
    // f is convex with f(2) = 0; for α > g it dips below zero before the root.
    let f = |l: f64| (l - 2.0) * g - alpha * (l - 1.0).ln();
    if alpha <= g {
        return Ok(Some(2.0));
    }
    let mut lo = 1.0 + alpha / g;
    let mut hi = 2.0 * lo;
    while f(hi) <= 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Real solutions of `sin((L+1)θ) = μ sin θ` on `(0, π)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaRoots {
    pub size: usize,
    pub mu: f64,
    /// Distinct real roots, ascending.
    pub real_roots: Vec<f64>,
    /// Roots where the curve is tangent to zero (counted twice in `n_real`).
    pub tangent_roots: Vec<f64>,
    /// Number of real roots with multiplicity.
    pub n_real: usize,
}

impl ThetaRoots {
    /// `E = 2 J cos θ` for each real root (tangent roots repeated).
    pub fn energies(&self, hop: f64) -> Vec<f64> {
        let mut e: Vec<f64> = self
            .real_roots
            .iter()
            .map(|t| 2.0 * hop * t.cos())
            .collect();
        e.extend(self.tangent_roots.iter().map(|t| 2.0 * hop * t.cos()));
        e.sort_by(f64::total_cmp);
        e
    }
}

const TANGENT_TOL: f64 = 1e-10;

pub fn theta_roots(size: usize, mu: f64) -> Result<ThetaRoots> {
    if size < 2 {
        return Err(Error::InvalidSize { got: size, min: 2 });
    }
    if !mu.is_finite() || mu < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "mu must be finite and >= 0, got {mu}"
        )));
    }
    let l1 = (size + 1) as f64;
    let f = |t: f64| (l1 * t).sin() - mu * t.sin();
    let df = |t: f64| l1 * (l1 * t).cos() - mu * t.cos();
    let grid = 20 * (size + 1);
    // half-offset grid: the μ = 0 roots nπ/(L+1) never land on a node
    let node = |k: usize| (k as f64 + 0.5) * PI / grid as f64;

    let mut roots = Vec::new();
    let mut tangent = Vec::new();
    for k in 0..grid - 1 {
        let (a, b) = (node(k), node(k + 1));
        let (fa, fb) = (f(a), f(b));
        if fa == 0.0 {
            roots.push(a);
            continue;
        }
        if fa.signum() != fb.signum() && fb != 0.0 {
            roots.push(bisect(&f, a, b));
            continue;
        }
        if df(a).signum() != df(b).signum() {
            let t = bisect(&df, a, b);
            let ft = f(t);
            if ft.abs() <= TANGENT_TOL {
                tangent.push(t);
            } else if ft.signum() != fa.signum() {
                roots.push(bisect(&f, a, t));
                roots.push(bisect(&f, t, b));
            }
        }
    }
    if let Some(&last) = [node(grid - 1)].iter().find(|&&t| f(t) == 0.0) {
        roots.push(last);
    }
    roots.sort_by(f64::total_cmp);
    let n_real = roots.len() + 2 * tangent.len();
    Ok(ThetaRoots {
        size,
        mu,
        real_roots: roots,
        tangent_roots: tangent,
        n_real,
    })
}

fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if b - a <= 1e-15 * m.abs().max(1.0) {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[derive(Clone, Copy, Debug)]
pub struct PolylogOptions {
    /// Number of series terms summed.
    pub cutoff: usize,
    /// Smallest `|arg z|` accepted when the series only converges conditionally.
    pub k_min: f64,
}

impl Default for PolylogOptions {
    fn default() -> Self {
        Self {
            cutoff: 1_000_000,
            k_min: 1e-4,
        }
    }
}

impl PolylogOptions {
    /// Cheaper setting for sampling whole dispersion curves.
    pub fn curve() -> Self {
        Self {
            cutoff: 20_000,
            k_min: 1e-4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Polylog {
    pub value: c64,
    /// Upper bound on the magnitude of the truncated tail.
    pub tail_bound: f64,
}

/// `Li_α(z) = Σ_{n≥1} zⁿ / n^α` on the unit circle.
///
/// For `α > 1` the series is summed directly. Otherwise it is rewritten by
/// repeated summation by parts, `Li_α(z) = (1 − z)^{-p} Σ (∇^p a)_n zⁿ` with
/// `a_n = n^{-α}`, which converges absolutely once `α + p > 1`.
pub fn polylog(alpha: f64, z: c64, opts: PolylogOptions) -> Result<Polylog> {
    if !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "alpha must be finite, got {alpha}"
        )));
    }
    if (z.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "|z| must be 1, got {}",
            z.norm()
        )));
    }
    if opts.cutoff == 0 {
        return Err(Error::InvalidParameter("cutoff must be positive".into()));
    }
    let k = z.arg();
    let n_max = opts.cutoff;
    if alpha > 1.0 {
        let mut sum = c64::new(0.0, 0.0);
        // accumulate from the small terms up
        for n in (1..=n_max).rev() {
            sum += c64::cis(k * n as f64) * (n as f64).powf(-alpha);
        }
        let tail_bound = (n_max as f64).powf(1.0 - alpha) / (alpha - 1.0);
        return Ok(Polylog {
            value: sum,
            tail_bound,
        });
    }
    if k == 0.0 {
        return Err(Error::Divergent { alpha });
    }
    if k.abs() < opts.k_min {
        return Err(Error::InvalidParameter(format!(
            "|arg z| = {:.3e} is below k_min = {:.3e}",
            k.abs(),
            opts.k_min
        )));
    }
    let p = (1.0 - alpha).floor() as usize + 2;
    let binom: Vec<f64> = (0..=p)
        .scan(1.0, |c, i| {
            let out = *c;
            *c = *c * (p - i) as f64 / (i + 1) as f64;
            Some(out)
        })
        .collect();
    let a = |n: i64| if n <= 0 { 0.0 } else { (n as f64).powf(-alpha) };
    let diff = |n: i64| -> f64 {
        (0..=p)
            .map(|i| if i % 2 == 0 { binom[i] } else { -binom[i] } * a(n - i as i64))
            .sum()
    };
    let mut sum = c64::new(0.0, 0.0);
    for n in (1..=n_max as i64).rev() {
        sum += c64::cis(k * n as f64) * diff(n);
    }
    let one_minus = 1.0 - z;
    let denom = one_minus.powi(p as i32);
    // |∇^p a_n| ≤ |(α)_p| (n − p)^{-α-p}
    let rising: f64 = (0..p).map(|i| alpha + i as f64).product::<f64>().abs();
    let rest = (n_max as f64 - p as f64).max(1.0);
    let tail = rising * rest.powf(1.0 - alpha - p as f64) / (alpha + p as f64 - 1.0);
    Ok(Polylog {
        value: sum / denom,
        tail_bound: tail / denom.norm(),
    })
}

/// Infinite-chain dispersion `E(k) = J_L Li_α(e^{ik}) + J_R Li_α(e^{-ik})`.
pub fn bulk_dispersion(p: &ModelParams, k: f64, opts: PolylogOptions) -> Result<c64> {
    let z = c64::cis(k);
    match p.decay {
        Decay::NearestNeighbor => Ok(p.j_left * z + p.j_right * z.conj()),
        Decay::Power(alpha) => {
            let li = polylog(alpha, z, opts)?.value;
            Ok(p.j_left * li + p.j_right * li.conj())
        }
    }
}

/// `E(k)` on `n_k` points `k_j = 2π (j + ½) / n_k`, which avoid the `k = 0`
/// singularity for `α ≤ 1`.
pub fn dispersion_curve(
    p: &ModelParams,
    n_k: usize,
    opts: PolylogOptions,
) -> Result<Vec<(f64, c64)>> {
    if n_k < 3 {
        return Err(Error::InvalidParameter(
            "need at least 3 momentum samples".into(),
        ));
    }
    (0..n_k)
        .map(|j| {
            let k = 2.0 * PI * (j as f64 + 0.5) / n_k as f64;
            bulk_dispersion(p, k, opts).map(|e| (k, e))
        })
        .collect()
}

/// Winding of `E(k) − E_base` as `k` sweeps the Brillouin zone.
///
/// Sign convention: counted positive clockwise, so a chain whose leftward
/// hops dominate (`|J_L| > |J_R|`, skin modes on the left edge) winds `−1`.
/// `base` defaults to the centroid of the sampled curve.
pub fn winding_number(
    p: &ModelParams,
    base: Option<c64>,
    n_k: usize,
    opts: PolylogOptions,
) -> Result<i64> {
    let curve = dispersion_curve(p, n_k, opts)?;
    let base =
        base.unwrap_or_else(|| curve.iter().map(|&(_, e)| e).sum::<c64>() / curve.len() as f64);
    let scale = curve
        .iter()
        .map(|&(_, e)| e.norm())
        .fold(0.0, f64::max)
        .max(1.0);
    let dist = (0..curve.len())
        .map(|j| segment_distance(base, curve[j].1, curve[(j + 1) % curve.len()].1))
        .fold(f64::INFINITY, f64::min);
    if dist <= 1e-9 * scale {
        return Err(Error::WindingIllDefined { distance: dist });
    }
    let mut total = 0.0;
    for j in 0..curve.len() {
        let a = curve[j].1 - base;
        let b = curve[(j + 1) % curve.len()].1 - base;
        total += (b / a).arg();
    }
    Ok((-total / (2.0 * PI)).round() as i64)
}

fn segment_distance(p: c64, a: c64, b: c64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (p - (a + d * t)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_hn, build_simplified, SimplifiedParams};

    fn re(x: f64) -> c64 {
        c64::new(x, 0.0)
    }

    #[test]
    fn identity_spectrum() {
        let h = DenseMatrix::from_fn(4, |i, j| if i == j { re(1.0) } else { re(0.0) });
        let s = eig_dense(&h, None).unwrap();
        assert!(s.eigenvalues.iter().all(|e| (*e - 1.0).norm() < 1e-14));
        assert_eq!(s.complex_count(), 0);
    }

    #[test]
    fn two_site_chain() {
        let p = ModelParams::new(re(2.0), re(0.5), Decay::NearestNeighbor, 2).unwrap();
        let s = eig_dense(&build_hn(&p).unwrap(), None).unwrap();
        assert!((s.eigenvalues[0] - re(-1.0)).norm() < 1e-14);
        assert!((s.eigenvalues[1] - re(1.0)).norm() < 1e-14);
        for k in 0..2 {
            let v = s.eigenvector(k);
            let n: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            assert!((n - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn three_site_hn_via_gauge_map() {
        // 2√(J_L J_R) cos(nπ/(L+1)) with √(J_L J_R) = 1
        let p = ModelParams::from_g(0.25, Decay::NearestNeighbor, 3).unwrap();
        let s = eig_dense(&build_hn(&p).unwrap(), None).unwrap();
        let want = [-(2f64.sqrt()), 0.0, 2f64.sqrt()];
        for (e, w) in s.eigenvalues.iter().zip(want) {
            assert!((e - re(w)).norm() < 1e-13, "{e} vs {w}");
        }
    }

    #[test]
    fn all_to_all_reciprocal() {
        let p = ModelParams::new(re(1.0), re(1.0), Decay::Power(0.0), 3).unwrap();
        let s = eig_dense(&build_full(&p).unwrap(), None).unwrap();
        let want = [-1.0, -1.0, 2.0];
        for (e, w) in s.eigenvalues.iter().zip(want) {
            assert!((e - re(w)).norm() < 1e-13);
        }
    }

    #[test]
    fn analytic_reciprocal_modes() {
        let p = ModelParams::new(re(0.8), re(0.8), Decay::Power(0.0), 6).unwrap();
        let a = analytic_alpha0_modes(&p, None).unwrap();
        let sym = a.symmetric_mode.unwrap();
        for (k, e) in a.spectrum.eigenvalues.iter().enumerate() {
            let want = if k == sym { 0.8 * 5.0 } else { -0.8 };
            assert!((e - re(want)).norm() < 1e-12, "mode {k}: {e}");
        }
    }

    #[test]
    fn analytic_modes_need_alpha_zero() {
        let p = ModelParams::from_g(0.2, Decay::Power(1.0), 6).unwrap();
        assert!(analytic_alpha0_modes(&p, None).is_err());
    }

    #[test]
    fn analytic_modes_solve_the_eigenproblem() {
        let p = ModelParams::from_g(0.25, Decay::Power(0.0), 12).unwrap();
        let h = build_full(&p).unwrap();
        let a = analytic_alpha0_modes(&p, None).unwrap();
        assert!(a.symmetric_mode.is_none());
        for k in 0..12 {
            let r = residual(&h, a.spectrum.eigenvalues[k], &a.spectrum.eigenvector(k));
            assert!(r < 1e-12, "mode {k} residual {r}");
        }
    }

    #[test]
    fn alpha_zero_complex_fraction() {
        for l in [9usize, 10, 11, 12] {
            let p = ModelParams::from_g(0.25, Decay::Power(0.0), l).unwrap();
            let s = eig_dense(&build_full(&p).unwrap(), None).unwrap();
            let real = if l % 2 == 0 { 2.0 } else { 1.0 };
            assert!(
                (complex_fraction(&s) - (1.0 - real / l as f64)).abs() < 1e-12,
                "L={l}"
            );
        }
    }

    #[test]
    fn critical_length_prediction() {
        assert_eq!(predict_critical_length(0.0, 0.25).unwrap(), Some(2.0));
        assert_eq!(predict_critical_length(2.0, 0.0).unwrap(), None);
        let lc = predict_critical_length(2.0, 0.25).unwrap().unwrap();
        // bisection on the same equation, solved independently
        let f = |l: f64| 0.25 * (l - 2.0) - 2.0 * (l - 1.0).ln();
        assert!(f(lc).abs() < 1e-8);
        assert!((lc - 28.519).abs() < 1e-3);
        let mut prev = 0.0;
        for a in [0.5, 1.0, 2.0, 3.0, 4.0] {
            let l = predict_critical_length(a, 0.25).unwrap().unwrap();
            assert!(l > prev);
            prev = l;
        }
    }

    #[test]
    fn theta_roots_open_chain() {
        let t = theta_roots(7, 0.0).unwrap();
        assert_eq!(t.n_real, 7);
        for (n, r) in t.real_roots.iter().enumerate() {
            assert!((r - (n + 1) as f64 * PI / 8.0).abs() < 1e-12);
        }
    }

    #[test]
    fn theta_roots_at_the_transition() {
        for l in 4..=12usize {
            let t = theta_roots(l, 1.0).unwrap();
            assert_eq!(t.n_real, l, "L={l}: {:?}", t);
            // every root belongs to one of the two families
            for &r in t.real_roots.iter().chain(&t.tangent_roots) {
                let a = (r * l as f64 / (2.0 * PI)).fract();
                let b = ((r * (l + 2) as f64 / PI) - 1.0) / 2.0;
                let on_a = a < 1e-9 || a > 1.0 - 1e-9;
                let on_b = (b - b.round()).abs() < 1e-9;
                assert!(on_a || on_b, "L={l}, root {r}");
            }
        }
        // L = 4 has a double root at π/2
        let t = theta_roots(4, 1.0).unwrap();
        assert_eq!(t.tangent_roots.len(), 1);
        assert!((t.tangent_roots[0] - PI / 2.0).abs() < 1e-9);
        assert!(theta_roots(8, 10.0).unwrap().n_real < 8);
    }

    #[test]
    fn theta_roots_match_simplified_matrix() {
        let sp = SimplifiedParams::new(1.0, 9, 0.6).unwrap();
        let s = eig_dense(&build_simplified(&sp).unwrap(), None).unwrap();
        let t = theta_roots(9, 0.6).unwrap();
        assert_eq!(s.complex_count(), 0);
        for (a, b) in t.energies(1.0).iter().zip(&s.eigenvalues) {
            assert!((a - b.re).abs() < 1e-9);
        }
    }

    #[test]
    fn theta_root_count_law() {
        let mut exceptions = Vec::new();
        for m in 1..=20 {
            let mu = m as f64 / 10.0;
            for l in 4..=40 {
                let t = theta_roots(l, mu).unwrap();
                if (t.n_real == l) != (mu <= 1.0) {
                    exceptions.push((l, m));
                }
            }
        }
        // just above the transition a short chain can still be fully real
        assert_eq!(exceptions, vec![(6, 11)]);
        let sp = SimplifiedParams::new(1.0, 6, 1.1).unwrap();
        let s = eig_dense(&build_simplified(&sp).unwrap(), None).unwrap();
        assert_eq!(s.complex_count(), 0);
    }

    #[test]
    fn polylog_classic_values() {
        let li = polylog(2.0, re(-1.0), PolylogOptions::default()).unwrap();
        assert!((li.value.re + PI * PI / 12.0).abs() < 1e-10);
        assert!(li.value.im.abs() < 1e-10);
        assert!(li.tail_bound <= 1.0000001e-6);
        // Li_1(z) = −ln(1 − z)
        let z = c64::cis(1.1);
        let li = polylog(1.0, z, PolylogOptions::default()).unwrap();
        assert!((li.value + (1.0 - z).ln()).norm() < 1e-9, "{:?}", li);
        // Li_0(z) = z / (1 − z)
        let z = c64::cis(-0.3);
        let li = polylog(
            0.0,
            z,
            PolylogOptions {
                cutoff: 50,
                k_min: 1e-4,
            },
        )
        .unwrap();
        assert!((li.value - z / (1.0 - z)).norm() < 1e-12);
        assert_eq!(li.tail_bound, 0.0);
        // Li_{-1}(z) = z / (1 − z)²
        let z = c64::cis(2.0);
        let li = polylog(-1.0, z, PolylogOptions::default()).unwrap();
        assert!((li.value - z / ((1.0 - z) * (1.0 - z))).norm() < 1e-9);
    }

    #[test]
    fn polylog_rejects_divergent_and_off_circle() {
        assert!(matches!(
            polylog(1.0, re(1.0), PolylogOptions::default()),
            Err(Error::Divergent { .. })
        ));
        assert!(polylog(0.5, c64::cis(1e-6), PolylogOptions::default()).is_err());
        assert!(polylog(2.0, re(0.5), PolylogOptions::default()).is_err());
        // α > 1 converges at z = 1: ζ(3)
        let z3 = polylog(3.0, re(1.0), PolylogOptions::default()).unwrap();
        assert!((z3.value.re - 1.2020569031595942).abs() < z3.tail_bound + 1e-12);
    }

    #[test]
    fn polylog_conjugation() {
        let o = PolylogOptions {
            cutoff: 5000,
            k_min: 1e-4,
        };
        for alpha in [0.3, 1.0, 2.5] {
            let z = c64::cis(0.7);
            let a = polylog(alpha, z, o).unwrap().value;
            let b = polylog(alpha, z.conj(), o).unwrap().value;
            assert!((a - b.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn dispersion_limits() {
        let p = ModelParams::from_g(0.3, Decay::NearestNeighbor, 10).unwrap();
        let e = bulk_dispersion(&p, 0.4, PolylogOptions::default()).unwrap();
        let want = p.j_left * c64::cis(0.4) + p.j_right * c64::cis(-0.4);
        assert!((e - want).norm() < 1e-15);
        let p = ModelParams::from_g(0.3, Decay::Power(2.0), 10).unwrap();
        let e = bulk_dispersion(&p, PI, PolylogOptions::default()).unwrap();
        let want = -(p.j_left + p.j_right) * PI * PI / 12.0;
        assert!((e - want).norm() < 1e-9);
    }

    #[test]
    fn winding_signs() {
        let o = PolylogOptions::curve();
        let p = ModelParams::from_g(0.25, Decay::NearestNeighbor, 10).unwrap();
        assert_eq!(winding_number(&p, None, 4096, o).unwrap(), -1);
        let p = ModelParams::from_g(-0.25, Decay::NearestNeighbor, 10).unwrap();
        assert_eq!(winding_number(&p, None, 4096, o).unwrap(), 1);
        let p = ModelParams::from_g(0.25, Decay::Power(2.0), 10).unwrap();
        assert_eq!(winding_number(&p, Some(re(0.0)), 1024, o).unwrap(), -1);
        assert_eq!(winding_number(&p, Some(re(50.0)), 1024, o).unwrap(), 0);
        // reciprocal: the curve is a segment of the real axis
        let p = ModelParams::new(re(1.0), re(1.0), Decay::Power(2.0), 10).unwrap();
        assert_eq!(
            winding_number(&p, Some(c64::new(0.0, 1.0)), 1024, o).unwrap(),
            0
        );
        assert!(matches!(
            winding_number(&p, Some(re(0.0)), 1024, o),
            Err(Error::WindingIllDefined { .. })
        ));
    }
}
