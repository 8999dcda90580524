//! No-jump evolution of free-fermion Slater determinants, steady states, and
//! a brute-force many-body oracle for small chains.

use std::io::Write;

use faer::{c64, Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::entanglement::left_block_entropy;
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::DenseMatrix;
use crate::spectral::eig_dense;

/// Overlap condition number beyond which the orbitals are considered degenerate.
const RANK_LOSS_COND: f64 = 1e12;
/// Adaptive stepping halves the step once a single step conditions this badly.
const REFINE_COND: f64 = 1e8;
/// Eigenvector condition number up to which `e^{-iH dt}` is built spectrally.
const SPECTRAL_COND: f64 = 1e6;

/// `N` occupied orbitals (orthonormal columns of an `L × N` matrix).
#[derive(Clone, Debug)]
pub struct OrbitalState {
    pub orbitals: Mat<c64>,
    pub time: f64,
}

impl OrbitalState {
    /// Orthonormalizes arbitrary linearly independent orbitals.
    pub fn from_orbitals(orbitals: MatRef<'_, c64>, time: f64) -> Result<Self> {
        if orbitals.ncols() == 0 || orbitals.ncols() > orbitals.nrows() {
            return Err(Error::InvalidParameter(format!(
                "need 1..=L orbitals, got {} for L = {}",
                orbitals.ncols(),
                orbitals.nrows()
            )));
        }
        let (q, cond) = linalg::orthonormalize(orbitals);
        if !(cond <= RANK_LOSS_COND) {
            return Err(Error::RankLoss { condition: cond });
        }
        Ok(Self { orbitals: q, time })
    }

    pub fn size(&self) -> usize {
        self.orbitals.nrows()
    }

    pub fn particles(&self) -> usize {
        self.orbitals.ncols()
    }

    /// `max |Q†Q − 1|`.
    pub fn gram_deviation(&self) -> f64 {
        let g = self.orbitals.adjoint() * &self.orbitals;
        let n = self.particles();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - want).norm());
            }
        }
        worst
    }
}

/// Charge-density wave with sites `2, 4, …, L` occupied.
pub fn init_cdw(size: usize) -> Result<OrbitalState> {
    if size < 2 || size % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "CDW needs an even size >= 2, got {size}"
        )));
    }
    let orbitals = Mat::from_fn(size, size / 2, |i, k| {
        if i == 2 * k + 1 {
            c64::new(1.0, 0.0)
        } else {
            c64::new(0.0, 0.0)
        }
    });
    Ok(OrbitalState {
        orbitals,
        time: 0.0,
    })
}

/// `C_ij = ⟨c_i† c_j⟩`.
#[derive(Clone, Debug)]
pub struct CorrelationMatrix(pub Mat<c64>);

impl CorrelationMatrix {
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> c64 {
        self.0[(i, j)]
    }

    pub fn trace(&self) -> c64 {
        (0..self.dim()).map(|i| self.0[(i, i)]).sum()
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..=i {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `max |C² − C|`.
    pub fn idempotency_deviation(&self) -> f64 {
        let c2 = &self.0 * &self.0;
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((c2[(i, j)] - self.0[(i, j)]).norm());
            }
        }
        worst
    }

    /// Row-major dump, each entry as a `re,im` pair of columns.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.dim();
        let header: Vec<String> = (1..=n)
            .flat_map(|j| [format!("c{j}_re"), format!("c{j}_im")])
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for i in 0..n {
            let row: Vec<String> = (0..n)
                .flat_map(|j| {
                    let z = self.0[(i, j)];
                    [format!("{:.17e}", z.re), format!("{:.17e}", z.im)]
                })
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// `C = (Q Q†)ᵀ`.
pub fn correlation_from_orbitals(state: &OrbitalState) -> CorrelationMatrix {
    let p = &state.orbitals * state.orbitals.adjoint();
    CorrelationMatrix(p.transpose().to_owned())
}

/// `0.05 / ‖H‖_F`.
pub fn default_dt(h: &DenseMatrix) -> f64 {
    0.05 / h.frobenius_norm().max(f64::MIN_POSITIVE)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PropagatorKind {
    Spectral,
    Pade,
}

/// `e^{-iH dt}` for a fixed step.
#[derive(Clone, Debug)]
pub struct Propagator {
    pub matrix: Mat<c64>,
    pub dt: f64,
    pub kind: PropagatorKind,
}

impl Propagator {
    /// Uses the eigendecomposition when the eigenvector matrix is well
    /// conditioned, scaling and squaring otherwise.
    pub fn new(h: &DenseMatrix, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "dt must be positive, got {dt}"
            )));
        }
        let n = h.dim();
        if let Ok(raw) = linalg::eig(h.as_ref()) {
            let v = &raw.vectors;
            let vinv = linalg::inverse(v.as_ref());
            let cond = linalg::one_norm(v.as_ref()) * linalg::one_norm(vinv.as_ref());
            if cond.is_finite() && cond <= SPECTRAL_COND {
                let phase: Vec<c64> = raw
                    .values
                    .iter()
                    .map(|&e| (c64::new(0.0, -dt) * e).exp())
                    .collect();
                let vd = Mat::from_fn(n, n, |i, k| v[(i, k)] * phase[k]);
                return Ok(Self {
                    matrix: &vd * &vinv,
                    dt,
                    kind: PropagatorKind::Spectral,
                });
            }
        }
        let a = Mat::from_fn(n, n, |i, j| c64::new(0.0, -dt) * h.as_ref()[(i, j)]);
        Ok(Self {
            matrix: linalg::expm(a.as_ref()),
            dt,
            kind: PropagatorKind::Pade,
        })
    }

    /// One normalized step; returns the new state and the step's condition estimate.
    pub fn step(&self, state: &OrbitalState) -> (OrbitalState, f64) {
        let raw = &self.matrix * &state.orbitals;
        let (q, cond) = linalg::orthonormalize(raw.as_ref());
        (
            OrbitalState {
                orbitals: q,
                time: state.time + self.dt,
            },
            cond,
        )
    }

    pub fn advance(&self, state: &OrbitalState, steps: usize) -> Result<OrbitalState> {
        if state.size() != self.matrix.nrows() {
            return Err(Error::InvalidParameter(
                "state and Hamiltonian sizes differ".into(),
            ));
        }
        let mut s = state.clone();
        for _ in 0..steps {
            let (next, cond) = self.step(&s);
            if !(cond <= RANK_LOSS_COND) {
                return Err(Error::RankLoss { condition: cond });
            }
            s = next;
        }
        Ok(s)
    }
}

/// `steps` normalized applications of `e^{-iH dt}`.
pub fn evolve(
    state: &OrbitalState,
    h: &DenseMatrix,
    dt: f64,
    steps: usize,
) -> Result<OrbitalState> {
    Propagator::new(h, dt)?.advance(state, steps)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionOptions {
    /// Minimum separation of the `N`-th and `(N+1)`-th largest `Im E`.
    pub degeneracy_tol: f64,
    /// Resolve a tie at the gap by ascending `Re E` instead of failing.
    pub allow_ties: bool,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        Self {
            degeneracy_tol: 1e-10,
            allow_ties: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SteadyProjection {
    pub state: OrbitalState,
    /// `Im E_N − Im E_{N+1}` (infinite when all modes are occupied).
    pub gap: f64,
    pub tie_broken: bool,
    pub energies: Vec<c64>,
}

/// Slater determinant of the `N` right eigenvectors with the largest `Im E`.
pub fn steady_state_projection(
    h: &DenseMatrix,
    n: usize,
    opts: ProjectionOptions,
) -> Result<SteadyProjection> {
    let l = h.dim();
    if n == 0 || n > l {
        return Err(Error::InvalidParameter(format!(
            "particle number {n} outside 1..={l}"
        )));
    }
    let spec = eig_dense(h, None)?;
    let mut order: Vec<usize> = (0..l).collect();
    order.sort_by(|&a, &b| {
        let (ea, eb) = (spec.eigenvalues[a], spec.eigenvalues[b]);
        eb.im.total_cmp(&ea.im).then(ea.re.total_cmp(&eb.re))
    });
    let gap = if n < l {
        spec.eigenvalues[order[n - 1]].im - spec.eigenvalues[order[n]].im
    } else {
        f64::INFINITY
    };
    let tie = !(gap > opts.degeneracy_tol);
    if tie && !opts.allow_ties {
        return Err(Error::AmbiguousSteadyState { gap });
    }
    let chosen = &order[..n];
    let v = Mat::from_fn(l, n, |i, k| spec.eigenvectors[(i, chosen[k])]);
    let state = OrbitalState::from_orbitals(v.as_ref(), f64::INFINITY)?;
    Ok(SteadyProjection {
        state,
        gap,
        tie_broken: tie,
        energies: chosen.iter().map(|&k| spec.eigenvalues[k]).collect(),
    })
}

/// Long-time evolution until the half-chain entropy stops changing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelaxOptions {
    pub dt: f64,
    /// Largest per-step entropy change still counted as stationary.
    pub tol: f64,
    /// Consecutive stationary steps required.
    pub window: usize,
    pub max_time: f64,
}

impl RelaxOptions {
    pub fn for_matrix(h: &DenseMatrix) -> Self {
        Self {
            dt: default_dt(h),
            tol: 1e-9,
            window: 50,
            max_time: 1e4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Relaxed {
    pub state: OrbitalState,
    pub half_entropy: f64,
    pub converged: bool,
    pub steps: usize,
    /// Step in use at the end (halved whenever a step conditions badly).
    pub dt: f64,
}

pub fn relax(h: &DenseMatrix, init: &OrbitalState, opts: RelaxOptions) -> Result<Relaxed> {
    let half = init.size() / 2;
    let mut stepper = AdaptiveStepper::new(h, opts.dt)?;
    let mut state = init.clone();
    let mut s_prev = left_block_entropy(&state, half)?;
    let mut quiet = 0;
    let mut steps = 0;
    while state.time < opts.max_time {
        state = stepper.step(&state)?;
        steps += 1;
        let s = left_block_entropy(&state, half)?;
        quiet = if (s - s_prev).abs() < opts.tol {
            quiet + 1
        } else {
            0
        };
        s_prev = s;
        if quiet >= opts.window {
            return Ok(Relaxed {
                state,
                half_entropy: s,
                converged: true,
                steps,
                dt: stepper.dt(),
            });
        }
    }
    Ok(Relaxed {
        state,
        half_entropy: s_prev,
        converged: false,
        steps,
        dt: stepper.dt(),
    })
}

/// Sampling schedule for time-averaged entropies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AverageOptions {
    pub dt: f64,
    pub burn_in: f64,
    pub duration: f64,
}

impl Default for AverageOptions {
    fn default() -> Self {
        Self {
            dt: 0.5,
            burn_in: 500.0,
            duration: 4000.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeAverage {
    pub cuts: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub samples: usize,
}

/// Time-weighted mean and spread of left-block entropies after a burn-in.
pub fn time_average(
    h: &DenseMatrix,
    init: &OrbitalState,
    cuts: &[usize],
    opts: AverageOptions,
) -> Result<TimeAverage> {
    if !(opts.burn_in >= 0.0) || !(opts.duration > 0.0) {
        return Err(Error::InvalidParameter(
            "averaging window must be positive".into(),
        ));
    }
    let mut stepper = AdaptiveStepper::new(h, opts.dt)?;
    let mut state = init.clone();
    let start = init.time + opts.burn_in;
    let stop = start + opts.duration;
    while state.time < start {
        state = stepper.step(&state)?;
    }
    let mut sum = vec![0.0; cuts.len()];
    let mut sum2 = vec![0.0; cuts.len()];
    let mut weight = 0.0;
    let mut samples = 0;
    while state.time < stop {
        let before = state.time;
        state = stepper.step(&state)?;
        let w = state.time - before;
        for (k, &l) in cuts.iter().enumerate() {
            let s = left_block_entropy(&state, l)?;
            sum[k] += w * s;
            sum2[k] += w * s * s;
        }
        weight += w;
        samples += 1;
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / weight).collect();
    let std = sum2
        .iter()
        .zip(&mean)
        .map(|(s2, m)| (s2 / weight - m * m).max(0.0).sqrt())
        .collect();
    Ok(TimeAverage {
        cuts: cuts.to_vec(),
        mean,
        std,
        samples,
    })
}

struct AdaptiveStepper<'a> {
    h: &'a DenseMatrix,
    prop: Propagator,
    min_dt: f64,
}

impl<'a> AdaptiveStepper<'a> {
    fn new(h: &'a DenseMatrix, dt: f64) -> Result<Self> {
        let min_dt = (dt * 1e-3).min(default_dt(h));
        Ok(Self {
            h,
            prop: Propagator::new(h, dt)?,
            min_dt,
        })
    }

    fn dt(&self) -> f64 {
        self.prop.dt
    }

    fn step(&mut self, s: &OrbitalState) -> Result<OrbitalState> {
        loop {
            let (next, cond) = self.prop.step(s);
            if cond <= REFINE_COND {
                return Ok(next);
            }
            let half = 0.5 * self.prop.dt;
            if half < self.min_dt {
                if cond <= RANK_LOSS_COND {
                    return Ok(next);
                }
                return Err(Error::RankLoss { condition: cond });
            }
            self.prop = Propagator::new(self.h, half)?;
        }
    }
}

/// Many-body amplitudes over the fixed-`N` occupation basis. Bit `i` of a
/// basis label is site `i + 1`; operators are ordered by site.
#[derive(Clone, Debug)]
pub struct FockState {
    pub size: usize,
    pub particles: usize,
    pub basis: Vec<u32>,
    pub amplitudes: Vec<c64>,
}

/// Largest chain handled by the oracle.
pub const FOCK_MAX_SIZE: usize = 12;

fn fock_basis(size: usize, particles: usize) -> Result<Vec<u32>> {
    if size == 0 || size > FOCK_MAX_SIZE {
        return Err(Error::InvalidParameter(format!(
            "Fock oracle handles 1..={FOCK_MAX_SIZE} sites, got {size}"
        )));
    }
    if particles > size {
        return Err(Error::InvalidParameter(format!(
            "{particles} particles on {size} sites"
        )));
    }
    Ok((0u32..1 << size)
        .filter(|s| s.count_ones() as usize == particles)
        .collect())
}

impl FockState {
    /// Product state with the given 1-based sites occupied.
    pub fn occupied(size: usize, sites: &[usize]) -> Result<Self> {
        let mut label = 0u32;
        for &s in sites {
            if s == 0 || s > size || label & (1 << (s - 1)) != 0 {
                return Err(Error::InvalidParameter(format!("bad occupied site {s}")));
            }
            label |= 1 << (s - 1);
        }
        let basis = fock_basis(size, sites.len())?;
        let amplitudes = basis
            .iter()
            .map(|&b| {
                if b == label {
                    c64::new(1.0, 0.0)
                } else {
                    c64::new(0.0, 0.0)
                }
            })
            .collect();
        Ok(Self {
            size,
            particles: sites.len(),
            basis,
            amplitudes,
        })
    }

    pub fn cdw(size: usize) -> Result<Self> {
        if size % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "CDW needs an even size, got {size}"
            )));
        }
        Self::occupied(size, &(1..=size / 2).map(|k| 2 * k).collect::<Vec<_>>())
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    fn normalize(&mut self) {
        let n = self.norm();
        self.amplitudes.iter_mut().for_each(|z| *z /= n);
    }

    /// Entanglement entropy of sites `1..=l` from the Schmidt spectrum.
    pub fn left_block_entropy(&self, l: usize) -> Result<f64> {
        if l == 0 || l >= self.size {
            return Err(Error::InvalidParameter(format!(
                "cut {l} outside 1..{}",
                self.size
            )));
        }
        let mask = (1u32 << l) - 1;
        let dim = 1usize << l;
        let rest = 1usize << (self.size - l);
        let mut m = Mat::<c64>::zeros(dim, rest);
        for (&b, &a) in self.basis.iter().zip(&self.amplitudes) {
            m[((b & mask) as usize, (b >> l) as usize)] = a;
        }
        let sv = m
            .singular_values()
            .map_err(|e| Error::Eigen(format!("{e:?}")))?;
        let norm: f64 = sv.iter().map(|s| s * s).sum();
        Ok(sv
            .iter()
            .map(|s| s * s / norm)
            .filter(|&p| p > 0.0)
            .map(|p| -p * p.ln())
            .sum())
    }
}

/// `Σ_ij H_ij c_i† c_j` on the fixed-`N` basis.
pub fn fock_hamiltonian(h: &DenseMatrix, particles: usize) -> Result<(Vec<u32>, Mat<c64>)> {
    let size = h.dim();
    let basis = fock_basis(size, particles)?;
    let index = |label: u32| basis.binary_search(&label).ok();
    let mut m = Mat::<c64>::zeros(basis.len(), basis.len());
    let hm = h.as_ref();
    for (col, &s) in basis.iter().enumerate() {
        for j in 0..size {
            if s & (1 << j) == 0 {
                continue;
            }
            let without = s & !(1 << j);
            let sign_j = parity(without & ((1 << j) - 1));
            for i in 0..size {
                if without & (1 << i) != 0 {
                    continue;
                }
                let target = without | (1 << i);
                let sign_i = parity(without & ((1 << i) - 1));
                let row = index(target).expect("particle number is conserved");
                let sign = if sign_i ^ sign_j { -1.0 } else { 1.0 };
                m[(row, col)] += hm[(i, j)] * sign;
            }
        }
    }
    Ok((basis, m))
}

fn parity(x: u32) -> bool {
    x.count_ones() % 2 == 1
}

/// Dense-exponential evolution of the many-body state, renormalized each step.
pub fn fock_oracle_evolve(
    h: &DenseMatrix,
    psi0: &FockState,
    dt: f64,
    steps: usize,
) -> Result<FockState> {
    if h.dim() != psi0.size {
        return Err(Error::InvalidParameter(
            "state and Hamiltonian sizes differ".into(),
        ));
    }
    let (_, hm) = fock_hamiltonian(h, psi0.particles)?;
    let d = hm.nrows();
    let a = Mat::from_fn(d, d, |i, j| c64::new(0.0, -dt) * hm[(i, j)]);
    let u = linalg::expm(a.as_ref());
    let mut psi = psi0.clone();
    for _ in 0..steps {
        psi.amplitudes = (0..d)
            .map(|i| (0..d).map(|j| u[(i, j)] * psi.amplitudes[j]).sum())
            .collect();
        psi.normalize();
    }
    Ok(psi)
}

/// Many-body eigenvector with the largest `Im E`; fails when that is not unique.
pub fn fock_steady_state(
    h: &DenseMatrix,
    particles: usize,
    degeneracy_tol: f64,
) -> Result<FockState> {
    let (basis, hm) = fock_hamiltonian(h, particles)?;
    let raw = linalg::eig(hm.as_ref())?;
    let mut order: Vec<usize> = (0..raw.values.len()).collect();
    order.sort_by(|&a, &b| raw.values[b].im.total_cmp(&raw.values[a].im));
    if order.len() > 1 {
        let gap = raw.values[order[0]].im - raw.values[order[1]].im;
        if !(gap > degeneracy_tol) {
            return Err(Error::AmbiguousSteadyState { gap });
        }
    }
    let k = order[0];
    let mut psi = FockState {
        size: h.dim(),
        particles,
        amplitudes: (0..basis.len()).map(|i| raw.vectors[(i, k)]).collect(),
        basis,
    };
    psi.normalize();
    Ok(psi)
}
